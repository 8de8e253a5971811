//! A₂ weights on the dyadic lattice and their characteristic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{build_average_tree, AverageTree, DyadicInterval, StepFunction};
use crate::error::{domain, input, Result};

/// A positive step function together with its reciprocal and both average trees.
///
/// `winv` is the pointwise reciprocal of `w` on the lattice, so `(w, w⁻¹)` is an exact
/// pair at grid level and `<w>_I <w⁻¹>_I ≥ 1` holds on every interval.
#[derive(Debug, Clone)]
pub struct Weight {
    w: StepFunction,
    winv: StepFunction,
    tree_w: AverageTree,
    tree_winv: AverageTree,
    q: f64,
}

/// Where the dyadic A₂ supremum is attained, and the maximum on each level.
#[derive(Debug, Clone, PartialEq)]
pub struct A2Report {
    pub global_q: f64,
    pub argmax_interval: DyadicInterval,
    pub per_level_max: Vec<f64>,
}

impl Weight {
    pub fn new(w: StepFunction) -> Result<Self> {
        if let Some(k) = w.cells().iter().position(|&c| !(c > 0.0)) {
            return input(format!("weight must be strictly positive; cell {k} is {}", w.cells()[k]));
        }
        let winv = w.map(|c| 1.0 / c)?;
        if let Some(k) = winv.cells().iter().position(|c| !c.is_finite()) {
            return input(format!("reciprocal of cell {k} overflows"));
        }
        let tree_w = build_average_tree(&w);
        let tree_winv = build_average_tree(&winv);
        let mut weight = Self {
            w,
            winv,
            tree_w,
            tree_winv,
            q: f64::NAN,
        };
        weight.q = a2_characteristic(&weight).global_q;
        Ok(weight)
    }

    /// The unit weight `w ≡ 1`.
    pub fn unit(depth: u32) -> Result<Self> {
        Self::new(StepFunction::constant(depth, 1.0)?)
    }

    pub fn depth(&self) -> u32 {
        self.w.depth()
    }

    pub fn w(&self) -> &StepFunction {
        &self.w
    }

    pub fn winv(&self) -> &StepFunction {
        &self.winv
    }

    pub fn tree_w(&self) -> &AverageTree {
        &self.tree_w
    }

    pub fn tree_winv(&self) -> &AverageTree {
        &self.tree_winv
    }

    /// Cached dyadic A₂ characteristic `[w]_{A₂}`.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// The weight with the roles of `w` and `w⁻¹` exchanged.
    pub fn swapped(&self) -> Result<Self> {
        Self::new(self.winv.clone())
    }

    /// `w(E)` for the set where `indicator` is nonzero, or more generally `∫ f w`.
    pub fn measure_of(&self, f: &StepFunction) -> Result<f64> {
        Ok(f.mul(&self.w)?.integral())
    }
}

/// `max_I <w>_I <w⁻¹>_I` over every dyadic interval of the lattice, leaves included.
pub fn a2_characteristic(weight: &Weight) -> A2Report {
    let depth = weight.depth();
    let mut per_level_max = Vec::with_capacity(depth as usize + 1);
    let mut best = (f64::NEG_INFINITY, DyadicInterval::ROOT);
    for level in 0..=depth {
        let uw = weight.tree_w.level(level);
        let vw = weight.tree_winv.level(level);
        let mut level_max = f64::NEG_INFINITY;
        for (k, (u, v)) in uw.iter().zip(vw).enumerate() {
            let p = u * v;
            if p > level_max {
                level_max = p;
            }
            if p > best.0 {
                best = (p, DyadicInterval::new(level, k as u32).expect("index in range"));
            }
        }
        per_level_max.push(level_max);
    }
    A2Report {
        global_q: best.0,
        argmax_interval: best.1,
        per_level_max,
    }
}

/// Cell average of `x^alpha` over `(a, b]`, stable for `alpha` near `-1`.
fn power_cell_average(alpha: f64, a: f64, b: f64) -> f64 {
    let s = alpha + 1.0;
    if a == 0.0 {
        return b.powf(alpha) / s;
    }
    a.powf(s) * (s * (b / a).ln()).exp_m1() / (s * (b - a))
}

/// Discretised power weight `x^alpha`: each cell holds the exact average of `x^alpha` over it.
pub fn make_power_weight(alpha: f64, depth: u32) -> Result<Weight> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return domain(format!("power weight exponent must lie in (-1, 1), got {alpha}"));
    }
    let h = (-(depth as f64)).exp2();
    let w = StepFunction::from_fn(depth, |k| {
        if alpha == 0.0 {
            1.0
        } else {
            power_cell_average(alpha, k as f64 * h, (k + 1) as f64 * h)
        }
    })?;
    Weight::new(w)
}

/// Random multiplicative dyadic cascade with `[w]_{A₂}` at most `q_target`.
///
/// Each non-leaf interval `I` draws a sign and a magnitude `c_I ∈ [0, 1)`; the log-weight
/// picks up `±c_I ln ρ` on `I±`. The ratio `ρ` is bisected so the measured characteristic lands
/// just below `q_target`. Deterministic in `seed`.
pub fn make_random_a2(depth: u32, q_target: f64, seed: u64) -> Result<Weight> {
    if !(q_target >= 1.0) || !q_target.is_finite() {
        return input(format!("q_target must be a finite number >= 1, got {q_target}"));
    }
    let nodes = (1usize << depth) - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..nodes)
        .map(|_| {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            sign * rng.gen::<f64>()
        })
        .collect();

    let build = |log_rho: f64| -> Result<Weight> {
        let mut log_w = vec![0.0f64];
        let mut offset = 0;
        for level in 0..depth {
            let width = 1usize << level;
            let mut next = Vec::with_capacity(2 * width);
            for (k, &base) in log_w.iter().enumerate() {
                let step = draws[offset + k] * log_rho;
                next.push(base + step);
                next.push(base - step);
            }
            offset += width;
            log_w = next;
        }
        Weight::new(StepFunction::new(depth, log_w.into_iter().map(f64::exp).collect())?)
    };

    if depth == 0 || q_target == 1.0 {
        return build(0.0);
    }

    let mut lo = (0.0, build(0.0)?);
    let mut hi_log = 0.25;
    loop {
        let trial = build(hi_log)?;
        if trial.q() > q_target {
            break;
        }
        lo = (hi_log, trial);
        hi_log *= 2.0;
        if hi_log > 700.0 / depth as f64 {
            // exp would overflow before the target is reached
            return Ok(lo.1);
        }
    }
    let mut lo_log = lo.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo_log + hi_log);
        let trial = build(mid)?;
        if trial.q() <= q_target {
            lo_log = mid;
            lo.1 = trial;
        } else {
            hi_log = mid;
        }
        if hi_log - lo_log <= 1e-12 * hi_log {
            break;
        }
    }
    Ok(lo.1)
}
