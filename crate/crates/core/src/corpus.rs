//! Deterministic random inputs: weights, nonnegative test functions and sets of leaf cells.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{DyadicInterval, StepFunction};
use crate::error::{input, Result};
use crate::weights::{make_random_a2, Weight};

/// Shapes of random nonnegative test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Independent uniform cell values in `[0, 1)`.
    Uniform,
    /// A few tall spikes on single cells over a small uniform floor.
    Spiky,
    /// A multiplicative cascade with random child ratios.
    Cascade,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Uniform, Shape::Spiky, Shape::Cascade];
}

/// A random nonnegative, not identically zero step function of the given shape.
pub fn random_phi(depth: u32, shape: Shape, rng: &mut impl Rng) -> Result<StepFunction> {
    let n = 1usize << depth;
    let cells = match shape {
        Shape::Uniform => (0..n).map(|_| rng.gen::<f64>()).collect(),
        Shape::Spiky => {
            let mut cells: Vec<f64> = (0..n).map(|_| 0.01 * rng.gen::<f64>()).collect();
            for _ in 0..rng.gen_range(1..=4) {
                let k = rng.gen_range(0..n);
                cells[k] += n as f64 * rng.gen_range(0.5..2.0);
            }
            cells
        }
        Shape::Cascade => {
            let mut cells = vec![1.0];
            for _ in 0..depth {
                cells = cells
                    .iter()
                    .flat_map(|&c| {
                        let t: f64 = rng.gen_range(0.05..0.95);
                        [2.0 * c * t, 2.0 * c * (1.0 - t)]
                    })
                    .collect();
            }
            cells
        }
    };
    let f = StepFunction::new(depth, cells)?;
    if f.is_zero() {
        return StepFunction::constant(depth, 1.0);
    }
    Ok(f)
}

/// Indicator of a random union of leaf cells; each cell is kept with probability `density`.
/// At least one cell is always kept.
pub fn random_leaf_union(depth: u32, density: f64, rng: &mut impl Rng) -> Result<StepFunction> {
    if !(0.0..=1.0).contains(&density) {
        return input(format!("density must lie in [0, 1], got {density}"));
    }
    let n = 1usize << depth;
    let mut cells: Vec<f64> = (0..n).map(|_| if rng.gen_bool(density) { 1.0 } else { 0.0 }).collect();
    if cells.iter().all(|&c| c == 0.0) {
        cells[rng.gen_range(0..n)] = 1.0;
    }
    StepFunction::new(depth, cells)
}

/// A random dyadic interval with level at most `max_level`.
pub fn random_interval(max_level: u32, rng: &mut impl Rng) -> DyadicInterval {
    let level = rng.gen_range(0..=max_level);
    let index = rng.gen_range(0..1u32 << level);
    DyadicInterval::new(level, index).expect("index drawn in range")
}

/// `φ = w⁻¹ 𝟙_E`.
pub fn restricted_phi(w: &Weight, set: &StepFunction) -> Result<StepFunction> {
    set.mul(w.winv())
}

/// One weight together with a nonnegative test function on the same lattice.
#[derive(Debug, Clone)]
pub struct Instance {
    pub weight: Weight,
    pub phi: StepFunction,
    pub seed: u64,
}

/// `count` instances per target characteristic, with test functions cycling through [`Shape::ALL`].
///
/// Instance `k` for target `t` is a pure function of `(seed, t, k)`.
pub fn weighted_corpus(depth: u32, q_targets: &[f64], count: usize, seed: u64) -> Result<Vec<Instance>> {
    let mut out = Vec::with_capacity(q_targets.len() * count);
    for (t, &q) in q_targets.iter().enumerate() {
        for k in 0..count {
            let s = instance_seed(seed, t, k);
            let weight = make_random_a2(depth, q, s)?;
            let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0x9e37_79b9_7f4a_7c15);
            let phi = random_phi(depth, Shape::ALL[k % Shape::ALL.len()], &mut rng)?;
            out.push(Instance { weight, phi, seed: s });
        }
    }
    Ok(out)
}

/// Instances of the restricted class `φ = w⁻¹ 𝟙_E`, alternating between a random dyadic interval
/// and a random sparse union of leaves for `E`.
pub fn restricted_corpus(depth: u32, q_targets: &[f64], count: usize, seed: u64) -> Result<Vec<Instance>> {
    let mut out = Vec::with_capacity(q_targets.len() * count);
    for (t, &q) in q_targets.iter().enumerate() {
        for k in 0..count {
            let s = instance_seed(seed, t, k);
            let weight = make_random_a2(depth, q, s)?;
            let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0x5851_f42d_4c95_7f2d);
            let set = if k % 2 == 0 {
                StepFunction::indicator(depth, random_interval(depth, &mut rng))?
            } else {
                random_leaf_union(depth, rng.gen_range(0.001..0.05), &mut rng)?
            };
            let phi = restricted_phi(&weight, &set)?;
            out.push(Instance { weight, phi, seed: s });
        }
    }
    Ok(out)
}

fn instance_seed(seed: u64, target: usize, k: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((target as u64) << 32) | k as u64);
    rng.gen()
}

/// Every interval on the left spine `(j, 0)`, every interval down to `full_levels`, and
/// `extra` more random intervals, without repeats.
pub fn interval_family(depth: u32, full_levels: u32, extra: usize, rng: &mut impl Rng) -> Vec<DyadicInterval> {
    let mut out: Vec<DyadicInterval> = DyadicInterval::all_up_to(full_levels.min(depth)).collect();
    out.extend((full_levels.min(depth) + 1..=depth).map(|j| DyadicInterval::new(j, 0).expect("spine")));
    let mut pool: Vec<DyadicInterval> = (0..4 * extra).map(|_| random_interval(depth, rng)).collect();
    pool.shuffle(rng);
    let mut added = 0;
    for i in pool {
        if added == extra {
            break;
        }
        if !out.contains(&i) {
            out.push(i);
            added += 1;
        }
    }
    out
}
