use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Outcome, RunConfig};
use crate::bellman::candidate::{concavity_gain, random_admissible_triple, segment_product_range};
use crate::bellman::lego::{big_bellman, random_lego_triple, DEFAULT_LEGO_A};
use crate::bellman::{
    b_upper, discrete_lego_gain, lambert_w0, matrix_form_check, ode_residual, phi_concavity_check,
    test_bellman, BellmanPoint, TestPoint,
};
use crate::error::Result;
use crate::io::{write_verdicts, Verdict};

const LAMBERT_POINTS: usize = 10_000;
const GRID_SIDE: usize = 100;
const MATRIX_SAMPLES: usize = 1_000;

/// Worst normalized violation seen by one check; the check passes when it stays within `tol`.
struct Tally {
    name: &'static str,
    samples: usize,
    worst: f64,
    tol: f64,
}

impl Tally {
    fn new(name: &'static str, tol: f64) -> Self {
        Self {
            name,
            samples: 0,
            worst: f64::NEG_INFINITY,
            tol,
        }
    }

    fn see(&mut self, violation: f64) {
        self.samples += 1;
        if violation.is_nan() || violation > self.worst {
            self.worst = if violation.is_nan() { f64::INFINITY } else { violation };
        }
    }

    fn verdict(self, q: f64) -> Verdict {
        let worst_margin = self.tol - self.worst;
        Verdict {
            check: self.name.to_string(),
            q,
            samples: self.samples,
            worst_margin,
            pass: worst_margin >= 0.0,
        }
    }
}

/// Quantities observed by the suite that are reported rather than asserted.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub verdicts: Vec<Verdict>,
    /// Per `Q`, the smallest `(B(x) - avg)/(u (Δv)²)` over the concavity triples.
    pub concavity_ratio_min: Vec<(f64, f64)>,
    /// Per `Q`, the smallest finite lego gain ratio `a₀`.
    pub lego_a0_min: Vec<(f64, f64)>,
    /// Per `Q`, the largest `uv / Q` on a sampled segment.
    pub segment_max_over_q: Vec<(f64, f64)>,
}

/// Runs the candidate-function checks for every `Q` of the configuration.
pub fn cmd_verify_bellman(config: &RunConfig) -> Result<(Outcome, SuiteSummary)> {
    let mut summary = SuiteSummary {
        verdicts: Vec::new(),
        concavity_ratio_min: Vec::new(),
        lego_a0_min: Vec::new(),
        segment_max_over_q: Vec::new(),
    };
    for (k, &q) in config.q_list.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(k as u64);
        verify_one(q, config, &mut rng, &mut summary)?;
    }
    let mut table = write_verdicts(&summary.verdicts)?;
    for ((q, r), ((_, a0), (_, s))) in summary
        .concavity_ratio_min
        .iter()
        .zip(summary.lego_a0_min.iter().zip(&summary.segment_max_over_q))
    {
        table.push_str(&format!(
            "# observed: Q={q} concavity_ratio_min={r} lego_a0_min={a0} segment_max_over_Q={s}\n"
        ));
    }
    let failures: Vec<String> = summary
        .verdicts
        .iter()
        .filter(|v| !v.pass)
        .map(|v| format!("{} (Q = {})", v.check, v.q))
        .collect();
    Ok((
        Outcome {
            command: config.command,
            table,
            passed: failures.is_empty(),
            failures,
            attachments: Vec::new(),
        },
        summary,
    ))
}

fn verify_one(q: f64, config: &RunConfig, rng: &mut ChaCha8Rng, out: &mut SuiteSummary) -> Result<()> {
    let e = std::f64::consts::E;

    let mut identity = Tally::new("lambert_identity", config.tolerance(1e-13));
    for k in 0..=LAMBERT_POINTS {
        let y = -(-1.0f64).exp() * (1.0 - k as f64 / LAMBERT_POINTS as f64);
        let w = lambert_w0(y)?;
        identity.see((w * w.exp() - y).abs());
    }
    out.verdicts.push(identity.verdict(q));
    let mut endpoints = Tally::new("lambert_endpoints", config.tolerance(1e-12));
    endpoints.see((lambert_w0(-(-1.0f64).exp())? + 1.0).abs());
    endpoints.see(lambert_w0(0.0)?.abs());
    out.verdicts.push(endpoints.verdict(q));

    let mut growth = Tally::new("growth_bound", config.tolerance(0.0));
    for iu in 0..GRID_SIDE {
        let u = (-3.0 + 6.0 * iu as f64 / (GRID_SIDE - 1) as f64).exp();
        for ix in 0..GRID_SIDE {
            let x = q.powf(ix as f64 / (GRID_SIDE - 1) as f64);
            let p = BellmanPoint { u, v: x / u };
            let b = b_upper(p, q)?;
            let bound = e * q * q * p.v * (1.0 - 1.0 / p.x()).max(0.0);
            let scale = e * q * q * p.v;
            growth.see(((-b).max(b - bound)) / scale);
        }
    }
    out.verdicts.push(growth.verdict(q));

    let mut eigen = Tally::new("matrix_eigen_max", config.tolerance(1e-8));
    let mut det = Tally::new("matrix_determinant", config.tolerance(1e-8));
    let mut ode = Tally::new("ode_residual", config.tolerance(1e-8));
    for k in 0..MATRIX_SAMPLES {
        let t = (k as f64 + rng.gen::<f64>()) / MATRIX_SAMPLES as f64;
        let x = (1.0 + (q - 1.0) * t).min(q * (1.0 - 1e-9));
        let m = matrix_form_check(x, q)?;
        if m.scale.is_finite() {
            eigen.see(m.eigen_max / m.scale);
        } else {
            eigen.see(m.eigen_max);
        }
        det.see(m.det_residual);
        ode.see(ode_residual(x, q)?);
    }
    out.verdicts.extend([eigen.verdict(q), det.verdict(q), ode.verdict(q)]);

    let concavity_tol = config.tolerance(1e-9);
    let mut three_eighths = Tally::new("concavity_3_8", concavity_tol);
    let mut one_quarter = Tally::new("concavity_1_4", concavity_tol);
    let mut containment = Tally::new("segment_containment_4q", config.tolerance(0.0));
    let mut ratio_min = f64::INFINITY;
    let mut segment_max = 0.0f64;
    for _ in 0..config.samples {
        let (x, xp, xm) = random_admissible_triple(rng, q);
        let c = concavity_gain(x, xp, xm, q)?;
        let dv = xp.v - xm.v;
        let quad = x.u * dv * dv;
        three_eighths.see(-c.gain / c.scale);
        one_quarter.see(-(c.gain + 0.125 * quad) / c.scale);
        if quad > 0.0 {
            ratio_min = ratio_min.min((c.gain + 0.375 * quad) / quad);
        }
        let (lo, hi) = segment_product_range(xp, xm);
        containment.see(if lo > 1.0 && hi <= 4.0 * q { 0.0 } else { 1.0 });
        segment_max = segment_max.max(hi / q);
    }
    out.verdicts.extend([three_eighths.verdict(q), one_quarter.verdict(q), containment.verdict(q)]);
    out.concavity_ratio_min.push((q, ratio_min));
    out.segment_max_over_q.push((q, segment_max));

    let mut lego = Tally::new("lego_gain_nonnegative", config.tolerance(1e-12));
    let mut range = Tally::new("lego_range", config.tolerance(1e-12));
    let mut a0 = f64::INFINITY;
    for _ in 0..config.samples {
        let (x, xp, xm) = random_lego_triple(rng, q);
        let g = discrete_lego_gain(x, xp, xm, q)?;
        lego.see(-g.numerator / x.big_f);
        if g.ratio.is_finite() {
            a0 = a0.min(g.ratio);
        }
        let b = big_bellman(x, 4.0 * q, DEFAULT_LEGO_A)?;
        range.see((-b).max(b - x.big_f) / x.big_f);
    }
    let mut a0_check = Tally::new("lego_a0_positive", 0.0);
    a0_check.samples = lego.samples;
    a0_check.worst = -a0;
    out.verdicts.extend([lego.verdict(q), range.verdict(q), a0_check.verdict(q)]);
    out.lego_a0_min.push((q, a0));

    let mut phi = Tally::new("phi_concavity", config.tolerance(1e-6));
    let mut slope = Tally::new("test_bellman_slope", config.tolerance(1e-12));
    for _ in 0..MATRIX_SAMPLES {
        let pt: [f64; 4] = [
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-4.0f64..2.0).exp(),
            rng.gen_range(-4.0f64..2.0).exp(),
        ];
        let h = phi_concavity_check(pt[0], pt[1], pt[2], pt[3])?;
        phi.see(h.eigen_max / h.scale.max(f64::MIN_POSITIVE));

        let v = rng.gen_range(-3.0f64..3.0).exp();
        let f = rng.gen_range(-2.0..2.0);
        let big_f = f * f / v + rng.gen::<f64>();
        let a1 = rng.gen::<f64>() * q * q * v;
        let a2 = a1 + rng.gen::<f64>() * (q * q * v - a1) + f64::MIN_POSITIVE;
        let b1 = test_bellman(TestPoint::new(big_f, f, a1, v)?, q)?;
        let b2 = test_bellman(TestPoint::new(big_f, f, a2, v)?, q)?;
        let secant = (b2 - b1) / (a2 - a1);
        let floor = f * f / (4.0 * v * v * q * q);
        if a2 > a1 && floor > 0.0 && (a2 - a1) > 1e-6 * a2 {
            slope.see((floor - secant) / floor);
        }
    }
    out.verdicts.extend([phi.verdict(q), slope.verdict(q)]);
    Ok(())
}
