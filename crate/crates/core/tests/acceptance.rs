use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sqfn::bellman::candidate::{random_admissible_triple, segment_containment};
use sqfn::bellman::{b_upper, concavity_gain, lambert_w0, matrix_form_check, ode_residual, BellmanPoint};
use sqfn::corpus::{random_interval, weighted_corpus};
use sqfn::experiments::{
    cmd_weak_restricted, dp_fit, dp_runs, sparse_rows, t1_rows, Command, RunConfig, DP_EXPONENT_RANGE,
    SPARSE_EPSILON, T1_CONSTANT, WEAK_EXPONENT_RANGE,
};
use sqfn::operators::{dyadic_maximal, level_set_measure, lp2_norm, sigma_profile, testing_sum, testing_sums, weighted_haar};
use sqfn::weights::make_random_a2;
use sqfn::{DyadicInterval, StepFunction};

const SEED: u64 = 20_240_601;

const LAMBERT_IDENTITY_TOL: f64 = 1e-13;
const LAMBERT_ENDPOINT_TOL: f64 = 1e-12;
const MATRIX_TOL: f64 = 1e-8;
const CONCAVITY_TOL: f64 = 1e-9;
const HAAR_TOL: f64 = 1e-12;
const TELESCOPING: f64 = 16.0 * std::f64::consts::E;
const SIGMA1_FACTOR: f64 = 8.0;
const REFINEMENT_BAND: f64 = 2.0;
const MAXIMAL_TOL: f64 = 1e-12;
const SUPERSOLUTION_TOL: f64 = 1e-6;

struct Line {
    passed: bool,
    detail: String,
}

fn line(passed: bool, detail: impl Into<String>) -> Line {
    Line {
        passed,
        detail: detail.into(),
    }
}

fn within_budget(line: Line, elapsed: Duration, budget: Option<Duration>) -> Line {
    match budget {
        Some(b) if elapsed > b => Line {
            passed: false,
            detail: format!("{}; runtime {:.1}s over budget {:.0}s", line.detail, elapsed.as_secs_f64(), b.as_secs_f64()),
        },
        _ => line,
    }
}

fn lambert() -> Line {
    let n = 10_000;
    let mut worst = 0.0f64;
    for k in 0..=n {
        let y = -(-1.0f64).exp() * (1.0 - k as f64 / n as f64);
        let w = lambert_w0(y).unwrap();
        worst = worst.max((w * w.exp() - y).abs());
    }
    let low = (lambert_w0(-(-1.0f64).exp()).unwrap() + 1.0).abs();
    let high = lambert_w0(0.0).unwrap().abs();
    line(
        worst <= LAMBERT_IDENTITY_TOL && low <= LAMBERT_ENDPOINT_TOL && high <= LAMBERT_ENDPOINT_TOL,
        format!("max |We^W - y| = {worst:.2e}; |W(-1/e) + 1| = {low:.1e}; |W(0)| = {high:.1e}"),
    )
}

fn growth_bound() -> Line {
    let side = 100;
    let e = std::f64::consts::E;
    let mut violations = 0;
    for q in [2.0f64, 10.0, 100.0] {
        for iu in 0..side {
            let u = (-3.0 + 6.0 * iu as f64 / (side - 1) as f64).exp();
            for ix in 0..side {
                let x = q.powf(ix as f64 / (side - 1) as f64);
                let v = x / u;
                let b = b_upper(BellmanPoint { u, v }, q).unwrap();
                let bound = e * q * q * v * (1.0 - 1.0 / (u * v));
                if !(b >= 0.0 && b <= bound.max(0.0)) {
                    violations += 1;
                }
            }
        }
    }
    line(violations == 0, format!("{violations} violations over 3 x {side}x{side} nodes"))
}

fn matrix_form() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut eig, mut det, mut ode) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for q in [2.0f64, 10.0, 100.0] {
        for _ in 0..1_000 {
            let x = 1.0 + (q - 1.0) * rng.gen::<f64>();
            let m = matrix_form_check(x, q).unwrap();
            eig = eig.max(if m.scale.is_finite() && m.scale > 0.0 { m.eigen_max / m.scale } else { m.eigen_max });
            det = det.max(m.det_residual);
            ode = ode.max(ode_residual(x, q).unwrap());
        }
    }
    line(
        eig <= MATRIX_TOL && det <= MATRIX_TOL && ode <= MATRIX_TOL,
        format!("max eigenvalue/scale = {eig:.2e}; det residual = {det:.2e}; ODE residual = {ode:.2e}"),
    )
}

fn discrete_concavity() -> Line {
    let mut worst = f64::NEG_INFINITY;
    let mut ratio_min = f64::INFINITY;
    let mut escaped = 0;
    let mut violations = 0;
    for (k, q) in [2.0f64, 10.0].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        rng.set_stream(k as u64);
        for _ in 0..1_000_000 {
            let (x, xp, xm) = random_admissible_triple(&mut rng, q);
            let c = concavity_gain(x, xp, xm, q).unwrap();
            let deficit = -c.gain / c.scale;
            worst = worst.max(deficit);
            if deficit > CONCAVITY_TOL {
                violations += 1;
            }
            let quad = x.u * (xp.v - xm.v).powi(2);
            if quad > 0.0 {
                ratio_min = ratio_min.min((c.gain + 0.375 * quad) / quad);
            }
            if !segment_containment(xp, xm, q) {
                escaped += 1;
            }
        }
    }
    line(
        violations == 0 && escaped == 0,
        format!(
            "3/8 bound violated on {violations} of 2e6 triples (worst deficit {worst:.2e} x scale); \
             smallest gain/(u dv^2) = {ratio_min:.4}; {escaped} segments leave O_4Q"
        ),
    )
}

fn direct_average(f: &StepFunction, level: u32, index: usize) -> f64 {
    let width = f.len() >> level;
    f.cells()[index * width..(index + 1) * width].iter().sum::<f64>() / width as f64
}

fn weighted_haar_check() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut recon, mut ortho, mut norm, mut alpha_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut alpha_bound = 0;
    let mut pairs = 0;
    for k in 0..50 {
        let q = [2.0, 10.0, 100.0][k % 3];
        let w = make_random_a2(8, q, rng.gen()).unwrap();
        let winv = w.winv();
        for _ in 0..20 {
            let i = random_interval(7, &mut rng);
            let h = weighted_haar(&w, i).unwrap();
            let len = i.length();
            let a = direct_average(winv, i.level() + 1, 2 * i.index() as usize);
            let b = direct_average(winv, i.level() + 1, 2 * i.index() as usize + 1);
            let (p, m) = h.values;
            let (mu_p, mu_m) = (a * len / 2.0, b * len / 2.0);
            let unit = 1.0 / len.sqrt();
            recon = recon
                .max((h.alpha * p + h.beta * unit - unit).abs() / unit)
                .max((h.alpha * m + h.beta * unit + unit).abs() / unit);
            ortho = ortho.max((p * mu_p + m * mu_m).abs() / (p.abs() * mu_p + m.abs() * mu_m));
            norm = norm.max((p * p * mu_p + m * m * mu_m - 1.0).abs());
            let avg = (a + b) / 2.0;
            let formula = (a.sqrt() * b.sqrt()) / avg.sqrt();
            alpha_err = alpha_err.max((h.alpha - formula).abs() / formula);
            if h.alpha > 2.0 * avg.sqrt() {
                alpha_bound += 1;
            }
            pairs += 1;
        }
    }
    line(
        recon <= HAAR_TOL && ortho <= HAAR_TOL && norm <= HAAR_TOL && alpha_err <= HAAR_TOL && alpha_bound == 0,
        format!(
            "{pairs} pairs: reconstruction {recon:.1e}, orthogonality {ortho:.1e}, normalisation {norm:.1e}, \
             alpha vs closed form {alpha_err:.1e}, {alpha_bound} alpha bound violations"
        ),
    )
}

fn telescoping() -> Line {
    let corpus = weighted_corpus(12, &[5.0, 50.0], 50, SEED).unwrap();
    let mut worst = 0.0f64;
    let mut violations = 0;
    let mut spot = 0.0f64;
    for inst in &corpus {
        let w = &inst.weight;
        let sums = testing_sums(w);
        let bound = TELESCOPING * w.q() * w.q();
        for (level, row) in sums.iter().enumerate() {
            for (k, s) in row.iter().enumerate() {
                let j = DyadicInterval::new(level as u32, k as u32).unwrap();
                let r = s / (bound * w.tree_winv().get(j));
                worst = worst.max(r);
                if r > 1.0 {
                    violations += 1;
                }
            }
        }
        let j = DyadicInterval::new(3, (inst.seed % 8) as u32).unwrap();
        let direct = testing_sum(w, j).unwrap();
        spot = spot.max((direct - sums[3][j.index() as usize]).abs() / direct.max(f64::MIN_POSITIVE));
    }
    line(
        violations == 0 && spot <= 1e-10,
        format!(
            "{} weights: max testing_sum/(16e Q^2 <w^-1>_J) = {worst:.4}, {violations} violations; \
             direct vs tree sums agree to {spot:.1e}",
            corpus.len()
        ),
    )
}

fn sigma_constant(depth: u32) -> (f64, f64, usize) {
    let corpus = weighted_corpus(depth, &[5.0, 50.0], 50, SEED).unwrap();
    let mut k_obs = 0.0f64;
    let mut sigma1_worst = 0.0f64;
    let mut violations = 0;
    for inst in &corpus {
        let q = inst.weight.q();
        for row in sigma_profile(&inst.phi, &inst.weight).unwrap() {
            if row.energy == 0.0 {
                continue;
            }
            let r1 = row.sigma1 / (SIGMA1_FACTOR * q * row.energy);
            sigma1_worst = sigma1_worst.max(r1);
            if r1 > 1.0 {
                violations += 1;
            }
            k_obs = k_obs.max(row.sigma / (q * q * row.energy));
        }
    }
    (k_obs, sigma1_worst, violations)
}

fn sigma_split() -> Line {
    let (k8, s8, v8) = sigma_constant(8);
    let (k12, s12, v12) = sigma_constant(12);
    let stable = k12 <= REFINEMENT_BAND * k8 && k8 <= REFINEMENT_BAND * k12;
    line(
        v8 + v12 == 0 && k12.is_finite() && stable,
        format!(
            "max sigma1/(8Q F_J) = {:.4}, {} violations; K = {k8:.4} at depth 8, {k12:.4} at depth 12",
            s8.max(s12),
            v8 + v12
        ),
    )
}

fn sparse_machinery() -> Line {
    let rows = sparse_rows(12, &[5.0, 50.0], 100, SEED).unwrap();
    let sparse_fail = rows.iter().filter(|r| r.worst_sparseness > SPARSE_EPSILON / 2.0).count();
    let domination_fail = rows.iter().filter(|r| r.structural_failure || !r.domination.is_finite()).count();
    let decay_fail = rows.iter().filter(|r| r.worst_decay > 1.0).count();
    let c_obs = rows.iter().map(|r| r.domination).fold(0.0, f64::max);
    let worst_sparse = rows.iter().map(|r| r.worst_sparseness).fold(0.0, f64::max);
    let worst_decay = rows.iter().map(|r| r.worst_decay).fold(0.0, f64::max);
    line(
        sparse_fail + domination_fail + decay_fail == 0,
        format!(
            "{} instances: worst sparseness {worst_sparse:.4} (limit {}), C_obs = {c_obs:.2}, \
             worst decay ratio / eps^j = {worst_decay:.4}",
            rows.len(),
            SPARSE_EPSILON / 2.0
        ),
    )
}

fn maximal_oracle(f: &StepFunction) -> Vec<f64> {
    let n = f.len();
    let mut best = vec![0.0f64; n];
    let mut level = 0;
    while (1usize << level) <= n {
        let width = n >> level;
        for k in 0..(1usize << level) {
            let avg = f.cells()[k * width..(k + 1) * width].iter().map(|v| v.abs()).sum::<f64>() / width as f64;
            for b in &mut best[k * width..(k + 1) * width] {
                *b = b.max(avg);
            }
        }
        level += 1;
    }
    best
}

fn maximal_weak() -> Line {
    let corpus = weighted_corpus(10, &[5.0, 50.0], 500, SEED).unwrap();
    let mut worst = 0.0f64;
    let mut violations = 0;
    let mut disagreement = 0.0f64;
    let mut nonempty = 0;
    for inst in &corpus {
        let m = dyadic_maximal(&inst.phi);
        let oracle = maximal_oracle(&inst.phi);
        for (a, b) in m.cells().iter().zip(&oracle) {
            disagreement = disagreement.max((a - b).abs() / b.max(1.0));
        }
        let lhs = level_set_measure(&m, &inst.weight, 1.0).unwrap();
        let rhs = inst.weight.q() * lp2_norm(&inst.phi, &inst.weight).unwrap().powi(2);
        if lhs > 0.0 {
            nonempty += 1;
        }
        worst = worst.max(lhs / rhs);
        if lhs > rhs * (1.0 + MAXIMAL_TOL) {
            violations += 1;
        }
    }
    line(
        violations == 0 && disagreement <= 1e-12,
        format!(
            "{} instances ({nonempty} with nonempty level set): max w{{M phi > 1}}/(Q |phi|^2_w) = {worst:.4}, \
             {violations} violations; maximal function vs oracle {disagreement:.1e}",
            corpus.len()
        ),
    )
}

fn restricted_weak() -> Line {
    let config = RunConfig::defaults(Command::WeakRestricted);
    let (_, report) = cmd_weak_restricted(&config).unwrap();
    let fit = report.fit.unwrap();
    let q_min = report.rows.iter().map(|r| r.q_a2).fold(f64::INFINITY, f64::min);
    let q_max = report.rows.iter().map(|r| r.q_a2).fold(0.0, f64::max);
    let (lo, hi) = WEAK_EXPONENT_RANGE;
    let spans = q_min <= 4.0 * (1.0 + 1e-6) && q_max >= 4096.0 * (1.0 - 1e-6);
    line(
        spans && (lo..=hi).contains(&fit.exponent),
        format!("slope {:.4} over Q in [{q_min:.1}, {q_max:.0}] at depth {}", fit.exponent, config.depth),
    )
}

fn t1_improvement() -> Line {
    let config = RunConfig::defaults(Command::T1Gap);
    let rows = t1_rows(config.depth, &config.q_list, config.samples, config.seed).unwrap();
    let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let separation = rows
        .iter()
        .filter(|r| r.q_testing > 0.0)
        .map(|r| r.q_a2 / r.q_testing)
        .fold(0.0, f64::max);
    line(
        worst <= T1_CONSTANT,
        format!(
            "{} instances: max ratio {worst:.4} against K' = {T1_CONSTANT}; max Q/q = {separation:.2}",
            rows.len()
        ),
    )
}

fn dp_bellman_check() -> Line {
    let config = RunConfig::defaults(Command::DpBellman);
    let runs = dp_runs(&config).unwrap();
    let rows: Vec<_> = runs.iter().map(|(r, _)| *r).collect();
    let decrease = rows.iter().map(|r| r.worst_decrease).fold(0.0, f64::max);
    let super_ratio = rows.iter().map(|r| r.supersolution_ratio).fold(0.0, f64::max);
    let fit = dp_fit(&rows).unwrap();
    let (lo, hi) = DP_EXPONENT_RANGE;
    line(
        decrease == 0.0 && super_ratio <= 1.0 + SUPERSOLUTION_TOL && (lo..=hi).contains(&fit.exponent),
        format!(
            "grid {}, {} iterations: max decrease {decrease:.1e}; max B/((8/3)B^4Q) = {super_ratio:.4}; slope {:.4}",
            config.grid, config.iterations, fit.exponent
        ),
    )
}

type Criterion = (&'static str, fn() -> Line, Option<u64>);

fn main() {
    let criteria: [Criterion; 12] = [
        ("Lambert W0 identity and endpoints", lambert, Some(1)),
        ("growth bound 0 <= B^Q <= eQ^2 v(1 - 1/uv)", growth_bound, Some(30)),
        ("matrix form, determinant and ODE residuals", matrix_form, None),
        ("discrete concavity with 3/8 and segment containment", discrete_concavity, Some(300)),
        ("weighted Haar functions", weighted_haar_check, None),
        ("telescoping bound testing_sum <= 16e Q^2 <w^-1>_J", telescoping, None),
        ("sigma split and corpus constant K", sigma_split, None),
        ("sparse family, domination and level-set decay", sparse_machinery, None),
        ("maximal weak bound w{M phi > 1} <= Q |phi|^2_w", maximal_weak, None),
        ("restricted weak type slope", restricted_weak, Some(120)),
        ("T1 bound with (sqrt Q + q)^2", t1_improvement, None),
        ("DP value iteration", dp_bellman_check, Some(600)),
    ];
    let mut failed = Vec::new();
    for (k, (name, check, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = within_budget(result, elapsed, budget.map(Duration::from_secs));
        let verdict = if result.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name} ({:.1}s): {}", k + 1, elapsed.as_secs_f64(), result.detail);
        if !result.passed {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 12 criteria pass");
    } else {
        println!("acceptance: {} of 12 criteria fail: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
