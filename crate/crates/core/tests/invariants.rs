use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqfn::bellman::candidate::random_admissible_triple;
use sqfn::bellman::lego::random_lego_triple;
use sqfn::bellman::{b_upper, big_bellman, concavity_gain, discrete_lego_gain, lambert_w0, BellmanPoint};
use sqfn::dyadic::{build_average_tree, haar_coefficient, haar_diff};
use sqfn::operators::{
    dyadic_maximal, level_set_measure, lp2_norm, square_function, weak_norm, weighted_haar,
};
use sqfn::sparse::{domination_report, extract_sparse, level_set_decay, slice_by_average, verify_sparseness};
use sqfn::weights::{a2_characteristic, make_random_a2};
use sqfn::{DyadicInterval, StepFunction, Weight};

fn step(min_depth: u32, max_depth: u32, lo: f64, hi: f64) -> impl Strategy<Value = StepFunction> {
    (min_depth..=max_depth).prop_flat_map(move |d| {
        prop::collection::vec(lo..hi, 1usize << d).prop_map(move |c| StepFunction::new(d, c).unwrap())
    })
}

fn positive_weight(max_depth: u32) -> impl Strategy<Value = Weight> {
    step(0, max_depth, -3.0, 3.0).prop_map(|f| Weight::new(f.map(f64::exp).unwrap()).unwrap())
}

fn weight_and_phi(max_depth: u32) -> impl Strategy<Value = (Weight, StepFunction)> {
    (1..=max_depth).prop_flat_map(|d| {
        (
            prop::collection::vec(-3.0f64..3.0, 1usize << d),
            prop::collection::vec(0.0f64..4.0, 1usize << d),
        )
            .prop_map(move |(w, p)| {
                let w = Weight::new(StepFunction::new(d, w.into_iter().map(f64::exp).collect()).unwrap()).unwrap();
                (w, StepFunction::new(d, p).unwrap())
            })
    })
}

fn intervals(depth: u32, non_leaf: bool) -> impl Iterator<Item = DyadicInterval> {
    let top = if non_leaf { depth.saturating_sub(1) } else { depth };
    DyadicInterval::all_up_to(top).filter(move |i| !non_leaf || i.level() < depth)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn averages_are_martingales(f in step(0, 9, -10.0, 10.0)) {
        let t = build_average_tree(&f);
        for i in intervals(f.depth(), true) {
            let mean = 0.5 * (t.get(i.left()) + t.get(i.right()));
            prop_assert!((t.get(i) - mean).abs() <= 1e-12 * t.get(i).abs().max(1.0));
        }
    }

    #[test]
    fn haar_coefficients_are_scaled_differences(f in step(0, 8, -10.0, 10.0)) {
        for i in intervals(f.depth(), true) {
            let c = haar_coefficient(&f, i).unwrap();
            let d = haar_diff(&f, i).unwrap();
            prop_assert!((c - 0.5 * i.length().sqrt() * d).abs() <= 1e-12 * c.abs().max(1e-300));
        }
    }

    #[test]
    fn haar_system_is_complete(f in step(0, 9, -10.0, 10.0)) {
        let energy: f64 = f.cells().iter().map(|c| c * c).sum::<f64>() * f.cell_length();
        let root = build_average_tree(&f).root();
        let coefficients: f64 = intervals(f.depth(), true)
            .map(|i| haar_coefficient(&f, i).unwrap().powi(2))
            .sum();
        prop_assert!(rel(energy, root * root + coefficients) <= 1e-10);
    }

    #[test]
    fn square_function_energy(f in step(1, 9, -10.0, 10.0)) {
        let s = square_function(&f).unwrap();
        let lhs: f64 = s.cells().iter().map(|c| c * c).sum::<f64>() * s.cell_length();
        let energy: f64 = f.cells().iter().map(|c| c * c).sum::<f64>() * f.cell_length();
        let mean = f.integral();
        let rhs = 4.0 * (energy - mean * mean);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * energy.max(1e-300) * 4.0);
    }

    #[test]
    fn weights_satisfy_a2_pointwise(w in positive_weight(8)) {
        let (tw, tv) = (w.tree_w(), w.tree_winv());
        for i in intervals(w.depth(), false) {
            prop_assert!(tw.get(i) * tv.get(i) >= 1.0 - 1e-12);
        }
        for (a, b) in w.w().cells().iter().zip(w.winv().cells()) {
            prop_assert!((a * b - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn characteristic_is_scale_and_swap_invariant(w in positive_weight(8), c in -5.0f64..5.0) {
        let q = a2_characteristic(&w).global_q;
        let scaled = Weight::new(w.w().map(|x| x * c.exp()).unwrap()).unwrap();
        prop_assert!(rel(a2_characteristic(&scaled).global_q, q) <= 1e-10);
        prop_assert!(rel(a2_characteristic(&w.swapped().unwrap()).global_q, q) <= 1e-12);
    }

    #[test]
    fn random_weights_meet_their_target(seed in any::<u64>(), target in 1.5f64..200.0) {
        let w = make_random_a2(7, target, seed).unwrap();
        prop_assert!(w.q() >= 1.0 && w.q() <= target * (1.0 + 1e-9));
    }

    #[test]
    fn weak_norm_is_below_strong_norm((w, g) in weight_and_phi(8)) {
        prop_assert!(weak_norm(&g, &w).unwrap() <= lp2_norm(&g, &w).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn weighted_haar_reconstructs_haar(w in positive_weight(8)) {
        for i in intervals(w.depth(), true) {
            let h = weighted_haar(&w, i).unwrap();
            let unit = 1.0 / i.length().sqrt();
            let (p, m) = h.values;
            prop_assert!((h.alpha * p + h.beta * unit - unit).abs() <= 1e-12 * unit);
            prop_assert!((h.alpha * m + h.beta * unit + unit).abs() <= 1e-12 * unit);
        }
    }

    #[test]
    fn maximal_weak_bound((w, phi) in weight_and_phi(8)) {
        let m = dyadic_maximal(&phi);
        for (a, b) in m.cells().iter().zip(phi.cells()) {
            prop_assert!(*a >= *b);
        }
        let lhs = level_set_measure(&m, &w, 1.0).unwrap();
        let rhs = w.q() * lp2_norm(&phi, &w).unwrap().powi(2);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn sparse_pipeline_invariants((_, phi) in weight_and_phi(9), eps in 0.05f64..0.95) {
        prop_assume!(!phi.is_zero());
        let family = extract_sparse(&phi, eps, 1.0).unwrap();
        let audit = verify_sparseness(&family);
        prop_assert!(audit.worst_ratio <= eps / 2.0);
        let dom = domination_report(&phi, &family).unwrap();
        prop_assert!(!dom.structural_failure && dom.ratio.is_finite());
        let slices = slice_by_average(&phi, &family).unwrap();
        prop_assert_eq!(slices.interval_count(), family.len());
        for &m in slices.slices.keys() {
            for q_star in slices.maximal_in(m) {
                for row in level_set_decay(&slices, eps, m, q_star).unwrap() {
                    if row.j >= 1 {
                        prop_assert!(row.ratio <= row.bound);
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lambert_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let y = |t: f64| -(-1.0f64).exp() * (1.0 - t);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(lambert_w0(y(lo)).unwrap() <= lambert_w0(y(hi)).unwrap());
    }

    #[test]
    fn candidate_stays_in_growth_bounds(lu in -3.0f64..3.0, t in 0.0f64..1.0, q in 1.5f64..200.0) {
        let u = lu.exp();
        let v = q.powf(t) / u;
        let b = b_upper(BellmanPoint { u, v }, q).unwrap();
        let bound = std::f64::consts::E * q * q * v * (1.0 - 1.0 / (u * v)).max(0.0);
        prop_assert!(b >= 0.0 && b <= bound);
    }

    #[test]
    fn candidate_gains_a_quarter(seed in any::<u64>(), q in 1.5f64..200.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, xp, xm) = random_admissible_triple(&mut rng, q);
        let c = concavity_gain(x, xp, xm, q).unwrap();
        let quad = x.u * (xp.v - xm.v).powi(2);
        prop_assert!(c.gain + 0.125 * quad >= -1e-9 * c.scale);
    }

    #[test]
    fn lego_function_is_concave_and_bounded(seed in any::<u64>(), q in 1.5f64..200.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, xp, xm) = random_lego_triple(&mut rng, q);
        let g = discrete_lego_gain(x, xp, xm, q).unwrap();
        prop_assert!(g.numerator >= -1e-12 * x.big_f);
        let b = big_bellman(x, 4.0 * q, sqfn::bellman::lego::DEFAULT_LEGO_A).unwrap();
        prop_assert!(b >= -1e-12 * x.big_f && b <= x.big_f * (1.0 + 1e-12));
    }
}
