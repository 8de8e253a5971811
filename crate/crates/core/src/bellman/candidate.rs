//! The Lambert-W candidate `B^Q(u, v) = v ∫_1^{uv} h(t) dt`, `h(t) = -1/W₀(-t²/(Q²e))`,
//! and the checks of its concavity properties.

use std::f64::consts::E;

use rand::Rng;

use super::lambert::{lambert_w0, one_plus_w0};
use super::quadrature::integrate;
use crate::error::{domain, input, Result};

/// Relative slack when testing `1 ≤ uv ≤ Q`.
const DOMAIN_SLACK: f64 = 1e-12;
const QUAD_REL_TOL: f64 = 1e-13;

/// A point `(u, v)` with `u, v > 0`; membership in `O_Q` is checked per call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellmanPoint {
    pub u: f64,
    pub v: f64,
}

impl BellmanPoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(u > 0.0 && v > 0.0 && u.is_finite() && v.is_finite()) {
            return input(format!("Bellman point needs finite u, v > 0, got ({u}, {v})"));
        }
        Ok(Self { u, v })
    }

    pub fn x(&self) -> f64 {
        self.u * self.v
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        Self {
            u: 0.5 * (self.u + other.u),
            v: 0.5 * (self.v + other.v),
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 1.0) || !q.is_finite() {
        return domain(format!("Q must be a finite number > 1, got {q}"));
    }
    Ok(())
}

/// Clamps `x` into `[1, Q]` when it lies within rounding slack of the interval.
fn clamp_x(x: f64, q: f64) -> Result<f64> {
    if x < 1.0 - DOMAIN_SLACK || x > q * (1.0 + DOMAIN_SLACK) || x.is_nan() {
        return domain(format!("uv = {x} lies outside [1, {q}]"));
    }
    Ok(x.clamp(1.0, q))
}

fn lambert_arg(t: f64, q: f64) -> f64 {
    let r = t / q;
    (-(r * r) / E).max(-1.0 / E)
}

/// `h(x) = -1/W₀(-x²/(Q²e))`; `h ≥ 1` on `[1, Q]` with `h(Q) = 1`.
pub fn h(x: f64, q: f64) -> Result<f64> {
    Ok(-1.0 / lambert_w0(lambert_arg(x, q))?)
}

/// `h'(x) = 2 / (x W (1 + W))`, unbounded as `x → Q`.
pub fn h_prime(x: f64, q: f64) -> Result<f64> {
    let y = lambert_arg(x, q);
    let w = lambert_w0(y)?;
    Ok(2.0 / (x * w * one_plus_w0(y)?))
}

/// `s = a^{-1/2}` with `a = -W₀(-t²/(Q²e))`.
fn s_of(t: f64, q: f64) -> Result<f64> {
    Ok((-lambert_w0(lambert_arg(t, q))?).sqrt().recip())
}

/// Integrand after the substitution `t = Q√e · s⁻¹ e^{-1/(2s²)}`, up to the factor `Q√e`.
fn k(s: f64) -> f64 {
    let r = 1.0 / (s * s);
    (-0.5 * r).exp() * (1.0 - r)
}

/// `g(x) = ∫_1^x h(t) dt`.
///
/// Away from `t = Q` the integral is taken in `t`; the stretch next to `Q`, where `h` has a
/// square-root cusp, is taken in the variable `s`, in which the integrand is smooth.
pub fn g(x: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    let x = clamp_x(x, q)?;
    if x == 1.0 {
        return Ok(0.0);
    }
    let cut = (0.9 * q).max(1.0);
    let direct_end = x.min(cut);
    let mut total = 0.0;
    if direct_end > 1.0 {
        let eval_err = std::cell::Cell::new(false);
        let r = integrate(
            |t| {
                h(t, q).unwrap_or_else(|_| {
                    eval_err.set(true);
                    f64::NAN
                })
            },
            1.0,
            direct_end,
            QUAD_REL_TOL,
            0.0,
        )?;
        if eval_err.get() {
            return domain("integrand left the Lambert domain");
        }
        total += r.value;
    }
    if x > cut {
        let lo = s_of(x, q)?;
        let hi = s_of(cut, q)?;
        let r = integrate(k, lo, hi, QUAD_REL_TOL, 0.0)?;
        total += q * E.sqrt() * r.value;
    }
    Ok(total)
}

/// `B^Q(u, v) = v g(uv)` on `1 ≤ uv ≤ Q`.
pub fn b_upper(p: BellmanPoint, q: f64) -> Result<f64> {
    Ok(p.v * g(p.x(), q)?)
}

/// `e Q² v (1 - 1/(uv))`, the envelope obtained from `W₀(y) ≤ y`.
pub fn b_upper_envelope(p: BellmanPoint, q: f64) -> f64 {
    E * q * q * p.v * (1.0 - 1.0 / p.x()).max(0.0)
}

/// `φ(x) = x g(x)` and its first two derivatives; `B^Q(u, v) = φ(uv)/u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiDerivatives {
    pub phi: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `φ' = g + x h` and `φ'' = 2h + x h' = -2/(1 + W)`.
pub fn phi_derivatives(x: f64, q: f64) -> Result<PhiDerivatives> {
    check_q(q)?;
    let x = clamp_x(x, q)?;
    let gx = g(x, q)?;
    let y = lambert_arg(x, q);
    let w = lambert_w0(y)?;
    let hx = -1.0 / w;
    Ok(PhiDerivatives {
        phi: x * gx,
        d1: gx + x * hx,
        d2: -2.0 / one_plus_w0(y)?,
    })
}

/// Closed-form Hessian `[[B_uu, B_uv], [B_uv, B_vv]]` of `B^Q` at an interior point.
pub fn b_hessian(p: BellmanPoint, q: f64) -> Result<[[f64; 2]; 2]> {
    let x = p.x();
    let d = phi_derivatives(x, q)?;
    let buu = (2.0 * d.phi - 2.0 * x * d.d1 + x * x * d.d2) / p.u.powi(3);
    let buv = p.v * d.d2;
    let bvv = p.u * d.d2;
    Ok([[buu, buv], [buv, bvv]])
}

/// Spectral data of `[[x²φ'' - 2xφ' + 2φ, xφ''], [xφ'', φ'' + 2]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixCheck {
    pub eigen_max: f64,
    /// `|det| / (|a₁₁ a₂₂| + a₁₂²)`.
    pub det_residual: f64,
    /// `|a₁₁| + |a₂₂| + 2|a₁₂|`.
    pub scale: f64,
}

/// Evaluates the matrix whose negative semidefiniteness is `d²B + 2u(dv)² ≤ 0`.
///
/// At `x = Q` the entries are infinite and the limits `eigen_max = 0`, `det_residual = 0` are
/// returned.
pub fn matrix_form_check(x: f64, q: f64) -> Result<MatrixCheck> {
    check_q(q)?;
    if !(1.0..=q).contains(&x) {
        return domain(format!("x = {x} lies outside [1, {q}]"));
    }
    let d = phi_derivatives(x, q)?;
    if d.d2.is_infinite() {
        return Ok(MatrixCheck {
            eigen_max: 0.0,
            det_residual: 0.0,
            scale: f64::INFINITY,
        });
    }
    let a11 = x * x * d.d2 - 2.0 * x * d.d1 + 2.0 * d.phi;
    let a12 = x * d.d2;
    let a22 = d.d2 + 2.0;
    let det = a11.mul_add(a22, -a12 * a12);
    let trace = a11 + a22;
    let disc = ((a11 - a22) * (a11 - a22) + 4.0 * a12 * a12).sqrt();
    let lambda_min = 0.5 * (trace - disc);
    let eigen_max = if lambda_min != 0.0 { det / lambda_min } else { 0.5 * (trace + disc) };
    let norm = (a11 * a22).abs() + a12 * a12;
    Ok(MatrixCheck {
        eigen_max,
        det_residual: if norm > 0.0 { det.abs() / norm } else { 0.0 },
        scale: a11.abs() + a22.abs() + 2.0 * a12.abs(),
    })
}

/// `|(1 - h)h'/h² - 2/x|` for the separated equation satisfied by `h`.
pub fn ode_residual(x: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    if !(x >= 1.0 && x <= q * (1.0 - 1e-9)) {
        return domain(format!("ODE residual is evaluated on [1, Q(1 - 1e-9)], got x = {x}"));
    }
    let hx = h(x, q)?;
    let dh = h_prime(x, q)?;
    Ok(((1.0 - hx) * dh / (hx * hx) - 2.0 / x).abs())
}

fn check_in_domain(p: &BellmanPoint, q: f64, name: &str) -> Result<()> {
    let x = p.x();
    if x < 1.0 - DOMAIN_SLACK || x > q * (1.0 + DOMAIN_SLACK) {
        return input(format!("{name} = ({}, {}) has uv = {x}, outside [1, {q}]", p.u, p.v));
    }
    Ok(())
}

fn check_midpoint(x: &BellmanPoint, xp: &BellmanPoint, xm: &BellmanPoint) -> Result<()> {
    let m = xp.midpoint(xm);
    let tol = 1e-12;
    if (m.u - x.u).abs() > tol * x.u.max(1.0) || (m.v - x.v).abs() > tol * x.v.max(1.0) {
        return input(format!("({}, {}) is not the midpoint of the split", x.u, x.v));
    }
    Ok(())
}

/// Outcome of a three-point concavity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcavityGain {
    /// `B^{4Q}(x) - ½(B^{4Q}(x₊) + B^{4Q}(x₋)) - (3/8) u (v₊ - v₋)²`.
    pub gain: f64,
    /// Largest magnitude among the terms, for relative tolerances.
    pub scale: f64,
}

/// Discrete concavity of `B_Q = B^{4Q}` on a split of a point of `O_Q`.
pub fn concavity_gain(x: BellmanPoint, xp: BellmanPoint, xm: BellmanPoint, q: f64) -> Result<ConcavityGain> {
    check_q(q)?;
    check_in_domain(&x, q, "x")?;
    check_in_domain(&xp, q, "x+")?;
    check_in_domain(&xm, q, "x-")?;
    check_midpoint(&x, &xp, &xm)?;
    let q4 = 4.0 * q;
    let b = b_upper(x, q4)?;
    let avg = 0.5 * (b_upper(xp, q4)? + b_upper(xm, q4)?);
    let dv = xp.v - xm.v;
    let quad = 0.375 * x.u * dv * dv;
    Ok(ConcavityGain {
        gain: b - avg - quad,
        scale: b.abs().max(avg.abs()).max(quad),
    })
}

/// `(B^{4Q}(x) - ½(B^{4Q}(x₊) + B^{4Q}(x₋))) / (u (v₊ - v₋)²)`, or `+∞` when `v₊ = v₋`.
///
/// Along the null direction of the second variation this tends to `1/4` as the split shrinks.
pub fn concavity_ratio(x: BellmanPoint, xp: BellmanPoint, xm: BellmanPoint, q: f64) -> Result<f64> {
    let c = concavity_gain(x, xp, xm, q)?;
    let dv = xp.v - xm.v;
    let denom = x.u * dv * dv;
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((c.gain + 0.375 * denom) / denom)
}

/// `(min, max)` of `U(t)V(t)` along the segment from `xm` to `xp`.
pub fn segment_product_range(xp: BellmanPoint, xm: BellmanPoint) -> (f64, f64) {
    let (du, dv) = (xp.u - xm.u, xp.v - xm.v);
    let c2 = du * dv;
    let c1 = xm.u * dv + xm.v * du;
    let c0 = xm.x();
    let at = |t: f64| (c2 * t + c1) * t + c0;
    let (mut lo, mut hi) = (xm.x().min(xp.x()), xm.x().max(xp.x()));
    if c2 != 0.0 {
        let t = -c1 / (2.0 * c2);
        if t > 0.0 && t < 1.0 {
            let v = at(t);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// Whether every point of the segment `[xm, xp]` satisfies `1 < uv ≤ 4Q`.
pub fn segment_containment(xp: BellmanPoint, xm: BellmanPoint, q: f64) -> bool {
    let (lo, hi) = segment_product_range(xp, xm);
    lo > 1.0 && hi <= 4.0 * q
}

/// Grid search over admissible splits for the largest `uv` reached on a segment.
///
/// By the scaling `(u, v) → (λu, v/λ)` the midpoint can be taken as `(1, x)`; the endpoints are
/// `(1 ± a, x(1 ± b))`. Returns the largest product found, divided by `Q`.
pub fn segment_extremum_search(q: f64, steps: usize) -> f64 {
    let mut best = 0.0f64;
    for ix in 0..=steps {
        let x = q.powf(ix as f64 / steps as f64);
        for ia in 0..steps {
            let a = ia as f64 / steps as f64;
            for ib in 0..=2 * steps {
                let b = (ib as f64 / steps as f64 - 1.0).clamp(-0.999_999, 0.999_999);
                let xp = BellmanPoint { u: 1.0 + a, v: x * (1.0 + b) };
                let xm = BellmanPoint { u: 1.0 - a, v: x * (1.0 - b) };
                let ok = |p: &BellmanPoint| p.x() >= 1.0 && p.x() <= q;
                if ok(&xp) && ok(&xm) {
                    best = best.max(segment_product_range(xp, xm).1);
                }
            }
        }
    }
    best / q
}

/// Draws a point of `O_Q` and a split of it with both endpoints in `O_Q`.
///
/// Split sizes are spread over several orders of magnitude so that both near-degenerate and
/// extreme splits are exercised.
pub fn random_admissible_triple(rng: &mut impl Rng, q: f64) -> (BellmanPoint, BellmanPoint, BellmanPoint) {
    loop {
        let u = rng.gen_range(-3.0f64..3.0).exp();
        let x = q.powf(rng.gen::<f64>()).max(1.0 + 1e-9);
        let v = x / u;
        let scale = rng.gen_range(-8.0f64..0.0).exp2();
        let a = rng.gen_range(-1.0..1.0) * scale;
        let b = rng.gen_range(-1.0..1.0) * if rng.gen() { scale } else { 1.0 };
        let xp = BellmanPoint { u: u * (1.0 + a), v: v * (1.0 + b) };
        let xm = BellmanPoint { u: u * (1.0 - a), v: v * (1.0 - b) };
        let inside = |p: &BellmanPoint| p.u > 0.0 && p.v > 0.0 && p.x() > 1.0 && p.x() <= q;
        if inside(&xp) && inside(&xm) {
            return (BellmanPoint { u, v }, xp, xm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn composite_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let hstep = (b - a) / panels as f64;
        let mut acc = f(a) + f(b);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * hstep);
        }
        acc * hstep / 3.0
    }

    #[test]
    fn h_examples() {
        for q in [2.0f64, 10.0, 100.0] {
            assert!((h(q, q).unwrap() - 1.0).abs() < 1e-7);
            let mut last = f64::INFINITY;
            for i in 0..=100 {
                let x = q.powf(i as f64 / 100.0).min(q * (1.0 - 1e-9));
                let hx = h(x, q).unwrap();
                assert!(hx >= 1.0 && hx <= last);
                assert!(h_prime(x, q).unwrap() <= 0.0);
                last = hx;
            }
        }
    }

    #[test]
    fn b_upper_examples() {
        let p = BellmanPoint::new(2.0, 0.5).unwrap();
        assert_eq!(b_upper(p, 10.0).unwrap(), 0.0);
        assert!(b_upper(BellmanPoint::new(4.0, 4.0).unwrap(), 10.0).is_err());
        assert!(b_upper(BellmanPoint::new(0.5, 0.5).unwrap(), 10.0).is_err());
        assert!(b_upper(p, 1.0).is_err());
    }

    #[test]
    fn b_upper_matches_composite_quadrature() {
        let p = BellmanPoint::new(1.0, 2.0).unwrap();
        let value = b_upper(p, 10.0).unwrap();
        let oracle = 2.0 * composite_simpson(|t| h(t, 10.0).unwrap(), 1.0, 2.0, 1_000_000);
        assert!((value - oracle).abs() < 1e-10 * oracle);
    }

    /// `(Q, x, g(x))` computed independently with 35-digit tanh-sinh quadrature of `h`.
    const G_REFERENCE: [(f64, f64, f64); 40] = [
        (1.5, 1.0000000004054652, 2.031_110_463_633_220_5e-9),
        (1.5, 1.0000405473328318, 0.000_203_104_820_190_161_38),
        (1.5, 1.0040628822999231, 0.020_249_419_478_715_405),
        (1.5, 1.1293469354568555, 0.554_662_396_938_384_2),
        (1.5, 1.328201239943334, 1.126_630_375_680_869_8),
        (1.5, 1.4698962979688366, 1.379_097_762_390_105_3),
        (1.5, 1.49939192562264, 1.415_203_625_923_196_4),
        (1.5, 1.5, 1.415_828_359_896_227_4),
        (2.0, 1.000000000693147, 6.807_009_469_690_345e-9),
        (2.0, 1.0000693171203765, 0.000_680_672_091_225_363_5),
        (2.0, 1.0069555500567189, 0.067_781_210_280_538_2),
        (2.0, 1.2311444133449163, 1.794_386_290_393_578),
        (2.0, 1.624504792712471, 3.487_490_574_059_282),
        (2.0, 1.931872657849691, 4.158_285_456_877_832),
        (2.0, 1.998614185980905, 4.245_548_213_673_196),
        (2.0, 2.0, 4.246_983_981_812_121_6),
        (10.0, 1.000000002302585, 6.236_006_568_117_138e-7),
        (10.0, 1.0002302850208247, 0.062_352_835_898_378_985),
        (10.0, 1.023292992280754, 6.164_227_799_432_439),
        (10.0, 1.9952623149688795, 134.591_792_117_603_15),
        (10.0, 5.011872336272722, 213.496_439_249_702_3),
        (10.0, 8.912509381337454, 232.812_870_286_433_82),
        (10.0, 9.977000638225533, 234.590_530_934_586_16),
        (10.0, 10.0, 234.615_075_097_973_15),
        (100.0, 1.0000000046051702, 0.000_125_176_900_111_863_82),
        (100.0, 1.0004606230728403, 12.514_807_833_740_834),
        (100.0, 1.0471285480508996, 1_223.381_226_182_169_3),
        (100.0, 3.9810717055349722, 20_351.821_590_050_127),
        (100.0, 25.118864315095795, 26_076.432_907_220_515),
        (100.0, 79.43282347242814, 26_758.278_721_031_806),
        (100.0, 99.5405417351527, 26_801.177_057_957_724),
        (100.0, 100.0, 26_801.681_063_793_47),
        (10000.0, 1.0000000092103405, 2.503_630_086_596_426_7),
        (10000.0, 1.0009214583192958, 250_247.746_712_017_86),
        (10000.0, 1.096478196143185, 23_917_933.551_541_254),
        (10000.0, 15.848931924611133, 254_676_969.156_637_3),
        (10000.0, 630.957344480193, 271_396_734.097_855_8),
        (10000.0, 6309.57344480193, 271_778_616.248_943_15),
        (10000.0, 9908.319448927676, 271_789_865.496_773_2),
        (10000.0, 10000.0, 271_789_970.123_211_7),
    ];

    #[test]
    fn g_matches_high_precision_reference() {
        for (q, x, expected) in G_REFERENCE {
            let value = g(x, q).unwrap();
            assert!((value - expected).abs() <= 1e-12 * expected, "q = {q}, x = {x}: {value} vs {expected}");
        }
    }

    #[test]
    fn envelope_holds_on_grid() {
        for q in [2.0f64, 10.0, 100.0] {
            for i in 0..40 {
                for j in 0..40 {
                    let u = (-3.0 + 6.0 * i as f64 / 39.0f64).exp();
                    let x = q.powf(j as f64 / 39.0);
                    let p = BellmanPoint::new(u, x / u).unwrap();
                    let b = b_upper(p, q).unwrap();
                    assert!(b >= 0.0 && b <= b_upper_envelope(p, q) * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let q = 10.0f64;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..30 {
            let u = rng.gen_range(-1.0f64..1.0).exp();
            let x = q.powf(rng.gen_range(0.1..0.9));
            let p = BellmanPoint::new(u, x / u).unwrap();
            let hess = b_hessian(p, q).unwrap();
            let step = 1e-4;
            let f = |du: f64, dv: f64| {
                b_upper(BellmanPoint::new(p.u * (1.0 + du), p.v * (1.0 + dv)).unwrap(), q).unwrap()
            };
            let (hu, hv) = (step * p.u, step * p.v);
            let f0 = f(0.0, 0.0);
            let fuu = (f(step, 0.0) - 2.0 * f0 + f(-step, 0.0)) / (hu * hu);
            let fvv = (f(0.0, step) - 2.0 * f0 + f(0.0, -step)) / (hv * hv);
            let fuv = (f(step, step) - f(step, -step) - f(-step, step) + f(-step, -step)) / (4.0 * hu * hv);
            let scale = hess[0][0].abs().max(hess[1][1].abs()).max(hess[0][1].abs());
            assert!((fuu - hess[0][0]).abs() < 1e-5 * scale);
            assert!((fvv - hess[1][1]).abs() < 1e-5 * scale);
            assert!((fuv - hess[0][1]).abs() < 1e-5 * scale);
        }
    }

    #[test]
    fn matrix_form_examples() {
        for q in [2.0f64, 10.0, 100.0] {
            for i in 0..=200 {
                let x = q.powf(i as f64 / 200.0);
                let m = matrix_form_check(x, q).unwrap();
                assert!(m.eigen_max <= 1e-8 * m.scale, "q = {q} x = {x}: {m:?}");
                assert!(m.det_residual <= 1e-8);
            }
            let at_one = phi_derivatives(1.0, q).unwrap();
            assert_eq!(at_one.phi, 0.0);
            assert!(2.0 * at_one.phi - 2.0 * at_one.d1 <= 0.0);
            assert!(matrix_form_check(0.5, q).is_err());
            assert!(matrix_form_check(2.0 * q, q).is_err());
        }
    }

    #[test]
    fn ode_residual_examples() {
        for q in [2.0f64, 10.0, 100.0] {
            for i in 0..=100 {
                let x = q.powf(i as f64 / 100.0).min(q * (1.0 - 1e-9));
                assert!(ode_residual(x, q).unwrap() <= 1e-8);
                let step = 1e-6 * x;
                if x + step < q * (1.0 - 1e-6) && x - step >= 1.0 {
                    let fd = (h(x + step, q).unwrap() - h(x - step, q).unwrap()) / (2.0 * step);
                    let dh = h_prime(x, q).unwrap();
                    assert!((fd - dh).abs() < 1e-5 * dh.abs().max(1.0), "q = {q} x = {x}");
                }
            }
            assert!(ode_residual(q, q).is_err());
        }
    }

    #[test]
    fn concavity_examples() {
        let q = 10.0;
        let x = BellmanPoint::new(1.5, 2.0).unwrap();
        let g0 = concavity_gain(x, x, x, q).unwrap();
        assert!(g0.gain.abs() <= 1e-12 * g0.scale);
        let xp = BellmanPoint::new(2.0, 2.0).unwrap();
        let xm = BellmanPoint::new(1.0, 2.0).unwrap();
        assert!(concavity_gain(x, xp, xm, q).unwrap().gain >= 0.0);
        let off = BellmanPoint::new(1.6, 2.0).unwrap();
        assert!(concavity_gain(off, xp, xm, q).is_err());
    }

    #[test]
    fn concavity_ratio_is_at_least_one_quarter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for q in [2.0, 10.0] {
            for _ in 0..2000 {
                let (x, xp, xm) = random_admissible_triple(&mut rng, q);
                let c = concavity_gain(x, xp, xm, q).unwrap();
                let r = concavity_ratio(x, xp, xm, q).unwrap();
                let dv = xp.v - xm.v;
                assert!(r >= 0.25 - 1e-9 * c.scale / (x.u * dv * dv), "{x:?} {xp:?} {xm:?} {r}");
                assert!(segment_containment(xp, xm, q));
            }
        }
    }

    #[test]
    fn null_direction_gain_tends_to_one_quarter() {
        // with u = 1 the null vector of the scaled matrix is a split direction (a₂₂, -a₁₂)
        let q = 10.0;
        let x = BellmanPoint::new(1.0, 3.0).unwrap();
        let d = phi_derivatives(x.x(), 4.0 * q).unwrap();
        let a12 = x.x() * d.d2;
        let a22 = d.d2 + 2.0;
        let norm = a12.hypot(a22);
        let (du, dv) = (a22 / norm, -a12 / norm);
        let mut ratios = Vec::new();
        for t in [1e-2, 3e-3, 1e-3] {
            let xp = BellmanPoint::new(x.u + t * du, x.v + t * dv).unwrap();
            let xm = BellmanPoint::new(x.u - t * du, x.v - t * dv).unwrap();
            ratios.push(concavity_ratio(x, xp, xm, q).unwrap());
        }
        assert!((ratios[2] - 0.25).abs() < 1e-3, "{ratios:?}");
        assert!(ratios.iter().all(|&r| r < 0.375));
    }

    #[test]
    fn segment_examples() {
        let p = BellmanPoint::new(2.0, 1.0).unwrap();
        assert!(segment_containment(p, p, 4.0));
        let (lo, hi) = segment_product_range(BellmanPoint::new(1.0, 3.0).unwrap(), BellmanPoint::new(3.0, 1.0).unwrap());
        assert_eq!(lo, 3.0);
        assert_eq!(hi, 4.0);
    }

    #[test]
    fn segment_extremum_exceeds_q_but_not_four_q() {
        for q in [2.0, 10.0] {
            let r = segment_extremum_search(q, 60);
            assert!(r > 1.0 && r <= 4.0);
            assert!(r <= (9.0 * q - 1.0) / (8.0 * q) + 1e-12);
            assert!(r >= 0.98 * (9.0 * q - 1.0) / (8.0 * q));
        }
    }
}
