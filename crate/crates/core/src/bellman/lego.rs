//! Four-variable Bellman functions composed from the candidate through the concave map
//! `Φ(x₁, x₂, x₃, x₀) = x₁ - x₂²/(x₃ + x₀)`.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use rand::Rng;

use super::candidate::{b_upper, random_admissible_triple, BellmanPoint};
use crate::error::{input, Result};

/// Default multiplier `a` in `F - f²/(v + a Q⁻² B^Q)`; with `B^Q ≤ eQ²v` it keeps `a Q⁻² B^Q ≤ v/4`.
pub const DEFAULT_LEGO_A: f64 = 1.0 / (4.0 * std::f64::consts::E);

/// `(F, f, u, v)` with `f² < F v` and `u, v > 0`; `1 ≤ uv ≤ Q` is checked per call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullPoint {
    pub big_f: f64,
    pub f: f64,
    pub u: f64,
    pub v: f64,
}

impl FullPoint {
    pub fn new(big_f: f64, f: f64, u: f64, v: f64) -> Result<Self> {
        if ![big_f, f, u, v].iter().all(|c| c.is_finite()) {
            return input("full point coordinates must be finite");
        }
        if !(u > 0.0 && v > 0.0 && big_f > 0.0) {
            return input(format!("full point needs F, u, v > 0, got F = {big_f}, u = {u}, v = {v}"));
        }
        if f * f >= big_f * v {
            return input(format!("full point needs f² < Fv, got f = {f}, F = {big_f}, v = {v}"));
        }
        Ok(Self { big_f, f, u, v })
    }

    pub fn uv(&self) -> BellmanPoint {
        BellmanPoint { u: self.u, v: self.v }
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        Self {
            big_f: 0.5 * (self.big_f + other.big_f),
            f: 0.5 * (self.f + other.f),
            u: 0.5 * (self.u + other.u),
            v: 0.5 * (self.v + other.v),
        }
    }
}

/// `(F, f, A, v)` with `f² ≤ F v`, `A ≥ 0`, `v > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestPoint {
    pub big_f: f64,
    pub f: f64,
    pub a: f64,
    pub v: f64,
}

impl TestPoint {
    pub fn new(big_f: f64, f: f64, a: f64, v: f64) -> Result<Self> {
        if !(v > 0.0 && a >= 0.0 && big_f >= 0.0) || ![big_f, f, a, v].iter().all(|c| c.is_finite()) {
            return input(format!("test point needs finite F, A >= 0 and v > 0, got ({big_f}, {f}, {a}, {v})"));
        }
        if f * f > big_f * v * (1.0 + 1e-12) {
            return input(format!("test point needs f² <= Fv, got f = {f}, F = {big_f}, v = {v}"));
        }
        Ok(Self { big_f, f, a, v })
    }
}

/// `Φ(x₁, x₂, x₃, x₀) = x₁ - x₂²/(x₃ + x₀)`.
pub fn phi_outer(x1: f64, x2: f64, x3: f64, x0: f64) -> f64 {
    x1 - x2 * x2 / (x3 + x0)
}

/// `F - f²/(v + a Q⁻² B^Q(u, v))`; lies in `[0, F]`.
pub fn big_bellman(x: FullPoint, q: f64, a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return input(format!("lego multiplier must be positive, got {a}"));
    }
    let b = b_upper(x.uv(), q).map_err(|e| crate::Error::Input(e.to_string()))?;
    Ok(phi_outer(x.big_f, x.f, x.v, a * b / (q * q)))
}

/// Largest eigenvalue of the central-difference Hessian of `Φ`, with the largest entry magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianSpectrum {
    pub eigen_max: f64,
    pub scale: f64,
}

/// Concavity of `Φ` at a point, read from a central-difference Hessian with relative step `1e-4`.
pub fn phi_concavity_check(x1: f64, x2: f64, x3: f64, x0: f64) -> Result<HessianSpectrum> {
    if !(x3 > 0.0 && x0 >= 0.0) || ![x1, x2, x3, x0].iter().all(|c| c.is_finite()) {
        return input(format!("Φ needs x₃ > 0 and x₀ >= 0, got ({x1}, {x2}, {x3}, {x0})"));
    }
    let p = Vector4::new(x1, x2, x3, x0);
    let f = |v: &Vector4<f64>| phi_outer(v[0], v[1], v[2], v[3]);
    let steps: Vec<f64> = (0..4)
        .map(|i| {
            let s = 1e-4 * p[i].abs().max(x3 + x0);
            // keep x₃ + x₀ positive under the perturbation
            if i >= 2 { s.min(0.25 * (x3 + x0)) } else { s }
        })
        .collect();
    let mut hess = Matrix4::zeros();
    for i in 0..4 {
        for j in i..4 {
            let val = if i == j {
                let mut up = p;
                let mut down = p;
                up[i] += steps[i];
                down[i] -= steps[i];
                (f(&up) - 2.0 * f(&p) + f(&down)) / (steps[i] * steps[i])
            } else {
                let corner = |si: f64, sj: f64| {
                    let mut c = p;
                    c[i] += si * steps[i];
                    c[j] += sj * steps[j];
                    f(&c)
                };
                (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                    / (4.0 * steps[i] * steps[j])
            };
            hess[(i, j)] = val;
            hess[(j, i)] = val;
        }
    }
    let scale = hess.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eig = SymmetricEigen::new(hess);
    Ok(HessianSpectrum {
        eigen_max: eig.eigenvalues.max(),
        scale,
    })
}

/// Observed gain constant of one split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegoGain {
    /// `numerator / denominator`, or `+∞` when the denominator vanishes.
    pub ratio: f64,
    /// `𝓑(X) - ½(𝓑(X₊) + 𝓑(X₋))` for `𝓑 = 𝓑^{4Q}` with the default multiplier.
    pub numerator: f64,
    /// `Q⁻² (f²/v²) u (v₊ - v₋)²`.
    pub denominator: f64,
    /// Set with the sentinel when the numerator is zero as well.
    pub zero_numerator: bool,
}

fn check_lego_point(x: &FullPoint, q: f64, name: &str) -> Result<()> {
    let p = x.u * x.v;
    if !(p >= 1.0 - 1e-12 && p <= q * (1.0 + 1e-12)) {
        return input(format!("{name} has uv = {p}, outside [1, {q}]"));
    }
    Ok(())
}

/// Discrete concavity gain of `𝓑^{4Q}` on a split of a point with `1 ≤ uv ≤ Q`.
pub fn discrete_lego_gain(x: FullPoint, xp: FullPoint, xm: FullPoint, q: f64) -> Result<LegoGain> {
    if !(q > 1.0) {
        return input(format!("Q must exceed 1, got {q}"));
    }
    check_lego_point(&x, q, "X")?;
    check_lego_point(&xp, q, "X+")?;
    check_lego_point(&xm, q, "X-")?;
    let m = xp.midpoint(&xm);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    if !(close(m.big_f, x.big_f) && close(m.f, x.f) && close(m.u, x.u) && close(m.v, x.v)) {
        return input("X is not the midpoint of X+ and X-");
    }
    let q4 = 4.0 * q;
    let bell = |p: FullPoint| big_bellman(p, q4, DEFAULT_LEGO_A);
    let numerator = bell(x)? - 0.5 * (bell(xp)? + bell(xm)?);
    let dv = xp.v - xm.v;
    let denominator = (x.f * x.f) / (x.v * x.v) * x.u * dv * dv / (q * q);
    let (ratio, zero_numerator) = if denominator == 0.0 {
        (f64::INFINITY, numerator.abs() <= 1e-15 * x.big_f)
    } else {
        (numerator / denominator, false)
    };
    Ok(LegoGain {
        ratio,
        numerator,
        denominator,
        zero_numerator,
    })
}

/// `F - f²/(v + A/q²)`.
pub fn test_bellman(y: TestPoint, q: f64) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() {
        return input(format!("q must be positive, got {q}"));
    }
    Ok(phi_outer(y.big_f, y.f, y.v, y.a / (q * q)))
}

/// A split `X = (X₊ + X₋)/2` with all three points admissible for [`discrete_lego_gain`].
pub fn random_lego_triple(rng: &mut impl Rng, q: f64) -> (FullPoint, FullPoint, FullPoint) {
    loop {
        let (_, p, m) = random_admissible_triple(rng, q);
        let end = |rng: &mut dyn rand::RngCore, pt: BellmanPoint| {
            let f = rng.gen_range(-2.0f64..2.0);
            let slack = rng.gen_range(-6.0f64..2.0).exp();
            FullPoint {
                big_f: f * f / pt.v * (1.0 + slack) + 1e-12,
                f,
                u: pt.u,
                v: pt.v,
            }
        };
        let xp = end(rng, p);
        let xm = end(rng, m);
        let x = xp.midpoint(&xm);
        if x.f * x.f < x.big_f * x.v {
            return (x, xp, xm);
        }
    }
}
