//! Principal branch of the Lambert W function on `[-1/e, 0]`.

use std::f64::consts::E;

use crate::error::{domain, Result};

const INV_E: f64 = 1.0 / E;

/// Slack allowed below `-1/e` before an argument is rejected; values inside it map to `-1`.
pub const ENDPOINT_TOL: f64 = 1e-15;

/// `W₀(y)` for `-1/e ≤ y ≤ 0`, i.e. the root of `W e^W = y` in `[-1, 0]`.
pub fn lambert_w0(y: f64) -> Result<f64> {
    if y.is_nan() || !(-INV_E - ENDPOINT_TOL..=0.0).contains(&y) {
        return domain(format!("W0 is evaluated on [-1/e, 0], got {y}"));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y + INV_E <= ENDPOINT_TOL {
        return Ok(-1.0);
    }
    // distance to the branch point, computed without forming -1/e + y directly
    let p2 = 2.0 * E.mul_add(y, 1.0);
    if p2 <= 0.0 {
        return Ok(-1.0);
    }
    let p = p2.sqrt();
    if p < 1e-3 {
        return Ok(branch_series(p));
    }
    let mut w = if p < 0.6 {
        branch_series(p)
    } else {
        let l = y.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - y;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = (w - step).clamp(-1.0, 0.0);
        if (next - w).abs() <= 4.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE) {
            w = next;
            break;
        }
        w = next;
    }
    Ok(w)
}

/// Expansion of `W₀` about the branch point in `p = √(2(e·y + 1))`.
fn branch_series(p: f64) -> f64 {
    const C: [f64; 7] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    C.iter().rev().fold(0.0, |acc, c| acc.mul_add(p, *c))
}

/// `W₀` together with `y`, for callers that need `1 + W` to full relative precision near `-1/e`.
pub fn one_plus_w0(y: f64) -> Result<f64> {
    let w = lambert_w0(y)?;
    let p2 = 2.0 * E.mul_add(y, 1.0);
    if p2 > 0.0 && p2.sqrt() < 1e-3 {
        let p = p2.sqrt();
        return Ok(branch_series(p) + 1.0);
    }
    Ok(w + 1.0)
}
