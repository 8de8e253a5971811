//! Value iteration for the finite-depth extremal problem
//! `B(u, v) = sup over splits of u (v₊ - v₋)² + ½(B(u₊, v₊) + B(u₋, v₋))` on `1 ≤ uv ≤ Q`.
//!
//! Nodes sit on a square grid in `(ln u, ln v)` with equal spacing `δ` on both axes and
//! `ln Q = m δ`, so the curves `uv = 1` and `uv = Q` are the anti-diagonals `i + j = s₀` and
//! `i + j = s₀ + m`. Values between nodes are interpolated linearly on the two triangles of each
//! cell cut along the anti-diagonal, which keeps the interpolant inside the band.

use super::candidate::{b_upper, BellmanPoint};
use crate::error::{Error, Result};

/// Resolution and split sampling of the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Nodes per axis.
    pub resolution: usize,
    /// Half-length in `ln u` of the stretch where the band has full width.
    pub reach: f64,
    /// Number of nonzero magnitudes `a` in `u± = u(1 ± a)`.
    pub a_count: usize,
    /// Number of nonzero magnitudes `|b|` in `v± = v(1 ± b)`; both signs are used.
    pub b_count: usize,
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            resolution: 128,
            reach: 3.0,
            a_count: 64,
            b_count: 64,
            a_range: (1e-3, 0.99),
            b_range: (1e-3, 0.98),
        }
    }
}

/// Values of the `n`-step solution on the band grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BellmanGrid {
    q: f64,
    resolution: usize,
    delta: f64,
    s0: usize,
    m: usize,
    origin: f64,
    values: Vec<f64>,
    iterations: usize,
    increments: Vec<f64>,
    decrements: Vec<f64>,
}

impl BellmanGrid {
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Log spacing `δ`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Width of the band in grid steps, `ln Q / δ`.
    pub fn band_width(&self) -> usize {
        self.m
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Largest pointwise change made by each iteration.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Largest pointwise decrease made by each iteration; zero when the iterates are monotone.
    pub fn decrements(&self) -> &[f64] {
        &self.decrements
    }

    pub fn last_increment(&self) -> f64 {
        self.increments.last().copied().unwrap_or(0.0)
    }

    pub fn u(&self, i: usize) -> f64 {
        (self.origin + i as f64 * self.delta).exp()
    }

    pub fn v(&self, j: usize) -> f64 {
        (self.origin + j as f64 * self.delta).exp()
    }

    /// `Some(k)` with `uv = e^{kδ}` when the node lies in `1 ≤ uv ≤ Q`.
    pub fn band_level(&self, i: usize, j: usize) -> Option<usize> {
        let s = i + j;
        (s >= self.s0 && s <= self.s0 + self.m).then(|| s - self.s0)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.resolution + j]
    }

    /// All band nodes as `(i, j, u, v, B)`.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, f64, f64, f64)> + '_ {
        let r = self.resolution;
        (0..r).flat_map(move |i| {
            (0..r)
                .filter(move |&j| self.band_level(i, j).is_some())
                .map(move |j| (i, j, self.u(i), self.v(j), self.value(i, j)))
        })
    }

    /// `max B/v` over the band nodes.
    pub fn max_ratio(&self) -> f64 {
        self.nodes().map(|(_, _, _, v, b)| b / v).fold(0.0, f64::max)
    }

    /// Values of `B/v` at the band nodes.
    pub fn ratio_grid(&self) -> Vec<(usize, usize, f64)> {
        self.nodes().map(|(i, j, _, v, b)| (i, j, b / v)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    plus: (f64, f64),
    minus: (f64, f64),
    /// `4b²`, so the running gain at `(u, v)` is `coef · u v²`.
    coef: f64,
}

/// A split as two three-point interpolation stencils, in grid-index offsets from the node.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    coef: f64,
    taps: [(isize, isize, f64); 6],
}

impl Stencil {
    fn new(sp: &Split) -> Self {
        let mut taps = [(0, 0, 0.0); 6];
        for (e, (di, dj)) in [sp.plus, sp.minus].into_iter().enumerate() {
            let (bi, bj) = (di.floor(), dj.floor());
            let (fi, fj) = (di - bi, dj - bj);
            let (bi, bj) = (bi as isize, bj as isize);
            let corners = if fi + fj <= 1.0 {
                [(bi, bj, 1.0 - fi - fj), (bi + 1, bj, fi), (bi, bj + 1, fj)]
            } else {
                [(bi + 1, bj + 1, fi + fj - 1.0), (bi, bj + 1, 1.0 - fi), (bi + 1, bj, 1.0 - fj)]
            };
            for (k, (ci, cj, w)) in corners.into_iter().enumerate() {
                taps[3 * e + k] = (ci, cj, 0.5 * w);
            }
        }
        Self { coef: sp.coef, taps }
    }

    fn extent(&self) -> isize {
        self.taps.iter().map(|t| t.0.abs().max(t.1.abs())).max().unwrap_or(0)
    }
}

/// The stored grid surrounded by a margin of `pad` nodes on every side, laid out by
/// anti-diagonal: node `(i, j)` of the padded square sits at `(i + j) · side + i`.
///
/// Margin values come from the scaling symmetry `B(λu, v/λ) = B(u, v)/λ` of the problem: a
/// margin node is slid along its anti-diagonal onto the nearest stored node. Margin nodes
/// outside the band are zero.
struct Extension {
    pad: usize,
    side: usize,
    sources: Vec<Option<(usize, f64)>>,
}

impl Extension {
    fn new(r: usize, pad: usize, s0: usize, m: usize, delta: f64) -> Self {
        let side = r + 2 * pad;
        let top = r as isize - 1;
        let mut sources = vec![None; (2 * side - 1) * side];
        for ei in 0..side {
            for ej in 0..side {
                let gi = ei as isize - pad as isize;
                let gj = ej as isize - pad as isize;
                let level = gi + gj - s0 as isize;
                if level < 0 || level > m as isize {
                    continue;
                }
                let (lo, hi) = ((gi - top).max(-gj), gi.min(top - gj));
                let t = 0.clamp(lo, hi);
                let src = ((gi - t) * (top + 1) + gj + t) as usize;
                sources[(ei + ej) * side + ei] = Some((src, (-(t as f64) * delta).exp()));
            }
        }
        Self { pad, side, sources }
    }

    fn fill(&self, values: &[f64], ext: &mut [f64]) {
        for (x, s) in ext.iter_mut().zip(&self.sources) {
            *x = s.map_or(0.0, |(k, f)| f * values[k]);
        }
    }

    /// Position of stored node `(i, j)`.
    fn locate(&self, i: usize, j: usize) -> usize {
        (i + j + 2 * self.pad) * self.side + i + self.pad
    }

    /// Position shift of the grid offset `(di, dj)`.
    fn shift(&self, di: isize, dj: isize) -> isize {
        (di + dj) * self.side as isize + di
    }
}

fn log_spaced(count: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

fn check_spec(q: f64, spec: &GridSpec) -> Result<()> {
    let bad = |msg: String| Err(Error::Config(msg));
    if !(q > 1.0) || !q.is_finite() {
        return bad(format!("Q must be a finite number > 1, got {q}"));
    }
    if spec.resolution < 8 {
        return bad(format!("grid resolution must be at least 8, got {}", spec.resolution));
    }
    if !(spec.reach > 0.0) || !spec.reach.is_finite() {
        return bad(format!("reach must be positive, got {}", spec.reach));
    }
    if spec.a_count == 0 || spec.b_count == 0 {
        return bad("split counts must be positive".into());
    }
    for (name, (lo, hi)) in [("a", spec.a_range), ("b", spec.b_range)] {
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return bad(format!("{name} range must satisfy 0 < lo <= hi < 1, got ({lo}, {hi})"));
        }
    }
    Ok(())
}

/// Runs `iterations` rounds of value iteration from `B⁽⁰⁾ = 0`.
pub fn dp_bellman(q: f64, iterations: usize, spec: &GridSpec) -> Result<BellmanGrid> {
    check_spec(q, spec)?;
    let r = spec.resolution;
    let ln_q = q.ln();
    let delta0 = (ln_q + 2.0 * spec.reach) / (r - 1) as f64;
    let m = 2 * ((ln_q / (2.0 * delta0)).round() as usize).max(1);
    if m > 2 * r - 2 {
        return Err(Error::Config(format!("a {r}-node grid cannot cover 1 <= uv <= {q}")));
    }
    let delta = ln_q / m as f64;
    let s0 = (2 * r - 2 - m) / 2;
    let origin = -(s0 as f64) * delta / 2.0;

    let mut a_values = vec![0.0];
    a_values.extend(log_spaced(spec.a_count, spec.a_range));
    let mut b_values = vec![0.0];
    for b in log_spaced(spec.b_count, spec.b_range) {
        b_values.push(b);
        b_values.push(-b);
    }
    let mut splits = Vec::new();
    for &a in &a_values {
        for &b in &b_values {
            if a == 0.0 && b == 0.0 {
                continue;
            }
            splits.push(Split {
                plus: ((1.0 + a).ln() / delta, (1.0 + b).ln() / delta),
                minus: ((1.0 - a).ln() / delta, (1.0 - b).ln() / delta),
                coef: 4.0 * b * b,
            });
        }
    }
    // admissible splits for each band level: both endpoints keep 0 ≤ level ≤ m
    let tol = 1e-9;
    let by_level: Vec<Vec<Stencil>> = (0..=m)
        .map(|level| {
            let s = level as f64;
            splits
                .iter()
                .filter(|sp| {
                    let lp = s + sp.plus.0 + sp.plus.1;
                    let lm = s + sp.minus.0 + sp.minus.1;
                    lp >= -tol && lp <= m as f64 + tol && lm >= -tol && lm <= m as f64 + tol
                })
                .map(Stencil::new)
                .collect()
        })
        .collect();

    let mut grid = BellmanGrid {
        q,
        resolution: r,
        delta,
        s0,
        m,
        origin,
        values: vec![0.0; r * r],
        iterations: 0,
        increments: Vec::with_capacity(iterations),
        decrements: Vec::with_capacity(iterations),
    };
    let pad = by_level.iter().flatten().map(Stencil::extent).max().unwrap_or(0) as usize + 1;
    let extension = Extension::new(r, pad, s0, m, delta);
    let u: Vec<f64> = (0..r).map(|i| grid.u(i)).collect();
    let v_sq: Vec<f64> = (0..r).map(|j| grid.v(j).powi(2)).collect();
    let mut ext = vec![0.0; extension.sources.len()];
    let mut next = grid.values.clone();
    let mut best = Vec::with_capacity(r);
    let mut weight = Vec::with_capacity(r);
    let mut cand = Vec::with_capacity(r);
    for _ in 0..iterations {
        extension.fill(&grid.values, &mut ext);
        next.copy_from_slice(&grid.values);
        for (level, stencils) in by_level.iter().enumerate().skip(1) {
            let s = s0 + level;
            let first = s.saturating_sub(r - 1);
            let last = s.min(r - 1);
            best.clear();
            best.resize(last + 1 - first, f64::NEG_INFINITY);
            weight.clear();
            weight.extend((first..=last).map(|i| u[i] * v_sq[s - i]));
            let start = extension.locate(first, s - first);
            let n = best.len();
            for st in stencils {
                cand.clear();
                cand.extend(weight.iter().map(|wt| st.coef * wt));
                for (di, dj, w) in st.taps {
                    let o = (start as isize + extension.shift(di, dj)) as usize;
                    for (c, e) in cand.iter_mut().zip(&ext[o..o + n]) {
                        *c += w * e;
                    }
                }
                for (b, c) in best.iter_mut().zip(&cand) {
                    *b = b.max(*c);
                }
            }
            for (k, b) in best.iter().enumerate() {
                if b.is_finite() {
                    let i = first + k;
                    next[i * r + s - i] = *b;
                }
            }
        }
        let (up, down) = next
            .iter()
            .zip(&grid.values)
            .fold((0.0f64, 0.0f64), |(up, down), (a, b)| (up.max(a - b), down.max(b - a)));
        std::mem::swap(&mut grid.values, &mut next);
        grid.iterations += 1;
        grid.increments.push(up);
        grid.decrements.push(down);
    }
    Ok(grid)
}

#[cfg(test)]
/// Piecewise-linear interpolation on the triangles `{fi + fj ≤ 1}` and `{fi + fj > 1}` of a cell.
fn interpolate(values: &[f64], r: usize, p: f64, q: f64) -> f64 {
    let i0 = (p.floor() as usize).min(r - 2);
    let j0 = (q.floor() as usize).min(r - 2);
    let fi = p - i0 as f64;
    let fj = q - j0 as f64;
    let at = |i: usize, j: usize| values[i * r + j];
    if fi + fj <= 1.0 {
        let b00 = at(i0, j0);
        b00 + fi * (at(i0 + 1, j0) - b00) + fj * (at(i0, j0 + 1) - b00)
    } else {
        let b11 = at(i0 + 1, j0 + 1);
        b11 + (1.0 - fi) * (at(i0, j0 + 1) - b11) + (1.0 - fj) * (at(i0 + 1, j0) - b11)
    }
}

/// `max B⁽ⁿ⁾ / ((8/3) B^{4Q})` over band nodes off the boundary `uv = 1`.
pub fn supersolution_ratio(grid: &BellmanGrid) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, j, u, v, b) in grid.nodes() {
        if grid.band_level(i, j) == Some(0) {
            continue;
        }
        let bound = 8.0 / 3.0 * b_upper(BellmanPoint { u, v }, 4.0 * grid.q())?;
        worst = worst.max(b / bound);
    }
    Ok(worst)
}
