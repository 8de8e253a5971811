//! The dyadic square function and the weighted quantities built from it.

use std::collections::BTreeMap;

use crate::dyadic::{build_average_tree, AverageTree, DyadicInterval, StepFunction};
use crate::error::{input, Result};
use crate::weights::Weight;

/// `Sf(x) = (Σ_{I ∋ x} (Δ_I f)²)^{1/2}` over all non-leaf intervals of the lattice.
pub fn square_function(f: &StepFunction) -> Result<StepFunction> {
    if f.depth() == 0 {
        return input("square function needs depth >= 1 (no Haar scales at depth 0)");
    }
    let tree = build_average_tree(f);
    let sq = squared_sums_down(&tree);
    StepFunction::new(f.depth(), sq.into_iter().map(f64::sqrt).collect())
}

/// For every leaf cell, `Σ_{I ∋ cell} (Δ_I f)²`.
fn squared_sums_down(tree: &AverageTree) -> Vec<f64> {
    let depth = tree.depth();
    let mut acc = vec![0.0f64];
    for level in 0..depth {
        let child = tree.level(level + 1);
        let mut next = Vec::with_capacity(2 * acc.len());
        for (k, &a) in acc.iter().enumerate() {
            let d = child[2 * k] - child[2 * k + 1];
            let s = a + d * d;
            next.push(s);
            next.push(s);
        }
        acc = next;
    }
    acc
}

/// `S_{w⁻¹} f = S(w⁻¹ f)`.
pub fn apply_s_winv(f: &StepFunction, w: &Weight) -> Result<StepFunction> {
    square_function(&f.mul(w.winv())?)
}

/// For every non-leaf `J`, `Σ_{I ∈ D(J), level(I) < n} term(I)`; indexed `[level][index]`.
fn subtree_sums(depth: u32, mut term: impl FnMut(DyadicInterval) -> f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new(); depth as usize];
    for level in (0..depth).rev() {
        let width = 1usize << level;
        let mut row = Vec::with_capacity(width);
        for k in 0..width {
            let i = DyadicInterval::new(level, k as u32).expect("in range");
            let below = if level + 1 < depth {
                let next = &out[level as usize + 1];
                next[2 * k] + next[2 * k + 1]
            } else {
                0.0
            };
            row.push(term(i) + below);
        }
        out[level as usize] = row;
    }
    out
}

fn check_non_leaf(depth: u32, j: DyadicInterval) -> Result<()> {
    if j.level() >= depth {
        return input(format!("{j} is a leaf at depth {depth}"));
    }
    Ok(())
}

/// `γ_I = (Δ_I w⁻¹)² <w>_I`.
pub fn gamma(w: &Weight, i: DyadicInterval) -> f64 {
    let d = w.tree_winv().delta(i);
    d * d * w.tree_w().get(i)
}

/// Left side of the testing inequality: `(1/|J|) Σ_{I ∈ D(J)} (Δ_I w⁻¹)² <w>_I |I|`.
pub fn testing_sum(w: &Weight, j: DyadicInterval) -> Result<f64> {
    check_non_leaf(w.depth(), j)?;
    let n = w.depth();
    let mut total = 0.0;
    for level in j.level()..n {
        let shift = level - j.level();
        let first = (j.index() as u64) << shift;
        for k in first..first + (1u64 << shift) {
            let i = DyadicInterval::new(level, k as u32)?;
            total += gamma(w, i) * i.length();
        }
    }
    Ok(total / j.length())
}

/// `testing_sum(w, J)` for every non-leaf `J`, indexed `[level][index]`.
pub fn testing_sums(w: &Weight) -> Vec<Vec<f64>> {
    let mut sums = subtree_sums(w.depth(), |i| gamma(w, i) * i.length());
    for (level, row) in sums.iter_mut().enumerate() {
        let inv_len = (level as f64).exp2();
        row.iter_mut().for_each(|s| *s *= inv_len);
    }
    sums
}

/// Smallest `q` with `testing_sum(w, J) <= q² <w⁻¹>_J` for every non-leaf `J`.
pub fn testing_constant_q(w: &Weight) -> f64 {
    let sums = testing_sums(w);
    let mut worst = 0.0f64;
    for (level, row) in sums.iter().enumerate() {
        let v = w.tree_winv().level(level as u32);
        for (s, vj) in row.iter().zip(v) {
            worst = worst.max(s / vj);
        }
    }
    worst.sqrt()
}

/// The `L²(w⁻¹ dx)`-normalised Haar function on `I` and its relation to the unweighted one.
///
/// `h_I = alpha · h^μ + beta · 1_I / √|I|` with `μ = w⁻¹ dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedHaar {
    pub interval: DyadicInterval,
    pub alpha: f64,
    pub beta: f64,
    /// Values of `h^μ` on `I+` and `I-`.
    pub values: (f64, f64),
}

/// Weighted Haar function of `I`, solved from μ-orthogonality to constants and μ-normalisation.
pub fn weighted_haar(w: &Weight, i: DyadicInterval) -> Result<WeightedHaar> {
    check_non_leaf(w.depth(), i)?;
    let a = w.tree_winv().get(i.left());
    let b = w.tree_winv().get(i.right());
    let len = i.length();
    // p μ(I+) + m μ(I-) = 0 and p² μ(I+) + m² μ(I-) = 1, with μ(I±) = <w⁻¹>_{I±} |I| / 2
    let plus = (2.0 * b / (a * (a + b) * len)).sqrt();
    let minus = -(2.0 * a / (b * (a + b) * len)).sqrt();
    let root_len = len.sqrt();
    let alpha = 2.0 / (root_len * (plus - minus));
    let beta = -0.5 * alpha * (plus + minus) * root_len;
    Ok(WeightedHaar {
        interval: i,
        alpha,
        beta,
        values: (plus, minus),
    })
}

/// Per-interval pieces of the strong sum for a test function `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaReport {
    pub interval: DyadicInterval,
    pub sigma: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// `γ_I` for every non-leaf `I ⊆ J`.
    pub gamma: BTreeMap<DyadicInterval, f64>,
}

/// One row of [`sigma_profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaRow {
    pub interval: DyadicInterval,
    pub sigma: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// `<φ² w⁻¹>_J`, the normalised `L²(w⁻¹)` energy of `φ` on `J`.
    pub energy: f64,
}

struct SigmaTerms {
    sigma: f64,
    sigma1: f64,
    sigma2: f64,
}

/// Contributions of one interval `I` to `Σ`, `Σ₁`, `Σ₂` (before the `1/|J|` normalisation).
///
/// With `g = φ w⁻¹`, `(Δ_I g)² |I| = 4 (g, h_I)²` and `(g, h_I) = α (φ, h^μ)_μ + β <g>_I √|I|`.
fn sigma_terms(g_tree: &AverageTree, w: &Weight, i: DyadicInterval) -> SigmaTerms {
    let len = i.length();
    let u = w.tree_w().get(i);
    let d = g_tree.delta(i);
    let haar = weighted_haar(w, i).expect("non-leaf interval");
    let (p, m) = haar.values;
    let half = 0.5 * len;
    let proj = p * g_tree.get(i.left()) * half + m * g_tree.get(i.right()) * half;
    let weighted_avg = g_tree.get(i) / w.tree_winv().get(i);
    SigmaTerms {
        sigma: d * d * u * len,
        sigma1: 4.0 * haar.alpha * haar.alpha * proj * proj * u,
        sigma2: weighted_avg * weighted_avg * gamma(w, i) * len,
    }
}

/// `Σ = (1/|J|) Σ_{I ∈ D(J)} (Δ_I(φ w⁻¹))² <w>_I |I|` split into the weighted-Haar part `Σ₁`
/// and the average part `Σ₂`; `Σ ≤ 2(Σ₁ + Σ₂)`.
pub fn sigma_decomposition(phi: &StepFunction, w: &Weight, j: DyadicInterval) -> Result<SigmaReport> {
    check_non_leaf(w.depth(), j)?;
    let g = phi.mul(w.winv())?;
    let g_tree = build_average_tree(&g);
    let n = w.depth();
    let (mut sigma, mut sigma1, mut sigma2) = (0.0, 0.0, 0.0);
    let mut gammas = BTreeMap::new();
    for level in j.level()..n {
        let shift = level - j.level();
        let first = j.index() << shift;
        for k in first..first + (1u32 << shift) {
            let i = DyadicInterval::new(level, k)?;
            let t = sigma_terms(&g_tree, w, i);
            sigma += t.sigma;
            sigma1 += t.sigma1;
            sigma2 += t.sigma2;
            gammas.insert(i, gamma(w, i));
        }
    }
    let inv = 1.0 / j.length();
    Ok(SigmaReport {
        interval: j,
        sigma: sigma * inv,
        sigma1: sigma1 * inv,
        sigma2: sigma2 * inv,
        gamma: gammas,
    })
}

/// `Σ`, `Σ₁`, `Σ₂` and the energy `<φ² w⁻¹>_J` for every non-leaf `J` in one bottom-up pass.
pub fn sigma_profile(phi: &StepFunction, w: &Weight) -> Result<Vec<SigmaRow>> {
    let n = w.depth();
    if n == 0 {
        return input("sigma profile needs depth >= 1");
    }
    let g = phi.mul(w.winv())?;
    let g_tree = build_average_tree(&g);
    let energy_tree = build_average_tree(&phi.zip_with(w.winv(), |p, v| p * p * v)?);
    let mut s = subtree_sums(n, |_| 0.0);
    let mut s1 = s.clone();
    let mut s2 = s.clone();
    for level in (0..n).rev() {
        for k in 0..(1usize << level) {
            let i = DyadicInterval::new(level, k as u32)?;
            let t = sigma_terms(&g_tree, w, i);
            let (b, b1, b2) = if level + 1 < n {
                let l = level as usize + 1;
                (
                    s[l][2 * k] + s[l][2 * k + 1],
                    s1[l][2 * k] + s1[l][2 * k + 1],
                    s2[l][2 * k] + s2[l][2 * k + 1],
                )
            } else {
                (0.0, 0.0, 0.0)
            };
            s[level as usize][k] = t.sigma + b;
            s1[level as usize][k] = t.sigma1 + b1;
            s2[level as usize][k] = t.sigma2 + b2;
        }
    }
    let mut rows = Vec::with_capacity((1usize << n) - 1);
    for level in 0..n {
        let inv = (level as f64).exp2();
        for k in 0..(1usize << level) {
            let i = DyadicInterval::new(level, k as u32)?;
            rows.push(SigmaRow {
                interval: i,
                sigma: s[level as usize][k] * inv,
                sigma1: s1[level as usize][k] * inv,
                sigma2: s2[level as usize][k] * inv,
                energy: energy_tree.get(i),
            });
        }
    }
    Ok(rows)
}

/// `Mf(x) = max_{I ∋ x} <|f|>_I` over all levels of the lattice.
pub fn dyadic_maximal(f: &StepFunction) -> StepFunction {
    let abs = f.map(f64::abs).expect("finite input stays finite");
    let tree = build_average_tree(&abs);
    let mut acc = vec![tree.root()];
    for level in 1..=f.depth() {
        let row = tree.level(level);
        acc = row
            .iter()
            .enumerate()
            .map(|(k, &a)| a.max(acc[k / 2]))
            .collect();
    }
    StepFunction::new(f.depth(), acc).expect("averages of finite values are finite")
}

/// `w{|g| > λ}`.
pub fn level_set_measure(g: &StepFunction, w: &Weight, lambda: f64) -> Result<f64> {
    if g.depth() != w.depth() {
        return input("depth mismatch between function and weight");
    }
    let h = g.cell_length();
    Ok(g
        .cells()
        .iter()
        .zip(w.w().cells())
        .filter(|(v, _)| v.abs() > lambda)
        .fold(0.0, |acc, (_, wk)| acc + wk * h))
}

/// `‖g‖_{L^{2,∞}(w)} = sup_λ λ · w{|g| > λ}^{1/2}`.
///
/// On a step function the supremum is the limit just below one of the jump values `λ_j`,
/// where the level set is `{|g| ≥ λ_j}`.
pub fn weak_norm(g: &StepFunction, w: &Weight) -> Result<f64> {
    if g.depth() != w.depth() {
        return input("depth mismatch between function and weight");
    }
    let h = g.cell_length();
    let mut cells: Vec<(f64, f64)> = g
        .cells()
        .iter()
        .zip(w.w().cells())
        .map(|(v, wk)| (v.abs(), wk * h))
        .collect();
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut mass = 0.0;
    let mut k = 0;
    while k < cells.len() {
        let lambda = cells[k].0;
        if lambda == 0.0 {
            break;
        }
        while k < cells.len() && cells[k].0 == lambda {
            mass += cells[k].1;
            k += 1;
        }
        best = best.max(lambda * mass.sqrt());
    }
    Ok(best)
}

/// `‖f‖_{L²(w)}`.
pub fn lp2_norm(f: &StepFunction, w: &Weight) -> Result<f64> {
    Ok(f.zip_with(w.w(), |a, b| a * a * b)?.integral().sqrt())
}
