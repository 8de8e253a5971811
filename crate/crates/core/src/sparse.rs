//! Stopping-time sparse families, the sparse square function and average-level slicing.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::dyadic::{build_average_tree, AverageTree, DyadicInterval, StepFunction};
use crate::error::{input, Result};
use crate::operators::square_function;

/// A family of dyadic intervals organised in stopping generations.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFamily {
    root: DyadicInterval,
    epsilon: f64,
    generations: Vec<Vec<DyadicInterval>>,
    stopping_constant: f64,
}

impl SparseFamily {
    /// Builds a family from explicit generations, checking the structural invariants only.
    ///
    /// Generation 0 must be `{root}`, each later interval must sit strictly inside an interval of
    /// the previous generation, and intervals within one generation must be disjoint.
    /// Sparseness itself is not required here; see [`verify_sparseness`].
    pub fn from_generations(
        root: DyadicInterval,
        epsilon: f64,
        stopping_constant: f64,
        mut generations: Vec<Vec<DyadicInterval>>,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return input(format!("epsilon must lie in (0, 1), got {epsilon}"));
        }
        if !(stopping_constant > 0.0) || !stopping_constant.is_finite() {
            return input(format!("stopping constant must be positive and finite, got {stopping_constant}"));
        }
        if generations.first().map(|g| g.as_slice()) != Some(&[root][..]) {
            return input("generation 0 must consist of the root alone");
        }
        for k in 1..generations.len() {
            generations[k].sort();
            let gen = &generations[k];
            if gen.windows(2).any(|p| p[0] == p[1] || p[1].is_within(&p[0]) || p[0].is_within(&p[1])) {
                return input(format!("generation {k} has overlapping intervals"));
            }
            let prev: HashSet<_> = generations[k - 1].iter().copied().collect();
            for i in gen {
                if find_ancestor_in(i, &prev).is_none() {
                    return input(format!("{i} in generation {k} is not inside generation {}", k - 1));
                }
            }
        }
        while generations.len() > 1 && generations.last().is_some_and(|g| g.is_empty()) {
            generations.pop();
        }
        Ok(Self {
            root,
            epsilon,
            generations,
            stopping_constant,
        })
    }

    pub fn root(&self) -> DyadicInterval {
        self.root
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn stopping_constant(&self) -> f64 {
        self.stopping_constant
    }

    pub fn generations(&self) -> &[Vec<DyadicInterval>] {
        &self.generations
    }

    /// All intervals, generation by generation.
    pub fn intervals(&self) -> impl Iterator<Item = DyadicInterval> + '_ {
        self.generations.iter().flatten().copied()
    }

    pub fn len(&self) -> usize {
        self.generations.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: DyadicInterval) -> bool {
        self.generations.iter().any(|g| g.binary_search(&i).is_ok())
    }

    /// Deepest level used by any interval.
    pub fn max_level(&self) -> u32 {
        self.intervals().map(|i| i.level()).max().unwrap_or(0)
    }
}

/// The nearest strict ancestor of `i` lying in `set`.
fn find_ancestor_in(i: &DyadicInterval, set: &HashSet<DyadicInterval>) -> Option<DyadicInterval> {
    let mut cur = i.parent();
    while let Some(p) = cur {
        if set.contains(&p) {
            return Some(p);
        }
        cur = p.parent();
    }
    None
}

/// Stopping-time family of `phi` under the root with `C = 100 · a_weak / ε`.
///
/// Below each selected `I`, the next generation consists of the maximal strict subintervals
/// `Q` for which `S_Q^I φ = (Σ_{Q ⊆ J ⊆ I, J non-leaf} (Δ_J φ)²)^{1/2}` exceeds `C <|φ|>_I`.
pub fn extract_sparse(phi: &StepFunction, epsilon: f64, a_weak: f64) -> Result<SparseFamily> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return input(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    if !(a_weak > 0.0) || !a_weak.is_finite() {
        return input(format!("a_weak must be positive and finite, got {a_weak}"));
    }
    if phi.is_zero() {
        return input("phi vanishes identically; the stopping criterion is degenerate");
    }
    let c = 100.0 * a_weak / epsilon;
    let depth = phi.depth();
    let tree = build_average_tree(phi);
    let abs_tree = build_average_tree(&phi.map(f64::abs)?);

    let mut generations = vec![vec![DyadicInterval::ROOT]];
    loop {
        let mut next = Vec::new();
        for &i in generations.last().expect("non-empty") {
            stop_below(&tree, depth, i, c * abs_tree.get(i), &mut next);
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        generations.push(next);
    }
    Ok(SparseFamily {
        root: DyadicInterval::ROOT,
        epsilon,
        generations,
        stopping_constant: c,
    })
}

fn stop_below(tree: &AverageTree, depth: u32, i: DyadicInterval, threshold: f64, out: &mut Vec<DyadicInterval>) {
    if i.level() >= depth {
        return;
    }
    let limit = threshold * threshold;
    let d = tree.delta(i);
    let mut stack = vec![(i.left(), d * d), (i.right(), d * d)];
    while let Some((q, above)) = stack.pop() {
        if q.level() >= depth {
            continue;
        }
        let d = tree.delta(q);
        let acc = above + d * d;
        if acc > limit {
            out.push(q);
        } else {
            stack.push((q.right(), acc));
            stack.push((q.left(), acc));
        }
    }
}

/// Outcome of a sparseness audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsenessAudit {
    pub passed: bool,
    pub worst_ratio: f64,
    pub worst_interval: DyadicInterval,
}

/// `max_J (Σ_{I ⊊ J, I ∈ family} |I|) / |J|` over the family, compared with `ε`.
pub fn verify_sparseness(family: &SparseFamily) -> SparsenessAudit {
    let mut inside: HashMap<DyadicInterval, f64> = HashMap::new();
    let gens = family.generations();
    for k in (0..gens.len()).rev() {
        let parents: HashSet<_> = if k > 0 { gens[k - 1].iter().copied().collect() } else { HashSet::new() };
        for &i in &gens[k] {
            let total = i.length() + inside.get(&i).copied().unwrap_or(0.0);
            if let Some(p) = find_ancestor_in(&i, &parents) {
                *inside.entry(p).or_insert(0.0) += total;
            }
        }
    }
    let mut worst = (0.0, family.root());
    for i in family.intervals() {
        let r = inside.get(&i).copied().unwrap_or(0.0) / i.length();
        if r > worst.0 {
            worst = (r, i);
        }
    }
    SparsenessAudit {
        passed: worst.0 <= family.epsilon(),
        worst_ratio: worst.0,
        worst_interval: worst.1,
    }
}

/// `Σ_{I ∈ family} <φ>_I² 1_I`, cell by cell.
fn sparse_sum_of_squares<'a>(
    tree: &AverageTree,
    depth: u32,
    intervals: impl Iterator<Item = &'a DyadicInterval>,
) -> Vec<f64> {
    let mut acc = vec![0.0; 1usize << depth];
    for i in intervals {
        let a = tree.get(*i);
        for cell in &mut acc[i.cell_range(depth)] {
            *cell += a * a;
        }
    }
    acc
}

fn check_family_depth(phi: &StepFunction, family: &SparseFamily) -> Result<()> {
    if family.max_level() > phi.depth() {
        return input(format!(
            "family reaches level {} but the function has depth {}",
            family.max_level(),
            phi.depth()
        ));
    }
    Ok(())
}

/// `S^sp φ = (Σ_{I ∈ family} <φ>_I² 1_I)^{1/2}`.
pub fn sparse_square_function(phi: &StepFunction, family: &SparseFamily) -> Result<StepFunction> {
    check_family_depth(phi, family)?;
    let tree = build_average_tree(phi);
    let all: Vec<_> = family.intervals().collect();
    let acc = sparse_sum_of_squares(&tree, phi.depth(), all.iter());
    StepFunction::new(phi.depth(), acc.into_iter().map(f64::sqrt).collect())
}

/// Pointwise comparison of `Sφ` with `S^sp φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominationReport {
    /// `max (Sφ)/(S^sp φ)` over cells with `S^sp φ > 0`; `+∞` when `structural_failure` is set.
    pub ratio: f64,
    /// Some cell has `S^sp φ = 0` while `Sφ > 0`.
    pub structural_failure: bool,
    /// Cell index where the ratio is attained.
    pub worst_cell: usize,
}

pub fn domination_report(phi: &StepFunction, family: &SparseFamily) -> Result<DominationReport> {
    if phi.is_zero() {
        return input("phi vanishes identically");
    }
    let s = square_function(phi)?;
    let sp = sparse_square_function(phi, family)?;
    let mut report = DominationReport {
        ratio: 0.0,
        structural_failure: false,
        worst_cell: 0,
    };
    for (k, (&a, &b)) in s.cells().iter().zip(sp.cells()).enumerate() {
        if b > 0.0 {
            let r = a / b;
            if r > report.ratio && !report.structural_failure {
                report.ratio = r;
                report.worst_cell = k;
            }
        } else if a > 0.0 && !report.structural_failure {
            report.structural_failure = true;
            report.ratio = f64::INFINITY;
            report.worst_cell = k;
        }
    }
    Ok(report)
}

/// Family intervals sorted by the size of `<φ>_I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceDecomposition {
    /// Intervals with `<φ>_I > 1`.
    pub s_zero: BTreeSet<DyadicInterval>,
    /// Bucket `m` holds the intervals with `2^{-m-1} < <φ>_I ≤ 2^{-m}`.
    pub slices: BTreeMap<u32, BTreeSet<DyadicInterval>>,
    /// `b_m = 2^{2m} (S^sp_m φ)²`, built from bucket `m` alone.
    pub b_values: BTreeMap<u32, StepFunction>,
    /// Averages that fell below the last bucket and were placed in it.
    pub capped: usize,
}

impl SliceDecomposition {
    pub fn interval_count(&self) -> usize {
        self.s_zero.len() + self.slices.values().map(BTreeSet::len).sum::<usize>()
    }

    /// `Σ_m (S^sp_m φ)² = Σ_m 2^{-2m} b_m`.
    pub fn sum_of_squares(&self, depth: u32) -> Result<StepFunction> {
        let mut acc = vec![0.0; 1usize << depth];
        for (&m, b) in &self.b_values {
            if b.depth() != depth {
                return input("slice depth mismatch");
            }
            let scale = (-2.0 * m as f64).exp2();
            acc.iter_mut().zip(b.cells()).for_each(|(a, v)| *a += scale * v);
        }
        StepFunction::new(depth, acc)
    }

    /// Intervals of bucket `m` not contained in any other interval of the same bucket.
    pub fn maximal_in(&self, m: u32) -> Vec<DyadicInterval> {
        let Some(set) = self.slices.get(&m) else {
            return Vec::new();
        };
        set.iter()
            .copied()
            .filter(|i| {
                let mut cur = i.parent();
                while let Some(p) = cur {
                    if set.contains(&p) {
                        return false;
                    }
                    cur = p.parent();
                }
                true
            })
            .collect()
    }
}

/// Largest bucket index at a given depth; smaller averages are folded into it.
pub fn max_bucket(depth: u32) -> u32 {
    2 * depth + 20
}

/// `m` with `2^{-m-1} < avg ≤ 2^{-m}` for `0 < avg ≤ 1`, read off the binary exponent exactly.
fn bucket_of(avg: f64) -> Option<u32> {
    if !(avg >= f64::MIN_POSITIVE) {
        return None;
    }
    let bits = avg.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let exact_power = bits & ((1u64 << 52) - 1) == 0;
    let m = if exact_power { -exponent } else { -exponent - 1 };
    Some(m as u32)
}

/// Splits the family into `{<φ>_I > 1}` and the dyadic buckets of `<φ>_I ≤ 1`.
pub fn slice_by_average(phi: &StepFunction, family: &SparseFamily) -> Result<SliceDecomposition> {
    if let Some(k) = phi.cells().iter().position(|&v| v < 0.0) {
        return input(format!("slicing needs phi >= 0; cell {k} is {}", phi.cells()[k]));
    }
    check_family_depth(phi, family)?;
    let depth = phi.depth();
    let tree = build_average_tree(phi);
    let cap = max_bucket(depth);
    let mut s_zero = BTreeSet::new();
    let mut slices: BTreeMap<u32, BTreeSet<DyadicInterval>> = BTreeMap::new();
    let mut capped = 0;
    for i in family.intervals() {
        let avg = tree.get(i);
        if avg > 1.0 {
            s_zero.insert(i);
            continue;
        }
        let m = match bucket_of(avg) {
            Some(m) if m <= cap => m,
            _ => {
                capped += 1;
                cap
            }
        };
        slices.entry(m).or_default().insert(i);
    }
    if capped > 0 {
        log::warn!("{capped} family intervals have averages below 2^-{cap} and were put in bucket {cap}");
    }
    let mut b_values = BTreeMap::new();
    for (&m, set) in &slices {
        let scale = (2.0 * m as f64).exp2();
        let acc = sparse_sum_of_squares(&tree, depth, set.iter());
        b_values.insert(m, StepFunction::new(depth, acc.into_iter().map(|v| scale * v).collect())?);
    }
    Ok(SliceDecomposition {
        s_zero,
        slices,
        b_values,
        capped,
    })
}

/// One row of a level-set decay measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub j: u32,
    /// `|G_j(Q*)| / |Q*|` with `G_j(Q*) = {x ∈ Q* : b_m(x) > j}`.
    pub ratio: f64,
    /// `ε^j`.
    pub bound: f64,
}

/// Level sets of `b_m` inside a maximal interval `Q*` of bucket `m`, for `j = 0, 1, …` until empty.
pub fn level_set_decay(
    slices: &SliceDecomposition,
    epsilon: f64,
    m: u32,
    q_star: DyadicInterval,
) -> Result<Vec<DecayRow>> {
    let Some(set) = slices.slices.get(&m) else {
        return input(format!("bucket {m} is empty"));
    };
    if !set.contains(&q_star) {
        return input(format!("{q_star} is not in bucket {m}"));
    }
    if !slices.maximal_in(m).contains(&q_star) {
        return input(format!("{q_star} is not maximal in bucket {m}"));
    }
    let b = &slices.b_values[&m];
    let values = &b.cells()[q_star.cell_range(b.depth())];
    let n = values.len() as f64;
    let mut rows = Vec::new();
    for j in 0u32.. {
        let count = values.iter().filter(|&&v| v > j as f64).count();
        rows.push(DecayRow {
            j,
            ratio: count as f64 / n,
            bound: epsilon.powi(j as i32),
        });
        if count == 0 {
            break;
        }
    }
    Ok(rows)
}
