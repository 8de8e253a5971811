use super::{csv_table, Outcome, RunConfig};
use crate::corpus::restricted_corpus;
use crate::error::Result;
use crate::operators::level_set_measure;
use crate::weights::Weight;
use crate::sparse::{domination_report, extract_sparse, level_set_decay, slice_by_average, verify_sparseness};

/// Sparseness parameter of the demonstration.
pub const SPARSE_EPSILON: f64 = 0.5;
/// Weak-type constant `A` in `C = 100 A / ε`.
pub const SPARSE_A_WEAK: f64 = 1.0;

/// Factors `λ` applied as `w ↦ λw`, `φ ↦ φ/λ`; the class `φ = w⁻¹ 𝟙_E` and `Q` are unchanged
/// while the level `Σ_m (S^sp_m φ)² > 2` is reached at different scales.
pub const SPARSE_SCALES: [f64; 4] = [1.0, 0.25, 1.0 / 16.0, 1.0 / 64.0];

/// The sparse pipeline on one instance `φ = w⁻¹ 𝟙_E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseRow {
    pub q_a2: f64,
    pub scale: f64,
    pub family_size: usize,
    pub generations: usize,
    pub worst_sparseness: f64,
    pub domination: f64,
    pub structural_failure: bool,
    /// Largest `|G_j(Q*)| / (|Q*| ε^j)` over `j ≥ 1`, buckets and maximal `Q*`.
    pub worst_decay: f64,
    /// `max_x Σ_m (S^sp_m φ)²(x)`.
    pub max_sum: f64,
    /// `w{Σ_m (S^sp_m φ)² > 2}`.
    pub level_measure: f64,
    /// `level_measure / (Q ∫φ)`.
    pub ratio: f64,
}

impl SparseRow {
    pub fn passes(&self) -> bool {
        self.worst_sparseness <= SPARSE_EPSILON / 2.0
            && !self.structural_failure
            && self.domination.is_finite()
            && self.worst_decay <= 1.0
    }
}

pub fn sparse_rows(depth: u32, q_targets: &[f64], count: usize, seed: u64) -> Result<Vec<SparseRow>> {
    let corpus = restricted_corpus(depth, q_targets, count, seed)?;
    let mut rows = Vec::with_capacity(corpus.len());
    for (k, inst) in corpus.iter().enumerate() {
        let scale = SPARSE_SCALES[(k / 2) % SPARSE_SCALES.len()];
        let weight = Weight::new(inst.weight.w().map(|x| x * scale)?)?;
        let phi = inst.phi.map(|x| x / scale)?;
        let family = extract_sparse(&phi, SPARSE_EPSILON, SPARSE_A_WEAK)?;
        let audit = verify_sparseness(&family);
        let dom = domination_report(&phi, &family)?;
        let slices = slice_by_average(&phi, &family)?;
        let mut worst_decay = 0.0f64;
        for &m in slices.slices.keys() {
            for q_star in slices.maximal_in(m) {
                for row in level_set_decay(&slices, SPARSE_EPSILON, m, q_star)? {
                    if row.j >= 1 {
                        worst_decay = worst_decay.max(row.ratio / row.bound);
                    }
                }
            }
        }
        let total = slices.sum_of_squares(depth)?;
        let level_measure = level_set_measure(&total, &weight, 2.0)?;
        rows.push(SparseRow {
            q_a2: weight.q(),
            scale,
            family_size: family.len(),
            generations: family.generations().len(),
            worst_sparseness: audit.worst_ratio,
            domination: dom.ratio,
            structural_failure: dom.structural_failure,
            worst_decay,
            max_sum: total.cells().iter().copied().fold(0.0, f64::max),
            level_measure,
            ratio: level_measure / (weight.q() * phi.integral()),
        });
    }
    Ok(rows)
}

/// Extracts, audits and slices a sparse family for every instance of the restricted corpus.
pub fn cmd_sparse_demo(config: &RunConfig) -> Result<Outcome> {
    let rows = sparse_rows(config.depth, &config.q_list, config.samples, config.seed)?;
    let mut table = csv_table(
        &[
            "Q",
            "scale",
            "family_size",
            "generations",
            "worst_sparseness",
            "domination",
            "worst_decay_over_bound",
            "max_sum_of_squares",
            "level_measure",
            "ratio_to_Q_integral",
            "pass",
        ],
        rows.iter().map(|r| {
            vec![
                r.q_a2.to_string(),
                r.scale.to_string(),
                r.family_size.to_string(),
                r.generations.to_string(),
                r.worst_sparseness.to_string(),
                r.domination.to_string(),
                r.worst_decay.to_string(),
                r.max_sum.to_string(),
                r.level_measure.to_string(),
                r.ratio.to_string(),
                r.passes().to_string(),
            ]
        }),
    )?;
    let c_obs = rows.iter().map(|r| r.domination).fold(0.0, f64::max);
    let a_obs = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let sum_obs = rows.iter().map(|r| r.max_sum).fold(0.0, f64::max);
    table.push_str(&format!(
        "# observed: epsilon={SPARSE_EPSILON} a_weak={SPARSE_A_WEAK} C_obs={c_obs} A_obs={a_obs} max_sum_of_squares={sum_obs}\n"
    ));
    let failures: Vec<String> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.passes())
        .map(|(k, _)| format!("instance {k}"))
        .collect();
    Ok(Outcome {
        command: config.command,
        table,
        passed: failures.is_empty(),
        failures,
        attachments: Vec::new(),
    })
}
