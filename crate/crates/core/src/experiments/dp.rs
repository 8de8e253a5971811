use super::{csv_table, fit_loglog, Fit, Outcome, RunConfig};
use crate::bellman::dp::supersolution_ratio;
use crate::bellman::{dp_bellman, BellmanGrid, GridSpec};
use crate::error::Result;
use crate::io::write_bellman_grid;

/// Accepted range of the fitted exponent of `max B⁽ⁿ⁾/v` against `Q`.
pub const DP_EXPONENT_RANGE: (f64, f64) = (1.7, 2.3);

/// Relative size of the last increment below which a run counts as converged.
pub const DP_CONVERGENCE_TOL: f64 = 1e-3;

/// Summary of one value-iteration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpRow {
    pub q: f64,
    pub max_ratio: f64,
    pub last_increment: f64,
    /// Largest pointwise decrease over all iterations.
    pub worst_decrease: f64,
    pub supersolution_ratio: f64,
    pub converged: bool,
}

/// Runs value iteration for every `Q` of the configuration.
pub fn dp_runs(config: &RunConfig) -> Result<Vec<(DpRow, BellmanGrid)>> {
    let spec = GridSpec {
        resolution: config.grid,
        ..GridSpec::default()
    };
    config
        .q_list
        .iter()
        .map(|&q| {
            let grid = dp_bellman(q, config.iterations, &spec)?;
            let max_ratio = grid.max_ratio();
            let last_increment = grid.last_increment();
            let top = grid.nodes().map(|n| n.4).fold(0.0, f64::max);
            let row = DpRow {
                q,
                max_ratio,
                last_increment,
                worst_decrease: grid.decrements().iter().copied().fold(0.0, f64::max),
                supersolution_ratio: supersolution_ratio(&grid)?,
                converged: top == 0.0 || last_increment <= DP_CONVERGENCE_TOL * top,
            };
            if !row.converged {
                log::warn!("Q = {q}: last increment {last_increment} after {} iterations", config.iterations);
            }
            Ok((row, grid))
        })
        .collect()
}

/// Fit of `max B⁽ⁿ⁾/v` against `Q`.
pub fn dp_fit(rows: &[DpRow]) -> Result<Fit> {
    fit_loglog(&rows.iter().map(|r| (r.q, r.max_ratio)).collect::<Vec<_>>())
}

/// Value iteration per `Q`, with the grids as attachments and the cross-`Q` exponent fit.
pub fn cmd_dp_bellman(config: &RunConfig) -> Result<Outcome> {
    let runs = dp_runs(config)?;
    let rows: Vec<DpRow> = runs.iter().map(|(r, _)| *r).collect();
    let tol = config.tolerance(1e-6);
    let mut table = csv_table(
        &["Q", "max_ratio", "last_increment", "worst_decrease", "supersolution_ratio", "converged"],
        rows.iter().map(|r| {
            vec![
                r.q.to_string(),
                r.max_ratio.to_string(),
                r.last_increment.to_string(),
                r.worst_decrease.to_string(),
                r.supersolution_ratio.to_string(),
                r.converged.to_string(),
            ]
        }),
    )?;
    let mut failures = Vec::new();
    for r in &rows {
        if r.worst_decrease > 0.0 {
            failures.push(format!("Q = {}: iterates decrease by {}", r.q, r.worst_decrease));
        }
        if !(r.supersolution_ratio <= 1.0 + tol) {
            failures.push(format!("Q = {}: B exceeds (8/3) B^4Q by ratio {}", r.q, r.supersolution_ratio));
        }
    }
    match dp_fit(&rows) {
        Ok(fit) => {
            table.push_str(&format!("# fit: max_ratio ~ Q^p {fit}\n"));
            let (lo, hi) = DP_EXPONENT_RANGE;
            if !(lo..=hi).contains(&fit.exponent) {
                failures.push(format!("exponent {} outside [{lo}, {hi}]", fit.exponent));
            }
        }
        Err(e) => {
            table.push_str("# fit: max_ratio ~ Q^p unavailable\n");
            failures.push(e.to_string());
        }
    }
    let mut attachments = Vec::with_capacity(runs.len());
    for (r, grid) in &runs {
        attachments.push((format!("grid-q{}", r.q), write_bellman_grid(grid)?));
    }
    Ok(Outcome {
        command: config.command,
        table,
        passed: failures.is_empty(),
        failures,
        attachments,
    })
}
