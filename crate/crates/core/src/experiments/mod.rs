//! The quantitative experiments behind the command-line tool, each producing a CSV table and a
//! pass/fail verdict.

mod bellman_suite;
mod dp;
mod scaling;
mod sparse_demo;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dyadic::MAX_DEPTH;
use crate::error::{Error, Result};

pub use bellman_suite::{cmd_verify_bellman, SuiteSummary};
pub use dp::{cmd_dp_bellman, dp_fit, dp_runs, DpRow, DP_CONVERGENCE_TOL, DP_EXPONENT_RANGE};
pub use scaling::{cmd_scaling_testing, cmd_t1_gap, cmd_weak_restricted, t1_rows, T1Row, T1_CONSTANT, WEAK_EXPONENT_RANGE};
pub use sparse_demo::{cmd_sparse_demo, sparse_rows, SparseRow, SPARSE_A_WEAK, SPARSE_EPSILON};

/// `16e`, the constant of the quadratic growth bound for `B^{4Q}`.
pub const TELESCOPING_CONSTANT: f64 = 16.0 * std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    VerifyBellman,
    ScalingTesting,
    T1Gap,
    WeakRestricted,
    SparseDemo,
    DpBellman,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::VerifyBellman,
        Command::ScalingTesting,
        Command::T1Gap,
        Command::WeakRestricted,
        Command::SparseDemo,
        Command::DpBellman,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyBellman => "verify-bellman",
            Command::ScalingTesting => "scaling-testing",
            Command::T1Gap => "t1-gap",
            Command::WeakRestricted => "weak-restricted",
            Command::SparseDemo => "sparse-demo",
            Command::DpBellman => "dp-bellman",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand {s:?}")))
    }
}

/// Exponent `α = -√(1 - 1/Q)` of the power weight `x^α` whose continuum characteristic is `Q`.
pub fn power_alpha(q: f64) -> f64 {
    -(1.0 - 1.0 / q).sqrt()
}

/// Everything a subcommand needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub depth: u32,
    pub seed: u64,
    pub q_list: Vec<f64>,
    pub alpha_list: Vec<f64>,
    /// Nodes per axis of the Bellman grid.
    pub grid: usize,
    pub iterations: usize,
    /// Monte-Carlo samples or corpus instances, depending on the subcommand.
    pub samples: usize,
    /// Replaces every pinned tolerance when set.
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let mut c = Self {
            command,
            depth: 12,
            seed: 0,
            q_list: vec![2.0, 10.0, 100.0],
            alpha_list: Vec::new(),
            grid: 128,
            iterations: 200,
            samples: 10_000,
            tol: None,
            out: None,
        };
        let sweep: Vec<f64> = [4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0].into_iter().map(power_alpha).collect();
        match command {
            Command::VerifyBellman => {}
            Command::ScalingTesting => {
                c.depth = 14;
                c.alpha_list = std::iter::once(0.0).chain(sweep).collect();
            }
            Command::T1Gap => {
                c.q_list = vec![5.0, 50.0, 500.0];
                c.samples = 30;
            }
            Command::WeakRestricted => {
                c.depth = 14;
                c.alpha_list = sweep;
                c.samples = 30;
            }
            Command::SparseDemo => {
                c.q_list = vec![5.0, 50.0];
                c.samples = 100;
            }
            Command::DpBellman => {
                c.q_list = vec![4.0, 8.0, 16.0, 32.0, 64.0];
            }
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.depth > MAX_DEPTH {
            return bad(format!("depth {} exceeds {MAX_DEPTH}", self.depth));
        }
        if self.depth == 0 && !matches!(self.command, Command::VerifyBellman | Command::DpBellman) {
            return bad("depth must be at least 1".into());
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0) || !t.is_finite() {
                return bad(format!("tolerance must be finite and nonnegative, got {t}"));
            }
        }
        let needs_q = !matches!(self.command, Command::ScalingTesting | Command::WeakRestricted);
        if needs_q {
            if self.q_list.is_empty() {
                return bad("the Q list is empty".into());
            }
            let floor = if self.command == Command::VerifyBellman || self.command == Command::DpBellman {
                1.0
            } else {
                0.0
            };
            if let Some(q) = self.q_list.iter().find(|&&q| !(q > floor) || !q.is_finite()) {
                return bad(format!("Q = {q} is out of range"));
            }
            if matches!(self.command, Command::T1Gap | Command::SparseDemo) {
                if let Some(q) = self.q_list.iter().find(|&&q| q < 1.0) {
                    return bad(format!("target characteristic {q} is below 1"));
                }
            }
        } else {
            if self.alpha_list.is_empty() {
                return bad("the alpha list is empty".into());
            }
            if let Some(a) = self.alpha_list.iter().find(|&&a| !(a > -1.0 && a < 1.0)) {
                return bad(format!("alpha = {a} lies outside (-1, 1)"));
            }
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.command == Command::DpBellman && self.grid < 8 {
            return bad(format!("grid resolution must be at least 8, got {}", self.grid));
        }
        Ok(())
    }

    /// The configured tolerance, or `pinned` when none was given.
    pub fn tolerance(&self, pinned: f64) -> f64 {
        self.tol.unwrap_or(pinned)
    }
}

/// Result of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: Command,
    /// Header row, data rows and `#` trailer lines.
    pub table: String,
    pub passed: bool,
    /// Names of the failed verdicts.
    pub failures: Vec<String>,
    /// Extra tables as `(name suffix, CSV)`, written next to the main output.
    pub attachments: Vec<(String, String)>,
}

impl Outcome {
    /// The CSV with its leading timestamp line.
    pub fn render(&self, generated_at: u64) -> String {
        format!("# sqfn {} generated-at {generated_at}\n{}", self.command, self.table)
    }

    /// `0` when every verdict passed and `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Validates the configuration and runs its subcommand.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    match config.command {
        Command::VerifyBellman => cmd_verify_bellman(config).map(|(o, _)| o),
        Command::ScalingTesting => cmd_scaling_testing(config).map(|(o, _)| o),
        Command::T1Gap => cmd_t1_gap(config).map(|(o, _)| o),
        Command::WeakRestricted => cmd_weak_restricted(config).map(|(o, _)| o),
        Command::SparseDemo => cmd_sparse_demo(config),
        Command::DpBellman => cmd_dp_bellman(config),
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

impl fmt::Display for Fit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "exponent={} intercept={} residual={} points={}",
            self.exponent, self.intercept, self.residual, self.points
        )
    }
}

/// Fits `y ≈ e^c x^p`; needs at least 4 positive points with `max x / min x ≥ 16`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < 4 {
        return Err(Error::Config(format!("an exponent fit needs at least 4 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(Error::Domain(format!("log-log fit needs positive finite points, got {p:?}")));
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    if hi / lo < 16.0 {
        return Err(Error::Config(format!("fit points span a factor {} < 16", hi / lo)));
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let rss: f64 = logs.iter().map(|p| (p.1 - intercept - exponent * p.0).powi(2)).sum();
    Ok(Fit {
        exponent,
        intercept,
        residual: (rss / n).sqrt(),
        points: points.len(),
    })
}

/// One row of a scaling experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    /// The sweep parameter (an exponent `α` or a target characteristic).
    pub parameter: f64,
    /// Measured `[w]_{A₂}`.
    pub q_a2: f64,
    /// Measured testing constant.
    pub q_testing: f64,
    pub measured: f64,
    pub normalized: f64,
}

/// Rows of a sweep together with the log-log fit of the measured quantity against `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub fit: Option<Fit>,
}

fn csv_table<R: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: R) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}
