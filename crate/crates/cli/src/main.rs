use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use sqfn::experiments::{run, Command, Outcome, RunConfig};
use sqfn::io::parse_float_list;

#[derive(Parser, Debug)]
#[command(name = "sqfn", version, about = "Numerical checks for the weighted dyadic square function")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Candidate Bellman function checks.
    VerifyBellman(Flags),
    /// Testing constant against the A2 characteristic over power weights.
    ScalingTesting(Flags),
    /// Weighted square function against (sqrt Q + q)^2 on a random corpus.
    T1Gap(Flags),
    /// Restricted weak-type ratio against Q over power weights.
    WeakRestricted(Flags),
    /// Sparse family extraction, audit and slicing.
    SparseDemo(Flags),
    /// Value iteration for the extremal problem.
    DpBellman(Flags),
}

#[derive(clap::Args, Debug)]
struct Flags {
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides every pinned tolerance of the subcommand.
    #[arg(long)]
    tol: Option<f64>,
    /// Comma-separated values of Q.
    #[arg(long)]
    q_list: Option<String>,
    /// Comma-separated power-weight exponents.
    #[arg(long, allow_hyphen_values = true)]
    alpha_list: Option<String>,
    /// Nodes per axis of the value-iteration grid.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Sample or instance count.
    #[arg(long)]
    samples: Option<usize>,
}

impl Sub {
    fn split(self) -> (Command, Flags) {
        match self {
            Sub::VerifyBellman(f) => (Command::VerifyBellman, f),
            Sub::ScalingTesting(f) => (Command::ScalingTesting, f),
            Sub::T1Gap(f) => (Command::T1Gap, f),
            Sub::WeakRestricted(f) => (Command::WeakRestricted, f),
            Sub::SparseDemo(f) => (Command::SparseDemo, f),
            Sub::DpBellman(f) => (Command::DpBellman, f),
        }
    }
}

fn config(command: Command, f: Flags) -> sqfn::Result<RunConfig> {
    let mut c = RunConfig::defaults(command);
    if let Some(d) = f.depth {
        c.depth = d;
    }
    if let Some(s) = f.seed {
        c.seed = s;
    }
    if let Some(q) = f.q_list {
        c.q_list = parse_float_list(&q)?;
    }
    if let Some(a) = f.alpha_list {
        c.alpha_list = parse_float_list(&a)?;
    }
    if let Some(g) = f.grid {
        c.grid = g;
    }
    if let Some(n) = f.iterations {
        c.iterations = n;
    }
    if let Some(n) = f.samples {
        c.samples = n;
    }
    c.tol = f.tol;
    c.out = f.out;
    Ok(c)
}

fn attachment_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}-{suffix}.csv"))
}

fn emit(outcome: &Outcome, out: Option<&Path>) -> std::io::Result<()> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let text = outcome.render(now);
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            for (suffix, body) in &outcome.attachments {
                std::fs::write(attachment_path(path, suffix), body)?;
            }
        }
        None => {
            print!("{text}");
            if !outcome.attachments.is_empty() {
                log::info!("{} grid tables omitted without --out", outcome.attachments.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, flags) = cli.command.split();
    let result = config(command, flags).and_then(|c| run(&c).map(|o| (o, c)));
    match result {
        Ok((outcome, c)) => {
            if let Err(e) = emit(&outcome, c.out.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            for f in &outcome.failures {
                eprintln!("FAIL {f}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
