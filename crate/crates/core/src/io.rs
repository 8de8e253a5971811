//! Text and CSV formats for step functions, weights, sparse families and report tables.

use std::fmt::Write as _;

use crate::bellman::dp::BellmanGrid;
use crate::dyadic::{DyadicInterval, StepFunction, MAX_DEPTH};
use crate::error::{Error, Result};
use crate::operators::SigmaRow;
use crate::sparse::{DecayRow, SparseFamily};
use crate::weights::{A2Report, Weight};

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        msg: msg.into(),
    })
}

/// Two lines: the depth `n`, then `2ⁿ` whitespace-separated values.
pub fn write_step_function(f: &StepFunction) -> String {
    let mut out = format!("{}\n", f.depth());
    for (k, v) in f.cells().iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        write!(out, "{v}").expect("writing to a String");
    }
    out.push('\n');
    out
}

pub fn parse_step_function(text: &str) -> Result<StepFunction> {
    let mut lines = text.lines();
    let depth_line = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing depth line".into(),
    })?;
    let depth: u32 = depth_line
        .trim()
        .parse()
        .map_err(|e| Error::Parse { line: 1, msg: format!("bad depth {depth_line:?}: {e}") })?;
    if depth > MAX_DEPTH {
        return parse_err(1, format!("depth {depth} exceeds {MAX_DEPTH}"));
    }
    let Some(values_line) = lines.next() else {
        return parse_err(2, "missing values line");
    };
    let expected = 1usize << depth;
    let mut cells = Vec::with_capacity(expected.min(1 << 20));
    for token in values_line.split_whitespace() {
        if cells.len() == expected {
            return parse_err(2, format!("more than {expected} values"));
        }
        let v: f64 = token
            .parse()
            .map_err(|e| Error::Parse { line: 2, msg: format!("bad value {token:?}: {e}") })?;
        if !v.is_finite() {
            return parse_err(2, format!("non-finite value {token:?}"));
        }
        cells.push(v);
    }
    if cells.len() != expected {
        return parse_err(2, format!("expected {expected} values, found {}", cells.len()));
    }
    if let Some((k, extra)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
        return parse_err(k + 3, format!("unexpected trailing content {extra:?}"));
    }
    StepFunction::new(depth, cells)
}

/// A weight is stored as its step function `w`.
pub fn write_weight(w: &Weight) -> String {
    write_step_function(w.w())
}

pub fn parse_weight(text: &str) -> Result<Weight> {
    Weight::new(parse_step_function(text)?)
}

/// Comma-separated numbers, as given to `--q-list` and `--alpha-list`.
pub fn parse_float_list(text: &str) -> Result<Vec<f64>> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return parse_err(1, "empty list");
    }
    trimmed
        .split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => parse_err(1, format!("non-finite entry {t:?}")),
                Err(e) => parse_err(1, format!("bad entry {t:?}: {e}")),
            }
        })
        .collect()
}

/// `# key=value` comment lines preceding a CSV body.
fn split_metadata(text: &str) -> (Vec<(String, String)>, String) {
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    (meta, body)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    if header.iter().map(str::trim).ne(expected.iter().copied()) {
        return parse_err(1, format!("expected header {}, found {:?}", expected.join(","), header));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(k).ok_or(Error::Parse { line, msg: format!("missing column {k}") })?;
    raw.trim()
        .parse()
        .map_err(|e| Error::Parse { line, msg: format!("bad field {raw:?}: {e}") })
}

/// `generation,level,index` rows preceded by `# epsilon=` and `# stopping_constant=` lines.
pub fn write_sparse_family(family: &SparseFamily) -> Result<String> {
    let mut out = format!(
        "# epsilon={}\n# stopping_constant={}\n",
        family.epsilon(),
        family.stopping_constant()
    );
    let mut w = csv_writer();
    w.write_record(["generation", "level", "index"])?;
    for (g, gen) in family.generations().iter().enumerate() {
        for i in gen {
            w.write_record([g.to_string(), i.level().to_string(), i.index().to_string()])?;
        }
    }
    out.push_str(&finish(w)?);
    Ok(out)
}

pub fn parse_sparse_family(text: &str) -> Result<SparseFamily> {
    let (meta, body) = split_metadata(text);
    let get = |key: &str| -> Result<f64> {
        let raw = meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or(Error::Parse { line: 0, msg: format!("missing `# {key}=` line") })?;
        raw.parse()
            .map_err(|e| Error::Parse { line: 0, msg: format!("bad {key} {raw:?}: {e}") })
    };
    let epsilon = get("epsilon")?;
    let constant = get("stopping_constant")?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    check_header(&mut rdr, &["generation", "level", "index"])?;
    let mut generations: Vec<Vec<DyadicInterval>> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let g: usize = field(&rec, 0, line)?;
        let level: u32 = field(&rec, 1, line)?;
        let index: u32 = field(&rec, 2, line)?;
        let interval = DyadicInterval::new(level, index).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if g > generations.len() {
            return parse_err(line, format!("generation {g} appears before generation {}", generations.len()));
        }
        if g == generations.len() {
            generations.push(Vec::new());
        }
        generations[g].push(interval);
    }
    let Some(root) = generations.first().and_then(|g| g.first()).copied() else {
        return parse_err(0, "family has no intervals");
    };
    SparseFamily::from_generations(root, epsilon, constant, generations)
}

/// `m,j,ratio,bound` rows.
pub fn write_decay_rows(rows: &[(u32, DecayRow)]) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["m", "j", "ratio", "bound"])?;
    for (m, r) in rows {
        w.write_record([m.to_string(), r.j.to_string(), r.ratio.to_string(), r.bound.to_string()])?;
    }
    finish(w)
}

/// `level,index,sigma,sigma1,sigma2` rows.
pub fn write_sigma_rows(rows: &[SigmaRow]) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["level", "index", "sigma", "sigma1", "sigma2"])?;
    for r in rows {
        w.write_record([
            r.interval.level().to_string(),
            r.interval.index().to_string(),
            r.sigma.to_string(),
            r.sigma1.to_string(),
            r.sigma2.to_string(),
        ])?;
    }
    finish(w)
}

/// `level,max_product` rows preceded by the global characteristic and its interval.
pub fn write_a2_report(report: &A2Report) -> Result<String> {
    let mut out = format!(
        "# global_q={}\n# argmax={},{}\n",
        report.global_q,
        report.argmax_interval.level(),
        report.argmax_interval.index()
    );
    let mut w = csv_writer();
    w.write_record(["level", "max_product"])?;
    for (level, m) in report.per_level_max.iter().enumerate() {
        w.write_record([level.to_string(), m.to_string()])?;
    }
    out.push_str(&finish(w)?);
    Ok(out)
}

/// One node of a serialized Bellman grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRecord {
    pub u: f64,
    pub v: f64,
    pub value: f64,
    pub iteration: usize,
}

/// `u,v,value,iteration` rows over the band nodes, preceded by `# q=`.
pub fn write_bellman_grid(grid: &BellmanGrid) -> Result<String> {
    let mut out = format!("# q={}\n", grid.q());
    let mut w = csv_writer();
    w.write_record(["u", "v", "value", "iteration"])?;
    for (_, _, u, v, b) in grid.nodes() {
        w.write_record([u.to_string(), v.to_string(), b.to_string(), grid.iterations().to_string()])?;
    }
    out.push_str(&finish(w)?);
    Ok(out)
}

pub fn parse_bellman_grid(text: &str) -> Result<Vec<GridRecord>> {
    let (_, body) = split_metadata(text);
    let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    check_header(&mut rdr, &["u", "v", "value", "iteration"])?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let r = GridRecord {
            u: field(&rec, 0, line)?,
            v: field(&rec, 1, line)?,
            value: field(&rec, 2, line)?,
            iteration: field(&rec, 3, line)?,
        };
        if !(r.u > 0.0 && r.v > 0.0 && r.u.is_finite() && r.v.is_finite()) {
            return parse_err(line, "grid coordinates must be positive and finite");
        }
        if !(r.value >= 0.0) || !r.value.is_finite() {
            return parse_err(line, format!("grid value must be finite and nonnegative, got {}", r.value));
        }
        out.push(r);
    }
    Ok(out)
}

/// One row of a verification verdict table.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub check: String,
    pub q: f64,
    pub samples: usize,
    /// Smallest slack seen; negative means the check failed somewhere.
    pub worst_margin: f64,
    pub pass: bool,
}

/// `check_name,Q,samples,worst_margin,pass` rows.
pub fn write_verdicts(verdicts: &[Verdict]) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["check_name", "Q", "samples", "worst_margin", "pass"])?;
    for v in verdicts {
        w.write_record([
            v.check.clone(),
            v.q.to_string(),
            v.samples.to_string(),
            v.worst_margin.to_string(),
            v.pass.to_string(),
        ])?;
    }
    finish(w)
}
