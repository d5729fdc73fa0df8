//! OR-Library portfolio files and the line-oriented solution-set format.
//!
//! Universe files ("port" files) hold the asset count `N`, then `N` lines of
//! `mean_return stddev`, then one `i j rho` line per pair `1 <= i <= j <= N`.
//! Reference frontier files ("portef" files) hold one `mean_return variance`
//! pair per line.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::model::{AssetUniverse, ModelError};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error("reference frontier is empty")]
    EmptyFrontier,
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("cannot read {path}: {source}")]
    Source { path: String, source: std::io::Error },
    #[error("write failed: {0}")]
    Sink(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn number(tok: &str, what: &str) -> Result<f64, DataError> {
    tok.parse::<f64>()
        .map_err(|_| DataError::MalformedFile(format!("{what}: '{tok}' is not a number")))
}

fn index(tok: &str, n: usize) -> Result<usize, DataError> {
    let i: usize = tok
        .parse()
        .map_err(|_| DataError::MalformedFile(format!("'{tok}' is not an asset index")))?;
    if i < 1 || i > n {
        return Err(DataError::MalformedFile(format!("asset index {i} outside 1..={n}")));
    }
    Ok(i - 1)
}

pub fn parse_universe(text: &str) -> Result<AssetUniverse, DataError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let first = toks.first().ok_or_else(|| DataError::MalformedFile("empty universe file".into()))?;
    let n: usize = first
        .parse()
        .map_err(|_| DataError::MalformedFile(format!("asset count '{first}' is not an integer")))?;
    if n == 0 {
        return Err(DataError::MalformedFile("asset count is zero".into()));
    }
    let pairs = n * (n + 1) / 2;
    let expected = 1 + 2 * n + 3 * pairs;
    if toks.len() != expected {
        return Err(DataError::MalformedFile(format!(
            "expected {expected} tokens for {n} assets, found {}",
            toks.len()
        )));
    }
    let mut mu = Vec::with_capacity(n);
    let mut stddev = Vec::with_capacity(n);
    for a in 0..n {
        mu.push(number(toks[1 + 2 * a], "mean return")?);
        let s = number(toks[2 + 2 * a], "stddev")?;
        if !(s >= 0.0) {
            return Err(DataError::MalformedFile(format!("negative stddev {s} for asset {}", a + 1)));
        }
        stddev.push(s);
    }
    let mut corr = vec![0.0; n * n];
    let mut seen = vec![false; n * n];
    for t in toks[1 + 2 * n..].chunks_exact(3) {
        let i = index(t[0], n)?;
        let j = index(t[1], n)?;
        if i > j {
            return Err(DataError::MalformedFile(format!(
                "correlation entry ({}, {}) is below the diagonal",
                i + 1,
                j + 1
            )));
        }
        let rho = number(t[2], "correlation")?;
        if !(-1.0..=1.0).contains(&rho) {
            return Err(DataError::MalformedFile(format!("correlation {rho} outside [-1, 1]")));
        }
        if i == j && (rho - 1.0).abs() > 1e-9 {
            return Err(DataError::MalformedFile(format!("self-correlation of asset {} is {rho}", i + 1)));
        }
        if std::mem::replace(&mut seen[i * n + j], true) {
            return Err(DataError::MalformedFile(format!("duplicate correlation entry ({}, {})", i + 1, j + 1)));
        }
        corr[i * n + j] = rho;
    }
    Ok(AssetUniverse::new(mu, stddev, corr)?)
}

/// Writes a universe in OR-Library layout. `parse_universe` inverts it exactly.
pub fn write_universe<W: Write>(u: &AssetUniverse, mut sink: W) -> Result<(), DataError> {
    let n = u.n();
    writeln!(sink, "{n}")?;
    for i in 0..n {
        writeln!(sink, "{} {}", u.mu()[i], u.stddev()[i])?;
    }
    for i in 0..n {
        for j in i..n {
            writeln!(sink, "{} {} {}", i + 1, j + 1, u.correlation(i, j))?;
        }
    }
    sink.flush()?;
    Ok(())
}

pub fn read_universe(path: &Path) -> Result<AssetUniverse, DataError> {
    parse_universe(&read_text(path)?)
}

fn read_text(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Source { path: path.display().to_string(), source })
}

/// Unconstrained efficient frontier used as the IGD/PE reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFrontier {
    /// `(mean return, variance)` in file order.
    points: Vec<(f64, f64)>,
    /// Same points sorted by variance ascending.
    sorted: Vec<(f64, f64)>,
}

impl ReferenceFrontier {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, DataError> {
        if points.is_empty() {
            return Err(DataError::EmptyFrontier);
        }
        if let Some(p) = points.iter().find(|(r, v)| !r.is_finite() || !v.is_finite()) {
            return Err(DataError::MalformedFile(format!("non-finite frontier point {p:?}")));
        }
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        if let Some(w) = sorted.windows(2).find(|w| w[1].0 < w[0].0 - 1e-10) {
            return Err(DataError::MalformedFile(format!(
                "frontier return decreases with variance between {:?} and {:?}",
                w[0], w[1]
            )));
        }
        Ok(Self { points, sorted })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn sorted_by_variance(&self) -> &[(f64, f64)] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn parse_reference_frontier(text: &str) -> Result<ReferenceFrontier, DataError> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => continue,
            [r, v] => points.push((number(r, "mean return")?, number(v, "variance")?)),
            _ => {
                return Err(DataError::MalformedFile(format!(
                    "line {}: expected 2 numbers, found {}",
                    lineno + 1,
                    toks.len()
                )))
            }
        }
    }
    ReferenceFrontier::new(points)
}

pub fn read_reference_frontier(path: &Path) -> Result<ReferenceFrontier, DataError> {
    parse_reference_frontier(&read_text(path)?)
}

pub fn write_reference_frontier<W: Write>(f: &ReferenceFrontier, mut sink: W) -> Result<(), DataError> {
    for (r, v) in f.points() {
        writeln!(sink, "{r} {v}")?;
    }
    sink.flush()?;
    Ok(())
}

pub const SOLUTION_SET_HEADER: &str = "# moco solution-set v1";

/// One line of a solution-set file.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub lambda: f64,
    pub algorithm: String,
    pub feasible: bool,
    pub risk: f64,
    pub ret: f64,
    pub weights: Vec<f64>,
}

/// Writes records sorted by `λ`, then algorithm id (stable for equal keys).
/// Floats use the shortest representation that parses back to the same value.
pub fn write_solution_set<W: Write>(records: &[SolutionRecord], mut sink: W) -> Result<(), DataError> {
    let n = records.first().map_or(0, |r| r.weights.len());
    for r in records {
        if r.weights.len() != n {
            return Err(DataError::InvalidRecord(format!(
                "record for {} at lambda {} has {} weights, expected {n}",
                r.algorithm,
                r.lambda,
                r.weights.len()
            )));
        }
        if r.algorithm.is_empty() || r.algorithm.chars().any(char::is_whitespace) {
            return Err(DataError::InvalidRecord(format!("algorithm id '{}' must be a non-empty token", r.algorithm)));
        }
    }
    let mut order: Vec<&SolutionRecord> = records.iter().collect();
    order.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then_with(|| a.algorithm.cmp(&b.algorithm)));

    let mut out = String::new();
    out.push_str(SOLUTION_SET_HEADER);
    out.push('\n');
    out.push_str("# fields: lambda algorithm feasible risk return w_1..w_n\n");
    out.push_str(&format!("# n {n}\n"));
    for r in order {
        out.push_str(&format!("{} {} {} {} {}", r.lambda, r.algorithm, u8::from(r.feasible), r.risk, r.ret));
        for w in &r.weights {
            out.push(' ');
            out.push_str(&w.to_string());
        }
        out.push('\n');
    }
    sink.write_all(out.as_bytes())?;
    sink.flush()?;
    Ok(())
}

pub fn parse_solution_set(text: &str) -> Result<Vec<SolutionRecord>, DataError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == SOLUTION_SET_HEADER => {}
        _ => return Err(DataError::MalformedFile(format!("missing '{SOLUTION_SET_HEADER}' header"))),
    }
    let mut n: Option<usize> = None;
    let mut records = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("n ") {
                n = Some(v.trim().parse().map_err(|_| DataError::MalformedFile(format!("bad asset count '{v}'")))?);
            }
            continue;
        }
        let n = n.ok_or_else(|| DataError::MalformedFile("record before '# n' line".into()))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 + n {
            return Err(DataError::MalformedFile(format!(
                "line {}: expected {} fields, found {}",
                lineno + 1,
                5 + n,
                toks.len()
            )));
        }
        let feasible = match toks[2] {
            "1" => true,
            "0" => false,
            other => return Err(DataError::MalformedFile(format!("line {}: feasible flag '{other}'", lineno + 1))),
        };
        records.push(SolutionRecord {
            lambda: number(toks[0], "lambda")?,
            algorithm: toks[1].to_string(),
            feasible,
            risk: number(toks[3], "risk")?,
            ret: number(toks[4], "return")?,
            weights: toks[5..].iter().map(|t| number(t, "weight")).collect::<Result<_, _>>()?,
        });
    }
    Ok(records)
}

pub fn read_solution_set(path: &Path) -> Result<Vec<SolutionRecord>, DataError> {
    parse_solution_set(&read_text(path)?)
}

/// Distinct algorithm ids in first-appearance order.
pub fn algorithms_in(records: &[SolutionRecord]) -> Vec<String> {
    let mut seen = HashSet::new();
    records.iter().filter(|r| seen.insert(r.algorithm.clone())).map(|r| r.algorithm.clone()).collect()
}
