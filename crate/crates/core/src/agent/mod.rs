//! Greedy generate-evaluate-refine loop over candidate solver programs.
//!
//! Iteration 0 asks the model for a fresh solver; every later iteration shows
//! it the best candidate so far with its feedback and score. A new candidate
//! replaces the best when its score is less than or equal to the best score,
//! so ties go to the newer candidate. Every iteration is appended to a JSON
//! lines history, from which an interrupted run can resume.

mod backend;
mod prompt;
mod sandbox;

use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use backend::{
    extract_code_block, BackendError, Exchange, ExtractionError, LiveBackend, MockBackend, ModelBackend,
    ReplayBackend, ENDPOINT_VAR, KEY_VAR, MODEL_VAR,
};
pub use prompt::{render_prompt, PromptBundle, TemplateError};
pub use sandbox::{
    evaluate_candidate, read_source, CandidateReport, CandidateSolution, EvalContext, FeasibilityMode, LambdaOutput,
    SandboxError,
};

/// Token standing in for an infinite score in prompts and history files.
pub const INFEASIBLE: &str = "INFEASIBLE";

/// IGD score of a candidate; infinite when it produced anything infeasible
/// or failed to run.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Score(pub f64);

impl Score {
    pub const INFEASIBLE: Score = Score(f64::INFINITY);

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str(INFEASIBLE)
        }
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(INFEASIBLE)
        }
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Score(v)),
            Raw::Text(t) if t == INFEASIBLE => Ok(Score::INFEASIBLE),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("invalid score '{t}'"))),
        }
    }
}

/// Hex SHA-256 of a prompt.
pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error("history file {path}: {message}")]
    History { path: String, message: String },
}

/// The best candidate so far, with the feedback and score of the iteration
/// that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Best {
    pub t: usize,
    pub source: String,
    pub feedback: String,
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub t: usize,
    pub prompt_sha256: String,
    /// Extracted program, or the raw completion when it had no code block.
    pub source: String,
    pub feedback: String,
    pub score: Score,
    pub feasible: usize,
    pub infeasible: usize,
    pub non_dominated: usize,
    pub errors: Vec<String>,
    pub elapsed: f64,
    /// Whether this candidate became the best.
    pub accepted: bool,
    /// Best score after this iteration.
    pub best_score: Score,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgentState {
    /// Index of the next iteration.
    pub t: usize,
    pub best: Option<Best>,
    pub history: Vec<HistoryRecord>,
}

impl AgentState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds the state from a history file written by [`run`]. A missing
    /// file gives a fresh state.
    pub fn resume(path: &Path) -> Result<Self, AgentError> {
        let err = |message: String| AgentError::History { path: path.display().to_string(), message };
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(err(e.to_string())),
        };
        let mut state = Self::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let rec: HistoryRecord = serde_json::from_str(line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
            if rec.t != state.t {
                return Err(err(format!("line {}: iteration {} out of sequence", i + 1, rec.t)));
            }
            state.absorb(rec);
        }
        Ok(state)
    }

    fn absorb(&mut self, rec: HistoryRecord) {
        if rec.accepted {
            self.best = Some(Best { t: rec.t, source: rec.source.clone(), feedback: rec.feedback.clone(), score: rec.score });
        }
        self.t = rec.t + 1;
        self.history.push(rec);
    }

    pub fn best_score(&self) -> Score {
        self.best.as_ref().map_or(Score::INFEASIBLE, |b| b.score)
    }
}

/// One iteration: prompt, completion, evaluation, greedy update. Candidate
/// failures are absorbed as infinite scores; backend and sandbox failures
/// propagate with the state untouched.
pub fn step(
    state: &mut AgentState,
    bundle: &PromptBundle,
    backend: &mut dyn ModelBackend,
    ctx: &EvalContext,
) -> Result<HistoryRecord, AgentError> {
    let prompt = render_prompt(bundle, state.best.as_ref())?;
    let completion = backend.complete(&prompt)?;
    let (source, report) = match extract_code_block(&completion) {
        Ok(code) => {
            let report = evaluate_candidate(&code, ctx)?;
            (code, report)
        }
        Err(e) => (completion, CandidateReport::failed(e.to_string())),
    };
    let accepted = report.score <= state.best_score() || state.best.is_none();
    let best_score = if accepted { report.score } else { state.best_score() };
    let rec = HistoryRecord {
        t: state.t,
        prompt_sha256: digest(&prompt),
        source,
        feedback: report.feedback(),
        score: report.score,
        feasible: report.feasible,
        infeasible: report.infeasible,
        non_dominated: report.non_dominated,
        errors: report.errors,
        elapsed: report.elapsed,
        accepted,
        best_score,
    };
    state.absorb(rec.clone());
    Ok(rec)
}

fn append(path: &Path, rec: &HistoryRecord) -> Result<(), AgentError> {
    let err = |e: std::io::Error| AgentError::History { path: path.display().to_string(), message: e.to_string() };
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(err)?;
    let line = serde_json::to_string(rec).expect("history records serialize");
    writeln!(f, "{line}").map_err(err)
}

/// Runs iterations `state.t ..= iterations` and returns the best candidate.
/// Each finished iteration is appended to `history` before the next starts.
pub fn run(
    state: &mut AgentState,
    bundle: &PromptBundle,
    backend: &mut dyn ModelBackend,
    ctx: &EvalContext,
    iterations: usize,
    history: Option<&Path>,
) -> Result<Best, AgentError> {
    while state.t <= iterations {
        let rec = step(state, bundle, backend, ctx)?;
        log::info!("iteration {}: score {} (best {})", rec.t, rec.score, rec.best_score);
        if let Some(path) = history {
            append(path, &rec)?;
        }
    }
    Ok(state.best.clone().expect("at least one iteration ran"))
}
