//! Runs candidate solver programs as subprocesses and scores what they
//! print.
//!
//! A candidate is invoked once per grid `λ` with
//! `--universe --k --eps --delta --lambda --seed --time-limit` and must print
//! one line per solution: objective, then `n` weights. Scoring ignores the
//! printed objective: risk and return are recomputed from the weights, every
//! portfolio is checked against the constraints, and the score is the IGD of
//! the non-dominated outputs against the reference frontier.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;
use wait_timeout::ChildExt;

use super::Score;
use crate::dataio::{write_universe, DataError, ReferenceFrontier};
use crate::frontier::{igd, non_dominated_subset, ObjectivePoint, Provenance};
use crate::model::{
    check_feasibility, portfolio_return, portfolio_risk, AssetUniverse, ConstraintSet, ModelError, Portfolio,
};

/// Characters of stderr kept per failing invocation.
const STDERR_TAIL: usize = 2000;

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("creating sandbox directory: {0}")]
    TempDir(std::io::Error),
    #[error("writing {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("starting {program}: {source}")]
    Spawn { program: String, source: std::io::Error },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeasibilityMode {
    /// Any infeasible portfolio makes the whole candidate infeasible.
    #[default]
    Strict,
    /// Infeasible portfolios are dropped and the rest scored.
    Filter,
}

impl std::str::FromStr for FeasibilityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Self::Strict),
            "filter" => Ok(Self::Filter),
            _ => Err(format!("unknown feasibility mode '{s}' (expected strict or filter)")),
        }
    }
}

/// Everything fixed across agent iterations: the instance, the grid, the
/// reference frontier and the execution limits.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub universe: AssetUniverse,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub grid: Vec<f64>,
    pub reference: ReferenceFrontier,
    /// Wall-clock limit for all invocations of one candidate together.
    pub limit: Duration,
    /// Grid step `i` gets seed `seed + i`.
    pub seed: u64,
    /// Runs sources without a `#!` line.
    pub interpreter: String,
    pub mode: FeasibilityMode,
    /// Concurrent invocations.
    pub jobs: usize,
    constraints: ConstraintSet,
}

impl EvalContext {
    pub fn new(
        universe: AssetUniverse,
        k: usize,
        eps: f64,
        delta: f64,
        grid: Vec<f64>,
        reference: ReferenceFrontier,
    ) -> Result<Self, ModelError> {
        let constraints = ConstraintSet::uniform(universe.n(), k, eps, delta)?;
        Ok(Self {
            universe,
            k,
            eps,
            delta,
            grid,
            reference,
            limit: Duration::from_secs(600),
            seed: 0,
            interpreter: "python3".into(),
            mode: FeasibilityMode::Strict,
            jobs: 1,
            constraints,
        })
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CandidateSolution {
    pub reported_objective: f64,
    pub weights: Vec<f64>,
    pub risk: f64,
    pub ret: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LambdaOutput {
    pub lambda: f64,
    pub seed: u64,
    pub solutions: Vec<CandidateSolution>,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CandidateReport {
    pub outputs: Vec<LambdaOutput>,
    pub feasible: usize,
    pub infeasible: usize,
    pub non_dominated: usize,
    pub errors: Vec<String>,
    pub elapsed: f64,
    pub score: Score,
}

impl CandidateReport {
    /// A report for a candidate that never ran.
    pub fn failed(error: String) -> Self {
        Self {
            outputs: Vec::new(),
            feasible: 0,
            infeasible: 0,
            non_dominated: 0,
            errors: vec![error],
            elapsed: 0.0,
            score: Score::INFEASIBLE,
        }
    }

    /// Objective-space points of the feasible outputs, tagged with their `λ`.
    pub fn points(&self) -> Vec<ObjectivePoint> {
        let mut pts = Vec::new();
        for o in &self.outputs {
            for (h, s) in o.solutions.iter().enumerate() {
                if s.feasible {
                    let prov = Provenance { algorithm: "candidate".into(), lambda: o.lambda, handle: h };
                    pts.push(ObjectivePoint::new(s.risk, s.ret, prov));
                }
            }
        }
        pts
    }

    /// Plain-text summary handed back to the model.
    pub fn feedback(&self) -> String {
        let total = self.feasible + self.infeasible;
        let mut f = format!(
            "feasible portfolios: {} of {total}\nnon-dominated portfolios: {}\nscore: {}\n",
            self.feasible, self.non_dominated, self.score
        );
        if self.errors.is_empty() {
            f.push_str("execution errors: none\n");
        } else {
            f.push_str("execution errors:\n");
            for e in &self.errors {
                f.push_str("- ");
                f.push_str(e);
                f.push('\n');
            }
        }
        f
    }
}

struct Invocation {
    stdout: String,
    stderr: String,
    status: Option<ExitStatus>,
    timed_out: bool,
    elapsed: f64,
}

fn kill_tree(child: &mut Child) {
    #[cfg(unix)]
    {
        // the child leads its own process group; take down any grandchildren too
        // SAFETY: plain syscall on a pid we spawned
        unsafe {
            libc::kill(-(child.id() as i32), libc::SIGKILL);
        }
    }
    let _ = child.kill();
}

fn drain<R: Read + Send + 'static>(source: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut s) = source {
            let _ = s.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

fn invoke(mut cmd: Command, deadline: Instant) -> std::io::Result<Invocation> {
    let started = Instant::now();
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn()?;
    let out = drain(child.stdout.take());
    let err = drain(child.stderr.take());
    let left = deadline.saturating_duration_since(Instant::now());
    let (status, timed_out) = match child.wait_timeout(left)? {
        Some(s) => (Some(s), false),
        None => {
            kill_tree(&mut child);
            let _ = child.wait();
            (None, true)
        }
    };
    if status.is_some() {
        // a finished leader may leave children holding the pipes open
        kill_tree(&mut child);
    }
    Ok(Invocation {
        stdout: out.join().unwrap_or_default(),
        stderr: err.join().unwrap_or_default(),
        status,
        timed_out,
        elapsed: started.elapsed().as_secs_f64(),
    })
}

fn tail(s: &str) -> String {
    let t = s.trim();
    let start = t.char_indices().rev().nth(STDERR_TAIL).map_or(0, |(i, _)| i);
    t[start..].to_string()
}

fn fmt_lambda(l: f64) -> String {
    format!("{l}")
}

fn parse_output(text: &str, n: usize, lambda: f64, errors: &mut Vec<String>) -> Vec<(f64, Vec<f64>)> {
    let mut sols = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != n + 1 {
            errors.push(format!(
                "lambda {}: output line {} has {} fields, expected {}",
                fmt_lambda(lambda),
                ln + 1,
                fields.len(),
                n + 1
            ));
            continue;
        }
        match fields.iter().map(|f| f.parse::<f64>()).collect::<Result<Vec<f64>, _>>() {
            Ok(v) => sols.push((v[0], v[1..].to_vec())),
            Err(e) => errors.push(format!("lambda {}: output line {}: {e}", fmt_lambda(lambda), ln + 1)),
        }
    }
    sols
}

fn is_script(source: &str) -> bool {
    source.starts_with("#!")
}

/// Executes and scores one candidate. Candidate failures (crashes, timeouts,
/// bad output, infeasible portfolios) end up in the report with an infinite
/// score; only problems with the sandbox itself are errors.
pub fn evaluate_candidate(source: &str, ctx: &EvalContext) -> Result<CandidateReport, SandboxError> {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(SandboxError::TempDir)?;
    let universe_path = dir.path().join("universe.txt");
    let mut buf = Vec::new();
    write_universe(&ctx.universe, &mut buf)?;
    write_file(&universe_path, &buf)?;
    let program = dir.path().join("candidate");
    write_file(&program, source.as_bytes())?;
    let script = is_script(source);
    if script {
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            fs::set_permissions(&program, fs::Permissions::from_mode(0o700))
                .map_err(|e| SandboxError::Write { path: program.display().to_string(), source: e })?;
        }
    }

    let jobs = ctx.jobs.max(1);
    let waves = ctx.grid.len().div_ceil(jobs).max(1);
    let hint = ctx.limit.as_secs_f64() / waves as f64;
    let deadline = started + ctx.limit;
    let path_var = std::env::var_os("PATH").unwrap_or_default();
    let build = |i: usize| -> Command {
        let mut cmd = if script {
            Command::new(&program)
        } else {
            let mut c = Command::new(&ctx.interpreter);
            c.arg(&program);
            c
        };
        cmd.arg("--universe")
            .arg(&universe_path)
            .arg("--k")
            .arg(ctx.k.to_string())
            .arg("--eps")
            .arg(format!("{}", ctx.eps))
            .arg("--delta")
            .arg(format!("{}", ctx.delta))
            .arg("--lambda")
            .arg(fmt_lambda(ctx.grid[i]))
            .arg("--seed")
            .arg((ctx.seed + i as u64).to_string())
            .arg("--time-limit")
            .arg(format!("{hint}"))
            .env_clear()
            .env("PATH", &path_var)
            .current_dir(dir.path());
        cmd
    };

    let results: Mutex<Vec<Option<std::io::Result<Invocation>>>> =
        Mutex::new((0..ctx.grid.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    thread::scope(|s| {
        for _ in 0..jobs.min(ctx.grid.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= ctx.grid.len() {
                    break;
                }
                let r = invoke(build(i), deadline);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let results = results.into_inner().unwrap();

    let n = ctx.universe.n();
    let mut errors = Vec::new();
    let mut outputs = Vec::with_capacity(ctx.grid.len());
    for (i, r) in results.into_iter().enumerate() {
        let lambda = ctx.grid[i];
        let inv = match r.expect("every grid step ran") {
            Ok(inv) => inv,
            Err(e) if script => {
                errors.push(format!("lambda {}: could not start candidate: {e}", fmt_lambda(lambda)));
                outputs.push(LambdaOutput { lambda, seed: ctx.seed + i as u64, solutions: Vec::new(), elapsed: 0.0 });
                continue;
            }
            Err(e) => return Err(SandboxError::Spawn { program: ctx.interpreter.clone(), source: e }),
        };
        if inv.timed_out {
            errors.push(format!("lambda {}: timeout after {:.1} s", fmt_lambda(lambda), inv.elapsed));
        } else if let Some(st) = inv.status.filter(|s| !s.success()) {
            let mut msg = format!("lambda {}: exited with {st}", fmt_lambda(lambda));
            let t = tail(&inv.stderr);
            if !t.is_empty() {
                msg.push_str(": ");
                msg.push_str(&t);
            }
            errors.push(msg);
        }
        let parsed = parse_output(&inv.stdout, n, lambda, &mut errors);
        if parsed.is_empty() && !inv.timed_out && inv.status.is_some_and(|s| s.success()) {
            errors.push(format!("lambda {}: empty output", fmt_lambda(lambda)));
        }
        let solutions = parsed
            .into_iter()
            .map(|(obj, w)| {
                let p = Portfolio::from_weights(w, ctx.constraints.tol());
                let feasible = check_feasibility(&p, &ctx.constraints).feasible;
                let risk = portfolio_risk(&ctx.universe, &p).unwrap_or(f64::NAN);
                let ret = portfolio_return(&ctx.universe, &p).unwrap_or(f64::NAN);
                CandidateSolution { reported_objective: obj, weights: p.weights, risk, ret, feasible }
            })
            .collect();
        outputs.push(LambdaOutput { lambda, seed: ctx.seed + i as u64, solutions, elapsed: inv.elapsed });
    }

    let mut report = CandidateReport {
        outputs,
        feasible: 0,
        infeasible: 0,
        non_dominated: 0,
        errors,
        elapsed: 0.0,
        score: Score::INFEASIBLE,
    };
    for s in report.outputs.iter().flat_map(|o| &o.solutions) {
        if s.feasible {
            report.feasible += 1;
        } else {
            report.infeasible += 1;
        }
    }
    let h = non_dominated_subset(&report.points());
    report.non_dominated = h.len();
    let gate = match ctx.mode {
        FeasibilityMode::Strict => report.infeasible == 0,
        FeasibilityMode::Filter => true,
    };
    if report.errors.is_empty() && gate && !h.is_empty() {
        // igd only fails on an empty set, excluded above
        report.score = igd(&ctx.reference, &h).map(Score).unwrap_or(Score::INFEASIBLE);
    }
    if report.infeasible > 0 && ctx.mode == FeasibilityMode::Strict {
        report.errors.push(format!("{} infeasible portfolio(s)", report.infeasible));
    }
    report.elapsed = started.elapsed().as_secs_f64();
    Ok(report)
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), SandboxError> {
    fs::write(path, bytes).map_err(|source| SandboxError::Write { path: path.display().to_string(), source })
}

/// Reads a candidate source file.
pub fn read_source(path: &Path) -> std::io::Result<String> {
    fs::read_to_string(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lambda_grid;

    fn ctx() -> EvalContext {
        let u = AssetUniverse::new(vec![0.001, 0.003], vec![0.05, 0.1], vec![1.0, 0.2, 0.2, 1.0]).unwrap();
        let p = ReferenceFrontier::new(vec![(0.001, 0.0025), (0.003, 0.01)]).unwrap();
        let mut c = EvalContext::new(u, 2, 0.01, 1.0, lambda_grid(1.0).unwrap(), p).unwrap();
        c.limit = Duration::from_secs(20);
        c.jobs = 2;
        c
    }

    fn sh(body: &str) -> String {
        format!("#!/bin/sh\n{body}\n")
    }

    #[test]
    fn scores_a_fixed_feasible_candidate() {
        let r = evaluate_candidate(&sh("echo 0 0.5 0.5"), &ctx()).unwrap();
        assert!(r.errors.is_empty(), "{:?}", r.errors);
        assert_eq!(r.feasible, 2);
        // the same portfolio at both grid points; duplicates are kept
        assert_eq!(r.non_dominated, 2);
        assert!(r.score.0.is_finite());
        let direct = igd(&ctx().reference, &non_dominated_subset(&r.points())).unwrap();
        assert_eq!(r.score.0, direct);
    }

    #[test]
    fn silent_candidate_is_infeasible() {
        let r = evaluate_candidate(&sh("true"), &ctx()).unwrap();
        assert_eq!(r.score, Score::INFEASIBLE);
        assert!(r.errors.iter().any(|e| e.contains("empty output")));
    }

    #[test]
    fn budget_violation_is_infeasible() {
        let r = evaluate_candidate(&sh("echo 0 0.5 0.6"), &ctx()).unwrap();
        assert_eq!(r.score, Score::INFEASIBLE);
        assert_eq!(r.infeasible, 2);
        let mut c = ctx();
        c.mode = FeasibilityMode::Filter;
        let r = evaluate_candidate(&sh("echo 0 0.5 0.6; echo 0 0.4 0.6"), &c).unwrap();
        assert!(r.score.0.is_finite());
        assert_eq!(r.feasible, 2);
    }

    #[test]
    fn crash_and_bad_output_are_reported() {
        let r = evaluate_candidate(&sh("echo boom >&2; exit 3"), &ctx()).unwrap();
        assert_eq!(r.score, Score::INFEASIBLE);
        assert!(r.errors.iter().any(|e| e.contains("boom")), "{:?}", r.errors);
        let r = evaluate_candidate(&sh("echo 0 0.5"), &ctx()).unwrap();
        assert!(r.errors.iter().any(|e| e.contains("expected 3")));
        let r = evaluate_candidate(&sh("echo 0 half 0.5"), &ctx()).unwrap();
        assert_eq!(r.score, Score::INFEASIBLE);
    }

    #[test]
    fn timeout_kills_the_candidate() {
        let mut c = ctx();
        c.limit = Duration::from_millis(500);
        let t = Instant::now();
        let r = evaluate_candidate(&sh("sleep 30"), &c).unwrap();
        assert!(t.elapsed() < Duration::from_secs(10));
        assert_eq!(r.score, Score::INFEASIBLE);
        assert!(r.errors.iter().any(|e| e.contains("timeout")));
    }

    #[test]
    fn protocol_arguments_and_clean_environment() {
        let r = evaluate_candidate(
            &sh("[ -z \"$HOME\" ] || exit 9\n[ \"$1\" = --universe ] && [ -f \"$2\" ] || exit 8\necho 0 0.5 0.5"),
            &ctx(),
        )
        .unwrap();
        assert!(r.errors.is_empty(), "{:?}", r.errors);
        assert_eq!(r.outputs[1].seed, 1);
    }

    #[test]
    fn missing_interpreter_is_a_sandbox_error() {
        let mut c = ctx();
        c.interpreter = "/nonexistent/interpreter".into();
        assert!(matches!(evaluate_candidate("print(1)", &c), Err(SandboxError::Spawn { .. })));
    }
}
