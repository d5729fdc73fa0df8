//! Five metaheuristic solvers for the scalarized problem at one `λ`.
//!
//! All of them search over (selection, score) candidates decoded by
//! [`crate::model::repair`], so every portfolio they return is feasible by
//! construction. Promising selections get their weights refined by a
//! projected-gradient polish.
//!
//! Randomness comes from ChaCha8 seeded with [`SolveBudget::seed`]. A sweep
//! gives the solve at grid index `i` the seed [`lambda_seed`]`(seed, i)`:
//! the first output word of ChaCha8 seeded with `seed` on stream `i`.

mod abc;
mod de;
mod grasp;
mod hc;
mod polish;
mod pso;
mod search;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dataio::SolutionRecord;
use crate::model::{AssetUniverse, ConstraintSet, ModelError, Portfolio};
use search::Context;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("budget exhausted before any feasible portfolio was found")]
    NoSolution,
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Abc,
    De,
    Grasp,
    Hc,
    Pso,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::Abc, Algorithm::De, Algorithm::Grasp, Algorithm::Hc, Algorithm::Pso];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Abc => "ABC",
            Algorithm::De => "DE",
            Algorithm::Grasp => "GRASP",
            Algorithm::Hc => "HC",
            Algorithm::Pso => "PSO",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown algorithm '{s}' (expected one of ABC, DE, GRASP, HC, PSO)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveBudget {
    pub max_evaluations: u64,
    pub max_seconds: f64,
    pub seed: u64,
}

impl Default for SolveBudget {
    fn default() -> Self {
        Self { max_evaluations: 200_000, max_seconds: 10.0, seed: 0 }
    }
}

impl SolveBudget {
    fn validate(&self) -> Result<(), SolveError> {
        if self.max_evaluations == 0 || !(self.max_seconds > 0.0) {
            return Err(SolveError::InvalidBudget(format!(
                "need positive caps, got {} evaluations and {} s",
                self.max_evaluations, self.max_seconds
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub portfolio: Portfolio,
    pub risk: f64,
    pub ret: f64,
    pub objective: f64,
    pub evaluations: u64,
    pub elapsed: Duration,
    /// `(evaluation count, incumbent objective)` at every improvement.
    pub trace: Vec<(u64, f64)>,
}

/// Derives the seed of grid step `index` from a sweep seed.
pub fn lambda_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

pub fn solve(
    alg: Algorithm,
    u: &AssetUniverse,
    c: &ConstraintSet,
    lambda: f64,
    budget: &SolveBudget,
) -> Result<Portfolio, SolveError> {
    solve_detailed(alg, u, c, lambda, budget).map(|o| o.portfolio)
}

pub fn solve_detailed(
    alg: Algorithm,
    u: &AssetUniverse,
    c: &ConstraintSet,
    lambda: f64,
    budget: &SolveBudget,
) -> Result<SolveOutcome, SolveError> {
    budget.validate()?;
    if c.n() != u.n() {
        return Err(ModelError::Shape { expected: u.n(), actual: c.n() }.into());
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ModelError::Domain(format!("lambda {lambda} outside [0, 1]")).into());
    }
    let mut ctx = Context::new(u, c, lambda, budget, ChaCha8Rng::seed_from_u64(budget.seed));
    match alg {
        Algorithm::Abc => abc::run(&mut ctx),
        Algorithm::De => de::run(&mut ctx),
        Algorithm::Grasp => grasp::run(&mut ctx),
        Algorithm::Hc => hc::run(&mut ctx),
        Algorithm::Pso => pso::run(&mut ctx),
    }
    ctx.finish();
    let evaluations = ctx.evaluations();
    let elapsed = ctx.elapsed();
    let (best, trace) = ctx.into_parts();
    let best = best.ok_or(SolveError::NoSolution)?;
    Ok(SolveOutcome {
        portfolio: best.portfolio,
        risk: best.risk,
        ret: best.ret,
        objective: best.obj,
        evaluations,
        elapsed,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub lambda: f64,
    pub outcome: Result<SolveOutcome, SolveError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub algorithm: Algorithm,
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    /// Solved entries as solution-set records, in grid order.
    pub fn to_records(&self) -> Vec<SolutionRecord> {
        self.entries
            .iter()
            .filter_map(|e| {
                let o = e.outcome.as_ref().ok()?;
                Some(SolutionRecord {
                    lambda: e.lambda,
                    algorithm: self.algorithm.id().to_string(),
                    feasible: true,
                    risk: o.risk,
                    ret: o.ret,
                    weights: o.portfolio.weights.clone(),
                })
            })
            .collect()
    }

    pub fn missing(&self) -> usize {
        self.entries.iter().filter(|e| e.outcome.is_err()).count()
    }
}

/// One independent solve per grid `λ`, run in parallel; results come back in
/// grid order. A step that finds nothing is recorded, not fatal.
pub fn run_sweep(
    alg: Algorithm,
    u: &AssetUniverse,
    c: &ConstraintSet,
    grid: &[f64],
    budget: &SolveBudget,
) -> Result<SweepResult, SolveError> {
    budget.validate()?;
    let entries = grid
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let b = SolveBudget { seed: lambda_seed(budget.seed, i), ..*budget };
            SweepEntry { lambda, outcome: solve_detailed(alg, u, c, lambda, &b) }
        })
        .collect();
    Ok(SweepResult { algorithm: alg, entries })
}
