//! A built-in heuristic behind the candidate program interface, so hand-built
//! solvers can be scored on the same path as generated ones.

use std::process::ExitCode;

use clap::Parser;
use moco_core::dataio::read_universe;
use moco_core::heuristics::{solve_detailed, Algorithm, SolveBudget};
use moco_core::model::ConstraintSet;

#[derive(Parser)]
#[command(name = "moco-candidate", about = "Solve one λ and print objective and weights")]
struct Args {
    #[arg(long)]
    alg: Algorithm,
    #[arg(long)]
    universe: std::path::PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    seed: u64,
    /// Wall-clock seconds for this λ.
    #[arg(long)]
    time_limit: f64,
    #[arg(long, default_value_t = 200_000)]
    max_evals: u64,
}

fn main() -> ExitCode {
    let a = Args::parse();
    let run = || -> Result<String, String> {
        let u = read_universe(&a.universe).map_err(|e| e.to_string())?;
        let c = ConstraintSet::uniform(u.n(), a.k, a.eps, a.delta).map_err(|e| e.to_string())?;
        let budget = SolveBudget { max_evaluations: a.max_evals, max_seconds: a.time_limit, seed: a.seed };
        let o = solve_detailed(a.alg, &u, &c, a.lambda, &budget).map_err(|e| e.to_string())?;
        let mut line = format!("{}", o.objective);
        for w in &o.portfolio.weights {
            line.push_str(&format!(" {w}"));
        }
        Ok(line)
    };
    match run() {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(4)
        }
    }
}
