//! `moco`: sweeps, pooling, exact fixtures and agent runs.

mod fail;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fail::Failure;
use moco_core::agent::{
    self, AgentState, EvalContext, FeasibilityMode, LiveBackend, MockBackend, ModelBackend, PromptBundle,
    ReplayBackend,
};
use moco_core::dataio::{
    read_reference_frontier, read_solution_set, read_universe, write_reference_frontier, write_solution_set,
    write_universe, ReferenceFrontier, SolutionRecord,
};
use moco_core::frontier::{
    igd, igd_contribution, mpe_stats, non_dominated_subset, pool_vlambda, vlambda_from_records, ObjectivePoint,
    VLambdaSet,
};
use moco_core::heuristics::{run_sweep, Algorithm, SolveBudget};
use moco_core::model::{lambda_grid, AssetUniverse, ConstraintSet};
use moco_core::oracle::{exact_frontier, unconstrained_frontier};
use moco_core::report::{plot_data, pool_table, sweep_summary, vlambda_table, SweepRow, Table};
use moco_core::synthetic::random_universe;

#[derive(Parser)]
#[command(name = "moco", version, about = "Cardinality-constrained mean-variance portfolio optimization")]
struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep λ with one or more heuristics and report frontier quality.
    Sweep(SweepArgs),
    /// Pool solution sets into one V(λ) and report contributions.
    Pool(PoolArgs),
    /// Exact frontier of a small instance by subset enumeration.
    Oracle(OracleArgs),
    /// Frontier with only the budget and nonnegativity constraints.
    Uef(UefArgs),
    /// Write a seeded random universe.
    Synth(SynthArgs),
    /// Run the generate-evaluate-refine loop over candidate programs.
    Agent(AgentArgs),
}

#[derive(Args, Clone)]
struct Instance {
    /// Universe file (OR-Library port format).
    #[arg(long)]
    data: PathBuf,
    /// Number of assets held.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Minimum weight of a held asset.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Maximum weight of a held asset.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Step of the λ grid.
    #[arg(long, default_value_t = 0.02)]
    dlambda: f64,
}

impl Instance {
    fn load(&self) -> Result<(AssetUniverse, ConstraintSet, Vec<f64>), Failure> {
        let u = read_universe(&self.data)?;
        let c = ConstraintSet::uniform(u.n(), self.k, self.eps, self.delta)?;
        let grid = lambda_grid(self.dlambda)?;
        Ok((u, c, grid))
    }

    fn dataset(&self) -> String {
        stem(&self.data)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    instance: Instance,
    /// Reference frontier (return, variance per line) for PE and IGD.
    #[arg(long)]
    uef: Option<PathBuf>,
    /// Algorithms to run, comma separated.
    #[arg(long = "alg", value_delimiter = ',', default_values_t = Algorithm::ALL.map(|a| a.id().to_string()))]
    algorithms: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluation budget per λ.
    #[arg(long, default_value_t = 200_000)]
    max_evals: u64,
    /// Wall-clock cap per λ in seconds.
    #[arg(long, default_value_t = 10.0)]
    time_limit: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PoolArgs {
    /// Reference frontier (return, variance per line).
    #[arg(long)]
    uef: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    dlambda: f64,
    /// Dataset label for the report.
    #[arg(long, default_value = "pooled")]
    name: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Solution-set files written by `sweep`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    instance: Instance,
    /// Output solution-set file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UefArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.001)]
    dlambda: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Mock,
    Replay,
    Live,
}

#[derive(Args)]
struct AgentArgs {
    #[command(flatten)]
    instance: Instance,
    #[arg(long)]
    uef: PathBuf,
    #[arg(long, value_enum)]
    backend: BackendKind,
    /// Completion text for the mock backend; repeat to script a sequence.
    #[arg(long = "mock-response")]
    mock_responses: Vec<PathBuf>,
    /// Recorded exchanges for the replay backend.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Refinement iterations after the first candidate.
    #[arg(long, default_value_t = 32)]
    iterations: usize,
    /// Wall-clock seconds per candidate evaluation.
    #[arg(long, default_value_t = 600.0)]
    limit: f64,
    /// Metaheuristic the role prompt asks for.
    #[arg(long, default_value = "Hill Climbing")]
    method: String,
    /// Directory with general.txt, problem.txt, role.txt and io.txt.
    #[arg(long)]
    prompts: Option<PathBuf>,
    #[arg(long, default_value = "strict")]
    feasibility_mode: FeasibilityMode,
    /// Runs candidates that lack a `#!` line.
    #[arg(long, default_value = "python3")]
    interpreter: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Continue from the history in the output directory.
    #[arg(long)]
    resume: bool,
    #[arg(long, default_value = "agent-out")]
    out: PathBuf,
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| Failure::io(path, e))
}

fn write_records(path: &Path, records: &[SolutionRecord]) -> Result<(), Failure> {
    let mut buf = Vec::new();
    write_solution_set(records, &mut buf)?;
    write(path, buf)
}

fn emit(dir: &Path, name: &str, t: &Table) -> Result<(), Failure> {
    write(&dir.join(format!("{name}.txt")), t.to_text())?;
    write(&dir.join(format!("{name}.tsv")), t.to_tsv())
}

fn quality(v: &VLambdaSet, uef: &ReferenceFrontier) -> Result<(Option<moco_core::frontier::MpeStats>, Option<f64>), Failure> {
    let pts = v.points();
    if pts.is_empty() {
        return Ok((None, None));
    }
    let mpe = mpe_stats(v, uef).ok();
    let h = non_dominated_subset(&pts);
    Ok((mpe, Some(igd(uef, &h)?)))
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Failure> {
    let (u, c, grid) = a.instance.load()?;
    let algs = a
        .algorithms
        .iter()
        .map(|s| s.parse::<Algorithm>().map_err(Failure::usage))
        .collect::<Result<Vec<_>, _>>()?;
    let uef = a.uef.as_deref().map(read_reference_frontier).transpose()?;
    let budget = SolveBudget { max_evaluations: a.max_evals, max_seconds: a.time_limit, seed: a.seed };
    create_dir(&a.out)?;
    let dataset = a.instance.dataset();
    let mut rows = Vec::new();
    for alg in algs {
        log::info!("sweeping {alg} over {} λ values", grid.len());
        let r = run_sweep(alg, &u, &c, &grid, &budget)?;
        for e in &r.entries {
            if let Err(err) = &e.outcome {
                log::warn!("{alg} found nothing at λ = {}: {err}", e.lambda);
            }
        }
        let records = r.to_records();
        write_records(&a.out.join(format!("{}.solutions", alg.id())), &records)?;
        let v = vlambda_from_records(&grid, &records)?;
        emit(&a.out, &format!("{}.vlambda", alg.id()), &vlambda_table(alg.id(), &v))?;
        let (mpe, igd) = match &uef {
            Some(p) => quality(&v, p)?,
            None => (None, None),
        };
        rows.push(SweepRow { dataset: dataset.clone(), algorithm: alg.id().into(), vlambda: v, mpe, igd });
    }
    let t = sweep_summary(&rows);
    emit(&a.out, "summary", &t)?;
    print!("{}", t.to_text());
    Ok(())
}

fn cmd_pool(a: PoolArgs) -> Result<(), Failure> {
    let uef = read_reference_frontier(&a.uef)?;
    let grid = lambda_grid(a.dlambda)?;
    let mut sets: Vec<(String, VLambdaSet)> = Vec::new();
    for path in &a.inputs {
        let records = read_solution_set(path)?;
        for alg in moco_core::dataio::algorithms_in(&records) {
            if sets.iter().any(|(a, _)| *a == alg) {
                return Err(Failure::usage(format!("algorithm {alg} appears in more than one input")));
            }
            let mine: Vec<SolutionRecord> = records.iter().filter(|r| r.algorithm == alg).cloned().collect();
            sets.push((alg.clone(), vlambda_from_records(&grid, &mine)?));
        }
    }
    let pool = pool_vlambda(&sets)?;
    let point_sets: Vec<(String, Vec<ObjectivePoint>)> = sets.iter().map(|(a, v)| (a.clone(), v.points())).collect();
    let improvement = if sets.len() >= 2 { Some(igd_contribution(&point_sets, &uef, false)?) } else { None };
    create_dir(&a.out)?;
    let mut rows = Vec::new();
    for (alg, v) in sets.iter().chain(std::iter::once(&("POOLED".to_string(), pool.pooled.clone()))) {
        let (mpe, igd) = quality(v, &uef)?;
        rows.push(SweepRow { dataset: a.name.clone(), algorithm: alg.clone(), vlambda: v.clone(), mpe, igd });
    }
    let summary = sweep_summary(&rows);
    let contributions = pool_table(&pool, improvement.as_deref());
    emit(&a.out, "summary", &summary)?;
    emit(&a.out, "contributions", &contributions)?;
    emit(&a.out, "pooled.vlambda", &vlambda_table("POOLED", &pool.pooled))?;
    write(&a.out.join("plot.tsv"), plot_data(&point_sets, Some(&uef)).to_tsv())?;
    print!("{}\n{}", summary.to_text(), contributions.to_text());
    println!("tied steps: {}", pool.tied_steps);
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Result<(), Failure> {
    let (u, c, grid) = a.instance.load()?;
    let sols = exact_frontier(&u, &c, &grid)?;
    let records: Vec<SolutionRecord> = sols
        .iter()
        .map(|s| SolutionRecord {
            lambda: s.lambda,
            algorithm: "EXACT".into(),
            feasible: true,
            risk: s.risk,
            ret: s.ret,
            weights: s.portfolio.weights.clone(),
        })
        .collect();
    write_records(&a.out, &records)?;
    println!("{} exact solutions, {} subsets each", records.len(), sols.first().map_or(0, |s| s.subsets_enumerated));
    Ok(())
}

fn cmd_uef(a: UefArgs) -> Result<(), Failure> {
    let u = read_universe(&a.data)?;
    let f = unconstrained_frontier(&u, &lambda_grid(a.dlambda)?)?;
    let mut buf = Vec::new();
    write_reference_frontier(&f, &mut buf)?;
    write(&a.out, buf)
}

fn cmd_synth(a: SynthArgs) -> Result<(), Failure> {
    if a.n == 0 {
        return Err(Failure::usage("--n must be positive"));
    }
    let mut buf = Vec::new();
    write_universe(&random_universe(a.n, a.seed), &mut buf)?;
    write(&a.out, buf)
}

fn cmd_agent(a: AgentArgs) -> Result<(), Failure> {
    let (u, _, grid) = a.instance.load()?;
    let exchanges = a.out.join("exchanges.jsonl");
    // backend problems surface before any work
    let mut backend: Box<dyn ModelBackend> = match a.backend {
        BackendKind::Mock => {
            if a.mock_responses.is_empty() {
                return Err(Failure::usage("the mock backend needs at least one --mock-response file"));
            }
            let texts = a
                .mock_responses
                .iter()
                .map(|p| fs::read_to_string(p).map_err(|e| Failure::io(p, e)))
                .collect::<Result<Vec<_>, _>>()?;
            Box::new(MockBackend::new(texts))
        }
        BackendKind::Replay => {
            let path = a.replay.as_deref().ok_or_else(|| Failure::usage("the replay backend needs --replay"))?;
            Box::new(ReplayBackend::from_file(path)?)
        }
        BackendKind::Live => Box::new(LiveBackend::from_env(Some(exchanges))?),
    };
    let bundle = match &a.prompts {
        Some(dir) => PromptBundle::load_dir(dir, &a.method)?,
        None => PromptBundle::builtin(&a.method),
    };
    let reference = read_reference_frontier(&a.uef)?;
    let mut ctx = EvalContext::new(u, a.instance.k, a.instance.eps, a.instance.delta, grid, reference)?;
    if !(a.limit > 0.0) {
        return Err(Failure::usage("--limit must be positive"));
    }
    ctx.limit = Duration::from_secs_f64(a.limit);
    ctx.seed = a.seed;
    ctx.interpreter = a.interpreter;
    ctx.mode = a.feasibility_mode;
    ctx.jobs = rayon::current_num_threads();
    create_dir(&a.out)?;
    let history = a.out.join("history.jsonl");
    let mut state = if a.resume {
        AgentState::resume(&history)?
    } else {
        if history.exists() {
            return Err(Failure::usage(format!("{} exists; pass --resume or choose another --out", history.display())));
        }
        AgentState::new()
    };
    let result = agent::run(&mut state, &bundle, backend.as_mut(), &ctx, a.iterations, Some(&history));
    let mut scores = Table::new(&["t", "score", "best_score", "accepted"]);
    for r in &state.history {
        scores.push(vec![r.t.to_string(), r.score.to_string(), r.best_score.to_string(), r.accepted.to_string()]);
    }
    emit(&a.out, "scores", &scores)?;
    let best = result?;
    write(&a.out.join("best_source.txt"), &best.source)?;
    println!("best candidate from iteration {} with score {}", best.t, best.score);
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Pool(a) => cmd_pool(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Uef(a) => cmd_uef(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Agent(a) => cmd_agent(a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    if let Err(f) = dispatch(cli.command) {
        eprintln!("error: {}", f.message);
        std::process::exit(f.code);
    }
}
