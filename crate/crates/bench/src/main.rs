use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use labecop::filter::FilterConfig;
use labecop::harness::{
    run_batch, summarize_runs, sweep_discretisation, write_runs_csv, write_summary_csv, write_sweep_csv,
    write_trace_csv, RunConfig, SolverSpec, SummaryRow,
};
use labecop::labecop::LabecopConfig;
use labecop::pomcp::{DiscretisationScheme, PomcpConfig};
use labecop::problems::{load_config, LightDark1D, OracleChain, Passage, ProblemKind};
use labecop::{Budget, PomdpModel};

/// Seeded POMDP planning experiments.
#[derive(Parser, Debug)]
#[command(name = "bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a batch of closed-loop simulations with one solver.
    Run(RunArgs),
    /// Run one POMCP batch per discretisation resolution.
    Sweep(SweepArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Problem {
    Lightdark,
    Passage,
    Oraclechain,
}

impl From<Problem> for ProblemKind {
    fn from(p: Problem) -> Self {
        match p {
            Problem::Lightdark => ProblemKind::LightDark,
            Problem::Passage => ProblemKind::Passage,
            Problem::Oraclechain => ProblemKind::OracleChain,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Solver {
    Labecop,
    Pomcp,
    Random,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DiscKind {
    Grid,
    Threshold,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, value_enum)]
    problem: Problem,
    /// Number of simulation runs.
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Base seed; run i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Episodes (LABECOP) or simulations (POMCP) per decision.
    #[arg(long, conflicts_with = "wallclock_ms")]
    budget_episodes: Option<usize>,
    /// Wall-clock planning time per decision, in milliseconds.
    #[arg(long)]
    wallclock_ms: Option<u64>,
    /// UCB1 exploration constant; defaults depend on problem and solver.
    #[arg(long)]
    exploration: Option<f64>,
    /// Discretisation used by POMCP; grid for LightDark1D, threshold otherwise.
    #[arg(long, value_enum)]
    disc_kind: Option<DiscKind>,
    /// Particles in the execution belief filter.
    #[arg(long, default_value_t = 10_000)]
    particles: usize,
    /// Step limit per run; defaults depend on the problem.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Planning depth cap; defaults to the depth where γ^d ≤ 0.01.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Problem parameter file (key = value lines).
    #[arg(long)]
    problem_config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, env = "BENCH_THREADS")]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "labecop")]
    solver: Solver,
    /// Discretisation resolution used by POMCP.
    #[arg(long, default_value_t = 1.0)]
    disc_res: f64,
    /// Skip the per-run trace files.
    #[arg(long)]
    no_traces: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated discretisation resolutions, in output order.
    #[arg(long, value_delimiter = ',', required = true)]
    resolutions: Vec<f64>,
    /// Also run LABECOP once and add it to summary.csv as a reference row.
    #[arg(long)]
    with_labecop: bool,
}

/// Default exploration constant per problem and solver. The oracle chain's
/// values span about six units; with 10 both root actions get enough
/// episodes for their estimates to settle within 0.3 of the exact values at
/// 50k episodes.
fn default_exploration(problem: Problem, solver: Solver) -> f64 {
    match (problem, solver) {
        (Problem::Lightdark, Solver::Pomcp) => 40.0,
        (Problem::Passage, Solver::Pomcp) => 400.0,
        (Problem::Lightdark, _) => 20.0,
        (Problem::Passage, _) => 420.0,
        (Problem::Oraclechain, _) => 10.0,
    }
}

fn default_max_steps(problem: Problem) -> usize {
    match problem {
        Problem::Lightdark => 100,
        Problem::Passage => 50,
        Problem::Oraclechain => OracleChain::default().horizon(),
    }
}

fn default_disc_kind(problem: Problem) -> DiscKind {
    match problem {
        Problem::Lightdark | Problem::Oraclechain => DiscKind::Grid,
        Problem::Passage => DiscKind::Threshold,
    }
}

impl Common {
    fn budget(&self) -> Budget {
        match self.wallclock_ms {
            Some(ms) => Budget::WallClock(Duration::from_millis(ms)),
            None => Budget::Episodes(self.budget_episodes.unwrap_or(3000)),
        }
    }

    fn threads(&self) -> usize {
        self.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    fn scheme(&self, resolution: f64) -> DiscretisationScheme {
        match self.disc_kind.unwrap_or_else(|| default_disc_kind(self.problem)) {
            DiscKind::Grid => DiscretisationScheme::Grid { resolution },
            DiscKind::Threshold => DiscretisationScheme::Threshold { distance: resolution },
        }
    }

    fn solver(&self, solver: Solver, resolution: f64) -> SolverSpec {
        let exploration = self.exploration.unwrap_or_else(|| default_exploration(self.problem, solver));
        match solver {
            Solver::Labecop => SolverSpec::Labecop(LabecopConfig {
                exploration,
                max_depth: self.max_depth,
                budget: self.budget(),
            }),
            Solver::Pomcp => SolverSpec::Pomcp(PomcpConfig {
                exploration,
                max_depth: self.max_depth,
                budget: self.budget(),
                scheme: self.scheme(resolution),
            }),
            Solver::Random => SolverSpec::Random,
        }
    }

    fn run_config(&self, solver: SolverSpec) -> RunConfig {
        RunConfig {
            solver,
            filter: FilterConfig { particle_count: self.particles, ..Default::default() },
            max_steps: self.max_steps.unwrap_or_else(|| default_max_steps(self.problem)),
        }
    }
}

fn batch<M: PomdpModel>(
    model: &M,
    common: &Common,
    spec: SolverSpec,
    out: &Path,
    traces: bool,
) -> Result<SummaryRow> {
    let problem = ProblemKind::from(common.problem).as_str();
    let records = run_batch(model, &common.run_config(spec), common.runs, common.seed, common.threads())?;
    write_runs_csv(&out.join("runs.csv"), &records)?;
    if traces {
        for r in &records {
            write_trace_csv(out, r, model.observation_dim())?;
        }
    }
    let summary = summarize_runs(&records)?;
    Ok(SummaryRow::new(spec.name(), problem, &spec.params(), &summary))
}

fn print_row(row: &SummaryRow) {
    println!("{} {} [{}] n={} mean={:.4} ci95={:.4}", row.solver, row.problem, row.params, row.n, row.mean, row.ci95);
}

fn run<M: PomdpModel>(model: &M, args: &RunArgs) -> Result<()> {
    let common = &args.common;
    let spec = common.solver(args.solver, args.disc_res);
    let row = batch(model, common, spec, &common.out, !args.no_traces)?;
    write_summary_csv(&common.out.join("summary.csv"), std::slice::from_ref(&row))?;
    print_row(&row);
    Ok(())
}

fn sweep<M: PomdpModel>(model: &M, args: &SweepArgs) -> Result<()> {
    let common = &args.common;
    if args.resolutions.iter().any(|r| !(*r > 0.0)) {
        bail!("resolutions must be positive");
    }
    let problem = ProblemKind::from(common.problem).as_str();
    let SolverSpec::Pomcp(baseline) = common.solver(Solver::Pomcp, args.resolutions[0]) else {
        unreachable!("POMCP spec requested")
    };
    let run_config = common.run_config(SolverSpec::Pomcp(baseline));
    let rows = sweep_discretisation(
        model,
        &baseline,
        &run_config.filter,
        run_config.max_steps,
        &args.resolutions,
        common.runs,
        common.seed,
        common.threads(),
    )?;
    let kind = baseline.scheme.kind();
    write_sweep_csv(&common.out.join("sweep.csv"), "pomcp", problem, kind, &rows)?;

    let mut summaries: Vec<SummaryRow> = rows
        .iter()
        .map(|r| {
            let spec = common.solver(Solver::Pomcp, r.resolution);
            SummaryRow::new("pomcp", problem, &spec.params(), &r.summary)
        })
        .collect();
    if args.with_labecop {
        let dir = common.out.join("labecop");
        std::fs::create_dir_all(&dir)?;
        summaries.push(batch(model, common, common.solver(Solver::Labecop, 1.0), &dir, false)?);
    }
    write_summary_csv(&common.out.join("summary.csv"), &summaries)?;
    summaries.iter().for_each(print_row);
    Ok(())
}

fn dispatch(common: &Common, mut action: impl FnMut(Model) -> Result<()>) -> Result<()> {
    std::fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    let config = common.problem_config.as_deref();
    match common.problem {
        Problem::Lightdark => action(Model::LightDark(LightDark1D::new(match config {
            Some(path) => load_config(path)?,
            None => Default::default(),
        }))),
        Problem::Passage => action(Model::Passage(Passage::new(match config {
            Some(path) => load_config(path)?,
            None => Default::default(),
        }))),
        Problem::Oraclechain => {
            if config.is_some() {
                bail!("the oracle chain has no configurable parameters");
            }
            action(Model::OracleChain(OracleChain::default()))
        }
    }
}

enum Model {
    LightDark(LightDark1D),
    Passage(Passage),
    OracleChain(OracleChain),
}

macro_rules! with_model {
    ($model:expr, |$m:ident| $body:expr) => {
        match $model {
            Model::LightDark($m) => $body,
            Model::Passage($m) => $body,
            Model::OracleChain($m) => $body,
        }
    };
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => dispatch(&args.common, |model| with_model!(model, |m| run(&m, args))),
        Command::Sweep(args) => dispatch(&args.common, |model| with_model!(model, |m| sweep(&m, args))),
    }
}
