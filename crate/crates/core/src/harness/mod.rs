//! Seeded closed-loop simulations, batches, summary statistics and
//! discretisation sweeps.

mod records;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::belief::WeightedBelief;
use crate::error::{Error, Result};
use crate::filter::{sir_update, FilterConfig};
use crate::labecop::{LabecopConfig, LabecopPlanner};
use crate::model::{Observation, Outcome, PomdpModel};
use crate::planning::{PlanResult, Planner, RandomPlanner};
use crate::pomcp::{DiscretisationScheme, PomcpConfig, PomcpPlanner};

pub use records::{
    read_runs_csv, read_summary_csv, write_runs_csv, write_summary_csv, write_sweep_csv, write_trace_csv, RunRow,
    SummaryRow,
};

/// Sub-stream of a run's generator used by the simulated environment.
pub const ENV_STREAM: u64 = 0;
/// Sub-stream used by the planner.
pub const PLANNER_STREAM: u64 = 1;
/// Sub-stream used by the belief filter, including the initial belief.
pub const FILTER_STREAM: u64 = 2;

/// Seed of run `index` in a batch starting at `base_seed`.
pub fn run_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one component of the run with the given seed.
pub fn component_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverSpec {
    Labecop(LabecopConfig),
    Pomcp(PomcpConfig),
    Random,
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Labecop(_) => "labecop",
            SolverSpec::Pomcp(_) => "pomcp",
            SolverSpec::Random => "random",
        }
    }

    /// Compact `key=value;...` description used in summary tables.
    pub fn params(&self) -> String {
        match self {
            SolverSpec::Labecop(c) => format!(
                "c={};budget={};max_depth={}",
                c.exploration,
                budget_label(&c.budget),
                depth_label(c.max_depth)
            ),
            SolverSpec::Pomcp(c) => format!(
                "c={};budget={};max_depth={};disc={}:{}",
                c.exploration,
                budget_label(&c.budget),
                depth_label(c.max_depth),
                c.scheme.kind(),
                c.scheme.resolution()
            ),
            SolverSpec::Random => String::new(),
        }
    }
}

fn budget_label(budget: &crate::planning::Budget) -> String {
    match budget {
        crate::planning::Budget::Episodes(n) => format!("{n}ep"),
        crate::planning::Budget::WallClock(d) => format!("{}ms", d.as_millis()),
    }
}

fn depth_label(depth: Option<usize>) -> String {
    depth.map_or_else(|| "auto".to_string(), |d| d.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub solver: SolverSpec,
    pub filter: FilterConfig,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub action: usize,
    pub observation: Observation,
    pub reward: f64,
    /// The belief the action was planned from was flagged degenerate.
    pub degenerate: bool,
    /// The planner never tried any root action and picked at random.
    pub unconverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub discounted_return: f64,
    pub outcome: Outcome,
}

impl RunRecord {
    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.reward)
    }
}

/// `Σ γ^t r_t`, accumulated front to back.
pub fn discounted_return(rewards: impl IntoIterator<Item = f64>, discount: f64) -> f64 {
    let mut total = 0.0;
    let mut scale = 1.0;
    for r in rewards {
        total += scale * r;
        scale *= discount;
    }
    total
}

enum AnyPlanner<S> {
    Labecop(LabecopPlanner<S>),
    Pomcp(PomcpPlanner<S>),
    Random(RandomPlanner),
}

impl<S: Clone> AnyPlanner<S> {
    fn new(spec: &SolverSpec) -> Self {
        match spec {
            SolverSpec::Labecop(c) => AnyPlanner::Labecop(LabecopPlanner::new(*c)),
            SolverSpec::Pomcp(c) => AnyPlanner::Pomcp(PomcpPlanner::new(*c)),
            SolverSpec::Random => AnyPlanner::Random(RandomPlanner),
        }
    }

    fn plan<M, R>(&mut self, belief: &WeightedBelief<S>, model: &M, rng: &mut R) -> Result<PlanResult>
    where
        M: PomdpModel<State = S>,
        R: Rng + ?Sized,
    {
        match self {
            AnyPlanner::Labecop(p) => p.plan(belief, model, rng),
            AnyPlanner::Pomcp(p) => p.plan(belief, model, rng),
            AnyPlanner::Random(p) => Planner::<M>::plan(p, belief, model, rng),
        }
    }
}

/// Runs one closed-loop simulation: plan at the current belief, act on the
/// hidden state, filter the belief with the received observation, until a
/// terminal state or `max_steps`. Fully determined by `seed`.
pub fn run_simulation<M: PomdpModel>(model: &M, config: &RunConfig, run_id: usize, seed: u64) -> Result<RunRecord> {
    config.filter.validate()?;
    let mut env_rng = component_rng(seed, ENV_STREAM);
    let mut planner_rng = component_rng(seed, PLANNER_STREAM);
    let mut filter_rng = component_rng(seed, FILTER_STREAM);

    let mut planner = AnyPlanner::new(&config.solver);
    let mut belief = model.initial_belief(config.filter.particle_count, &mut filter_rng);
    let mut state = model.sample_initial(&mut env_rng);
    let mut steps = Vec::new();
    let mut outcome = Outcome::StepLimit;

    for t in 0..config.max_steps {
        if model.is_terminal(&state) {
            outcome = model.outcome(&state);
            break;
        }
        let plan = planner.plan(&belief, model, &mut planner_rng)?;
        let result = model.step(&state, plan.action, &mut env_rng)?;
        steps.push(StepRecord {
            step: t,
            action: plan.action,
            observation: result.observation.clone(),
            reward: result.reward,
            degenerate: belief.is_degenerate(),
            unconverged: plan.unconverged,
        });
        state = result.next_state;
        if result.terminal {
            outcome = model.outcome(&state);
            break;
        }
        belief = sir_update(&belief, plan.action, &result.observation, model, &config.filter, &mut filter_rng)?;
    }

    let discounted_return = discounted_return(steps.iter().map(|s| s.reward), model.discount());
    Ok(RunRecord { run_id, seed, steps, discounted_return, outcome })
}

/// Runs `n_runs` simulations with seeds `base_seed + i` on a pool of
/// `threads` workers. Results are in run order and do not depend on
/// `threads`.
pub fn run_batch<M: PomdpModel>(
    model: &M,
    config: &RunConfig,
    n_runs: usize,
    base_seed: u64,
    threads: usize,
) -> Result<Vec<RunRecord>> {
    if n_runs == 0 {
        return Err(Error::Config("n_runs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| {
        (0..n_runs)
            .into_par_iter()
            .map(|i| run_simulation(model, config, i, run_seed(base_seed, i)))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n_runs: usize,
    pub mean: f64,
    /// `1.96 · s / √n` with the `n − 1` sample standard deviation; 0 for a
    /// single run.
    pub ci95: f64,
    pub min: f64,
    pub max: f64,
    /// True when `n_runs = 1`, so `ci95` is a convention rather than an estimate.
    pub single_run: bool,
}

pub fn summarize(returns: &[f64]) -> Result<Summary> {
    if returns.is_empty() {
        return Err(Error::EmptyReturns);
    }
    let n = returns.len();
    let mean = returns.iter().sum::<f64>() / n as f64;
    let ci95 = if n > 1 {
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        1.96 * var.sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    let min = returns.iter().copied().fold(f64::INFINITY, f64::min);
    let max = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Rounding can push the mean of near-equal returns just outside [min, max].
    let mean = mean.clamp(min, max);
    Ok(Summary { n_runs: n, mean, ci95, min, max, single_run: n == 1 })
}

pub fn summarize_runs(records: &[RunRecord]) -> Result<Summary> {
    summarize(&records.iter().map(|r| r.discounted_return).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub resolution: f64,
    pub summary: Summary,
}

/// One POMCP batch per resolution, in the given order, with the scheme kind
/// of `baseline.scheme`.
pub fn sweep_discretisation<M: PomdpModel>(
    model: &M,
    baseline: &PomcpConfig,
    filter: &FilterConfig,
    max_steps: usize,
    resolutions: &[f64],
    n_runs: usize,
    base_seed: u64,
    threads: usize,
) -> Result<Vec<SweepRow>> {
    if resolutions.is_empty() {
        return Err(Error::Config("at least one resolution is required".into()));
    }
    resolutions
        .iter()
        .map(|&resolution| {
            let scheme = match baseline.scheme {
                DiscretisationScheme::Grid { .. } => DiscretisationScheme::Grid { resolution },
                DiscretisationScheme::Threshold { .. } => DiscretisationScheme::Threshold { distance: resolution },
            };
            scheme.validate()?;
            let config = RunConfig {
                solver: SolverSpec::Pomcp(PomcpConfig { scheme, ..*baseline }),
                filter: *filter,
                max_steps,
            };
            let records = run_batch(model, &config, n_runs, base_seed, threads)?;
            Ok(SweepRow { resolution, summary: summarize_runs(&records)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::Budget;
    use crate::problems::lightdark::{LightDark1D, LightDarkConfig};

    #[test]
    fn summary_examples() {
        let s = summarize(&[5.0]).unwrap();
        assert_eq!((s.mean, s.ci95, s.single_run), (5.0, 0.0, true));
        let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.ci95 - 1.96 / 3f64.sqrt()).abs() < 1e-12);
        assert!((s.ci95 - 1.1316).abs() < 1e-4);
        let s = summarize(&[0.0, 100.0]).unwrap();
        assert_eq!(s.mean, 50.0);
        assert!((s.ci95 - 98.0).abs() < 1e-9, "{}", s.ci95);
        let s = summarize(&[4.2; 7]).unwrap();
        assert_eq!(s.ci95, 0.0);
        assert!(matches!(summarize(&[]), Err(Error::EmptyReturns)));
    }

    #[test]
    fn discounted_return_example() {
        assert!((discounted_return([-1.0, 100.0], 0.95) - 94.0).abs() < 1e-12);
    }

    #[test]
    fn component_streams_differ() {
        let a: u64 = component_rng(7, ENV_STREAM).random();
        let b: u64 = component_rng(7, PLANNER_STREAM).random();
        let c: u64 = component_rng(8, ENV_STREAM).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, component_rng(7, ENV_STREAM).random::<u64>());
    }

    fn quick(solver: SolverSpec) -> RunConfig {
        RunConfig { solver, filter: FilterConfig { particle_count: 500, ..Default::default() }, max_steps: 100 }
    }

    #[test]
    fn known_origin_stops_at_once() {
        let m = LightDark1D::new(LightDarkConfig { init_low: 0, init_high: 0, ..Default::default() });
        let cfg = quick(SolverSpec::Labecop(LabecopConfig { budget: Budget::Episodes(200), ..Default::default() }));
        let rec = run_simulation(&m, &cfg, 0, 3).unwrap();
        assert_eq!(rec.steps.len(), 1);
        assert_eq!(rec.discounted_return, 100.0);
        assert_eq!(rec.outcome, Outcome::Stop);
    }

    #[test]
    fn same_seed_same_record() {
        let m = LightDark1D::default();
        let cfg = quick(SolverSpec::Pomcp(PomcpConfig { budget: Budget::Episodes(100), ..Default::default() }));
        assert_eq!(run_simulation(&m, &cfg, 0, 42).unwrap(), run_simulation(&m, &cfg, 0, 42).unwrap());
    }

    #[test]
    fn random_policy_runs_end() {
        let m = LightDark1D::default();
        let records = run_batch(&m, &quick(SolverSpec::Random), 20, 0, 2).unwrap();
        for r in &records {
            assert!(!r.steps.is_empty());
            let again = discounted_return(r.rewards(), 0.95);
            assert_eq!(again, r.discounted_return);
        }
    }
}
