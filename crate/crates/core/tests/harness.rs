//! Batch-level properties of the harness: parallelism invariance, per-step
//! records and CSV round trips.

use labecop::filter::FilterConfig;
use labecop::harness::{
    discounted_return, read_runs_csv, read_summary_csv, run_batch, summarize, summarize_runs, write_runs_csv,
    write_summary_csv, write_trace_csv, RunConfig, SolverSpec, SummaryRow,
};
use labecop::labecop::LabecopConfig;
use labecop::pomcp::{DiscretisationScheme, PomcpConfig};
use labecop::problems::{LightDark1D, Passage};
use labecop::{Budget, PomdpModel};
use proptest::prelude::*;

fn labecop_run(episodes: usize, max_steps: usize) -> RunConfig {
    RunConfig {
        solver: SolverSpec::Labecop(LabecopConfig { exploration: 20.0, max_depth: None, budget: Budget::Episodes(episodes) }),
        filter: FilterConfig { particle_count: 500, ..Default::default() },
        max_steps,
    }
}

#[test]
fn batches_do_not_depend_on_thread_count() {
    let m = LightDark1D::default();
    let config = labecop_run(100, 20);
    let one = run_batch(&m, &config, 6, 77, 1).unwrap();
    let three = run_batch(&m, &config, 6, 77, 3).unwrap();
    assert_eq!(one, three);
    assert_eq!(one.iter().map(|r| r.seed).collect::<Vec<_>>(), (77..83).collect::<Vec<_>>());
}

#[test]
fn a_run_is_reproducible_from_its_seed_alone() {
    let m = Passage::default();
    let config = RunConfig {
        solver: SolverSpec::Pomcp(PomcpConfig {
            budget: Budget::Episodes(100),
            scheme: DiscretisationScheme::Threshold { distance: 1.0 },
            ..Default::default()
        }),
        filter: FilterConfig { particle_count: 300, ..Default::default() },
        max_steps: 10,
    };
    let batch = run_batch(&m, &config, 4, 10, 2).unwrap();
    let alone = run_batch(&m, &config, 1, 13, 1).unwrap();
    assert_eq!(batch[3].steps, alone[0].steps);
    assert_eq!(batch[3].discounted_return.to_bits(), alone[0].discounted_return.to_bits());
}

#[test]
fn traces_reproduce_the_stored_discounted_return() {
    let m = LightDark1D::default();
    let records = run_batch(&m, &labecop_run(150, 15), 5, 3, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for r in &records {
        write_trace_csv(dir.path(), r, m.observation_dim()).unwrap();
        let mut reader = csv::Reader::from_path(dir.path().join(format!("trace_{}.csv", r.run_id))).unwrap();
        let rewards: Vec<f64> = reader.records().map(|row| row.unwrap()[2].parse().unwrap()).collect();
        assert_eq!(rewards.len(), r.steps.len());
        let recomputed = discounted_return(rewards, m.discount());
        assert!((recomputed - r.discounted_return).abs() <= 1e-12);
    }
}

#[test]
fn runs_csv_resummarizes_to_the_same_summary() {
    let m = LightDark1D::default();
    let config = RunConfig { solver: SolverSpec::Random, ..labecop_run(1, 30) };
    let records = run_batch(&m, &config, 40, 9, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs.csv");
    let summary_path = dir.path().join("summary.csv");
    write_runs_csv(&runs, &records).unwrap();
    let summary = summarize_runs(&records).unwrap();
    write_summary_csv(&summary_path, &[SummaryRow::new("random", "lightdark", "", &summary)]).unwrap();

    let parsed: Vec<f64> = read_runs_csv(&runs).unwrap().iter().map(|r| r.discounted_return).collect();
    let again = summarize(&parsed).unwrap();
    let stored = &read_summary_csv(&summary_path).unwrap()[0];
    assert_eq!(stored.n, again.n_runs);
    assert_eq!(stored.mean.to_bits(), again.mean.to_bits());
    assert_eq!(stored.ci95.to_bits(), again.ci95.to_bits());
}

proptest! {
    #[test]
    fn summary_bounds_hold(returns in prop::collection::vec(-1e6f64..1e6, 1..200)) {
        let s = summarize(&returns).unwrap();
        prop_assert!(s.ci95 >= 0.0);
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        prop_assert_eq!(s.n_runs, returns.len());
    }
}
