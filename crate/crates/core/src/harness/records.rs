//! CSV files written by batches: one row per run, one trace per run, summary
//! and sweep tables. Every file has a header row, CRLF record terminators
//! and reals printed with 17 significant digits so they parse back to the
//! identical `f64`.

use std::path::Path;
use std::str::FromStr;

use csv::{ReaderBuilder, Terminator, WriterBuilder};

use crate::error::{Error, Result};
use crate::model::Outcome;

use super::{RunRecord, Summary, SweepRow};

pub const RUNS_HEADER: [&str; 5] = ["run_id", "seed", "steps", "outcome", "discounted_return"];
pub const SUMMARY_HEADER: [&str; 6] = ["solver", "problem", "params", "n", "mean", "ci95"];
pub const SWEEP_HEADER: [&str; 7] = ["solver", "problem", "kind", "resolution", "mean", "ci95", "n"];

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(WriterBuilder::new().terminator(Terminator::CRLF).from_path(path)?)
}

fn parse<T: FromStr>(field: &str, column: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Config(format!("bad {column} value {field:?}")))
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = ReaderBuilder::new().from_path(path)?;
    let found = reader.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Config(format!("{}: unexpected header {found:?}", path.display())));
    }
    reader.records().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_runs_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RUNS_HEADER)?;
    for r in records {
        w.write_record([
            r.run_id.to_string(),
            r.seed.to_string(),
            r.steps.len().to_string(),
            r.outcome.as_str().to_string(),
            real(r.discounted_return),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of `runs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub run_id: usize,
    pub seed: u64,
    pub steps: usize,
    pub outcome: Outcome,
    pub discounted_return: f64,
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRow>> {
    read_rows(path, &RUNS_HEADER)?
        .iter()
        .map(|r| {
            Ok(RunRow {
                run_id: parse(&r[0], "run_id")?,
                seed: parse(&r[1], "seed")?,
                steps: parse(&r[2], "steps")?,
                outcome: r[3].parse()?,
                discounted_return: parse(&r[4], "discounted_return")?,
            })
        })
        .collect()
}

/// Writes `trace_<run_id>.csv` into `dir`: `step, action, reward,
/// obs_0 .. obs_{dim-1}, degenerate, unconverged`. Steps whose observation
/// is null leave the observation columns empty.
pub fn write_trace_csv(dir: &Path, record: &RunRecord, observation_dim: usize) -> Result<()> {
    let mut w = writer(&dir.join(format!("trace_{}.csv", record.run_id)))?;
    let mut header = vec!["step".to_string(), "action".to_string(), "reward".to_string()];
    header.extend((0..observation_dim).map(|j| format!("obs_{j}")));
    header.extend(["degenerate".to_string(), "unconverged".to_string()]);
    w.write_record(&header)?;
    for s in &record.steps {
        let mut row = vec![s.step.to_string(), s.action.to_string(), real(s.reward)];
        let values = s.observation.values();
        row.extend((0..observation_dim).map(|j| values.get(j).map_or_else(String::new, |&v| real(v))));
        row.extend([flag(s.degenerate).to_string(), flag(s.unconverged).to_string()]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub solver: String,
    pub problem: String,
    pub params: String,
    pub n: usize,
    pub mean: f64,
    pub ci95: f64,
}

impl SummaryRow {
    pub fn new(solver: &str, problem: &str, params: &str, summary: &Summary) -> Self {
        Self {
            solver: solver.to_string(),
            problem: problem.to_string(),
            params: params.to_string(),
            n: summary.n_runs,
            mean: summary.mean,
            ci95: summary.ci95,
        }
    }
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.solver.clone(),
            r.problem.clone(),
            r.params.clone(),
            r.n.to_string(),
            real(r.mean),
            real(r.ci95),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path, &SUMMARY_HEADER)?
        .iter()
        .map(|r| {
            Ok(SummaryRow {
                solver: r[0].to_string(),
                problem: r[1].to_string(),
                params: r[2].to_string(),
                n: parse(&r[3], "n")?,
                mean: parse(&r[4], "mean")?,
                ci95: parse(&r[5], "ci95")?,
            })
        })
        .collect()
}

pub fn write_sweep_csv(path: &Path, solver: &str, problem: &str, kind: &str, rows: &[SweepRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            solver.to_string(),
            problem.to_string(),
            kind.to_string(),
            real(r.resolution),
            real(r.summary.mean),
            real(r.summary.ci95),
            r.summary.n_runs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{summarize, StepRecord};
    use crate::model::Observation;

    fn record(run_id: usize, ret: f64) -> RunRecord {
        RunRecord {
            run_id,
            seed: 100 + run_id as u64,
            steps: vec![StepRecord {
                step: 0,
                action: 2,
                observation: Observation::scalar(0.1),
                reward: ret,
                degenerate: false,
                unconverged: true,
            }],
            discounted_return: ret,
            outcome: Outcome::Stop,
        }
    }

    #[test]
    fn runs_round_trip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.csv");
        let records = vec![record(0, 0.1 + 0.2), record(1, -1.0 / 3.0), record(2, 1e-300)];
        write_runs_csv(&path, &records).unwrap();
        let rows = read_runs_csv(&path).unwrap();
        for (row, rec) in rows.iter().zip(&records) {
            assert_eq!(row.discounted_return.to_bits(), rec.discounted_return.to_bits());
            assert_eq!(row.seed, rec.seed);
            assert_eq!(row.outcome, rec.outcome);
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("run_id,seed,steps,outcome,discounted_return\r\n"));
    }

    #[test]
    fn summary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        let s = summarize(&[1.0, 2.5, -7.25]).unwrap();
        let rows = vec![SummaryRow::new("labecop", "lightdark", "c=20;budget=3000ep", &s)];
        write_summary_csv(&path, &rows).unwrap();
        assert_eq!(read_summary_csv(&path).unwrap(), rows);
    }

    #[test]
    fn trace_has_fixed_width() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = record(4, 1.0);
        rec.steps.push(StepRecord { observation: Observation::null(), step: 1, ..rec.steps[0].clone() });
        write_trace_csv(dir.path(), &rec, 3).unwrap();
        let text = std::fs::read_to_string(dir.path().join("trace_4.csv")).unwrap();
        let widths: Vec<usize> = text.split("\r\n").filter(|l| !l.is_empty()).map(|l| l.split(',').count()).collect();
        assert_eq!(widths, vec![8, 8, 8]);
    }

    #[test]
    fn rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.csv");
        std::fs::write(&path, "a,b\r\n1,2\r\n").unwrap();
        assert!(read_runs_csv(&path).is_err());
    }
}
