//! Run metrics: per-evaluation rows, CSV emission with a JSON config
//! sidecar, and multi-seed aggregation with bootstrap intervals.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::rng::Prng;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("aggregate needs at least one run")]
    NoRuns,
}

/// One evaluation row. `value_error` is -1 when no exact model exists
/// for the environment (kept finite by contract).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub env_step: u64,
    pub mean_return: f64,
    pub mean_q: f64,
    pub q_diff: f64,
    pub value_error: f64,
    pub updates: u64,
    pub starvation: u64,
    pub seed: u64,
}

impl RunRecord {
    pub fn assert_finite(&self) {
        for (name, v) in [
            ("mean_return", self.mean_return),
            ("mean_q", self.mean_q),
            ("q_diff", self.q_diff),
            ("value_error", self.value_error),
        ] {
            assert!(v.is_finite(), "{name} not finite: {v}");
        }
    }
}

/// Write one run as CSV plus a JSON sidecar of the resolved config.
/// `path` is the CSV path; the sidecar replaces its extension with
/// `.json`.
pub fn emit(
    records: &[RunRecord],
    cfg: &ExperimentConfig,
    path: &Path,
) -> Result<(), RecordError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        // serialize() would normally write the header; keep it for
        // empty streams too.
        w.write_record([
            "env_step",
            "mean_return",
            "mean_q",
            "q_diff",
            "value_error",
            "updates",
            "starvation",
            "seed",
        ])?;
    }
    for r in records {
        r.assert_finite();
        w.serialize(r)?;
    }
    w.flush()?;
    fs::write(path.with_extension("json"), cfg.to_json())?;
    Ok(())
}

pub fn parse_csv(path: &Path) -> Result<Vec<RunRecord>, RecordError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Aggregated point: per-step cross-seed mean return and a bootstrap
/// 95% percentile interval (10^4 resamples).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRow {
    pub env_step: u64,
    pub n_seeds: usize,
    pub mean_return: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

const BOOTSTRAP_RESAMPLES: usize = 10_000;

/// Align runs on env_step (rows beyond the shortest run are dropped)
/// and bootstrap the cross-seed mean of `mean_return`.
pub fn aggregate(runs: &[Vec<RunRecord>]) -> Result<Vec<AggregateRow>, RecordError> {
    if runs.is_empty() || runs.iter().any(|r| r.is_empty()) {
        return Err(RecordError::NoRuns);
    }
    let n_rows = runs.iter().map(|r| r.len()).min().unwrap();
    let mut rng = Prng::seed_from_u64(AGGREGATE_SEED);
    let mut out = Vec::with_capacity(n_rows);
    for i in 0..n_rows {
        let step = runs[0][i].env_step;
        let values: Vec<f64> = runs.iter().map(|r| r[i].mean_return).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let (lo, hi) = bootstrap_ci(&values, &mut rng);
        out.push(AggregateRow {
            env_step: step,
            n_seeds: values.len(),
            mean_return: mean,
            ci_lo: lo,
            ci_hi: hi,
        });
    }
    Ok(out)
}

fn bootstrap_ci(values: &[f64], rng: &mut Prng) -> (f64, f64) {
    let n = values.len();
    let mut means = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut s = 0.0;
        for _ in 0..n {
            s += values[rng.gen_range(0..n)];
        }
        means.push(s / n as f64);
    }
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = means[(0.025 * BOOTSTRAP_RESAMPLES as f64) as usize];
    let hi = means[(0.975 * BOOTSTRAP_RESAMPLES as f64) as usize - 1];
    (lo, hi)
}

pub fn emit_aggregate(rows: &[AggregateRow], path: &Path) -> Result<(), RecordError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed seed so aggregation output is reproducible regardless of run
/// seeds.
const AGGREGATE_SEED: u64 = 0xb007_57a7;
