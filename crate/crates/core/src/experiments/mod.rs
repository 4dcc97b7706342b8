//! Config-driven ensemble runs. Every run is a pure function of its config:
//! realizations are computed in parallel, collected in index order and
//! reduced serially, so output files are byte-identical across re-runs and
//! worker counts.

mod config;
pub mod oracle;
mod runs;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{
    region_from_intervals, EnergyMode, Experiment, ExperimentConfig, FitWindow, Intervals, Multipoint, QuenchLabels,
};

use crate::eigencorrelator::DecayFit;
use crate::error::{Result, XyError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    /// Acceptance criterion this check belongs to.
    pub criterion: u32,
    pub check: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Verdict {
    fn at_most(criterion: u32, check: impl Into<String>, value: f64, threshold: f64) -> Self {
        Verdict { criterion, check: check.into(), value, threshold, pass: value <= threshold }
    }

    fn at_least(criterion: u32, check: impl Into<String>, value: f64, threshold: f64) -> Self {
        Verdict { criterion, check: check.into(), value, threshold, pass: value >= threshold }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub fit: Option<DecayFit>,
    pub results: serde_json::Value,
    pub verdicts: Vec<Verdict>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, check: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// `(file name, contents)`, including `summary.json`.
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Summary,
}

/// Git-style content hash: SHA-256 over `"blob <len>\0"` followed by the bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Runs without touching the filesystem. `raw` are the config bytes that
/// the hash is taken over.
pub fn run_experiment(cfg: &ExperimentConfig, raw: &[u8], workers: usize) -> Result<RunOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| XyError::InvalidInput(format!("thread pool: {e}")))?;
    let ctx = runs::Ctx { cfg, pool: &pool };
    let produced = runs::dispatch(&ctx)?;
    let summary = Summary {
        experiment: cfg.experiment.name().into(),
        config: cfg.clone(),
        config_hash: config_hash(raw),
        fit: produced.fit,
        results: produced.results,
        verdicts: produced.verdicts,
    };
    let mut files = produced.files;
    let mut json = serde_json::to_vec_pretty(&summary)?;
    json.push(b'\n');
    files.push(("summary.json".into(), json));
    Ok(RunOutput { files, summary })
}

pub fn write_output(out: &RunOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in &out.files {
        std::fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

/// Parse, run and write into the config's `output_dir`. `workers` overrides
/// the configured worker count.
pub fn run_file(path: &Path, workers: Option<usize>) -> Result<RunOutput> {
    let raw = std::fs::read(path)?;
    let cfg = ExperimentConfig::from_json(&raw, path)?;
    let out = run_experiment(&cfg, &raw, workers.unwrap_or(cfg.workers))?;
    write_output(&out, &cfg.output_dir)?;
    Ok(out)
}

/// Map over realization indices on the pool, keeping index order.
fn over_realizations<T, F>(pool: &rayon::ThreadPool, count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| f(i).map_err(|e| XyError::Realization { index: i, source: Box::new(e) }))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_matches_git_blob_format() {
        // sha256 of "blob 0\0"
        assert_eq!(config_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }
}
