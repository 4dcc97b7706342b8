use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::disorder::EnsembleSpec;
use crate::entanglement::Strategy;
use crate::error::{Result, XyError};
use crate::grid::TimeGrid;
use crate::quasifree::OrderedConfiguration;
use crate::transport::Region;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleSpec,
    pub experiment: Experiment,
    #[serde(default)]
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub fit_window: FitWindow,
    /// Second ensemble for comparative verdicts (clean or weaker disorder).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<EnsembleSpec>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("xylab-out")
}

fn default_workers() -> usize {
    1
}

/// Distances over which averaged decay profiles are fitted; `max_distance`
/// is clipped to `n - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindow {
    pub min_distance: usize,
    pub max_distance: usize,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow { min_distance: 5, max_distance: 40 }
    }
}

/// Inclusive 1-based site intervals, e.g. `[[1, 30], [70, 100]]`.
pub type Intervals = Vec<[usize; 2]>;

pub fn region_from_intervals(intervals: &Intervals, n: usize) -> Result<Region> {
    let mut sites = Vec::new();
    for &[a, b] in intervals {
        if a == 0 || a > b || b > n {
            return Err(XyError::InvalidInput(format!("interval [{a}, {b}] is not inside [1, {n}]")));
        }
        sites.extend(a - 1..b);
    }
    Region::new(sites)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Eigencorrelator {
        #[serde(default)]
        block: bool,
    },
    LrBound {
        #[serde(default = "default_distances")]
        distances: Vec<usize>,
        /// Also measure exact commutator norms (chains of at most 10 sites).
        #[serde(default)]
        commutators: bool,
    },
    Correlations {
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default = "default_max_r")]
        max_r: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default = "default_eta_scale")]
        eta_scale: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        multipoint: Option<Multipoint>,
    },
    EntanglementStatic {
        cuts: Vec<usize>,
        strategy: Strategy,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
    EntanglementQuench {
        cuts: Vec<usize>,
        #[serde(default)]
        labels: QuenchLabels,
        /// Entropies at `t <= early_window` form the baseline of the growth ratio.
        #[serde(default = "default_early_window")]
        early_window: f64,
    },
    TransportParticle {
        s1: Intervals,
        s2: Intervals,
        #[serde(default = "default_occupation")]
        eta: f64,
    },
    TransportEnergy {
        mode: EnergyMode,
    },
    Fock {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default = "default_eta_scale")]
        eta_scale: f64,
        #[serde(default = "default_fock_pairs")]
        pairs: usize,
        #[serde(default = "default_max_r")]
        max_r: usize,
        #[serde(default)]
        seed: u64,
    },
    OracleCheck {},
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Eigencorrelator { .. } => "eigencorrelator",
            Experiment::LrBound { .. } => "lr_bound",
            Experiment::Correlations { .. } => "correlations",
            Experiment::EntanglementStatic { .. } => "entanglement_static",
            Experiment::EntanglementQuench { .. } => "entanglement_quench",
            Experiment::TransportParticle { .. } => "transport_particle",
            Experiment::TransportEnergy { .. } => "transport_energy",
            Experiment::Fock { .. } => "fock",
            Experiment::OracleCheck {} => "oracle_check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Multipoint {
    pub x: OrderedConfiguration,
    pub y: OrderedConfiguration,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuenchLabels {
    #[default]
    Vacuum,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergyMode {
    Isotropic {
        s1: Intervals,
        s2: Intervals,
        #[serde(default = "default_occupation")]
        eta: f64,
    },
    /// `S1` is a centered interval of `width` sites; the profile is constant.
    Anisotropic {
        width: usize,
        #[serde(default = "default_flat_occupation")]
        eta: f64,
        sizes: Vec<usize>,
    },
}

fn default_distances() -> Vec<usize> {
    vec![20]
}
fn default_pairs() -> usize {
    200
}
fn default_fock_pairs() -> usize {
    500
}
fn default_max_r() -> usize {
    5
}
fn default_alpha() -> f64 {
    1.25
}
fn default_tau() -> f64 {
    0.5
}
fn default_eta_scale() -> f64 {
    0.5
}
fn default_beta() -> f64 {
    1.0
}
fn default_early_window() -> f64 {
    1.0
}
fn default_occupation() -> f64 {
    1.0
}
fn default_flat_occupation() -> f64 {
    0.25
}

impl ExperimentConfig {
    /// Parses and validates; schema errors name the offending field path.
    pub fn from_json(bytes: &[u8], origin: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| XyError::Config {
            path: e.path().to_string(),
            message: format!("{}: {}", origin.display(), e.inner()),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        fn fail<T>(path: &str, message: String) -> Result<T> {
            Err(XyError::Config { path: path.into(), message })
        }
        self.ensemble.validate().or_else(|e| fail("ensemble", e.to_string()))?;
        if let Some(r) = &self.reference {
            r.validate().or_else(|e| fail("reference", e.to_string()))?;
        }
        self.time_grid.validate().or_else(|e| fail("time_grid", e.to_string()))?;
        if self.workers == 0 {
            return fail("workers", "must be at least 1".into());
        }
        let w = self.fit_window;
        if w.max_distance < w.min_distance + 2 {
            return fail("fit_window", "window needs at least 3 distances".into());
        }
        let n = self.ensemble.n;
        match &self.experiment {
            Experiment::EntanglementStatic { cuts, .. } | Experiment::EntanglementQuench { cuts, .. } => {
                if cuts.is_empty() || cuts.iter().any(|&l| l == 0 || l >= n) {
                    return fail("experiment.cuts", format!("cuts must be nonempty and lie in 1..{n}"));
                }
            }
            Experiment::TransportParticle { s1, s2, .. }
            | Experiment::TransportEnergy { mode: EnergyMode::Isotropic { s1, s2, .. } } => {
                region_from_intervals(s1, n).or_else(|e| fail("experiment.s1", e.to_string()))?;
                region_from_intervals(s2, n).or_else(|e| fail("experiment.s2", e.to_string()))?;
            }
            Experiment::TransportEnergy { mode: EnergyMode::Anisotropic { width, sizes, .. } } => {
                if sizes.is_empty() || sizes.iter().any(|&m| m < *width + 2) || *width == 0 {
                    return fail("experiment.mode.sizes", "sizes must be nonempty and exceed the width".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "ensemble": {"n": 10, "mu": {"kind": "constant", "value": 1.0},
                     "gamma": {"kind": "constant", "value": 0.0},
                     "nu": {"kind": "uniform", "lo": -1.0, "hi": 1.0},
                     "base_seed": 3, "realizations": 2},
        "experiment": {"kind": "eigencorrelator"}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(MINIMAL.as_bytes(), Path::new("m.json")).unwrap();
        assert_eq!(c.experiment, Experiment::Eigencorrelator { block: false });
        assert_eq!(c.time_grid, TimeGrid::default());
        assert_eq!(c.workers, 1);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad = MINIMAL.replace("\"realizations\": 2", "\"realizations\": \"two\"");
        match ExperimentConfig::from_json(bad.as_bytes(), Path::new("b.json")) {
            Err(XyError::Config { path, .. }) => assert_eq!(path, "ensemble.realizations"),
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace("eigencorrelator\"}", "eigencorrelator\", \"blok\": true}");
        assert!(matches!(ExperimentConfig::from_json(bad.as_bytes(), Path::new("b.json")), Err(XyError::Config { .. })));
        let bad = MINIMAL.replace("{\"kind\": \"eigencorrelator\"}", "{\"kind\": \"entanglement_static\", \"cuts\": [10], \"strategy\": {\"kind\": \"exhaustive\"}}");
        match ExperimentConfig::from_json(bad.as_bytes(), Path::new("b.json")) {
            Err(XyError::Config { path, .. }) => assert_eq!(path, "experiment.cuts"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn intervals_are_one_based_inclusive() {
        let r = region_from_intervals(&vec![[1, 3], [8, 10]], 10).unwrap();
        assert_eq!(r.sites, vec![0, 1, 2, 7, 8, 9]);
        assert!(region_from_intervals(&vec![[0, 3]], 10).is_err());
        assert!(region_from_intervals(&vec![[4, 11]], 10).is_err());
    }
}
