//! Disorder realizations of the chain parameters.
//!
//! Every realization is a pure function of `(base_seed, index)`: the stream
//! seed is the SplitMix64 finalizer of `base_seed ^ index`, and entries are
//! drawn in the fixed order `mu_1..mu_{n-1}`, `gamma_1..gamma_{n-1}`,
//! `nu_1..nu_n`. Realizations can therefore be produced in any order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, XyError};

/// Single-site parameter distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Distribution {
    Uniform { lo: f64, hi: f64 },
    Constant { value: f64 },
}

impl Distribution {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Distribution::Uniform { lo, hi }
    }

    pub fn constant(value: f64) -> Self {
        Distribution::Constant { value }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) {
                    return invalid("uniform bounds must be finite");
                }
                if lo >= hi {
                    return invalid(format!("uniform distribution needs lo < hi, got [{lo}, {hi}]"));
                }
            }
            Distribution::Constant { value } => {
                if !value.is_finite() {
                    return invalid("constant value must be finite");
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            Distribution::Constant { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Distribution::Constant { .. } => 0.0,
        }
    }

    /// Largest absolute value in the support.
    pub fn max_abs(&self) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => lo.abs().max(hi.abs()),
            Distribution::Constant { value } => value.abs(),
        }
    }

    /// Constant distributions consume nothing from the stream.
    fn sample(&self, rng: &mut impl RngCore) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => lo + (hi - lo) * unit_f64(rng),
            Distribution::Constant { value } => value,
        }
    }
}

/// 53-bit uniform in [0, 1), independent of `rand`'s float conversion.
fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// SplitMix64 output finalizer.
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-realization random stream.
pub fn realization_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64_mix(base_seed ^ index))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n: usize,
    pub mu: Distribution,
    pub gamma: Distribution,
    pub nu: Distribution,
    pub base_seed: u64,
    pub realizations: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("ensemble needs n >= 1");
        }
        if self.realizations == 0 {
            return invalid("ensemble needs realizations >= 1");
        }
        self.mu.validate()?;
        self.gamma.validate()?;
        self.nu.validate()?;
        Ok(())
    }

    /// True when every realization has `gamma == 0`.
    pub fn is_isotropic(&self) -> bool {
        matches!(self.gamma, Distribution::Constant { value } if value == 0.0)
    }

    pub fn chain(&self, i: u64) -> Result<ChainSpec> {
        sample_chain(self, i)
    }
}

/// One disorder realization of the XY chain parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n: usize,
    pub mu: Vec<f64>,
    pub gamma: Vec<f64>,
    pub nu: Vec<f64>,
    pub realization_index: u64,
}

impl ChainSpec {
    pub fn new(mu: Vec<f64>, gamma: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        let chain = ChainSpec { n: nu.len(), mu, gamma, nu, realization_index: 0 };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("chain needs n >= 1");
        }
        if self.nu.len() != self.n || self.mu.len() != self.n - 1 || self.gamma.len() != self.n - 1 {
            return Err(XyError::DimensionMismatch(format!(
                "chain of length {} needs |mu| = |gamma| = {} and |nu| = {}, got {}, {}, {}",
                self.n,
                self.n - 1,
                self.n,
                self.mu.len(),
                self.gamma.len(),
                self.nu.len()
            )));
        }
        let all = self.mu.iter().chain(&self.gamma).chain(&self.nu);
        if all.into_iter().any(|x| !x.is_finite()) {
            return invalid("chain parameters must be finite");
        }
        Ok(())
    }

    /// Translation-invariant chain with `mu = 1`, `gamma = 0`, `nu = 0`.
    pub fn clean(n: usize) -> Self {
        ChainSpec {
            n,
            mu: vec![1.0; n.saturating_sub(1)],
            gamma: vec![0.0; n.saturating_sub(1)],
            nu: vec![0.0; n],
            realization_index: 0,
        }
    }

    /// Chain without bonds: `mu = 0`.
    pub fn decoupled(nu: Vec<f64>) -> Self {
        let n = nu.len();
        ChainSpec {
            n,
            mu: vec![0.0; n.saturating_sub(1)],
            gamma: vec![0.0; n.saturating_sub(1)],
            nu,
            realization_index: 0,
        }
    }

    pub fn is_isotropic(&self) -> bool {
        self.gamma.iter().all(|&g| g == 0.0)
    }

    /// Copy with the anisotropy switched off.
    pub fn isotropic_part(&self) -> Self {
        ChainSpec { gamma: vec![0.0; self.gamma.len()], ..self.clone() }
    }

    /// Open-boundary restriction to the sites `start..end` (0-based, half-open).
    pub fn restrict(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n {
            return invalid(format!("cannot restrict chain of length {} to {start}..{end}", self.n));
        }
        Ok(ChainSpec {
            n: end - start,
            mu: self.mu[start..end - 1].to_vec(),
            gamma: self.gamma[start..end - 1].to_vec(),
            nu: self.nu[start..end].to_vec(),
            realization_index: self.realization_index,
        })
    }

    pub fn max_abs_mu(&self) -> f64 {
        self.mu.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_nu(&self) -> f64 {
        self.nu.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Draw realization `i` of the ensemble.
pub fn sample_chain(spec: &EnsembleSpec, i: u64) -> Result<ChainSpec> {
    spec.validate()?;
    if i >= spec.realizations {
        return Err(XyError::IndexOutOfRange { index: i, realizations: spec.realizations });
    }
    let n = spec.n;
    let mut rng = realization_rng(spec.base_seed, i);
    let mu: Vec<f64> = (0..n - 1).map(|_| spec.mu.sample(&mut rng)).collect();
    let gamma: Vec<f64> = (0..n - 1).map(|_| spec.gamma.sample(&mut rng)).collect();
    let nu: Vec<f64> = (0..n).map(|_| spec.nu.sample(&mut rng)).collect();
    Ok(ChainSpec { n, mu, gamma, nu, realization_index: i })
}

/// The high-disorder isotropic model: uniform hopping `eps`, random field.
///
/// `eps = 0` is accepted and gives the decoupled chain.
pub fn high_disorder_chain(n: usize, eps: f64, nu_dist: Distribution, seed: u64, i: u64) -> Result<ChainSpec> {
    if n == 0 {
        return invalid("chain needs n >= 1");
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return invalid(format!("hopping eps must be finite and nonnegative, got {eps}"));
    }
    nu_dist.validate()?;
    let mut rng = realization_rng(seed, i);
    let nu: Vec<f64> = (0..n).map(|_| nu_dist.sample(&mut rng)).collect();
    Ok(ChainSpec {
        n,
        mu: vec![eps; n - 1],
        gamma: vec![0.0; n - 1],
        nu,
        realization_index: i,
    })
}

/// Ensemble equivalent of [`high_disorder_chain`] draws (same stream layout only
/// for `nu`; `mu` is constant so it consumes nothing).
pub fn high_disorder_ensemble(n: usize, eps: f64, nu_dist: Distribution, base_seed: u64, realizations: u64) -> EnsembleSpec {
    EnsembleSpec {
        n,
        mu: Distribution::constant(eps),
        gamma: Distribution::constant(0.0),
        nu: nu_dist,
        base_seed,
        realizations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, nu: Distribution, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            n,
            mu: Distribution::constant(1.0),
            gamma: Distribution::constant(0.0),
            nu,
            base_seed: seed,
            realizations: 10,
        }
    }

    #[test]
    fn constant_ensemble() {
        let s = EnsembleSpec {
            n: 5,
            mu: Distribution::constant(1.0),
            gamma: Distribution::constant(0.0),
            nu: Distribution::constant(0.0),
            base_seed: 3,
            realizations: 4,
        };
        for i in 0..4 {
            let c = sample_chain(&s, i).unwrap();
            assert!(c.mu.iter().all(|&x| x == 1.0));
            assert!(c.gamma.iter().all(|&x| x == 0.0));
            assert!(c.nu.iter().all(|&x| x == 0.0));
            assert_eq!(c.realization_index, i);
        }
    }

    #[test]
    fn repeated_draw_is_bitwise_identical() {
        let s = spec(12, Distribution::uniform(-5.0, 5.0), 99);
        let a = sample_chain(&s, 7).unwrap();
        let b = sample_chain(&s, 7).unwrap();
        let bits = |c: &ChainSpec| c.nu.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&sample_chain(&s, 6).unwrap()));
    }

    #[test]
    fn golden_fixture_seed_42() {
        // Frozen from the first run of this generator; any change to the
        // seeding or stream layout must be deliberate.
        let s = spec(8, Distribution::uniform(-5.0, 5.0), 42);
        let c = sample_chain(&s, 0).unwrap();
        let expected: [u64; 8] = GOLDEN_NU_SEED_42;
        let got: Vec<u64> = c.nu.iter().map(|x| x.to_bits()).collect();
        assert_eq!(got, expected, "nu = {:?}", c.nu);
    }

    const GOLDEN_NU_SEED_42: [u64; 8] = [
        0xbf905fadc4398b00,
        0x4010e59f5f4d1400,
        0x3ff9b78bf0f2b5c0,
        0x3fea3eaced29eaa8,
        0x3ff5e745acd20038,
        0xbfe2f64d346d22f0,
        0xbffff23f75d50938,
        0xc0022c24045eec82,
    ];

    #[test]
    fn out_of_range_index() {
        let s = spec(4, Distribution::uniform(-1.0, 1.0), 0);
        assert!(matches!(sample_chain(&s, 10), Err(XyError::IndexOutOfRange { .. })));
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(Distribution::uniform(1.0, 1.0).validate().is_err());
        assert!(Distribution::constant(f64::NAN).validate().is_err());
        let mut s = spec(4, Distribution::uniform(-1.0, 1.0), 0);
        s.n = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn high_disorder_structure() {
        let c = high_disorder_chain(6, 0.01, Distribution::uniform(-1.0, 1.0), 7, 3).unwrap();
        assert!(c.mu.iter().all(|&m| m == 0.01));
        assert!(c.gamma.iter().all(|&g| g == 0.0));
        assert!(c.nu.iter().all(|&v| (-1.0..1.0).contains(&v)));
        let d = high_disorder_chain(6, 0.0, Distribution::uniform(-1.0, 1.0), 7, 3).unwrap();
        assert!(d.mu.iter().all(|&m| m == 0.0));
        assert!(high_disorder_chain(6, -0.1, Distribution::uniform(-1.0, 1.0), 7, 3).is_err());
    }

    #[test]
    fn json_schema_roundtrip() {
        let text = r#"{"n":4,"mu":{"kind":"constant","value":1.0},"gamma":{"kind":"constant","value":0.0},
            "nu":{"kind":"uniform","lo":-5.0,"hi":5.0},"base_seed":42,"realizations":3}"#;
        let s: EnsembleSpec = serde_json::from_str(text).unwrap();
        assert_eq!(s.nu, Distribution::uniform(-5.0, 5.0));
        let back: EnsembleSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn empirical_moments_match_uniform() {
        let s = EnsembleSpec {
            n: 3,
            mu: Distribution::uniform(0.5, 1.5),
            gamma: Distribution::uniform(-0.3, 0.3),
            nu: Distribution::uniform(-5.0, 5.0),
            base_seed: 2024,
            realizations: 10_000,
        };
        let mut samples: [Vec<f64>; 3] = Default::default();
        for i in 0..s.realizations {
            let c = sample_chain(&s, i).unwrap();
            samples[0].extend(&c.mu);
            samples[1].extend(&c.gamma);
            samples[2].extend(&c.nu);
        }
        for (xs, d) in samples.iter().zip([s.mu, s.gamma, s.nu]) {
            let m = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / m;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let se_mean = (d.variance() / m).sqrt();
            assert!((mean - d.mean()).abs() < 5.0 * se_mean, "mean {mean} vs {}", d.mean());
            // fourth central moment of a uniform is 9/5 var^2
            let se_var = ((1.8 - 1.0) * d.variance().powi(2) / m).sqrt();
            assert!((var - d.variance()).abs() < 5.0 * se_var, "var {var} vs {}", d.variance());
        }
    }
}
