//! Particle and energy transport out of a product profile state.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::disorder::ChainSpec;
use crate::eigencorrelator::DecayFit;
use crate::error::{invalid, Result, XyError};
use crate::hamiltonian::{build_a, build_m, diagonalize, EffectiveHamiltonian};
use crate::linalg::{self, SpectralDecomposition, C64};
use crate::quasifree::{profile_gamma, BlockEvolver, CorrelationMatrix};

/// Sorted, deduplicated set of 0-based sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Region {
    pub sites: Vec<usize>,
    pub interval_flag: bool,
}

impl Region {
    pub fn new(mut sites: Vec<usize>) -> Result<Self> {
        sites.sort_unstable();
        sites.dedup();
        if sites.is_empty() {
            return invalid("region must be nonempty");
        }
        let interval_flag = sites.last().unwrap() - sites[0] + 1 == sites.len();
        Ok(Region { sites, interval_flag })
    }

    /// `start..end`, half-open.
    pub fn interval(start: usize, end: usize) -> Result<Self> {
        Region::new((start..end).collect())
    }

    pub fn min(&self) -> usize {
        self.sites[0]
    }

    pub fn max(&self) -> usize {
        *self.sites.last().unwrap()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.sites.binary_search(&j).is_ok()
    }

    pub fn distance(&self, other: &Region) -> usize {
        self.sites.iter().flat_map(|a| other.sites.iter().map(move |b| a.abs_diff(*b))).min().unwrap_or(0)
    }

    fn check_fits(&self, n: usize) -> Result<()> {
        if self.max() >= n {
            return invalid(format!("region reaches site {} in a chain of {n}", self.max()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub baseline: f64,
    pub bound: f64,
}

impl TransportSeries {
    /// `max_t |value(t) - baseline|`.
    pub fn sup_deviation(&self) -> f64 {
        self.values.iter().map(|v| (v - self.baseline).abs()).fold(0.0, f64::max)
    }
}

/// `Σ_{j∈S} <c_j^* c_j>`.
pub fn particle_number(gamma: &CorrelationMatrix, s: &Region) -> f64 {
    s.sites.iter().map(|&j| gamma.occupation(j)).sum()
}

/// Rows `S` of `e^{-2itA}`, each of length `n`.
fn propagator_rows(a_sd: &SpectralDecomposition, rows: &[usize], t: f64) -> Vec<Vec<C64>> {
    let v = &a_sd.eigenvectors;
    let n = a_sd.dim();
    let phases: Vec<C64> = a_sd.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -2.0 * t * e)).collect();
    rows.iter()
        .map(|&x| {
            let w: Vec<C64> = (0..n).map(|r| phases[r] * v[(x, r)]).collect();
            (0..n).map(|a| (0..n).map(|r| w[r] * v[(a, r)]).sum()).collect()
        })
        .collect()
}

fn check_profile(eta: &[f64], n: usize) -> Result<()> {
    if eta.len() != n {
        return Err(XyError::DimensionMismatch(format!("profile of length {} for {n} sites", eta.len())));
    }
    profile_gamma(eta).map(|_| ())
}

/// `<N_S>` at time `t` for the isotropic chain: `Σ_{x∈S} Σ_a |U_{xa}|² η_a`.
pub fn particle_number_isotropic(a_sd: &SpectralDecomposition, s: &Region, eta: &[f64], t: f64) -> f64 {
    propagator_rows(a_sd, &s.sites, t)
        .iter()
        .map(|row| row.iter().zip(eta).map(|(u, e)| u.norm_sqr() * e).sum::<f64>())
        .sum()
}

/// Geometry and profile preconditions for the transport checks.
fn check_geometry(n: usize, s1: &Region, s2: &Region, eta: &[f64]) -> Result<usize> {
    s1.check_fits(n)?;
    s2.check_fits(n)?;
    check_profile(eta, n)?;
    if s2.sites.iter().any(|&j| j >= s1.min() && j <= s1.max()) {
        return Err(XyError::Hypothesis("S2 must avoid the hull of S1".into()));
    }
    if let Some(j) = (0..n).find(|&j| !s2.contains(j) && eta[j] != 0.0) {
        return Err(XyError::Hypothesis(format!("profile must vanish off S2 (site {j})")));
    }
    Ok(s1.distance(s2))
}

/// `2C/(1-e^{-η})² e^{-ηd}`.
pub fn particle_bound(fit: &DecayFit, d: usize) -> f64 {
    let q = 1.0 - (-fit.eta).exp();
    2.0 * fit.c / (q * q) * (-fit.eta * d as f64).exp()
}

/// `4CD/(1-e^{-η})² e^{-ηd}` with `D = 2 max|μ| + max|ν|`.
pub fn energy_bound(fit: &DecayFit, d: usize, norm_d: f64) -> f64 {
    let q = 1.0 - (-fit.eta).exp();
    4.0 * fit.c * norm_d / (q * q) * (-fit.eta * d as f64).exp()
}

/// `2 max|μ| + max|ν|`, the uniform bound on `||A||` used by the energy bound.
pub fn norm_constant(mu_max: f64, nu_max: f64) -> f64 {
    2.0 * mu_max + nu_max
}

/// Series of `<N_{S1}>` for a profile supported on `S2`.
pub fn particle_transport_series(
    chain: &ChainSpec,
    s1: &Region,
    s2: &Region,
    eta: &[f64],
    times: &[f64],
    fit: &DecayFit,
) -> Result<TransportSeries> {
    if !chain.is_isotropic() {
        return invalid("particle transport is defined for isotropic chains only");
    }
    let d = check_geometry(chain.n, s1, s2, eta)?;
    let a_sd = diagonalize(&EffectiveHamiltonian::isotropic(chain)?)?;
    let values = times.iter().map(|&t| particle_number_isotropic(&a_sd, s1, eta, t)).collect();
    Ok(TransportSeries { times: times.to_vec(), values, baseline: 0.0, bound: particle_bound(fit, d) })
}

/// `<H_{S1}>_t - Ẽ₀ = 2 tr(e^{2itA} A_{S1} e^{-2itA} diag(η))`, with
/// `Ẽ₀ = Σ_{j∈S1} ν_j`.
pub fn energy_in_region_isotropic(
    chain: &ChainSpec,
    a_sd: &SpectralDecomposition,
    s1: &Region,
    eta: &[f64],
    t: f64,
) -> Result<f64> {
    if !s1.interval_flag {
        return invalid("S1 must be an interval");
    }
    s1.check_fits(chain.n)?;
    check_profile(eta, chain.n)?;
    let a = build_a(chain)?;
    let rows = propagator_rows(a_sd, &s1.sites, t);
    let mut total = C64::new(0.0, 0.0);
    for (jj, &j) in s1.sites.iter().enumerate() {
        for (kk, &k) in s1.sites.iter().enumerate() {
            if a[(j, k)] == 0.0 {
                continue;
            }
            let g: C64 = (0..chain.n).map(|x| rows[jj][x].conj() * rows[kk][x] * eta[x]).sum();
            total += g * a[(j, k)];
        }
    }
    Ok(2.0 * total.re)
}

pub fn energy_transport_series(
    chain: &ChainSpec,
    s1: &Region,
    s2: &Region,
    eta: &[f64],
    times: &[f64],
    fit: &DecayFit,
    norm_d: f64,
) -> Result<TransportSeries> {
    if !chain.is_isotropic() {
        return invalid("isotropic energy transport needs gamma = 0");
    }
    let d = check_geometry(chain.n, s1, s2, eta)?;
    let a_sd = diagonalize(&EffectiveHamiltonian::isotropic(chain)?)?;
    let values = times.iter().map(|&t| energy_in_region_isotropic(chain, &a_sd, s1, eta, t)).collect::<Result<_>>()?;
    Ok(TransportSeries { times: times.to_vec(), values, baseline: 0.0, bound: energy_bound(fit, d, norm_d) })
}

/// `M` restricted to the blocks of `S1`, all other entries zero.
pub fn region_m(chain: &ChainSpec, s1: &Region) -> Result<DMatrix<f64>> {
    if !s1.interval_flag {
        return invalid("S1 must be an interval");
    }
    s1.check_fits(chain.n)?;
    let sub = build_m(&chain.restrict(s1.min(), s1.max() + 1)?)?;
    let n = chain.n;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((2 * s1.min(), 2 * s1.min()), (sub.nrows(), sub.ncols())).copy_from(&sub);
    Ok(m)
}

/// `<H_{S1}>` from a correlation matrix: `-tr(M_{S1} Γ)`.
pub fn region_energy(m_s1: &DMatrix<f64>, gamma: &CorrelationMatrix) -> f64 {
    let mut tr = C64::new(0.0, 0.0);
    for a in 0..m_s1.nrows() {
        for b in 0..m_s1.ncols() {
            if m_s1[(a, b)] != 0.0 {
                tr += gamma.gamma[(b, a)] * m_s1[(a, b)];
            }
        }
    }
    -tr.re
}

/// Anisotropic energy in `S1` along `times`, relative to `t = 0`.
/// `bound` carries `<H>_ρ` of the whole chain for the n-scaling comparison.
pub fn energy_fluctuation_anisotropic(
    chain: &ChainSpec,
    s1: &Region,
    eta: &[f64],
    times: &[f64],
) -> Result<TransportSeries> {
    check_profile(eta, chain.n)?;
    let m_s1 = region_m(chain, s1)?;
    let g0 = profile_gamma(eta)?;
    let baseline = region_energy(&m_s1, &g0);
    let m = build_m(chain)?;
    let m_sd = linalg::symmetric_eigen(&m)?;
    let lo = 2 * s1.min();
    let idx: Vec<usize> = (lo..2 * (s1.max() + 1)).collect();
    let evolver = BlockEvolver::new(&g0, &m_sd, &idx)?;
    let local = m_s1.view((lo, lo), (idx.len(), idx.len())).into_owned();
    let values = times
        .iter()
        .map(|&t| {
            let block = evolver.at(t);
            let mut tr = C64::new(0.0, 0.0);
            for a in 0..idx.len() {
                for b in 0..idx.len() {
                    tr += block[(b, a)] * local[(a, b)];
                }
            }
            -tr.re
        })
        .collect();
    let total = region_energy(&m, &g0);
    Ok(TransportSeries { times: times.to_vec(), values, baseline, bound: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasifree::evolve_gamma;

    fn iso_chain() -> ChainSpec {
        ChainSpec::new(
            vec![0.6, -0.9, 0.4, 0.8, -0.3, 0.7],
            vec![0.0; 6],
            vec![0.3, -1.1, 0.8, 0.2, -0.6, 1.4, -0.2],
        )
        .unwrap()
    }

    #[test]
    fn regions() {
        let r = Region::new(vec![4, 2, 3, 3]).unwrap();
        assert_eq!(r.sites, vec![2, 3, 4]);
        assert!(r.interval_flag);
        assert!(!Region::new(vec![1, 3]).unwrap().interval_flag);
        assert_eq!(r.distance(&Region::new(vec![0, 7]).unwrap()), 2);
        assert!(Region::new(vec![]).is_err());
    }

    #[test]
    fn particle_number_initial_and_conserved() {
        let c = iso_chain();
        let a_sd = diagonalize(&EffectiveHamiltonian::isotropic(&c).unwrap()).unwrap();
        let eta = [0.2, 0.0, 1.0, 0.5, 0.0, 0.3, 0.9];
        let s = Region::new(vec![0, 3, 5]).unwrap();
        assert!((particle_number_isotropic(&a_sd, &s, &eta, 0.0) - 1.0).abs() < 1e-12);
        let all = Region::interval(0, 7).unwrap();
        let total: f64 = eta.iter().sum();
        for t in [0.3, 2.0, 17.0] {
            assert!((particle_number_isotropic(&a_sd, &all, &eta, t) - total).abs() < 1e-9);
        }
        // agrees with the full correlation-matrix route
        let m_sd = linalg::symmetric_eigen(&build_m(&c).unwrap()).unwrap();
        let g = evolve_gamma(&profile_gamma(&eta).unwrap(), &m_sd, 1.3).unwrap();
        assert!((particle_number(&g, &s) - particle_number_isotropic(&a_sd, &s, &eta, 1.3)).abs() < 1e-10);
    }

    #[test]
    fn decoupled_chain_transports_nothing() {
        let c = ChainSpec::decoupled(vec![0.5, -1.0, 2.0, 0.1, 0.7]);
        let fit = DecayFit { c: 1.0, eta: 1.0, r_squared: 1.0, min_distance: 0, max_distance: 1, degenerate: false };
        let s1 = Region::new(vec![0]).unwrap();
        let s2 = Region::interval(2, 5).unwrap();
        let eta = [0.0, 0.0, 1.0, 1.0, 1.0];
        let times = [0.0, 1.0, 5.0];
        let p = particle_transport_series(&c, &s1, &s2, &eta, &times, &fit).unwrap();
        assert!(p.values.iter().all(|v| *v == 0.0));
        let e = energy_transport_series(&c, &s1, &s2, &eta, &times, &fit, 7.0).unwrap();
        assert!(e.sup_deviation() == 0.0);
        assert!(particle_transport_series(&c, &s1, &Region::new(vec![0, 1]).unwrap(), &eta, &times, &fit).is_err());
        assert!(particle_transport_series(&c, &s1, &s2, &[1.0, 0.0, 1.0, 1.0, 1.0], &times, &fit).is_err());
    }

    #[test]
    fn norm_constant_arithmetic() {
        assert_eq!(norm_constant(1.0, 5.0), 7.0);
    }

    #[test]
    fn energy_zero_at_start_and_isotropic_consistency() {
        let c = iso_chain();
        let a_sd = diagonalize(&EffectiveHamiltonian::isotropic(&c).unwrap()).unwrap();
        let s1 = Region::interval(0, 3).unwrap();
        let eta = [0.0, 0.0, 0.0, 0.0, 1.0, 0.5, 1.0];
        assert!(energy_in_region_isotropic(&c, &a_sd, &s1, &eta, 0.0).unwrap().abs() < 1e-14);
        // the anisotropic route with gamma = 0 gives the same energies
        let times = [0.0, 0.7, 2.5];
        let series = energy_fluctuation_anisotropic(&c, &s1, &eta, &times).unwrap();
        let e0: f64 = s1.sites.iter().map(|&j| c.nu[j]).sum();
        assert!((series.baseline - e0).abs() < 1e-12);
        for (k, &t) in times.iter().enumerate() {
            let iso = energy_in_region_isotropic(&c, &a_sd, &s1, &eta, t).unwrap();
            assert!((series.values[k] - e0 - iso).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_norm_step_holds() {
        let c = iso_chain();
        let a = build_a(&c).unwrap();
        let a_sd = diagonalize(&EffectiveHamiltonian::isotropic(&c).unwrap()).unwrap();
        let norm_a = a_sd.spectral_radius();
        let s1 = Region::interval(0, 3).unwrap();
        let s2 = Region::interval(4, 7).unwrap();
        let eta = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        for t in [0.4, 1.5, 6.0] {
            let lhs = energy_in_region_isotropic(&c, &a_sd, &s1, &eta, t).unwrap().abs() / 2.0;
            let u = a_sd.propagator(-2.0 * t);
            let rhs: f64 = s2.sites.iter().flat_map(|&j| s1.sites.iter().map(move |&k| (j, k))).map(|(j, k)| u[(j, k)].norm()).sum();
            assert!(lhs <= 2.0 * norm_a * rhs + 1e-12);
            let _ = &a;
        }
    }
}
