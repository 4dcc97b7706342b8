//! Bipartite entanglement of quasi-free states from their correlation matrices.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::disorder::ChainSpec;
use crate::error::{invalid, Result, XyError};
use crate::hamiltonian::{bogoliubov, build_m, BogoliubovDecomposition, ManyBodyLabel};
use crate::linalg::{self, CMatrix};
use crate::quasifree::{eigenstate_gamma, BlockEvolver, CorrelationMatrix};

const LN2: f64 = std::f64::consts::LN_2;
const ZETA_CLAMP: f64 = 1e-12;
pub const EXHAUSTIVE_CAP: usize = 14;

/// Left part `A = [0, ell)`, right part `B = [ell, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cut {
    pub ell: usize,
}

impl Cut {
    pub fn new(ell: usize, n: usize) -> Result<Self> {
        if ell == 0 || ell >= n {
            return invalid(format!("cut {ell} must satisfy 1 <= ell < n = {n}"));
        }
        Ok(Cut { ell })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementRecord {
    pub entropy: f64,
    pub ps_bound: f64,
    pub label: String,
    pub ell: usize,
}

/// `-Σ ζ ln ζ` over a correlation block spectrum.
pub fn entropy_of_spectrum(zeta: &[f64]) -> Result<f64> {
    if let Some(z) = zeta.iter().find(|z| **z < -1e-9 || **z > 1.0 + 1e-9) {
        return Err(XyError::Tolerance { what: "correlation eigenvalue outside [0,1]".into(), value: *z, tol: 1e-9 });
    }
    Ok(zeta
        .iter()
        .map(|&z| z.clamp(ZETA_CLAMP, 1.0 - ZETA_CLAMP))
        .filter(|&z| z > ZETA_CLAMP && z < 1.0 - ZETA_CLAMP)
        .map(|z| -z * z.ln())
        .sum())
}

/// Entropy of the reduced state on `[0, ell)`.
pub fn entropy_from_gamma(gamma: &CorrelationMatrix, cut: Cut) -> Result<f64> {
    entropy_of_block(&gamma.restrict_left(cut.ell))
}

pub fn entropy_of_block(block: &CMatrix) -> Result<f64> {
    entropy_of_spectrum(&linalg::hermitian_eigenvalues(block))
}

fn entropy_of_real_block(block: DMatrix<f64>) -> Result<f64> {
    entropy_of_spectrum(block.symmetric_eigenvalues().as_slice())
}

/// `2 ln 2 Σ_{j<ell<=k} ||Γ(j,k)||₂`.
pub fn ps_bound(gamma: &CorrelationMatrix, cut: Cut) -> f64 {
    let mut s = 0.0;
    for j in 0..cut.ell {
        for k in cut.ell..gamma.n {
            s += linalg::block_norm2(gamma.block(j, k));
        }
    }
    2.0 * LN2 * s
}

/// `2 ln 2 C e^{-η} / (1 - e^{-η})²`.
pub fn area_law_bound(c: f64, eta: f64) -> f64 {
    let q = (-eta).exp();
    2.0 * LN2 * c * q / ((1.0 - q) * (1.0 - q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

impl Strategy {
    pub fn tag(&self) -> String {
        match self {
            Strategy::Exhaustive => "exhaustive".into(),
            Strategy::Sampled { count, .. } => format!("sampled({count})"),
        }
    }
}

/// Scan over eigenstate labels. `best` is the maximal-entropy state;
/// `max_ps_bound` the largest Pastur-Slavin bound over the same labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenstateScan {
    pub best: EntanglementRecord,
    pub max_ps_bound: f64,
    pub strategy: String,
    pub scanned: usize,
}

fn label_string(alpha: &ManyBodyLabel) -> String {
    alpha.bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

pub fn uniform_labels(n: usize, count: usize, seed: u64) -> Vec<ManyBodyLabel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| ManyBodyLabel { bits: (0..n).map(|_| rng.random::<bool>()).collect() }).collect()
}

fn labels_for(n: usize, strategy: Strategy) -> Result<Vec<ManyBodyLabel>> {
    match strategy {
        Strategy::Exhaustive => {
            if n > EXHAUSTIVE_CAP {
                return Err(XyError::TooLarge { n, cap: EXHAUSTIVE_CAP });
            }
            Ok((0..1u64 << n).map(|m| ManyBodyLabel::from_mask(n, m)).collect())
        }
        Strategy::Sampled { count, seed } => {
            if count == 0 {
                return invalid("sampled strategy needs count >= 1");
            }
            Ok(uniform_labels(n, count, seed))
        }
    }
}

/// Entropy and Pastur-Slavin bound of the eigenstate `alpha`, using only the
/// selected mode rows of `W`.
pub fn eigenstate_entanglement(bog: &BogoliubovDecomposition, alpha: &ManyBodyLabel, cut: Cut) -> Result<(f64, f64)> {
    let n = bog.n();
    if alpha.len() != n || cut.ell >= n {
        return Err(XyError::DimensionMismatch("label or cut does not fit the chain".into()));
    }
    let rows: Vec<usize> = (0..n).map(|j| if alpha.bits[j] { 2 * j + 1 } else { 2 * j }).collect();
    let la = 2 * cut.ell;
    let sa = DMatrix::from_fn(n, la, |r, c| bog.w[(rows[r], c)]);
    let sb = DMatrix::from_fn(n, 2 * n - la, |r, c| bog.w[(rows[r], la + c)]);
    let entropy = entropy_of_real_block(sa.transpose() * &sa)?;
    let cross = sa.transpose() * sb;
    let mut s = 0.0;
    for j in 0..cut.ell {
        for k in 0..n - cut.ell {
            s += linalg::block_norm2(linalg::real_block_of(&cross, j, k));
        }
    }
    Ok((entropy, 2.0 * LN2 * s))
}

pub fn max_eigenstate_entropy(bog: &BogoliubovDecomposition, cut: Cut, strategy: Strategy) -> Result<EigenstateScan> {
    let labels = labels_for(bog.n(), strategy)?;
    let mut best: Option<EntanglementRecord> = None;
    let mut max_ps = 0.0f64;
    for alpha in &labels {
        let (entropy, ps) = eigenstate_entanglement(bog, alpha, cut)?;
        max_ps = max_ps.max(ps);
        if best.as_ref().is_none_or(|b| entropy > b.entropy) {
            best = Some(EntanglementRecord { entropy, ps_bound: ps, label: label_string(alpha), ell: cut.ell });
        }
    }
    Ok(EigenstateScan {
        best: best.expect("at least one label"),
        max_ps_bound: max_ps,
        strategy: strategy.tag(),
        scanned: labels.len(),
    })
}

/// Entropy along `times` after starting from a product of eigenstates of the
/// two decoupled halves.
pub fn quench_entropy(
    chain: &ChainSpec,
    cut: Cut,
    alpha_a: &ManyBodyLabel,
    alpha_b: &ManyBodyLabel,
    times: &[f64],
) -> Result<Vec<f64>> {
    let n = chain.n;
    let ell = cut.ell;
    let ga = eigenstate_gamma(&bogoliubov(&chain.restrict(0, ell)?)?, alpha_a)?;
    let gb = eigenstate_gamma(&bogoliubov(&chain.restrict(ell, n)?)?, alpha_b)?;
    let mut g0 = CMatrix::zeros(2 * n, 2 * n);
    g0.view_mut((0, 0), (2 * ell, 2 * ell)).copy_from(&ga.gamma);
    g0.view_mut((2 * ell, 2 * ell), (2 * (n - ell), 2 * (n - ell))).copy_from(&gb.gamma);
    let g0 = CorrelationMatrix { gamma: g0, n };
    let m_sd = linalg::symmetric_eigen(&build_m(chain)?)?;
    let evolver = BlockEvolver::left(&g0, &m_sd, ell)?;
    times.iter().map(|&t| entropy_of_block(&evolver.at(t))).collect()
}

/// Probability that mode `j` is occupied at inverse temperature `beta`.
fn thermal_occupation(lambda: f64, beta: f64) -> f64 {
    if beta.is_infinite() {
        return if lambda > 0.0 { 0.0 } else { 0.5 };
    }
    let x = -2.0 * beta * lambda;
    let w = x.exp();
    w / (1.0 + w)
}

/// Upper bound `Σ_α p_α 𝓔(ρ_α)` on the entanglement of formation of the Gibbs
/// state: exact for `n <= 14`, otherwise a Monte Carlo average over labels
/// drawn from the factorized Gibbs weights.
pub fn thermal_entanglement_of_formation_bound(
    bog: &BogoliubovDecomposition,
    cut: Cut,
    beta: f64,
    sample_count: usize,
    seed: u64,
) -> Result<f64> {
    if !(beta >= 0.0) {
        return invalid(format!("inverse temperature {beta} must be >= 0"));
    }
    let n = bog.n();
    let p: Vec<f64> = bog.lambda.iter().map(|&l| thermal_occupation(l, beta)).collect();
    if n <= EXHAUSTIVE_CAP {
        let mut total = 0.0;
        for mask in 0..1u64 << n {
            let alpha = ManyBodyLabel::from_mask(n, mask);
            let weight: f64 = alpha.bits.iter().zip(&p).map(|(b, q)| if *b { *q } else { 1.0 - q }).product();
            if weight > 0.0 {
                total += weight * eigenstate_entanglement(bog, &alpha, cut)?.0;
            }
        }
        return Ok(total);
    }
    if sample_count == 0 {
        return invalid("sampling needs sample_count >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..sample_count {
        let alpha = ManyBodyLabel { bits: p.iter().map(|q| rng.random::<f64>() < *q).collect() };
        total += eigenstate_entanglement(bog, &alpha, cut)?.0;
    }
    Ok(total / sample_count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_chain, Distribution, EnsembleSpec};
    use crate::quasifree::profile_gamma;

    fn chain(n: usize, seed: u64) -> ChainSpec {
        let spec = EnsembleSpec {
            n,
            mu: Distribution::uniform(-1.0, 1.0),
            gamma: Distribution::uniform(-0.5, 0.5),
            nu: Distribution::uniform(-2.0, 2.0),
            base_seed: seed,
            realizations: 1,
        };
        sample_chain(&spec, 0).unwrap()
    }

    #[test]
    fn product_and_bell_pair() {
        let g = profile_gamma(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(entropy_from_gamma(&g, Cut::new(1, 3).unwrap()).unwrap(), 0.0);
        assert_eq!(ps_bound(&g, Cut::new(2, 3).unwrap()), 0.0);
        let s = entropy_of_spectrum(&[0.5, 0.5]).unwrap();
        assert!((s - LN2).abs() < 1e-15);
        assert!(entropy_of_spectrum(&[1.1]).is_err());
        assert!(Cut::new(0, 3).is_err() && Cut::new(3, 3).is_err());
    }

    #[test]
    fn fast_path_matches_full_matrix_and_bounds() {
        let c = chain(8, 2);
        let bog = bogoliubov(&c).unwrap();
        for mask in [0u64, 5, 77, 255] {
            let alpha = ManyBodyLabel::from_mask(8, mask);
            let g = eigenstate_gamma(&bog, &alpha).unwrap();
            for ell in 1..8 {
                let cut = Cut::new(ell, 8).unwrap();
                let (s, ps) = eigenstate_entanglement(&bog, &alpha, cut).unwrap();
                assert!((s - entropy_from_gamma(&g, cut).unwrap()).abs() < 1e-10);
                assert!((ps - ps_bound(&g, cut)).abs() < 1e-10);
                assert!(s <= ps + 1e-8);
                assert!(s <= 2.0 * LN2 * ell.min(8 - ell) as f64 + 1e-8);
                // pure state: both sides agree
                let right = crate::quasifree::CorrelationMatrix { gamma: g.restrict_right(ell), n: 8 - ell };
                let sr = entropy_of_block(&right.gamma).unwrap();
                assert!((s - sr).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn decoupled_chain_has_no_entanglement() {
        let bog = bogoliubov(&ChainSpec::decoupled(vec![1.0, -0.5, 2.0, 0.3])).unwrap();
        let cut = Cut::new(2, 4).unwrap();
        assert!(max_eigenstate_entropy(&bog, cut, Strategy::Exhaustive).unwrap().best.entropy < 1e-10);
        assert!(thermal_entanglement_of_formation_bound(&bog, cut, 0.7, 10, 0).unwrap() < 1e-10);
    }

    #[test]
    fn sampled_below_exhaustive_and_thermal_bounds() {
        let c = chain(10, 4);
        let bog = bogoliubov(&c).unwrap();
        let cut = Cut::new(5, 10).unwrap();
        let ex = max_eigenstate_entropy(&bog, cut, Strategy::Exhaustive).unwrap();
        let sa = max_eigenstate_entropy(&bog, cut, Strategy::Sampled { count: 200, seed: 1 }).unwrap();
        assert_eq!(ex.scanned, 1024);
        assert!(sa.best.entropy <= ex.best.entropy);
        let ef = thermal_entanglement_of_formation_bound(&bog, cut, 1.0, 0, 0).unwrap();
        assert!(ef >= 0.0 && ef <= ex.best.entropy);
        let ground = eigenstate_entanglement(&bog, &ManyBodyLabel::vacuum(10), cut).unwrap().0;
        let cold = thermal_entanglement_of_formation_bound(&bog, cut, f64::INFINITY, 0, 0).unwrap();
        assert!((cold - ground).abs() < 1e-12);
    }

    #[test]
    fn quench_starts_unentangled() {
        let c = chain(8, 6);
        let cut = Cut::new(3, 8).unwrap();
        let s = quench_entropy(&c, cut, &ManyBodyLabel::vacuum(3), &ManyBodyLabel::from_mask(5, 3), &[0.0, 1.0, 2.0])
            .unwrap();
        assert!(s[0].abs() < 1e-10);
        assert!(s[1] > 1e-6);
    }
}
