//! Correlation matrices of quasi-free states and their dynamics.
//!
//! `Γ = ρ(C C^*)` with 2x2 blocks
//! `Γ(j,k) = [[<c_j c_k^*>, <c_j c_k>], [<c_j^* c_k^*>, <c_j^* c_k>]]`.
//! Evolved matrices are complex Hermitian in general, so `Γ` is stored complex.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, XyError};
use crate::hamiltonian::{BogoliubovDecomposition, ManyBodyLabel};
use crate::linalg::{self, CMatrix, SpectralDecomposition, C64};

#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub gamma: CMatrix,
    pub n: usize,
}

impl CorrelationMatrix {
    pub fn from_real(gamma: DMatrix<f64>) -> Result<Self> {
        if gamma.nrows() != gamma.ncols() || gamma.nrows() % 2 != 0 {
            return Err(XyError::DimensionMismatch(format!("{}x{} is not 2n x 2n", gamma.nrows(), gamma.ncols())));
        }
        let n = gamma.nrows() / 2;
        Ok(CorrelationMatrix { gamma: linalg::to_complex(&gamma), n })
    }

    pub fn block(&self, j: usize, k: usize) -> [[C64; 2]; 2] {
        linalg::block_of(&self.gamma, j, k)
    }

    /// `<c_j^* c_k>`.
    pub fn hopping(&self, j: usize, k: usize) -> C64 {
        self.gamma[(2 * j + 1, 2 * k + 1)]
    }

    /// `<c_j^* c_j>`, i.e. the probability that site `j` is up.
    pub fn occupation(&self, j: usize) -> f64 {
        self.gamma[(2 * j + 1, 2 * j + 1)].re
    }

    /// One-particle density `ϱ` with `<f, ϱ g> = ω(c^*(g) c(f))`, so
    /// `ϱ[x][y] = <c_y^* c_x>`.
    pub fn one_particle_density(&self) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |x, y| self.hopping(y, x))
    }

    pub fn idempotency_defect(&self) -> f64 {
        linalg::max_modulus(&(&self.gamma * &self.gamma - &self.gamma))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::max_modulus(&(&self.gamma - self.gamma.adjoint()))
    }

    pub fn spectrum(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.gamma)
    }

    pub fn trace(&self) -> f64 {
        self.gamma.trace().re
    }

    /// Upper-left `2ℓ x 2ℓ` block: the correlation matrix of sites `0..ℓ`.
    pub fn restrict_left(&self, ell: usize) -> CMatrix {
        self.gamma.view((0, 0), (2 * ell, 2 * ell)).into_owned()
    }

    /// Lower-right block: sites `ℓ..n`.
    pub fn restrict_right(&self, ell: usize) -> CMatrix {
        let m = 2 * (self.n - ell);
        self.gamma.view((2 * ell, 2 * ell), (m, m)).into_owned()
    }
}

/// `Γ_α = Wᵗ P W` where `P` picks `λ_j` for unoccupied and `-λ_j` for
/// occupied modes, i.e. the spectral projection of `M` onto `Δ_α`.
pub fn eigenstate_gamma(bog: &BogoliubovDecomposition, alpha: &ManyBodyLabel) -> Result<CorrelationMatrix> {
    let n = bog.n();
    if alpha.len() != n {
        return Err(XyError::DimensionMismatch(format!("label of length {} for {n} modes", alpha.len())));
    }
    let rows: Vec<usize> = (0..n).map(|j| if alpha.bits[j] { 2 * j + 1 } else { 2 * j }).collect();
    let sel = DMatrix::from_fn(n, 2 * n, |r, c| bog.w[(rows[r], c)]);
    CorrelationMatrix::from_real(sel.transpose() * sel)
}

/// `(1 + e^{-2βM})^{-1}`, from the spectral decomposition of `M`.
pub fn thermal_gamma(m_sd: &SpectralDecomposition, beta: f64) -> Result<CorrelationMatrix> {
    if !(beta >= 0.0) {
        return invalid(format!("inverse temperature {beta} must be >= 0"));
    }
    let g = m_sd.apply_real(|e| {
        let x = -2.0 * beta * e;
        if x > 700.0 { 0.0 } else { 1.0 / (1.0 + x.exp()) }
    });
    CorrelationMatrix::from_real(g)
}

/// Product state with site `j` up (occupied) with probability `η_j`:
/// blocks `diag(1 - η_j, η_j)`.
pub fn profile_gamma(eta: &[f64]) -> Result<CorrelationMatrix> {
    if let Some(bad) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return invalid(format!("occupation {bad} outside [0, 1]"));
    }
    let n = eta.len();
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for (j, &e) in eta.iter().enumerate() {
        g[(2 * j, 2 * j)] = 1.0 - e;
        g[(2 * j + 1, 2 * j + 1)] = e;
    }
    CorrelationMatrix::from_real(g)
}

/// `Γ(t) = e^{-2itM} Γ e^{2itM}`, the correlation matrix of `e^{-iHt} ρ e^{iHt}`.
pub fn evolve_gamma(gamma: &CorrelationMatrix, m_sd: &SpectralDecomposition, t: f64) -> Result<CorrelationMatrix> {
    if m_sd.dim() != 2 * gamma.n {
        return Err(XyError::DimensionMismatch(format!("M of dim {} for Γ of {} sites", m_sd.dim(), gamma.n)));
    }
    let u = m_sd.propagator(2.0 * t);
    Ok(CorrelationMatrix { gamma: &u * &gamma.gamma * u.adjoint(), n: gamma.n })
}

/// Repeated evaluation of the principal submatrix of `Γ(t)` on a fixed index
/// set without forming the full evolved matrix:
/// `Γ_I(t) = V_I (phase ⊙ Vᵗ Γ V) V_Iᵗ`.
pub struct BlockEvolver {
    rows: CMatrix,
    rotated: CMatrix,
    energies: Vec<f64>,
}

impl BlockEvolver {
    pub fn new(gamma: &CorrelationMatrix, m_sd: &SpectralDecomposition, indices: &[usize]) -> Result<Self> {
        if m_sd.dim() != 2 * gamma.n || indices.iter().any(|&i| i >= 2 * gamma.n) {
            return Err(XyError::DimensionMismatch("evolver dimensions".into()));
        }
        let v = linalg::to_complex(&m_sd.eigenvectors);
        let rotated = v.transpose() * &gamma.gamma * &v;
        let rows = CMatrix::from_fn(indices.len(), v.ncols(), |r, c| v[(indices[r], c)]);
        Ok(BlockEvolver { rows, rotated, energies: m_sd.eigenvalues.iter().copied().collect() })
    }

    /// Sites `0..ell`, i.e. indices `0..2ell`.
    pub fn left(gamma: &CorrelationMatrix, m_sd: &SpectralDecomposition, ell: usize) -> Result<Self> {
        BlockEvolver::new(gamma, m_sd, &(0..2 * ell).collect::<Vec<_>>())
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let phase: Vec<C64> = self.energies.iter().map(|&e| C64::from_polar(1.0, -2.0 * t * e)).collect();
        let mut left = self.rows.clone();
        for (a, mut col) in left.column_iter_mut().enumerate() {
            col *= phase[a];
        }
        let l_rot = &left * &self.rotated;
        l_rot * left.adjoint()
    }
}

/// `ω(τ_t(c^*_{y_m}) ⋯ τ_t(c^*_{y_1}) c_{x_1} ⋯ c_{x_m}) = det(⟨δ_{x_j}, ϱ e^{2itA} δ_{y_k}⟩)`
/// for a number-conserving quasi-free state and isotropic dynamics.
///
/// The sign of the exponent follows from `τ_t(c) = e^{-2itA} c`, which makes
/// `τ_t(c^*(g)) = c^*(e^{2itA} g)`.
pub fn multipoint_correlation(
    gamma: &CorrelationMatrix,
    a_sd: &SpectralDecomposition,
    t: f64,
    x: &OrderedConfiguration,
    y: &OrderedConfiguration,
) -> Result<C64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(XyError::DimensionMismatch(format!("configurations of sizes {} and {}", x.len(), y.len())));
    }
    if a_sd.dim() != gamma.n || x.max() >= gamma.n || y.max() >= gamma.n {
        return Err(XyError::DimensionMismatch("configuration outside the chain".into()));
    }
    let rho = gamma.one_particle_density();
    let u = a_sd.propagator(-2.0 * t);
    let m = x.len();
    let mat = CMatrix::from_fn(m, m, |j, k| {
        (0..gamma.n).map(|z| rho[(x.sites[j], z)] * u[(z, y.sites[k])]).sum::<C64>()
    });
    Ok(linalg::det_complex(&mat))
}

/// `<τ_t(n_j) n_k> - <n_j><n_k>` in a number-conserving quasi-free state that
/// is stationary under the isotropic dynamics, by Wick's rule:
/// `(Ū G)_{jk} (U (1 - G))_{jk}` with `U = e^{-2itA}`, `G_{ab} = <c_a^* c_b>`.
pub fn connected_density_correlation(
    gamma: &CorrelationMatrix,
    a_sd: &SpectralDecomposition,
    t: f64,
    j: usize,
    k: usize,
) -> C64 {
    let n = gamma.n;
    let u = a_sd.propagator(2.0 * t);
    let left: C64 = (0..n).map(|a| u[(j, a)].conj() * gamma.hopping(a, k)).sum();
    let right: C64 = (0..n)
        .map(|b| {
            let delta = if b == k { 1.0 } else { 0.0 };
            u[(j, b)] * (C64::new(delta, 0.0) - gamma.hopping(k, b))
        })
        .sum();
    left * right
}

/// Strictly increasing 0-based site list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct OrderedConfiguration {
    pub sites: Vec<usize>,
}

impl TryFrom<Vec<usize>> for OrderedConfiguration {
    type Error = XyError;
    fn try_from(sites: Vec<usize>) -> Result<Self> {
        OrderedConfiguration::new(sites)
    }
}

impl From<OrderedConfiguration> for Vec<usize> {
    fn from(c: OrderedConfiguration) -> Self {
        c.sites
    }
}

impl OrderedConfiguration {
    pub fn new(sites: Vec<usize>) -> Result<Self> {
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("configuration {sites:?} is not strictly increasing"));
        }
        Ok(OrderedConfiguration { sites })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    fn max(&self) -> usize {
        self.sites.last().copied().unwrap_or(0)
    }

    /// `max_ℓ |x_ℓ - y_ℓ|`; undefined for different cardinalities.
    pub fn distance(&self, other: &Self) -> Option<usize> {
        (self.len() == other.len())
            .then(|| self.sites.iter().zip(&other.sites).map(|(a, b)| a.abs_diff(*b)).max().unwrap_or(0))
    }
}

/// `K(ℓ) = ℓ`, or `K(ℓ) = 0` below the cut and `ℓ` from it on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GrowthFunction {
    Linear,
    Thresholded { tau_cut: f64 },
}

impl GrowthFunction {
    pub fn eval(&self, l: f64) -> f64 {
        match *self {
            GrowthFunction::Linear => l,
            GrowthFunction::Thresholded { tau_cut } => {
                if l < tau_cut {
                    0.0
                } else {
                    l
                }
            }
        }
    }

    /// `I(μ₀) = Σ_{ℓ≥0} (1+ℓ) e^{-μ₀ K(ℓ)}`, summed until the terms past
    /// the threshold drop below 1e-15.
    pub fn series(&self, mu0: f64) -> Result<f64> {
        if !(mu0 > 0.0) {
            return Err(XyError::Hypothesis(format!("I(mu0) diverges for mu0 = {mu0}")));
        }
        let cut = match *self {
            GrowthFunction::Linear => 0.0,
            GrowthFunction::Thresholded { tau_cut } => tau_cut,
        };
        let mut sum = 0.0;
        let mut l = 0usize;
        loop {
            let term = (1.0 + l as f64) * (-mu0 * self.eval(l as f64)).exp();
            sum += term;
            if (l as f64) >= cut && term < 1e-15 {
                return Ok(sum);
            }
            l += 1;
        }
    }
}

/// Structured-determinant bound `C' exp(-((μ-μ₀)/2) K(D/2))` with
/// `C' = 8 max{C I(μ₀), sqrt(C I(μ₀))}`.
pub fn sw_bound(k: GrowthFunction, mu0: f64, mu: f64, c: f64, d: f64) -> Result<f64> {
    if !(mu > mu0 && mu0 > 0.0) {
        return Err(XyError::Hypothesis(format!("need mu > mu0 > 0, got mu = {mu}, mu0 = {mu0}")));
    }
    let ci = c * k.series(mu0)?;
    let c_prime = 8.0 * ci.max(ci.sqrt());
    Ok(c_prime * (-0.5 * (mu - mu0) * k.eval(0.5 * d)).exp())
}
