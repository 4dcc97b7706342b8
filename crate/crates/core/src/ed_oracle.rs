//! Brute-force exact diagonalization on the full `2^n` spin Hilbert space.
//!
//! Basis state `s` has site `j` up iff bit `j` of `s` is set. Up is the
//! occupied Jordan-Wigner state: `a_j = (X_j - i Y_j)/2` lowers it. Nothing
//! here uses the free-fermion reduction; that independence is the point.

use nalgebra::{DMatrix, DVector};

use crate::disorder::ChainSpec;
use crate::error::{Result, XyError};
use crate::linalg::{self, CMatrix, SpectralDecomposition, C64};

pub const MAX_SITES: usize = 14;

/// Single-site operator with one nonzero entry per column: `|b> -> coef |target(b)>`.
#[derive(Debug, Clone, Copy)]
enum Local {
    X,
    Y,
    Z,
    Lower,
}

impl Local {
    fn act(self, bit: bool) -> Option<(bool, C64)> {
        let one = C64::new(1.0, 0.0);
        match (self, bit) {
            (Local::X, b) => Some((!b, one)),
            (Local::Y, true) => Some((false, C64::new(0.0, 1.0))),
            (Local::Y, false) => Some((true, C64::new(0.0, -1.0))),
            (Local::Z, b) => Some((b, if b { one } else { -one })),
            (Local::Lower, true) => Some((false, one)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpinOperator {
    pub matrix: CMatrix,
    pub label: String,
}

impl SpinOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> SpinOperator {
        SpinOperator { matrix: self.matrix.adjoint(), label: format!("({})^*", self.label) }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::max_modulus(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Real part after checking the imaginary part vanishes to `tol`.
    pub fn real(&self, tol: f64) -> Result<DMatrix<f64>> {
        let (re, im) = linalg::split_real(&self.matrix);
        if im > tol {
            return Err(XyError::Tolerance { what: format!("imaginary part of {}", self.label), value: im, tol });
        }
        Ok(re)
    }
}

fn check_size(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(XyError::InvalidInput("need at least one site".into()));
    }
    if n > MAX_SITES {
        return Err(XyError::TooLarge { n, cap: MAX_SITES });
    }
    Ok(1 << n)
}

/// Product of single-site operators on distinct sites; the last factor acts first.
fn product(n: usize, factors: &[(usize, Local)]) -> Result<CMatrix> {
    let dim = check_size(n)?;
    let mut m = CMatrix::zeros(dim, dim);
    'basis: for s in 0..dim {
        let mut t = s;
        let mut coef = C64::new(1.0, 0.0);
        for &(site, op) in factors.iter().rev() {
            match op.act(t >> site & 1 == 1) {
                Some((bit, c)) => {
                    t = if bit { t | 1 << site } else { t & !(1 << site) };
                    coef *= c;
                }
                None => continue 'basis,
            }
        }
        m[(t, s)] += coef;
    }
    Ok(m)
}

fn site(n: usize, j: usize, op: Local, label: &str) -> Result<SpinOperator> {
    if j >= n {
        return Err(XyError::InvalidInput(format!("site {j} outside chain of length {n}")));
    }
    Ok(SpinOperator { matrix: product(n, &[(j, op)])?, label: format!("{label}_{j}") })
}

pub fn sigma_x(n: usize, j: usize) -> Result<SpinOperator> {
    site(n, j, Local::X, "X")
}

pub fn sigma_y(n: usize, j: usize) -> Result<SpinOperator> {
    site(n, j, Local::Y, "Y")
}

pub fn sigma_z(n: usize, j: usize) -> Result<SpinOperator> {
    site(n, j, Local::Z, "Z")
}

/// Spin lowering `a_j = (X_j - i Y_j)/2`.
pub fn lowering(n: usize, j: usize) -> Result<SpinOperator> {
    site(n, j, Local::Lower, "a")
}

/// `n_j = a_j^* a_j`, the projector onto site `j` up.
pub fn number(n: usize, j: usize) -> Result<SpinOperator> {
    let dim = check_size(n)?;
    if j >= n {
        return Err(XyError::InvalidInput(format!("site {j} outside chain of length {n}")));
    }
    let diag = DVector::from_fn(dim, |s, _| C64::new((s >> j & 1) as f64, 0.0));
    Ok(SpinOperator { matrix: CMatrix::from_diagonal(&diag), label: format!("n_{j}") })
}

/// `c_j = Z_0 ... Z_{j-1} a_j`.
pub fn jordan_wigner_c(n: usize, j: usize) -> Result<SpinOperator> {
    if j >= n {
        return Err(XyError::InvalidInput(format!("site {j} outside chain of length {n}")));
    }
    let mut factors: Vec<(usize, Local)> = (0..j).map(|i| (i, Local::Z)).collect();
    factors.push((j, Local::Lower));
    Ok(SpinOperator { matrix: product(n, &factors)?, label: format!("c_{j}") })
}

/// XY Hamiltonian restricted to the sites `start..end` (open boundary, only
/// bonds inside the range), embedded in the full chain's Hilbert space.
pub fn build_h_region(chain: &ChainSpec, start: usize, end: usize) -> Result<SpinOperator> {
    chain.validate()?;
    let n = chain.n;
    if start >= end || end > n {
        return Err(XyError::InvalidInput(format!("region {start}..{end} outside chain of length {n}")));
    }
    let dim = check_size(n)?;
    let mut h = CMatrix::zeros(dim, dim);
    for j in start..end - 1 {
        let (mu, g) = (chain.mu[j], chain.gamma[j]);
        h -= product(n, &[(j, Local::X), (j + 1, Local::X)])? * C64::new(mu * (1.0 + g), 0.0);
        h -= product(n, &[(j, Local::Y), (j + 1, Local::Y)])? * C64::new(mu * (1.0 - g), 0.0);
    }
    for j in start..end {
        h -= product(n, &[(j, Local::Z)])? * C64::new(chain.nu[j], 0.0);
    }
    Ok(SpinOperator { matrix: h, label: format!("H[{start}..{end})") })
}

pub fn build_h(chain: &ChainSpec) -> Result<SpinOperator> {
    let mut h = build_h_region(chain, 0, chain.n)?;
    h.label = "H".into();
    Ok(h)
}

/// Exact eigensystem of a real Hamiltonian.
#[derive(Debug, Clone)]
pub struct EdSystem {
    pub n: usize,
    pub h: DMatrix<f64>,
    pub eig: SpectralDecomposition,
}

impl EdSystem {
    pub fn new(chain: &ChainSpec) -> Result<Self> {
        let h = build_h(chain)?.real(1e-14)?;
        let eig = linalg::symmetric_eigen(&h)?;
        Ok(EdSystem { n: chain.n, h, eig })
    }

    pub fn spectrum(&self) -> Vec<f64> {
        self.eig.eigenvalues.iter().copied().collect()
    }

    pub fn eigenvector(&self, k: usize) -> DVector<C64> {
        self.eig.eigenvectors.column(k).map(|x| C64::new(x, 0.0))
    }

    /// Index of the unique eigenvalue within `tol` of `energy`, if unique.
    pub fn match_energy(&self, energy: f64, tol: f64) -> Option<usize> {
        let hits: Vec<usize> = (0..self.eig.dim()).filter(|&k| (self.eig.eigenvalues[k] - energy).abs() <= tol).collect();
        (hits.len() == 1).then(|| hits[0])
    }

    /// `tau_t(X) = e^{iHt} X e^{-iHt}`.
    pub fn heisenberg_evolve(&self, op: &SpinOperator, t: f64) -> SpinOperator {
        let v = linalg::to_complex(&self.eig.eigenvectors);
        let mut x = v.adjoint() * &op.matrix * &v;
        let e = &self.eig.eigenvalues;
        for a in 0..x.nrows() {
            for b in 0..x.ncols() {
                x[(a, b)] *= C64::from_polar(1.0, (e[a] - e[b]) * t);
            }
        }
        SpinOperator { matrix: &v * x * v.adjoint(), label: format!("tau_{t}({})", op.label) }
    }

    /// `e^{-iHt} rho e^{iHt}`.
    pub fn evolve_state(&self, rho: &CMatrix, t: f64) -> CMatrix {
        let u = self.eig.propagator(t);
        &u * rho * u.adjoint()
    }

    /// Gibbs state `e^{-beta H} / Z`.
    pub fn thermal_state(&self, beta: f64) -> Result<CMatrix> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(XyError::InvalidInput(format!("inverse temperature {beta} must be finite and >= 0")));
        }
        let e_min = self.eig.eigenvalues.min();
        let z: f64 = self.eig.eigenvalues.iter().map(|e| (-beta * (e - e_min)).exp()).sum();
        let rho = self.eig.apply_real(|e| (-beta * (e - e_min)).exp() / z);
        Ok(linalg::to_complex(&rho))
    }
}

/// Pure-state density matrix.
pub fn pure_state(psi: &DVector<C64>) -> CMatrix {
    psi * psi.adjoint()
}

/// Product state with site `j` up iff bit `j` of `s`.
pub fn basis_state(n: usize, s: usize) -> Result<DVector<C64>> {
    let dim = check_size(n)?;
    let mut v = DVector::zeros(dim);
    v[s] = C64::new(1.0, 0.0);
    Ok(v)
}

pub fn expectation(rho: &CMatrix, op: &SpinOperator) -> C64 {
    rho.dot(&op.matrix.transpose())
}

/// Reduced state on sites `0..ell`, tracing out the rest.
pub fn reduced_density(rho: &CMatrix, n: usize, ell: usize) -> Result<CMatrix> {
    let dim = check_size(n)?;
    if rho.nrows() != dim || ell > n {
        return Err(XyError::DimensionMismatch(format!("state of dim {} for {n} sites, cut {ell}", rho.nrows())));
    }
    let da = 1 << ell;
    let db = dim >> ell;
    let mut out = CMatrix::zeros(da, da);
    for a in 0..da {
        for a2 in 0..da {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..db {
                acc += rho[(a + b * da, a2 + b * da)];
            }
            out[(a, a2)] = acc;
        }
    }
    Ok(out)
}

/// Von Neumann entropy in natural-log units.
pub fn von_neumann_entropy(rho: &CMatrix) -> f64 {
    linalg::hermitian_eigenvalues(rho).iter().filter(|&&p| p > 1e-14).map(|p| -p * p.ln()).sum()
}

/// Operator norm of `[x, y]`.
pub fn commutator_norm(x: &SpinOperator, y: &SpinOperator) -> f64 {
    let c = &x.matrix * &y.matrix - &y.matrix * &x.matrix;
    let gram = c.adjoint() * &c;
    linalg::hermitian_eigenvalues(&gram).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `max_t ||[τ_t(X_j), X_k]||` for Hermitian site operators, evaluated in the
/// energy eigenbasis where `τ_t` acts entrywise by phases.
pub fn commutator_sup(ed: &EdSystem, x: &SpinOperator, y: &SpinOperator, times: &[f64]) -> Result<f64> {
    let xr = x.real(1e-14)?;
    let yr = y.real(1e-14)?;
    let v = &ed.eig.eigenvectors;
    let xe = v.transpose() * xr * v;
    let ye = v.transpose() * yr * v;
    let e = &ed.eig.eigenvalues;
    let mut best = 0.0f64;
    for &t in times {
        let (mut re, mut im) = (xe.clone(), xe.clone());
        for a in 0..xe.nrows() {
            for b in 0..xe.ncols() {
                let (s, c) = ((e[a] - e[b]) * t).sin_cos();
                re[(a, b)] *= c;
                im[(a, b)] *= s;
            }
        }
        // Z = τ_t(X) Y; the commutator is Z - Z^*, and i(Z - Z^*) is Hermitian
        let zr = re * &ye;
        let zi = im * &ye;
        let k = CMatrix::from_fn(zr.nrows(), zr.ncols(), |a, b| {
            let z = C64::new(zr[(a, b)], zi[(a, b)]);
            let zt = C64::new(zr[(b, a)], -zi[(b, a)]);
            (z - zt) * C64::new(0.0, 1.0)
        });
        let ev = linalg::hermitian_eigenvalues(&k);
        let norm = ev.first().map_or(0.0, |l| l.abs()).max(ev.last().map_or(0.0, |l| l.abs()));
        best = best.max(norm);
    }
    Ok(best)
}

/// Operator norm of a matrix.
pub fn operator_norm(x: &CMatrix) -> f64 {
    let gram = x.adjoint() * x;
    linalg::hermitian_eigenvalues(&gram).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `C = (c_0, c_0^*, c_1, c_1^*, ...)` as oracle operators.
pub fn fermion_vector(n: usize) -> Result<Vec<SpinOperator>> {
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        let c = jordan_wigner_c(n, j)?;
        let cd = c.adjoint();
        out.push(c);
        out.push(cd);
    }
    Ok(out)
}

/// `Γ_{ab} = tr(ρ C_a C_b^*)`, computed by brute force.
pub fn correlation_matrix(rho: &CMatrix, n: usize) -> Result<CMatrix> {
    let ops = fermion_vector(n)?;
    let mut g = CMatrix::zeros(2 * n, 2 * n);
    for a in 0..2 * n {
        let left = rho * &ops[a].matrix;
        for b in 0..2 * n {
            // tr(X B^*) = Σ conj(B_ij) X_ij
            g[(a, b)] = ops[b].matrix.dotc(&left);
        }
    }
    Ok(g)
}

pub fn anticommutator(x: &SpinOperator, y: &SpinOperator) -> CMatrix {
    &x.matrix * &y.matrix + &y.matrix * &x.matrix
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_field() {
        let sys = EdSystem::new(&ChainSpec::decoupled(vec![0.7])).unwrap();
        assert!((sys.spectrum()[0] + 0.7).abs() < 1e-14);
        assert!((sys.spectrum()[1] - 0.7).abs() < 1e-14);
    }

    #[test]
    fn two_site_clean_spectrum_by_hand() {
        let c = ChainSpec::new(vec![1.0], vec![0.0], vec![0.0, 0.0]).unwrap();
        let sys = EdSystem::new(&c).unwrap();
        let expected = [-2.0, 0.0, 0.0, 2.0];
        for (a, b) in sys.spectrum().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_algebra_and_lowering() {
        let n = 3;
        let x = sigma_x(n, 1).unwrap().matrix;
        let y = sigma_y(n, 1).unwrap().matrix;
        let z = sigma_z(n, 1).unwrap().matrix;
        let i = C64::new(0.0, 1.0);
        assert!(linalg::max_modulus(&(&x * &y - &z * i)) < 1e-15);
        let a = lowering(n, 1).unwrap().matrix;
        assert!(linalg::max_modulus(&(a - (&x - &y * i) * C64::new(0.5, 0.0))) < 1e-15);
        let num = number(n, 1).unwrap().matrix;
        let a = lowering(n, 1).unwrap().matrix;
        assert!(linalg::max_modulus(&(a.adjoint() * a - num)) < 1e-15);
    }

    #[test]
    fn canonical_anticommutation() {
        let n = 4;
        let cs: Vec<SpinOperator> = (0..n).map(|j| jordan_wigner_c(n, j).unwrap()).collect();
        let id = CMatrix::identity(1 << n, 1 << n);
        for j in 0..n {
            for k in 0..n {
                let ac = anticommutator(&cs[j], &cs[k].adjoint());
                let expect = if j == k { id.clone() } else { CMatrix::zeros(1 << n, 1 << n) };
                assert!(linalg::max_modulus(&(ac - expect)) <= 1e-12);
                assert!(linalg::max_modulus(&anticommutator(&cs[j], &cs[k])) <= 1e-12);
            }
        }
    }

    #[test]
    fn disjoint_supports_commute() {
        let n = 4;
        assert!(commutator_norm(&sigma_x(n, 0).unwrap(), &sigma_y(n, 2).unwrap()) < 1e-15);
        assert!((commutator_norm(&sigma_x(n, 1).unwrap(), &sigma_y(n, 1).unwrap()) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_reduction() {
        let n = 4;
        let rho = pure_state(&basis_state(n, 0b1010).unwrap());
        let ra = reduced_density(&rho, n, 2).unwrap();
        // sites 0, 1 are (down, up): local index 0b10
        assert!((ra[(2, 2)].re - 1.0).abs() < 1e-15);
        assert!(von_neumann_entropy(&ra).abs() < 1e-12);
    }

    #[test]
    fn bell_pair_entropy() {
        let n = 2;
        let mut psi = basis_state(n, 0b01).unwrap() + basis_state(n, 0b10).unwrap();
        psi /= C64::new(2f64.sqrt(), 0.0);
        let ra = reduced_density(&pure_state(&psi), n, 1).unwrap();
        assert!((von_neumann_entropy(&ra) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn thermal_state_and_evolution() {
        let c = ChainSpec::new(vec![0.8, -0.4], vec![0.3, 0.1], vec![0.2, -1.0, 0.5]).unwrap();
        let sys = EdSystem::new(&c).unwrap();
        let rho = sys.thermal_state(1.3).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        // stationary under its own dynamics
        assert!(linalg::max_modulus(&(sys.evolve_state(&rho, 0.7) - &rho)) < 1e-12);
        let x = sigma_x(3, 0).unwrap();
        let back = sys.heisenberg_evolve(&sys.heisenberg_evolve(&x, 0.4), -0.4);
        assert!(linalg::max_modulus(&(back.matrix - x.matrix)) < 1e-12);
        assert!(build_h_region(&c, 2, 2).is_err());
        assert!(matches!(EdSystem::new(&ChainSpec::clean(15)), Err(XyError::TooLarge { .. })));
    }

    #[test]
    fn commutator_growth_fixture_three_sites() {
        // n = 3 clean chain, t = 1. The end-to-end X/X commutator vanishes
        // identically on the clean chain; X/Y does not, and is pinned.
        let c = ChainSpec::clean(3);
        let sys = EdSystem::new(&c).unwrap();
        let x0 = sys.heisenberg_evolve(&sigma_x(3, 0).unwrap(), 1.0);
        assert!(commutator_norm(&x0, &sigma_x(3, 2).unwrap()) < 1e-12);
        let v = commutator_norm(&x0, &sigma_y(3, 2).unwrap());
        assert!((v - COMMUTATOR_FIXTURE).abs() < 1e-10, "{v:.17}");
    }

    #[test]
    fn eigenbasis_commutator_sweep_agrees() {
        let c = ChainSpec::new(vec![0.8, -0.5, 1.1, 0.3], vec![0.2, -0.7, 0.4, 0.0], vec![0.4, -1.3, 0.6, 1.8, -0.2]).unwrap();
        let sys = EdSystem::new(&c).unwrap();
        let (x, y) = (sigma_x(5, 0).unwrap(), sigma_x(5, 3).unwrap());
        let times = [0.0, 0.7, 2.3];
        let direct = times.iter().map(|&t| commutator_norm(&sys.heisenberg_evolve(&x, t), &y)).fold(0.0, f64::max);
        assert!((commutator_sup(&sys, &x, &y, &times).unwrap() - direct).abs() < 1e-10);
        assert!(commutator_sup(&sys, &sigma_y(5, 1).unwrap(), &y, &times).is_err());
    }

    const COMMUTATOR_FIXTURE: f64 = 1.9513631281258481;
}
