//! One-particle matrices of the XY chain and their diagonalization.
//!
//! With `C = (c_1, c_1^*, ..., c_n, c_n^*)` the Jordan-Wigner fermions, the
//! chain Hamiltonian is `C^* M C`. In the isotropic case it reduces to
//! `2 c^* A c + sum(nu)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::disorder::ChainSpec;
use crate::error::{Result, XyError};
use crate::linalg::{self, SpectralDecomposition, DECOMPOSITION_TOL, DEGENERACY_TOL};

/// `diag = -nu`, `off = mu`.
pub fn build_a(chain: &ChainSpec) -> Result<DMatrix<f64>> {
    chain.validate()?;
    let diag: Vec<f64> = chain.nu.iter().map(|v| -v).collect();
    Ok(linalg::tridiagonal(&diag, &chain.mu))
}

/// Super-diagonal `mu * gamma`, sub-diagonal its negative.
pub fn build_b(chain: &ChainSpec) -> Result<DMatrix<f64>> {
    chain.validate()?;
    let n = chain.n;
    let mut b = DMatrix::zeros(n, n);
    for j in 0..n - 1 {
        let v = chain.mu[j] * chain.gamma[j];
        b[(j, j + 1)] = v;
        b[(j + 1, j)] = -v;
    }
    Ok(b)
}

/// The 2n x 2n block Jacobi matrix: diagonal blocks `-nu_j Z`, upper blocks
/// `mu_j [[1, g], [-g, -1]]`, lower blocks their transposes.
pub fn build_m(chain: &ChainSpec) -> Result<DMatrix<f64>> {
    chain.validate()?;
    let n = chain.n;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        m[(2 * j, 2 * j)] = -chain.nu[j];
        m[(2 * j + 1, 2 * j + 1)] = chain.nu[j];
    }
    for j in 0..n - 1 {
        let (mu, g) = (chain.mu[j], chain.gamma[j]);
        let s = [[mu, mu * g], [-mu * g, -mu]];
        for r in 0..2 {
            for c in 0..2 {
                m[(2 * j + r, 2 * j + 2 + c)] = s[r][c];
                m[(2 * j + 2 + c, 2 * j + r)] = s[r][c];
            }
        }
    }
    Ok(m)
}

/// `J = sigma_x ⊕ ... ⊕ sigma_x`.
pub fn pairing_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = 1.0;
    }
    j
}

#[derive(Debug, Clone)]
pub enum EffectiveHamiltonian {
    Isotropic { a: DMatrix<f64>, n: usize },
    Anisotropic { m: DMatrix<f64>, n: usize },
}

impl EffectiveHamiltonian {
    pub fn isotropic(chain: &ChainSpec) -> Result<Self> {
        Ok(EffectiveHamiltonian::Isotropic { a: build_a(chain)?, n: chain.n })
    }

    pub fn anisotropic(chain: &ChainSpec) -> Result<Self> {
        Ok(EffectiveHamiltonian::Anisotropic { m: build_m(chain)?, n: chain.n })
    }

    pub fn n(&self) -> usize {
        match self {
            EffectiveHamiltonian::Isotropic { n, .. } | EffectiveHamiltonian::Anisotropic { n, .. } => *n,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        match self {
            EffectiveHamiltonian::Isotropic { a, .. } => a,
            EffectiveHamiltonian::Anisotropic { m, .. } => m,
        }
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self, EffectiveHamiltonian::Isotropic { .. })
    }
}

/// Spectral decomposition; Jacobi matrices go through the tridiagonal solver.
pub fn diagonalize(x: &EffectiveHamiltonian) -> Result<SpectralDecomposition> {
    match x {
        EffectiveHamiltonian::Isotropic { a, n } => {
            let diag: Vec<f64> = (0..*n).map(|i| a[(i, i)]).collect();
            let off: Vec<f64> = (0..n - 1).map(|i| a[(i, i + 1)]).collect();
            linalg::tridiagonal_eigen(&diag, &off)
        }
        EffectiveHamiltonian::Anisotropic { m, .. } => linalg::symmetric_eigen(m),
    }
}

/// Orthogonal `W` with `W J Wᵗ = J` and `W M Wᵗ = ⊕ diag(λ_j, -λ_j)`.
///
/// Row `2j` of `W` defines the free mode `b_j = sum_k W[2j, k] C_k`, row
/// `2j + 1` its adjoint.
#[derive(Debug, Clone)]
pub struct BogoliubovDecomposition {
    pub w: DMatrix<f64>,
    pub lambda: DVector<f64>,
    pub e0: f64,
    pub degenerate: bool,
}

impl BogoliubovDecomposition {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// Energy of the many-body eigenstate labelled `alpha`.
    pub fn energy(&self, alpha: &ManyBodyLabel) -> f64 {
        let excited: f64 = alpha.bits.iter().zip(self.lambda.iter()).filter(|(b, _)| **b).map(|(_, l)| 2.0 * l).sum();
        excited - self.e0
    }

    pub fn ground_energy(&self) -> f64 {
        -self.e0
    }

    /// Max-norm defects: orthogonality, J-preservation, block diagonalization.
    pub fn defects(&self, m: &DMatrix<f64>) -> (f64, f64, f64) {
        let n = self.n();
        let w = &self.w;
        let id = DMatrix::<f64>::identity(2 * n, 2 * n);
        let j = pairing_j(n);
        let ortho = (w * w.transpose() - &id).amax();
        let jdef = (w * &j * w.transpose() - &j).amax();
        let mut target = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            target[(2 * k, 2 * k)] = self.lambda[k];
            target[(2 * k + 1, 2 * k + 1)] = -self.lambda[k];
        }
        let diag = (w * m * w.transpose() - target).amax();
        (ortho, jdef, diag)
    }
}

/// Bogoliubov decomposition from the SVD `(A+B) ψ_j = λ_j φ_j`.
///
/// With `x = (ψ + φ)/2`, `y = (ψ − φ)/2` the mode row is
/// `(x_1, y_1, x_2, y_2, ...)` and its partner `(y_1, x_1, y_2, x_2, ...)`.
/// Isotropic chains take `ψ`, `φ` from the accurate tridiagonal eigenvectors.
pub fn bogoliubov(chain: &ChainSpec) -> Result<BogoliubovDecomposition> {
    let n = chain.n;
    let (lambda, psi, phi) = if chain.is_isotropic() {
        let sd = diagonalize(&EffectiveHamiltonian::isotropic(chain)?)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| sd.eigenvalues[a].abs().total_cmp(&sd.eigenvalues[b].abs()).then(a.cmp(&b)));
        let lambda = DVector::from_iterator(n, order.iter().map(|&i| sd.eigenvalues[i].abs()));
        let psi = DMatrix::from_fn(n, n, |r, c| sd.eigenvectors[(r, order[c])]);
        let phi = DMatrix::from_fn(n, n, |r, c| {
            let e = sd.eigenvalues[order[c]];
            if e < 0.0 { -psi[(r, c)] } else { psi[(r, c)] }
        });
        (lambda, psi, phi)
    } else {
        let ab = build_a(chain)? + build_b(chain)?;
        let svd = nalgebra::linalg::SVD::try_new(ab.clone(), true, true, f64::EPSILON, 0).ok_or_else(|| {
            XyError::Eigensolver { dim: n, norm: ab.norm(), detail: "SVD did not converge".into() }
        })?;
        let u = svd.u.expect("requested");
        let v = svd.v_t.expect("requested").transpose();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]).then(a.cmp(&b)));
        let lambda = DVector::from_iterator(n, order.iter().map(|&i| svd.singular_values[i]));
        let mut psi = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        let mut phi = DMatrix::from_fn(n, n, |r, c| u[(r, order[c])]);
        for c in 0..n {
            let pivot = linalg::sign_pivot(psi.column(c).as_slice());
            if psi[(pivot, c)] < 0.0 {
                psi.column_mut(c).neg_mut();
                phi.column_mut(c).neg_mut();
            }
        }
        (lambda, psi, phi)
    };
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let x = 0.5 * (psi[(k, j)] + phi[(k, j)]);
            let y = 0.5 * (psi[(k, j)] - phi[(k, j)]);
            w[(2 * j, 2 * k)] = x;
            w[(2 * j, 2 * k + 1)] = y;
            w[(2 * j + 1, 2 * k)] = y;
            w[(2 * j + 1, 2 * k + 1)] = x;
        }
    }
    let scale = lambda.iter().fold(1.0f64, |m, l| m.max(*l));
    let degenerate = lambda.as_slice().windows(2).any(|p| p[1] - p[0] <= DEGENERACY_TOL * scale);
    let bog = BogoliubovDecomposition { e0: lambda.sum(), w, lambda, degenerate };
    let (ortho, jdef, diag) = bog.defects(&build_m(chain)?);
    for (what, value, tol) in [
        ("orthogonality of W", ortho, DECOMPOSITION_TOL),
        ("W J Wᵗ - J", jdef, DECOMPOSITION_TOL),
        ("W M Wᵗ - diag", diag, 1e-9 * scale),
    ] {
        if value > tol {
            return Err(XyError::Tolerance { what: what.into(), value, tol });
        }
    }
    Ok(bog)
}

/// Occupation pattern of the free modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ManyBodyLabel {
    pub bits: Vec<bool>,
}

impl ManyBodyLabel {
    pub fn vacuum(n: usize) -> Self {
        ManyBodyLabel { bits: vec![false; n] }
    }

    /// Bit `j` of `mask` is the occupation of mode `j`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        ManyBodyLabel { bits: (0..n).map(|j| mask >> j & 1 == 1).collect() }
    }

    pub fn mask(&self) -> u64 {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(j, _)| 1u64 << j).sum()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// All `2^n` many-body energies `sum_{alpha_j = 1} 2 λ_j - E0`, ascending.
pub fn many_body_energies(bog: &BogoliubovDecomposition) -> Result<Vec<f64>> {
    let n = bog.n();
    if n > 24 {
        return Err(XyError::TooLarge { n, cap: 24 });
    }
    let mut energies: Vec<f64> = (0..1u64 << n).map(|mask| bog.energy(&ManyBodyLabel::from_mask(n, mask))).collect();
    energies.sort_by(f64::total_cmp);
    Ok(energies)
}

/// Dense row-major CSV dump.
pub fn write_matrix_csv(x: &DMatrix<f64>, out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for r in 0..x.nrows() {
        w.write_record((0..x.ncols()).map(|c| format!("{:e}", x[(r, c)])))?;
    }
    w.flush()?;
    Ok(())
}
