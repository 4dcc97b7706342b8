//! Dense symmetric eigensolvers and small matrix helpers.
//!
//! Jacobi (symmetric tridiagonal) matrices get a dedicated solver: eigenvalues
//! by Sturm-count bisection, eigenvectors from twisted factorizations. That
//! combination resolves exponentially small eigenvector components with high
//! relative accuracy, which QR-based solvers cannot do below roughly
//! `1e-16 * ||T||`. General symmetric matrices use nalgebra's implicit QR.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Result, XyError};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Residual and orthogonality tolerance for every decomposition we hand out.
pub const DECOMPOSITION_TOL: f64 = 1e-10;
/// Eigenvalue gap below which a spectrum is flagged degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Eigenvalues ascending, eigenvectors as orthonormal columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// Two eigenvalues closer than [`DEGENERACY_TOL`] (relative to the norm).
    pub degenerate: bool,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `g(X) = V g(Λ) Vᵗ` for a real spectral function.
    pub fn apply_real(&self, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let weights = self.eigenvalues.map(g);
        let mut scaled = self.eigenvectors.clone();
        for (mut col, w) in scaled.column_iter_mut().zip(weights.iter()) {
            col *= *w;
        }
        &scaled * self.eigenvectors.transpose()
    }

    /// `exp(-i * t * X)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let v = self.eigenvectors.map(|x| C64::new(x, 0.0));
        let mut scaled = v.clone();
        for (mut col, &e) in scaled.column_iter_mut().zip(self.eigenvalues.iter()) {
            col *= C64::from_polar(1.0, -t * e);
        }
        &scaled * v.transpose()
    }

    /// Max-norm residual and orthogonality defects against `x`.
    pub fn defects(&self, x: &DMatrix<f64>) -> (f64, f64) {
        let v = &self.eigenvectors;
        let mut vl = v.clone();
        for (mut col, &e) in vl.column_iter_mut().zip(self.eigenvalues.iter()) {
            col *= e;
        }
        let residual = (x * v - vl).amax();
        let ortho = (v.transpose() * v - DMatrix::identity(v.ncols(), v.ncols())).amax();
        (residual, ortho)
    }

    fn finish(mut self, x: &DMatrix<f64>) -> Result<Self> {
        sort_ascending(&mut self);
        for mut col in self.eigenvectors.column_iter_mut() {
            let pivot = sign_pivot(col.as_slice());
            if col[pivot] < 0.0 {
                col.neg_mut();
            }
        }
        let norm = self.spectral_radius().max(f64::MIN_POSITIVE);
        self.degenerate = self
            .eigenvalues
            .as_slice()
            .windows(2)
            .any(|w| w[1] - w[0] <= DEGENERACY_TOL * norm.max(1.0));
        let (residual, ortho) = self.defects(x);
        if residual > DECOMPOSITION_TOL * norm.max(1e-300) && residual > 1e-300 {
            return Err(XyError::Eigensolver {
                dim: x.nrows(),
                norm,
                detail: format!("residual {residual:.3e}"),
            });
        }
        if ortho > DECOMPOSITION_TOL {
            return Err(XyError::Eigensolver {
                dim: x.nrows(),
                norm,
                detail: format!("orthogonality defect {ortho:.3e}"),
            });
        }
        Ok(self)
    }
}

/// Index of the component that fixes the sign: the first one whose magnitude
/// is within 1e-12 of the largest.
pub fn sign_pivot(v: &[f64]) -> usize {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter().position(|x| x.abs() >= max - 1e-12).unwrap_or(0)
}

fn sort_ascending(sd: &mut SpectralDecomposition) {
    let n = sd.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sd.eigenvalues[a].total_cmp(&sd.eigenvalues[b]).then(a.cmp(&b)));
    let values = DVector::from_iterator(n, order.iter().map(|&i| sd.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| sd.eigenvectors[(r, order[c])]);
    sd.eigenvalues = values;
    sd.eigenvectors = vectors;
}

pub fn symmetry_defect(x: &DMatrix<f64>) -> f64 {
    (x - x.transpose()).amax()
}

/// Full decomposition of a real symmetric matrix via implicit QR.
pub fn symmetric_eigen(x: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let n = x.nrows();
    if n != x.ncols() {
        return Err(XyError::DimensionMismatch(format!("{}x{} is not square", n, x.ncols())));
    }
    let asym = symmetry_defect(x);
    if asym > 1e-12 * x.amax().max(1.0) {
        return Err(XyError::InvalidInput(format!("matrix not symmetric (defect {asym:.3e})")));
    }
    let eig = nalgebra::SymmetricEigen::try_new(x.clone(), f64::EPSILON, 0).ok_or_else(|| {
        XyError::Eigensolver { dim: n, norm: x.norm(), detail: "QR iteration did not converge".into() }
    })?;
    SpectralDecomposition { eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors, degenerate: false }
        .finish(x)
}

/// Dense symmetric tridiagonal matrix from its diagonal and off-diagonal.
pub fn tridiagonal(diag: &[f64], off: &[f64]) -> DMatrix<f64> {
    let n = diag.len();
    let mut t = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
    for (i, &b) in off.iter().enumerate().take(n.saturating_sub(1)) {
        t[(i, i + 1)] = b;
        t[(i + 1, i)] = b;
    }
    t
}

/// Decomposition of a symmetric tridiagonal (Jacobi) matrix.
///
/// Blocks separated by exactly vanishing couplings are solved independently.
/// If the twisted-factorization vectors fail the orthogonality check (tight
/// clusters), the dense QR solver is used instead.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<SpectralDecomposition> {
    let n = diag.len();
    if off.len() + 1 != n.max(1) {
        return Err(XyError::DimensionMismatch(format!(
            "tridiagonal of size {n} needs {} off-diagonals, got {}",
            n.saturating_sub(1),
            off.len()
        )));
    }
    let t = tridiagonal(diag, off);
    let norm = diag
        .iter()
        .enumerate()
        .map(|(i, a)| {
            a.abs() + if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max);
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    let mut col = 0;
    let mut start = 0;
    for end in 1..=n {
        if end < n && off[end - 1] != 0.0 {
            continue;
        }
        let block = jacobi_block(&diag[start..end], &off[start..end - 1], norm);
        for (e, v) in block {
            values[col] = e;
            for (i, x) in v.iter().enumerate() {
                vectors[(start + i, col)] = *x;
            }
            col += 1;
        }
        start = end;
    }
    let sd = SpectralDecomposition { eigenvalues: values, eigenvectors: vectors, degenerate: false };
    match sd.finish(&t) {
        Ok(sd) => Ok(sd),
        Err(_) => symmetric_eigen(&t),
    }
}

/// Eigenpairs of an unreduced Jacobi block.
fn jacobi_block(a: &[f64], b: &[f64], norm: f64) -> Vec<(f64, Vec<f64>)> {
    let n = a.len();
    if n == 1 {
        return vec![(a[0], vec![1.0])];
    }
    let pivmin = (f64::EPSILON * f64::EPSILON * norm).max(f64::MIN_POSITIVE);
    let radius = norm.max(f64::MIN_POSITIVE);
    let energies: Vec<f64> = (0..n).map(|k| bisect(a, b, k, -radius, radius, pivmin, norm)).collect();
    let mut vecs: Vec<Vec<f64>> = energies.iter().map(|&e| twisted_vector(a, b, e, pivmin)).collect();
    reorthogonalize_close_pairs(&mut vecs);
    energies.into_iter().zip(vecs).collect()
}

/// Number of eigenvalues strictly below `x` (negative LDLᵗ pivots).
fn sturm_count(a: &[f64], b: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut d = a[0] - x;
    if d.abs() < pivmin {
        d = -pivmin;
    }
    if d < 0.0 {
        count += 1;
    }
    for i in 1..a.len() {
        d = a[i] - x - b[i - 1] * b[i - 1] / d;
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue, to working precision.
fn bisect(a: &[f64], b: &[f64], k: usize, mut lo: f64, mut hi: f64, pivmin: f64, norm: f64) -> f64 {
    let floor = f64::EPSILON * norm * 1e-2;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= (2.0 * f64::EPSILON * lo.abs().max(hi.abs())).max(floor) {
            return mid;
        }
        if sturm_count(a, b, mid, pivmin) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Eigenvector for eigenvalue `e` from the twisted factorization whose twist
/// residual is smallest. Components are products of pivot ratios, so small
/// entries keep their relative accuracy.
fn twisted_vector(a: &[f64], b: &[f64], e: f64, pivmin: f64) -> Vec<f64> {
    let n = a.len();
    let guard = |d: f64| if d.abs() < pivmin { pivmin.copysign(d) } else { d };
    // s[j] = phi_j / phi_{j+1}
    let mut fwd = vec![0.0; n];
    let mut s = vec![0.0; n];
    fwd[0] = guard(a[0] - e);
    for j in 0..n {
        if j > 0 {
            fwd[j] = guard(a[j] - e + b[j - 1] * s[j - 1]);
        }
        if j + 1 < n {
            s[j] = -b[j] / fwd[j];
        }
    }
    // p[j] = phi_j / phi_{j-1}
    let mut bwd = vec![0.0; n];
    let mut p = vec![0.0; n];
    for j in (0..n).rev() {
        let tail = if j + 1 < n { b[j] * p[j + 1] } else { 0.0 };
        bwd[j] = guard(a[j] - e + tail);
        if j > 0 {
            p[j] = -b[j - 1] / bwd[j];
        }
    }
    let twist = (0..n)
        .map(|k| {
            let left = if k > 0 { b[k - 1] * s[k - 1] } else { 0.0 };
            let right = if k + 1 < n { b[k] * p[k + 1] } else { 0.0 };
            (k, (a[k] - e + left + right).abs())
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut v = vec![0.0; n];
    v[twist] = 1.0;
    for j in (0..twist).rev() {
        v[j] = s[j] * v[j + 1];
    }
    for j in twist + 1..n {
        v[j] = p[j] * v[j - 1];
    }
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter_mut().for_each(|x| *x /= max);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Gram-Schmidt only between vectors whose overlap is numerically visible, so
/// well-separated localized vectors keep their tiny tails untouched.
fn reorthogonalize_close_pairs(vecs: &mut [Vec<f64>]) {
    const VISIBLE: f64 = 1e-12;
    for i in 1..vecs.len() {
        let (done, rest) = vecs.split_at_mut(i);
        let v = &mut rest[0];
        let mut touched = false;
        for u in done.iter() {
            let dot: f64 = u.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
            if dot.abs() > VISIBLE {
                v.iter_mut().zip(u).for_each(|(y, x)| *y -= dot * x);
                touched = true;
            }
        }
        if touched {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Spectral norm of a 2x2 complex block.
pub fn block_norm2(m: [[C64; 2]; 2]) -> f64 {
    // eigenvalues of M^*M
    let p = m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let s = m[0][1].norm_sqr() + m[1][1].norm_sqr();
    let q = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
    let tr = p + s;
    let det = p * s - q.norm_sqr();
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    (0.5 * (tr + disc)).max(0.0).sqrt()
}

/// 2x2 block `(j, k)` of a 2n x 2n complex matrix.
pub fn block_of(x: &CMatrix, j: usize, k: usize) -> [[C64; 2]; 2] {
    [
        [x[(2 * j, 2 * k)], x[(2 * j, 2 * k + 1)]],
        [x[(2 * j + 1, 2 * k)], x[(2 * j + 1, 2 * k + 1)]],
    ]
}

/// 2x2 block `(j, k)` of a 2n x 2n real matrix, as complex.
pub fn real_block_of(x: &DMatrix<f64>, j: usize, k: usize) -> [[C64; 2]; 2] {
    let c = |r: usize, s: usize| C64::new(x[(r, s)], 0.0);
    [[c(2 * j, 2 * k), c(2 * j, 2 * k + 1)], [c(2 * j + 1, 2 * k), c(2 * j + 1, 2 * k + 1)]]
}

/// Largest entry modulus.
pub fn max_modulus(x: &CMatrix) -> f64 {
    x.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn to_complex(x: &DMatrix<f64>) -> CMatrix {
    x.map(|v| C64::new(v, 0.0))
}

/// Largest imaginary part, and the real part.
pub fn split_real(x: &CMatrix) -> (DMatrix<f64>, f64) {
    let imag = x.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    (x.map(|z| z.re), imag)
}

/// Determinant by LU with partial pivoting.
pub fn det_complex(x: &CMatrix) -> C64 {
    if x.nrows() == 0 {
        return C64::new(1.0, 0.0);
    }
    x.clone().lu().determinant()
}

pub fn det_real(x: &DMatrix<f64>) -> f64 {
    if x.nrows() == 0 {
        return 1.0;
    }
    x.clone().lu().determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_matrix_gives_sorted_permutation() {
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let sd = symmetric_eigen(&x).unwrap();
        assert_eq!(sd.eigenvalues.as_slice(), &[-1.0, 2.0, 3.0]);
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!((sd.eigenvectors - expected).amax() < 1e-15);
    }

    #[test]
    fn pauli_x_closed_form_and_signs() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        for sd in [symmetric_eigen(&x).unwrap(), tridiagonal_eigen(&[0.0, 0.0], &[1.0]).unwrap()] {
            assert!((sd.eigenvalues[0] + 1.0).abs() < 1e-15);
            assert!((sd.eigenvalues[1] - 1.0).abs() < 1e-15);
            let h = std::f64::consts::FRAC_1_SQRT_2;
            assert!((sd.eigenvectors[(0, 0)] - h).abs() < 1e-15);
            assert!((sd.eigenvectors[(1, 0)] + h).abs() < 1e-15);
            assert!((sd.eigenvectors[(0, 1)] - h).abs() < 1e-15);
            assert!((sd.eigenvectors[(1, 1)] - h).abs() < 1e-15);
        }
    }

    #[test]
    fn decoupled_blocks_and_degeneracy_flag() {
        let sd = tridiagonal_eigen(&[1.0, 1.0, -2.0], &[0.0, 0.0]).unwrap();
        assert!(sd.degenerate);
        assert_eq!(sd.eigenvalues.as_slice(), &[-2.0, 1.0, 1.0]);
    }

    #[test]
    fn tiny_components_keep_relative_accuracy() {
        // Strongly disordered chain: components decay by roughly eps per site.
        let eps = 0.05;
        let n = 60;
        let diag: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let off = vec![eps; n - 1];
        let sd = tridiagonal_eigen(&diag, &off).unwrap();
        // Each eigenvector must satisfy the three-term recursion entrywise to
        // high relative accuracy, which QR vectors fail below 1e-16.
        let mut checked = 0;
        for c in 0..n {
            let e = sd.eigenvalues[c];
            let v = sd.eigenvectors.column(c);
            for j in 1..n - 1 {
                let scale = (eps * v[j - 1]).abs() + ((diag[j] - e) * v[j]).abs() + (eps * v[j + 1]).abs();
                if scale > 1e-250 && scale < 1e-30 {
                    let row = eps * v[j - 1] + (diag[j] - e) * v[j] + eps * v[j + 1];
                    assert!(row.abs() <= 1e-8 * scale, "col {c} row {j}: {row:e} vs {scale:e}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn block_norm_matches_svd() {
        let m = [[C64::new(1.0, 0.5), C64::new(-0.3, 0.0)], [C64::new(0.2, -0.1), C64::new(0.0, 2.0)]];
        let dense = CMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]);
        let sv = dense.singular_values().max();
        assert!((block_norm2(m) - sv).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn tridiagonal_solver_agrees_with_qr(
            diag in proptest::collection::vec(-5.0f64..5.0, 2..40),
            seed in 0u64..1000,
        ) {
            let n = diag.len();
            let off: Vec<f64> = (0..n - 1).map(|i| 0.1 + ((i as u64 * 31 + seed) % 17) as f64 / 10.0).collect();
            let t = tridiagonal(&diag, &off);
            let a = tridiagonal_eigen(&diag, &off).unwrap();
            let b = symmetric_eigen(&t).unwrap();
            prop_assert!((a.eigenvalues.clone() - b.eigenvalues.clone()).amax() < 1e-10);
            let (res, ortho) = a.defects(&t);
            prop_assert!(res < 1e-10 * a.spectral_radius().max(1.0));
            prop_assert!(ortho < 1e-10);
        }
    }
}
