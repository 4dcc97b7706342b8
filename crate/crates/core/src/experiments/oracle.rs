//! Brute-force identity checks of the free-fermion machinery on one chain.

use serde::Serialize;

use crate::disorder::ChainSpec;
use crate::ed_oracle::{self, EdSystem};
use crate::entanglement::{entropy_from_gamma, ps_bound, Cut};
use crate::error::{Result, XyError};
use crate::hamiltonian::{bogoliubov, build_a, build_m, many_body_energies, ManyBodyLabel};
use crate::linalg::{self, CMatrix, C64};
use crate::quasifree::eigenstate_gamma;

/// Largest chain for the quadratic-form operator identities.
pub const IDENTITY_CAP: usize = 8;
/// Largest chain for the spectrum comparison.
pub const SPECTRUM_CAP: usize = 10;

/// Max gap between the sorted many-body energies and the ED spectrum.
pub fn spectrum_gap(chain: &ChainSpec) -> Result<f64> {
    if chain.n > SPECTRUM_CAP {
        return Err(XyError::TooLarge { n: chain.n, cap: SPECTRUM_CAP });
    }
    let mut ff = many_body_energies(&bogoliubov(chain)?)?;
    let ed = EdSystem::new(chain)?.spectrum();
    ff.sort_by(f64::total_cmp);
    Ok(ff.iter().zip(&ed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn check_identity_size(n: usize) -> Result<()> {
    if n > IDENTITY_CAP {
        return Err(XyError::TooLarge { n, cap: IDENTITY_CAP });
    }
    Ok(())
}

/// `max |H - C^* M C|` entrywise, with `C = (c_0, c_0^*, ...)`.
pub fn quadratic_form_defect(chain: &ChainSpec) -> Result<f64> {
    check_identity_size(chain.n)?;
    let h = ed_oracle::build_h(chain)?.matrix;
    let m = build_m(chain)?;
    let ops = ed_oracle::fermion_vector(chain.n)?;
    let dim = h.nrows();
    let mut rebuilt = CMatrix::zeros(dim, dim);
    for a in 0..ops.len() {
        let left = ops[a].matrix.adjoint();
        for b in 0..ops.len() {
            if m[(a, b)] != 0.0 {
                rebuilt += &left * &ops[b].matrix * C64::new(m[(a, b)], 0.0);
            }
        }
    }
    Ok(linalg::max_modulus(&(rebuilt - h)))
}

/// `max |H_iso - (2 c^* A c + Σν)|` for the isotropic part of the chain.
pub fn isotropic_form_defect(chain: &ChainSpec) -> Result<f64> {
    check_identity_size(chain.n)?;
    let iso = chain.isotropic_part();
    let h = ed_oracle::build_h(&iso)?.matrix;
    let a = build_a(&iso)?;
    let cs: Vec<_> = (0..iso.n).map(|j| ed_oracle::jordan_wigner_c(iso.n, j)).collect::<Result<_>>()?;
    let dim = h.nrows();
    let mut rebuilt = CMatrix::identity(dim, dim) * C64::new(iso.nu.iter().sum(), 0.0);
    for j in 0..iso.n {
        let left = cs[j].matrix.adjoint();
        for k in 0..iso.n {
            if a[(j, k)] != 0.0 {
                rebuilt += &left * &cs[k].matrix * C64::new(2.0 * a[(j, k)], 0.0);
            }
        }
    }
    Ok(linalg::max_modulus(&(rebuilt - h)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyComparison {
    /// Max `|S_ff - S_ed|` over compared eigenstates and cuts.
    pub max_gap: f64,
    /// Max `S - ps_bound`; nonpositive when the bound holds everywhere.
    pub max_excess: f64,
    /// Max entrywise gap between the eigenstate correlation matrices.
    pub gamma_gap: f64,
    pub compared: usize,
    /// Labels whose energy is not isolated in the ED spectrum.
    pub skipped: usize,
}

/// Every eigenstate and every cut: free-fermion vs reduced-density entropy.
pub fn compare_eigenstate_entropies(chain: &ChainSpec) -> Result<EntropyComparison> {
    check_identity_size(chain.n)?;
    let n = chain.n;
    let bog = bogoliubov(chain)?;
    let ed = EdSystem::new(chain)?;
    let mut out = EntropyComparison { max_gap: 0.0, max_excess: f64::NEG_INFINITY, gamma_gap: 0.0, compared: 0, skipped: 0 };
    for mask in 0..1u64 << n {
        let alpha = ManyBodyLabel::from_mask(n, mask);
        let Some(k) = ed.match_energy(bog.energy(&alpha), 1e-7) else {
            out.skipped += 1;
            continue;
        };
        let rho = ed_oracle::pure_state(&ed.eigenvector(k));
        let g = eigenstate_gamma(&bog, &alpha)?;
        let g_ed = ed_oracle::correlation_matrix(&rho, n)?;
        out.gamma_gap = out.gamma_gap.max(linalg::max_modulus(&(g_ed - &g.gamma)));
        for ell in 1..n {
            let cut = Cut::new(ell, n)?;
            let s = entropy_from_gamma(&g, cut)?;
            let s_ed = ed_oracle::von_neumann_entropy(&ed_oracle::reduced_density(&rho, n, ell)?);
            out.max_gap = out.max_gap.max((s - s_ed).abs());
            out.max_excess = out.max_excess.max(s - ps_bound(&g, cut));
        }
        out.compared += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub spectrum_gap: f64,
    pub quadratic_form_defect: Option<f64>,
    pub isotropic_form_defect: Option<f64>,
    pub entropy: Option<EntropyComparison>,
}

/// All checks that fit the chain size.
pub fn oracle_report(chain: &ChainSpec) -> Result<OracleReport> {
    let small = chain.n <= IDENTITY_CAP;
    Ok(OracleReport {
        n: chain.n,
        spectrum_gap: spectrum_gap(chain)?,
        quadratic_form_defect: small.then(|| quadratic_form_defect(chain)).transpose()?,
        isotropic_form_defect: small.then(|| isotropic_form_defect(chain)).transpose()?,
        entropy: small.then(|| compare_eigenstate_entropies(chain)).transpose()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_chain_passes_everything() {
        let c = ChainSpec::new(vec![0.9, -0.4, 0.6], vec![0.5, 0.0, -0.8], vec![0.3, -1.0, 1.4, 0.2]).unwrap();
        let r = oracle_report(&c).unwrap();
        assert!(r.spectrum_gap < 1e-10);
        assert!(r.quadratic_form_defect.unwrap() < 1e-12);
        assert!(r.isotropic_form_defect.unwrap() < 1e-12);
        let e = r.entropy.unwrap();
        assert_eq!(e.compared + e.skipped, 16);
        assert!(e.max_gap < 1e-9 && e.max_excess < 1e-10 && e.gamma_gap < 1e-9);
    }

    #[test]
    fn size_caps() {
        assert!(matches!(quadratic_form_defect(&ChainSpec::clean(9)), Err(XyError::TooLarge { .. })));
        assert!(oracle_report(&ChainSpec::clean(9)).unwrap().entropy.is_none());
    }
}
