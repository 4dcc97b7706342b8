mod common;

use nalgebra::DMatrix;
use xylab::disorder::{high_disorder_chain, Distribution};
use xylab::ed_oracle::{self, SpinOperator};
use xylab::fock::{locate_centers, occupation_number, slater_overlap, FermionConfiguration};
use xylab::hamiltonian::{diagonalize, EffectiveHamiltonian};
use xylab::linalg::{CMatrix, C64};

fn mask_config(n: usize, mask: usize) -> FermionConfiguration {
    FermionConfiguration::new((0..n).filter(|j| mask >> j & 1 == 1).collect()).unwrap()
}

fn omega(n: usize, eps: f64, seed: u64) -> DMatrix<f64> {
    let c = high_disorder_chain(n, eps, Distribution::uniform(-1.0, 1.0), seed, 0).unwrap();
    let sd = diagonalize(&EffectiveHamiltonian::isotropic(&c).unwrap()).unwrap();
    locate_centers(&sd, 1.25).unwrap().relabeled(&sd)
}

/// `Π_m b_{k_m}^* |vac>` built in the spin basis, leftmost factor outermost.
fn ed_slater(omega: &DMatrix<f64>, k: &FermionConfiguration) -> nalgebra::DVector<C64> {
    let n = omega.nrows();
    let mut psi = ed_oracle::basis_state(n, 0).unwrap();
    for &km in k.sites.iter().rev() {
        let mut b = CMatrix::zeros(1 << n, 1 << n);
        for j in 0..n {
            let cj: SpinOperator = ed_oracle::jordan_wigner_c(n, j).unwrap().adjoint();
            b += cj.matrix * C64::new(omega[(j, km)], 0.0);
        }
        psi = b * psi;
    }
    psi
}

#[test]
fn overlaps_match_oracle_with_sign() {
    let n = 6;
    let om = omega(n, 0.4, 5);
    for kmask in (0..1usize << n).filter(|m| m.count_ones() == 2) {
        let k = mask_config(n, kmask);
        let psi = ed_slater(&om, &k);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        for jmask in 0..1usize << n {
            let j = mask_config(n, jmask);
            let ff = slater_overlap(&om, &k, &j).unwrap().value();
            let oracle = psi[jmask];
            assert!(oracle.im.abs() < 1e-12);
            assert!((ff - oracle.re).abs() < 1e-10, "k={kmask:b} j={jmask:b}: {ff} vs {}", oracle.re);
        }
    }
}

#[test]
fn occupation_matches_oracle() {
    let n = 6;
    let om = omega(n, 0.7, 6);
    for kmask in 0..1usize << n {
        let k = mask_config(n, kmask);
        let psi = ed_slater(&om, &k);
        let rho = ed_oracle::pure_state(&psi);
        let mut total = 0.0;
        for x in 0..n {
            let ff = occupation_number(&om, &k, x).unwrap();
            let oracle = ed_oracle::expectation(&rho, &ed_oracle::number(n, x).unwrap()).re;
            assert!((ff - oracle).abs() < 1e-10);
            total += ff;
        }
        assert!((total - k.len() as f64).abs() < 1e-10);
    }
}

#[test]
fn parseval_exhaustive() {
    for n in [4, 8, 12] {
        let om = omega(n, 0.3, n as u64);
        for kmask in [0usize, 1, 0b101, (1 << n) - 1, 0b1101 << (n - 4)] {
            let k = mask_config(n, kmask);
            let sum: f64 = (0..1usize << n)
                .filter(|m| m.count_ones() as usize == k.len())
                .map(|m| slater_overlap(&om, &k, &mask_config(n, m)).unwrap().value().powi(2))
                .sum();
            assert!((sum - 1.0).abs() < 1e-9, "n={n} k={kmask:b}: {sum}");
        }
    }
}
