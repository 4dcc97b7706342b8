use proptest::prelude::*;

use xylab::disorder::{high_disorder_chain, Distribution};
use xylab::fock::{locate_centers, occupation_number, slater_overlap, FermionConfiguration};
use xylab::hamiltonian::{diagonalize, EffectiveHamiltonian};
use xylab::transport::{particle_number_isotropic, Region};

fn sd(n: usize, eps: f64, seed: u64) -> xylab::linalg::SpectralDecomposition {
    let c = high_disorder_chain(n, eps, Distribution::uniform(-1.0, 1.0), seed, 0).unwrap();
    diagonalize(&EffectiveHamiltonian::isotropic(&c).unwrap()).unwrap()
}

fn config(n: usize, bits: u64) -> FermionConfiguration {
    FermionConfiguration::new((0..n).filter(|j| bits >> j & 1 == 1).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn centers_are_a_bijection(n in 2usize..40, eps in 0.0f64..0.5, seed in 0u64..1000) {
        let a = locate_centers(&sd(n, eps, seed), 1.25).unwrap();
        let mut seen = a.centers.clone();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), n);
        prop_assert!(a.centers.iter().all(|&k| k < n));
    }

    #[test]
    fn overlaps_bounded_by_one(n in 2usize..14, eps in 0.0f64..1.0, seed in 0u64..1000, kb in any::<u64>(), jb in any::<u64>()) {
        let s = sd(n, eps, seed);
        let om = locate_centers(&s, 1.25).unwrap().relabeled(&s);
        let (k, j) = (config(n, kb), config(n, jb));
        let v = slater_overlap(&om, &k, &j).unwrap().value();
        prop_assert!(v.abs() <= 1.0 + 1e-12);
        if k.len() != j.len() {
            prop_assert_eq!(v, 0.0);
        }
        let total: f64 = (0..n).map(|x| occupation_number(&om, &k, x).unwrap()).sum();
        prop_assert!((total - k.len() as f64).abs() < 1e-10);
    }

    #[test]
    fn particle_number_conserved_and_bounded(
        n in 3usize..30,
        seed in 0u64..1000,
        eta in proptest::collection::vec(0.0f64..=1.0, 30),
        cut in 1usize..29,
        t in 0.0f64..20.0,
    ) {
        let cut = cut.min(n - 1);
        let s = sd(n, 0.3, seed);
        let eta = &eta[..n];
        let left = Region::interval(0, cut).unwrap();
        let right = Region::interval(cut, n).unwrap();
        let nl = particle_number_isotropic(&s, &left, eta, t);
        let nr = particle_number_isotropic(&s, &right, eta, t);
        let total: f64 = eta.iter().sum();
        prop_assert!((nl + nr - total).abs() < 1e-9);
        prop_assert!(nl > -1e-12 && nl < cut as f64 + 1e-12);
    }
}
