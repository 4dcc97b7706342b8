#![allow(dead_code)]

use xylab::disorder::{sample_chain, ChainSpec, Distribution, EnsembleSpec};

pub fn random_chain(n: usize, anisotropic: bool, seed: u64) -> ChainSpec {
    let spec = EnsembleSpec {
        n,
        mu: Distribution::uniform(-1.0, 1.0),
        gamma: if anisotropic { Distribution::uniform(-1.0, 1.0) } else { Distribution::constant(0.0) },
        nu: Distribution::uniform(-2.0, 2.0),
        base_seed: seed,
        realizations: 1,
    };
    sample_chain(&spec, 0).unwrap()
}

pub fn max_sorted_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
