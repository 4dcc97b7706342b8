//! Localization centers and Fock-space structure of the isotropic chain's
//! many-body eigenvectors `Π b_k^* |vac>`.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result, XyError};
use crate::linalg::{self, SpectralDecomposition};
use crate::quasifree::{GrowthFunction, OrderedConfiguration};

pub type FermionConfiguration = OrderedConfiguration;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterAssignment {
    /// `centers[r]` is the site assigned to eigenvector column `r`.
    pub centers: Vec<usize>,
    pub alpha_used: f64,
    pub matched: bool,
    pub fallback_count: usize,
}

impl CenterAssignment {
    /// Orthogonal matrix with `ω(j, k) = φ_k(j)`, columns indexed by center.
    pub fn relabeled(&self, sd: &SpectralDecomposition) -> DMatrix<f64> {
        let v = &sd.eigenvectors;
        let mut omega = DMatrix::zeros(v.nrows(), v.ncols());
        for (r, &k) in self.centers.iter().enumerate() {
            omega.set_column(k, &v.column(r));
        }
        omega
    }
}

const FREE: usize = usize::MAX;

/// Maximum bipartite matching. `adj[r]` lists admissible sites for `r`,
/// preferred ones first. Returns `match_of[r]` (`FREE` if unmatched).
fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Vec<usize> {
    let n_left = adj.len();
    let mut left = vec![FREE; n_left];
    let mut right = vec![FREE; n_right];
    for (r, nbrs) in adj.iter().enumerate() {
        if let Some(&j) = nbrs.iter().find(|&&j| right[j] == FREE) {
            left[r] = j;
            right[j] = r;
        }
    }
    let mut dist = vec![0usize; n_left];
    loop {
        // layered BFS from free left vertices
        let mut queue = VecDeque::new();
        for r in 0..n_left {
            if left[r] == FREE {
                dist[r] = 0;
                queue.push_back(r);
            } else {
                dist[r] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(r) = queue.pop_front() {
            for &j in &adj[r] {
                match right[j] {
                    FREE => found = true,
                    r2 if dist[r2] == usize::MAX => {
                        dist[r2] = dist[r] + 1;
                        queue.push_back(r2);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            return left;
        }
        for r in 0..n_left {
            if left[r] == FREE {
                augment(r, adj, &mut left, &mut right, &mut dist);
            }
        }
    }
}

fn augment(r: usize, adj: &[Vec<usize>], left: &mut [usize], right: &mut [usize], dist: &mut [usize]) -> bool {
    for &j in &adj[r] {
        let r2 = right[j];
        if r2 == FREE || (dist[r2] == dist[r] + 1 && augment(r2, adj, left, right, dist)) {
            left[r] = j;
            right[j] = r;
            return true;
        }
    }
    dist[r] = usize::MAX;
    false
}

/// Injective centers from `N_r = {j : |φ_r(j)| ≥ n^{-α}}`. Unmatched columns
/// take their largest free component.
pub fn locate_centers(sd: &SpectralDecomposition, alpha: f64) -> Result<CenterAssignment> {
    if !(alpha > 1.0) {
        return invalid(format!("alpha must exceed 1, got {alpha}"));
    }
    let v = &sd.eigenvectors;
    let n = v.nrows();
    let threshold = (n as f64).powf(-alpha);
    let ranked: Vec<Vec<usize>> = (0..n)
        .map(|r| {
            let mut js: Vec<usize> = (0..n).collect();
            js.sort_by(|&a, &b| v[(b, r)].abs().total_cmp(&v[(a, r)].abs()).then(a.cmp(&b)));
            js
        })
        .collect();
    let adj: Vec<Vec<usize>> = ranked
        .iter()
        .enumerate()
        .map(|(r, js)| js.iter().copied().filter(|&j| v[(j, r)].abs() >= threshold).collect())
        .collect();
    let mut centers = hopcroft_karp(&adj, n);
    let mut taken = vec![false; n];
    for &j in centers.iter().filter(|&&j| j != FREE) {
        taken[j] = true;
    }
    let mut fallback_count = 0;
    for r in 0..n {
        if centers[r] == FREE {
            let j = *ranked[r].iter().find(|&&j| !taken[j]).expect("a free site remains");
            centers[r] = j;
            taken[j] = true;
            fallback_count += 1;
        }
    }
    Ok(CenterAssignment { centers, alpha_used: alpha, matched: fallback_count == 0, fallback_count })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub r: usize,
    pub j: usize,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub eta: f64,
    pub tau: f64,
    pub violations: Vec<Violation>,
    pub certified: bool,
}

/// Checks `|φ_r(j)| ≤ e^{-η|j-k_r|}` wherever `|j-k_r| ≥ n^τ`.
pub fn certify_decay(sd: &SpectralDecomposition, centers: &CenterAssignment, eta: f64, tau: f64) -> Result<DecayCertificate> {
    if !(eta > 0.0) || !(tau > 0.0 && tau < 1.0) {
        return invalid(format!("need eta > 0 and 0 < tau < 1, got eta = {eta}, tau = {tau}"));
    }
    let v = &sd.eigenvectors;
    let n = v.nrows();
    if centers.centers.len() != n {
        return Err(XyError::DimensionMismatch("centers and eigenvectors".into()));
    }
    let cut = (n as f64).powf(tau);
    let mut violations = Vec::new();
    for (r, &k) in centers.centers.iter().enumerate() {
        for j in 0..n {
            let d = j.abs_diff(k) as f64;
            if d < cut {
                continue;
            }
            let threshold = (-eta * d).exp();
            let value = v[(j, r)].abs();
            if value > threshold {
                violations.push(Violation { r, j, value, threshold });
            }
        }
    }
    let certified = violations.is_empty();
    Ok(DecayCertificate { eta, tau, violations, certified })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Overlap {
    Value(f64),
    /// Different particle numbers; the overlap is exactly zero.
    CardinalityMismatch,
}

impl Overlap {
    pub fn value(&self) -> f64 {
        match *self {
            Overlap::Value(x) => x,
            Overlap::CardinalityMismatch => 0.0,
        }
    }
}

fn check_sites(omega: &DMatrix<f64>, c: &FermionConfiguration) -> Result<()> {
    match c.sites.last() {
        Some(&s) if s >= omega.nrows() => invalid(format!("site {s} outside chain of {}", omega.nrows())),
        _ => Ok(()),
    }
}

/// `<Π_m b_{k_m}^* vac, e_j> = (-1)^{Σ_m j_m} det(φ_{k_m}(j_ℓ))` with 0-based
/// sites, where `e_j` is the spin basis vector with sites `j` up.
pub fn slater_overlap(omega: &DMatrix<f64>, k: &FermionConfiguration, j: &FermionConfiguration) -> Result<Overlap> {
    check_sites(omega, k)?;
    check_sites(omega, j)?;
    if k.len() != j.len() {
        return Ok(Overlap::CardinalityMismatch);
    }
    let r = k.len();
    let sub = DMatrix::from_fn(r, r, |m, l| omega[(j.sites[l], k.sites[m])]);
    let sign = if j.sites.iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 };
    Ok(Overlap::Value(sign * linalg::det_real(&sub)))
}

/// `<ψ_k, n_x ψ_k> = Σ_m φ_{k_m}(x)²`.
pub fn occupation_number(omega: &DMatrix<f64>, k: &FermionConfiguration, x: usize) -> Result<f64> {
    check_sites(omega, k)?;
    if x >= omega.nrows() {
        return invalid(format!("site {x} outside chain of {}", omega.nrows()));
    }
    Ok(k.sites.iter().map(|&km| omega[(x, km)].powi(2)).sum())
}

/// `2/(e^{2η m} - 1)` with `m = min_ℓ |k_ℓ - x|`.
pub fn occupation_bound(eta: f64, min_distance: usize) -> f64 {
    2.0 / (2.0 * eta * min_distance as f64).exp_m1()
}

/// The geometric-tail sum `2 e^{-2ηm}/(1 - e^{-2η})` that the certified decay
/// actually implies; larger than [`occupation_bound`] for `m > 1`.
pub fn occupation_tail_sum(eta: f64, min_distance: usize) -> f64 {
    2.0 * (-2.0 * eta * min_distance as f64).exp() / -(-2.0 * eta).exp_m1()
}

/// `8 max{I, √I} n^{2τ} e^{-(η-η₀)D/4}`, `I = Σ_ℓ (1+ℓ) e^{-η₀ K(ℓ)}` for `K`
/// cut at `n^τ`. The entry-decay constant is 1, as certified.
pub fn fock_overlap_bound(n: usize, eta: f64, eta0: f64, tau: f64, d: usize) -> Result<f64> {
    if !(eta > eta0 && eta0 > 0.0) {
        return Err(XyError::Hypothesis(format!("need eta > eta0 > 0, got {eta}, {eta0}")));
    }
    let nt = (n as f64).powf(tau);
    let i = GrowthFunction::Thresholded { tau_cut: nt }.series(eta0)?;
    Ok(8.0 * i.max(i.sqrt()) * nt * nt * (-(eta - eta0) * d as f64 / 4.0).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOutcome {
    pub r: usize,
    pub distance: usize,
    pub overlap: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockCheck {
    pub outcomes: Vec<PairOutcome>,
    /// Pairs rejected for `D < 2n^τ` or unequal cardinality.
    pub skipped: usize,
}

impl FockCheck {
    pub fn pass_fraction(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 1.0;
        }
        self.outcomes.iter().filter(|o| o.pass).count() as f64 / self.outcomes.len() as f64
    }
}

pub fn fock_localization_check(
    omega: &DMatrix<f64>,
    eta: f64,
    eta0: f64,
    tau: f64,
    pairs: &[(FermionConfiguration, FermionConfiguration)],
) -> Result<FockCheck> {
    let n = omega.nrows();
    let min_d = 2.0 * (n as f64).powf(tau);
    let mut outcomes = Vec::new();
    let mut skipped = 0;
    for (k, j) in pairs {
        let d = match k.distance(j) {
            Some(d) if d as f64 >= min_d => d,
            _ => {
                skipped += 1;
                continue;
            }
        };
        let overlap = slater_overlap(omega, k, j)?.value().abs();
        let bound = fock_overlap_bound(n, eta, eta0, tau, d)?;
        outcomes.push(PairOutcome { r: k.len(), distance: d, overlap, bound, pass: overlap <= bound });
    }
    Ok(FockCheck { outcomes, skipped })
}

/// `count` pairs with `r` uniform in `1..=max_r` and both tuples uniform,
/// conditioned on `D ≥ 2n^τ` by rejection.
pub fn sample_configuration_pairs(
    n: usize,
    max_r: usize,
    tau: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<(FermionConfiguration, FermionConfiguration)>> {
    if max_r == 0 || max_r > n {
        return invalid(format!("max_r must lie in 1..={n}"));
    }
    let min_d = 2.0 * (n as f64).powf(tau);
    if min_d > (n - 1) as f64 {
        return Err(XyError::Hypothesis(format!("no pair in a chain of {n} reaches D = {min_d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |r: usize, rng: &mut ChaCha8Rng| {
        let mut s = index::sample(rng, n, r).into_vec();
        s.sort_unstable();
        OrderedConfiguration { sites: s }
    };
    let mut pairs = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while pairs.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(XyError::Hypothesis("rejection sampling of configuration pairs stalled".into()));
        }
        let r = rng.random_range(1..=max_r);
        let k = draw(r, &mut rng);
        let j = draw(r, &mut rng);
        if k.distance(&j).is_some_and(|d| d as f64 >= min_d) {
            pairs.push((k, j));
        }
    }
    Ok(pairs)
}
