//! Eigencorrelators, time-evolution amplitudes and their exponential decay.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Result, XyError};
use crate::linalg::{SpectralDecomposition, C64};
use crate::stats::Aggregate;

/// `Q(j,k) = sum_r |φ_r(j)| |φ_r(k)|`. In the block case `φ_r(j)` is the
/// 2-vector of components `2j, 2j+1`, and the rank-one block norm factorizes.
#[derive(Debug, Clone)]
pub struct EigencorrelatorTable {
    pub q: DMatrix<f64>,
    pub block: bool,
}

impl EigencorrelatorTable {
    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    /// Mean of `Q(j,k)` over pairs with `|j-k| = d`, for `d = 0..=max_d`.
    pub fn distance_profile(&self, max_d: usize) -> Vec<f64> {
        distance_profile(&self.q, max_d)
    }
}

pub fn eigencorrelator_table(sd: &SpectralDecomposition, block: bool) -> Result<EigencorrelatorTable> {
    let dim = sd.dim();
    let site_norms = if block {
        if dim % 2 != 0 {
            return Err(XyError::DimensionMismatch(format!("block table needs even dimension, got {dim}")));
        }
        DMatrix::from_fn(dim / 2, dim, |j, r| {
            let (x, y) = (sd.eigenvectors[(2 * j, r)], sd.eigenvectors[(2 * j + 1, r)]);
            x.hypot(y)
        })
    } else {
        sd.eigenvectors.abs()
    };
    let q = &site_norms * site_norms.transpose();
    // exact symmetry regardless of summation order
    let q = DMatrix::from_fn(q.nrows(), q.ncols(), |j, k| if j <= k { q[(j, k)] } else { q[(k, j)] });
    Ok(EigencorrelatorTable { q, block })
}

/// Mean of `x(j,k)` over pairs with `|j-k| = d`.
pub fn distance_profile(x: &DMatrix<f64>, max_d: usize) -> Vec<f64> {
    let n = x.nrows();
    (0..=max_d.min(n.saturating_sub(1)))
        .map(|d| {
            let pairs = n - d;
            let mut s = 0.0;
            for j in 0..pairs {
                s += x[(j, j + d)];
            }
            s / pairs as f64
        })
        .collect()
}

/// `max_t |(e^{-itX})_{jk}|` (scalar) or `max_t ||(e^{-2itM})_{jk}||_2` (block).
pub fn dynamic_amplitude_sup(sd: &SpectralDecomposition, times: &[f64], block: bool) -> Result<DMatrix<f64>> {
    if times.is_empty() {
        return invalid("empty time grid");
    }
    let dim = sd.dim();
    let sites = if block { dim / 2 } else { dim };
    let factor = if block { 2.0 } else { 1.0 };
    let mut out = DMatrix::zeros(sites, sites);
    for &t in times {
        let u = sd.propagator(factor * t);
        for j in 0..sites {
            for k in 0..sites {
                let v = if block {
                    crate::linalg::block_norm2(crate::linalg::block_of(&u, j, k))
                } else {
                    u[(j, k)].norm()
                };
                if v > out[(j, k)] {
                    out[(j, k)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Scalar sup-amplitude averaged over all pairs at distance `d`; costs
/// `O(n)` per pair and time instead of a full propagator.
pub fn dynamic_amplitude_at_distance(sd: &SpectralDecomposition, times: &[f64], d: usize) -> Result<f64> {
    if times.is_empty() {
        return invalid("empty time grid");
    }
    let n = sd.dim();
    if d >= n {
        return invalid(format!("distance {d} does not fit in a chain of {n} sites"));
    }
    let v = &sd.eigenvectors;
    let phases: Vec<Vec<C64>> =
        times.iter().map(|&t| sd.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -t * e)).collect()).collect();
    let mut total = 0.0;
    for j in 0..n - d {
        let weights: Vec<f64> = (0..n).map(|r| v[(j, r)] * v[(j + d, r)]).collect();
        let mut best = 0.0f64;
        for ph in &phases {
            let amp: C64 = weights.iter().zip(ph).map(|(w, p)| p * *w).sum();
            best = best.max(amp.norm());
        }
        total += best;
    }
    Ok(total / (n - d) as f64)
}

/// Least-squares line through `(d, ln v_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    #[serde(rename = "C")]
    pub c: f64,
    pub eta: f64,
    pub r_squared: f64,
    pub min_distance: usize,
    pub max_distance: usize,
    /// True when the data carry no slope information (r² undefined).
    pub degenerate: bool,
}

impl DecayFit {
    pub fn envelope(&self, d: f64) -> f64 {
        self.c * (-self.eta * d).exp()
    }
}

/// Fit `v_d ≈ C e^{-η d}` for `min_distance <= d <= max_distance`, where
/// `profile[d]` is the value at distance `d`.
pub fn fit_decay(profile: &[f64], min_distance: usize, max_distance: Option<usize>) -> Result<DecayFit> {
    let hi = max_distance.unwrap_or(usize::MAX).min(profile.len().saturating_sub(1));
    if profile.len() <= min_distance || hi < min_distance + 2 {
        return invalid(format!("fit window [{min_distance}, {hi}] holds fewer than 3 distances"));
    }
    let window = &profile[min_distance..=hi];
    if let Some(bad) = window.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return invalid(format!("nonpositive value {} at distance {}", window[bad], min_distance + bad));
    }
    let pts: Vec<(f64, f64)> = window.iter().enumerate().map(|(i, v)| ((min_distance + i) as f64, v.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let scale = my.abs().max(1.0);
    let degenerate = syy <= (1e-24 * scale * scale) * m;
    let (eta, r_squared) = if degenerate { (0.0, 0.0) } else { (-slope, (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)) };
    let c = if degenerate { my.exp() } else { intercept.exp() };
    Ok(DecayFit { c, eta, r_squared, min_distance, max_distance: hi, degenerate })
}

/// Commutator bounds implied by `sup_t ||(e^{-2itM})_{jk}|| <= C e^{-η|j-k|}`
/// for observables of norm one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrBound {
    pub distance: usize,
    /// `[τ_t(c_j), B_k]`: `4C e^{-ηd} / (1 - e^{-η})`.
    pub fermion: f64,
    /// `[τ_t(a_j), B_k]`: `16C e^{-ηd} / (1 - e^{-η})²`.
    pub lowering: f64,
    /// Any local `A_j`: `C' e^{-ηd}` with `C' = 96C / (1 - e^{-η})²`.
    pub local: f64,
    pub c_prime: f64,
}

pub fn lr_commutator_bound(fit: &DecayFit, j: usize, k: usize) -> Result<LrBound> {
    if !(fit.eta > 0.0) {
        return Err(XyError::Hypothesis(format!("no localization fitted (eta = {})", fit.eta)));
    }
    let d = j.abs_diff(k);
    let q = 1.0 - (-fit.eta).exp();
    let decay = (-fit.eta * d as f64).exp();
    let c_prime = 96.0 * fit.c / (q * q);
    Ok(LrBound {
        distance: d,
        fermion: 4.0 * fit.c * decay / q,
        lowering: 16.0 * fit.c * decay / (q * q),
        local: c_prime * decay,
        c_prime,
    })
}

/// CSV with columns `distance,mean,stderr,count`.
pub fn write_profile_csv(profile: &[Aggregate], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["distance", "mean", "stderr", "count"])?;
    for (d, a) in profile.iter().enumerate() {
        w.write_record([d.to_string(), format!("{:e}", a.mean), format!("{:e}", a.stderr), a.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `distance,mean,...` rows back into a profile indexed by distance.
pub fn read_profile_csv(input: impl std::io::Read) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(dc), Some(mc)) = (col("distance"), col("mean")) else {
        return invalid("CSV needs `distance` and `mean` columns");
    };
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let d: usize = rec[dc].trim().parse().map_err(|_| XyError::InvalidInput(format!("bad distance `{}`", &rec[dc])))?;
        let v: f64 = rec[mc].trim().parse().map_err(|_| XyError::InvalidInput(format!("bad mean `{}`", &rec[mc])))?;
        rows.push((d, v));
    }
    let len = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let mut profile = vec![f64::NAN; len];
    for (d, v) in rows {
        profile[d] = v;
    }
    Ok(profile)
}
