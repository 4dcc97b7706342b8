use serde_json::json;

use super::config::{region_from_intervals, EnergyMode, Experiment, ExperimentConfig, Multipoint, QuenchLabels};
use super::oracle::{oracle_report, OracleReport};
use super::{over_realizations, Verdict};
use crate::disorder::{splitmix64_mix, ChainSpec, EnsembleSpec};
use crate::ed_oracle::{self, EdSystem};
use crate::eigencorrelator::{
    self, distance_profile, dynamic_amplitude_at_distance, dynamic_amplitude_sup, eigencorrelator_table, fit_decay,
    lr_commutator_bound, DecayFit,
};
use crate::entanglement::{
    area_law_bound, max_eigenstate_entropy, quench_entropy, thermal_entanglement_of_formation_bound, uniform_labels, Cut,
    Strategy,
};
use crate::error::{invalid, Result, XyError};
use crate::fock::{
    certify_decay, fock_localization_check, locate_centers, occupation_bound, occupation_number,
    sample_configuration_pairs, slater_overlap,
};
use crate::hamiltonian::{bogoliubov, build_m, diagonalize, EffectiveHamiltonian, ManyBodyLabel};
use crate::linalg::{self, SpectralDecomposition};
use crate::quasifree::{multipoint_correlation, sw_bound, thermal_gamma, GrowthFunction, OrderedConfiguration};
use crate::stats::{aggregate, aggregate_columns, Aggregate};
use crate::transport::{
    energy_bound, energy_fluctuation_anisotropic, energy_transport_series, norm_constant, particle_bound,
    particle_transport_series, Region,
};

pub(super) struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub pool: &'a rayon::ThreadPool,
}

pub(super) struct Produced {
    pub files: Vec<(String, Vec<u8>)>,
    pub fit: Option<DecayFit>,
    pub results: serde_json::Value,
    pub verdicts: Vec<Verdict>,
}

pub(super) fn dispatch(ctx: &Ctx) -> Result<Produced> {
    match &ctx.cfg.experiment {
        Experiment::Eigencorrelator { block } => run_eigencorrelator(ctx, *block),
        Experiment::LrBound { distances, commutators } => run_lr_bound(ctx, distances, *commutators),
        Experiment::Correlations { pairs, max_r, alpha, tau, eta_scale, seed, multipoint } => {
            run_correlations(ctx, *pairs, *max_r, *alpha, *tau, *eta_scale, *seed, multipoint.as_ref())
        }
        Experiment::EntanglementStatic { cuts, strategy, beta } => run_entanglement_static(ctx, cuts, *strategy, *beta),
        Experiment::EntanglementQuench { cuts, labels, early_window } => {
            run_entanglement_quench(ctx, cuts, *labels, *early_window)
        }
        Experiment::TransportParticle { s1, s2, eta } => {
            let n = ctx.cfg.ensemble.n;
            run_transport_isotropic(ctx, &region_from_intervals(s1, n)?, &region_from_intervals(s2, n)?, *eta, false)
        }
        Experiment::TransportEnergy { mode: EnergyMode::Isotropic { s1, s2, eta } } => {
            let n = ctx.cfg.ensemble.n;
            run_transport_isotropic(ctx, &region_from_intervals(s1, n)?, &region_from_intervals(s2, n)?, *eta, true)
        }
        Experiment::TransportEnergy { mode: EnergyMode::Anisotropic { width, eta, sizes } } => {
            run_energy_anisotropic(ctx, *width, *eta, sizes)
        }
        Experiment::Fock { alpha, tau, eta_scale, pairs, max_r, seed } => {
            run_fock(ctx, *alpha, *tau, *eta_scale, *pairs, *max_r, *seed)
        }
        Experiment::OracleCheck {} => run_oracle_check(ctx),
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| XyError::Io(e.into_error()))
}

fn agg_cells(a: &Aggregate) -> [String; 3] {
    [num(a.mean), num(a.stderr), a.count.to_string()]
}

fn seed_for(seed: u64, i: u64) -> u64 {
    splitmix64_mix(seed ^ splitmix64_mix(i))
}

fn require_isotropic(spec: &EnsembleSpec, what: &str) -> Result<()> {
    if !spec.is_isotropic() {
        return invalid(format!("{what} needs an isotropic ensemble (gamma = 0)"));
    }
    Ok(())
}

/// `|a - b| / (2 sqrt(se_a² + se_b²))`; at most 1 means "within 2 standard errors".
fn se_ratio(a: &Aggregate, b: &Aggregate) -> f64 {
    let diff = (a.mean - b.mean).abs();
    let se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
    if se == 0.0 {
        return if diff == 0.0 { 0.0 } else { f64::INFINITY };
    }
    diff / (2.0 * se)
}

fn isotropic_sd(chain: &ChainSpec) -> Result<SpectralDecomposition> {
    diagonalize(&EffectiveHamiltonian::isotropic(chain)?)
}

/// Eigencorrelator distance profile of one chain. Isotropic chains use the
/// tridiagonal solver; their block table is exactly twice the scalar one,
/// since `M` splits into `A` and `-A` on the two components.
fn chain_profile(chain: &ChainSpec, block: bool) -> Result<Vec<f64>> {
    let n = chain.n;
    if chain.is_isotropic() {
        let t = eigencorrelator_table(&isotropic_sd(chain)?, false)?;
        let scale = if block { 2.0 } else { 1.0 };
        return Ok(distance_profile(&t.q, n - 1).into_iter().map(|v| v * scale).collect());
    }
    if !block {
        return invalid("the scalar eigencorrelator needs an isotropic chain");
    }
    let sd = linalg::symmetric_eigen(&build_m(chain)?)?;
    Ok(eigencorrelator_table(&sd, true)?.distance_profile(n - 1))
}

fn ensemble_profile(ctx: &Ctx, spec: &EnsembleSpec, block: bool) -> Result<Vec<Aggregate>> {
    let rows = over_realizations(ctx.pool, spec.realizations, |i| chain_profile(&spec.chain(i)?, block))?;
    aggregate_columns(&rows)
}

fn fit_profile(ctx: &Ctx, profile: &[Aggregate], n: usize) -> Result<DecayFit> {
    let w = ctx.cfg.fit_window;
    let max = w.max_distance.min(n - 1);
    let means: Vec<f64> = profile.iter().map(|a| a.mean).collect();
    fit_decay(&means, w.min_distance, Some(max))
}

fn ensemble_fit(ctx: &Ctx, spec: &EnsembleSpec, block: bool) -> Result<(Vec<Aggregate>, DecayFit)> {
    let profile = ensemble_profile(ctx, spec, block)?;
    let fit = fit_profile(ctx, &profile, spec.n)?;
    Ok((profile, fit))
}

fn profile_csv(profile: &[Aggregate]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    eigencorrelator::write_profile_csv(profile, &mut out)?;
    Ok(out)
}

fn run_eigencorrelator(ctx: &Ctx, block: bool) -> Result<Produced> {
    let spec = &ctx.cfg.ensemble;
    let (profile, fit) = ensemble_fit(ctx, spec, block)?;
    let mut files = vec![("profile.csv".to_string(), profile_csv(&profile)?)];
    let mut verdicts = vec![
        Verdict::at_least(4, "fit_r_squared", fit.r_squared, 0.95),
        Verdict { pass: fit.eta > 0.0 && !fit.degenerate, ..Verdict::at_least(4, "fit_eta_positive", fit.eta, 0.0) },
    ];
    let mut reference_fit = None;
    if let Some(r) = &ctx.cfg.reference {
        let (rp, rf) = ensemble_fit(ctx, r, block)?;
        files.push(("reference_profile.csv".into(), profile_csv(&rp)?));
        verdicts.push(Verdict {
            pass: fit.eta > rf.eta,
            ..Verdict::at_least(4, "eta_exceeds_reference", fit.eta, rf.eta)
        });
        reference_fit = Some(rf);
    }
    Ok(Produced { files, fit: Some(fit), results: json!({ "block": block, "reference_fit": reference_fit }), verdicts })
}

/// Per-realization mean over pairs at each distance of the sup-amplitude.
fn amplitudes(chain: &ChainSpec, times: &[f64], distances: &[usize]) -> Result<Vec<f64>> {
    if chain.is_isotropic() {
        let sd = isotropic_sd(chain)?;
        return distances.iter().map(|&d| dynamic_amplitude_at_distance(&sd, times, d)).collect();
    }
    let sd = linalg::symmetric_eigen(&build_m(chain)?)?;
    let table = dynamic_amplitude_sup(&sd, times, true)?;
    Ok(distances.iter().map(|&d| distance_profile(&table, d)[d]).collect())
}

fn run_lr_bound(ctx: &Ctx, distances: &[usize], commutators: bool) -> Result<Produced> {
    let spec = &ctx.cfg.ensemble;
    let n = spec.n;
    if distances.iter().any(|&d| d >= n) {
        return invalid(format!("distances must be below n = {n}"));
    }
    let (_, fit) = ensemble_fit(ctx, spec, !spec.is_isotropic())?;
    let times = ctx.cfg.time_grid.points();
    let rows = over_realizations(ctx.pool, spec.realizations, |i| amplitudes(&spec.chain(i)?, &times, distances))?;
    let amp = aggregate_columns(&rows)?;
    let reference = match &ctx.cfg.reference {
        Some(r) => {
            if r.n != n {
                return invalid("the reference ensemble must have the same n");
            }
            let rows = over_realizations(ctx.pool, r.realizations, |i| amplitudes(&r.chain(i)?, &times, distances))?;
            Some(aggregate_columns(&rows)?)
        }
        None => None,
    };
    let mut verdicts = Vec::new();
    let mut table = Vec::new();
    for (idx, &d) in distances.iter().enumerate() {
        let mut row = vec![d.to_string()];
        row.extend(agg_cells(&amp[idx]));
        row.push(num(fit.envelope(d as f64)));
        match &reference {
            Some(r) => {
                row.push(num(r[idx].mean));
                row.push(num(r[idx].stderr));
                verdicts.push(Verdict::at_least(5, format!("contrast_d{d}"), r[idx].mean / amp[idx].mean, 10.0));
            }
            None => row.extend([String::new(), String::new()]),
        }
        table.push(row);
    }
    let header = ["distance", "mean", "stderr", "count", "envelope", "reference_mean", "reference_stderr"];
    let mut files = vec![("amplitudes.csv".to_string(), csv_bytes(&header, &table)?)];
    let mut commutator_results = serde_json::Value::Null;
    if commutators {
        if n > 10 {
            return Err(XyError::TooLarge { n, cap: 10 });
        }
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j + 2..n).map(move |k| (j, k))).collect();
        let rows = over_realizations(ctx.pool, spec.realizations, |i| {
            let ed = EdSystem::new(&spec.chain(i)?)?;
            pairs
                .iter()
                .map(|&(j, k)| {
                    ed_oracle::commutator_sup(&ed, &ed_oracle::sigma_x(n, j)?, &ed_oracle::sigma_x(n, k)?, &times)
                })
                .collect::<Result<Vec<f64>>>()
        })?;
        let norms = aggregate_columns(&rows)?;
        let mut worst = 0.0f64;
        let mut table = Vec::new();
        for (p, &(j, k)) in pairs.iter().enumerate() {
            let bound = lr_commutator_bound(&fit, j, k)?.local;
            worst = worst.max(norms[p].mean / bound);
            let mut row = vec![(j + 1).to_string(), (k + 1).to_string(), (k - j).to_string()];
            row.extend(agg_cells(&norms[p]));
            row.push(num(bound));
            table.push(row);
        }
        files.push((
            "commutators.csv".into(),
            csv_bytes(&["j", "k", "distance", "mean", "stderr", "count", "bound"], &table)?,
        ));
        verdicts.push(Verdict::at_most(5, "commutator_bound", worst, 2.0));
        commutator_results = json!({ "pairs": pairs.len(), "max_ratio_to_bound": worst });
    }
    Ok(Produced {
        files,
        fit: Some(fit),
        results: json!({ "grid_points": times.len(), "commutators": commutator_results }),
        verdicts,
    })
}

fn one_based(c: &OrderedConfiguration, n: usize) -> Result<OrderedConfiguration> {
    if c.sites.iter().any(|&s| s == 0 || s > n) {
        return invalid(format!("sites {:?} must lie in [1, {n}]", c.sites));
    }
    OrderedConfiguration::new(c.sites.iter().map(|s| s - 1).collect())
}

#[allow(clippy::too_many_arguments)]
fn run_correlations(
    ctx: &Ctx,
    pairs: usize,
    max_r: usize,
    alpha: f64,
    tau: f64,
    eta_scale: f64,
    seed: u64,
    multipoint: Option<&Multipoint>,
) -> Result<Produced> {
    let spec = &ctx.cfg.ensemble;
    require_isotropic(spec, "correlations")?;
    let n = spec.n;
    let (_, fit) = ensemble_fit(ctx, spec, false)?;
    let eta = eta_scale * fit.eta;
    let growth = GrowthFunction::Thresholded { tau_cut: (n as f64).powf(tau) };
    // (certified, evaluated, violations, max ratio)
    let per = over_realizations(ctx.pool, spec.realizations, |i| {
        let sd = isotropic_sd(&spec.chain(i)?)?;
        let centers = locate_centers(&sd, alpha)?;
        if !certify_decay(&sd, &centers, eta, tau)?.certified {
            return Ok((false, 0usize, 0usize, 0.0f64));
        }
        let omega = centers.relabeled(&sd);
        let sample = sample_configuration_pairs(n, max_r, tau, pairs, seed_for(seed, i))?;
        let (mut bad, mut worst) = (0, 0.0f64);
        for (x, y) in &sample {
            let det = slater_overlap(&omega, y, x)?.value().abs();
            let bound = sw_bound(growth, eta / 2.0, eta, 1.0, x.distance(y).unwrap_or(0) as f64)?;
            worst = worst.max(det / bound);
            if det > bound {
                bad += 1;
            }
        }
        Ok((true, sample.len(), bad, worst))
    })?;
    let certified = per.iter().filter(|p| p.0).count();
    let evaluated: usize = per.iter().map(|p| p.1).sum();
    let violations: usize = per.iter().map(|p| p.2).sum();
    let worst = per.iter().map(|p| p.3).fold(0.0, f64::max);
    let mut verdict = Verdict::at_most(6, "determinant_bound_violations", violations as f64, 0.0);
    verdict.pass &= evaluated > 0;
    let mut files = Vec::new();
    if let Some(mp) = multipoint {
        let x = one_based(&mp.x, n)?;
        let y = one_based(&mp.y, n)?;
        let times = ctx.cfg.time_grid.points();
        let rows = over_realizations(ctx.pool, spec.realizations, |i| {
            let chain = spec.chain(i)?;
            let a_sd = isotropic_sd(&chain)?;
            let g = thermal_gamma(&linalg::symmetric_eigen(&build_m(&chain)?)?, mp.beta)?;
            times.iter().map(|&t| Ok(multipoint_correlation(&g, &a_sd, t, &x, &y)?.norm())).collect::<Result<Vec<_>>>()
        })?;
        let series = aggregate_columns(&rows)?;
        let table: Vec<Vec<String>> = times
            .iter()
            .zip(&series)
            .map(|(t, a)| {
                let mut r = vec![num(*t)];
                r.extend(agg_cells(a));
                r
            })
            .collect();
        files.push(("multipoint.csv".to_string(), csv_bytes(&["t", "mean_abs", "stderr", "count"], &table)?));
    }
    Ok(Produced {
        files,
        fit: Some(fit),
        results: json!({
            "eta": eta, "eta0": eta / 2.0, "tau": tau, "alpha": alpha,
            "certified_realizations": certified, "pairs_evaluated": evaluated,
            "violations": violations, "max_ratio_to_bound": worst,
        }),
        verdicts: vec![verdict],
    })
}

fn realization_strategy(strategy: Strategy, i: u64) -> Strategy {
    match strategy {
        Strategy::Sampled { count, seed } => Strategy::Sampled { count, seed: seed_for(seed, i) },
        s => s,
    }
}

fn run_entanglement_static(ctx: &Ctx, cuts: &[usize], strategy: Strategy, beta: Option<f64>) -> Result<Produced> {
    let spec = &ctx.cfg.ensemble;
    let n = spec.n;
    let (_, fit) = ensemble_fit(ctx, spec, true)?;
    let stats_per_cut = if beta.is_some() { 3 } else { 2 };
    // columns: per cut (max entropy, max ps bound[, thermal]), then the count of ps violations
    let rows = over_realizations(ctx.pool, spec.realizations, |i| {
        let bog = bogoliubov(&spec.chain(i)?)?;
        let mut row = Vec::new();
        let mut ps_violations = 0.0;
        for &ell in cuts {
            let cut = Cut::new(ell, n)?;
            let scan = max_eigenstate_entropy(&bog, cut, realization_strategy(strategy, i))?;
            if scan.best.entropy > scan.best.ps_bound + 1e-8 {
                ps_violations += 1.0;
            }
            row.push(scan.best.entropy);
            row.push(scan.max_ps_bound);
            if let Some(b) = beta {
                row.push(thermal_entanglement_of_formation_bound(&bog, cut, b, 200, seed_for(7, i))?);
            }
        }
        row.push(ps_violations);
        Ok(row)
    })?;
    let agg = aggregate_columns(&rows)?;
    let names = ["max_entropy", "max_ps_bound", "thermal_ef_bound"];
    let tag = strategy.tag();
    let mut table = Vec::new();
    for (c, &ell) in cuts.iter().enumerate() {
        for (s, name) in names.iter().take(stats_per_cut).enumerate() {
            let mut row = vec![ell.to_string(), name.to_string()];
            row.extend(agg_cells(&agg[c * stats_per_cut + s]));
            row.push(tag.clone());
            table.push(row);
        }
    }
    let header = ["ell", "statistic", "mean", "stderr", "count", "strategy"];
    let bound = area_law_bound(fit.c, fit.eta);
    let entropy_of = |c: usize| agg[c * stats_per_cut];
    let mut verdicts = vec![Verdict::at_most(7, "area_flatness", se_ratio(&entropy_of(0), &entropy_of(cuts.len() - 1)), 1.0)];
    for (c, &ell) in cuts.iter().enumerate() {
        verdicts.push(Verdict::at_most(7, format!("area_law_bound_ell{ell}"), entropy_of(c).mean, 2.0 * bound));
    }
    let ps_violations: f64 = rows.iter().map(|r| r[r.len() - 1]).sum();
    verdicts.push(Verdict::at_most(7, "entropy_below_ps_bound", ps_violations, 0.0));
    Ok(Produced {
        files: vec![("entanglement.csv".into(), csv_bytes(&header, &table)?)],
        fit: Some(fit),
        results: json!({ "area_law_bound": bound, "strategy": tag }),
        verdicts,
    })
}

/// Per cut: (sup over grid, mean over `t <= early`, full series).
fn quench_rows(
    chain: &ChainSpec,
    cuts: &[usize],
    labels: QuenchLabels,
    times: &[f64],
    early: f64,
    i: u64,
) -> Result<Vec<(f64, f64, Vec<f64>)>> {
    let n = chain.n;
    cuts.iter()
        .enumerate()
        .map(|(c, &ell)| {
            let (a, b) = match labels {
                QuenchLabels::Vacuum => (ManyBodyLabel::vacuum(ell), ManyBodyLabel::vacuum(n - ell)),
                QuenchLabels::Random { seed } => {
                    let s = seed_for(seed, i.wrapping_mul(1 << 20).wrapping_add(c as u64));
                    let mut l = uniform_labels(n, 1, s).pop().expect("one label");
                    let bits_b = l.bits.split_off(ell);
                    (l, ManyBodyLabel { bits: bits_b })
                }
            };
            let series = quench_entropy(chain, Cut::new(ell, n)?, &a, &b, times)?;
            let sup = series.iter().copied().fold(0.0, f64::max);
            let first: Vec<f64> = times.iter().zip(&series).filter(|(t, _)| **t <= early).map(|(_, s)| *s).collect();
            let early_mean = first.iter().sum::<f64>() / first.len().max(1) as f64;
            Ok((sup, early_mean, series))
        })
        .collect()
}

fn run_entanglement_quench(ctx: &Ctx, cuts: &[usize], labels: QuenchLabels, early: f64) -> Result<Produced> {
    let spec = &ctx.cfg.ensemble;
    let times = ctx.cfg.time_grid.points();
    let tag = match labels {
        QuenchLabels::Vacuum => "vacuum".to_string(),
        QuenchLabels::Random { .. } => "random".to_string(),
    };
    let summarize = |spec: &EnsembleSpec| -> Result<(Vec<Aggregate>, Vec<Aggregate>, Vec<Vec<Aggregate>>)> {
        let per = over_realizations(ctx.pool, spec.realizations, |i| {
            quench_rows(&spec.chain(i)?, cuts, labels, &times, early, i)
        })?;
        let mut sups = Vec::new();
        let mut earlies = Vec::new();
        let mut series = Vec::new();
        for c in 0..cuts.len() {
            sups.push(aggregate(&per.iter().map(|r| r[c].0).collect::<Vec<_>>())?);
            earlies.push(aggregate(&per.iter().map(|r| r[c].1).collect::<Vec<_>>())?);
            series.push(aggregate_columns(&per.iter().map(|r| r[c].2.clone()).collect::<Vec<_>>())?);
        }
        Ok((sups, earlies, series))
    };
    let (sups, earlies, series) = summarize(spec)?;
    let mut table = Vec::new();
    let mut push = |ell: usize, name: &str, a: &Aggregate| {
        let mut row = vec![ell.to_string(), name.to_string()];
        row.extend(agg_cells(a));
        row.push(tag.clone());
        table.push(row);
    };
    for (c, &ell) in cuts.iter().enumerate() {
        push(ell, "sup_entropy", &sups[c]);
        push(ell, "early_mean", &earlies[c]);
    }
    let mut verdicts = vec![Verdict::at_most(7, "quench_flatness", se_ratio(&sups[0], &sups[cuts.len() - 1]), 1.0)];
    if let Some(r) = &ctx.cfg.reference {
        if r.n != spec.n {
            return invalid("the reference ensemble must have the same n");
        }
        let (rs, re, _) = summarize(r)?;
        for (c, &ell) in cuts.iter().enumerate() {
            push(ell, "reference_sup_entropy", &rs[c]);
            push(ell, "reference_early_mean", &re[c]);
            verdicts.push(Verdict::at_least(7, format!("reference_growth_ell{ell}"), rs[c].mean / re[c].mean, 3.0));
        }
    }
    let mut series_rows = Vec::new();
    for (c, &ell) in cuts.iter().enumerate() {
        for (t, a) in times.iter().zip(&series[c]) {
            let mut row = vec![num(*t), ell.to_string()];
            row.extend(agg_cells(a));
            series_rows.push(row);
        }
    }
    let header = ["ell", "statistic", "mean", "stderr", "count", "strategy"];
    Ok(Produced {
        files: vec![
            ("quench.csv".into(), csv_bytes(&header, &table)?),
            ("quench_series.csv".into(), csv_bytes(&["t", "ell", "mean", "stderr", "count"], &series_rows)?),
        ],
        fit: None,
        results: json!({ "labels": tag, "early_window": early }),
        verdicts,
    })
}

fn run_transport_isotropic(ctx: &Ctx, s1: &Region, s2: &Region, eta: f64, energy: bool) -> Result<Produced> {
    let spec = &ctx.cfg.ensemble;
    require_isotropic(spec, "isotropic transport")?;
    let n = spec.n;
    let (_, fit) = ensemble_fit(ctx, spec, false)?;
    let times = ctx.cfg.time_grid.points();
    let profile: Vec<f64> = (0..n).map(|j| if s2.contains(j) { eta } else { 0.0 }).collect();
    let norm_d = norm_constant(spec.mu.max_abs(), spec.nu.max_abs());
    let rows = over_realizations(ctx.pool, spec.realizations, |i| {
        let chain = spec.chain(i)?;
        let s = if energy {
            energy_transport_series(&chain, s1, s2, &profile, &times, &fit, norm_d)?
        } else {
            particle_transport_series(&chain, s1, s2, &profile, &times, &fit)?
        };
        let mut row = s.values.clone();
        row.push(s.sup_deviation());
        Ok(row)
    })?;
    let agg = aggregate_columns(&rows)?;
    let sup = agg[times.len()];
    let d = s1.distance(s2);
    let bound = if energy { energy_bound(&fit, d, norm_d) } else { particle_bound(&fit, d) };
    let table: Vec<Vec<String>> = times
        .iter()
        .zip(&agg)
        .map(|(t, a)| {
            let mut r = vec![num(*t)];
            r.extend(agg_cells(a));
            r
        })
        .collect();
    let check = if energy { "energy_bound" } else { "particle_bound" };
    let verdict = Verdict::at_most(8, check, sup.mean, 2.0 * bound);
    let mut results = json!({
        "baseline": 0.0, "sup": sup.mean, "sup_stderr": sup.stderr, "bound": bound,
        "pass": verdict.pass, "distance": d,
        "occupation_convention": "eta_j = <c_j^* c_j>, sites up are occupied",
    });
    if energy {
        results["norm_constant"] = json!(norm_d);
    }
    Ok(Produced {
        files: vec![("series.csv".into(), csv_bytes(&["t", "mean", "stderr", "count"], &table)?)],
        fit: Some(fit),
        results,
        verdicts: vec![verdict],
    })
}

fn run_energy_anisotropic(ctx: &Ctx, width: usize, eta: f64, sizes: &[usize]) -> Result<Produced> {
    let times = ctx.cfg.time_grid.points();
    let mut flucts = Vec::new();
    let mut totals = Vec::new();
    let mut table = Vec::new();
    for &n in sizes {
        // an independent ensemble per size, so the standard errors combine
        let base = &ctx.cfg.ensemble;
        let spec = EnsembleSpec { n, base_seed: seed_for(base.base_seed, n as u64), ..base.clone() };
        let start = (n - width) / 2;
        let s1 = Region::interval(start, start + width)?;
        let profile = vec![eta; n];
        let rows = over_realizations(ctx.pool, spec.realizations, |i| {
            let s = energy_fluctuation_anisotropic(&spec.chain(i)?, &s1, &profile, &times)?;
            Ok(vec![s.sup_deviation(), s.bound])
        })?;
        let agg = aggregate_columns(&rows)?;
        for (name, a) in ["sup_fluctuation", "total_energy"].iter().zip(&agg) {
            let mut row = vec![n.to_string(), name.to_string()];
            row.extend(agg_cells(a));
            table.push(row);
        }
        flucts.push(agg[0]);
        totals.push(agg[1]);
    }
    let mut worst = 0.0f64;
    for a in 0..flucts.len() {
        for b in a + 1..flucts.len() {
            worst = worst.max(se_ratio(&flucts[a], &flucts[b]));
        }
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = totals.iter().map(|a| a.mean).collect();
    let (slope, r2) = linear_fit(&xs, &ys);
    let mut linear = Verdict::at_least(8, "total_energy_linear_r_squared", r2, 0.99);
    linear.pass &= slope > 0.0;
    Ok(Produced {
        files: vec![("fluctuation.csv".into(), csv_bytes(&["n", "statistic", "mean", "stderr", "count"], &table)?)],
        fit: None,
        results: json!({ "width": width, "eta": eta, "total_energy_slope": slope }),
        verdicts: vec![Verdict::at_most(8, "fluctuation_flatness", worst, 1.0), linear],
    })
}

/// Ordinary least squares `(slope, r²)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, 0.0);
    }
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

struct FockRow {
    matched: bool,
    fallback: usize,
    certified: bool,
    violations: usize,
    passed: usize,
    evaluated: usize,
    occ_checked: usize,
    occ_violations: usize,
}

fn run_fock(ctx: &Ctx, alpha: f64, tau: f64, eta_scale: f64, pairs: usize, max_r: usize, seed: u64) -> Result<Produced> {
    let spec = &ctx.cfg.ensemble;
    require_isotropic(spec, "fock")?;
    let n = spec.n;
    let (_, fit) = ensemble_fit(ctx, spec, false)?;
    let eta = eta_scale * fit.eta;
    let eta0 = eta / 2.0;
    let cut = (n as f64).powf(tau);
    let rows = over_realizations(ctx.pool, spec.realizations, |i| {
        let sd = isotropic_sd(&spec.chain(i)?)?;
        let centers = locate_centers(&sd, alpha)?;
        let cert = certify_decay(&sd, &centers, eta, tau)?;
        let omega = centers.relabeled(&sd);
        let sample = sample_configuration_pairs(n, max_r, tau, pairs, seed_for(seed, i))?;
        let check = fock_localization_check(&omega, eta, eta0, tau, &sample)?;
        let (mut occ_checked, mut occ_violations) = (0, 0);
        if cert.certified {
            for (k, _) in &sample {
                for x in 0..n {
                    let m = k.sites.iter().map(|&s| s.abs_diff(x)).min().unwrap_or(0);
                    if (m as f64) < cut {
                        continue;
                    }
                    occ_checked += 1;
                    if occupation_number(&omega, k, x)? > occupation_bound(eta, m) {
                        occ_violations += 1;
                    }
                }
            }
        }
        Ok(FockRow {
            matched: centers.matched,
            fallback: centers.fallback_count,
            certified: cert.certified,
            violations: cert.violations.len(),
            passed: check.outcomes.iter().filter(|o| o.pass).count(),
            evaluated: check.outcomes.len(),
            occ_checked,
            occ_violations,
        })
    })?;
    let total = rows.len() as f64;
    let matched_fraction = rows.iter().filter(|r| r.matched).count() as f64 / total;
    let certified_fraction = rows.iter().filter(|r| r.certified).count() as f64 / total;
    let evaluated: usize = rows.iter().map(|r| r.evaluated).sum();
    let passed: usize = rows.iter().map(|r| r.passed).sum();
    let overlap_pass_fraction = if evaluated == 0 { 0.0 } else { passed as f64 / evaluated as f64 };
    let fallback_total: usize = rows.iter().map(|r| r.fallback).sum();
    let occ_checked: usize = rows.iter().map(|r| r.occ_checked).sum();
    let occ_violations: usize = rows.iter().map(|r| r.occ_violations).sum();
    let report = json!({
        "alpha": alpha, "tau": tau, "eta": eta, "eta0": eta0,
        "matched_fraction": matched_fraction, "certified_fraction": certified_fraction,
        "overlap_pass_fraction": overlap_pass_fraction, "fallback_total": fallback_total,
        "pairs_evaluated": evaluated, "occupation_checked": occ_checked,
        "occupation_violations": occ_violations,
    });
    let table: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                i.to_string(),
                r.matched.to_string(),
                r.fallback.to_string(),
                r.certified.to_string(),
                r.violations.to_string(),
                r.passed.to_string(),
                r.evaluated.to_string(),
            ]
        })
        .collect();
    let header =
        ["realization", "matched", "fallback_count", "certified", "decay_violations", "overlap_pass", "overlap_evaluated"];
    let mut report_bytes = serde_json::to_vec_pretty(&report)?;
    report_bytes.push(b'\n');
    Ok(Produced {
        files: vec![("fock.csv".into(), csv_bytes(&header, &table)?), ("fock.json".into(), report_bytes)],
        fit: Some(fit),
        results: report,
        verdicts: vec![
            Verdict::at_least(9, "matched_fraction", matched_fraction, 0.99),
            Verdict::at_least(9, "certified_fraction", certified_fraction, 0.95),
            Verdict::at_least(9, "overlap_pass_fraction", overlap_pass_fraction, 0.95),
            Verdict::at_most(9, "occupation_bound_violations", occ_violations as f64, 0.0),
        ],
    })
}

fn run_oracle_check(ctx: &Ctx) -> Result<Produced> {
    let spec = &ctx.cfg.ensemble;
    let reports: Vec<OracleReport> = over_realizations(ctx.pool, spec.realizations, |i| oracle_report(&spec.chain(i)?))?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let table: Vec<Vec<String>> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let e = r.entropy;
            vec![
                i.to_string(),
                r.n.to_string(),
                num(r.spectrum_gap),
                opt(r.quadratic_form_defect),
                opt(r.isotropic_form_defect),
                opt(e.map(|e| e.max_gap)),
                opt(e.map(|e| e.max_excess)),
                opt(e.map(|e| e.gamma_gap)),
                e.map(|e| e.compared.to_string()).unwrap_or_default(),
                e.map(|e| e.skipped.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    let header = [
        "realization",
        "n",
        "spectrum_gap",
        "quadratic_form_defect",
        "isotropic_form_defect",
        "entropy_gap",
        "ps_excess",
        "gamma_gap",
        "compared",
        "skipped",
    ];
    let max_of = |f: &dyn Fn(&OracleReport) -> Option<f64>| reports.iter().filter_map(f).fold(f64::NEG_INFINITY, f64::max);
    let mut verdicts = vec![Verdict::at_most(1, "spectrum_gap", max_of(&|r| Some(r.spectrum_gap)), 1e-8)];
    if spec.n <= super::oracle::IDENTITY_CAP {
        verdicts.push(Verdict::at_most(2, "quadratic_form_defect", max_of(&|r| r.quadratic_form_defect), 1e-10));
        verdicts.push(Verdict::at_most(2, "isotropic_form_defect", max_of(&|r| r.isotropic_form_defect), 1e-10));
        verdicts.push(Verdict::at_most(3, "entropy_gap", max_of(&|r| r.entropy.map(|e| e.max_gap)), 1e-7));
        verdicts.push(Verdict::at_most(3, "entropy_minus_ps_bound", max_of(&|r| r.entropy.map(|e| e.max_excess)), 1e-8));
        verdicts.push(Verdict::at_most(3, "gamma_gap", max_of(&|r| r.entropy.map(|e| e.gamma_gap)), 1e-8));
    }
    Ok(Produced {
        files: vec![("oracle.csv".into(), csv_bytes(&header, &table)?)],
        fit: None,
        results: json!({ "reports": reports }),
        verdicts,
    })
}
