use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use xylab::disorder::{Distribution, EnsembleSpec};
use xylab::eigencorrelator::{fit_decay, read_profile_csv};
use xylab::experiments::{self, Experiment, ExperimentConfig, RunOutput};

const OUTPUT_HELP: &str = "\
Output files (CSV columns; sites are 1-based):
  every run          summary.json   config echo, config_hash, fit, results, verdicts
  eigencorrelator    profile.csv    distance, mean, stderr, count
                     reference_profile.csv (when a reference ensemble is given)
  lr_bound           amplitudes.csv distance, mean, stderr, count, envelope,
                                    reference_mean, reference_stderr
                     commutators.csv j, k, distance, mean, stderr, count, bound
  correlations       multipoint.csv t, mean_abs, stderr, count
  entanglement_static
                     entanglement.csv ell, statistic, mean, stderr, count, strategy
  entanglement_quench
                     quench.csv     ell, statistic, mean, stderr, count, strategy
                     quench_series.csv t, ell, mean, stderr, count
  transport_particle, transport_energy (isotropic)
                     series.csv     t, mean, stderr, count
  transport_energy (anisotropic)
                     fluctuation.csv n, statistic, mean, stderr, count
  fock               fock.csv       realization, matched, fallback_count, certified,
                                    decay_violations, overlap_pass, overlap_evaluated
                     fock.json      alpha, tau, eta, matched_fraction, certified_fraction,
                                    overlap_pass_fraction, fallback_total, ...
  oracle_check       oracle.csv     realization, n, spectrum_gap, quadratic_form_defect,
                                    isotropic_form_defect, entropy_gap, ps_excess,
                                    gamma_gap, compared, skipped

Exit status: 0 when every verdict passes, 2 when some verdict fails, 1 on error.";

#[derive(Parser)]
#[command(name = "xylab", version, about = "Disordered XY chain: free-fermion diagnostics and ED cross-checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    #[command(after_long_help = OUTPUT_HELP)]
    Run {
        config: PathBuf,
        /// Worker threads; overrides the config's `workers`.
        #[arg(long, env = "XYLAB_WORKERS")]
        workers: Option<usize>,
    },
    /// Exact-diagonalization identity checks on random chains.
    OracleCheck {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        realizations: u64,
        /// Also write oracle.csv and summary.json here.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, env = "XYLAB_WORKERS", default_value_t = 1)]
        workers: usize,
    },
    /// Fit C e^{-eta d} to a profile CSV with columns distance, mean, stderr, count.
    Fit {
        csv: PathBuf,
        #[arg(long, default_value_t = 5)]
        min_distance: usize,
        #[arg(long)]
        max_distance: Option<usize>,
    },
}

fn report(out: &RunOutput) -> ExitCode {
    for v in &out.summary.verdicts {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} [criterion {}] {}: {:e} (threshold {:e})", v.criterion, v.check, v.value, v.threshold);
    }
    if out.summary.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn oracle_config(n: usize, seed: u64, realizations: u64, output: Option<PathBuf>) -> ExperimentConfig {
    ExperimentConfig {
        ensemble: EnsembleSpec {
            n,
            mu: Distribution::uniform(-1.0, 1.0),
            gamma: Distribution::uniform(-1.0, 1.0),
            nu: Distribution::uniform(-2.0, 2.0),
            base_seed: seed,
            realizations,
        },
        experiment: Experiment::OracleCheck {},
        time_grid: Default::default(),
        fit_window: Default::default(),
        reference: None,
        output_dir: output.unwrap_or_default(),
        workers: 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, workers } => {
            let start = std::time::Instant::now();
            let out = experiments::run_file(&config, workers)?;
            eprintln!("{} finished in {:.1}s", out.summary.experiment, start.elapsed().as_secs_f64());
            Ok(report(&out))
        }
        Command::OracleCheck { n, seed, realizations, output, workers } => {
            let cfg = oracle_config(n, seed, realizations, output.clone());
            let raw = serde_json::to_vec(&cfg)?;
            let out = experiments::run_experiment(&cfg, &raw, workers)?;
            if let Some(dir) = output {
                experiments::write_output(&out, &dir)?;
            }
            Ok(report(&out))
        }
        Command::Fit { csv, min_distance, max_distance } => {
            let file = std::fs::File::open(&csv).with_context(|| format!("opening {}", csv.display()))?;
            let profile = read_profile_csv(file)?;
            let fit = fit_decay(&profile, min_distance, max_distance)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
