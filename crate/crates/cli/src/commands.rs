//! Subcommands. Each writes its outputs into `--out-dir` and returns what
//! goes into the manifest.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hawkes_core::diagnostics::geometric_grid;
use hawkes_core::experiments::{geometric_schedule, write_campaign_csv, FitSettings};
use hawkes_core::nonparam::{estimate_autocovariance, estimate_kernel_integral_longlag, invert_kernel};
use hawkes_core::{
    build_profile, dfa, fit_exponential, fit_powerlaw, fs_bias_study, residual_transform, rolling_fit_campaign,
    simulate, BiasStudyConfig, EventSeries, FitOptions, IntradayProfile,
};
use serde_json::{json, Value};

use crate::config::{KeyValues, SimulationSpec};
use crate::error::{CliError, Result};
use crate::events::{ingest, read_events, write_events, Calendar};
use crate::files::{read_profile, write_json, write_profile, write_with, FitFile};

#[derive(Debug, Parser)]
#[command(
    name = "hawkes",
    version,
    about = "Simulate, fit and diagnose power-law Hawkes processes"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for outputs and manifest.json.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Master seed; drawn at random and recorded when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a series from a key=value config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `horizon` in the config.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Maximum-likelihood fit of the approximate power-law kernel.
    FitMle {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Maximum-likelihood fit of the exponential kernel.
    FitExp {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Non-parametric kernel estimate from the binned-count autocovariance.
    EstimateKernel {
        #[command(flatten)]
        input: Input,
        /// Bin width (s); default 10 × the timestamp resolution.
        #[arg(long)]
        h: Option<f64>,
        /// Window length (s).
        #[arg(long, default_value_t = 2700.0)]
        window: f64,
    },
    /// Time-rescaled residuals of a stored fit.
    Residuals {
        #[command(flatten)]
        input: Input,
        /// fit.json written by fit-mle or fit-exp.
        #[arg(long)]
        fit: PathBuf,
    },
    /// Detrended fluctuation analysis of the binned counts.
    Dfa {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1.0)]
        bin: f64,
        #[arg(long, default_value_t = 10.0)]
        min_window: f64,
        /// Default: span / 100.
        #[arg(long)]
        max_window: Option<f64>,
        #[arg(long, default_value_t = 8)]
        per_decade: usize,
    },
    /// Intraday activity profile averaged over sessions.
    Profile {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 300.0)]
        bin_width: f64,
    },
    /// Exponential fits to short windows of critical power-law simulations.
    FsBias {
        #[arg(long, default_value_t = 0.02)]
        mu: f64,
        #[arg(long, default_value_t = 0.15)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        n: f64,
        #[arg(long, default_value_t = 1.0)]
        tau0_first: f64,
        #[arg(long, default_value_t = 1e-3)]
        tau0_last: f64,
        #[arg(long, default_value_t = 14)]
        periods: usize,
        #[arg(long, default_value_t = 100)]
        ensemble: usize,
        #[arg(long, default_value_t = 1800.0)]
        window: f64,
        #[arg(long, default_value_t = 1.0)]
        grid: f64,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Power-law fits on consecutive non-overlapping windows.
    Campaign {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        window: f64,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Kernel integral at long lags from one coarse-binned window.
    Longlag {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1.0)]
        bin: f64,
        /// Tail exponent for the Φ against τ^−ε column.
        #[arg(long, default_value_t = 0.15)]
        epsilon: f64,
    },
}

#[derive(Debug, Args)]
pub struct Input {
    /// events-v1 file.
    #[arg(long)]
    pub events: PathBuf,
    /// weekdays or daily; used with a #session header.
    #[arg(long, default_value = "weekdays")]
    pub calendar: String,
    /// Profile CSV written by the profile command.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = FitOptions::default().restarts)]
    pub restarts: usize,
    #[arg(long, default_value_t = FitOptions::default().max_evals)]
    pub max_evals: usize,
    #[arg(long, default_value_t = FitOptions::default().tolerance)]
    pub tolerance: f64,
}

impl FitArgs {
    fn settings(&self) -> FitSettings {
        FitSettings {
            restarts: self.restarts,
            max_evals: self.max_evals,
            tolerance: self.tolerance,
        }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate { .. } => "simulate",
            Self::FitMle { .. } => "fit-mle",
            Self::FitExp { .. } => "fit-exp",
            Self::EstimateKernel { .. } => "estimate-kernel",
            Self::Residuals { .. } => "residuals",
            Self::Dfa { .. } => "dfa",
            Self::Profile { .. } => "profile",
            Self::FsBias { .. } => "fs-bias",
            Self::Campaign { .. } => "campaign",
            Self::Longlag { .. } => "longlag",
        }
    }
}

/// What a finished command contributes to the manifest.
#[derive(Debug, Default)]
pub struct Outcome {
    pub config: Value,
    pub seeds: Value,
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

/// Derived seeds are `seed` for ingestion/simulation and `seed + 1` for
/// optimiser restarts and study jobs.
pub fn run(command: &Command, out_dir: &Path, seed: u64) -> Result<Outcome> {
    let out = |name: &str| out_dir.join(name);
    match command {
        Command::Simulate { config, horizon } => {
            let mut kv = KeyValues::read(config)?;
            if let Some(h) = horizon {
                kv.set("horizon", h);
            }
            let spec = SimulationSpec::from_config(&kv)?;
            let seed = spec.seed.unwrap_or(seed);
            let series = simulate(&spec.simulation(seed))?;
            let path = out("events.txt");
            write_events(&path, &series, series.resolution())?;
            Ok(Outcome {
                config: json!({ "file": config, "values": kv.as_map(), "resolved": spec }),
                seeds: json!({ "simulation": seed }),
                outputs: vec![path],
                summary: json!({ "events": series.len(), "mean_rate": series.mean_rate() }),
            })
        }
        Command::FitMle { input, fit } | Command::FitExp { input, fit } => {
            let (series, profile, mut config) = load(input, seed)?;
            let opts = fit.settings().options(seed + 1);
            let result = match command {
                Command::FitMle { .. } => fit_powerlaw(&series, profile.as_ref(), None, &opts)?,
                _ => {
                    if profile.is_some() {
                        log::warn!("fit-exp ignores --profile");
                    }
                    fit_exponential(&series, None, &opts)?
                }
            };
            if !result.converged {
                log::warn!("optimiser stopped at the evaluation limit");
            }
            let file = FitFile::new(&result);
            let path = out("fit.json");
            write_json(&path, &file)?;
            config["fit"] = serde_json::to_value(fit.settings()).unwrap_or_default();
            Ok(Outcome {
                config,
                seeds: json!({ "ingest": seed, "optimiser": seed + 1 }),
                outputs: vec![path],
                summary: serde_json::to_value(&file.record).unwrap_or_default(),
            })
        }
        Command::EstimateKernel { input, h, window } => {
            let (series, profile, mut config) = load(input, seed)?;
            let h = h.unwrap_or(10.0 * series.resolution().max(1e-3));
            let cov = estimate_autocovariance(&series, h, *window, profile.as_ref())?;
            let kernel = invert_kernel(&cov)?;
            let (cov_path, kernel_path) = (out("covariance.csv"), out("kernel.csv"));
            write_with(&cov_path, |w| cov.write_csv(w))?;
            write_with(&kernel_path, |w| kernel.write_csv(w))?;
            config["h"] = json!(h);
            config["window"] = json!(window);
            Ok(Outcome {
                config,
                seeds: json!({ "ingest": seed }),
                outputs: vec![cov_path, kernel_path],
                summary: json!({
                    "windows": cov.n_windows,
                    "skipped_windows": cov.skipped_windows,
                    "mean_rate": cov.mean_rate,
                    "kernel_integral": kernel.cumulative.last(),
                }),
            })
        }
        Command::Residuals { input, fit } => {
            let (series, profile, mut config) = load(input, seed)?;
            let stored = FitFile::read(fit)?;
            let report = residual_transform(&series, &stored.params()?, profile.as_ref())?;
            let (path, hist) = (out("residuals.csv"), out("residual_histogram.csv"));
            write_with(&path, |w| report.write_csv(w))?;
            write_with(&hist, |w| report.write_histogram_csv(w))?;
            config["fit"] = json!(fit);
            Ok(Outcome {
                config,
                seeds: json!({ "ingest": seed }),
                outputs: vec![path, hist],
                summary: json!({
                    "n": report.transformed_interarrivals.len(),
                    "mean": report.mean(),
                    "ks_distance": report.ks_distance,
                }),
            })
        }
        Command::Dfa {
            input,
            bin,
            min_window,
            max_window,
            per_decade,
        } => {
            let (series, _, mut config) = load(input, seed)?;
            let hi = max_window.unwrap_or(series.span() / 100.0);
            if !(hi > *min_window) {
                return Err(CliError::Config(format!("window range [{min_window}, {hi}] is empty")));
            }
            let report = dfa(&series, *bin, &geometric_grid(*min_window, hi, *per_decade))?;
            let path = out("dfa.csv");
            write_with(&path, |w| report.write_csv(w))?;
            config["dfa"] = json!({ "bin": bin, "min_window": min_window, "max_window": hi, "per_decade": per_decade });
            Ok(Outcome {
                config,
                seeds: json!({ "ingest": seed }),
                outputs: vec![path],
                summary: json!({
                    "hurst": report.hurst,
                    "hurst_low": report.hurst_low,
                    "hurst_high": report.hurst_high,
                    "crossover": report.crossover,
                }),
            })
        }
        Command::Profile { input, bin_width } => {
            let (series, _, mut config) = load(input, seed)?;
            let profile = build_profile(&series, *bin_width)?;
            let path = out("profile.csv");
            write_profile(&path, &profile)?;
            config["bin_width"] = json!(bin_width);
            Ok(Outcome {
                config,
                seeds: json!({ "ingest": seed }),
                outputs: vec![path],
                summary: json!({ "bins": profile.bins(), "sessions": series.sessions().len() }),
            })
        }
        Command::FsBias {
            mu,
            epsilon,
            n,
            tau0_first,
            tau0_last,
            periods,
            ensemble,
            window,
            grid,
            fit,
        } => {
            if *periods == 0 {
                return Err(CliError::Config("periods must be at least 1".into()));
            }
            let config = BiasStudyConfig {
                mu: *mu,
                epsilon: *epsilon,
                n: *n,
                tau0_schedule: geometric_schedule(*tau0_first, *tau0_last, *periods),
                ensemble_size: *ensemble,
                window: *window,
                randomisation_grid: *grid,
                base_seed: seed + 1,
                fit: fit.settings(),
                ..BiasStudyConfig::default()
            };
            let study = fs_bias_study(&config)?;
            let (path, jobs) = (out("fs_bias.csv"), out("fs_bias_jobs.json"));
            write_with(&path, |w| study.write_csv(w))?;
            write_json(&jobs, &study.jobs)?;
            Ok(Outcome {
                config: serde_json::to_value(&config).unwrap_or_default(),
                seeds: json!({ "base": seed + 1, "rule": "job k uses base + k" }),
                outputs: vec![path, jobs],
                summary: serde_json::to_value(&study.rows).unwrap_or_default(),
            })
        }
        Command::Campaign { input, window, fit } => {
            let (series, profile, mut config) = load(input, seed)?;
            let opts = fit.settings().options(seed + 1);
            let windows = rolling_fit_campaign(&series, *window, profile.as_ref(), &opts)?;
            let path = out("campaign.csv");
            write_with(&path, |w| write_campaign_csv(&windows, w))?;
            let failed = windows.iter().filter(|w| w.fit.is_err()).count();
            config["window"] = json!(window);
            config["fit"] = serde_json::to_value(fit.settings()).unwrap_or_default();
            Ok(Outcome {
                config,
                seeds: json!({ "ingest": seed, "optimiser_base": seed + 1, "rule": "window k uses base + k" }),
                outputs: vec![path],
                summary: json!({ "windows": windows.len(), "failed": failed }),
            })
        }
        Command::Longlag { input, bin, epsilon } => {
            let (series, profile, mut config) = load(input, seed)?;
            let est = estimate_kernel_integral_longlag(&series, *bin, profile.as_ref())?;
            let path = out("longlag.csv");
            let power = est.against_power(*epsilon);
            write_with(&path, |w| {
                use std::io::Write;
                writeln!(w, "tau,phi_cumulative,complement,tau_pow_minus_eps")?;
                for ((tau, c), (x, _)) in est.complement().iter().zip(&power) {
                    writeln!(w, "{tau},{},{c},{x}", 1.0 - c)?;
                }
                Ok(())
            })?;
            config["bin"] = json!(bin);
            config["epsilon"] = json!(epsilon);
            Ok(Outcome {
                config,
                seeds: json!({ "ingest": seed }),
                outputs: vec![path],
                summary: json!({ "kernel_integral": est.kernel.cumulative.last() }),
            })
        }
    }
}

fn load(input: &Input, seed: u64) -> Result<(EventSeries, Option<IntradayProfile>, Value)> {
    let calendar = Calendar::parse(&input.calendar)?;
    let file = read_events(&input.events)?;
    let ingested = ingest(&file, calendar, seed)?;
    let profile = input.profile.as_deref().map(read_profile).transpose()?;
    log::info!(
        "{} events in {} session(s), {} dropped",
        ingested.series.len(),
        ingested.series.sessions().len(),
        ingested.dropped
    );
    let config = json!({
        "events": input.events,
        "calendar": input.calendar,
        "profile": input.profile,
        "resolution": ingested.resolution,
        "session": file.session.map(|s| s.label()),
        "events_read": file.timestamps.len(),
        "events_dropped": ingested.dropped,
    });
    Ok((ingested.series, profile, config))
}
