//! Multi-stage studies: intraday profiles, the exponential-kernel bias
//! study, rolling fit campaigns and two-regime kernels.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HawkesError, Result};
use crate::kernel::{normalized_sum, HawkesParams, KernelSpec, DEFAULT_SPACING, DEFAULT_TERMS};
use crate::mle::{fit_exponential, fit_powerlaw, FitOptions, FitResult};
use crate::profile::IntradayProfile;
use crate::series::EventSeries;
use crate::simulate::{quantize_and_randomize, simulate, SimulationConfig};
use crate::stats;

const MIN_PROFILE_SESSIONS: usize = 20;

/// Average event rate per time-of-day bin across sessions.
///
/// The period is the length of the first session; every session must have
/// the same length. Time of day is measured with the profile's own
/// convention (clock time modulo the period).
pub fn build_profile(series: &EventSeries, bin_width: f64) -> Result<IntradayProfile> {
    if !(bin_width > 0.0) {
        return Err(HawkesError::Profile(format!("bin width must be > 0, got {bin_width}")));
    }
    let sessions = series.sessions();
    let period = sessions[0].1 - sessions[0].0;
    if let Some((a, b)) = sessions.iter().find(|(a, b)| ((b - a) - period).abs() > 1e-6 * period) {
        return Err(HawkesError::Profile(format!(
            "session [{a}, {b}] differs in length from the first session ({period} s)"
        )));
    }
    if sessions.len() < MIN_PROFILE_SESSIONS {
        log::warn!(
            "profile built from {} sessions; at least {MIN_PROFILE_SESSIONS} recommended",
            sessions.len()
        );
    }
    let shape = IntradayProfile::flat(bin_width, period)?;
    let bins = shape.bins();
    let mut counts = vec![0.0; bins];
    let mut exposure = vec![0.0; bins];
    for &(a, b) in sessions {
        let mut t = a;
        while t < b {
            let (bin, end) = shape.locate(t);
            let seg = end.min(b);
            exposure[bin] += seg - t;
            t = seg;
        }
    }
    for &t in series.timestamps() {
        counts[shape.locate(t).0] += 1.0;
    }
    let mut rates = Vec::with_capacity(bins);
    for i in 0..bins {
        if counts[i] == 0.0 || exposure[i] == 0.0 {
            return Err(HawkesError::Profile(format!("time-of-day bin {i} has no events")));
        }
        rates.push(counts[i] / exposure[i]);
    }
    IntradayProfile::from_rates(bin_width, period, rates)
}

/// Power-law-like kernel whose term weights follow ξ^{−(1+ε_short)} below
/// `crossover` and ξ^{−(1+ε_long)} above, continuous at the crossover.
pub fn spliced_kernel(eps_short: f64, eps_long: f64, crossover: f64, n_total: f64) -> Result<KernelSpec> {
    spliced_kernel_with(
        eps_short,
        eps_long,
        crossover,
        n_total,
        0.01,
        DEFAULT_SPACING,
        DEFAULT_TERMS,
    )
}

pub fn spliced_kernel_with(
    eps_short: f64,
    eps_long: f64,
    crossover: f64,
    n_total: f64,
    tau0: f64,
    spacing: f64,
    terms: usize,
) -> Result<KernelSpec> {
    if !(eps_short > 0.0 && eps_long < 1.0 && eps_short <= eps_long) {
        return Err(HawkesError::Kernel(format!(
            "need 0 < eps_short <= eps_long < 1, got {eps_short}, {eps_long}"
        )));
    }
    if !(crossover > tau0 && tau0 > 0.0 && spacing > 1.0 && terms >= 1 && n_total >= 0.0) {
        return Err(HawkesError::Kernel("invalid splice geometry".into()));
    }
    let xi: Vec<f64> = (0..terms).map(|i| tau0 * spacing.powi(i as i32)).collect();
    let join = crossover.powf(eps_long - eps_short);
    let weights: Vec<f64> = xi
        .iter()
        .map(|&x| {
            if x < crossover {
                x.powf(-(1.0 + eps_short))
            } else {
                join * x.powf(-(1.0 + eps_long))
            }
        })
        .collect();
    let (sum, _, _) = normalized_sum(n_total, &xi, &weights, tau0 / spacing)?;
    Ok(KernelSpec::SumOfExponentials(sum))
}

/// Settings of the exponential-kernel bias study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasStudyConfig {
    pub mu: f64,
    pub epsilon: f64,
    pub n: f64,
    /// (label, τ₀) per period.
    pub tau0_schedule: Vec<(String, f64)>,
    pub ensemble_size: usize,
    /// Length of the drawn window (s).
    pub window: f64,
    /// Timestamps are re-drawn uniformly within cells of this width.
    pub randomisation_grid: f64,
    /// Simulated time discarded before the window may start (s).
    pub warmup: f64,
    /// The window start is drawn uniformly over this many window lengths after the warm-up.
    pub draw_span_windows: f64,
    pub base_seed: u64,
    pub fit: FitSettings,
}

/// Serializable subset of [`FitOptions`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSettings {
    pub restarts: usize,
    pub max_evals: usize,
    pub tolerance: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        let o = FitOptions::default();
        Self {
            restarts: o.restarts,
            max_evals: o.max_evals,
            tolerance: o.tolerance,
        }
    }
}

impl FitSettings {
    pub fn options(&self, seed: u64) -> FitOptions {
        FitOptions {
            restarts: self.restarts,
            max_evals: self.max_evals,
            tolerance: self.tolerance,
            seed,
            ..FitOptions::default()
        }
    }
}

/// Geometric schedule from `first` to `last` over `periods` entries labelled 1..=periods.
pub fn geometric_schedule(first: f64, last: f64, periods: usize) -> Vec<(String, f64)> {
    (0..periods)
        .map(|i| {
            let f = if periods == 1 {
                0.0
            } else {
                i as f64 / (periods - 1) as f64
            };
            (format!("{}", i + 1), first * (last / first).powf(f))
        })
        .collect()
}

impl Default for BiasStudyConfig {
    fn default() -> Self {
        Self {
            mu: 0.02,
            epsilon: 0.15,
            n: 1.0,
            tau0_schedule: geometric_schedule(1.0, 1e-3, 14),
            ensemble_size: 100,
            window: 1800.0,
            randomisation_grid: 1.0,
            warmup: 1e5,
            draw_span_windows: 3.0,
            base_seed: 0,
            fit: FitSettings::default(),
        }
    }
}

impl BiasStudyConfig {
    fn validate(&self) -> Result<()> {
        if self.ensemble_size == 0 {
            return Err(HawkesError::Config("ensemble size must be at least 1".into()));
        }
        if !(self.window > 0.0 && self.warmup >= 0.0 && self.draw_span_windows >= 1.0) {
            return Err(HawkesError::Config(
                "window must be > 0, warm-up >= 0 and draw span >= 1 window".into(),
            ));
        }
        if self.tau0_schedule.is_empty() {
            return Err(HawkesError::Config("empty τ₀ schedule".into()));
        }
        Ok(())
    }
}

/// Outcome of one realisation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasJob {
    pub period: usize,
    pub realisation: usize,
    pub seed: u64,
    pub window_start: f64,
    pub n_events: usize,
    pub n_hat: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasRow {
    pub label: String,
    pub tau0: f64,
    pub mean_n: f64,
    pub std_n: f64,
    pub fitted: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasStudy {
    pub rows: Vec<BiasRow>,
    pub jobs: Vec<BiasJob>,
}

impl BiasStudy {
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "period,label,tau0,mean_n,std_n,fitted,failed")?;
        for (i, r) in self.rows.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                i + 1,
                r.label,
                r.tau0,
                r.mean_n,
                r.std_n,
                r.fitted,
                r.failed
            )?;
        }
        Ok(())
    }
}

/// Fits exponential kernels to short, second-randomised windows of critical
/// power-law simulations, one ensemble per τ₀ in the schedule.
///
/// Job `k` (period-major order) uses seed `base_seed + k`, so results do not
/// depend on scheduling.
pub fn fs_bias_study(config: &BiasStudyConfig) -> Result<BiasStudy> {
    config.validate()?;
    let mut kernels = Vec::with_capacity(config.tau0_schedule.len());
    for (_, tau0) in &config.tau0_schedule {
        let kernel = KernelSpec::approx_power_law(config.n, config.epsilon, *tau0, DEFAULT_SPACING, DEFAULT_TERMS)?;
        kernels.push(HawkesParams::new(config.mu, kernel)?);
    }
    let ensemble = config.ensemble_size;
    let jobs: Vec<BiasJob> = (0..kernels.len() * ensemble)
        .into_par_iter()
        .map(|k| {
            let (period, realisation) = (k / ensemble, k % ensemble);
            let seed = config.base_seed + k as u64;
            bias_job(config, &kernels[period], period, realisation, seed)
        })
        .collect();
    let rows = config
        .tau0_schedule
        .iter()
        .enumerate()
        .map(|(p, (label, tau0))| {
            let ok: Vec<f64> = jobs.iter().filter(|j| j.period == p).filter_map(|j| j.n_hat).collect();
            let failed = ensemble - ok.len();
            if failed > 0 {
                log::warn!("period {label}: {failed} of {ensemble} fits failed");
            }
            BiasRow {
                label: label.clone(),
                tau0: *tau0,
                mean_n: if ok.is_empty() { f64::NAN } else { stats::mean(&ok) },
                std_n: if ok.len() < 2 {
                    f64::NAN
                } else {
                    stats::variance(&ok).sqrt()
                },
                fitted: ok.len(),
                failed,
            }
        })
        .collect();
    Ok(BiasStudy { rows, jobs })
}

fn bias_job(config: &BiasStudyConfig, params: &HawkesParams, period: usize, realisation: usize, seed: u64) -> BiasJob {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.random_range(0.0..=(config.draw_span_windows - 1.0)) * config.window;
    let window_start = config.warmup + offset;
    let horizon = config.warmup + config.draw_span_windows * config.window;
    let mut job = BiasJob {
        period,
        realisation,
        seed,
        window_start,
        n_events: 0,
        n_hat: None,
        error: None,
    };
    let run = || -> Result<(usize, f64)> {
        let sim = simulate(&SimulationConfig::new(params.clone(), horizon, seed))?;
        let window = sim.window(window_start, window_start + config.window)?.rebased();
        let window = quantize_and_randomize(&window, config.randomisation_grid, seed ^ 0x5eed)?;
        let fit = fit_exponential(&window, None, &config.fit.options(seed))?;
        Ok((window.len(), fit.theta.n()))
    };
    match run() {
        Ok((events, n)) => {
            job.n_events = events;
            job.n_hat = Some(n);
        }
        Err(e) => job.error = Some(e.to_string()),
    }
    job
}

/// One window of a rolling campaign.
#[derive(Debug, Clone)]
pub struct CampaignWindow {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub fit: std::result::Result<FitResult, HawkesError>,
}

/// Independent power-law fits on consecutive non-overlapping windows.
///
/// Window `k` is fitted with seed `opts.seed + k`. A trailing partial window
/// is dropped.
pub fn rolling_fit_campaign(
    series: &EventSeries,
    window: f64,
    profile: Option<&IntradayProfile>,
    opts: &FitOptions,
) -> Result<Vec<CampaignWindow>> {
    if !(window > 0.0) {
        return Err(HawkesError::Config(format!(
            "campaign window must be > 0, got {window}"
        )));
    }
    let count = (series.span() / window * (1.0 + 1e-12)).floor() as usize;
    if count == 0 {
        return Err(HawkesError::Config(format!(
            "series span {} s is shorter than one window",
            series.span()
        )));
    }
    let start = series.start();
    Ok((0..count)
        .into_par_iter()
        .map(|k| {
            let a = start + k as f64 * window;
            let b = if k + 1 == count && count as f64 * window >= series.span() {
                series.end()
            } else {
                a + window
            };
            let fit = series.window(a, b).and_then(|w| {
                let opts = FitOptions {
                    seed: opts.seed + k as u64,
                    ..opts.clone()
                };
                fit_powerlaw(&w, profile, None, &opts)
            });
            if let Err(e) = &fit {
                log::warn!("campaign window {k} failed: {e}");
            }
            CampaignWindow {
                index: k,
                start: a,
                end: b,
                fit,
            }
        })
        .collect())
}

pub fn write_campaign_csv(windows: &[CampaignWindow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "window,start,end,mu,n,epsilon,tau0,loglik,converged,n_events,error"
    )?;
    for w in windows {
        match &w.fit {
            Ok(f) => {
                let r = f.record();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},",
                    w.index,
                    w.start,
                    w.end,
                    r.mu,
                    r.n,
                    r.epsilon.unwrap_or(f64::NAN),
                    r.tau0.unwrap_or(f64::NAN),
                    r.loglik,
                    r.converged,
                    r.n_events
                )?;
            }
            Err(e) => writeln!(
                out,
                "{},{},{},,,,,,,,\"{}\"",
                w.index,
                w.start,
                w.end,
                e.to_string().replace('"', "'")
            )?,
        }
    }
    Ok(())
}
