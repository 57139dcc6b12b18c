//! Non-parametric kernel estimation from the event-rate autocovariance.
//!
//! Binned counts give an autocovariance estimate ν(τ). Its spectrum fixes
//! |1 − φ̂(ω)|² = Λ / ν̂(ω); the causal φ is recovered by minimum-phase
//! (cepstral) factorisation, after which an inverse DFT returns φ on the lag
//! grid. Everything is done on the discrete grid of bin width h, where the
//! kernel appears as per-lag coefficients a_k ≈ h φ(k h).

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{HawkesError, Result};
use crate::profile::IntradayProfile;
use crate::series::EventSeries;

/// Fraction of the lag range left untouched by the Tukey taper.
const TAPER_FLAT: f64 = 0.8;
/// Floor on Λ/ν̂ before taking logarithms.
const SPECTRUM_FLOOR: f64 = 1e-6;
/// Lower bound on the tapered spectrum, relative to the innovation level Λh.
const NEGATIVE_SPECTRUM_FLOOR: f64 = 1e-2;
/// Logarithmic bins per decade for the presentation grid.
pub const BINS_PER_DECADE: usize = 12;

/// Window-averaged autocovariance of the (detrended) event rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// ν(k h) for k = 0, 1, …; ν(0) includes the Poisson atom Λ/h.
    pub values: Vec<f64>,
    /// Grand mean event rate Λ (events/s).
    pub mean_rate: f64,
    /// Bin width and lag spacing (s).
    pub h: f64,
    pub window_length: f64,
    pub n_windows: usize,
    /// Windows dropped because they held no events.
    pub skipped_windows: usize,
}

impl CovarianceEstimate {
    pub fn lags(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| k as f64 * self.h).collect()
    }

    /// Trapezoidal ∫ν over all lags, with the atom at zero counted as Λ.
    pub fn integral(&self, max_lag: f64) -> f64 {
        let kmax = ((max_lag / self.h) as usize).min(self.values.len() - 1);
        let tail: f64 = self.values[1..=kmax].iter().sum::<f64>() * self.h;
        self.values[0] * self.h + 2.0 * tail
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "tau,nu")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", k as f64 * self.h, v)?;
        }
        Ok(())
    }
}

/// Kernel on the raw lag grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RawKernel {
    pub lags: Vec<f64>,
    pub phi: Vec<f64>,
    pub cumulative: Vec<f64>,
}

/// Log-binned kernel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate {
    /// Geometric bin centres (s).
    pub lags: Vec<f64>,
    /// Mean φ within each bin (s⁻¹).
    pub phi: Vec<f64>,
    /// Φ at the last raw lag inside each bin.
    pub cumulative: Vec<f64>,
    pub counts: Vec<usize>,
    pub raw: Option<RawKernel>,
    /// Zero-lag coefficient g₀ of the causal factor; 1 − g₀ is the mass of φ inside (0, h).
    pub leading_coefficient: f64,
}

impl KernelEstimate {
    /// Φ at the largest resolved lag.
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Φ(τ) interpolated on the raw grid (step function at the raw lags).
    pub fn cumulative_at(&self, tau: f64) -> Option<f64> {
        let raw = self.raw.as_ref()?;
        let idx = raw.lags.partition_point(|&l| l <= tau);
        Some(if idx == 0 { 0.0 } else { raw.cumulative[idx - 1] })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "tau,phi,cumulative_phi,count_per_bin")?;
        for i in 0..self.lags.len() {
            writeln!(
                out,
                "{},{},{},{}",
                self.lags[i], self.phi[i], self.cumulative[i], self.counts[i]
            )?;
        }
        Ok(())
    }
}

fn planner_pair(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(len), planner.plan_fft_inverse(len))
}

/// Biased autocovariance (1/n normalisation) of `x` about `mean` at lags 0..n via zero-padded FFT.
fn autocovariance(x: &[f64], mean: f64, fwd: &dyn Fft<f64>, inv: &dyn Fft<f64>, len: usize) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    fwd.process(&mut buf);
    for z in &mut buf {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    let scale = 1.0 / (len as f64 * n as f64);
    buf[..n].iter().map(|z| z.re * scale).collect()
}

/// Averages the biased autocovariance of binned, detrended counts over
/// non-overlapping windows tiling each session.
pub fn estimate_autocovariance(
    series: &EventSeries,
    h: f64,
    window: f64,
    profile: Option<&IntradayProfile>,
) -> Result<CovarianceEstimate> {
    if !(h > 0.0) {
        return Err(HawkesError::Config(format!("bin width must be > 0, got {h}")));
    }
    if window < 100.0 * h * (1.0 - 1e-12) {
        return Err(HawkesError::Config(format!(
            "window {window} s is shorter than 100 bins of {h} s"
        )));
    }
    let longest = series.sessions().iter().map(|(a, b)| b - a).fold(0.0, f64::max);
    if window > longest * (1.0 + 1e-12) {
        return Err(HawkesError::Config(format!(
            "window {window} s exceeds the longest session ({longest} s)"
        )));
    }
    let bins = (window / h).round() as usize;
    let mut starts = Vec::new();
    for &(a, b) in series.sessions() {
        let mut s = a;
        while s + window <= b * (1.0 + 1e-15) + 1e-9 {
            starts.push(s);
            s += window;
        }
    }
    let len = (2 * bins).next_power_of_two();
    let (fwd, inv) = planner_pair(len);
    let times = series.timestamps();

    let binned = |start: f64| -> Option<Vec<f64>> {
        let lo = times.partition_point(|&t| t < start);
        let hi = times.partition_point(|&t| t < start + window);
        if hi == lo {
            return None;
        }
        let mut x = vec![0.0; bins];
        for &t in &times[lo..hi] {
            let b = (((t - start) / h) as usize).min(bins - 1);
            x[b] += 1.0;
        }
        if let Some(p) = profile {
            for (b, v) in x.iter_mut().enumerate() {
                *v /= p.relative_rate_at(start + (b as f64 + 0.5) * h);
            }
        }
        Some(x)
    };

    // Centre on the grand mean: a per-window mean would pin the spectrum to zero at ω = 0.
    let (used, total_count) = starts
        .par_iter()
        .filter_map(|&start| binned(start).map(|x| x.iter().sum::<f64>()))
        .fold(|| (0usize, 0.0), |(n, c), total| (n + 1, c + total))
        .reduce(|| (0usize, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    if used == 0 {
        return Err(HawkesError::Data("no window contains any event".into()));
    }
    let mean = total_count / (used * bins) as f64;

    let (acc, _, _) = starts
        .par_iter()
        .filter_map(|&start| binned(start).map(|x| (autocovariance(&x, mean, fwd.as_ref(), inv.as_ref(), len), 0.0)))
        .fold(
            || (vec![0.0; bins], 0usize, 0.0),
            |(mut acc, used, count), (cov, total)| {
                for (a, c) in acc.iter_mut().zip(&cov) {
                    *a += c;
                }
                (acc, used + 1, count + total)
            },
        )
        .reduce(
            || (vec![0.0; bins], 0usize, 0.0),
            |(mut a, ua, ca), (b, ub, cb)| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                (a, ua + ub, ca + cb)
            },
        );
    let skipped = starts.len() - used;
    if skipped > 0 {
        log::info!("skipped {skipped} empty windows out of {}", starts.len());
    }
    let norm = 1.0 / (used as f64 * h * h);
    Ok(CovarianceEstimate {
        values: acc.into_iter().map(|c| c * norm).collect(),
        mean_rate: total_count / (used as f64 * bins as f64 * h),
        h,
        window_length: window,
        n_windows: used,
        skipped_windows: skipped,
    })
}

fn tukey(k: usize, n: usize) -> f64 {
    let r = k as f64 / n as f64;
    if r <= TAPER_FLAT {
        1.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (r - TAPER_FLAT) / (1.0 - TAPER_FLAT)).cos())
    }
}

/// Recovers the causal kernel from a covariance estimate by minimum-phase factorisation.
pub fn invert_kernel(cov: &CovarianceEstimate) -> Result<KernelEstimate> {
    if !(cov.mean_rate > 0.0) {
        return Err(HawkesError::Numerical(format!(
            "mean rate must be > 0, got {}",
            cov.mean_rate
        )));
    }
    let lags = cov.values.len();
    if lags < 2 || !(cov.values[0] > 0.0) {
        return Err(HawkesError::Numerical(
            "covariance must have positive variance and at least two lags".into(),
        ));
    }
    let h = cov.h;
    let len = (2 * lags).next_power_of_two();
    let (fwd, inv) = planner_pair(len);
    let zero = Complex::new(0.0, 0.0);

    // symmetric, tapered count covariance c_k = h² ν(kh)
    let mut buf = vec![zero; len];
    for k in 0..lags {
        let c = cov.values[k] * h * h * tukey(k, lags);
        buf[k].re = c;
        if k > 0 {
            buf[len - k].re = c;
        }
    }
    fwd.process(&mut buf);

    let innovation = cov.mean_rate * h;
    // taper sidelobes can push a noisy periodogram below zero
    let floor = innovation * NEGATIVE_SPECTRUM_FLOOR;
    let mut floored = 0usize;
    for z in buf.iter_mut() {
        let mut s = z.re;
        if !s.is_finite() {
            return Err(HawkesError::Numerical(format!("non-finite spectral density {s:e}")));
        }
        if s < floor {
            floored += 1;
            s = floor;
        }
        let ratio = (innovation / s).max(SPECTRUM_FLOOR);
        *z = Complex::new(0.5 * ratio.ln(), 0.0);
    }
    if floored > 0 {
        log::warn!(
            "{floored} of {len} spectral values below {NEGATIVE_SPECTRUM_FLOOR:e} × the innovation level were floored"
        );
    }
    // real cepstrum of log|1 − φ̂|
    inv.process(&mut buf);
    let scale = 1.0 / len as f64;
    for z in buf.iter_mut() {
        *z = Complex::new(z.re * scale, 0.0);
    }
    // fold onto causal lags
    for k in 1..len / 2 {
        buf[k].re *= 2.0;
    }
    for z in buf[len / 2 + 1..].iter_mut() {
        *z = zero;
    }
    fwd.process(&mut buf);
    for z in buf.iter_mut() {
        *z = z.exp();
    }
    inv.process(&mut buf);

    let leading = buf[0].re * scale;
    let mut raw_lags = Vec::with_capacity(lags - 1);
    let mut raw_phi = Vec::with_capacity(lags - 1);
    let mut raw_cum = Vec::with_capacity(lags - 1);
    // 1 − g₀ is the kernel mass falling inside the first bin
    let mut running = 1.0 - leading;
    for k in 1..lags {
        let a = -buf[k].re * scale;
        running += a;
        raw_lags.push(k as f64 * h);
        raw_phi.push(a / h);
        raw_cum.push(running);
    }
    let raw = RawKernel {
        lags: raw_lags,
        phi: raw_phi,
        cumulative: raw_cum,
    };
    Ok(log_bin(raw, leading))
}

fn log_bin(raw: RawKernel, leading: f64) -> KernelEstimate {
    let mut lags = Vec::new();
    let mut phi = Vec::new();
    let mut cumulative = Vec::new();
    let mut counts = Vec::new();
    let first = raw.lags[0];
    let step = 10f64.powf(1.0 / BINS_PER_DECADE as f64);
    let mut i = 0;
    let mut lo = first;
    while i < raw.lags.len() {
        let hi = lo * step;
        let mut sum = 0.0;
        let mut cnt = 0;
        while i < raw.lags.len() && raw.lags[i] < hi * (1.0 - 1e-12) {
            sum += raw.phi[i];
            cnt += 1;
            i += 1;
        }
        if cnt > 0 {
            lags.push((lo * hi).sqrt());
            phi.push(sum / cnt as f64);
            cumulative.push(raw.cumulative[i - 1]);
            counts.push(cnt);
        }
        lo = hi;
    }
    KernelEstimate {
        lags,
        phi,
        cumulative,
        counts,
        raw: Some(raw),
        leading_coefficient: leading,
    }
}

/// Kernel estimate from a single long window with coarse bins, for the
/// behaviour of Φ at large lags.
#[derive(Debug, Clone, PartialEq)]
pub struct LongLagEstimate {
    pub kernel: KernelEstimate,
    pub covariance: CovarianceEstimate,
}

impl LongLagEstimate {
    /// (τ, 1 − Φ(τ)) on the log-binned grid.
    pub fn complement(&self) -> Vec<(f64, f64)> {
        self.kernel
            .lags
            .iter()
            .zip(&self.kernel.cumulative)
            .map(|(t, c)| (*t, 1.0 - c))
            .collect()
    }

    /// (τ^{−ε}, Φ(τ)) on the log-binned grid; Φ is linear in τ^{−ε} for a power-law tail.
    pub fn against_power(&self, epsilon: f64) -> Vec<(f64, f64)> {
        self.kernel
            .lags
            .iter()
            .zip(&self.kernel.cumulative)
            .map(|(t, c)| (t.powf(-epsilon), *c))
            .collect()
    }
}

/// Minimum number of bins the long-lag estimate needs.
pub const LONGLAG_MIN_BINS: usize = 1000;

/// Lags kept by the long-lag estimate, as a fraction of the window. The raw
/// single-window periodogram is too noisy to survive the taper; truncating
/// the biased ACF gives a smoothed spectral estimate.
pub const LONGLAG_LAG_FRACTION: f64 = 0.1;

/// Runs the covariance and inversion pipeline on the whole series treated as
/// one window, keeping lags up to [`LONGLAG_LAG_FRACTION`] of its length.
pub fn estimate_kernel_integral_longlag(
    series: &EventSeries,
    bin: f64,
    profile: Option<&IntradayProfile>,
) -> Result<LongLagEstimate> {
    let span = series.span();
    let bins = (span / bin).floor() as usize;
    if bins < LONGLAG_MIN_BINS {
        return Err(HawkesError::Data(format!(
            "series spans {bins} bins of {bin} s; need at least {LONGLAG_MIN_BINS}"
        )));
    }
    let (start, end) = (series.start(), series.start() + bins as f64 * bin);
    // sessions are concatenated into one continuous clock
    let whole = EventSeries::on_interval(
        series.window(start, end)?.into_timestamps(),
        start,
        end,
        series.resolution(),
    )?;
    let mut covariance = estimate_autocovariance(&whole, bin, bins as f64 * bin, profile)?;
    covariance
        .values
        .truncate(((bins as f64 * LONGLAG_LAG_FRACTION) as usize).max(2));
    let kernel = invert_kernel(&covariance)?;
    Ok(LongLagEstimate { kernel, covariance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn autocovariance_matches_direct_sum() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        let (f, i) = planner_pair(128);
        let m = 0.3;
        let c = autocovariance(&x, m, f.as_ref(), i.as_ref(), 128);
        for k in [0, 1, 7, 49] {
            let direct: f64 = (0..50 - k).map(|t| (x[t] - m) * (x[t + k] - m)).sum::<f64>() / 50.0;
            assert!((c[k] - direct).abs() < 1e-12, "lag {k}");
        }
    }

    #[test]
    fn window_longer_than_session() {
        let s = EventSeries::on_interval(vec![1.0, 2.0], 0.0, 100.0, 1e-3).unwrap();
        assert!(matches!(
            estimate_autocovariance(&s, 0.1, 200.0, None),
            Err(HawkesError::Config(_))
        ));
        assert!(matches!(
            estimate_autocovariance(&s, 0.1, 5.0, None),
            Err(HawkesError::Config(_))
        ));
    }

    #[test]
    fn empty_windows_are_skipped() {
        let s = EventSeries::on_interval(vec![1.0, 2.0, 3.5], 0.0, 100.0, 1e-3).unwrap();
        let c = estimate_autocovariance(&s, 0.1, 10.0, None).unwrap();
        assert_eq!(c.n_windows, 1);
        assert_eq!(c.skipped_windows, 9);
    }

    #[test]
    fn tukey_shape() {
        assert_eq!(tukey(0, 100), 1.0);
        assert_eq!(tukey(80, 100), 1.0);
        assert!(tukey(90, 100) > 0.0 && tukey(90, 100) < 1.0);
        assert!(tukey(99, 100) < 0.01);
    }

    #[test]
    fn white_spectrum_gives_zero_kernel() {
        let cov = CovarianceEstimate {
            values: {
                let mut v = vec![0.0; 256];
                v[0] = 2.0 / 0.1;
                v
            },
            mean_rate: 2.0,
            h: 0.1,
            window_length: 25.6,
            n_windows: 1,
            skipped_windows: 0,
        };
        let k = invert_kernel(&cov).unwrap();
        assert!(k.raw.as_ref().unwrap().phi.iter().all(|p| p.abs() < 1e-12));
        assert!((k.leading_coefficient - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_bins_per_decade() {
        let raw = RawKernel {
            lags: (1..=1000).map(|k| k as f64).collect(),
            phi: vec![1.0; 1000],
            cumulative: (1..=1000).map(|k| k as f64).collect(),
        };
        let est = log_bin(raw, 1.0);
        assert!(est.lags.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(est.counts.iter().sum::<usize>(), 1000);
        assert!(est.lags.len() <= 3 * BINS_PER_DECADE + 1);
        assert_eq!(est.total(), 1000.0);
    }
}
