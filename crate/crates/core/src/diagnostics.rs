//! Goodness of fit by time rescaling, and detrended fluctuation analysis.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{HawkesError, Result};
use crate::kernel::HawkesParams;
use crate::profile::IntradayProfile;
use crate::recurrence::sweep;
use crate::series::EventSeries;
use crate::stats;

/// Rescaled inter-arrival times Δt* = ∫_{t_{i-1}}^{t_i} λ.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub transformed_interarrivals: Vec<f64>,
    /// Sup-distance between the empirical CDF of Δt* and 1 − e^{−x}.
    pub ks_distance: f64,
    /// (bin centre, density) on logarithmic bins.
    pub pdf_histogram: Vec<(f64, f64)>,
}

impl ResidualReport {
    pub fn mean(&self) -> f64 {
        stats::mean(&self.transformed_interarrivals)
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "dt_star")?;
        for v in &self.transformed_interarrivals {
            writeln!(out, "{v}")?;
        }
        writeln!(
            out,
            "# n={} mean={} ks_distance={}",
            self.transformed_interarrivals.len(),
            self.mean(),
            self.ks_distance
        )
    }

    pub fn write_histogram_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "dt_star,density")?;
        for (x, p) in &self.pdf_histogram {
            writeln!(out, "{x},{p}")?;
        }
        Ok(())
    }
}

/// Maps events through the fitted compensator and compares the spacings with
/// a unit-rate exponential law.
pub fn residual_transform(
    series: &EventSeries,
    params: &HawkesParams,
    profile: Option<&IntradayProfile>,
) -> Result<ResidualReport> {
    if series.len() < 2 {
        return Err(HawkesError::Data("residual transform needs at least two events".into()));
    }
    let sum = params.kernel.exp_sum().ok_or_else(|| {
        HawkesError::Unsupported(format!(
            "compensator recurrence needs an exponential-sum kernel, got {}",
            params.kernel.family()
        ))
    })?;
    let mut stars = Vec::with_capacity(series.len());
    let mut bad = None;
    sweep(
        series.timestamps(),
        series.start(),
        series.end(),
        params.mu,
        &sum,
        profile,
        |i, ev| {
            if !ev.compensator.is_finite() {
                bad = Some(i);
                return false;
            }
            stars.push(ev.compensator);
            true
        },
    )?;
    if let Some(i) = bad {
        return Err(HawkesError::Model(format!("non-finite compensator at event {i}")));
    }
    let dt: Vec<f64> = stars.windows(2).map(|w| w[1] - w[0]).collect();
    if let Some(i) = dt.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(HawkesError::Model(format!(
            "invalid rescaled spacing {} after event {i}",
            dt[i]
        )));
    }
    let ks_distance = stats::ks_distance(&dt, |x| -(-x).exp_m1());
    let pdf_histogram = log_histogram(&dt, 10);
    Ok(ResidualReport {
        transformed_interarrivals: dt,
        ks_distance,
        pdf_histogram,
    })
}

/// Density estimate on logarithmic bins spanning the positive values.
fn log_histogram(values: &[f64], per_decade: usize) -> Vec<(f64, f64)> {
    let positive: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    if positive.is_empty() {
        return Vec::new();
    }
    let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = positive.iter().copied().fold(0.0, f64::max);
    let step = 10f64.powf(1.0 / per_decade as f64);
    let bins = ((hi / lo).ln() / step.ln()).floor() as usize + 1;
    let mut counts = vec![0usize; bins];
    for v in &positive {
        let b = (((v / lo).ln() / step.ln()) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let total = values.len() as f64;
    counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(b, &c)| {
            let left = lo * step.powi(b as i32);
            let width = left * (step - 1.0);
            ((left * left * step).sqrt(), c as f64 / (total * width))
        })
        .collect()
}

/// Fluctuation function and fitted Hurst exponents.
#[derive(Debug, Clone)]
pub struct DfaReport {
    pub window_lengths: Vec<f64>,
    pub fluctuations: Vec<f64>,
    /// Single log-log slope over every window length.
    pub hurst: f64,
    pub hurst_low: f64,
    pub hurst_high: f64,
    /// Breakpoint of the two-segment fit, when there are enough points for one.
    pub crossover: Option<f64>,
}

impl DfaReport {
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "L,F")?;
        for (l, f) in self.window_lengths.iter().zip(&self.fluctuations) {
            writeln!(out, "{l},{f}")?;
        }
        let crossover = self.crossover.map_or("none".to_string(), |c| c.to_string());
        writeln!(
            out,
            "# hurst={} hurst_low={} hurst_high={} crossover={crossover}",
            self.hurst, self.hurst_low, self.hurst_high
        )
    }
}

/// `per_decade` geometrically spaced lengths from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let steps = ((hi / lo).log10() * per_decade as f64).round() as usize;
    (0..=steps)
        .map(|i| lo * (hi / lo).powf(i as f64 / steps.max(1) as f64))
        .collect()
}

/// Detrended fluctuation analysis of the cumulative count N(t) sampled on
/// bins of width `bin`.
///
/// Each length in `lengths` tiles the series with non-overlapping windows
/// (the final partial window is dropped), fits a least-squares line to N in
/// each window and reports the root-mean-square residual. Lengths longer
/// than the span, or shorter than three bins, are skipped.
pub fn dfa(series: &EventSeries, bin: f64, lengths: &[f64]) -> Result<DfaReport> {
    if !(bin > 0.0) {
        return Err(HawkesError::Config(format!("DFA bin must be > 0, got {bin}")));
    }
    let span = series.span();
    let mut grid: Vec<f64> = Vec::new();
    for &l in lengths {
        if l > span {
            log::warn!("skipping DFA length {l} s: exceeds series span {span} s");
        } else if l < 3.0 * bin {
            log::warn!("skipping DFA length {l} s: fewer than three bins");
        } else {
            grid.push(l);
        }
    }
    if let Some(&max) = grid.last() {
        if span < 100.0 * max {
            log::warn!("series span {span} s is shorter than 100 × the largest DFA length {max} s");
        }
    }
    let points: Vec<(f64, f64)> = grid
        .par_iter()
        .filter_map(|&l| fluctuation(series, bin, l).map(|f| (l, f)))
        .collect();
    if points.len() < 2 {
        return Err(HawkesError::Data("fewer than two usable DFA window lengths".into()));
    }
    let (window_lengths, fluctuations): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    let lx: Vec<f64> = window_lengths.iter().map(|l| l.ln()).collect();
    let ly: Vec<f64> = fluctuations.iter().map(|f| f.ln()).collect();
    let hurst = stats::linear_fit(&lx, &ly).slope;
    let (hurst_low, hurst_high, crossover) = match two_segment_fit(&lx, &ly) {
        Some(seg) => (seg.low, seg.high, Some(seg.breakpoint.exp())),
        None => (hurst, hurst, None),
    };
    Ok(DfaReport {
        window_lengths,
        fluctuations,
        hurst,
        hurst_low,
        hurst_high,
        crossover,
    })
}

/// F(L) from per-window regression sums over event bin indices.
fn fluctuation(series: &EventSeries, bin: f64, length: f64) -> Option<f64> {
    let m = (length / bin).round() as usize;
    let windows = (series.span() / (m as f64 * bin)).floor() as usize;
    if windows == 0 || m < 3 {
        return None;
    }
    let times = series.timestamps();
    let start = series.start();
    let mf = m as f64;
    // x = 0..m-1
    let sx = mf * (mf - 1.0) / 2.0;
    let sxx_raw = (mf - 1.0) * mf * (2.0 * mf - 1.0) / 6.0;
    let sxx = sxx_raw - sx * sx / mf;
    let tri = |k: f64| k * (k + 1.0) / 2.0;

    let mut rss = 0.0;
    let mut lo = 0usize;
    for w in 0..windows {
        let w0 = start + (w * m) as f64 * bin;
        let w1 = start + ((w + 1) * m) as f64 * bin;
        let hi = lo + times[lo..].partition_point(|&t| t < w1);
        let first = lo + times[lo..hi].partition_point(|&t| t < w0);
        // y_j = number of window events in bins ≤ j
        let (mut sy, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for (rank, &t) in times[first..hi].iter().enumerate() {
            let b = (((t - w0) / bin) as usize).min(m - 1) as f64;
            sy += mf - b;
            sxy += tri(mf - 1.0) - tri(b - 1.0);
            syy += (mf - b) * (2.0 * rank as f64 + 1.0);
        }
        let cyy = syy - sy * sy / mf;
        let cxy = sxy - sx * sy / mf;
        rss += (cyy - cxy * cxy / sxx).max(0.0);
        lo = hi;
    }
    Some((rss / (windows * m) as f64).sqrt())
}

struct TwoSegment {
    breakpoint: f64,
    low: f64,
    high: f64,
}

/// Continuous two-segment linear fit; the breakpoint minimises the squared
/// error over a grid between the third and third-to-last abscissae.
fn two_segment_fit(x: &[f64], y: &[f64]) -> Option<TwoSegment> {
    let n = x.len();
    if n < 6 {
        return None;
    }
    let (lo, hi) = (x[2], x[n - 3]);
    let mut best: Option<(f64, TwoSegment)> = None;
    const CANDIDATES: usize = 200;
    for i in 0..=CANDIDATES {
        let c = lo + (hi - lo) * i as f64 / CANDIDATES as f64;
        let Some((coef, sse)) = least_squares_3(x, y, |v| [1.0, (v - c).min(0.0), (v - c).max(0.0)]) else {
            continue;
        };
        if best.as_ref().is_none_or(|(s, _)| sse < *s) {
            best = Some((
                sse,
                TwoSegment {
                    breakpoint: c,
                    low: coef[1],
                    high: coef[2],
                },
            ));
        }
    }
    best.map(|(_, seg)| seg)
}

/// Least squares with three basis functions via the normal equations.
fn least_squares_3(x: &[f64], y: &[f64], basis: impl Fn(f64) -> [f64; 3]) -> Option<([f64; 3], f64)> {
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let f = basis(xi);
        for r in 0..3 {
            b[r] += f[r] * yi;
            for c in 0..3 {
                a[r][c] += f[r] * f[c];
            }
        }
    }
    let coef = solve3(a, b)?;
    let sse = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let f = basis(xi);
            (yi - coef[0] * f[0] - coef[1] * f[1] - coef[2] * f[2]).powi(2)
        })
        .sum();
    Some((coef, sse))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}
