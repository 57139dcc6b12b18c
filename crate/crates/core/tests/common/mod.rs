//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use hawkes_core::nonparam::CovarianceEstimate;
use hawkes_core::{EventSeries, IntradayProfile, KernelSpec};

/// Log-likelihood by direct double sum over event pairs, with the
/// compensator assembled from closed-form kernel integrals.
pub fn brute_force_loglik(
    series: &EventSeries,
    mu: f64,
    kernel: &KernelSpec,
    profile: Option<&IntradayProfile>,
) -> f64 {
    let t = series.timestamps();
    let (start, end) = (series.start(), series.end());
    let w = |x: f64| profile.map_or(1.0, |p| p.weight_at(x));

    let mut log_sum = 0.0;
    for i in 0..t.len() {
        let mut acc = mu;
        for j in 0..i {
            acc += w(t[j]) * kernel.eval(t[i] - t[j]).unwrap();
        }
        log_sum += (acc / w(t[i])).ln();
    }

    // piecewise-constant 1/w: split [start, end] at profile bin edges
    let mut edges = vec![start];
    if let Some(p) = profile {
        let mut x = start;
        while x < end {
            let next = p.locate(x).1.min(end);
            edges.push(next);
            x = next;
        }
    } else {
        edges.push(end);
    }
    let mut comp = 0.0;
    for seg in edges.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let inv_w = 1.0 / w(a);
        let mut part = mu * (b - a);
        for &tj in t.iter().take_while(|&&tj| tj < b) {
            let lo = (a - tj).max(0.0);
            part += w(tj) * (kernel.cumulative(b - tj).unwrap() - kernel.cumulative(lo).unwrap());
        }
        comp += inv_w * part;
    }
    log_sum - comp
}

/// ∫₀^∞ φ by composite Simpson on τ = e^u between `lo` and `hi`.
pub fn log_quadrature(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let (a, b) = (lo.ln(), hi.ln());
    let h = (b - a) / n as f64;
    let g = |u: f64| {
        let tau = u.exp();
        f(tau) * tau
    };
    let mut s = g(a) + g(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Exact binned-count autocovariance of a stationary exponential-kernel
/// Hawkes process, as a density ν(kh) = c_k / h².
pub fn exponential_binned_covariance(mu: f64, alpha: f64, beta: f64, h: f64, window: f64) -> CovarianceEstimate {
    let lam = mu / (1.0 - alpha / beta);
    let g = beta - alpha;
    // ν(τ) = Λδ(τ) + C e^{−γ|τ|}
    let c = lam * (beta * beta - g * g) / (2.0 * g);
    let bins = (window / h).round() as usize;
    let mut values = vec![0.0; bins];
    values[0] = (lam * h + c * 2.0 * (g * h - 1.0 + (-g * h).exp()) / (g * g)) / (h * h);
    let cross = ((g * h).exp() + (-g * h).exp() - 2.0) / (g * g);
    for (k, v) in values.iter_mut().enumerate().skip(1) {
        *v = c * (-g * h * k as f64).exp() * cross / (h * h);
    }
    CovarianceEstimate {
        values,
        mean_rate: lam,
        h,
        window_length: window,
        n_windows: 1,
        skipped_windows: 0,
    }
}

/// Least-squares slope of ln y against ln x for x in [lo, hi] and y > 0.
pub fn slope_between(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let (sx, sy): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a >= lo && **a <= hi && **b > 0.0)
        .map(|(a, b)| (*a, *b))
        .unzip();
    hawkes_core::stats::log_log_slope(&sx, &sy)
}

/// Log-binned averages (12 per decade) of ν(kh) for k ≥ 1.
pub fn log_bin_covariance(cov: &CovarianceEstimate) -> (Vec<f64>, Vec<f64>) {
    let step = 10f64.powf(1.0 / 12.0);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut lo = 1usize;
    while lo < cov.values.len() {
        let hi = ((lo as f64 * step).ceil() as usize).min(cov.values.len()).max(lo + 1);
        let m = cov.values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        xs.push(cov.h * ((lo * (hi - 1)) as f64).sqrt().max(lo as f64));
        ys.push(m);
        lo = hi;
    }
    (xs, ys)
}
