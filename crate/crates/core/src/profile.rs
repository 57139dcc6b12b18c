//! Intraday activity profile R(t) and detrending weights w(t) = 1/R(t).

use crate::error::{HawkesError, Result};

/// Piecewise-constant, periodic time-of-day profile.
///
/// The clock origin is taken to be the start of a trading day; the profile
/// repeats every `period` seconds (one concatenated session).
#[derive(Debug, Clone, PartialEq)]
pub struct IntradayProfile {
    bin_width: f64,
    period: f64,
    rates: Vec<f64>,
    weights: Vec<f64>,
    mean_rate: f64,
}

impl IntradayProfile {
    /// Builds a profile from per-bin average rates (events/s).
    ///
    /// Weights are 1/R normalised to unit time-average over the day.
    pub fn from_rates(bin_width: f64, period: f64, rates: Vec<f64>) -> Result<Self> {
        if !(bin_width > 0.0 && period > 0.0) {
            return Err(HawkesError::Profile("bin width and period must be positive".into()));
        }
        let expected = (period / bin_width - 1e-9).ceil() as usize;
        if rates.len() != expected {
            return Err(HawkesError::Profile(format!(
                "expected {expected} bins for period {period} s, got {}",
                rates.len()
            )));
        }
        if let Some((i, r)) = rates.iter().enumerate().find(|(_, r)| !(**r > 0.0 && r.is_finite())) {
            return Err(HawkesError::Profile(format!("bin {i} has non-positive rate {r}")));
        }
        let mut profile = Self {
            bin_width,
            period,
            weights: rates.iter().map(|r| 1.0 / r).collect(),
            rates,
            mean_rate: 0.0,
        };
        profile.mean_rate = profile.time_average(&profile.rates);
        let mean_w = profile.time_average(&profile.weights);
        for w in &mut profile.weights {
            *w /= mean_w;
        }
        Ok(profile)
    }

    /// w ≡ 1.
    pub fn flat(bin_width: f64, period: f64) -> Result<Self> {
        let bins = (period / bin_width - 1e-9).ceil() as usize;
        Self::from_rates(bin_width, period, vec![1.0; bins])
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bins(&self) -> usize {
        self.rates.len()
    }

    /// Duration of bin `i` (the last bin may be shorter).
    pub fn bin_duration(&self, i: usize) -> f64 {
        let start = i as f64 * self.bin_width;
        (start + self.bin_width).min(self.period) - start
    }

    fn time_average(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.bin_duration(i))
            .sum::<f64>()
            / self.period
    }

    /// Index of the bin containing `t`, plus the clock time at which that bin ends.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let day = (t / self.period).floor();
        let day_start = day * self.period;
        let phase = t - day_start;
        let mut bin = ((phase / self.bin_width).floor() as usize).min(self.bins() - 1);
        let mut end = day_start + ((bin + 1) as f64 * self.bin_width).min(self.period);
        if end <= t {
            // rounding put t on the far edge of its bin
            bin += 1;
            if bin == self.bins() {
                return (0, (day_start + self.period) + self.bin_duration(0).min(self.period));
            }
            end = day_start + ((bin + 1) as f64 * self.bin_width).min(self.period);
        }
        (bin, end)
    }

    pub fn weight_at(&self, t: f64) -> f64 {
        self.weights[self.locate(t).0]
    }

    /// R(t) divided by its daily time-average.
    pub fn relative_rate_at(&self, t: f64) -> f64 {
        self.rates[self.locate(t).0] / self.mean_rate
    }

    /// Mean of the weights over the day (one by construction).
    pub fn mean_weight(&self) -> f64 {
        self.time_average(&self.weights)
    }

    /// Pearson correlation of the rate vectors of two profiles on the same grid.
    pub fn rate_correlation(&self, other: &Self) -> Result<f64> {
        if self.bins() != other.bins() {
            return Err(HawkesError::Profile("profiles have different bin counts".into()));
        }
        Ok(crate::stats::pearson(&self.rates, &other.rates))
    }
}
