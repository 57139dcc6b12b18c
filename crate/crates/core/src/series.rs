//! Event time series on a concatenated trading clock.

use crate::error::{HawkesError, Result};

/// Ordered event timestamps together with the session intervals they live in.
///
/// Sessions are expressed on the same concatenated clock as the timestamps;
/// the observation window of the series runs from the start of the first
/// session to the end of the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSeries {
    timestamps: Vec<f64>,
    sessions: Vec<(f64, f64)>,
    resolution: f64,
}

impl EventSeries {
    /// Validates strict ordering, session membership and resolution.
    pub fn new(timestamps: Vec<f64>, sessions: Vec<(f64, f64)>, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(HawkesError::Data(format!("resolution must be > 0, got {resolution}")));
        }
        if sessions.is_empty() {
            return Err(HawkesError::Data("at least one session is required".into()));
        }
        for (i, &(a, b)) in sessions.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(HawkesError::Data(format!("session {i} is empty: ({a}, {b})")));
            }
            if i > 0 && a < sessions[i - 1].1 {
                return Err(HawkesError::Data(format!("session {i} overlaps its predecessor")));
            }
        }
        if let Some(i) = timestamps.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(HawkesError::Data(format!(
                "timestamps not strictly increasing at index {}",
                i + 1
            )));
        }
        let mut s = 0;
        for (i, &t) in timestamps.iter().enumerate() {
            while s < sessions.len() && t > sessions[s].1 {
                s += 1;
            }
            if s == sessions.len() || t < sessions[s].0 {
                return Err(HawkesError::Data(format!(
                    "event {i} at {t} lies outside every session"
                )));
            }
        }
        Ok(Self {
            timestamps,
            sessions,
            resolution,
        })
    }

    /// Single-session series on [start, end].
    pub fn on_interval(timestamps: Vec<f64>, start: f64, end: f64, resolution: f64) -> Result<Self> {
        Self::new(timestamps, vec![(start, end)], resolution)
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn sessions(&self) -> &[(f64, f64)] {
        &self.sessions
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.sessions[0].0
    }

    pub fn end(&self) -> f64 {
        self.sessions[self.sessions.len() - 1].1
    }

    /// Length of the observation window.
    pub fn span(&self) -> f64 {
        self.end() - self.start()
    }

    /// Events per second over the observation window.
    pub fn mean_rate(&self) -> f64 {
        self.len() as f64 / self.span()
    }

    /// Events in [start, end), re-based so the window starts at `start`
    /// (times are kept on the original clock).
    pub fn window(&self, start: f64, end: f64) -> Result<Self> {
        if !(end > start) {
            return Err(HawkesError::Config(format!("empty window ({start}, {end})")));
        }
        let lo = self.timestamps.partition_point(|&t| t < start);
        let hi = self.timestamps.partition_point(|&t| t < end);
        let sessions: Vec<(f64, f64)> = self
            .sessions
            .iter()
            .filter_map(|&(a, b)| {
                let (a, b) = (a.max(start), b.min(end));
                (b > a).then_some((a, b))
            })
            .collect();
        if sessions.is_empty() {
            return Err(HawkesError::Config(format!(
                "window ({start}, {end}) covers no session"
            )));
        }
        Ok(Self {
            timestamps: self.timestamps[lo..hi].to_vec(),
            sessions,
            resolution: self.resolution,
        })
    }

    /// Same events on a clock shifted so the window starts at zero.
    pub fn rebased(&self) -> Self {
        let t0 = self.start();
        Self {
            timestamps: self.timestamps.iter().map(|t| t - t0).collect(),
            sessions: self.sessions.iter().map(|&(a, b)| (a - t0, b - t0)).collect(),
            resolution: self.resolution,
        }
    }

    pub fn into_timestamps(self) -> Vec<f64> {
        self.timestamps
    }

    /// Successive differences t_i − t_{i−1}.
    pub fn inter_arrivals(&self) -> Vec<f64> {
        self.timestamps.windows(2).map(|w| w[1] - w[0]).collect()
    }
}
