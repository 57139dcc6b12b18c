//! Per-exponential excitation state carried from event to event.
//!
//! For φ(τ) = Σ_k c_k e^{−τ/s_k} the self-exciting part of the intensity is
//! Σ_k c_k A_k(t) with A_k(t) = Σ_{t_j<t} w_j e^{−(t−t_j)/s_k}. Each A_k only
//! needs to be decayed between consecutive times, so a sweep over N events
//! costs O(N·K) instead of O(N²).

use crate::error::{HawkesError, Result};
use crate::kernel::ExpSum;
use crate::profile::IntradayProfile;

#[derive(Debug, Clone)]
pub(crate) struct ExcitationState {
    amplitudes: Vec<f64>,
    scales: Vec<f64>,
    inv_scales: Vec<f64>,
    state: Vec<f64>,
}

impl ExcitationState {
    pub(crate) fn new(sum: &ExpSum) -> Self {
        Self {
            amplitudes: sum.amplitudes().to_vec(),
            scales: sum.scales().to_vec(),
            inv_scales: sum.scales().iter().map(|s| 1.0 / s).collect(),
            state: vec![0.0; sum.len()],
        }
    }

    /// Σ_k c_k A_k.
    #[inline]
    pub(crate) fn excitation(&self) -> f64 {
        self.amplitudes.iter().zip(&self.state).map(|(c, a)| c * a).sum()
    }

    /// Σ_k max(c_k, 0) A_k, an upper bound on the excitation that never increases between events.
    #[inline]
    pub(crate) fn positive_excitation(&self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.state)
            .map(|(c, a)| c.max(0.0) * a)
            .sum()
    }

    #[inline]
    pub(crate) fn excite(&mut self, weight: f64) {
        for a in &mut self.state {
            *a += weight;
        }
    }

    /// Adds a past event `age` seconds before the current time.
    pub(crate) fn excite_past(&mut self, weight: f64, age: f64) {
        for (a, inv) in self.state.iter_mut().zip(&self.inv_scales) {
            let x = age * inv;
            if x < 40.0 {
                *a += weight * (-x).exp();
            }
        }
    }

    /// Decays the state by `dt` and returns ∫ Σ_k c_k A_k over that interval.
    #[inline]
    pub(crate) fn decay(&mut self, dt: f64) -> f64 {
        let mut integral = 0.0;
        for k in 0..self.state.len() {
            let em1 = (-dt * self.inv_scales[k]).exp_m1();
            integral -= self.amplitudes[k] * self.scales[k] * self.state[k] * em1;
            self.state[k] *= 1.0 + em1;
        }
        integral
    }

    /// Decays without accumulating the integral.
    #[inline]
    pub(crate) fn decay_only(&mut self, dt: f64) {
        for (a, inv) in self.state.iter_mut().zip(&self.inv_scales) {
            *a *= (-dt * inv).exp();
        }
    }
}

/// Per-event output of a compensator sweep.
pub(crate) struct SweepEvent {
    pub lambda: f64,
    /// ∫ λ from the window start up to this event.
    pub compensator: f64,
}

/// Walks the events in [start, end], computing the conditional intensity at
/// each event and the running compensator. With a profile, the intensity is
/// (1/w(t))[μ + Σ_j w(t_j) φ(t − t_j)] and the compensator is integrated
/// piecewise over profile bins.
///
/// Returns the full compensator ∫_start^end λ. The visitor may stop the sweep
/// early by returning `false`, in which case `Ok(None)` is returned.
pub(crate) fn sweep(
    times: &[f64],
    start: f64,
    end: f64,
    mu: f64,
    kernel: &ExpSum,
    profile: Option<&IntradayProfile>,
    mut visit: impl FnMut(usize, SweepEvent) -> bool,
) -> Result<Option<f64>> {
    let mut state = ExcitationState::new(kernel);
    let mut t = start;
    let mut comp = 0.0;
    for (i, &ti) in times.iter().enumerate() {
        if ti < t {
            return Err(HawkesError::Data(format!("event {i} at {ti} precedes {t}")));
        }
        comp += advance(&mut state, t, ti, mu, profile);
        t = ti;
        let (inv_w, w) = match profile {
            Some(p) => {
                let w = p.weight_at(ti);
                (1.0 / w, w)
            }
            None => (1.0, 1.0),
        };
        let lambda = inv_w * (mu + state.excitation());
        if !visit(
            i,
            SweepEvent {
                lambda,
                compensator: comp,
            },
        ) {
            return Ok(None);
        }
        state.excite(w);
    }
    if end < t {
        return Err(HawkesError::Data(format!("window end {end} precedes last event {t}")));
    }
    comp += advance(&mut state, t, end, mu, profile);
    Ok(Some(comp))
}

fn advance(state: &mut ExcitationState, from: f64, to: f64, mu: f64, profile: Option<&IntradayProfile>) -> f64 {
    match profile {
        None => mu * (to - from) + state.decay(to - from),
        Some(p) => {
            let mut acc = 0.0;
            let mut t = from;
            while t < to {
                let (bin, bin_end) = p.locate(t);
                let seg_end = bin_end.min(to);
                let d = seg_end - t;
                acc += (mu * d + state.decay(d)) / p.weights()[bin];
                t = seg_end;
            }
            acc
        }
    }
}
