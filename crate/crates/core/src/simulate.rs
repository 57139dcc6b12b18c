//! Ogata thinning for exponential-sum Hawkes kernels.
//!
//! The dominating intensity is recomputed after every accepted or rejected
//! candidate from the positive part of the excitation state, which cannot
//! increase between events. With a detrending profile the bound is taken per
//! profile bin, since 1/w(t) is constant there.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{HawkesError, Result};
use crate::kernel::{ExpSum, HawkesParams};
use crate::profile::IntradayProfile;
use crate::recurrence::ExcitationState;
use crate::series::EventSeries;

/// Default cap on simulated events before declaring an explosion.
pub const DEFAULT_MAX_EVENTS: usize = 100_000_000;

/// Pre-horizon activity feeding the intensity at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub enum History {
    /// Homogeneous Poisson stream at `rate` over `length` seconds before 0.
    /// `None` uses 20 × the longest kernel scale.
    Poisson { rate: f64, length: Option<f64> },
    /// Explicit event times, all strictly negative.
    Events(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub params: HawkesParams,
    pub horizon: f64,
    pub seed: u64,
    pub history: Option<History>,
    pub profile: Option<IntradayProfile>,
    pub max_events: usize,
    /// Timestamp resolution recorded on the output series.
    pub resolution: f64,
}

impl SimulationConfig {
    pub fn new(params: HawkesParams, horizon: f64, seed: u64) -> Self {
        Self {
            params,
            horizon,
            seed,
            history: None,
            profile: None,
            max_events: DEFAULT_MAX_EVENTS,
            resolution: 1e-9,
        }
    }

    pub fn with_history(mut self, history: History) -> Self {
        self.history = Some(history);
        self
    }

    pub fn with_profile(mut self, profile: IntradayProfile) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn with_max_events(mut self, max_events: usize) -> Self {
        self.max_events = max_events;
        self
    }

    fn validate(&self) -> Result<ExpSum> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(HawkesError::Config(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        let sum = self.params.kernel.exp_sum().ok_or_else(|| {
            HawkesError::Unsupported(format!(
                "simulation needs an exponential-sum kernel, got {}",
                self.params.kernel.family()
            ))
        })?;
        match &self.history {
            Some(History::Poisson { rate, length }) => {
                if !(*rate >= 0.0 && rate.is_finite()) {
                    return Err(HawkesError::Config(format!("history rate must be >= 0, got {rate}")));
                }
                if let Some(l) = length {
                    if !(*l > 0.0) {
                        return Err(HawkesError::Config(format!("history length must be > 0, got {l}")));
                    }
                }
            }
            Some(History::Events(ev)) if ev.iter().any(|t| !(*t < 0.0)) => {
                return Err(HawkesError::Config("history events must precede t = 0".into()));
            }
            Some(History::Events(_)) | None => {}
        }
        Ok(sum)
    }
}

/// Simulates the process on [0, horizon]; uses the profile if one is configured.
pub fn simulate(config: &SimulationConfig) -> Result<EventSeries> {
    let sum = config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = ExcitationState::new(&sum);
    let profile = config.profile.as_ref();
    if let Some(h) = &config.history {
        seed_history(&mut state, h, &sum, profile, &mut rng)?;
    }
    let mu = config.params.mu;
    let horizon = config.horizon;
    let mut events = Vec::new();
    let mut t = 0.0;
    while t < horizon {
        let (w, segment_end) = match profile {
            Some(p) => {
                let (bin, end) = p.locate(t);
                (p.weights()[bin], end.min(horizon))
            }
            None => (1.0, horizon),
        };
        let bound = (mu + state.positive_excitation()) / w;
        if bound <= 0.0 {
            break;
        }
        let dt: f64 = Exp1.sample(&mut rng);
        let dt = dt / bound;
        if t + dt >= segment_end {
            state.decay_only(segment_end - t);
            t = segment_end;
            continue;
        }
        state.decay_only(dt);
        t += dt;
        let lambda = (mu + state.excitation()) / w;
        let u: f64 = rng.random();
        if u * bound <= lambda {
            if events.len() >= config.max_events {
                return Err(HawkesError::Explosion {
                    events: events.len(),
                    time: t,
                });
            }
            // guard against two draws landing on the same float
            if events.last().is_some_and(|&last| t <= last) {
                continue;
            }
            events.push(t);
            state.excite(w);
        }
    }
    EventSeries::on_interval(events, 0.0, horizon, config.resolution)
}

/// Same as [`simulate`] but requires a profile: intensity
/// λ(t) = (1/w(t))[μ + Σ_{t_j<t} w(t_j) φ(t − t_j)].
pub fn simulate_detrended(config: &SimulationConfig) -> Result<EventSeries> {
    if config.profile.is_none() {
        return Err(HawkesError::Profile("detrended simulation requires a profile".into()));
    }
    simulate(config)
}

fn seed_history(
    state: &mut ExcitationState,
    history: &History,
    sum: &ExpSum,
    profile: Option<&IntradayProfile>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let weight = |t: f64| profile.map_or(1.0, |p| p.weight_at(t));
    match history {
        History::Events(ev) => {
            for &t in ev {
                state.excite_past(weight(t), -t);
            }
        }
        History::Poisson { rate, length } => {
            let length = length.unwrap_or(20.0 * sum.max_scale());
            let s_min = sum.scales().iter().copied().fold(f64::INFINITY, f64::min);
            // Bins shrink towards t = 0 so that each stays far below the
            // shortest kernel scale that still matters at that age.
            let mut age = 0.0;
            while age < length {
                let width = (2.5e-5 * age).max(1e-3 * s_min).min(length - age);
                let expected = rate * width;
                let count = if expected > 0.0 {
                    Poisson::new(expected)
                        .map_err(|e| HawkesError::Numerical(e.to_string()))?
                        .sample(rng) as u64
                } else {
                    0
                };
                if count > 0 && count <= 4 {
                    for _ in 0..count {
                        let a = age + width * rng.random::<f64>();
                        state.excite_past(weight(-a), a);
                    }
                } else if count > 0 {
                    let a = age + 0.5 * width;
                    state.excite_past(count as f64 * weight(-a), a);
                }
                age += width;
            }
        }
    }
    Ok(())
}

/// Floors every timestamp to its `grid` cell and redraws it uniformly inside
/// the cell (clipped to the containing session). Collisions are redrawn until
/// the output is strictly increasing. A non-positive grid returns the input.
pub fn quantize_and_randomize(series: &EventSeries, grid: f64, seed: u64) -> Result<EventSeries> {
    if !(grid > 0.0) {
        return Ok(series.clone());
    }
    randomize_in_cells(
        series.timestamps(),
        series.sessions().to_vec(),
        grid,
        series.resolution().max(grid),
        seed,
    )
}

/// Same redraw as [`quantize_and_randomize`] for raw, possibly tied,
/// non-decreasing timestamps recorded on a `grid`.
pub fn randomize_timestamps(
    timestamps: &[f64],
    sessions: Vec<(f64, f64)>,
    grid: f64,
    seed: u64,
) -> Result<EventSeries> {
    if !(grid > 0.0) {
        return Err(HawkesError::Data(format!("randomisation grid must be > 0, got {grid}")));
    }
    if let Some(i) = timestamps.windows(2).position(|w| w[1] < w[0]) {
        return Err(HawkesError::Data(format!("timestamps decrease at index {}", i + 1)));
    }
    randomize_in_cells(timestamps, sessions, grid, grid, seed)
}

fn randomize_in_cells(
    timestamps: &[f64],
    sessions: Vec<(f64, f64)>,
    grid: f64,
    resolution: f64,
    seed: u64,
) -> Result<EventSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells: Vec<(f64, f64)> = Vec::with_capacity(timestamps.len());
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
        let (a, b) = sessions[s];
        // values printed on the grid may parse just below the cell edge
        let cell = (t / grid + 1e-6).floor() * grid;
        let lo = cell.max(a);
        let hi = (cell + grid).min(b);
        cells.push(if hi > lo { (lo, hi) } else { (t, t) });
    }
    let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
    let mut out: Vec<(f64, usize)> = cells.iter().enumerate().map(|(i, c)| (draw(&mut rng, *c), i)).collect();
    loop {
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        let dup: Vec<usize> = (1..out.len()).filter(|&k| out[k].0 <= out[k - 1].0).collect();
        if dup.is_empty() {
            break;
        }
        for k in dup {
            let cell = cells[out[k].1];
            if cell.0 == cell.1 {
                return Err(HawkesError::Data(format!("cannot separate tied events at {}", cell.0)));
            }
            out[k].0 = draw(&mut rng, cell);
        }
    }
    EventSeries::new(out.into_iter().map(|(t, _)| t).collect(), sessions, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;

    fn poisson(mu: f64, horizon: f64, seed: u64) -> EventSeries {
        let p = HawkesParams::new(mu, KernelSpec::exponential(0.0, 1.0).unwrap()).unwrap();
        simulate(&SimulationConfig::new(p, horizon, seed)).unwrap()
    }

    #[test]
    fn poisson_count() {
        let s = poisson(0.1, 1e5, 7);
        let n = s.len() as f64;
        assert!((n - 1e4).abs() < 4.0 * 100.0, "{n}");
    }

    #[test]
    fn reproducible() {
        let p = HawkesParams::new(0.1, KernelSpec::approx_power_law(0.7, 0.2, 0.01, 5.0, 8).unwrap()).unwrap();
        let a = simulate(&SimulationConfig::new(p.clone(), 1e4, 3)).unwrap();
        let b = simulate(&SimulationConfig::new(p, 1e4, 3)).unwrap();
        assert_eq!(a, b);
        assert!(a
            .timestamps()
            .iter()
            .zip(b.timestamps())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn explosion_is_reported() {
        let p = HawkesParams::new(1.0, KernelSpec::exponential(3.0, 1.0).unwrap()).unwrap();
        let cfg = SimulationConfig::new(p, 1e4, 1).with_max_events(10_000);
        assert!(matches!(simulate(&cfg), Err(HawkesError::Explosion { .. })));
    }

    #[test]
    fn ideal_kernel_unsupported() {
        let p = HawkesParams::new(1.0, KernelSpec::ideal_power_law(0.05, 0.1, 0.01).unwrap()).unwrap();
        assert!(matches!(
            simulate(&SimulationConfig::new(p, 10.0, 1)),
            Err(HawkesError::Unsupported(_))
        ));
    }

    #[test]
    fn detrended_requires_profile() {
        let p = HawkesParams::new(1.0, KernelSpec::exponential(0.1, 1.0).unwrap()).unwrap();
        assert!(matches!(
            simulate_detrended(&SimulationConfig::new(p, 10.0, 1)),
            Err(HawkesError::Profile(_))
        ));
    }

    #[test]
    fn randomization_preserves_count_and_cells() {
        let s = poisson(10.0, 1000.0, 11);
        let r = quantize_and_randomize(&s, 1.0, 5).unwrap();
        assert_eq!(r.len(), s.len());
        let mut orig: Vec<f64> = s.timestamps().iter().map(|t| t.floor()).collect();
        let mut new: Vec<f64> = r.timestamps().iter().map(|t| t.floor()).collect();
        orig.sort_by(f64::total_cmp);
        new.sort_by(f64::total_cmp);
        assert_eq!(orig, new);
    }

    #[test]
    fn same_cell_events_lose_their_order() {
        let s = EventSeries::on_interval(vec![0.2, 0.7], 0.0, 10.0, 1e-3).unwrap();
        let mut late_first = false;
        for seed in 0..64 {
            let r = quantize_and_randomize(&s, 1.0, seed).unwrap();
            assert!(r.timestamps().iter().all(|t| (0.0..1.0).contains(t)));
            // both positions are redrawn, so the earlier one is not pinned near 0.2
            late_first |= r.timestamps()[0] > 0.5;
        }
        assert!(late_first);
    }

    #[test]
    fn tiny_grid_is_near_identity() {
        let s = poisson(1.0, 100.0, 2);
        let r = quantize_and_randomize(&s, 1e-12, 9).unwrap();
        for (a, b) in s.timestamps().iter().zip(r.timestamps()) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert_eq!(quantize_and_randomize(&s, 0.0, 9).unwrap(), s);
    }

    #[test]
    fn history_lifts_initial_rate() {
        let p = HawkesParams::new(0.0, KernelSpec::approx_power_law(1.0, 0.3, 0.01, 5.0, 8).unwrap()).unwrap();
        let empty = simulate(&SimulationConfig::new(p.clone(), 100.0, 1)).unwrap();
        assert!(empty.is_empty());
        let seeded = simulate(&SimulationConfig::new(p, 100.0, 1).with_history(History::Poisson {
            rate: 2.0,
            length: None,
        }))
        .unwrap();
        assert!(seeded.len() > 50, "{}", seeded.len());
    }
}
