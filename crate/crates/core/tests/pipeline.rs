//! End-to-end checks of the estimation pipelines against known answers.

mod common;

use common::{brute_force_loglik, exponential_binned_covariance};
use hawkes_core::experiments::build_profile;
use hawkes_core::nonparam::{estimate_kernel_integral_longlag, invert_kernel};
use hawkes_core::*;

#[test]
fn detrended_likelihood_matches_double_sum() {
    let rates: Vec<f64> = (0..10).map(|i| 0.5 + 0.1 * ((i as f64) - 4.5).powi(2)).collect();
    let profile = IntradayProfile::from_rates(10.0, 100.0, rates).unwrap();
    let kernel = KernelSpec::approx_power_law(0.6, 0.3, 0.05, 5.0, 15).unwrap();
    let params = HawkesParams::new(0.8, kernel.clone()).unwrap();
    let cfg = SimulationConfig::new(params.clone(), 400.0, 9).with_profile(profile.clone());
    let series = simulate_detrended(&cfg).unwrap();
    let fast = log_likelihood(&series, &params, Some(&profile)).unwrap();
    let slow = brute_force_loglik(&series, 0.8, &kernel, Some(&profile));
    assert!((fast - slow).abs() < 1e-9 * slow.abs(), "{fast} vs {slow}");
}

#[test]
fn exact_exponential_covariance_inverts_to_its_kernel() {
    let cov = exponential_binned_covariance(0.5, 1.2, 2.0, 0.01, 50.0);
    let est = invert_kernel(&cov).unwrap();
    let total = *est.cumulative.last().unwrap();
    assert!((total - 0.6).abs() < 1e-3, "Φ(∞) = {total}");
    // φ(τ) = α e^{−βτ} at a mid-range lag
    let raw = est.raw.as_ref().unwrap();
    let k = raw.lags.iter().position(|t| (*t - 0.5).abs() < 1e-9).unwrap();
    let expected = 1.2 * (-2.0f64 * 0.5).exp();
    assert!(
        (raw.phi[k] - expected).abs() < 0.02 * expected,
        "{} vs {expected}",
        raw.phi[k]
    );
}

#[test]
fn longlag_integral_recovers_branching_ratio() {
    let params = HawkesParams::new(1.0, KernelSpec::exponential(0.25, 0.5).unwrap()).unwrap();
    let series = simulate(&SimulationConfig::new(params, 2e5, 21)).unwrap();
    let est = estimate_kernel_integral_longlag(&series, 1.0, None).unwrap();
    let total = *est.kernel.cumulative.last().unwrap();
    assert!((total - 0.5).abs() < 0.05, "Φ(∞) = {total}");
    assert!(estimate_kernel_integral_longlag(&series, 500.0, None).is_err());
}

#[test]
fn profile_recovers_intraday_shape() {
    let rates: Vec<f64> = (0..6).map(|i| 1.0 + i as f64).collect();
    let truth = IntradayProfile::from_rates(100.0, 600.0, rates).unwrap();
    let params = HawkesParams::new(1.0, KernelSpec::exponential(0.0, 1.0).unwrap()).unwrap();
    let sim = simulate_detrended(&SimulationConfig::new(params, 600.0 * 40.0, 4).with_profile(truth.clone())).unwrap();
    let sessions: Vec<(f64, f64)> = (0..40).map(|k| (k as f64 * 600.0, (k + 1) as f64 * 600.0)).collect();
    let series = EventSeries::new(sim.into_timestamps(), sessions, 1e-9).unwrap();
    let built = build_profile(&series, 100.0).unwrap();
    assert!(built.rate_correlation(&truth).unwrap() > 0.98);
}
