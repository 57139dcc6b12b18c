//! Simulation, estimation and diagnostics for power-law Hawkes processes.
//!
//! The crate covers the full loop on synthetic event streams: exact
//! thinning simulation of exponential-sum kernels, O(N) maximum-likelihood
//! fits with intraday detrending, non-parametric kernel recovery from the
//! event-rate autocovariance, residual goodness-of-fit and detrended
//! fluctuation analysis.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod mle;
pub mod nonparam;
pub mod optim;
pub mod profile;
mod recurrence;
pub mod series;
pub mod simulate;
pub mod stats;

pub use diagnostics::{dfa, residual_transform, DfaReport, ResidualReport};
pub use error::{HawkesError, Result};
pub use experiments::{build_profile, fs_bias_study, rolling_fit_campaign, spliced_kernel, BiasStudy, BiasStudyConfig};
pub use kernel::{
    mean_intensity, theory_relations, ApproxPowerLaw, ExpSum, ExponentialKernel, HawkesParams, IdealPowerLaw,
    KernelSpec, TheoryRelations,
};
pub use mle::{
    expected_excess_mu, fit_exponential, fit_powerlaw, kernel_tail_mass, log_likelihood, FitOptions, FitRecord,
    FitResult, Theta,
};
pub use profile::IntradayProfile;
pub use series::EventSeries;
pub use simulate::{
    quantize_and_randomize, randomize_timestamps, simulate, simulate_detrended, History, SimulationConfig,
};
