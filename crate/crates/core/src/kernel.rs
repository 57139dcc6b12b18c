//! Hawkes kernels and closed-form relations.
//!
//! Every kernel exposes its value φ(τ), its running integral Φ(τ) and its
//! branching ratio n = Φ(∞). Kernels built from exponentials additionally
//! expose an [`ExpSum`] view, which is what the O(N) recurrences in the
//! simulator, the likelihood and the residual transform run on.

use crate::error::{HawkesError, Result};

/// Default geometric spacing of the exponential scales.
pub const DEFAULT_SPACING: f64 = 5.0;
/// Default number of positive exponential terms.
pub const DEFAULT_TERMS: usize = 15;

/// Grid size used to check non-negativity of an exponential sum at construction.
const POSITIVITY_GRID: usize = 1000;

/// φ(τ) = α e^{−βτ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialKernel {
    pub alpha: f64,
    pub beta: f64,
}

impl ExponentialKernel {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(HawkesError::Kernel(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(HawkesError::Kernel(format!("beta must be > 0, got {beta}")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn branching_ratio(&self) -> f64 {
        self.alpha / self.beta
    }
}

/// Hard-cutoff power law: φ(τ) = Θ(τ − τ₀) φ₀ τ₀^ε / τ^{1+ε}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealPowerLaw {
    pub phi0: f64,
    pub epsilon: f64,
    pub tau0: f64,
}

impl IdealPowerLaw {
    pub fn new(phi0: f64, epsilon: f64, tau0: f64) -> Result<Self> {
        if !(phi0 >= 0.0 && phi0.is_finite()) {
            return Err(HawkesError::Kernel(format!("phi0 must be >= 0, got {phi0}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(HawkesError::Kernel(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(tau0 > 0.0 && tau0.is_finite()) {
            return Err(HawkesError::Kernel(format!("tau0 must be > 0, got {tau0}")));
        }
        Ok(Self { phi0, epsilon, tau0 })
    }

    pub fn branching_ratio(&self) -> f64 {
        self.phi0 / self.epsilon
    }

    fn value(&self, tau: f64) -> f64 {
        if tau < self.tau0 {
            0.0
        } else {
            self.phi0 * self.tau0.powf(self.epsilon) / tau.powf(1.0 + self.epsilon)
        }
    }

    fn cumulative(&self, tau: f64) -> f64 {
        if tau <= self.tau0 {
            0.0
        } else {
            -self.branching_ratio() * (self.epsilon * (self.tau0 / tau).ln()).exp_m1()
        }
    }
}

/// A finite sum of exponentials, φ(τ) = Σ_k c_k e^{−τ/s_k}.
///
/// Amplitudes may be negative as long as the total stays non-negative for
/// every τ ≥ 0; constructors that can produce negative terms check this.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    amplitudes: Vec<f64>,
    scales: Vec<f64>,
}

impl ExpSum {
    pub fn new(amplitudes: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != scales.len() || amplitudes.is_empty() {
            return Err(HawkesError::Kernel(
                "amplitudes and scales must be non-empty and of equal length".into(),
            ));
        }
        if let Some(s) = scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(HawkesError::Kernel(format!("scale must be > 0, got {s}")));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(HawkesError::Kernel("non-finite amplitude".into()));
        }
        let sum = Self { amplitudes, scales };
        sum.check_non_negative()?;
        Ok(sum)
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Decay times s_k in seconds.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.scales)
            .map(|(c, s)| c * (-tau / s).exp())
            .sum()
    }

    pub fn cumulative(&self, tau: f64) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.scales)
            .map(|(c, s)| -c * s * (-tau / s).exp_m1())
            .sum()
    }

    pub fn branching_ratio(&self) -> f64 {
        self.amplitudes.iter().zip(&self.scales).map(|(c, s)| c * s).sum()
    }

    /// Largest decay time.
    pub fn max_scale(&self) -> f64 {
        self.scales.iter().copied().fold(0.0, f64::max)
    }

    fn check_non_negative(&self) -> Result<()> {
        if self.amplitudes.iter().all(|&c| c >= 0.0) {
            return Ok(());
        }
        let lo = self.scales.iter().copied().fold(f64::INFINITY, f64::min) * 1e-3;
        let hi = self.max_scale() * 50.0;
        let ratio = (hi / lo).ln();
        // tolerance relative to the positive part at each point
        for i in 0..POSITIVITY_GRID {
            let tau = lo * (ratio * i as f64 / (POSITIVITY_GRID - 1) as f64).exp();
            let mut pos = 0.0;
            let mut total = 0.0;
            for (c, s) in self.amplitudes.iter().zip(&self.scales) {
                let v = c * (-tau / s).exp();
                total += v;
                if v > 0.0 {
                    pos += v;
                }
            }
            if total < -1e-12 * pos {
                return Err(HawkesError::Kernel(format!(
                    "kernel is negative at tau = {tau:e} (phi = {total:e})"
                )));
            }
        }
        Ok(())
    }
}

/// Sum-of-exponentials approximation of a power law with a smooth cutoff.
///
/// φ(τ) = (n/Z) [ Σ_{i=0}^{M−1} ξ_i^{−(1+ε)} e^{−τ/ξ_i} − S e^{−τ/ξ_{−1}} ],
/// ξ_i = τ₀ m^i. S makes φ(0) = 0 and Z makes ∫φ = n.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxPowerLaw {
    n: f64,
    epsilon: f64,
    tau0: f64,
    spacing: f64,
    terms: usize,
    z: f64,
    s: f64,
    /// Term 0 is the negative ξ₋₁ term, followed by ξ₀ … ξ_{M−1}.
    sum: ExpSum,
}

impl ApproxPowerLaw {
    /// Kernel with the default spacing m = 5 and M = 15 terms.
    pub fn with_defaults(n: f64, epsilon: f64, tau0: f64) -> Result<Self> {
        Self::new(n, epsilon, tau0, DEFAULT_SPACING, DEFAULT_TERMS)
    }

    pub fn new(n: f64, epsilon: f64, tau0: f64, spacing: f64, terms: usize) -> Result<Self> {
        if !(n >= 0.0 && n.is_finite()) {
            return Err(HawkesError::Kernel(format!("n must be >= 0, got {n}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(HawkesError::Kernel(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(tau0 > 0.0 && tau0.is_finite()) {
            return Err(HawkesError::Kernel(format!("tau0 must be > 0, got {tau0}")));
        }
        if !(spacing > 1.0 && spacing.is_finite()) {
            return Err(HawkesError::Kernel(format!("spacing m must be > 1, got {spacing}")));
        }
        if terms == 0 {
            return Err(HawkesError::Kernel("M must be at least 1".into()));
        }
        let xi: Vec<f64> = (0..terms).map(|i| tau0 * spacing.powi(i as i32)).collect();
        let weights: Vec<f64> = xi.iter().map(|x| x.powf(-(1.0 + epsilon))).collect();
        let (sum, z, s) = normalized_sum(n, &xi, &weights, tau0 / spacing)?;
        Ok(Self {
            n,
            epsilon,
            tau0,
            spacing,
            terms,
            z,
            s,
            sum,
        })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    /// Geometric spacing m.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of positive terms M.
    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn normalizer(&self) -> f64 {
        self.z
    }

    /// Amplitude S of the negative term (before the n/Z factor).
    pub fn zero_coefficient(&self) -> f64 {
        self.s
    }

    /// Scales ξ₋₁, ξ₀, …, ξ_{M−1}.
    pub fn xi(&self) -> &[f64] {
        self.sum.scales()
    }

    pub fn exp_sum(&self) -> &ExpSum {
        &self.sum
    }
}

/// Builds n/Z (Σ w_i e^{−τ/ξ_i} − S e^{−τ/ξ₋₁}) with S = Σ w_i and Z = Σ w_i ξ_i − S ξ₋₁.
pub(crate) fn normalized_sum(n: f64, xi: &[f64], weights: &[f64], xi_neg: f64) -> Result<(ExpSum, f64, f64)> {
    let s: f64 = weights.iter().sum();
    let z: f64 = weights.iter().zip(xi).map(|(w, x)| w * x).sum::<f64>() - s * xi_neg;
    if !(z > 0.0 && z.is_finite() && s.is_finite()) {
        return Err(HawkesError::Kernel(format!("degenerate normalizer Z = {z:e}")));
    }
    let scale = n / z;
    let mut amplitudes = Vec::with_capacity(xi.len() + 1);
    let mut scales = Vec::with_capacity(xi.len() + 1);
    amplitudes.push(-scale * s);
    scales.push(xi_neg);
    for (w, x) in weights.iter().zip(xi) {
        amplitudes.push(scale * w);
        scales.push(*x);
    }
    Ok((ExpSum::new(amplitudes, scales)?, z, s))
}

/// Kernel family tag plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Exponential(ExponentialKernel),
    IdealPowerLaw(IdealPowerLaw),
    ApproxPowerLaw(ApproxPowerLaw),
    /// Arbitrary non-negative exponential sum (used for spliced kernels).
    SumOfExponentials(ExpSum),
}

impl KernelSpec {
    pub fn exponential(alpha: f64, beta: f64) -> Result<Self> {
        ExponentialKernel::new(alpha, beta).map(Self::Exponential)
    }

    pub fn ideal_power_law(phi0: f64, epsilon: f64, tau0: f64) -> Result<Self> {
        IdealPowerLaw::new(phi0, epsilon, tau0).map(Self::IdealPowerLaw)
    }

    pub fn approx_power_law(n: f64, epsilon: f64, tau0: f64, m: f64, terms: usize) -> Result<Self> {
        ApproxPowerLaw::new(n, epsilon, tau0, m, terms).map(Self::ApproxPowerLaw)
    }

    /// φ(τ); errors on negative lags.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        check_lag(tau)?;
        Ok(self.value(tau))
    }

    /// Φ(τ) = ∫₀^τ φ(s) ds; errors on negative lags.
    pub fn cumulative(&self, tau: f64) -> Result<f64> {
        check_lag(tau)?;
        Ok(self.cumulative_unchecked(tau))
    }

    pub(crate) fn value(&self, tau: f64) -> f64 {
        match self {
            Self::Exponential(k) => k.alpha * (-k.beta * tau).exp(),
            Self::IdealPowerLaw(k) => k.value(tau),
            // S cancels the positive terms at the origin; rounding must not leak through
            Self::ApproxPowerLaw(_) if tau == 0.0 => 0.0,
            Self::ApproxPowerLaw(k) => k.sum.value(tau),
            Self::SumOfExponentials(k) => k.value(tau),
        }
    }

    pub(crate) fn cumulative_unchecked(&self, tau: f64) -> f64 {
        if tau == f64::INFINITY {
            return self.branching_ratio();
        }
        match self {
            Self::Exponential(k) => -k.branching_ratio() * (-k.beta * tau).exp_m1(),
            Self::IdealPowerLaw(k) => k.cumulative(tau),
            Self::ApproxPowerLaw(k) => k.sum.cumulative(tau),
            Self::SumOfExponentials(k) => k.cumulative(tau),
        }
    }

    pub fn branching_ratio(&self) -> f64 {
        match self {
            Self::Exponential(k) => k.branching_ratio(),
            Self::IdealPowerLaw(k) => k.branching_ratio(),
            Self::ApproxPowerLaw(k) => k.n,
            Self::SumOfExponentials(k) => k.branching_ratio(),
        }
    }

    /// Exponential-sum view, if the kernel has one.
    pub fn exp_sum(&self) -> Option<ExpSum> {
        match self {
            Self::Exponential(k) => Some(ExpSum {
                amplitudes: vec![k.alpha],
                scales: vec![1.0 / k.beta],
            }),
            Self::IdealPowerLaw(_) => None,
            Self::ApproxPowerLaw(k) => Some(k.sum.clone()),
            Self::SumOfExponentials(k) => Some(k.clone()),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Exponential(_) => "exponential",
            Self::IdealPowerLaw(_) => "ideal-power-law",
            Self::ApproxPowerLaw(_) => "approx-power-law",
            Self::SumOfExponentials(_) => "sum-of-exponentials",
        }
    }
}

fn check_lag(tau: f64) -> Result<()> {
    if tau >= 0.0 {
        Ok(())
    } else {
        Err(HawkesError::Domain(format!("lag must be >= 0, got {tau}")))
    }
}

/// Base intensity plus kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesParams {
    pub mu: f64,
    pub kernel: KernelSpec,
}

impl HawkesParams {
    pub fn new(mu: f64, kernel: KernelSpec) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(HawkesError::Domain(format!("mu must be >= 0, got {mu}")));
        }
        Ok(Self { mu, kernel })
    }

    pub fn branching_ratio(&self) -> f64 {
        self.kernel.branching_ratio()
    }

    /// True when n ≥ 1 and stationary averages are undefined.
    pub fn is_critical(&self) -> bool {
        self.branching_ratio() >= 1.0
    }
}

/// Average intensity Λ = μ / (1 − n).
pub fn mean_intensity(params: &HawkesParams) -> Result<f64> {
    let n = params.branching_ratio();
    if n >= 1.0 {
        return Err(HawkesError::Critical { n });
    }
    Ok(params.mu / (1.0 - n))
}

/// Exponents implied by a critical power-law kernel with tail exponent ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryRelations {
    /// Decay exponent of the event-rate autocovariance, 1 − 2ε.
    pub alpha_cov: f64,
    /// Hurst exponent of the counting process, ½ + ε.
    pub hurst: f64,
}

pub fn theory_relations(epsilon: f64) -> Result<TheoryRelations> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(HawkesError::Domain(format!(
            "epsilon must lie in (0, 1/2), got {epsilon}"
        )));
    }
    Ok(TheoryRelations {
        alpha_cov: 1.0 - 2.0 * epsilon,
        hurst: 0.5 + epsilon,
    })
}
