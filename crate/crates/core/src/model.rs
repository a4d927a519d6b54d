//! Analytic reference distributions for the number of approvers.
//!
//! Three families are provided, all supported on n >= 1 approvers:
//!
//! * [`urts_distribution`]: uniform random tip selection,
//! * [`walk_distribution`]: unbiased random walk selection under the linear
//!   exit-profile model `f(x) = slope * (x - 0.5)`,
//! * [`walk_visit_distribution`]: the same, reweighted by how often an
//!   unbiased walk actually visits a transaction.
//!
//! The closed forms are checked against [`quadrature_reference`], an adaptive
//! numerical integration of the underlying integral forms, which acts as the
//! independent second route for every closed-form value.

use crate::error::{Error, Result};
use crate::tangle::EdgePolicy;
use statrs::function::gamma::ln_gamma;

/// Truncation index for the infinite sums. The effective Poisson rate never
/// exceeds `2 * selection_rate < 2`, whose tail mass beyond 40 is far below
/// 1e-12.
pub const DEFAULT_SUPPORT_MAX: u32 = 40;

/// Parameters of the analytic models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Honest transaction rate in units of the reveal delay.
    pub rate: f64,
    pub policy: EdgePolicy,
    /// Slope of the linear exit-profile model, in `[0, 2]`.
    pub slope: f64,
    /// Largest approver count kept in the truncated support.
    pub support_max: u32,
}

impl ModelParams {
    pub fn new(rate: f64, policy: EdgePolicy, slope: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::InvalidConfig(format!("rate must be positive, got {rate}")));
        }
        if !(0.0..=2.0).contains(&slope) {
            return Err(Error::InvalidConfig(format!("slope must lie in [0, 2], got {slope}")));
        }
        Ok(Self { rate, policy, slope, support_max: DEFAULT_SUPPORT_MAX })
    }

    pub fn with_support_max(mut self, support_max: u32) -> Self {
        self.support_max = support_max;
        self
    }

    /// The per-transaction approval rate for this configuration.
    pub fn selection_rate(&self) -> f64 {
        selection_rate(self.rate, self.policy)
    }
}

/// Expected tip count under uniform random tip selection, `1 + 2 * rate`.
pub fn expected_tip_count(rate: f64) -> f64 {
    1.0 + 2.0 * rate
}

/// Rate at which an unapproved transaction accumulates approval edges while
/// it is a tip. Under the multi-edge policy both selections of an arrival
/// count; the single-edge policy loses the duplicated draws.
pub fn selection_rate(rate: f64, policy: EdgePolicy) -> f64 {
    let tips = expected_tip_count(rate);
    let base = 2.0 * rate / tips;
    match policy {
        EdgePolicy::Multi => base,
        EdgePolicy::Single => base * (1.0 - 0.5 / tips),
    }
}

/// Poisson probability mass `e^{-gamma} gamma^n / n!`.
///
/// Evaluated in log space for n > 20 so that large-n masses stay accurate.
pub fn poisson_pmf(gamma: f64, n: u32) -> Result<f64> {
    if gamma < 0.0 {
        return Err(Error::NegativeRate(gamma));
    }
    if gamma == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if n <= 20 {
        let mut factorial = 1.0;
        for k in 1..=n {
            factorial *= k as f64;
        }
        Ok((-gamma).exp() * gamma.powi(n as i32) / factorial)
    } else {
        Ok((n as f64 * gamma.ln() - gamma - ln_gamma(n as f64 + 1.0)).exp())
    }
}

/// A finite discrete distribution over approver counts.
///
/// Analytic models are supported on n >= 1; empirical samples may include
/// n = 0. Queries outside the stored support return zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    min_n: u32,
    probs: Vec<f64>,
}

impl ProbabilityVector {
    /// Wraps raw probabilities starting at `min_n`, rescaling them to sum
    /// to one (truncation residue is redistributed proportionally).
    pub fn from_probs(min_n: u32, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptySample);
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidConfig("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidConfig("probabilities sum to zero".into()));
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(Self { min_n, probs })
    }

    /// Empirical distribution of a sample of counts.
    pub fn from_counts(sample: &[u32]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let max = *sample.iter().max().unwrap();
        let mut probs = vec![0.0; max as usize + 1];
        for &n in sample {
            probs[n as usize] += 1.0;
        }
        Self::from_probs(0, probs)
    }

    /// A distribution concentrated on a single count.
    pub fn point_mass(n: u32) -> Self {
        Self { min_n: n, probs: vec![1.0] }
    }

    pub fn min_n(&self) -> u32 {
        self.min_n
    }

    pub fn max_n(&self) -> u32 {
        self.min_n + self.probs.len() as u32 - 1
    }

    pub fn prob(&self, n: u32) -> f64 {
        if n < self.min_n {
            return 0.0;
        }
        self.probs.get((n - self.min_n) as usize).copied().unwrap_or(0.0)
    }

    /// Survival mass `Q(n) = sum_{m >= n} P(m)`.
    pub fn survival(&self, n: u32) -> f64 {
        (n.max(self.min_n)..=self.max_n()).map(|m| self.prob(m)).sum()
    }

    pub fn mean(&self) -> f64 {
        (self.min_n..=self.max_n()).map(|n| n as f64 * self.prob(n)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(i, &p)| (self.min_n + i as u32, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// URTS approver distribution: a Poisson shifted to support n >= 1.
pub fn urts_distribution(params: &ModelParams) -> Result<ProbabilityVector> {
    let rate = params.selection_rate();
    let probs: Vec<f64> = (1..=params.support_max)
        .map(|n| poisson_pmf(rate, n - 1))
        .collect::<Result<_>>()?;
    ProbabilityVector::from_probs(1, probs)
}

/// URTS approver distribution including the chance that the first approver
/// attaches both of its edges to the same transaction.
///
/// Only the multi-edge policy admits the double edge; for the single-edge
/// policy this coincides with [`urts_distribution`]. The refinement matters
/// in the low-load regime, where the plain shifted Poisson misses the extra
/// edge mass.
pub fn urts_distribution_low_load(params: &ModelParams) -> Result<ProbabilityVector> {
    let rate = params.selection_rate();
    let double_edge = match params.policy {
        EdgePolicy::Multi => 1.0 / expected_tip_count(params.rate),
        EdgePolicy::Single => 0.0,
    };
    let probs: Vec<f64> = (1..=params.support_max)
        .map(|n| {
            let single = poisson_pmf(rate, n - 1)?;
            let double = if n >= 2 { poisson_pmf(rate, n - 2)? } else { 0.0 };
            Ok((1.0 - double_edge) * single + double_edge * double)
        })
        .collect::<Result<_>>()?;
    ProbabilityVector::from_probs(1, probs)
}

/// Slopes at or below this value are treated as the zero-slope limit, where
/// the correction factor is identically one.
const SLOPE_EPSILON: f64 = 1e-6;

/// The exit-profile correction factor
/// `g(n) = integral over x in [0,1] of e^{-f(x) rate} (1 + f(x))^n dx`
/// for the linear profile `f(x) = slope * (x - 0.5)`, in closed form.
///
/// The antiderivative is evaluated at `y = -slope/2` minus `y = +slope/2`;
/// this sign convention is pinned by agreement with the quadrature route
/// (see the module tests).
pub fn profile_factor(n: u32, slope: f64, selection_rate: f64) -> f64 {
    if slope.abs() <= SLOPE_EPSILON {
        return 1.0;
    }
    let half = 0.5 * slope;
    let upper = (half * selection_rate).exp(); // e^{-y rate} at y = -half
    let lower = (-half * selection_rate).exp(); // e^{-y rate} at y = +half
    let mut falling = 1.0; // n! / (n - j)!
    let mut rate_pow = 1.0 / selection_rate; // rate^{-(j+1)}
    let mut sum = 0.0;
    for j in 0..=n {
        let k = n - j;
        let bracket = upper * (1.0 - half).powi(k as i32) - lower * (1.0 + half).powi(k as i32);
        sum += rate_pow * falling * bracket;
        falling *= k as f64;
        rate_pow /= selection_rate;
    }
    sum / slope
}

/// Unbiased-random-walk approver distribution under the linear exit model:
/// the URTS mass times the correction factor at n - 1.
pub fn walk_distribution(params: &ModelParams) -> Result<ProbabilityVector> {
    let rate = params.selection_rate();
    let probs: Vec<f64> = (1..=params.support_max)
        .map(|n| Ok(poisson_pmf(rate, n - 1)? * profile_factor(n - 1, params.slope, rate)))
        .collect::<Result<_>>()?;
    ProbabilityVector::from_probs(1, probs)
}

/// Approver distribution of the transactions an unbiased walk visits: each
/// count is additionally weighted by the exit probability of the site, which
/// shifts mass toward higher approver numbers.
pub fn walk_visit_distribution(params: &ModelParams) -> Result<ProbabilityVector> {
    let rate = params.selection_rate();
    let probs: Vec<f64> = (1..=params.support_max)
        .map(|n| Ok(poisson_pmf(rate, n - 1)? * profile_factor(n, params.slope, rate)))
        .collect::<Result<_>>()?;
    // from_probs normalizes by the explicit truncated sum.
    ProbabilityVector::from_probs(1, probs)
}

/// Numerical-integration route for the walk distributions; the oracle the
/// closed forms are validated against.
///
/// With `weighted` set, evaluates the visit-weighted integral including its
/// normalizer; otherwise the plain expected mass for `n` approvers.
pub fn quadrature_reference(params: &ModelParams, n: u32, weighted: bool) -> Result<f64> {
    let rate = params.selection_rate();
    if weighted {
        let raw = quadrature_visit_mass(rate, params.slope, n)?;
        let mut normalizer = 0.0;
        for m in 1..=params.support_max {
            normalizer += quadrature_visit_mass(rate, params.slope, m)?;
        }
        Ok(raw / normalizer)
    } else {
        quadrature_walk_mass(rate, params.slope, n)
    }
}

/// `integral of e^{-e(x) rate} (e(x) rate)^{n-1} / (n-1)! dx` with
/// `e(x) = 1 + slope (x - 0.5)`.
pub fn quadrature_walk_mass(selection_rate: f64, slope: f64, n: u32) -> Result<f64> {
    integrate(
        |x| {
            let exit = 1.0 + slope * (x - 0.5);
            poisson_pmf(exit * selection_rate, n - 1).unwrap_or(0.0)
        },
        QUADRATURE_TOLERANCE,
    )
}

/// As [`quadrature_walk_mass`] but weighted by the exit probability `e(x)`;
/// un-normalized.
pub fn quadrature_visit_mass(selection_rate: f64, slope: f64, n: u32) -> Result<f64> {
    integrate(
        |x| {
            let exit = 1.0 + slope * (x - 0.5);
            poisson_pmf(exit * selection_rate, n - 1).unwrap_or(0.0) * exit
        },
        QUADRATURE_TOLERANCE,
    )
}

const QUADRATURE_TOLERANCE: f64 = 1e-12;

/// Adaptive Simpson integration on [0, 1].
fn integrate<F: Fn(f64) -> f64>(f: F, tolerance: f64) -> Result<f64> {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(f, a, m, fa, flm, fm);
        let right = simpson(f, m, b, fm, frm, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::QuadratureNonConvergence { target: tol, achieved: delta.abs() });
        }
        let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }

    let (a, b) = (0.0, 1.0);
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(&f, a, b, fa, fm, fb);
    recurse(&f, a, b, fa, fm, fb, whole, tolerance, 48)
}
