//! The unslotted random-access collision channel.
//!
//! Sensors transmit updates as an aggregate Poisson process of rate `lambda`;
//! each transmission lasts an exponential time with rate `mu`. An update is
//! lost whenever any part of its transmission overlaps another transmission,
//! and a collision-free update is still lost with probability `1 - p_c`. The
//! monitor's age resets to the update's age on every successful delivery.
//!
//! This module builds the finite chain that tracks the number of concurrent
//! transmissions (truncated at `M`), evaluates the closed-form average age
//! and its companion bounds, and carries an independent recursive solver for
//! the truncated chain used as a cross-check on the generic machinery.

use crate::error::{AoiError, RangeWarning};
use crate::series::{poisson_tail, SeriesTerms};
use crate::shs::{AgeSolution, ResetMap, ShsModel, Transition};

/// Largest offered load rho for which the series evaluations are well
/// conditioned in double precision; larger loads are computed with a warning.
pub const SUPPORTED_MAX_LOAD: f64 = 10.0;

/// Largest truncation level exercised by the supported parameter range.
pub const SUPPORTED_MAX_TRUNCATION: usize = 500;

/// Relative size below which a closed-form tail term stops the summation.
const CLOSED_FORM_TERM_TOL: f64 = 1e-14;

/// Physical description of the channel: update arrival rate, service rate,
/// and the probability that a collision-free update is received correctly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    lambda: f64,
    mu: f64,
    p_c: f64,
}

impl ChannelParams {
    pub fn new(lambda: f64, mu: f64, p_c: f64) -> Result<Self, AoiError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(AoiError::InvalidParams(format!(
                "arrival rate must be positive and finite, got {lambda}"
            )));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(AoiError::InvalidParams(format!(
                "service rate must be positive and finite, got {mu}"
            )));
        }
        if !(p_c > 0.0 && p_c <= 1.0) {
            return Err(AoiError::InvalidParams(format!(
                "reception probability must lie in (0, 1], got {p_c} \
                 (at 0 every update is lost and the age diverges)"
            )));
        }
        Ok(ChannelParams { lambda, mu, p_c })
    }

    /// Builds parameters from the offered load `rho = lambda / mu`.
    pub fn from_load(rho: f64, mu: f64, p_c: f64) -> Result<Self, AoiError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(AoiError::InvalidParams(format!(
                "offered load must be positive and finite, got {rho}"
            )));
        }
        Self::new(rho * mu, mu, p_c)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn p_c(&self) -> f64 {
        self.p_c
    }

    /// Probability that a collision-free update is lost to a channel error.
    pub fn p_e(&self) -> f64 {
        1.0 - self.p_c
    }

    /// Offered load `lambda / mu`.
    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }

    /// Warns when the offered load sits outside the supported range; every
    /// computation still proceeds.
    pub fn range_warning(&self) -> Option<RangeWarning> {
        let rho = self.rho();
        if rho > SUPPORTED_MAX_LOAD {
            Some(RangeWarning {
                message: format!(
                    "offered load {rho} exceeds the supported range (0, {SUPPORTED_MAX_LOAD}]; \
                     exponential amplification degrades the series evaluations"
                ),
            })
        } else {
            None
        }
    }
}

/// Warns when the truncation level exceeds the supported range.
pub fn truncation_warning(m: usize) -> Option<RangeWarning> {
    if m > SUPPORTED_MAX_TRUNCATION {
        Some(RangeWarning {
            message: format!(
                "truncation level {m} exceeds the supported maximum {SUPPORTED_MAX_TRUNCATION}"
            ),
        })
    } else {
        None
    }
}

/// How to choose the truncation level `M` (the largest number of concurrent
/// transmissions the finite chain represents).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationPolicy {
    /// Solve at exactly this level.
    Fixed(usize),
    /// Grow `M` until the discarded stationary mass drops below
    /// `tail_mass_bound` and a further increase of 10 levels moves the age by
    /// less than `age_convergence_tol` relative.
    Adaptive {
        tail_mass_bound: f64,
        age_convergence_tol: f64,
    },
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::Adaptive {
            tail_mass_bound: 1e-12,
            age_convergence_tol: 1e-9,
        }
    }
}

/// Builds the concurrency-tracking chain for the collision channel.
///
/// State `k` holds the number of in-flight transmissions. The age vector is
/// `[x1, x2]`: `x1` follows the update currently relevant to the monitor and
/// `x2` is the monitor age itself. Transitions:
///
/// - `0 -> 1` at `lambda`: a transmission starts on an idle channel and
///   samples a fresh update, `x1 := 0`.
/// - `1 -> 0` at `p_c * mu`: the lone transmission completes and is received,
///   `x2 := x1`.
/// - `1 -> 0` at `p_e * mu`: the lone transmission completes but is lost to a
///   channel error, `x1 := x2` (omitted when `p_c = 1`).
/// - `1 -> 2` at `lambda`: a second transmission starts, everything in flight
///   is now doomed, `x1 := x2`.
/// - `k -> k+1` at `lambda` for `2 <= k <= M-1` and `k -> k-1` at `k * mu`
///   for `2 <= k <= M`, both leaving the age vector unchanged.
pub fn build_chain(params: &ChannelParams, m: usize) -> Result<ShsModel, AoiError> {
    if m < 3 {
        return Err(AoiError::InvalidParams(format!(
            "truncation level must be at least 3 (states for an idle channel, a clean \
             transmission, and at least one pure collision level), got {m}"
        )));
    }
    let lambda = params.lambda;
    let mu = params.mu;
    let fresh = ResetMap::from_rows(&[&[0, 0], &[0, 1]]).expect("static map");
    let deliver = ResetMap::from_rows(&[&[1, 1], &[0, 0]]).expect("static map");
    let discard = ResetMap::from_rows(&[&[0, 0], &[1, 1]]).expect("static map");
    let identity = ResetMap::identity(2);

    let mut transitions = vec![
        Transition {
            from: 0,
            to: 1,
            rate: lambda,
            reset: fresh,
        },
        Transition {
            from: 1,
            to: 0,
            rate: params.p_c * mu,
            reset: deliver,
        },
    ];
    // A zero-rate edge would violate the model invariants, so the error
    // branch only exists when errors can happen.
    if params.p_e() > 0.0 {
        transitions.push(Transition {
            from: 1,
            to: 0,
            rate: params.p_e() * mu,
            reset: discard.clone(),
        });
    }
    transitions.push(Transition {
        from: 1,
        to: 2,
        rate: lambda,
        reset: discard,
    });
    for k in 2..m {
        transitions.push(Transition {
            from: k,
            to: k + 1,
            rate: lambda,
            reset: identity.clone(),
        });
    }
    for k in 2..=m {
        transitions.push(Transition {
            from: k,
            to: k - 1,
            rate: k as f64 * mu,
            reset: identity.clone(),
        });
    }
    ShsModel::new(m + 1, 2, transitions)
}

/// Full age solution of the truncated chain (stationary distribution and
/// per-state correlation vectors).
pub fn system_age_solution(params: &ChannelParams, m: usize) -> Result<AgeSolution, AoiError> {
    build_chain(params, m)?.solve_age()
}

/// Average system age of the chain truncated at `M` concurrent transmissions.
pub fn system_age_truncated(params: &ChannelParams, m: usize) -> Result<f64, AoiError> {
    Ok(system_age_solution(params, m)?.delta)
}

/// Average system age under a truncation policy; returns the age and the
/// truncation level actually used.
pub fn system_age_with_policy(
    params: &ChannelParams,
    policy: &TruncationPolicy,
) -> Result<(f64, usize), AoiError> {
    match *policy {
        TruncationPolicy::Fixed(m) => Ok((system_age_truncated(params, m)?, m)),
        TruncationPolicy::Adaptive {
            tail_mass_bound,
            age_convergence_tol,
        } => {
            if !(tail_mass_bound > 0.0 && age_convergence_tol > 0.0) {
                return Err(AoiError::InvalidParams(
                    "adaptive truncation bounds must be positive".into(),
                ));
            }
            let rho = params.rho();
            let mut m = (rho.ceil() as usize + 3).max(3);
            while poisson_tail(rho, m + 1) >= tail_mass_bound {
                m += 1;
                if m > 4 * SUPPORTED_MAX_TRUNCATION {
                    return Err(AoiError::InvalidParams(format!(
                        "adaptive truncation exceeded M = {m} without meeting the tail \
                         bound; the offered load is outside the supported range"
                    )));
                }
            }
            let mut delta = system_age_truncated(params, m)?;
            loop {
                let next = system_age_truncated(params, m + 10)?;
                if (delta - next).abs() < age_convergence_tol * delta.abs() {
                    return Ok((next, m + 10));
                }
                m += 10;
                delta = next;
                if m > 4 * SUPPORTED_MAX_TRUNCATION {
                    return Err(AoiError::InvalidParams(format!(
                        "truncated age did not converge by M = {m}"
                    )));
                }
            }
        }
    }
}

/// Closed-form average system age of the untruncated channel:
///
/// ```text
/// Delta = (1+rho) e^rho / (mu p_c rho) + beta_1 / mu + (3+rho) beta_2 / (2 mu)
///       + rho (1+rho) beta_2 gamma_3 / (6 mu) + sum_{j>=3} beta_j gamma_j / (j mu)
/// ```
///
/// The tail is summed until a term falls below 1e-14 of the running total.
pub fn system_age_closed_form(params: &ChannelParams) -> Result<f64, AoiError> {
    closed_form(params.rho(), params.mu(), params.p_c())
}

fn closed_form(rho: f64, mu: f64, p_c: f64) -> Result<f64, AoiError> {
    let s = SeriesTerms::compute(rho)?;
    let mut total = (1.0 + rho) * rho.exp() / (p_c * rho)
        + s.beta(1)
        + (3.0 + rho) * s.beta(2) / 2.0
        + rho * (1.0 + rho) * s.beta(2) * s.gamma(3) / 6.0;
    for j in 3..=s.j_max() {
        let term = s.beta(j) * s.gamma(j) / j as f64;
        total += term;
        if term < CLOSED_FORM_TERM_TOL * total {
            break;
        }
    }
    Ok(total / mu)
}

/// Intermediate values of the independent recursive solver for the truncated
/// chain. Every state other than 1 carries equal age components, so a single
/// scalar per state suffices; state 1 keeps both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionAge {
    /// Correlation of either age component with the idle state.
    pub v0: f64,
    /// Update-age component in the single-transmission state.
    pub v1_update: f64,
    /// Monitor-age component in the single-transmission state.
    pub v1_monitor: f64,
    /// Either component in the two-transmission state.
    pub v2: f64,
    /// Average system age of the truncated chain.
    pub delta: f64,
    /// Truncation level used.
    pub m: usize,
}

/// Solves the truncated chain by forward recursion instead of a linear
/// system: closed expressions for states 0, 1, and 2 seed
/// `v_k = (rho/k) v_{k-1} + beta_{k|M} / (k mu)` for the pure-collision
/// states, where `beta_{k|M}` is the truncation-renormalized tail mass. This
/// is the module's primary cross-check on the generic solver: the two must
/// agree to within 1e-9 relative.
pub fn system_age_recursion(params: &ChannelParams, m: usize) -> Result<RecursionAge, AoiError> {
    if m < 3 {
        return Err(AoiError::InvalidParams(format!(
            "truncation level must be at least 3, got {m}"
        )));
    }
    let rho = params.rho();
    let mu = params.mu();
    let p_c = params.p_c();

    // Stationary weights of the truncated chain are rho^i / i!, renormalized.
    let mut weights = vec![0.0; m + 1];
    weights[0] = 1.0;
    for i in 1..=m {
        weights[i] = weights[i - 1] * rho / i as f64;
    }
    let total: f64 = weights.iter().sum();
    // tail[k] = sum of weights k..=m; accumulate upward so that small terms
    // are added first.
    let mut tail = vec![0.0; m + 2];
    for i in (0..=m).rev() {
        tail[i] = tail[i + 1] + weights[i];
    }
    let beta_trunc = |k: usize| tail[k] / total;

    let v0 = (1.0 + rho) / (mu * rho * p_c);
    let b1 = beta_trunc(1);
    let b2 = beta_trunc(2);
    let v1_update = rho * rho * v0 / (1.0 + rho) + b1 / mu;
    let v1_monitor = rho * v0 + b1 / mu;
    let v2 = rho * rho * v0 / 2.0 + (b2 + rho * b1) / (2.0 * mu);

    let mut delta = v0 + v1_monitor + v2;
    let mut prev = v2;
    for k in 3..=m {
        let vk = rho / k as f64 * prev + beta_trunc(k) / (k as f64 * mu);
        delta += vk;
        prev = vk;
    }
    Ok(RecursionAge {
        v0,
        v1_update,
        v1_monitor,
        v2,
        delta,
        m,
    })
}

/// Lower bound on the average system age: `(1 + 1/rho) e^rho / (mu p_c)`,
/// the age a single source would see if every collision-free update of the
/// aggregate process were its own.
pub fn lower_bound(params: &ChannelParams) -> Result<f64, AoiError> {
    Ok(asymptotic_individual_age(params.rho())? / (params.mu() * params.p_c()))
}

/// Average system age of the slotted baseline at the same offered load, in
/// slot-time units: each slot delivers a fresh update with probability
/// `rho e^{-rho}`, giving `1/2 + e^rho / rho`.
pub fn slotted_age(rho: f64) -> Result<f64, AoiError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(AoiError::InvalidParams(format!(
            "offered load must be positive and finite, got {rho}"
        )));
    }
    Ok(0.5 + rho.exp() / rho)
}

/// Average individual age for one of `n` symmetric sources sharing the
/// channel: a collision-free update belongs to the selected source with
/// probability `1/n`, so the evaluation is the closed form with the
/// reception probability replaced by `1/n`.
///
/// The reception probability in `params` is deliberately not used: how
/// channel errors compose with source selection is not specified by this
/// model, so the formula assumes error-free reception.
pub fn individual_age(params: &ChannelParams, n: usize) -> Result<f64, AoiError> {
    if n == 0 {
        return Err(AoiError::InvalidParams(
            "the number of sources must be at least 1".into(),
        ));
    }
    closed_form(params.rho(), params.mu(), 1.0 / n as f64)
}

/// Large-population limit of the individual age with per-source load held
/// fixed: `(1 + 1/rho) e^rho`, in units of the mean transmission time times
/// the population size.
pub fn asymptotic_individual_age(rho: f64) -> Result<f64, AoiError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(AoiError::InvalidParams(format!(
            "offered load must be positive and finite, got {rho}"
        )));
    }
    Ok((1.0 + 1.0 / rho) * rho.exp())
}
