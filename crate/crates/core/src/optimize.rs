//! Scalar minimization of the age curves over the offered load.
//!
//! Every supported objective is smooth and unimodal on the supported load
//! range (age diverges at both load extremes with a single interior minimum),
//! so a derivative-free golden-section search is sufficient and simple.

use crate::collision::{asymptotic_individual_age, system_age_closed_form, ChannelParams};
use crate::error::AoiError;

/// Default search bracket over the offered load.
pub const DEFAULT_BRACKET: (f64, f64) = (0.01, 5.0);

/// Default width at which the bracket stops shrinking.
pub const DEFAULT_XTOL: f64 = 1e-6;

/// Inverse golden ratio, the bracket shrink factor per evaluation.
const INVPHI: f64 = 0.618_033_988_749_894_9;

/// Age curve to minimize over the offered load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadObjective {
    /// Closed-form average system age at fixed reception probability and
    /// service rate.
    SystemAge { p_c: f64, mu: f64 },
    /// Large-population individual age `(1 + 1/rho) e^rho`.
    AsymptoticIndividual,
}

impl LoadObjective {
    fn validate(&self) -> Result<(), AoiError> {
        if let LoadObjective::SystemAge { p_c, mu } = *self {
            // Constructing parameters at an arbitrary valid load runs the
            // full validation of p_c and mu.
            ChannelParams::from_load(1.0, mu, p_c)?;
        }
        Ok(())
    }

    fn eval(&self, rho: f64) -> f64 {
        match *self {
            LoadObjective::SystemAge { p_c, mu } => {
                let params = ChannelParams::from_load(rho, mu, p_c)
                    .expect("validated parameters and a positive bracket");
                system_age_closed_form(&params).expect("closed form is total on valid params")
            }
            LoadObjective::AsymptoticIndividual => {
                asymptotic_individual_age(rho).expect("positive bracket")
            }
        }
    }
}

/// Minimizes an age objective over the offered load on the given bracket.
/// Returns the minimizing load and the minimum value.
pub fn optimize_load(
    objective: &LoadObjective,
    bracket: (f64, f64),
) -> Result<(f64, f64), AoiError> {
    objective.validate()?;
    let (lo, hi) = bracket;
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(AoiError::InvalidParams(format!(
            "bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    golden_section_min(|rho| objective.eval(rho), lo, hi, DEFAULT_XTOL)
}

/// Golden-section search for the minimum of a unimodal function on `[lo, hi]`,
/// shrinking the bracket until it is narrower than `xtol`. One function
/// evaluation per iteration; the two interior probes are reused across
/// iterations.
///
/// Fails with `BracketError` when the minimum sits on a bracket endpoint,
/// which means the bracket does not enclose an interior minimum.
pub fn golden_section_min(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> Result<(f64, f64), AoiError> {
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(AoiError::InvalidParams(format!(
            "bracket must satisfy lo < hi with finite endpoints, got ({lo}, {hi})"
        )));
    }
    if xtol.is_nan() || xtol <= 0.0 {
        return Err(AoiError::InvalidParams(format!(
            "interval tolerance must be positive, got {xtol}"
        )));
    }
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    if !(f1.is_finite() && f2.is_finite()) {
        return Err(AoiError::InvalidParams(
            "objective returned a non-finite value inside the bracket".into(),
        ));
    }
    while b - a > xtol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = f(x2);
        }
    }
    let (x_star, f_star) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    // A minimum no better than an endpoint value means the true minimum lies
    // on or beyond the boundary.
    if f(lo) <= f_star || f(hi) <= f_star {
        return Err(AoiError::BracketError { lo, hi });
    }
    Ok((x_star, f_star))
}
