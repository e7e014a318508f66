//! Tail series used by the closed-form average age.
//!
//! For offered load `rho` and `K ~ Poisson(rho)`, the closed form consumes
//! `beta_j = P{K >= j}` and the normalized tail series
//! `gamma_j = sum_{k>=0} j! rho^k / (j+k)!`. Both are precomputed here up to
//! a truncation index past which the terms are negligible.

use crate::error::AoiError;

/// Relative size at which a series term is considered negligible.
const TERM_EPS: f64 = 1e-16;

/// Extra indices carried above `j_max` before seeding the backward gamma
/// recursion; the seed error shrinks by roughly `rho / j` per step, so this
/// buffer drives it far below double precision for every supported load.
const GAMMA_SEED_BUFFER: usize = 60;

/// Poisson(rho) probability mass at `i`, by recurrence from `e^{-rho}`.
pub(crate) fn poisson_pmf(rho: f64, i: usize) -> f64 {
    let mut t = (-rho).exp();
    for k in 1..=i {
        t *= rho / k as f64;
    }
    t
}

/// Precomputed `beta_j` and `gamma_j` for `j = 1..=j_max`.
#[derive(Debug, Clone)]
pub struct SeriesTerms {
    rho: f64,
    beta: Vec<f64>,
    gamma: Vec<f64>,
}

impl SeriesTerms {
    /// Computes both series up to an automatically chosen index: the smallest
    /// `j` past the Poisson mode where `beta_j` falls below `1e-16`, so that
    /// any series built from these terms can stop on its own tolerance before
    /// running out of entries.
    pub fn compute(rho: f64) -> Result<Self, AoiError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(AoiError::InvalidParams(format!(
                "offered load must be positive and finite, got {rho}"
            )));
        }
        let mut j_max = rho.ceil() as usize + 2;
        loop {
            let tail = poisson_tail(rho, j_max);
            if tail < TERM_EPS || j_max > 10_000 {
                break;
            }
            j_max += (j_max / 4).max(4);
        }
        Self::with_max_index(rho, j_max)
    }

    /// Computes both series up to an explicit index.
    pub fn with_max_index(rho: f64, j_max: usize) -> Result<Self, AoiError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(AoiError::InvalidParams(format!(
                "offered load must be positive and finite, got {rho}"
            )));
        }
        if j_max == 0 {
            return Err(AoiError::InvalidParams(
                "series truncation index must be at least 1".into(),
            ));
        }
        let beta = (1..=j_max).map(|j| poisson_tail(rho, j)).collect();

        // gamma_j satisfies gamma_j = 1 + rho/(j+1) * gamma_{j+1}. Running it
        // downward from a far seed is stable: each step multiplies the seed
        // error by rho/(j+1), while the forward direction would amplify it.
        // The seed approximates the tail by the geometric majorant with ratio
        // rho/(seed+1).
        let seed_index = j_max + GAMMA_SEED_BUFFER + 2 * rho.ceil() as usize;
        let mut g = 1.0 / (1.0 - rho / (seed_index as f64 + 1.0));
        let mut gamma = vec![0.0; j_max];
        for j in (1..seed_index).rev() {
            g = 1.0 + rho / (j as f64 + 1.0) * g;
            if j <= j_max {
                gamma[j - 1] = g;
            }
        }
        Ok(SeriesTerms { rho, beta, gamma })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Largest index carried by this table.
    pub fn j_max(&self) -> usize {
        self.beta.len()
    }

    /// `beta_j = P{K >= j}`, valid for `1 <= j <= j_max`.
    pub fn beta(&self, j: usize) -> f64 {
        self.beta[j - 1]
    }

    /// `gamma_j = sum_{k>=0} j! rho^k / (j+k)!`, valid for `1 <= j <= j_max`.
    pub fn gamma(&self, j: usize) -> f64 {
        self.gamma[j - 1]
    }
}

/// Poisson(rho) tail probability `P{K >= j}`, by direct summation from the
/// first tail term until the running sum stops changing at relative 1e-16.
/// Stable for the supported loads: all terms are non-negative, and past the
/// mode they decay faster than geometrically.
pub fn poisson_tail(rho: f64, j: usize) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let mut term = poisson_pmf(rho, j);
    let mut sum = term;
    let mut i = j;
    loop {
        i += 1;
        term *= rho / i as f64;
        sum += term;
        // Keep summing while terms can still grow (below the mode at i ~ rho).
        if term < TERM_EPS * sum && i as f64 > rho {
            return sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct-summation oracle for gamma, independent of the backward
    /// recursion used by `SeriesTerms`.
    fn gamma_direct(rho: f64, j: usize) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0usize;
        loop {
            k += 1;
            term *= rho / (j + k) as f64;
            sum += term;
            if term < 1e-18 * sum && (j + k) as f64 > rho {
                return sum;
            }
        }
    }

    #[test]
    fn beta_one_is_probability_of_any_arrival() {
        // P{K >= 1} = 1 - e^{-rho}.
        let s = SeriesTerms::compute(0.5).unwrap();
        assert!((s.beta(1) - 0.393_469_340_287_366_6).abs() < 1e-15);
    }

    #[test]
    fn low_gammas_match_their_closed_forms() {
        // gamma_1 = (e^rho - 1)/rho and gamma_2 = 2(e^rho - 1 - rho)/rho^2,
        // obtained by reindexing the exponential series.
        for rho in [0.1, 0.5195, 1.0, 2.0, 7.5] {
            let s = SeriesTerms::compute(rho).unwrap();
            let g1 = (rho.exp() - 1.0) / rho;
            let g2 = 2.0 * (rho.exp() - 1.0 - rho) / (rho * rho);
            assert!((s.gamma(1) - g1).abs() < 1e-12 * g1, "rho={rho}");
            assert!((s.gamma(2) - g2).abs() < 1e-12 * g2, "rho={rho}");
        }
    }

    #[test]
    fn beta_is_monotone_and_bounded() {
        for rho in [0.05, 0.618, 1.0, 3.0, 10.0] {
            let s = SeriesTerms::compute(rho).unwrap();
            for j in 1..s.j_max() {
                assert!(s.beta(j) <= 1.0);
                assert!(s.beta(j + 1) <= s.beta(j), "rho={rho}, j={j}");
                assert!(s.beta(j + 1) >= 0.0);
            }
            // The table extends until the tail is negligible.
            assert!(s.beta(s.j_max()) < 1e-15);
        }
    }

    #[test]
    fn consecutive_beta_difference_is_the_poisson_mass() {
        for rho in [0.25, 1.0, 4.0] {
            let s = SeriesTerms::compute(rho).unwrap();
            for j in 1..s.j_max() {
                let diff = s.beta(j) - s.beta(j + 1);
                assert!(
                    (diff - poisson_pmf(rho, j)).abs() < 1e-13,
                    "rho={rho}, j={j}"
                );
            }
        }
    }

    #[test]
    fn gamma_satisfies_its_recurrence() {
        for rho in [0.1, 0.5625, 2.0, 9.0] {
            let s = SeriesTerms::compute(rho).unwrap();
            for j in 1..s.j_max() {
                let lhs = s.gamma(j);
                let rhs = 1.0 + rho / (j as f64 + 1.0) * s.gamma(j + 1);
                assert!((lhs - rhs).abs() < 1e-12 * lhs, "rho={rho}, j={j}");
            }
        }
    }

    #[test]
    fn backward_gamma_matches_direct_summation() {
        for rho in [0.1, 0.5, 1.0, 2.0] {
            let s = SeriesTerms::compute(rho).unwrap();
            for j in 1..=10 {
                let direct = gamma_direct(rho, j);
                assert!(
                    (s.gamma(j) - direct).abs() < 1e-12 * direct,
                    "rho={rho}, j={j}: {} vs {direct}",
                    s.gamma(j)
                );
            }
        }
    }

    #[test]
    fn invalid_loads_are_rejected() {
        assert!(SeriesTerms::compute(0.0).is_err());
        assert!(SeriesTerms::compute(-1.0).is_err());
        assert!(SeriesTerms::compute(f64::NAN).is_err());
        assert!(SeriesTerms::with_max_index(1.0, 0).is_err());
    }
}
