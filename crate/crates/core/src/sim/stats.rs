//! Confidence intervals and seed derivation for the simulators.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Two-sided 95% Student-t quantile (the 0.975 point) for the given degrees
/// of freedom.
pub fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975)
}

/// Sample mean and 95% confidence half-width treating the samples as
/// independent and identically distributed. With a single sample the
/// half-width is infinite: one observation carries no spread information.
pub fn mean_and_ci(samples: &[f64]) -> (f64, f64) {
    assert!(!samples.is_empty(), "need at least one sample");
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    let half = t_quantile_975(samples.len() - 1) * (var / n).sqrt();
    (mean, half)
}

/// Derives a decorrelated child seed from a base seed and a stream index,
/// using a splitmix64 finalization step. Deterministic, and distinct streams
/// give unrelated seeds even for adjacent indices.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_quantiles_match_reference_points() {
        assert!((t_quantile_975(31) - 2.0395).abs() < 1e-3);
        assert!((t_quantile_975(1) - 12.7062).abs() < 1e-3);
        // Converges to the normal quantile for large dof.
        assert!((t_quantile_975(100_000) - 1.96).abs() < 1e-3);
    }

    #[test]
    fn ci_of_constant_samples_is_zero() {
        let (mean, half) = mean_and_ci(&[4.0; 16]);
        assert_eq!(mean, 4.0);
        assert_eq!(half, 0.0);
    }

    #[test]
    fn two_sample_ci_matches_hand_computation() {
        let (mean, half) = mean_and_ci(&[0.0, 2.0]);
        assert_eq!(mean, 1.0);
        // sd = sqrt(2), half-width = t(1) * sqrt(2/2) = t(1).
        assert!((half - 12.7062).abs() < 1e-3);
    }

    #[test]
    fn single_sample_has_infinite_halfwidth() {
        let (mean, half) = mean_and_ci(&[3.25]);
        assert_eq!(mean, 3.25);
        assert!(half.is_infinite());
    }

    #[test]
    fn derived_seeds_are_deterministic_and_distinct() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        let seeds: Vec<u64> = (0..64).map(|i| derive_seed(42, i)).collect();
        let mut unique = seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), seeds.len());
        assert_ne!(derive_seed(0, 0), 0);
    }
}
