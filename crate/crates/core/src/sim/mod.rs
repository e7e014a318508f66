//! Discrete-event simulation of the collision channel.
//!
//! Two engines share the same collision semantics (any temporal overlap
//! between transmissions destroys all updates involved):
//!
//! - [`simulate_system_age`]: the aggregate-traffic model. Transmissions
//!   start as one Poisson process, identities are dissolved, and a
//!   collision-free update is delivered with the reception probability. The
//!   monitor age resets on every delivery.
//! - [`simulate_individual_age`]: a finite population of alternating on/off
//!   sources that never overlap themselves. Each source's age resets only on
//!   its own deliveries; the any-source system age is tracked alongside.
//!
//! Age averages are exact trapezoid integrals of the sawtooth path, the first
//! `warmup_fraction` of the horizon is discarded against initialization bias,
//! and confidence intervals come from batch means (aggregate model) or from
//! the across-source spread (on/off model). Runs are deterministic for a
//! given (config, seed): every random stream is derived from the seed alone.

mod infinite;
mod onoff;
mod sawtooth;
mod stats;
mod trace;

pub use infinite::simulate_system_age;
pub use onoff::simulate_individual_age;
pub use sawtooth::AgeTrack;
pub use stats::{derive_seed, mean_and_ci, t_quantile_975};
pub use trace::{write_trace, TraceEvent, TraceKind};

use rayon::prelude::*;

use crate::collision::ChannelParams;
use crate::error::AoiError;

/// When a run ends: at a fixed time, or at the moment the n-th transmission
/// starts (whichever model counts transmissions).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Time(f64),
    Arrivals(u64),
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon::Arrivals(100_000)
    }
}

impl Horizon {
    fn validate(&self) -> Result<(), AoiError> {
        match *self {
            Horizon::Time(t) if t > 0.0 && t.is_finite() => Ok(()),
            Horizon::Arrivals(n) if n > 0 => Ok(()),
            _ => Err(AoiError::InvalidParams(
                "horizon must be a positive time or a positive arrival count".into(),
            )),
        }
    }
}

/// Fraction of the horizon discarded before age integration.
pub const DEFAULT_WARMUP_FRACTION: f64 = 0.01;

/// Number of batch means behind the aggregate-model confidence interval.
pub const DEFAULT_BATCHES: usize = 32;

/// Default per-source generated-update target for the on/off model.
pub const DEFAULT_UPDATES_PER_SOURCE: u64 = 50_000;

/// Configuration of the aggregate-traffic (dissolved-identity) simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct InfiniteUserSimConfig {
    pub params: ChannelParams,
    pub horizon: Horizon,
    pub seed: u64,
    /// Fraction of the horizon discarded before integration, in [0, 0.5).
    pub warmup_fraction: f64,
    /// Batch count for the batch-means confidence interval, at least 2.
    pub batches: usize,
    /// Record a full event trace on the result.
    pub record_trace: bool,
}

impl InfiniteUserSimConfig {
    pub fn new(params: ChannelParams, horizon: Horizon, seed: u64) -> Result<Self, AoiError> {
        let config = InfiniteUserSimConfig {
            params,
            horizon,
            seed,
            warmup_fraction: DEFAULT_WARMUP_FRACTION,
            batches: DEFAULT_BATCHES,
            record_trace: false,
        };
        config.validate()?;
        Ok(config)
    }

    pub(crate) fn validate(&self) -> Result<(), AoiError> {
        self.horizon.validate()?;
        validate_common(self.warmup_fraction, Some(self.batches))
    }
}

/// Configuration of the on/off finite-population simulation. Each source
/// alternates an exponential transmission (mean `1/mu`) with an exponential
/// silence whose mean `1/lambda0 - 1/mu` keeps its update rate at `lambda0`.
#[derive(Debug, Clone, PartialEq)]
pub struct OnOffSimConfig {
    /// Population size, at least 2 (a lone source has no one to collide with
    /// and its individual age is the system age).
    pub n_sources: usize,
    /// Per-source update rate; must stay below `mu` so the silent period has
    /// positive mean.
    pub lambda0: f64,
    pub mu: f64,
    /// The run stops once every source has started this many updates.
    pub updates_per_source: u64,
    /// Optional wall-clock cap that can stop the run earlier.
    pub horizon: Option<f64>,
    pub seed: u64,
    pub warmup_fraction: f64,
    pub record_trace: bool,
}

impl OnOffSimConfig {
    pub fn new(n_sources: usize, lambda0: f64, mu: f64, seed: u64) -> Result<Self, AoiError> {
        let config = OnOffSimConfig {
            n_sources,
            lambda0,
            mu,
            updates_per_source: DEFAULT_UPDATES_PER_SOURCE,
            horizon: None,
            seed,
            warmup_fraction: DEFAULT_WARMUP_FRACTION,
            record_trace: false,
        };
        config.validate()?;
        Ok(config)
    }

    pub(crate) fn validate(&self) -> Result<(), AoiError> {
        if self.n_sources < 2 {
            return Err(AoiError::InvalidParams(format!(
                "need at least 2 sources, got {}",
                self.n_sources
            )));
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(AoiError::InvalidParams(format!(
                "per-source rate must be positive and finite, got {}",
                self.lambda0
            )));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(AoiError::InvalidParams(format!(
                "service rate must be positive and finite, got {}",
                self.mu
            )));
        }
        if self.lambda0 >= self.mu {
            return Err(AoiError::InvalidParams(format!(
                "per-source rate {} must be below the service rate {}: the mean silent \
                 period 1/lambda0 - 1/mu must be positive",
                self.lambda0, self.mu
            )));
        }
        if self.updates_per_source == 0 {
            return Err(AoiError::InvalidParams(
                "per-source update target must be positive".into(),
            ));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(AoiError::InvalidParams(format!(
                    "horizon cap must be positive and finite, got {h}"
                )));
            }
        }
        validate_common(self.warmup_fraction, None)
    }

    /// Mean silent period between transmissions.
    pub fn mean_idle(&self) -> f64 {
        1.0 / self.lambda0 - 1.0 / self.mu
    }
}

fn validate_common(warmup_fraction: f64, batches: Option<usize>) -> Result<(), AoiError> {
    if !(0.0..0.5).contains(&warmup_fraction) {
        return Err(AoiError::InvalidParams(format!(
            "warmup fraction must lie in [0, 0.5), got {warmup_fraction}"
        )));
    }
    if let Some(b) = batches {
        if b < 2 {
            return Err(AoiError::InvalidParams(format!(
                "need at least 2 batches for a confidence interval, got {b}"
            )));
        }
    }
    Ok(())
}

/// Outcome of a simulation run (or an aggregate over replications).
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Headline age estimate: the time-average monitor age in the aggregate
    /// model, the cross-source mean of the individual ages in the on/off
    /// model.
    pub mean_age: f64,
    /// 95% half-width for `mean_age`: batch means (aggregate model),
    /// across-source spread (on/off), or across-replication spread.
    pub ci_halfwidth: f64,
    /// Per-source individual time-average ages; empty in the aggregate model.
    pub per_source_ages: Vec<f64>,
    /// Time-average age of the any-source-resets track. Equals `mean_age` in
    /// the aggregate model.
    pub system_mean_age: f64,
    /// Transmissions started.
    pub total_updates: u64,
    /// Collision-free transmissions received by the monitor.
    pub successful_deliveries: u64,
    /// Collision-free transmissions lost to channel errors.
    pub failed_deliveries: u64,
    /// Transmissions lost to overlap.
    pub collisions: u64,
    /// Transmissions still in flight when the horizon ended.
    pub unresolved: u64,
    /// Fraction of the horizon with at least one active transmission.
    pub channel_busy_fraction: f64,
    /// Time at which the run ended.
    pub horizon_end: f64,
    /// Set when a track had no delivery to reset it after warm-up (the mean
    /// age is then a ramp over the horizon, reported rather than hidden).
    pub degenerate: bool,
    /// Occupancy of the channel as seen by a thinned subsequence of arrivals
    /// (index = concurrent transmissions observed, value = observation
    /// count); aggregate model only.
    pub occupancy_counts: Vec<u64>,
    /// Full event trace if requested.
    pub trace: Option<Vec<TraceEvent>>,
}

/// A runnable simulation configuration; implemented by both engines so that
/// replication logic is shared.
pub trait Simulate: Clone + Send + Sync {
    fn run(&self) -> Result<SimResult, AoiError>;
    fn with_seed(&self, seed: u64) -> Self;
}

impl Simulate for InfiniteUserSimConfig {
    fn run(&self) -> Result<SimResult, AoiError> {
        simulate_system_age(self)
    }

    fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c
    }
}

impl Simulate for OnOffSimConfig {
    fn run(&self) -> Result<SimResult, AoiError> {
        simulate_individual_age(self)
    }

    fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c
    }
}

/// Runs independent replications with per-replication seeds derived from
/// `base_seed` and aggregates them. Replications run in parallel; aggregation
/// is ordered by replication index, so the output is deterministic. A single
/// replication returns that run unchanged (seeded with `derive_seed(base, 0)`).
pub fn replicate<C: Simulate>(
    config: &C,
    n_replications: usize,
    base_seed: u64,
) -> Result<SimResult, AoiError> {
    if n_replications == 0 {
        return Err(AoiError::InvalidParams(
            "need at least one replication".into(),
        ));
    }
    let configs: Vec<C> = (0..n_replications)
        .map(|i| config.with_seed(derive_seed(base_seed, i as u64)))
        .collect();
    let results: Vec<SimResult> = configs
        .par_iter()
        .map(|c| c.run())
        .collect::<Result<_, _>>()?;
    if results.len() == 1 {
        return Ok(results.into_iter().next().expect("one result"));
    }

    let n = results.len() as f64;
    let means: Vec<f64> = results.iter().map(|r| r.mean_age).collect();
    let (mean_age, ci_halfwidth) = mean_and_ci(&means);

    let per_source_ages = if results[0].per_source_ages.is_empty() {
        Vec::new()
    } else {
        let sources = results[0].per_source_ages.len();
        (0..sources)
            .map(|s| results.iter().map(|r| r.per_source_ages[s]).sum::<f64>() / n)
            .collect()
    };
    let mut occupancy_counts: Vec<u64> = Vec::new();
    for r in &results {
        if occupancy_counts.len() < r.occupancy_counts.len() {
            occupancy_counts.resize(r.occupancy_counts.len(), 0);
        }
        for (tot, &c) in occupancy_counts.iter_mut().zip(&r.occupancy_counts) {
            *tot += c;
        }
    }

    Ok(SimResult {
        mean_age,
        ci_halfwidth,
        per_source_ages,
        system_mean_age: results.iter().map(|r| r.system_mean_age).sum::<f64>() / n,
        total_updates: results.iter().map(|r| r.total_updates).sum(),
        successful_deliveries: results.iter().map(|r| r.successful_deliveries).sum(),
        failed_deliveries: results.iter().map(|r| r.failed_deliveries).sum(),
        collisions: results.iter().map(|r| r.collisions).sum(),
        unresolved: results.iter().map(|r| r.unresolved).sum(),
        channel_busy_fraction: results.iter().map(|r| r.channel_busy_fraction).sum::<f64>() / n,
        horizon_end: results.iter().map(|r| r.horizon_end).sum::<f64>() / n,
        degenerate: results.iter().any(|r| r.degenerate),
        occupancy_counts,
        trace: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> InfiniteUserSimConfig {
        let params = ChannelParams::from_load(0.5, 1.0, 1.0).unwrap();
        InfiniteUserSimConfig::new(params, Horizon::Arrivals(4_000), 99).unwrap()
    }

    #[test]
    fn single_replication_is_a_seeded_single_run() {
        let config = base_config();
        let replicated = replicate(&config, 1, 7).unwrap();
        let direct = config.with_seed(derive_seed(7, 0)).run().unwrap();
        assert_eq!(replicated, direct);
    }

    #[test]
    fn replication_is_deterministic() {
        let config = base_config();
        let a = replicate(&config, 4, 11).unwrap();
        let b = replicate(&config, 4, 11).unwrap();
        assert_eq!(a, b);
        let c = replicate(&config, 4, 12).unwrap();
        assert_ne!(a.mean_age, c.mean_age);
    }

    #[test]
    fn aggregation_sums_counters_and_pools_means() {
        let config = base_config();
        let n = 4;
        let agg = replicate(&config, n, 5).unwrap();
        let singles: Vec<SimResult> = (0..n)
            .map(|i| config.with_seed(derive_seed(5, i as u64)).run().unwrap())
            .collect();
        let total: u64 = singles.iter().map(|r| r.total_updates).sum();
        assert_eq!(agg.total_updates, total);
        let mean = singles.iter().map(|r| r.mean_age).sum::<f64>() / n as f64;
        assert!((agg.mean_age - mean).abs() < 1e-12);
        assert!(agg.ci_halfwidth > 0.0);
        assert!(agg.ci_halfwidth.is_finite());
        assert!(agg.trace.is_none());
    }

    #[test]
    fn more_replications_tighten_the_interval() {
        let config = base_config();
        let few = replicate(&config, 4, 3).unwrap();
        let many = replicate(&config, 16, 3).unwrap();
        // The half-width scales roughly as 1/sqrt(n); leave generous room
        // for the spread of the estimate itself.
        assert!(
            many.ci_halfwidth < few.ci_halfwidth,
            "{} vs {}",
            many.ci_halfwidth,
            few.ci_halfwidth
        );
    }

    #[test]
    fn zero_replications_are_rejected() {
        assert!(replicate(&base_config(), 0, 1).is_err());
    }

    #[test]
    fn config_validation_catches_bad_windows() {
        let params = ChannelParams::from_load(0.5, 1.0, 1.0).unwrap();
        assert!(InfiniteUserSimConfig::new(params, Horizon::Time(0.0), 1).is_err());
        assert!(InfiniteUserSimConfig::new(params, Horizon::Arrivals(0), 1).is_err());
        let mut config = InfiniteUserSimConfig::new(params, Horizon::Time(10.0), 1).unwrap();
        config.warmup_fraction = 0.5;
        assert!(config.validate().is_err());
        config.warmup_fraction = 0.01;
        config.batches = 1;
        assert!(config.validate().is_err());
    }

    #[test]
    fn onoff_config_validation_enforces_the_duty_cycle() {
        assert!(OnOffSimConfig::new(1, 0.5, 2.0, 0).is_err());
        assert!(OnOffSimConfig::new(4, 2.0, 2.0, 0).is_err());
        assert!(OnOffSimConfig::new(4, 2.5, 2.0, 0).is_err());
        assert!(OnOffSimConfig::new(4, 0.0, 2.0, 0).is_err());
        let config = OnOffSimConfig::new(4, 0.5, 2.0, 0).unwrap();
        // Mean idle = 1/0.5 - 1/2 = 1.5.
        assert!((config.mean_idle() - 1.5).abs() < 1e-15);
        let mut bad = config.clone();
        bad.updates_per_source = 0;
        assert!(bad.validate().is_err());
        let mut bad = config;
        bad.horizon = Some(0.0);
        assert!(bad.validate().is_err());
    }
}
