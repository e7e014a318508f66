//! Event-driven simulation of the aggregate-traffic collision channel.
//!
//! Transmissions start as one Poisson process of rate `lambda` and last
//! exponential times with rate `mu`. Identities are dissolved: any two
//! transmissions that overlap in time destroy each other, including
//! back-to-back updates that a single sensor would have produced. An update
//! that finishes collision-free is delivered with probability `p_c`, and a
//! delivery at time `t` of an update generated at `s` resets the monitor age
//! to `t - s`.

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;

use crate::error::AoiError;
use crate::sim::sawtooth::AgeTrack;
use crate::sim::stats::mean_and_ci;
use crate::sim::trace::{TraceEvent, TraceKind};
use crate::sim::{Horizon, InfiniteUserSimConfig, SimResult};

/// Distinct ChaCha streams per random purpose, so the sampled sequences do
/// not depend on how the event interleaving consumes them.
const ARRIVAL_STREAM: u64 = 1;
const DURATION_STREAM: u64 = 2;
const COIN_STREAM: u64 = 3;

/// Occupancy is sampled at every 20th arrival (arrivals see time averages,
/// and the stride decorrelates consecutive observations), skipping the first
/// arrivals while the empty-start transient dies out.
const OCCUPANCY_STRIDE: u64 = 20;
const OCCUPANCY_SKIP: u64 = 1_000;

struct Active {
    id: u64,
    start: f64,
    end: f64,
    tainted: bool,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs the aggregate-traffic simulation and returns the time-average
/// monitor age with a batch-means confidence interval.
pub fn simulate_system_age(config: &InfiniteUserSimConfig) -> Result<SimResult, AoiError> {
    config.validate()?;
    let params = &config.params;
    let mut arrival_rng = stream_rng(config.seed, ARRIVAL_STREAM);
    let mut duration_rng = stream_rng(config.seed, DURATION_STREAM);
    let mut coin_rng = stream_rng(config.seed, COIN_STREAM);
    let arrival_gap = Exp::new(params.lambda()).expect("validated rate");
    let duration = Exp::new(params.mu()).expect("validated rate");
    let coin = Bernoulli::new(params.p_c()).expect("validated probability");

    let (time_limit, arrival_limit) = match config.horizon {
        Horizon::Time(t) => (t, u64::MAX),
        Horizon::Arrivals(n) => (f64::INFINITY, n),
    };

    let mut active: Vec<Active> = Vec::new();
    let mut track = AgeTrack::new(0.0, 0.0);
    let mut trace: Option<Vec<TraceEvent>> = config.record_trace.then(Vec::new);
    let mut occupancy_counts: Vec<u64> = Vec::new();
    let mut arrivals: u64 = 0;
    let mut delivered: u64 = 0;
    let mut failed: u64 = 0;
    let mut collided: u64 = 0;
    let mut busy_time = 0.0;
    let mut prev_time = 0.0;
    let mut next_id: u64 = 0;
    let mut next_arrival = arrival_gap.sample(&mut arrival_rng);

    let horizon_end;
    loop {
        // Index of the next departure; ties broken by id for determinism.
        let next_dep = active
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.end.total_cmp(&b.end).then(a.id.cmp(&b.id)))
            .map(|(i, a)| (i, a.end));

        if next_dep.is_none_or(|(_, end)| next_arrival <= end) {
            // Transmission start.
            if next_arrival > time_limit {
                horizon_end = time_limit;
                break;
            }
            if !active.is_empty() {
                busy_time += next_arrival - prev_time;
            }
            prev_time = next_arrival;
            arrivals += 1;
            if arrivals > OCCUPANCY_SKIP && arrivals.is_multiple_of(OCCUPANCY_STRIDE) {
                let seen = active.len();
                if occupancy_counts.len() <= seen {
                    occupancy_counts.resize(seen + 1, 0);
                }
                occupancy_counts[seen] += 1;
            }
            let tainted = !active.is_empty();
            for a in active.iter_mut() {
                a.tainted = true;
            }
            let d = duration.sample(&mut duration_rng);
            active.push(Active {
                id: next_id,
                start: next_arrival,
                end: next_arrival + d,
                tainted,
            });
            if let Some(t) = trace.as_mut() {
                t.push(TraceEvent {
                    time: next_arrival,
                    kind: TraceKind::Arrival,
                    update: next_id,
                    source: None,
                });
            }
            next_id += 1;
            if arrivals == arrival_limit {
                horizon_end = next_arrival;
                break;
            }
            next_arrival += arrival_gap.sample(&mut arrival_rng);
        } else {
            // Transmission end.
            let (idx, end) = next_dep.expect("departure exists in this branch");
            if end > time_limit {
                horizon_end = time_limit;
                break;
            }
            busy_time += end - prev_time;
            prev_time = end;
            let done = active.swap_remove(idx);
            let kind = if done.tainted {
                collided += 1;
                TraceKind::Collided
            } else if coin.sample(&mut coin_rng) {
                delivered += 1;
                track.reset(end, end - done.start);
                TraceKind::Delivered
            } else {
                failed += 1;
                TraceKind::Failed
            };
            if let Some(t) = trace.as_mut() {
                t.push(TraceEvent {
                    time: end,
                    kind,
                    update: done.id,
                    source: None,
                });
            }
        }
    }
    if !active.is_empty() {
        busy_time += horizon_end - prev_time;
    }

    let warmup_end = config.warmup_fraction * horizon_end;
    let mean_age = track.time_average(warmup_end, horizon_end);
    let batch = track.batch_means(warmup_end, horizon_end, config.batches);
    let (_, ci_halfwidth) = mean_and_ci(&batch);

    Ok(SimResult {
        mean_age,
        ci_halfwidth,
        per_source_ages: Vec::new(),
        system_mean_age: mean_age,
        total_updates: arrivals,
        successful_deliveries: delivered,
        failed_deliveries: failed,
        collisions: collided,
        unresolved: active.len() as u64,
        channel_busy_fraction: busy_time / horizon_end,
        horizon_end,
        degenerate: delivered == 0,
        occupancy_counts,
        trace,
    })
}
