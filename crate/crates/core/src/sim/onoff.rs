//! Event-driven simulation of a finite population of on/off sources.
//!
//! Each source alternates between transmitting (exponential, mean `1/mu`)
//! and staying silent (exponential, mean `1/lambda0 - 1/mu`), so its updates
//! start at rate `lambda0` and it never overlaps itself. Any overlap between
//! two sources destroys every transmission involved; a collision-free update
//! is always received (channel errors are not part of this model). Each
//! source's individual age resets only on its own deliveries; an additional
//! system track resets on deliveries from any source.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;

use crate::error::AoiError;
use crate::sim::sawtooth::AgeTrack;
use crate::sim::stats::mean_and_ci;
use crate::sim::trace::{TraceEvent, TraceKind};
use crate::sim::{OnOffSimConfig, SimResult};

/// The pending phase change of one source. Each source always has exactly
/// one entry in the event heap.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PhaseChange {
    time: f64,
    source: u32,
}

impl Eq for PhaseChange {}

impl Ord for PhaseChange {
    fn cmp(&self, other: &Self) -> Ordering {
        // Event times are finite by construction; ties break by source index
        // so the event order is deterministic.
        self.time
            .total_cmp(&other.time)
            .then(self.source.cmp(&other.source))
    }
}

impl PartialOrd for PhaseChange {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Source {
    rng: ChaCha8Rng,
    transmitting: bool,
    tainted: bool,
    started: u64,
    delivered: u64,
    current_start: f64,
    current_id: u64,
    track: AgeTrack,
}

/// Runs the on/off population and returns per-source individual ages, their
/// cross-source mean (the headline estimate, with an across-source
/// confidence interval), and the any-source system age.
pub fn simulate_individual_age(config: &OnOffSimConfig) -> Result<SimResult, AoiError> {
    config.validate()?;
    let n = config.n_sources;
    let idle = Exp::new(1.0 / config.mean_idle()).expect("validated positive mean");
    let service = Exp::new(config.mu).expect("validated rate");
    let cap = config.horizon.unwrap_or(f64::INFINITY);

    let mut sources: Vec<Source> = (0..n)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(s as u64 + 1);
            Source {
                rng,
                transmitting: false,
                tainted: false,
                started: 0,
                delivered: 0,
                current_start: 0.0,
                current_id: 0,
                track: AgeTrack::new(0.0, 0.0),
            }
        })
        .collect();

    // All sources start silent; their first transmissions are staggered by
    // independent idle draws.
    let mut heap: BinaryHeap<std::cmp::Reverse<PhaseChange>> = BinaryHeap::with_capacity(n);
    for (s, src) in sources.iter_mut().enumerate() {
        let t = idle.sample(&mut src.rng);
        heap.push(std::cmp::Reverse(PhaseChange {
            time: t,
            source: s as u32,
        }));
    }

    let mut system_track = AgeTrack::new(0.0, 0.0);
    let mut trace: Option<Vec<TraceEvent>> = config.record_trace.then(Vec::new);
    let mut active: Vec<u32> = Vec::new();
    let mut total_updates: u64 = 0;
    let mut delivered_total: u64 = 0;
    let mut collided: u64 = 0;
    let mut done_sources = 0usize;
    let mut next_id: u64 = 0;
    let mut busy_time = 0.0;
    let mut prev_time = 0.0;

    let horizon_end;
    loop {
        let std::cmp::Reverse(ev) = heap.pop().expect("every source has a pending event");
        if ev.time > cap {
            horizon_end = cap;
            break;
        }
        if !active.is_empty() {
            busy_time += ev.time - prev_time;
        }
        prev_time = ev.time;
        let s = ev.source as usize;

        if !sources[s].transmitting {
            // Silence ends: a transmission starts and dooms everything
            // already in flight along with itself.
            for &other in &active {
                sources[other as usize].tainted = true;
            }
            let tainted = !active.is_empty();
            active.push(ev.source);
            let src = &mut sources[s];
            src.transmitting = true;
            src.tainted = tainted;
            src.current_start = ev.time;
            src.current_id = next_id;
            next_id += 1;
            src.started += 1;
            total_updates += 1;
            if let Some(t) = trace.as_mut() {
                t.push(TraceEvent {
                    time: ev.time,
                    kind: TraceKind::Arrival,
                    update: src.current_id,
                    source: Some(ev.source),
                });
            }
            let d = service.sample(&mut src.rng);
            heap.push(std::cmp::Reverse(PhaseChange {
                time: ev.time + d,
                source: ev.source,
            }));
            if src.started == config.updates_per_source {
                done_sources += 1;
                if done_sources == n {
                    horizon_end = ev.time;
                    break;
                }
            }
        } else {
            // Transmission ends.
            let pos = active
                .iter()
                .position(|&o| o == ev.source)
                .expect("a transmitting source is active");
            active.swap_remove(pos);
            let src = &mut sources[s];
            src.transmitting = false;
            let kind = if src.tainted {
                collided += 1;
                TraceKind::Collided
            } else {
                src.delivered += 1;
                delivered_total += 1;
                let age = ev.time - src.current_start;
                src.track.reset(ev.time, age);
                system_track.reset(ev.time, age);
                TraceKind::Delivered
            };
            src.tainted = false;
            if let Some(t) = trace.as_mut() {
                t.push(TraceEvent {
                    time: ev.time,
                    kind,
                    update: src.current_id,
                    source: Some(ev.source),
                });
            }
            let g = idle.sample(&mut src.rng);
            heap.push(std::cmp::Reverse(PhaseChange {
                time: ev.time + g,
                source: ev.source,
            }));
        }
    }
    if !active.is_empty() {
        busy_time += horizon_end - prev_time;
    }

    let warmup_end = config.warmup_fraction * horizon_end;
    let per_source_ages: Vec<f64> = sources
        .iter()
        .map(|src| src.track.time_average(warmup_end, horizon_end))
        .collect();
    let (mean_age, ci_halfwidth) = mean_and_ci(&per_source_ages);

    Ok(SimResult {
        mean_age,
        ci_halfwidth,
        per_source_ages,
        system_mean_age: system_track.time_average(warmup_end, horizon_end),
        total_updates,
        successful_deliveries: delivered_total,
        failed_deliveries: 0,
        collisions: collided,
        unresolved: active.len() as u64,
        channel_busy_fraction: busy_time / horizon_end,
        horizon_end,
        degenerate: sources.iter().any(|src| src.delivered == 0),
        occupancy_counts: Vec::new(),
        trace,
    })
}
