//! Event traces for debugging and for the independent overlap oracle used in
//! tests. Recording is off by default; a trace holds one entry per event.

use std::io;

/// What happened to an update at an event instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// A transmission started.
    Arrival,
    /// The transmission finished collision-free and was received.
    Delivered,
    /// The transmission finished collision-free but was lost to a channel
    /// error.
    Failed,
    /// The transmission overlapped another and was lost.
    Collided,
}

impl TraceKind {
    pub fn label(&self) -> &'static str {
        match self {
            TraceKind::Arrival => "arrival",
            TraceKind::Delivered => "delivered",
            TraceKind::Failed => "failed",
            TraceKind::Collided => "collided",
        }
    }
}

/// One simulation event. `update` identifies the transmission across its
/// arrival and outcome entries; `source` is present in per-source modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub update: u64,
    pub source: Option<u32>,
}

/// Writes a trace as one `time,kind,update,source` line per event, with `-`
/// for an absent source.
pub fn write_trace<W: io::Write>(events: &[TraceEvent], w: &mut W) -> io::Result<()> {
    for e in events {
        match e.source {
            Some(s) => writeln!(w, "{},{},{},{}", e.time, e.kind.label(), e.update, s)?,
            None => writeln!(w, "{},{},{},-", e.time, e.kind.label(), e.update)?,
        }
    }
    Ok(())
}
