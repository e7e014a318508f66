//! Age-of-information analysis for uncoordinated sensors sharing an
//! unslotted collision channel.
//!
//! Sources transmit status updates at random times without listening to the
//! channel. Transmissions that overlap destroy each other, and a
//! collision-free update still gets through only with a fixed success
//! probability. This crate computes the resulting time-average age of
//! information three independent ways and cross-checks them:
//!
//! - [`shs`] solves piecewise-linear age processes driven by a finite Markov
//!   chain: a stationary distribution and one linear system yield the exact
//!   average age of any such model.
//! - [`collision`] builds the specific channel-occupancy chain for this
//!   system, evaluates the closed-form limit of its age as the truncation
//!   grows, and evaluates an independent per-state recursion for finite
//!   truncations. It also provides the lower bound, the slotted-channel
//!   baseline, and the individual age seen by one of `N` homogeneous
//!   sources.
//! - [`sim`] estimates the same quantities from event-driven simulation of
//!   the actual transmission process, with confidence intervals.
//!
//! [`optimize`] finds the offered load that minimizes the age, and
//! [`series`] supplies the Poisson tail sums the closed form is built from.

pub mod collision;
pub mod error;
pub mod optimize;
pub mod series;
pub mod shs;
pub mod sim;

pub use collision::{
    asymptotic_individual_age, build_chain, individual_age, lower_bound, slotted_age,
    system_age_closed_form, system_age_recursion, system_age_truncated, system_age_with_policy,
    ChannelParams, RecursionAge, TruncationPolicy,
};
pub use error::{AoiError, RangeWarning};
pub use optimize::{optimize_load, LoadObjective};
pub use series::{poisson_tail, SeriesTerms};
pub use shs::{AgeSolution, ResetMap, ShsModel, SolveOptions, Transition};
pub use sim::{
    derive_seed, replicate, simulate_individual_age, simulate_system_age, Horizon,
    InfiniteUserSimConfig, OnOffSimConfig, SimResult, Simulate,
};
