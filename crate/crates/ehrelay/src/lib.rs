//! Solvers for a two-hop half-duplex relay link fed by an energy-harvesting
//! source.
//!
//! The source harvests energy in discrete packets and must obey energy
//! causality; the relay is battery powered and constrained by a peak transmit
//! power, a total energy budget, or both. Because the relay is half duplex,
//! the block is split into alternating source and relay stages, so scheduling
//! and power allocation have to be solved jointly. Two objectives are
//! supported:
//!
//! * [`rmax`](crate::rmax::rmax) — maximize the data delivered to the
//!   destination within a fixed horizon;
//! * [`tmin`](crate::tmin::tmin) — minimize the time needed to deliver a fixed
//!   amount of data.
//!
//! Both solvers are built on the single-hop directional water-filling
//! decomposition ([`dwf`]): the harvest profile is split into intervals of
//! constant water level, each interval is solved in isolation, and the
//! resulting plan is patched into a schedule that is feasible for the original
//! arrival pattern without losing throughput.
//!
//! The [`oracle`] module provides an independent feasibility checker and a
//! grid-search optimizer used as ground truth in tests; [`baselines`] has the
//! fixed-scheduling / fixed-power comparison policies and the non-harvesting
//! upper bound; [`sweep`] drives Monte Carlo experiments over random Poisson
//! arrival profiles.

pub mod baselines;
pub mod dwf;
pub mod error;
pub mod numeric;
pub mod oracle;
pub mod policy;
pub mod profile;
pub mod rate;
pub mod rmax;
pub mod sweep;
pub mod tmin;

pub use error::Error;
pub use policy::{Stage, StageKind, TransmissionPolicy};
pub use profile::{ArrivalGenConfig, EhProfile};
pub use rate::{RateFunction, RateModel};
pub use rmax::{IntervalSolution, RelayConstraints};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn debug_log(msg: impl FnOnce() -> String) {
    if std::env::var("EHRELAY_LOG").map_or(false, |v| v == "debug" || v == "trace") {
        eprintln!("[ehrelay] {}", msg());
    }
}
