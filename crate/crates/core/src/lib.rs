//! Queueing laboratory for a two-class preemptive-priority M/M/1+GI system
//! modeling an underlay cognitive-radio link.
//!
//! Three engines compute steady-state performance of the same system and are
//! cross-validated against each other:
//!
//! * [`analytic`] — closed-form birth-death analysis of the high-priority
//!   queue with reneging, plus the low-priority waiting-time approximation;
//! * [`ctmc`] — brute-force stationary solution of the full two-dimensional
//!   chain on a truncated state space, the ground-truth oracle;
//! * [`sim`] — a discrete-event simulator with preemptive priority service,
//!   general impatience and batch-means output analysis.
//!
//! [`channel`] supplies the underlay transmission-time law (interference
//! threshold, outage, expected service time) and [`scenario`] drives
//! parameter sweeps with CSV output.

pub mod analytic;
pub mod band;
pub mod channel;
pub mod ctmc;
pub mod params;
pub mod quad;
pub mod scenario;
pub mod sim;

pub use params::{ChannelParams, PatienceSpec, SystemParams};
