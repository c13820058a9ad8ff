//! Antenna selection for a full-duplex cooperative NOMA downlink.
//!
//! A base station with `N_T` antennas serves a near user U1 directly and a far
//! user U2 through a full-duplex decode-and-forward relay with `M_R` receive
//! and `M_T` transmit antennas. The crate provides
//!
//! * [`model`]: parameters and per-realization SINRs,
//! * [`channel`]: reproducible Rayleigh-fading draws,
//! * [`selection`]: the antenna-selection schemes and benchmarks,
//! * [`montecarlo`]: outage and ergodic-rate estimation plus sweeps,
//! * [`analytic`]: closed-form and quadrature evaluators,
//! * [`cli`]: configuration, presets and CSV output for the `fdnoma` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod channel;
pub mod cli;
pub mod model;
pub mod montecarlo;
pub mod selection;

pub use model::{ChannelRealization, DerivedParams, ModelError, SystemParams};
