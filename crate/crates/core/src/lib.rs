//! Flight-dynamics core for the powerline unmanned surfer: a shape-adaptive
//! fixed-wing aircraft whose Phugoid mode is frequency-matched to the catenary
//! contour of overhead powerlines by a feedforward morphing controller.
//!
//! Everything here is pure computation over `core` + `alloc`. File formats,
//! configuration and the command line live in the `plus-cli` companion crate.
//!
//! Module map:
//!
//! - [`powerline`]: catenary spans, multi-span profiles, voltage classes, wire field
//! - [`aero`]: coefficient models, polar tables, stability derivatives, plant matrices
//! - [`controller`]: Phugoid frequency, matching residual solve, morph schedules
//! - [`actuator`]: delayed, slew-limited second-order servo
//! - [`sim`]: RK4 integration of the morphing plant along a profile, tracking metrics
//! - [`sweep`]: ΔC_L,m, per-trial pipeline, trend search and aggregation
//! - [`sysid`]: multistep stimulus generation and transfer-function fitting
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` deliberately rejects NaN alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod actuator;
pub mod aero;
pub mod controller;
pub mod lsq;
pub mod math;
pub mod powerline;
pub mod roots;
pub mod sim;
pub mod sweep;
pub mod sysid;

/// Standard gravity used throughout, m/s².
pub const GRAVITY: f64 = 9.81;
