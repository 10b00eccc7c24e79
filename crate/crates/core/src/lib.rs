//! Lumped models of NEMS capacitive and ohmic switches, and a two-phase
//! switched-capacitor engine that uses them to simulate a discrete-time
//! parametric amplifier.
//!
//! * [`device`]: closed-form characterization of a capacitive switch.
//! * [`mech`]: static equilibria, C-V sweeps and transient beam dynamics.
//! * [`scnet`]: clocked charge-redistribution network engine.
//! * [`amp`]: amplifier builders and experiment runners.

// `!(x > 0.0)` is deliberate throughout: NaN must fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod amp;
pub mod device;
pub mod error;
pub mod mech;
mod roots;
pub mod scnet;

pub use amp::{build_amp, AmpConfig, Amplifier, Stimulus, Topology};
pub use device::{DeviceGeometry, DeviceParams, MaterialProps, Preset, EPS0};
pub use error::{Error, Result};
pub use mech::{BeamState, CvCurve, DynamicsParams};
pub use scnet::{ClockSchedule, Network, SwitchParams};
