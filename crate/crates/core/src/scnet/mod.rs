//! Event-driven two-phase switched-capacitor engine.
//!
//! A [`Network`] is a set of named nodes (node 0 is ground) connected by
//! capacitors, clocked ohmic switches and ideal voltage sources. Between two
//! events (clock edges or delayed switch transitions) the switch
//! configuration is fixed and the network is solved quasi-statically:
//! islands that contain a source are pinned to it, every other island floats
//! and keeps the charge it carried out of the previous segment.

mod islands;
mod network;
mod sim;
mod solve;
mod switch;

pub use islands::{islands, Islands};
pub use network::{
    apply_parasitics, build_network, DriveTerminal, Element, ElementKind, ElementSpec,
    ElementSpecKind, Network, NetworkDescription, NodeId, Waveform,
};
pub use sim::{simulate, simulate_from, ClockPhase, ClockSchedule, Phase, SimWarning, Simulation};
pub use solve::{solve_phase, ConservationCheck, IslandReport, NetState, PhaseSolution, Segment};
pub use switch::{step_switch, OhmicSwitchState, SwitchParams};
