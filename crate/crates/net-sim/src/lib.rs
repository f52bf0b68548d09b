//! Deterministic discrete-event network simulator: seeded random-waypoint
//! mobility, unit-disk radio, delayed/lossy delivery, constant-rate traffic,
//! and byte-stable traces.

pub mod mobility;
pub mod queue;
pub mod sim;
pub mod trace;

pub use mobility::{mobility_step, Area, MobilityParams, MobilityState, Position};
pub use queue::{EventQueue, SimError};
pub use sim::{
    Counters, DataPacket, Flow, HelloMode, LinkCut, Packet, Placement, SimOutcome, SimParams,
    Simulator,
};
pub use trace::{fmt_float, Trace, TraceRecord};
