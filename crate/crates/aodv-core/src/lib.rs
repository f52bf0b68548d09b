//! On-demand routing core with two interchangeable decision drivers: a
//! hard-coded baseline and a rule-driven one built on the rule engine. Both
//! share the same message, table, and timer mechanics, so a scenario run
//! under either driver produces identical control traffic.

pub mod config;
pub mod eca;
pub mod message;
pub mod node;
pub mod table;
pub mod types;

pub use config::AodvConfig;
pub use eca::{
    default_ruleset, default_vocabulary, load_ruleset, EcaDriver, FiringRecord, RouteDriver,
    DEFAULT_RULES,
};
pub use message::{
    rerr_bytes, ControlMessage, HelloMessage, RerrMessage, RreqFlags, RreqMessage, RrepAckMessage,
    RrepMessage, DATA_BYTES, HELLO_BYTES, PACKET_TYPE_RERR, PACKET_TYPE_RREP,
    PACKET_TYPE_RREP_ACK, PACKET_TYPE_RREQ, RREP_ACK_BYTES, RREP_BYTES, RREQ_BYTES,
};
pub use node::{
    AodvError, DiscardReason, Expiry, LinkBreakReport, NodeProtocolState, PendingDiscovery,
    RerrHandled, RreqAction, RrepHandled, RrepOutcome,
};
pub use table::{RouteCandidate, RouteEntry, RoutingTable, UpdateOutcome};
pub use types::{DestSeq, NodeId};
