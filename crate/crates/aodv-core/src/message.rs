//! The four AODV control messages plus the hello beacon.

use crate::types::{DestSeq, NodeId};

pub const PACKET_TYPE_RREQ: u8 = 1;
pub const PACKET_TYPE_RREP: u8 = 2;
pub const PACKET_TYPE_RERR: u8 = 3;
pub const PACKET_TYPE_RREP_ACK: u8 = 4;

/// Fixed per-type wire sizes used by the control-overhead metric.
pub const RREQ_BYTES: u64 = 24;
pub const RREP_BYTES: u64 = 20;
pub const RREP_ACK_BYTES: u64 = 2;
pub const HELLO_BYTES: u64 = 20;
pub const DATA_BYTES: u64 = 512;

pub fn rerr_bytes(dest_count: usize) -> u64 {
    4 + 8 * dest_count as u64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RreqFlags {
    pub join: bool,
    pub repair: bool,
    pub gratuitous: bool,
    pub dest_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RreqMessage {
    pub flags: RreqFlags,
    pub hop_count: u32,
    pub rreq_id: u32,
    pub dest: NodeId,
    pub dest_seq: DestSeq,
    pub origin: NodeId,
    pub origin_seq: u64,
}

impl RreqMessage {
    pub fn packet_type(&self) -> u8 {
        PACKET_TYPE_RREQ
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RrepMessage {
    pub repair: bool,
    /// A flag: the receiver must answer with a RREP-ACK.
    pub ack_required: bool,
    /// 5-bit field, constrained to [0, 31].
    pub prefix_size: u8,
    pub hop_count: u32,
    pub dest: NodeId,
    pub dest_seq: u64,
    pub origin: NodeId,
    /// Milliseconds; always positive.
    pub lifetime_ms: u64,
}

impl RrepMessage {
    pub fn packet_type(&self) -> u8 {
        PACKET_TYPE_RREP
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RerrMessage {
    pub no_delete: bool,
    /// (destination, destination sequence number) per unreachable node;
    /// never empty.
    pub unreachable: Vec<(NodeId, u64)>,
}

impl RerrMessage {
    pub fn packet_type(&self) -> u8 {
        PACKET_TYPE_RERR
    }

    pub fn dest_count(&self) -> usize {
        self.unreachable.len()
    }

    pub fn wire_bytes(&self) -> u64 {
        rerr_bytes(self.dest_count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RrepAckMessage;

impl RrepAckMessage {
    pub fn packet_type(&self) -> u8 {
        PACKET_TYPE_RREP_ACK
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HelloMessage {
    pub origin: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControlMessage {
    Rreq(RreqMessage),
    Rrep(RrepMessage),
    Rerr(RerrMessage),
    RrepAck(RrepAckMessage),
    Hello(HelloMessage),
}

impl ControlMessage {
    pub fn wire_bytes(&self) -> u64 {
        match self {
            ControlMessage::Rreq(_) => RREQ_BYTES,
            ControlMessage::Rrep(_) => RREP_BYTES,
            ControlMessage::Rerr(r) => r.wire_bytes(),
            ControlMessage::RrepAck(_) => RREP_ACK_BYTES,
            ControlMessage::Hello(_) => HELLO_BYTES,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ControlMessage::Rreq(_) => "RREQ",
            ControlMessage::Rrep(_) => "RREP",
            ControlMessage::Rerr(_) => "RERR",
            ControlMessage::RrepAck(_) => "RREP_ACK",
            ControlMessage::Hello(_) => "HELLO",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rerr_size_grows_with_destination_count() {
        assert_eq!(rerr_bytes(1), 12);
        assert_eq!(rerr_bytes(3), 28);
    }

    #[test]
    fn packet_types_are_fixed() {
        let rreq = RreqMessage {
            flags: RreqFlags::default(),
            hop_count: 0,
            rreq_id: 4,
            dest: "10.32.21.1".parse().unwrap(),
            dest_seq: DestSeq::Known(13),
            origin: "10.32.21.83".parse().unwrap(),
            origin_seq: 5,
        };
        assert_eq!(rreq.packet_type(), 1);
        assert_eq!(RrepAckMessage.packet_type(), 4);
    }
}
