//! Randomized check that the baseline and rule-driven drivers stay in
//! lockstep: the same operation sequence applied to both yields identical
//! outputs and identical node state after every step.

use std::sync::Arc;

use aodv_core::{
    default_ruleset, AodvConfig, DestSeq, NodeId, NodeProtocolState, RerrMessage, RouteDriver,
    RreqFlags, RreqMessage, RrepMessage,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Originate { dest: u8, now: u64 },
    Rreq { origin: u8, dest: u8, id: u32, hops: u32, seq: u64, from: u8, now: u64 },
    Rrep { dest: u8, seq: u64, hops: u32, origin: u8, ack: bool, from: u8, now: u64 },
    LinkBreak { lost: u8, now: u64 },
    Rerr { dest: u8, seq: u64, from: u8, now: u64 },
    Tick { now: u64 },
}

fn ops() -> impl Strategy<Value = Vec<Op>> {
    let id = 0u8..8;
    let op = prop_oneof![
        (id.clone(), 0u64..5000).prop_map(|(dest, now)| Op::Originate { dest, now }),
        (id.clone(), id.clone(), 0u32..4, 0u32..5, 1u64..20, id.clone(), 0u64..5000).prop_map(
            |(origin, dest, id, hops, seq, from, now)| Op::Rreq {
                origin,
                dest,
                id,
                hops,
                seq,
                from,
                now
            }
        ),
        (id.clone(), 1u64..20, 0u32..5, id.clone(), any::<bool>(), id.clone(), 0u64..5000)
            .prop_map(|(dest, seq, hops, origin, ack, from, now)| Op::Rrep {
                dest,
                seq,
                hops,
                origin,
                ack,
                from,
                now
            }),
        (id.clone(), 0u64..5000).prop_map(|(lost, now)| Op::LinkBreak { lost, now }),
        (id.clone(), 1u64..20, id.clone(), 0u64..5000)
            .prop_map(|(dest, seq, from, now)| Op::Rerr { dest, seq, from, now }),
        (0u64..8000).prop_map(|now| Op::Tick { now }),
    ];
    proptest::collection::vec(op, 1..30)
}

fn node(i: u8) -> NodeId {
    NodeId::from_index(i as usize)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn drivers_stay_in_lockstep(ops in ops()) {
        let me = NodeId::from_index(50);
        let mut base = NodeProtocolState::new(me, AodvConfig::default());
        let mut eca = base.clone();
        let mut bd = RouteDriver::Baseline;
        let mut ed = RouteDriver::eca(Arc::new(default_ruleset()));
        for op in ops {
            match op {
                Op::Originate { dest, now } => {
                    let a = bd.originate(&mut base, node(dest), now);
                    let b = ed.originate(&mut eca, node(dest), now);
                    prop_assert_eq!(a, b);
                }
                Op::Rreq { origin, dest, id, hops, seq, from, now } => {
                    let msg = RreqMessage {
                        flags: RreqFlags::default(),
                        hop_count: hops,
                        rreq_id: id,
                        dest: node(dest),
                        dest_seq: if seq % 3 == 0 { DestSeq::Unknown } else { DestSeq::Known(seq) },
                        origin: node(origin),
                        origin_seq: seq,
                    };
                    let a = bd.on_rreq(&mut base, &msg, node(from), now).unwrap();
                    let b = ed.on_rreq(&mut eca, &msg, node(from), now).unwrap();
                    prop_assert_eq!(a, b);
                }
                Op::Rrep { dest, seq, hops, origin, ack, from, now } => {
                    let msg = RrepMessage {
                        repair: false,
                        ack_required: ack,
                        prefix_size: 0,
                        hop_count: hops,
                        dest: node(dest),
                        dest_seq: seq,
                        origin: node(origin),
                        lifetime_ms: 3000,
                    };
                    let a = bd.on_rrep(&mut base, &msg, node(from), now).unwrap();
                    let b = ed.on_rrep(&mut eca, &msg, node(from), now).unwrap();
                    prop_assert_eq!(a, b);
                }
                Op::LinkBreak { lost, now } => {
                    let a = bd.on_link_break(&mut base, node(lost), now).unwrap();
                    let b = ed.on_link_break(&mut eca, node(lost), now).unwrap();
                    prop_assert_eq!(a, b);
                }
                Op::Rerr { dest, seq, from, now } => {
                    let msg = RerrMessage {
                        no_delete: false,
                        unreachable: vec![(node(dest), seq)],
                    };
                    let a = bd.on_rerr(&mut base, &msg, node(from), now);
                    let b = ed.on_rerr(&mut eca, &msg, node(from), now);
                    prop_assert_eq!(a, b);
                }
                Op::Tick { now } => {
                    let a = base.tick_timers(now);
                    let b = eca.tick_timers(now);
                    prop_assert_eq!(a, b);
                }
            }
            prop_assert_eq!(&base, &eca);
        }
    }
}
