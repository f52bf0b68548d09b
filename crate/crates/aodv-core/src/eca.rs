//! Rule-driven protocol driver. Every protocol decision that the baseline
//! driver hard-codes is made here by running a classified event through the
//! rule registry; the resulting decisions are mapped back onto the same
//! mechanics in [`NodeProtocolState`], so both drivers stay observationally
//! identical.

use std::collections::BTreeMap;
use std::sync::Arc;

use eca_engine::{
    parse_rules, process_event, AttrTag, AttributeValue, Classifier, DslResult, EvalContext,
    EventType, Firing, OccurrenceSchema, RawOccurrence, RuleRegistry, Vocabulary,
};

use crate::message::{
    RerrMessage, RreqMessage, RrepMessage, PACKET_TYPE_RERR, PACKET_TYPE_RREP,
    PACKET_TYPE_RREP_ACK, PACKET_TYPE_RREQ,
};
use crate::node::{
    AodvError, LinkBreakReport, NodeProtocolState, RerrHandled, RreqAction, RrepHandled,
};
use crate::types::{DestSeq, NodeId};

pub const DEFAULT_RULES: &str = include_str!("../rules/default_aodv.rules");

/// Decision and probe names the adapter can service.
pub fn default_vocabulary() -> Vocabulary {
    Vocabulary::new(
        ["BroadcastRreq", "ReplyRrep", "ListAffected", "SendRrepAck"],
        [
            "valid_route_to_dest",
            "is_destination",
            "has_fresher_route",
            "link_broken",
        ],
    )
}

/// Parse a rule file against the routing vocabulary.
pub fn load_ruleset(text: &str) -> DslResult<RuleRegistry> {
    parse_rules(text, default_vocabulary())
}

/// The built-in ruleset; reproduces the baseline driver exactly.
pub fn default_ruleset() -> RuleRegistry {
    load_ruleset(DEFAULT_RULES).expect("built-in ruleset is valid")
}

fn field(name: &str, value: AttributeValue) -> (String, AttributeValue) {
    (name.to_string(), value)
}

fn seq_field(seq: DestSeq) -> AttributeValue {
    // The unknown-sequence marker travels as -1 so it stays comparable.
    AttributeValue::Int(match seq {
        DestSeq::Unknown => -1,
        DestSeq::Known(v) => v as i64,
    })
}

fn classifier() -> Classifier {
    let mut c = Classifier::new();
    let schema = |event_type: EventType, fields: &[(&str, AttrTag)]| OccurrenceSchema {
        event_type,
        fields: fields
            .iter()
            .map(|(n, t)| (n.to_string(), *t))
            .collect(),
    };
    c.declare(
        "prepare_route_request",
        schema(
            EventType::Request,
            &[
                ("packet_type", AttrTag::Int),
                ("J", AttrTag::Bool),
                ("R", AttrTag::Bool),
                ("G", AttrTag::Bool),
                ("D", AttrTag::Bool),
                ("hop_count", AttrTag::Int),
                ("rreq_id", AttrTag::Int),
                ("dest_ip", AttrTag::IpAddr),
                ("dest_seq", AttrTag::Int),
                ("src_ip", AttrTag::IpAddr),
                ("src_seq", AttrTag::Int),
            ],
        ),
    );
    c.declare(
        "generate_route_reply",
        schema(
            EventType::Request,
            &[
                ("packet_type", AttrTag::Int),
                ("R", AttrTag::Bool),
                ("A", AttrTag::Bool),
                ("prefix_size", AttrTag::Int),
                ("hop_count", AttrTag::Int),
                ("dest_ip", AttrTag::IpAddr),
                ("dest_seq", AttrTag::Int),
                ("src_ip", AttrTag::IpAddr),
                ("lifetime", AttrTag::Duration),
            ],
        ),
    );
    c.declare(
        "link_broken",
        schema(
            EventType::Notification,
            &[
                ("packet_type", AttrTag::Int),
                ("N", AttrTag::Bool),
                ("dest_count", AttrTag::Int),
                ("lost_neighbor", AttrTag::IpAddr),
            ],
        ),
    );
    c.declare(
        "generate_rrep_ack",
        schema(
            EventType::Request,
            &[
                ("packet_type", AttrTag::Int),
                ("A", AttrTag::Bool),
                ("hop_count", AttrTag::Int),
                ("dest_ip", AttrTag::IpAddr),
                ("dest_seq", AttrTag::Int),
                ("src_ip", AttrTag::IpAddr),
            ],
        ),
    );
    c
}

/// What a probe may look at while a rule is evaluated.
enum Scope<'a> {
    Originate { dest: NodeId },
    Rreq { rreq: &'a RreqMessage },
    LinkBreak { any_affected: bool },
    Rrep,
}

/// Evaluation context over the node's current state. Preparation counters
/// are staged here rather than applied: a counter only reaches the node when
/// the decision that owns it actually fires, so rules that share a
/// when-pattern cannot leak their preparation into each other's events.
struct AdapterCtx<'a> {
    node: &'a NodeProtocolState,
    now: u64,
    scope: Scope<'a>,
    staged: BTreeMap<String, i64>,
}

impl EvalContext for AdapterCtx<'_> {
    fn probe(&self, name: &str) -> Option<AttributeValue> {
        let answer = match (&self.scope, name) {
            (Scope::Originate { dest }, "valid_route_to_dest") => {
                self.node.has_valid_route(dest, self.now)
            }
            (Scope::Rreq { rreq }, "is_destination") => rreq.dest == self.node.me,
            (Scope::Rreq { rreq }, "has_fresher_route") => {
                self.node.has_fresher_route(rreq, self.now)
            }
            (Scope::LinkBreak { any_affected }, "link_broken") => *any_affected,
            _ => return None,
        };
        Some(AttributeValue::Bool(answer))
    }

    fn bump_counter(&mut self, name: &str, delta: i64) {
        *self.staged.entry(name.to_string()).or_insert(0) += delta;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiringRecord {
    pub rule_id: String,
    pub decision: String,
}

/// Per-node rule-driven driver. The registry and classifier are shared
/// across nodes; the event counter is local so event ids stay deterministic.
pub struct EcaDriver {
    registry: Arc<RuleRegistry>,
    classifier: Classifier,
    next_event: u64,
    invocations: u64,
    fired: Vec<FiringRecord>,
}

impl EcaDriver {
    pub fn new(registry: Arc<RuleRegistry>) -> Self {
        EcaDriver {
            registry,
            classifier: classifier(),
            next_event: 0,
            invocations: 0,
            fired: Vec::new(),
        }
    }

    fn occurrence(
        &mut self,
        node: &NodeProtocolState,
        kind: &str,
        now: u64,
        fields: Vec<(String, AttributeValue)>,
    ) -> RawOccurrence {
        let event_id = ((node.me.as_u32() as u128) << 64) | self.next_event as u128;
        self.next_event += 1;
        RawOccurrence {
            kind: kind.to_string(),
            event_id,
            occurred_at: now,
            source_node: node.me.to_string(),
            fields,
        }
    }

    fn run(
        &mut self,
        raw: &RawOccurrence,
        ctx: &mut AdapterCtx<'_>,
    ) -> Result<Vec<Firing>, AodvError> {
        let event = self.classifier.classify(raw)?;
        self.invocations += 1;
        let firings = process_event(&event, &self.registry, ctx)?;
        for f in &firings {
            self.fired.push(FiringRecord {
                rule_id: f.rule_id.clone(),
                decision: f.decision.clone(),
            });
        }
        Ok(firings)
    }
}

/// The two interchangeable decision drivers.
pub enum RouteDriver {
    Baseline,
    Eca(EcaDriver),
}

impl RouteDriver {
    pub fn eca(registry: Arc<RuleRegistry>) -> Self {
        RouteDriver::Eca(EcaDriver::new(registry))
    }

    pub fn is_eca(&self) -> bool {
        matches!(self, RouteDriver::Eca(_))
    }

    /// Rule firings recorded since the last drain; always empty for the
    /// baseline driver.
    pub fn drain_fired(&mut self) -> Vec<FiringRecord> {
        self.drain_activity().1
    }

    /// (engine invocations, firings) since the last drain. Invocations count
    /// every event run through the engine, fired or not.
    pub fn drain_activity(&mut self) -> (u64, Vec<FiringRecord>) {
        match self {
            RouteDriver::Baseline => (0, Vec::new()),
            RouteDriver::Eca(d) => (
                std::mem::take(&mut d.invocations),
                std::mem::take(&mut d.fired),
            ),
        }
    }

    pub fn originate(
        &mut self,
        node: &mut NodeProtocolState,
        dest: NodeId,
        now: u64,
    ) -> Result<RreqMessage, AodvError> {
        let driver = match self {
            RouteDriver::Baseline => return node.originate_route_request(dest, now),
            RouteDriver::Eca(d) => d,
        };
        let raw = driver.occurrence(
            node,
            "prepare_route_request",
            now,
            vec![
                field("packet_type", AttributeValue::Int(PACKET_TYPE_RREQ as i64)),
                field("J", AttributeValue::Bool(false)),
                field("R", AttributeValue::Bool(false)),
                field("G", AttributeValue::Bool(false)),
                field("D", AttributeValue::Bool(false)),
                field("hop_count", AttributeValue::Int(0)),
                field("rreq_id", AttributeValue::Int(node.next_rreq_id as i64)),
                field("dest_ip", AttributeValue::IpAddr(dest.0)),
                field("dest_seq", seq_field(node.last_known_seq(&dest))),
                field("src_ip", AttributeValue::IpAddr(node.me.0)),
                field("src_seq", AttributeValue::Int(node.seq as i64)),
            ],
        );
        let mut ctx = AdapterCtx {
            node,
            now,
            scope: Scope::Originate { dest },
            staged: BTreeMap::new(),
        };
        let firings = driver.run(&raw, &mut ctx)?;
        let staged = ctx.staged;
        for f in firings {
            match f.decision.as_str() {
                "BroadcastRreq" => {
                    // Commit the rule's own preparation counter now that its
                    // decision actually fired.
                    let delta = staged.get("node_seq").copied().unwrap_or(0);
                    node.seq = (node.seq as i64 + delta) as u64;
                    return Ok(node.build_rreq(dest, now));
                }
                other => return Err(AodvError::UnhandledDecision(other.to_string())),
            }
        }
        Err(AodvError::RouteAlreadyValid(dest))
    }

    pub fn on_rreq(
        &mut self,
        node: &mut NodeProtocolState,
        rreq: &RreqMessage,
        from: NodeId,
        now: u64,
    ) -> Result<RreqAction, AodvError> {
        let driver = match self {
            RouteDriver::Baseline => return Ok(node.handle_rreq(rreq, from, now)),
            RouteDriver::Eca(d) => d,
        };
        if let Err(reason) = node.rreq_preprocess(rreq, from, now) {
            return Ok(RreqAction::Discard(reason));
        }
        let raw = driver.occurrence(
            node,
            "generate_route_reply",
            now,
            vec![
                field("packet_type", AttributeValue::Int(PACKET_TYPE_RREP as i64)),
                field("R", AttributeValue::Bool(false)),
                field("A", AttributeValue::Bool(node.cfg.request_ack)),
                field("prefix_size", AttributeValue::Int(0)),
                field("hop_count", AttributeValue::Int(rreq.hop_count as i64)),
                field("dest_ip", AttributeValue::IpAddr(rreq.dest.0)),
                field("dest_seq", seq_field(node.last_known_seq(&rreq.dest))),
                field("src_ip", AttributeValue::IpAddr(rreq.origin.0)),
                field(
                    "lifetime",
                    AttributeValue::Duration(node.cfg.rrep_lifetime_ms),
                ),
            ],
        );
        let mut ctx = AdapterCtx {
            node,
            now,
            scope: Scope::Rreq { rreq },
            staged: BTreeMap::new(),
        };
        let firings = driver.run(&raw, &mut ctx)?;
        for f in firings {
            match f.decision.as_str() {
                "ReplyRrep" => {
                    if let Some(rrep) = node.make_rrep(rreq, from, now) {
                        return Ok(RreqAction::Reply(rrep));
                    }
                }
                other => return Err(AodvError::UnhandledDecision(other.to_string())),
            }
        }
        Ok(RreqAction::Rebroadcast(NodeProtocolState::rebroadcast(
            rreq,
        )))
    }

    pub fn on_rrep(
        &mut self,
        node: &mut NodeProtocolState,
        rrep: &RrepMessage,
        from: NodeId,
        now: u64,
    ) -> Result<RrepHandled, AodvError> {
        let driver = match self {
            RouteDriver::Baseline => return Ok(node.handle_rrep(rrep, from, now)),
            RouteDriver::Eca(d) => d,
        };
        let raw = driver.occurrence(
            node,
            "generate_rrep_ack",
            now,
            vec![
                field(
                    "packet_type",
                    AttributeValue::Int(PACKET_TYPE_RREP_ACK as i64),
                ),
                field("A", AttributeValue::Bool(rrep.ack_required)),
                field("hop_count", AttributeValue::Int(rrep.hop_count as i64)),
                field("dest_ip", AttributeValue::IpAddr(rrep.dest.0)),
                field("dest_seq", AttributeValue::Int(rrep.dest_seq as i64)),
                field("src_ip", AttributeValue::IpAddr(rrep.origin.0)),
            ],
        );
        let mut ctx = AdapterCtx {
            node,
            now,
            scope: Scope::Rrep,
            staged: BTreeMap::new(),
        };
        let firings = driver.run(&raw, &mut ctx)?;
        let mut send_ack = false;
        for f in firings {
            match f.decision.as_str() {
                "SendRrepAck" => send_ack = true,
                other => return Err(AodvError::UnhandledDecision(other.to_string())),
            }
        }
        Ok(node.handle_rrep_with_ack(rrep, from, now, send_ack))
    }

    pub fn on_link_break(
        &mut self,
        node: &mut NodeProtocolState,
        lost: NodeId,
        now: u64,
    ) -> Result<LinkBreakReport, AodvError> {
        let driver = match self {
            RouteDriver::Baseline => return Ok(node.detect_link_break(lost, now)),
            RouteDriver::Eca(d) => d,
        };
        node.note_neighbor_lost(&lost);
        let affected = node.scan_affected(&lost);
        let raw = driver.occurrence(
            node,
            "link_broken",
            now,
            vec![
                field("packet_type", AttributeValue::Int(PACKET_TYPE_RERR as i64)),
                field("N", AttributeValue::Bool(false)),
                field("dest_count", AttributeValue::Int(affected.len() as i64)),
                field("lost_neighbor", AttributeValue::IpAddr(lost.0)),
            ],
        );
        let mut ctx = AdapterCtx {
            node,
            now,
            scope: Scope::LinkBreak {
                any_affected: !affected.is_empty(),
            },
            staged: BTreeMap::new(),
        };
        let firings = driver.run(&raw, &mut ctx)?;
        for f in firings {
            match f.decision.as_str() {
                "ListAffected" => return Ok(node.apply_link_break(&lost, now)),
                other => return Err(AodvError::UnhandledDecision(other.to_string())),
            }
        }
        Ok(LinkBreakReport {
            rerr: None,
            affected: Vec::new(),
            recipients: Default::default(),
        })
    }

    /// Route-error propagation is pure forwarding mechanics; both drivers
    /// share it unchanged.
    pub fn on_rerr(
        &mut self,
        node: &mut NodeProtocolState,
        rerr: &RerrMessage,
        from: NodeId,
        now: u64,
    ) -> RerrHandled {
        node.handle_rerr(rerr, from, now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AodvConfig;
    use crate::node::DiscardReason;
    use crate::message::RreqFlags;
    use crate::table::RouteCandidate;

    fn pair(addr: &str) -> (NodeProtocolState, NodeProtocolState, RouteDriver, RouteDriver) {
        let base = NodeProtocolState::new(addr.parse().unwrap(), AodvConfig::default());
        let eca = base.clone();
        let registry = Arc::new(default_ruleset());
        (base, eca, RouteDriver::Baseline, RouteDriver::eca(registry))
    }

    #[test]
    fn built_in_ruleset_has_the_four_rules() {
        let reg = default_ruleset();
        let ids: Vec<_> = reg.rules().iter().map(|r| r.rule_id.as_str()).collect();
        assert_eq!(ids, ["E1", "E2", "E3", "E4"]);
        assert!(reg.is_frozen());
    }

    #[test]
    fn originate_is_equivalent_and_records_firing() {
        let (mut base, mut eca, mut bd, mut ed) = pair("10.32.21.83");
        base.seq = 4;
        eca.seq = 4;
        base.next_rreq_id = 4;
        eca.next_rreq_id = 4;
        let dest: NodeId = "10.32.21.1".parse().unwrap();
        let a = bd.originate(&mut base, dest, 100).unwrap();
        let b = ed.originate(&mut eca, dest, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(base, eca);
        assert_eq!(base.seq, 5);
        assert!(bd.drain_fired().is_empty());
        assert_eq!(
            ed.drain_fired(),
            vec![FiringRecord {
                rule_id: "E1".into(),
                decision: "BroadcastRreq".into()
            }]
        );
    }

    #[test]
    fn originate_with_valid_route_fails_in_both_drivers() {
        let (mut base, mut eca, mut bd, mut ed) = pair("10.0.0.1");
        let dest: NodeId = "10.0.0.9".parse().unwrap();
        for n in [&mut base, &mut eca] {
            n.table.update(
                dest,
                RouteCandidate {
                    next_hop: dest,
                    hop_count: 1,
                    dest_seq: 3,
                    lifetime_ms: 5000,
                },
                0,
            );
        }
        assert_eq!(
            bd.originate(&mut base, dest, 10).unwrap_err(),
            ed.originate(&mut eca, dest, 10).unwrap_err()
        );
        // The staged preparation counter must not have leaked into the node.
        assert_eq!(eca.seq, base.seq);
        assert!(ed.drain_fired().is_empty());
    }

    fn rreq(origin: &str, dest: &str) -> RreqMessage {
        RreqMessage {
            flags: RreqFlags::default(),
            hop_count: 1,
            rreq_id: 7,
            dest: dest.parse().unwrap(),
            dest_seq: DestSeq::Known(13),
            origin: origin.parse().unwrap(),
            origin_seq: 5,
        }
    }

    #[test]
    fn rreq_handling_is_equivalent_at_destination_and_relay() {
        let from: NodeId = "10.0.0.5".parse().unwrap();
        // Destination: replies and bumps its own sequence number once.
        let (mut base, mut eca, mut bd, mut ed) = pair("10.0.0.9");
        let r = rreq("10.0.0.1", "10.0.0.9");
        let a = bd.on_rreq(&mut base, &r, from, 0).unwrap();
        let b = ed.on_rreq(&mut eca, &r, from, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(base, eca);
        assert!(matches!(a, RreqAction::Reply(_)));
        assert_eq!(
            ed.drain_fired(),
            vec![FiringRecord {
                rule_id: "E2".into(),
                decision: "ReplyRrep".into()
            }]
        );

        // Relay without a fresher route: rebroadcasts, no firing, and the
        // shared request-rule preparation must not touch the sequence number.
        let (mut base, mut eca, mut bd, mut ed) = pair("10.0.0.2");
        let a = bd.on_rreq(&mut base, &r, from, 0).unwrap();
        let b = ed.on_rreq(&mut eca, &r, from, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(base, eca);
        assert_eq!(eca.seq, 0);
        assert!(matches!(a, RreqAction::Rebroadcast(_)));
        assert!(ed.drain_fired().is_empty());

        // Duplicate: discarded before any rule runs.
        let b2 = ed.on_rreq(&mut eca, &r, from, 1).unwrap();
        assert_eq!(b2, RreqAction::Discard(DiscardReason::Duplicate));
        assert!(ed.drain_fired().is_empty());
    }

    #[test]
    fn rrep_ack_decision_is_rule_driven() {
        let (mut base, mut eca, mut bd, mut ed) = pair("10.0.0.1");
        let from: NodeId = "10.0.0.2".parse().unwrap();
        let mut rrep = RrepMessage {
            repair: false,
            ack_required: true,
            prefix_size: 0,
            hop_count: 0,
            dest: "10.0.0.9".parse().unwrap(),
            dest_seq: 21,
            origin: "10.0.0.1".parse().unwrap(),
            lifetime_ms: 3000,
        };
        let a = bd.on_rrep(&mut base, &rrep, from, 5).unwrap();
        let b = ed.on_rrep(&mut eca, &rrep, from, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ack_to, Some(from));
        assert_eq!(
            ed.drain_fired(),
            vec![FiringRecord {
                rule_id: "E4".into(),
                decision: "SendRrepAck".into()
            }]
        );

        // No A flag: the rule stays silent in both drivers.
        rrep.ack_required = false;
        rrep.dest_seq = 22;
        let a = bd.on_rrep(&mut base, &rrep, from, 6).unwrap();
        let b = ed.on_rrep(&mut eca, &rrep, from, 6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ack_to, None);
        assert!(ed.drain_fired().is_empty());
    }

    #[test]
    fn link_break_is_equivalent() {
        let (mut base, mut eca, mut bd, mut ed) = pair("10.0.0.2");
        let lost: NodeId = "10.0.0.3".parse().unwrap();
        let dest: NodeId = "10.0.0.9".parse().unwrap();
        for n in [&mut base, &mut eca] {
            n.table.update(
                dest,
                RouteCandidate {
                    next_hop: lost,
                    hop_count: 2,
                    dest_seq: 5,
                    lifetime_ms: 5000,
                },
                0,
            );
        }
        let a = bd.on_link_break(&mut base, lost, 100).unwrap();
        let b = ed.on_link_break(&mut eca, lost, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(base, eca);
        assert!(a.rerr.is_some());
        assert_eq!(
            ed.drain_fired(),
            vec![FiringRecord {
                rule_id: "E3".into(),
                decision: "ListAffected".into()
            }]
        );

        // Lost neighbor serving nothing: no firing, empty report.
        let unused: NodeId = "10.0.0.8".parse().unwrap();
        let a = bd.on_link_break(&mut base, unused, 101).unwrap();
        let b = ed.on_link_break(&mut eca, unused, 101).unwrap();
        assert_eq!(a, b);
        assert!(a.rerr.is_none());
        assert!(ed.drain_fired().is_empty());
    }

    #[test]
    fn unknown_decision_in_custom_ruleset_is_reported() {
        let text = "RULE X WHEN Request IF packet_type == 1 THEN ReplyRrep()";
        let registry = Arc::new(load_ruleset(text).unwrap());
        let mut node = NodeProtocolState::new("10.0.0.1".parse().unwrap(), AodvConfig::default());
        let mut driver = RouteDriver::eca(registry);
        let err = driver
            .originate(&mut node, "10.0.0.9".parse().unwrap(), 0)
            .unwrap_err();
        assert_eq!(err, AodvError::UnhandledDecision("ReplyRrep".into()));
    }
}
