//! Per-node AODV protocol state and the baseline (hard-coded) decision
//! logic. The message-building and table-mutation mechanics live here and
//! are shared with the rule-driven adapter, so both drivers produce the
//! same effects from the same decisions.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::config::AodvConfig;
use crate::message::{RerrMessage, RreqFlags, RreqMessage, RrepMessage};
use crate::table::{RouteCandidate, RoutingTable, UpdateOutcome};
use crate::types::{DestSeq, NodeId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AodvError {
    #[error("a valid route to {0} already exists")]
    RouteAlreadyValid(NodeId),
    #[error("ruleset produced a decision the adapter cannot map: `{0}`")]
    UnhandledDecision(String),
    #[error(transparent)]
    Engine(#[from] eca_engine::EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingDiscovery {
    pub retries_left: u32,
    pub deadline: u64,
    pub buffered: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscardReason {
    OwnEcho,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RreqAction {
    Discard(DiscardReason),
    Rebroadcast(RreqMessage),
    Reply(RrepMessage),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RrepOutcome {
    /// Forward toward the origin along the reverse route.
    Forward {
        rrep: RrepMessage,
        next_hop: NodeId,
    },
    /// This node is the origin; pending discovery cleared.
    Consumed,
    /// Reverse route expired; counted in metrics by the caller.
    NoReverseRoute,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RrepHandled {
    pub outcome: RrepOutcome,
    /// Send a RREP-ACK to this neighbor (A flag honored).
    pub ack_to: Option<NodeId>,
    pub forward_route: UpdateOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkBreakReport {
    pub rerr: Option<RerrMessage>,
    pub affected: Vec<NodeId>,
    /// Precursors to notify; broadcast when more than one.
    pub recipients: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RerrHandled {
    pub invalidated: Vec<(NodeId, u64)>,
    pub forward: Option<RerrMessage>,
    pub recipients: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expiry {
    RouteExpired(NodeId),
    DiscoveryTimeout { dest: NodeId, retries_left: u32 },
    NeighborLost(NodeId),
    SeenRreqPurged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeProtocolState {
    pub me: NodeId,
    pub seq: u64,
    pub next_rreq_id: u32,
    pub table: RoutingTable,
    /// (origin, rreq id) -> cache expiry.
    pub seen_rreqs: BTreeMap<(NodeId, u32), u64>,
    pub pending: BTreeMap<NodeId, PendingDiscovery>,
    /// Neighbor -> last-heard time; maintained only when hello beacons or
    /// the oracle link-state feed are active.
    pub neighbors: BTreeMap<NodeId, u64>,
    pub cfg: AodvConfig,
}

impl NodeProtocolState {
    pub fn new(me: NodeId, cfg: AodvConfig) -> Self {
        NodeProtocolState {
            me,
            seq: 0,
            next_rreq_id: 0,
            table: RoutingTable::new(),
            seen_rreqs: BTreeMap::new(),
            pending: BTreeMap::new(),
            neighbors: BTreeMap::new(),
            cfg,
        }
    }

    pub fn has_valid_route(&self, dest: &NodeId, now: u64) -> bool {
        self.table.valid_route(dest, now).is_some()
    }

    /// Last known destination sequence number, valid or not.
    pub fn last_known_seq(&self, dest: &NodeId) -> DestSeq {
        match self.table.get(dest) {
            Some(entry) => DestSeq::Known(entry.dest_seq),
            None => DestSeq::Unknown,
        }
    }

    /// Stored route is valid and strictly fresher than what the RREQ knows.
    pub fn has_fresher_route(&self, rreq: &RreqMessage, now: u64) -> bool {
        self.table
            .valid_route(&rreq.dest, now)
            .is_some_and(|e| DestSeq::Known(e.dest_seq) > rreq.dest_seq)
    }

    // ---- E1: route request origination -------------------------------

    pub fn originate_route_request(
        &mut self,
        dest: NodeId,
        now: u64,
    ) -> Result<RreqMessage, AodvError> {
        if self.has_valid_route(&dest, now) {
            return Err(AodvError::RouteAlreadyValid(dest));
        }
        self.seq += 1;
        Ok(self.build_rreq(dest, now))
    }

    /// Message-building mechanics after the sequence bump: consume a RREQ
    /// id, record the pending discovery, and self-mark the (origin, id)
    /// pair so echoes are discarded.
    pub fn build_rreq(&mut self, dest: NodeId, now: u64) -> RreqMessage {
        let rreq_id = self.next_rreq_id;
        self.next_rreq_id += 1;
        let deadline = now + self.cfg.discovery_timeout_ms;
        self.pending
            .entry(dest)
            .and_modify(|p| p.deadline = deadline)
            .or_insert(PendingDiscovery {
                retries_left: self.cfg.discovery_retries,
                deadline,
                buffered: 0,
            });
        self.seen_rreqs
            .insert((self.me, rreq_id), now + self.cfg.seen_rreq_ms);
        RreqMessage {
            flags: RreqFlags::default(),
            hop_count: 0,
            rreq_id,
            dest,
            dest_seq: self.last_known_seq(&dest),
            origin: self.me,
            origin_seq: self.seq,
        }
    }

    // ---- E2: route request handling ----------------------------------

    pub fn handle_rreq(&mut self, rreq: &RreqMessage, from: NodeId, now: u64) -> RreqAction {
        match self.rreq_preprocess(rreq, from, now) {
            Err(reason) => RreqAction::Discard(reason),
            Ok(_) => {
                if self.rreq_reply_predicate(rreq, now) {
                    match self.make_rrep(rreq, from, now) {
                        Some(rrep) => RreqAction::Reply(rrep),
                        None => RreqAction::Rebroadcast(Self::rebroadcast(rreq)),
                    }
                } else {
                    RreqAction::Rebroadcast(Self::rebroadcast(rreq))
                }
            }
        }
    }

    /// Dedupe and reverse-route installation, shared by both drivers.
    pub fn rreq_preprocess(
        &mut self,
        rreq: &RreqMessage,
        from: NodeId,
        now: u64,
    ) -> Result<UpdateOutcome, DiscardReason> {
        if rreq.origin == self.me {
            return Err(DiscardReason::OwnEcho);
        }
        let key = (rreq.origin, rreq.rreq_id);
        if self.seen_rreqs.get(&key).is_some_and(|&exp| exp >= now) {
            return Err(DiscardReason::Duplicate);
        }
        self.seen_rreqs.insert(key, now + self.cfg.seen_rreq_ms);
        Ok(self.table.update(
            rreq.origin,
            RouteCandidate {
                next_hop: from,
                hop_count: rreq.hop_count + 1,
                dest_seq: rreq.origin_seq,
                lifetime_ms: self.cfg.active_route_ms,
            },
            now,
        ))
    }

    pub fn rreq_reply_predicate(&self, rreq: &RreqMessage, now: u64) -> bool {
        rreq.dest == self.me || self.has_fresher_route(rreq, now)
    }

    /// Build the RREP this node would answer with: from itself when it is
    /// the destination (bumping its own sequence number by one), otherwise
    /// from a stored fresher route (adding the requester as precursor).
    pub fn make_rrep(&mut self, rreq: &RreqMessage, from: NodeId, _now: u64) -> Option<RrepMessage> {
        let ack = self.cfg.request_ack;
        if rreq.dest == self.me {
            self.seq += 1;
            return Some(RrepMessage {
                repair: false,
                ack_required: ack,
                prefix_size: 0,
                hop_count: 0,
                dest: self.me,
                dest_seq: self.seq,
                origin: rreq.origin,
                lifetime_ms: self.cfg.rrep_lifetime_ms,
            });
        }
        let lifetime = self.cfg.rrep_lifetime_ms;
        let entry = self.table.get_mut(&rreq.dest)?;
        if !entry.valid {
            return None;
        }
        entry.precursors.insert(from);
        Some(RrepMessage {
            repair: false,
            ack_required: ack,
            prefix_size: 0,
            hop_count: entry.hop_count,
            dest: rreq.dest,
            dest_seq: entry.dest_seq,
            origin: rreq.origin,
            lifetime_ms: lifetime,
        })
    }

    pub fn rebroadcast(rreq: &RreqMessage) -> RreqMessage {
        let mut fwd = *rreq;
        fwd.hop_count += 1;
        fwd
    }

    // ---- Route replies (incl. E4 ack decision) ------------------------

    pub fn handle_rrep(&mut self, rrep: &RrepMessage, from: NodeId, now: u64) -> RrepHandled {
        let ack = rrep.ack_required;
        self.handle_rrep_with_ack(rrep, from, now, ack)
    }

    /// The ack decision is passed in so the rule-driven driver can make it.
    pub fn handle_rrep_with_ack(
        &mut self,
        rrep: &RrepMessage,
        from: NodeId,
        now: u64,
        send_ack: bool,
    ) -> RrepHandled {
        let forward_route = self.table.update(
            rrep.dest,
            RouteCandidate {
                next_hop: from,
                hop_count: rrep.hop_count + 1,
                dest_seq: rrep.dest_seq,
                lifetime_ms: rrep.lifetime_ms,
            },
            now,
        );
        let ack_to = send_ack.then_some(from);
        if rrep.origin == self.me {
            self.pending.remove(&rrep.dest);
            return RrepHandled {
                outcome: RrepOutcome::Consumed,
                ack_to,
                forward_route,
            };
        }
        let next_hop = match self.table.valid_route(&rrep.origin, now) {
            Some(entry) => entry.next_hop,
            None => {
                return RrepHandled {
                    outcome: RrepOutcome::NoReverseRoute,
                    ack_to,
                    forward_route,
                }
            }
        };
        self.table
            .refresh_lifetime(&rrep.origin, now, self.cfg.active_route_ms);
        if let Some(entry) = self.table.get_mut(&rrep.dest) {
            entry.precursors.insert(next_hop);
        }
        let mut fwd = *rrep;
        fwd.hop_count += 1;
        RrepHandled {
            outcome: RrepOutcome::Forward {
                rrep: fwd,
                next_hop,
            },
            ack_to,
            forward_route,
        }
    }

    // ---- E3: link breaks and route errors ----------------------------

    pub fn note_neighbor_lost(&mut self, lost: &NodeId) {
        self.neighbors.remove(lost);
    }

    /// Destinations whose valid route goes through the lost neighbor.
    pub fn scan_affected(&self, lost: &NodeId) -> Vec<NodeId> {
        self.table
            .iter()
            .filter(|e| e.valid && e.next_hop == *lost)
            .map(|e| e.dest)
            .collect()
    }

    pub fn detect_link_break(&mut self, lost: NodeId, now: u64) -> LinkBreakReport {
        self.note_neighbor_lost(&lost);
        self.apply_link_break(&lost, now)
    }

    /// Invalidate every route through the lost neighbor (bumping each
    /// destination sequence number) and build the RERR for the precursors.
    pub fn apply_link_break(&mut self, lost: &NodeId, _now: u64) -> LinkBreakReport {
        let mut affected = Vec::new();
        let mut unreachable = Vec::new();
        let mut recipients = BTreeSet::new();
        for entry in self.table.iter_mut() {
            if entry.valid && entry.next_hop == *lost {
                entry.valid = false;
                entry.dest_seq += 1;
                affected.push(entry.dest);
                unreachable.push((entry.dest, entry.dest_seq));
                recipients.extend(entry.precursors.iter().copied());
            }
        }
        let rerr = (!unreachable.is_empty()).then(|| RerrMessage {
            no_delete: false,
            unreachable,
        });
        LinkBreakReport {
            rerr,
            affected,
            recipients,
        }
    }

    pub fn handle_rerr(&mut self, rerr: &RerrMessage, from: NodeId, _now: u64) -> RerrHandled {
        let mut invalidated = Vec::new();
        let mut recipients = BTreeSet::new();
        for &(dest, seq) in &rerr.unreachable {
            if let Some(entry) = self.table.get_mut(&dest) {
                if entry.valid && entry.next_hop == from && entry.dest_seq <= seq {
                    entry.valid = false;
                    entry.dest_seq = seq;
                    invalidated.push((dest, seq));
                    recipients.extend(entry.precursors.iter().copied());
                }
            }
        }
        let forward = (!invalidated.is_empty()).then(|| RerrMessage {
            no_delete: rerr.no_delete,
            unreachable: invalidated.clone(),
        });
        RerrHandled {
            invalidated,
            forward,
            recipients,
        }
    }

    // ---- Timers -------------------------------------------------------

    pub fn tick_timers(&mut self, now: u64) -> Vec<Expiry> {
        let mut expiries = Vec::new();
        let mut expired_routes = Vec::new();
        for entry in self.table.iter_mut() {
            if entry.valid && entry.expires_at < now {
                entry.valid = false;
                entry.dest_seq += 1;
                expired_routes.push(entry.dest);
            }
        }
        for dest in expired_routes {
            expiries.push(Expiry::RouteExpired(dest));
        }
        for (dest, p) in &self.pending {
            if p.deadline <= now {
                expiries.push(Expiry::DiscoveryTimeout {
                    dest: *dest,
                    retries_left: p.retries_left,
                });
            }
        }
        let silence = self.cfg.allowed_hello_loss as u64 * self.cfg.hello_interval_ms;
        let lost: Vec<NodeId> = self
            .neighbors
            .iter()
            .filter(|(_, &last)| now > last + silence)
            .map(|(id, _)| *id)
            .collect();
        for id in lost {
            expiries.push(Expiry::NeighborLost(id));
        }
        let before = self.seen_rreqs.len();
        self.seen_rreqs.retain(|_, &mut exp| exp >= now);
        for _ in 0..before - self.seen_rreqs.len() {
            expiries.push(Expiry::SeenRreqPurged);
        }
        expiries
    }

    /// Consume one retry: the caller re-originates the request afterwards.
    pub fn begin_retry(&mut self, dest: &NodeId, now: u64) {
        if let Some(p) = self.pending.get_mut(dest) {
            p.retries_left = p.retries_left.saturating_sub(1);
            p.deadline = now + self.cfg.discovery_timeout_ms;
        }
    }

    pub fn take_pending(&mut self, dest: &NodeId) -> Option<PendingDiscovery> {
        self.pending.remove(dest)
    }

    pub fn note_buffered(&mut self, dest: &NodeId) {
        if let Some(p) = self.pending.get_mut(dest) {
            p.buffered += 1;
        }
    }

    pub fn heard_from(&mut self, neighbor: NodeId, now: u64) {
        self.neighbors.insert(neighbor, now);
    }
}
