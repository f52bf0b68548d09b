//! The simulation engine: seeded node state, unit-disk connectivity, timed
//! message delivery with loss, constant-bit-rate traffic, and trace output.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use aodv_core::{
    AodvConfig, ControlMessage, HelloMessage, NodeId, NodeProtocolState, RouteDriver, RreqAction,
    RrepOutcome, Expiry, LinkBreakReport, DATA_BYTES,
};
use eca_engine::RuleRegistry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mobility::{Area, MobilityParams, MobilityState, Position};
use crate::queue::EventQueue;
use crate::trace::{Trace, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HelloMode {
    /// Periodic beacons; silence drives link-break detection.
    On,
    /// No beacons; breaks surface only through failed unicasts.
    Off,
    /// No beacons; tests cut links explicitly and detection is immediate
    /// at both endpoints.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub src: usize,
    pub dst: usize,
    pub start_ms: u64,
    pub interval_ms: u64,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    RandomUniform,
    Fixed(Vec<Position>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCut {
    pub a: usize,
    pub b: usize,
    pub at_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub nodes: usize,
    pub area: Area,
    pub range_m: f64,
    pub sim_time_ms: u64,
    pub seed: u64,
    pub mobility: MobilityParams,
    pub hop_delay_ms: u64,
    pub loss_p: f64,
    pub hello: HelloMode,
    pub aodv: AodvConfig,
    pub flows: Vec<Flow>,
    pub placement: Placement,
    pub link_cuts: Vec<LinkCut>,
}

impl Default for SimParams {
    // Reference experiment defaults: 100 nodes in 25 m × 25 m, 30 m range,
    // 500 s, 512-byte data packets.
    fn default() -> Self {
        SimParams {
            nodes: 100,
            area: Area { x: 25.0, y: 25.0 },
            range_m: 30.0,
            sim_time_ms: 500_000,
            seed: 1,
            mobility: MobilityParams {
                speed_min: 0.5,
                speed_max: 2.0,
                pause_ms: 2000,
            },
            hop_delay_ms: 2,
            loss_p: 0.0,
            hello: HelloMode::On,
            aodv: AodvConfig::default(),
            flows: Vec::new(),
            placement: Placement::RandomUniform,
            link_cuts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPacket {
    pub src: NodeId,
    pub dst: NodeId,
    pub flow: usize,
    pub no: u32,
    pub sent_at: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    Control(ControlMessage),
    Data(DataPacket),
}

impl Packet {
    fn tag(&self) -> &'static str {
        match self {
            Packet::Control(c) => c.tag(),
            Packet::Data(_) => "DATA",
        }
    }
}

#[derive(Debug)]
enum EventKind {
    Deliver { to: usize, from: usize, packet: Packet },
    TimerTick { node: usize },
    MobilityUpdate,
    TrafficSend { flow: usize, no: u32 },
    HelloBeacon { node: usize },
    LinkCut { a: usize, b: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Counters {
    pub data_sent: u64,
    pub data_delivered: u64,
    pub data_dropped: u64,
    pub buffered_at_end: u64,
    pub ctrl_bytes: u64,
    pub data_bytes: u64,
    pub latency_total_ms: u64,
    pub rreq_tx: u64,
    pub rrep_tx: u64,
    pub rerr_tx: u64,
    pub ack_tx: u64,
    pub hello_tx: u64,
    pub eca_invocations: u64,
    pub eca_firings: u64,
}

pub struct SimOutcome {
    pub trace: Trace,
    pub counters: Counters,
}

struct SimNode {
    proto: NodeProtocolState,
    driver: RouteDriver,
    mob: MobilityState,
    mob_rng: ChaCha8Rng,
    net_rng: ChaCha8Rng,
    buffer: BTreeMap<NodeId, Vec<DataPacket>>,
}

enum SendMode {
    Broadcast,
    Unicast(usize),
}

const TICK_MS: u64 = 100;
const MOBILITY_REFRESH_MS: u64 = 1000;

fn substream_seed(master: u64, node: usize, stream: u64) -> u64 {
    // splitmix64 finalizer over (master, node, stream).
    let mut z = master
        .wrapping_add((node as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct Simulator {
    params: SimParams,
    nodes: Vec<SimNode>,
    queue: EventQueue<EventKind>,
    blocked: BTreeSet<(usize, usize)>,
    now: u64,
    trace: Trace,
    pub counters: Counters,
}

impl Simulator {
    /// `registry` selects the rule-driven driver; `None` runs the baseline.
    pub fn new(params: SimParams, registry: Option<Arc<RuleRegistry>>) -> Self {
        assert!(params.nodes >= 1);
        assert!((0.0..=1.0).contains(&params.loss_p));
        let mut nodes = Vec::with_capacity(params.nodes);
        for i in 0..params.nodes {
            let mut mob_rng = ChaCha8Rng::seed_from_u64(substream_seed(params.seed, i, 0));
            let net_rng = ChaCha8Rng::seed_from_u64(substream_seed(params.seed, i, 1));
            let pos = match &params.placement {
                Placement::Fixed(ps) => ps[i],
                Placement::RandomUniform => Position {
                    x: mob_rng.gen_range(0.0..=params.area.x),
                    y: mob_rng.gen_range(0.0..=params.area.y),
                },
            };
            let mob = MobilityState::new(pos, &params.mobility, params.area, &mut mob_rng);
            let driver = match &registry {
                Some(reg) => RouteDriver::eca(reg.clone()),
                None => RouteDriver::Baseline,
            };
            nodes.push(SimNode {
                proto: NodeProtocolState::new(NodeId::from_index(i), params.aodv),
                driver,
                mob,
                mob_rng,
                net_rng,
                buffer: BTreeMap::new(),
            });
        }
        let mut queue = EventQueue::new();
        for (fi, flow) in params.flows.iter().enumerate() {
            assert!(flow.src != flow.dst && flow.src < params.nodes && flow.dst < params.nodes);
            if flow.count > 0 {
                queue
                    .schedule(0, flow.start_ms, EventKind::TrafficSend { flow: fi, no: 0 })
                    .unwrap();
            }
        }
        for i in 0..params.nodes {
            queue
                .schedule(0, TICK_MS, EventKind::TimerTick { node: i })
                .unwrap();
            if params.hello == HelloMode::On {
                queue
                    .schedule(
                        0,
                        params.aodv.hello_interval_ms,
                        EventKind::HelloBeacon { node: i },
                    )
                    .unwrap();
            }
        }
        queue
            .schedule(0, MOBILITY_REFRESH_MS, EventKind::MobilityUpdate)
            .unwrap();
        for cut in &params.link_cuts {
            queue
                .schedule(0, cut.at_ms, EventKind::LinkCut { a: cut.a, b: cut.b })
                .unwrap();
        }
        Simulator {
            params,
            nodes,
            queue,
            blocked: BTreeSet::new(),
            now: 0,
            trace: Trace::default(),
            counters: Counters::default(),
        }
    }

    pub fn node_position(&mut self, i: usize) -> Position {
        self.advance_node(i, self.now);
        self.nodes[i].mob.pos
    }

    fn index_of(&self, id: NodeId) -> usize {
        (id.as_u32() - NodeId::from_index(0).as_u32()) as usize
    }

    fn advance_node(&mut self, i: usize, t: u64) {
        let n = &mut self.nodes[i];
        n.mob
            .advance_to(t, &self.params.mobility, self.params.area, &mut n.mob_rng);
    }

    /// Unit-disk neighborhood at time `t`, minus explicitly cut links.
    fn neighbors_of(&mut self, i: usize, t: u64) -> Vec<usize> {
        for j in 0..self.nodes.len() {
            self.advance_node(j, t);
        }
        let here = self.nodes[i].mob.pos;
        let mut out = Vec::new();
        for (j, n) in self.nodes.iter().enumerate() {
            if j == i {
                continue;
            }
            let key = (i.min(j), i.max(j));
            if self.blocked.contains(&key) {
                continue;
            }
            if here.distance(&n.mob.pos) <= self.params.range_m {
                out.push(j);
            }
        }
        out
    }

    fn emit(&mut self, node: usize, tag: &'static str, fields: Vec<(&'static str, String)>) {
        self.trace.push(TraceRecord {
            at: self.now,
            node: self.nodes[node].proto.me,
            tag,
            fields,
        });
    }

    fn count_control_tx(&mut self, msg: &ControlMessage) {
        self.counters.ctrl_bytes += msg.wire_bytes();
        match msg {
            ControlMessage::Rreq(_) => self.counters.rreq_tx += 1,
            ControlMessage::Rrep(_) => self.counters.rrep_tx += 1,
            ControlMessage::Rerr(_) => self.counters.rerr_tx += 1,
            ControlMessage::RrepAck(_) => self.counters.ack_tx += 1,
            ControlMessage::Hello(_) => self.counters.hello_tx += 1,
        }
    }

    fn trace_control_tx(&mut self, from: usize, msg: &ControlMessage) {
        let fields = match msg {
            ControlMessage::Rreq(m) => vec![
                ("orig", m.origin.to_string()),
                ("oseq", m.origin_seq.to_string()),
                ("dst", m.dest.to_string()),
                ("dseq", m.dest_seq.to_string()),
                ("id", m.rreq_id.to_string()),
                ("hops", m.hop_count.to_string()),
            ],
            ControlMessage::Rrep(m) => vec![
                ("dst", m.dest.to_string()),
                ("dseq", m.dest_seq.to_string()),
                ("orig", m.origin.to_string()),
                ("hops", m.hop_count.to_string()),
                ("life", m.lifetime_ms.to_string()),
            ],
            ControlMessage::Rerr(m) => {
                let dests = m
                    .unreachable
                    .iter()
                    .map(|(d, s)| format!("{d}:{s}"))
                    .collect::<Vec<_>>()
                    .join(";");
                vec![("dests", dests)]
            }
            ControlMessage::RrepAck(_) => vec![],
            ControlMessage::Hello(_) => vec![],
        };
        self.emit(from, msg.tag(), fields);
    }

    /// Send a packet. Control transmissions are traced and counted here.
    /// Returns false only for a unicast whose target is out of range.
    fn transmit(&mut self, from: usize, packet: Packet, mode: SendMode, now: u64) -> bool {
        if let Packet::Control(msg) = &packet {
            let msg = msg.clone();
            self.trace_control_tx(from, &msg);
            self.count_control_tx(&msg);
        }
        let neighbors = self.neighbors_of(from, now);
        let targets: Vec<usize> = match mode {
            SendMode::Broadcast => neighbors,
            SendMode::Unicast(to) => {
                if !neighbors.contains(&to) {
                    return false;
                }
                vec![to]
            }
        };
        for to in targets {
            let lost = self.params.loss_p > 0.0
                && self.nodes[from].net_rng.gen::<f64>() < self.params.loss_p;
            if lost {
                let mut fields = vec![
                    ("pkt", packet.tag().to_string()),
                    ("reason", "loss".to_string()),
                    ("to", self.nodes[to].proto.me.to_string()),
                ];
                if let Packet::Data(d) = &packet {
                    fields.push(("flow", d.flow.to_string()));
                    fields.push(("no", d.no.to_string()));
                    self.counters.data_dropped += 1;
                }
                self.emit(from, "DROP", fields);
            } else {
                self.queue
                    .schedule(
                        now,
                        now + self.params.hop_delay_ms,
                        EventKind::Deliver {
                            to,
                            from,
                            packet: packet.clone(),
                        },
                    )
                    .unwrap();
            }
        }
        true
    }

    fn drain_eca(&mut self, node: usize) {
        let (invocations, records) = self.nodes[node].driver.drain_activity();
        if invocations == 0 {
            return;
        }
        self.counters.eca_invocations += invocations;
        self.counters.eca_firings += records.len() as u64;
        let silent = invocations.saturating_sub(records.len() as u64);
        for rec in records {
            self.emit(
                node,
                "ECA_FIRE",
                vec![("rule", rec.rule_id), ("decision", rec.decision)],
            );
        }
        for _ in 0..silent {
            self.emit(
                node,
                "ECA_FIRE",
                vec![("rule", "-".to_string()), ("decision", "-".to_string())],
            );
        }
    }

    fn drop_data(&mut self, node: usize, pkt: &DataPacket, reason: &'static str) {
        self.counters.data_dropped += 1;
        self.emit(
            node,
            "DROP",
            vec![
                ("pkt", "DATA".to_string()),
                ("reason", reason.to_string()),
                ("flow", pkt.flow.to_string()),
                ("no", pkt.no.to_string()),
            ],
        );
    }

    fn apply_report(&mut self, node: usize, report: LinkBreakReport, reason: &'static str) {
        for dest in &report.affected {
            let seq = self.nodes[node]
                .proto
                .table
                .get(dest)
                .map(|e| e.dest_seq)
                .unwrap_or(0);
            self.emit(
                node,
                "ROUTE_INVALIDATE",
                vec![
                    ("dst", dest.to_string()),
                    ("seq", seq.to_string()),
                    ("reason", reason.to_string()),
                ],
            );
        }
        if let Some(rerr) = report.rerr {
            self.send_rerr(node, rerr, &report.recipients);
        }
    }

    fn send_rerr(
        &mut self,
        node: usize,
        rerr: aodv_core::RerrMessage,
        recipients: &BTreeSet<NodeId>,
    ) {
        let now = self.now;
        match recipients.len() {
            0 => {}
            1 => {
                let to = self.index_of(*recipients.iter().next().unwrap());
                self.transmit(
                    node,
                    Packet::Control(ControlMessage::Rerr(rerr)),
                    SendMode::Unicast(to),
                    now,
                );
            }
            _ => {
                self.transmit(
                    node,
                    Packet::Control(ControlMessage::Rerr(rerr)),
                    SendMode::Broadcast,
                    now,
                );
            }
        }
    }

    fn link_break(&mut self, node: usize, lost: NodeId) {
        let now = self.now;
        let n = &mut self.nodes[node];
        let report = n.driver.on_link_break(&mut n.proto, lost, now).unwrap();
        self.drain_eca(node);
        self.apply_report(node, report, "link_break");
    }

    /// Forward (or locally deliver) a data packet at `node`.
    fn route_data(&mut self, node: usize, pkt: DataPacket) {
        let now = self.now;
        if pkt.dst == self.nodes[node].proto.me {
            self.counters.data_delivered += 1;
            self.counters.data_bytes += DATA_BYTES;
            self.counters.latency_total_ms += now - pkt.sent_at;
            self.emit(
                node,
                "DELIVER",
                vec![
                    ("src", pkt.src.to_string()),
                    ("flow", pkt.flow.to_string()),
                    ("no", pkt.no.to_string()),
                    ("latency", (now - pkt.sent_at).to_string()),
                ],
            );
            return;
        }
        let next_hop = match self.nodes[node].proto.table.valid_route(&pkt.dst, now) {
            Some(entry) => entry.next_hop,
            None => {
                self.drop_data(node, &pkt, "no_route");
                return;
            }
        };
        let lifetime = self.nodes[node].proto.cfg.active_route_ms;
        self.nodes[node]
            .proto
            .table
            .refresh_lifetime(&pkt.dst, now, lifetime);
        let to = self.index_of(next_hop);
        if !self.transmit(node, Packet::Data(pkt), SendMode::Unicast(to), now) {
            self.drop_data(node, &pkt, "link_break");
            self.link_break(node, next_hop);
        }
    }

    fn flush_buffer(&mut self, node: usize, dest: NodeId) {
        self.nodes[node].proto.take_pending(&dest);
        let queued = self.nodes[node].buffer.remove(&dest).unwrap_or_default();
        for pkt in queued {
            self.route_data(node, pkt);
        }
    }

    fn start_discovery(&mut self, node: usize, dest: NodeId) {
        let now = self.now;
        let n = &mut self.nodes[node];
        match n.driver.originate(&mut n.proto, dest, now) {
            Ok(rreq) => {
                self.drain_eca(node);
                self.transmit(
                    node,
                    Packet::Control(ControlMessage::Rreq(rreq)),
                    SendMode::Broadcast,
                    now,
                );
            }
            Err(_) => {
                // A route appeared in the meantime; use it.
                self.drain_eca(node);
                self.flush_buffer(node, dest);
            }
        }
    }

    fn handle_traffic_send(&mut self, flow_idx: usize, no: u32) {
        let now = self.now;
        let flow = self.params.flows[flow_idx];
        if no + 1 < flow.count {
            self.queue
                .schedule(
                    now,
                    now + flow.interval_ms,
                    EventKind::TrafficSend {
                        flow: flow_idx,
                        no: no + 1,
                    },
                )
                .unwrap();
        }
        let src = flow.src;
        let dst_id = NodeId::from_index(flow.dst);
        let pkt = DataPacket {
            src: self.nodes[src].proto.me,
            dst: dst_id,
            flow: flow_idx,
            no,
            sent_at: now,
        };
        self.counters.data_sent += 1;
        self.emit(
            src,
            "SEND",
            vec![
                ("dst", dst_id.to_string()),
                ("flow", flow_idx.to_string()),
                ("no", no.to_string()),
            ],
        );
        if self.nodes[src].proto.has_valid_route(&dst_id, now) {
            self.route_data(src, pkt);
        } else {
            let discovering = self.nodes[src].proto.pending.contains_key(&dst_id);
            self.nodes[src].buffer.entry(dst_id).or_default().push(pkt);
            if discovering {
                self.nodes[src].proto.note_buffered(&dst_id);
            } else {
                self.start_discovery(src, dst_id);
                self.nodes[src].proto.note_buffered(&dst_id);
            }
        }
    }

    fn handle_deliver(&mut self, to: usize, from: usize, packet: Packet) {
        let now = self.now;
        let from_id = self.nodes[from].proto.me;
        if self.params.hello == HelloMode::On {
            self.nodes[to].proto.heard_from(from_id, now);
        }
        match packet {
            Packet::Data(pkt) => self.route_data(to, pkt),
            Packet::Control(ControlMessage::Hello(_)) => {}
            Packet::Control(ControlMessage::RrepAck(_)) => {}
            Packet::Control(ControlMessage::Rreq(rreq)) => {
                let n = &mut self.nodes[to];
                let action = n.driver.on_rreq(&mut n.proto, &rreq, from_id, now).unwrap();
                self.drain_eca(to);
                match action {
                    RreqAction::Discard(_) => {}
                    RreqAction::Rebroadcast(fwd) => {
                        self.transmit(
                            to,
                            Packet::Control(ControlMessage::Rreq(fwd)),
                            SendMode::Broadcast,
                            now,
                        );
                    }
                    RreqAction::Reply(rrep) => {
                        if !self.transmit(
                            to,
                            Packet::Control(ControlMessage::Rrep(rrep)),
                            SendMode::Unicast(from),
                            now,
                        ) {
                            self.link_break(to, from_id);
                        }
                    }
                }
            }
            Packet::Control(ControlMessage::Rrep(rrep)) => {
                let n = &mut self.nodes[to];
                let handled = n.driver.on_rrep(&mut n.proto, &rrep, from_id, now).unwrap();
                self.drain_eca(to);
                if handled.forward_route != aodv_core::UpdateOutcome::Rejected {
                    let entry = self.nodes[to].proto.table.get(&rrep.dest).unwrap();
                    let fields = vec![
                        ("dst", rrep.dest.to_string()),
                        ("via", entry.next_hop.to_string()),
                        ("hops", entry.hop_count.to_string()),
                        ("seq", entry.dest_seq.to_string()),
                    ];
                    self.emit(to, "ROUTE_ADD", fields);
                }
                if let Some(ack_to) = handled.ack_to {
                    let ack_idx = self.index_of(ack_to);
                    self.transmit(
                        to,
                        Packet::Control(ControlMessage::RrepAck(aodv_core::RrepAckMessage)),
                        SendMode::Unicast(ack_idx),
                        now,
                    );
                }
                match handled.outcome {
                    RrepOutcome::Consumed => self.flush_buffer(to, rrep.dest),
                    RrepOutcome::Forward { rrep: fwd, next_hop } => {
                        let nh = self.index_of(next_hop);
                        if !self.transmit(
                            to,
                            Packet::Control(ControlMessage::Rrep(fwd)),
                            SendMode::Unicast(nh),
                            now,
                        ) {
                            self.link_break(to, next_hop);
                        }
                    }
                    RrepOutcome::NoReverseRoute => {
                        self.emit(
                            to,
                            "DROP",
                            vec![
                                ("pkt", "RREP".to_string()),
                                ("reason", "no_reverse_route".to_string()),
                            ],
                        );
                    }
                }
            }
            Packet::Control(ControlMessage::Rerr(rerr)) => {
                let n = &mut self.nodes[to];
                let handled = n.driver.on_rerr(&mut n.proto, &rerr, from_id, now);
                for (dest, seq) in &handled.invalidated {
                    self.emit(
                        to,
                        "ROUTE_INVALIDATE",
                        vec![
                            ("dst", dest.to_string()),
                            ("seq", seq.to_string()),
                            ("reason", "rerr".to_string()),
                        ],
                    );
                }
                if let Some(fwd) = handled.forward {
                    self.send_rerr(to, fwd, &handled.recipients);
                }
            }
        }
    }

    fn handle_tick(&mut self, node: usize) {
        let now = self.now;
        let expiries = self.nodes[node].proto.tick_timers(now);
        for expiry in expiries {
            match expiry {
                Expiry::RouteExpired(dest) => {
                    let seq = self.nodes[node]
                        .proto
                        .table
                        .get(&dest)
                        .map(|e| e.dest_seq)
                        .unwrap_or(0);
                    self.emit(
                        node,
                        "ROUTE_INVALIDATE",
                        vec![
                            ("dst", dest.to_string()),
                            ("seq", seq.to_string()),
                            ("reason", "expired".to_string()),
                        ],
                    );
                }
                Expiry::DiscoveryTimeout { dest, retries_left } => {
                    if self.nodes[node].proto.has_valid_route(&dest, now) {
                        self.flush_buffer(node, dest);
                    } else if retries_left > 0 {
                        self.nodes[node].proto.begin_retry(&dest, now);
                        self.start_discovery(node, dest);
                    } else {
                        self.nodes[node].proto.take_pending(&dest);
                        let queued =
                            self.nodes[node].buffer.remove(&dest).unwrap_or_default();
                        for pkt in queued {
                            self.drop_data(node, &pkt, "discovery_failed");
                        }
                    }
                }
                Expiry::NeighborLost(id) => self.link_break(node, id),
                Expiry::SeenRreqPurged => {}
            }
        }
        self.queue
            .schedule(now, now + TICK_MS, EventKind::TimerTick { node })
            .unwrap();
    }

    pub fn run(mut self) -> SimOutcome {
        while let Some(next) = self.queue.peek_time() {
            if next > self.params.sim_time_ms {
                break;
            }
            let (at, kind) = self.queue.pop().unwrap();
            debug_assert!(at >= self.now, "clock must not run backwards");
            self.now = at;
            match kind {
                EventKind::Deliver { to, from, packet } => self.handle_deliver(to, from, packet),
                EventKind::TimerTick { node } => self.handle_tick(node),
                EventKind::TrafficSend { flow, no } => self.handle_traffic_send(flow, no),
                EventKind::HelloBeacon { node } => {
                    let me = self.nodes[node].proto.me;
                    self.transmit(
                        node,
                        Packet::Control(ControlMessage::Hello(HelloMessage { origin: me })),
                        SendMode::Broadcast,
                        self.now,
                    );
                    self.queue
                        .schedule(
                            self.now,
                            self.now + self.params.aodv.hello_interval_ms,
                            EventKind::HelloBeacon { node },
                        )
                        .unwrap();
                }
                EventKind::MobilityUpdate => {
                    for i in 0..self.nodes.len() {
                        self.advance_node(i, self.now);
                    }
                    self.queue
                        .schedule(
                            self.now,
                            self.now + MOBILITY_REFRESH_MS,
                            EventKind::MobilityUpdate,
                        )
                        .unwrap();
                }
                EventKind::LinkCut { a, b } => {
                    self.blocked.insert((a.min(b), a.max(b)));
                    if self.params.hello == HelloMode::Oracle {
                        let b_id = self.nodes[b].proto.me;
                        let a_id = self.nodes[a].proto.me;
                        self.link_break(a, b_id);
                        self.link_break(b, a_id);
                    }
                }
            }
        }
        // Everything still queued or buffered counts as in flight.
        let mut buffered: u64 = self
            .nodes
            .iter()
            .map(|n| n.buffer.values().map(|v| v.len() as u64).sum::<u64>())
            .sum();
        while let Some((_, kind)) = self.queue.pop() {
            if let EventKind::Deliver {
                packet: Packet::Data(_),
                ..
            } = kind
            {
                buffered += 1;
            }
        }
        self.counters.buffered_at_end = buffered;
        SimOutcome {
            trace: self.trace,
            counters: self.counters,
        }
    }
}
