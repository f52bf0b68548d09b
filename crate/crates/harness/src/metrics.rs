//! Metrics recomputed from trace text, independently of the simulator's own
//! counters. Everything except `events_per_sec` is a pure function of the
//! trace, so a run can always be audited after the fact.

use net_sim::Counters;
use sha2::{Digest, Sha256};

use crate::scenario::Protocol;

const RREQ_BYTES: u64 = 24;
const RREP_BYTES: u64 = 20;
const RREP_ACK_BYTES: u64 = 2;
const HELLO_BYTES: u64 = 20;
const DATA_PACKET_BYTES: u64 = 512;

/// Counts re-derived by parsing a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TraceMetrics {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub ctrl_bytes: u64,
    pub data_bytes: u64,
    pub latency_total_ms: u64,
    pub rreq_tx: u64,
    pub rrep_tx: u64,
    pub rerr_tx: u64,
    pub ack_tx: u64,
    pub hello_tx: u64,
    /// Engine invocations, one trace line each (firing or not).
    pub eca_events: u64,
    pub route_adds: u64,
    pub route_invalidations: u64,
}

fn field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace().find_map(|f| f.strip_prefix(key))
}

impl TraceMetrics {
    pub fn from_trace(text: &str) -> TraceMetrics {
        let mut m = TraceMetrics::default();
        for line in text.lines() {
            let Some(tag) = field(line, "ev=") else {
                continue;
            };
            match tag {
                "SEND" => m.sent += 1,
                "DELIVER" => {
                    m.delivered += 1;
                    m.data_bytes += DATA_PACKET_BYTES;
                    m.latency_total_ms += field(line, "latency=")
                        .and_then(|v| v.parse::<u64>().ok())
                        .unwrap_or(0);
                }
                "DROP" => {
                    if field(line, "pkt=") == Some("DATA") {
                        m.dropped += 1;
                    }
                }
                "RREQ" => {
                    m.rreq_tx += 1;
                    m.ctrl_bytes += RREQ_BYTES;
                }
                "RREP" => {
                    m.rrep_tx += 1;
                    m.ctrl_bytes += RREP_BYTES;
                }
                "RERR" => {
                    m.rerr_tx += 1;
                    let dests = field(line, "dests=").map_or(0, |d| d.split(';').count());
                    m.ctrl_bytes += 4 + 8 * dests as u64;
                }
                "RREP_ACK" => {
                    m.ack_tx += 1;
                    m.ctrl_bytes += RREP_ACK_BYTES;
                }
                "HELLO" => {
                    m.hello_tx += 1;
                    m.ctrl_bytes += HELLO_BYTES;
                }
                "ECA_FIRE" => m.eca_events += 1,
                "ROUTE_ADD" => m.route_adds += 1,
                "ROUTE_INVALIDATE" => m.route_invalidations += 1,
                _ => {}
            }
        }
        m
    }

    /// Packets that were sent but neither delivered nor dropped must still be
    /// buffered or in flight when the run ended.
    pub fn buffered(&self) -> u64 {
        self.sent - self.delivered - self.dropped
    }

    pub fn pdr(&self) -> f64 {
        if self.sent == 0 {
            1.0
        } else {
            self.delivered as f64 / self.sent as f64
        }
    }

    pub fn avg_latency_ms(&self) -> f64 {
        if self.delivered == 0 {
            0.0
        } else {
            self.latency_total_ms as f64 / self.delivered as f64
        }
    }

    /// Control bytes per delivered data byte; undefined when nothing arrived.
    pub fn overhead_ratio(&self) -> Option<f64> {
        (self.data_bytes > 0).then(|| self.ctrl_bytes as f64 / self.data_bytes as f64)
    }

    /// Cross-check the re-derived counts against the simulator's counters.
    pub fn check_against(&self, c: &Counters) -> Result<(), String> {
        let pairs = [
            ("data_sent", self.sent, c.data_sent),
            ("data_delivered", self.delivered, c.data_delivered),
            ("data_dropped", self.dropped, c.data_dropped),
            ("buffered_at_end", self.buffered(), c.buffered_at_end),
            ("ctrl_bytes", self.ctrl_bytes, c.ctrl_bytes),
            ("data_bytes", self.data_bytes, c.data_bytes),
            ("latency_total_ms", self.latency_total_ms, c.latency_total_ms),
            ("rreq_tx", self.rreq_tx, c.rreq_tx),
            ("rrep_tx", self.rrep_tx, c.rrep_tx),
            ("rerr_tx", self.rerr_tx, c.rerr_tx),
            ("ack_tx", self.ack_tx, c.ack_tx),
            ("hello_tx", self.hello_tx, c.hello_tx),
            ("eca_invocations", self.eca_events, c.eca_invocations),
        ];
        for (name, from_trace, from_counters) in pairs {
            if from_trace != from_counters {
                return Err(format!(
                    "{name}: trace says {from_trace}, counters say {from_counters}"
                ));
            }
        }
        Ok(())
    }
}

/// Hex SHA-256 over the trace with engine-activity lines removed, so the
/// digest compares routing behavior across protocol variants.
pub fn trace_digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    for line in text.lines().filter(|l| field(l, "ev=") != Some("ECA_FIRE")) {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_id: String,
    pub protocol: Protocol,
    pub nodes: usize,
    pub seed: u64,
    pub metrics: TraceMetrics,
    /// Engine invocations per wall-clock second; the only non-deterministic
    /// output of a run.
    pub events_per_sec: f64,
    pub trace_digest: String,
}

pub const CSV_HEADER: &str = "run_id,protocol,nodes,seed,pdr,avg_latency_ms,ctrl_bytes,\
                              data_bytes,overhead_ratio,eca_events,events_per_sec,trace_digest";

impl RunResult {
    pub fn csv_row(&self) -> String {
        let overhead = match self.metrics.overhead_ratio() {
            Some(r) => format!("{r:.6}"),
            None => "undefined".to_string(),
        };
        format!(
            "{},{},{},{},{:.6},{:.3},{},{},{},{},{:.3},{}",
            self.run_id,
            self.protocol,
            self.nodes,
            self.seed,
            self.metrics.pdr(),
            self.metrics.avg_latency_ms(),
            self.metrics.ctrl_bytes,
            self.metrics.data_bytes,
            overhead,
            self.metrics.eca_events,
            self.events_per_sec,
            self.trace_digest,
        )
    }
}

/// Full CSV with header and trailing newline; byte-stable for a fixed input.
pub fn to_csv(results: &[RunResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
t=1000 node=10.0.0.1 ev=SEND dst=10.0.0.3 flow=0 no=0
t=1000 node=10.0.0.1 ev=RREQ orig=10.0.0.1 oseq=1 dst=10.0.0.3 dseq=- id=1 hops=0
t=1002 node=10.0.0.2 ev=RREQ orig=10.0.0.1 oseq=1 dst=10.0.0.3 dseq=- id=1 hops=1
t=1004 node=10.0.0.3 ev=RREP dst=10.0.0.3 dseq=1 orig=10.0.0.1 hops=0 life=3000
t=1006 node=10.0.0.2 ev=ECA_FIRE rule=E2 decision=ReplyRrep
t=1006 node=10.0.0.2 ev=RREP dst=10.0.0.3 dseq=1 orig=10.0.0.1 hops=1 life=3000
t=1008 node=10.0.0.1 ev=ROUTE_ADD dst=10.0.0.3 via=10.0.0.2 hops=2 seq=1
t=1012 node=10.0.0.3 ev=DELIVER src=10.0.0.1 flow=0 no=0 latency=12
t=2000 node=10.0.0.1 ev=SEND dst=10.0.0.3 flow=0 no=1
t=2002 node=10.0.0.2 ev=DROP pkt=DATA reason=loss to=10.0.0.3 flow=0 no=1
t=3000 node=10.0.0.2 ev=RERR dests=10.0.0.3:2;10.0.0.4:1
";

    #[test]
    fn trace_counts_recomputed_exactly() {
        let m = TraceMetrics::from_trace(SAMPLE);
        assert_eq!(m.sent, 2);
        assert_eq!(m.delivered, 1);
        assert_eq!(m.dropped, 1);
        assert_eq!(m.buffered(), 0);
        assert_eq!(m.rreq_tx, 2);
        assert_eq!(m.rrep_tx, 2);
        assert_eq!(m.rerr_tx, 1);
        assert_eq!(m.ctrl_bytes, 2 * 24 + 2 * 20 + (4 + 8 * 2));
        assert_eq!(m.data_bytes, 512);
        assert_eq!(m.latency_total_ms, 12);
        assert_eq!(m.eca_events, 1);
        assert_eq!(m.pdr(), 0.5);
        assert_eq!(m.avg_latency_ms(), 12.0);
    }

    #[test]
    fn digest_ignores_engine_activity_lines() {
        let without: String = SAMPLE
            .lines()
            .filter(|l| !l.contains("ev=ECA_FIRE"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(trace_digest(SAMPLE), trace_digest(&without));
        assert_ne!(trace_digest(SAMPLE), trace_digest("t=0 node=10.0.0.1 ev=SEND\n"));
    }

    #[test]
    fn overhead_ratio_undefined_without_delivered_data() {
        let m = TraceMetrics::from_trace("t=0 node=10.0.0.1 ev=RREQ orig=10.0.0.1\n");
        assert_eq!(m.overhead_ratio(), None);
        assert_eq!(m.pdr(), 1.0);
    }

    #[test]
    fn csv_is_byte_stable() {
        let result = RunResult {
            run_id: "aodv-n5-s1".into(),
            protocol: Protocol::Aodv,
            nodes: 5,
            seed: 1,
            metrics: TraceMetrics::from_trace(SAMPLE),
            events_per_sec: 1234.5678,
            trace_digest: trace_digest(SAMPLE),
        };
        let a = to_csv(std::slice::from_ref(&result));
        let b = to_csv(std::slice::from_ref(&result));
        assert_eq!(a, b);
        assert!(a.starts_with("run_id,protocol,"));
        assert!(a.ends_with('\n'));
        assert!(a.contains("aodv-n5-s1,aodv,5,1,0.500000,12.000,"));
    }
}
