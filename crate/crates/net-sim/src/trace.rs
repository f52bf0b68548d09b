//! Byte-stable trace records. One record per line:
//! `t=<ms> node=<ip> ev=<tag> <k>=<v> ...`
//! Field order is fixed by the emitter; floats are printed with exactly
//! three decimals so traces compare byte-for-byte across platforms.

use std::fmt::Write as _;

use aodv_core::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub at: u64,
    pub node: NodeId,
    pub tag: &'static str,
    pub fields: Vec<(&'static str, String)>,
}

impl TraceRecord {
    pub fn line(&self) -> String {
        let mut s = format!("t={} node={} ev={}", self.at, self.node, self.tag);
        for (k, v) in &self.fields {
            let _ = write!(s, " {k}={v}");
        }
        s
    }
}

pub fn fmt_float(v: f64) -> String {
    format!("{v:.3}")
}

#[derive(Debug, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, rec: TraceRecord) {
        self.records.push(rec);
    }

    pub fn lines(&self) -> impl Iterator<Item = String> + '_ {
        self.records.iter().map(TraceRecord::line)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for rec in &self.records {
            out.push_str(&rec.line());
            out.push('\n');
        }
        out
    }
}
