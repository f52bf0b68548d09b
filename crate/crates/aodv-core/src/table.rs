//! Per-node routing table with sequence-number freshness arbitration.

use std::collections::{BTreeMap, BTreeSet};

use crate::types::NodeId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteEntry {
    pub dest: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub dest_seq: u64,
    pub valid: bool,
    pub expires_at: u64,
    pub precursors: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteCandidate {
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub dest_seq: u64,
    pub lifetime_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Installed,
    Refreshed,
    Rejected,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoutingTable {
    entries: BTreeMap<NodeId, RouteEntry>,
}

impl RoutingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, dest: &NodeId) -> Option<&RouteEntry> {
        self.entries.get(dest)
    }

    pub fn get_mut(&mut self, dest: &NodeId) -> Option<&mut RouteEntry> {
        self.entries.get_mut(dest)
    }

    pub fn valid_route(&self, dest: &NodeId, now: u64) -> Option<&RouteEntry> {
        self.entries
            .get(dest)
            .filter(|e| e.valid && e.expires_at >= now)
    }

    pub fn iter(&self) -> impl Iterator<Item = &RouteEntry> {
        self.entries.values()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut RouteEntry> {
        self.entries.values_mut()
    }

    /// Freshness rule: install when absent; replace on strictly greater
    /// sequence number, on equal sequence number with strictly fewer hops,
    /// or when the stored entry is invalid. An invalid entry adopting an
    /// older candidate keeps the larger sequence number so the stored value
    /// never decreases.
    pub fn update(&mut self, dest: NodeId, cand: RouteCandidate, now: u64) -> UpdateOutcome {
        debug_assert!(cand.lifetime_ms > 0);
        match self.entries.get_mut(&dest) {
            None => {
                self.entries.insert(
                    dest,
                    RouteEntry {
                        dest,
                        next_hop: cand.next_hop,
                        hop_count: cand.hop_count,
                        dest_seq: cand.dest_seq,
                        valid: true,
                        expires_at: now + cand.lifetime_ms,
                        precursors: BTreeSet::new(),
                    },
                );
                UpdateOutcome::Installed
            }
            Some(entry) => {
                let fresher = cand.dest_seq > entry.dest_seq
                    || (cand.dest_seq == entry.dest_seq && cand.hop_count < entry.hop_count)
                    || !entry.valid;
                if !fresher {
                    return UpdateOutcome::Rejected;
                }
                entry.next_hop = cand.next_hop;
                entry.hop_count = cand.hop_count;
                entry.dest_seq = entry.dest_seq.max(cand.dest_seq);
                entry.valid = true;
                entry.expires_at = entry.expires_at.max(now + cand.lifetime_ms);
                UpdateOutcome::Refreshed
            }
        }
    }

    /// Extend the expiry of an active route (route used for forwarding).
    pub fn refresh_lifetime(&mut self, dest: &NodeId, now: u64, lifetime_ms: u64) {
        if let Some(entry) = self.entries.get_mut(dest) {
            if entry.valid {
                entry.expires_at = entry.expires_at.max(now + lifetime_ms);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(i: usize) -> NodeId {
        NodeId::from_index(i)
    }

    fn cand(next_hop: usize, hops: u32, seq: u64) -> RouteCandidate {
        RouteCandidate {
            next_hop: node(next_hop),
            hop_count: hops,
            dest_seq: seq,
            lifetime_ms: 3000,
        }
    }

    #[test]
    fn empty_table_installs_any_candidate() {
        let mut t = RoutingTable::new();
        assert_eq!(t.update(node(9), cand(1, 2, 13), 0), UpdateOutcome::Installed);
        assert!(t.valid_route(&node(9), 0).is_some());
    }

    #[test]
    fn equal_seq_fewer_hops_replaces() {
        let mut t = RoutingTable::new();
        t.update(node(9), cand(1, 3, 13), 0);
        assert_eq!(t.update(node(9), cand(2, 2, 13), 0), UpdateOutcome::Refreshed);
        assert_eq!(t.get(&node(9)).unwrap().hop_count, 2);
    }

    #[test]
    fn stale_candidate_rejected() {
        let mut t = RoutingTable::new();
        t.update(node(9), cand(1, 3, 14), 0);
        assert_eq!(t.update(node(9), cand(2, 1, 13), 0), UpdateOutcome::Rejected);
        assert_eq!(t.get(&node(9)).unwrap().next_hop, node(1));
    }

    #[test]
    fn invalid_entry_is_replaced_but_seq_never_decreases() {
        let mut t = RoutingTable::new();
        t.update(node(9), cand(1, 3, 14), 0);
        t.get_mut(&node(9)).unwrap().valid = false;
        assert_eq!(t.update(node(9), cand(2, 2, 13), 0), UpdateOutcome::Refreshed);
        let e = t.get(&node(9)).unwrap();
        assert!(e.valid);
        assert_eq!(e.next_hop, node(2));
        assert_eq!(e.dest_seq, 14);
    }

    #[test]
    fn expired_route_is_not_valid() {
        let mut t = RoutingTable::new();
        t.update(node(9), cand(1, 1, 1), 0);
        assert!(t.valid_route(&node(9), 3000).is_some());
        assert!(t.valid_route(&node(9), 3001).is_none());
    }
}
