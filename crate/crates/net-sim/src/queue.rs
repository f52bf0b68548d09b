//! Deterministic event queue: pops in (time, insertion order). Payloads are
//! kept out of the heap so they need no ordering of their own.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("cannot schedule at {at} ms: clock already at {now} ms")]
    SchedulePast { at: u64, now: u64 },
}

#[derive(Debug)]
pub struct EventQueue<K> {
    heap: BinaryHeap<Reverse<(u64, u64)>>,
    payloads: BTreeMap<u64, K>,
    next_seq: u64,
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            payloads: BTreeMap::new(),
            next_seq: 0,
        }
    }

    pub fn schedule(&mut self, now: u64, at: u64, kind: K) -> Result<u64, SimError> {
        if at < now {
            return Err(SimError::SchedulePast { at, now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse((at, seq)));
        self.payloads.insert(seq, kind);
        Ok(seq)
    }

    pub fn pop(&mut self) -> Option<(u64, K)> {
        let Reverse((at, seq)) = self.heap.pop()?;
        let kind = self.payloads.remove(&seq).expect("payload for queued event");
        Some((at, kind))
    }

    pub fn peek_time(&self) -> Option<u64> {
        self.heap.peek().map(|Reverse((at, _))| *at)
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        Self::new()
    }
}
