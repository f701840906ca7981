//! Event-structured record of a forward pass.
//!
//! Each record holds copies of the pre-update endpoint states, a reference to
//! the record that produced each of them, and the caches of the readout and
//! of the two state updates. State references always point at earlier
//! records, so one reverse sweep over the records is a valid topological
//! order for the whole epoch.

use std::ops::Range;

use crate::dyngraph::NodeId;
use crate::numcore::{DropoutMask, GruCache, MlpCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Src = 0,
    Dst = 1,
}

/// `(record, side)` that wrote a state, or `None` for the epoch-initial state.
pub type Producer = Option<(usize, Side)>;

#[derive(Debug, Clone, PartialEq)]
pub struct StateInput {
    pub node: NodeId,
    pub producer: Producer,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord {
    pub cache: GruCache,
    pub dropout: Option<DropoutMask>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeadRecord {
    Regression { cache: MlpCache, prediction: f64, target: f64 },
    Link { positive: MlpCache, positive_logit: f64, negative_input: StateInput, negative: MlpCache, negative_logit: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    /// Position of the event in the epoch's event slice.
    pub position: usize,
    pub batch: usize,
    pub src_in: StateInput,
    pub dst_in: StateInput,
    pub head: HeadRecord,
    pub loss: f64,
    pub updates: [Option<UpdateRecord>; 2],
}

impl EventRecord {
    pub fn input(&self, side: Side) -> &StateInput {
        match side {
            Side::Src => &self.src_in,
            Side::Dst => &self.dst_in,
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct EventTape {
    records: Vec<Option<EventRecord>>,
    batch_starts: Vec<usize>,
    live: usize,
    peak_live: usize,
}

impl EventTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn begin_batch(&mut self) {
        self.batch_starts.push(self.records.len());
    }

    pub fn push(&mut self, record: EventRecord) -> usize {
        self.records.push(Some(record));
        self.live += 1;
        self.peak_live = self.peak_live.max(self.live);
        self.records.len() - 1
    }

    pub fn next_index(&self) -> usize {
        self.records.len()
    }

    /// Drops a record's contents; later sweeps that need it fail.
    pub fn release(&mut self, index: usize) {
        if let Some(slot) = self.records.get_mut(index) {
            if slot.take().is_some() {
                self.live -= 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn live_records(&self) -> usize {
        self.live
    }

    pub fn peak_live_records(&self) -> usize {
        self.peak_live
    }

    pub fn record(&self, index: usize) -> Option<&EventRecord> {
        self.records.get(index).and_then(|r| r.as_ref())
    }

    /// Signs of every head pre-activation on the tape. Two parameter points
    /// with the same pattern lie in the same smooth piece of the loss.
    pub fn activation_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for r in self.records.iter().flatten() {
            match &r.head {
                HeadRecord::Regression { cache, .. } => out.extend(cache.pre.iter().map(|&v| v > 0.0)),
                HeadRecord::Link { positive, negative, .. } => {
                    out.extend(positive.pre.iter().map(|&v| v > 0.0));
                    out.extend(negative.pre.iter().map(|&v| v > 0.0));
                }
            }
        }
        out
    }

    pub fn batch_count(&self) -> usize {
        self.batch_starts.len()
    }

    pub fn batch_range(&self, batch: usize) -> Range<usize> {
        let start = self.batch_starts[batch];
        let end = self.batch_starts.get(batch + 1).copied().unwrap_or(self.records.len());
        start..end
    }
}
