//! Batch construction for the three processing strategies:
//!
//! * `Sequential`: fixed-size slices, events applied one after another.
//! * `TBatch`: variable-size batches in which no node appears twice, so all
//!   updates in a batch can run in parallel without conflicts.
//! * `FixedParallel`: fixed-size slices processed in parallel from the
//!   batch-start snapshot; a node's last event in the batch sets its state.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dyngraph::event::{Event, NodeId};
use crate::error::{GrnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Sequential,
    TBatch,
    FixedParallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchingConfig {
    pub strategy: Strategy,
    /// Ignored by `TBatch`.
    pub size: usize,
}

impl BatchingConfig {
    pub fn sequential(size: usize) -> Self {
        BatchingConfig { strategy: Strategy::Sequential, size }
    }

    pub fn fixed_parallel(size: usize) -> Self {
        BatchingConfig { strategy: Strategy::FixedParallel, size }
    }

    pub fn tbatch() -> Self {
        BatchingConfig { strategy: Strategy::TBatch, size: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub strategy: Strategy,
    /// Positions into the event slice the batch was built from, in processing order.
    pub events: Vec<usize>,
    /// For parallel strategies: node → position of its last event in this batch.
    pub effective_last: BTreeMap<NodeId, usize>,
}

impl Batch {
    fn new(strategy: Strategy, events: Vec<usize>, all: &[Event]) -> Self {
        let mut effective_last = BTreeMap::new();
        if strategy != Strategy::Sequential {
            for &p in &events {
                effective_last.insert(all[p].src, p);
                effective_last.insert(all[p].dst, p);
            }
        }
        Batch { strategy, events, effective_last }
    }

    pub fn is_parallel(&self) -> bool {
        self.strategy != Strategy::Sequential
    }

    /// For each event of the batch, whether its source and destination
    /// updates take effect.
    pub fn applied_sides(&self, all: &[Event]) -> Vec<(bool, bool)> {
        self.events
            .iter()
            .map(|&p| {
                if self.is_parallel() {
                    let e = &all[p];
                    (self.effective_last[&e.src] == p, self.effective_last[&e.dst] == p)
                } else {
                    (true, true)
                }
            })
            .collect()
    }
}

fn slices(events: &[Event], size: usize, strategy: Strategy) -> Result<Vec<Batch>> {
    if size == 0 {
        return Err(GrnnError::Parameter("batch size must be at least 1".into()));
    }
    Ok((0..events.len())
        .step_by(size)
        .map(|start| Batch::new(strategy, (start..(start + size).min(events.len())).collect(), events))
        .collect())
}

pub fn make_batches_fixed(events: &[Event], batch_size: usize) -> Result<Vec<Batch>> {
    slices(events, batch_size, Strategy::FixedParallel)
}

pub fn make_batches_sequential(events: &[Event], batch_size: usize) -> Result<Vec<Batch>> {
    slices(events, batch_size, Strategy::Sequential)
}

/// Earliest-feasible-batch greedy: event k goes to
/// `1 + max(batch of src's previous event, batch of dst's previous event)`.
pub fn make_batches_tbatch(events: &[Event]) -> Vec<Batch> {
    let mut last_batch: HashMap<NodeId, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (p, e) in events.iter().enumerate() {
        let b = [e.src, e.dst]
            .iter()
            .filter_map(|n| last_batch.get(n).map(|&b| b + 1))
            .max()
            .unwrap_or(0);
        if b == members.len() {
            members.push(Vec::new());
        }
        members[b].push(p);
        last_batch.insert(e.src, b);
        last_batch.insert(e.dst, b);
    }
    members.into_iter().map(|m| Batch::new(Strategy::TBatch, m, events)).collect()
}

pub fn make_batches(events: &[Event], config: BatchingConfig) -> Result<Vec<Batch>> {
    match config.strategy {
        Strategy::Sequential => make_batches_sequential(events, config.size),
        Strategy::FixedParallel => make_batches_fixed(events, config.size),
        Strategy::TBatch => Ok(make_batches_tbatch(events)),
    }
}
