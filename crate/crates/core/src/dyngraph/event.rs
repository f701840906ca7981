use serde::{Deserialize, Serialize};

use crate::error::{GrnnError, Result};

pub type NodeId = usize;

/// One timestamped interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub index: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub time: f64,
    pub features: Vec<f64>,
    /// Regression target; `None` for link-prediction streams.
    pub target: Option<f64>,
}

impl Event {
    pub fn new(index: usize, src: NodeId, dst: NodeId, time: f64, features: Vec<f64>, target: Option<f64>) -> Result<Self> {
        if src == dst {
            return Err(GrnnError::Data(format!("event {index}: self-loop on node {src}")));
        }
        Ok(Event { index, src, dst, time, features, target })
    }
}

/// Checks the stream-level invariants: no self-loops, node ids below
/// `nodes`, non-decreasing timestamps and a constant feature dimension.
pub fn validate_stream(events: &[Event], nodes: usize) -> Result<()> {
    let dim = events.first().map_or(0, |e| e.features.len());
    let mut last_time = f64::NEG_INFINITY;
    for e in events {
        if e.src == e.dst {
            return Err(GrnnError::Data(format!("event {}: self-loop on node {}", e.index, e.src)));
        }
        if e.src >= nodes || e.dst >= nodes {
            return Err(GrnnError::Structural(format!("event {}: node id outside 0..{nodes}", e.index)));
        }
        if e.time < last_time {
            return Err(GrnnError::Data(format!("event {}: timestamp decreases", e.index)));
        }
        if e.features.len() != dim {
            return Err(GrnnError::Data(format!("event {}: feature dimension {} != {dim}", e.index, e.features.len())));
        }
        last_time = e.time;
    }
    Ok(())
}
