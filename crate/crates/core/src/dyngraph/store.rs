use serde::{Deserialize, Serialize};

use crate::error::{GrnnError, Result};
use crate::dyngraph::event::NodeId;

pub const STORE_FORMAT_VERSION: u32 = 1;

/// Hidden state for every node, plus the ordinal of the last event that
/// updated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStateStore {
    nodes: usize,
    hidden: usize,
    states: Vec<f64>,
    last_update: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
struct StoreFile {
    version: u32,
    #[serde(flatten)]
    store: NodeStateStore,
}

impl NodeStateStore {
    pub fn new(nodes: usize, hidden: usize) -> Self {
        NodeStateStore { nodes, hidden, states: vec![0.0; nodes * hidden], last_update: vec![None; nodes] }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if node >= self.nodes {
            return Err(GrnnError::Structural(format!("unknown node {node} (store has {})", self.nodes)));
        }
        Ok(())
    }

    pub fn state(&self, node: NodeId) -> Result<&[f64]> {
        self.check(node)?;
        Ok(&self.states[node * self.hidden..(node + 1) * self.hidden])
    }

    pub fn last_update(&self, node: NodeId) -> Option<usize> {
        self.last_update.get(node).copied().flatten()
    }

    pub fn set_state(&mut self, node: NodeId, value: &[f64], event: usize) -> Result<()> {
        self.check(node)?;
        if value.len() != self.hidden {
            return Err(GrnnError::shape(format!("state of length {} for hidden size {}", value.len(), self.hidden)));
        }
        self.states[node * self.hidden..(node + 1) * self.hidden].copy_from_slice(value);
        self.last_update[node] = Some(event);
        Ok(())
    }

    /// All states zero, bookkeeping cleared.
    pub fn reset(&mut self) {
        self.states.iter_mut().for_each(|v| *v = 0.0);
        self.last_update.iter_mut().for_each(|v| *v = None);
    }

    pub fn all_states(&self) -> &[f64] {
        &self.states
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&StoreFile { version: STORE_FORMAT_VERSION, store: self.clone() })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: StoreFile = serde_json::from_str(s)?;
        if file.version != STORE_FORMAT_VERSION {
            return Err(GrnnError::Data(format!("unsupported store format version {}", file.version)));
        }
        let st = file.store;
        if st.states.len() != st.nodes * st.hidden || st.last_update.len() != st.nodes {
            return Err(GrnnError::Data("store dump has inconsistent lengths".into()));
        }
        Ok(st)
    }
}
