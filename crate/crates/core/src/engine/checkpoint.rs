use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::train::Trainer;
use crate::error::{GrnnError, Result};
use crate::io::write_atomic;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Parameters, optimizer moments and random-stream positions of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub epoch: usize,
    pub trainer: Trainer,
}

impl Checkpoint {
    pub fn new(epoch: usize, trainer: &Trainer) -> Self {
        Checkpoint { version: CHECKPOINT_VERSION, epoch, trainer: trainer.clone() }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, serde_json::to_string(self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GrnnError::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(GrnnError::Data(format!("unsupported checkpoint version {}", ck.version)));
        }
        Ok(ck)
    }
}

/// One line of per-epoch training telemetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub grad_norm: f64,
    /// Seconds since the run started; only filled when timing is requested,
    /// so that default outputs are reproducible byte for byte.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time: Option<f64>,
}
