use serde::{Deserialize, Serialize};

use crate::dyngraph::{make_batches, BatchingConfig, Event, NodeId, NodeStateStore};
use crate::engine::backward::{backward_full, backward_truncated, backward_truncated_batch, GradientAccumulator};
use crate::engine::forward::{EpochRngs, ForwardOptions, ForwardPass, Regularization};
use crate::engine::model::{GrnnModel, ModelConfig};
use crate::error::{GrnnError, Result};
use crate::numcore::{AdamwConfig, AdamwState, Rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BpttMode {
    #[serde(rename = "f_bptt")]
    Full,
    #[serde(rename = "t_bptt")]
    Truncated,
}

impl BpttMode {
    pub fn label(self) -> &'static str {
        match self {
            BpttMode::Full => "f_bptt",
            BpttMode::Truncated => "t_bptt",
        }
    }
}

impl std::fmt::Display for BpttMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// One optimizer step per epoch on the accumulated gradient.
    PerEpoch,
    /// One step after every batch (truncated mode only).
    PerBatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub mode: BpttMode,
    pub batching: BatchingConfig,
    pub regularization: Regularization,
    pub schedule: StepSchedule,
    /// Truncated mode only: back-propagate each batch right after its forward
    /// pass and release records that no live state depends on.
    pub streaming: bool,
    /// Keep node states from the previous epoch instead of zeroing them.
    pub persist_states: bool,
}

impl TrainConfig {
    pub fn new(mode: BpttMode, batching: BatchingConfig) -> Self {
        TrainConfig {
            mode,
            batching,
            regularization: Regularization::default(),
            schedule: StepSchedule::PerEpoch,
            streaming: false,
            persist_states: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mode == BpttMode::Full && (self.streaming || self.schedule == StepSchedule::PerBatch) {
            return Err(GrnnError::Config("streaming and per-batch stepping need truncated BPTT".into()));
        }
        if self.schedule == StepSchedule::PerBatch && !self.streaming {
            return Err(GrnnError::Config("per-batch stepping needs streaming".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub total_loss: f64,
    pub mean_loss: f64,
    pub grad_norm: f64,
    pub events: usize,
    pub peak_tape_records: usize,
}

/// Model, optimizer and the training-time random streams of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trainer {
    pub model: GrnnModel,
    pub optimizer: AdamwState,
    pub rngs: EpochRngs,
}

impl Trainer {
    pub fn new(config: ModelConfig, optimizer: AdamwConfig, seed: u64) -> Result<Self> {
        let mut init = Rng::derive(seed, Stream::Init, 0);
        let model = GrnnModel::init(config, &mut init)?;
        let optimizer = AdamwState::new(optimizer, &model.shapes());
        Ok(Trainer { model, optimizer, rngs: EpochRngs::from_seed(seed) })
    }

    pub fn apply_gradient(&mut self, grads: &GrnnModel) -> Result<()> {
        let g = grads.tensors();
        let mut p = self.model.tensors_mut();
        self.optimizer.step(&mut p, &g)?;
        if !self.model.is_finite() {
            return Err(GrnnError::Numerical { event: 0, what: "parameters became non-finite".into() });
        }
        Ok(())
    }
}

/// Forward, backward (full or truncated) and optimizer step(s) for one epoch.
pub fn train_epoch(
    events: &[Event],
    trainer: &mut Trainer,
    store: &mut NodeStateStore,
    config: &TrainConfig,
    destinations: Option<&[NodeId]>,
) -> Result<EpochMetrics> {
    config.validate()?;
    if !config.persist_states {
        store.reset();
    }
    let opts = ForwardOptions { record: true, training: true, regularization: config.regularization, destinations };
    let batches = make_batches(events, config.batching)?;
    let model = trainer.model.clone();
    let mut pass = ForwardPass::new(events, &model, store, opts)?;

    if config.streaming {
        let mut acc = GradientAccumulator::new(&model);
        let mut step_norm_sq = 0.0;
        let mut retained = Vec::new();
        for (b, batch) in batches.iter().enumerate() {
            let start = pass.tape.next_index();
            pass.run_batch(batch, store, &mut trainer.rngs)?;
            retained.extend(start..pass.tape.next_index());
            backward_truncated_batch(&pass.tape, &model, b, &mut acc)?;
            if config.schedule == StepSchedule::PerBatch {
                step_norm_sq += acc.norm().powi(2);
                trainer.apply_gradient(&acc.grads)?;
                acc.grads = acc.grads.zeros_like();
            }
            pass.release_consumed(&mut retained);
        }
        let grad_norm = match config.schedule {
            StepSchedule::PerEpoch => {
                trainer.apply_gradient(&acc.grads)?;
                acc.norm()
            }
            StepSchedule::PerBatch => step_norm_sq.sqrt(),
        };
        let peak = pass.tape.peak_live_records();
        let fwd = pass.finish();
        return Ok(metrics(fwd.total_loss, events.len(), grad_norm, peak));
    }

    for batch in &batches {
        pass.run_batch(batch, store, &mut trainer.rngs)?;
    }
    let fwd = pass.finish();
    let acc = match config.mode {
        BpttMode::Full => backward_full(&fwd.tape, &model)?,
        BpttMode::Truncated => backward_truncated(&fwd.tape, &model)?,
    };
    trainer.apply_gradient(&acc.grads)?;
    Ok(metrics(fwd.total_loss, events.len(), acc.norm(), fwd.tape.peak_live_records()))
}

fn metrics(total_loss: f64, events: usize, grad_norm: f64, peak: usize) -> EpochMetrics {
    EpochMetrics {
        total_loss,
        mean_loss: if events == 0 { 0.0 } else { total_loss / events as f64 },
        grad_norm,
        events,
        peak_tape_records: peak,
    }
}
