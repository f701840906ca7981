//! Trial loop: train, validate every epoch, early-stop, test at the best checkpoint.

use serde::{Deserialize, Serialize};

use crate::dyngraph::{BatchingConfig, NodeStateStore};
use crate::engine::{train_epoch, BpttMode, GrnnModel, ModelConfig, Regularization, Task, TrainConfig, Trainer};
use crate::error::Result;
use crate::evalbench::dataset::{Dataset, Splits};
use crate::evalbench::metrics::{compute_metrics, early_stop_check, RankMetrics};
use crate::evalbench::ranking::rank_range;
use crate::evalbench::search::TrialConfig;
use crate::numcore::AdamwConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialSettings {
    pub hidden: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub recall_k: usize,
}

impl Default for TrialSettings {
    fn default() -> Self {
        TrialSettings { hidden: 64, batch_size: 200, max_epochs: 1000, patience: 250, recall_k: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub mean_loss: f64,
    pub grad_norm: f64,
    pub val_mrr: f64,
    pub val_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub mode: BpttMode,
    pub trial: usize,
    pub config: TrialConfig,
    pub epochs: usize,
    pub best_epoch: usize,
    pub validation: RankMetrics,
    pub test: RankMetrics,
    pub history: Vec<EpochReport>,
}

/// Trains one configuration on `splits.train`, selecting the epoch with the
/// best validation MRR. Validation is warmed with the training range and test
/// with everything before it.
pub fn run_trial(
    dataset: &Dataset,
    splits: &Splits,
    mode: BpttMode,
    trial: usize,
    config: &TrialConfig,
    settings: &TrialSettings,
    seed: u64,
) -> Result<TrialOutcome> {
    let model_cfg = ModelConfig { hidden: settings.hidden, feature_dim: dataset.feature_dim, task: Task::LinkRanking, asymmetric: false };
    let optimizer = AdamwConfig { learning_rate: config.learning_rate, weight_decay: config.weight_decay, ..AdamwConfig::default() };
    let mut trainer = Trainer::new(model_cfg, optimizer, seed)?;
    let mut train_cfg = TrainConfig::new(mode, BatchingConfig::fixed_parallel(settings.batch_size));
    train_cfg.regularization = Regularization {
        mlp_dropout: config.mlp_dropout,
        state_dropout: config.state_dropout,
        state_dropout_kind: config.state_dropout_type,
    };

    let universe = dataset.destinations();
    let nodes = dataset.num_nodes();
    let train_events = &dataset.events[splits.train.clone()];
    let mut store = NodeStateStore::new(nodes, settings.hidden);

    let mut history = Vec::new();
    let mut metrics_history: Vec<RankMetrics> = Vec::new();
    let mut best: Option<(usize, RankMetrics, GrnnModel)> = None;
    for epoch in 0..settings.max_epochs {
        let m = train_epoch(train_events, &mut trainer, &mut store, &train_cfg, Some(&universe))?;
        let ranks = rank_range(&trainer.model, &dataset.events, nodes, &universe, settings.batch_size, splits.train.clone(), splits.val.clone())?;
        let val = compute_metrics(&ranks, settings.recall_k)?;
        history.push(EpochReport { epoch, mean_loss: m.mean_loss, grad_norm: m.grad_norm, val_mrr: val.mrr, val_recall: val.recall_at_k });
        if best.as_ref().is_none_or(|(_, b, _)| val.mrr > b.mrr) {
            best = Some((epoch, val, trainer.model.clone()));
        }
        metrics_history.push(val);
        if early_stop_check(&metrics_history, settings.patience) {
            break;
        }
    }

    let epochs = history.len();
    let (best_epoch, validation, model) = match best {
        Some(b) => b,
        None => {
            // zero epochs requested: evaluate the initial parameters
            let ranks = rank_range(&trainer.model, &dataset.events, nodes, &universe, settings.batch_size, splits.train.clone(), splits.val.clone())?;
            (0, compute_metrics(&ranks, settings.recall_k)?, trainer.model.clone())
        }
    };
    let ranks = rank_range(&model, &dataset.events, nodes, &universe, settings.batch_size, 0..splits.test.start, splits.test.clone())?;
    let test = compute_metrics(&ranks, settings.recall_k)?;
    Ok(TrialOutcome { mode, trial, config: *config, epochs, best_epoch, validation, test, history })
}

/// The outcome with the best validation MRR (earliest trial on ties).
pub fn best_trial(outcomes: &[TrialOutcome]) -> Option<&TrialOutcome> {
    outcomes.iter().fold(None, |acc: Option<&TrialOutcome>, o| match acc {
        Some(a) if a.validation.mrr >= o.validation.mrr => Some(a),
        _ => Some(o),
    })
}
