//! `synth`: memory x mode x hidden-size x seed grid on the graph adding task.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::config::{ExperimentConfig, SynthSettings};
use crate::dyngraph::NodeStateStore;
use crate::engine::{train_epoch, BpttMode, ModelConfig, Task, TelemetryRecord, TrainConfig, Trainer};
use crate::error::{GrnnError, Result};
use crate::io::{to_json_lines, write_atomic};
use crate::numcore::{AdamwConfig, Rng, Stream};
use crate::synthtask::{baseline_mse, generate_epoch, SyntheticConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSpec {
    pub memory: usize,
    pub mode: BpttMode,
    pub hidden: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthEpoch {
    #[serde(flatten)]
    pub record: TelemetryRecord,
    pub baseline_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRun {
    pub spec: RunSpec,
    pub telemetry: Vec<SynthEpoch>,
    /// Mean training MSE over the final window.
    pub final_mse: f64,
    /// Mean zero-predictor MSE over the same epochs.
    pub baseline_mse: f64,
}

/// Trains one model for `settings.epochs` freshly generated epochs. The data
/// stream depends only on the seed, so modes and sizes see the same graphs.
pub fn run_synthetic(spec: RunSpec, settings: &SynthSettings, optimizer: AdamwConfig, timing: bool) -> Result<SynthRun> {
    let task = SyntheticConfig { memory: spec.memory, nodes: settings.nodes, edges: settings.edges };
    task.validate()?;
    let model_cfg = ModelConfig { hidden: spec.hidden, feature_dim: 1, task: Task::Regression, asymmetric: false };
    let mut trainer = Trainer::new(model_cfg, optimizer, spec.seed)?;
    let mut data = Rng::derive(spec.seed, Stream::Data, 0);
    let mut store = NodeStateStore::new(settings.nodes, spec.hidden);
    let train_cfg = TrainConfig::new(spec.mode, settings.batching);
    let start = Instant::now();
    let mut telemetry = Vec::with_capacity(settings.epochs);
    for epoch in 0..settings.epochs {
        let events = generate_epoch(&task, &mut data)?;
        let m = train_epoch(&events, &mut trainer, &mut store, &train_cfg, None)?;
        let record = TelemetryRecord {
            epoch,
            mean_loss: m.mean_loss,
            grad_norm: m.grad_norm,
            wall_time: timing.then(|| start.elapsed().as_secs_f64()),
        };
        telemetry.push(SynthEpoch { record, baseline_mse: baseline_mse(&events)? });
    }
    let window = &telemetry[telemetry.len().saturating_sub(settings.final_window)..];
    let n = window.len() as f64;
    let final_mse = window.iter().map(|e| e.record.mean_loss).sum::<f64>() / n;
    let baseline = window.iter().map(|e| e.baseline_mse).sum::<f64>() / n;
    Ok(SynthRun { spec, telemetry, final_mse, baseline_mse: baseline })
}

pub fn grid(config: &ExperimentConfig) -> Vec<RunSpec> {
    let s = &config.synth;
    let mut specs = Vec::new();
    for &memory in &s.memory {
        for mode in config.mode.modes() {
            for &hidden in &s.hidden {
                for r in 0..s.repeats {
                    specs.push(RunSpec { memory, mode, hidden, seed: config.seed.wrapping_add(r as u64) });
                }
            }
        }
    }
    specs
}

pub fn summary_csv(runs: &[SynthRun]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["M", "mode", "hidden", "seed", "final_mse", "baseline_mse"]).map_err(csv_err)?;
    for r in runs {
        w.write_record([
            r.spec.memory.to_string(),
            r.spec.mode.label().to_string(),
            r.spec.hidden.to_string(),
            r.spec.seed.to_string(),
            r.final_mse.to_string(),
            r.baseline_mse.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| GrnnError::Data(e.to_string()))
}

/// One row per (M, mode, hidden) with mean/min/max of the final MSE over seeds.
pub fn cells_csv(runs: &[SynthRun]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["M", "mode", "hidden", "runs", "mean_mse", "min_mse", "max_mse", "baseline_mse"]).map_err(csv_err)?;
    let mut i = 0;
    while i < runs.len() {
        let key = |r: &SynthRun| (r.spec.memory, r.spec.mode, r.spec.hidden);
        let k = key(&runs[i]);
        let j = runs[i..].iter().position(|r| key(r) != k).map_or(runs.len(), |p| i + p);
        let cell = &runs[i..j];
        let n = cell.len() as f64;
        let mse: Vec<f64> = cell.iter().map(|r| r.final_mse).collect();
        w.write_record([
            k.0.to_string(),
            k.1.label().to_string(),
            k.2.to_string(),
            cell.len().to_string(),
            (mse.iter().sum::<f64>() / n).to_string(),
            mse.iter().copied().fold(f64::INFINITY, f64::min).to_string(),
            mse.iter().copied().fold(f64::NEG_INFINITY, f64::max).to_string(),
            (cell.iter().map(|r| r.baseline_mse).sum::<f64>() / n).to_string(),
        ])
        .map_err(csv_err)?;
        i = j;
    }
    w.into_inner().map_err(|e| GrnnError::Data(e.to_string()))
}

fn csv_err(e: csv::Error) -> GrnnError {
    GrnnError::Data(e.to_string())
}

pub fn cmd_synth(config: &ExperimentConfig) -> Result<()> {
    let out = config.out.join("synth");
    let specs = grid(config);
    let runs: Vec<SynthRun> = specs
        .par_iter()
        .map(|&spec| run_synthetic(spec, &config.synth, config.optimizer, config.timing))
        .collect::<Result<_>>()?;
    for r in &runs {
        let name = format!("M{}_{}_h{}_s{}.jsonl", r.spec.memory, r.spec.mode, r.spec.hidden, r.spec.seed);
        write_atomic(&out.join("telemetry").join(name), to_json_lines(&r.telemetry)?.as_bytes())?;
    }
    write_atomic(&out.join("summary.csv"), &summary_csv(&runs)?)?;
    write_atomic(&out.join("cells.csv"), &cells_csv(&runs)?)?;
    print_cells(&out, &runs);
    Ok(())
}

fn print_cells(out: &Path, runs: &[SynthRun]) {
    for r in runs {
        println!(
            "M={} mode={} hidden={} seed={} final_mse={:.6} baseline_mse={:.6}",
            r.spec.memory, r.spec.mode, r.spec.hidden, r.spec.seed, r.final_mse, r.baseline_mse
        );
    }
    println!("wrote {}", out.display());
}
