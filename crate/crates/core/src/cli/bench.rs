//! `bench`: random-search trials on a JODIE-schema dataset for each BPTT mode.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::config::ExperimentConfig;
use crate::engine::BpttMode;
use crate::error::{GrnnError, Result};
use crate::evalbench::{best_trial, chrono_split, load_jodie_csv, random_search, run_trial, Dataset, TrialOutcome};
use crate::io::{to_json_lines, write_atomic};
use crate::numcore::{Rng, Stream};

/// Per-trial metrics at the selected checkpoint, measured on the test range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub dataset: String,
    pub mode: BpttMode,
    pub seed: u64,
    pub trial: usize,
    pub mrr: f64,
    pub recall_at_10: f64,
    pub epochs: usize,
}

pub fn trial_seed(root: u64, trial: usize) -> u64 {
    Rng::derive(root, Stream::Search, trial as u64 + 1).next_u64()
}

/// Runs every trial of every selected mode on an already loaded dataset.
pub fn run_bench(dataset: &Dataset, config: &ExperimentConfig) -> Result<Vec<TrialOutcome>> {
    let b = &config.bench;
    let splits = chrono_split(dataset.events.len(), b.train_frac, b.val_frac)?;
    let trials = random_search(&b.search, b.trials, config.seed)?;
    let mut outcomes = Vec::new();
    for mode in config.mode.modes() {
        let mut per_mode: Vec<TrialOutcome> = trials
            .par_iter()
            .enumerate()
            .map(|(t, tc)| run_trial(dataset, &splits, mode, t, tc, &b.trial, trial_seed(config.seed, t)))
            .collect::<Result<_>>()?;
        outcomes.append(&mut per_mode);
    }
    Ok(outcomes)
}

pub fn trial_metrics(dataset: &Dataset, seed: u64, outcomes: &[TrialOutcome]) -> Vec<TrialMetrics> {
    outcomes
        .iter()
        .map(|o| TrialMetrics {
            dataset: dataset.name.clone(),
            mode: o.mode,
            seed,
            trial: o.trial,
            mrr: o.test.mrr,
            recall_at_10: o.test.recall_at_k,
            epochs: o.epochs,
        })
        .collect()
}

/// Rows per mode (best trial by validation MRR, test metrics) plus a gap row
/// `f_bptt - t_bptt` when both modes ran.
pub fn results_table(dataset: &Dataset, outcomes: &[TrialOutcome]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = ["method".to_string(), format!("{}_mrr", dataset.name), format!("{}_recall_at_10", dataset.name)];
    w.write_record(&header).map_err(csv_err)?;
    let mut best = Vec::new();
    for mode in [BpttMode::Truncated, BpttMode::Full] {
        let of_mode: Vec<TrialOutcome> = outcomes.iter().filter(|o| o.mode == mode).cloned().collect();
        if let Some(o) = best_trial(&of_mode) {
            w.write_record([mode.label().to_string(), o.test.mrr.to_string(), o.test.recall_at_k.to_string()]).map_err(csv_err)?;
            best.push(o.test);
        }
    }
    if let [t, f] = best[..] {
        w.write_record(["gap".to_string(), (f.mrr - t.mrr).to_string(), (f.recall_at_k - t.recall_at_k).to_string()]).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| GrnnError::Data(e.to_string()))
}

fn csv_err(e: csv::Error) -> GrnnError {
    GrnnError::Data(e.to_string())
}

pub fn cmd_bench(config: &ExperimentConfig) -> Result<()> {
    let path = config.bench.dataset.as_deref().ok_or_else(|| GrnnError::Config("bench.dataset is not set".into()))?;
    let dataset = load_jodie_csv(path, config.bench.limit)?;
    let outcomes = run_bench(&dataset, config)?;
    let out = config.out.join("bench");
    for o in &outcomes {
        let name = format!("{}_trial{}.jsonl", o.mode, o.trial);
        write_atomic(&out.join("telemetry").join(name), to_json_lines(&o.history)?.as_bytes())?;
    }
    let metrics = trial_metrics(&dataset, config.seed, &outcomes);
    let mut text = serde_json::to_string_pretty(&metrics)?;
    text.push('\n');
    write_atomic(&out.join("trials.json"), text.as_bytes())?;
    write_atomic(&out.join("results_table.csv"), &results_table(&dataset, &outcomes)?)?;
    for m in &metrics {
        println!("{} {} trial={} mrr={:.4} recall@10={:.4} epochs={}", m.dataset, m.mode, m.trial, m.mrr, m.recall_at_10, m.epochs);
    }
    println!("wrote {}", out.display());
    Ok(())
}
