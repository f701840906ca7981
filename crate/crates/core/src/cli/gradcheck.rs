//! `gradcheck`: finite-difference checks of the cells and of whole-epoch BPTT.

use serde::{Deserialize, Serialize};

use crate::cli::config::{ExperimentConfig, GradcheckSettings};
use crate::dyngraph::{BatchingConfig, Event, NodeId, NodeStateStore};
use crate::engine::{backward_full, backward_truncated, forward_epoch, EpochRngs, ForwardOptions, GrnnModel, ModelConfig, Task};
use crate::error::{GrnnError, Result};
use crate::io::write_atomic;
use crate::numcore::{extrapolated_check, finite_diff_check, GruParameters, MlpParameters, Rng, Stream};
use crate::synthtask::{generate_epoch, SyntheticConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, error: f64, tolerance: f64) -> Self {
        CheckResult { name: name.to_string(), error, tolerance, passed: error <= tolerance }
    }
}

/// Total epoch loss as a function of the flattened parameters, with fresh
/// states and a fixed random stream so every evaluation sees the same negatives.
/// Also returns the head activation pattern of the pass.
pub fn epoch_loss(
    model: &GrnnModel,
    flat: &[f64],
    events: &[Event],
    nodes: usize,
    batching: BatchingConfig,
    destinations: Option<&[NodeId]>,
    seed: u64,
) -> Result<(f64, Vec<bool>)> {
    let mut m = model.clone();
    m.unflatten(flat)?;
    let mut store = NodeStateStore::new(nodes, m.hidden());
    let opts = ForwardOptions { destinations, ..ForwardOptions::recording() };
    let fwd = forward_epoch(events, &m, &mut store, batching, opts, &mut EpochRngs::from_seed(seed))?;
    Ok((fwd.total_loss, fwd.tape.activation_pattern()))
}

/// Flattened full-BPTT gradient of the total epoch loss.
pub fn epoch_gradient(
    model: &GrnnModel,
    events: &[Event],
    nodes: usize,
    batching: BatchingConfig,
    destinations: Option<&[NodeId]>,
    seed: u64,
    truncated: bool,
) -> Result<Vec<f64>> {
    let mut store = NodeStateStore::new(nodes, model.hidden());
    let opts = ForwardOptions { destinations, ..ForwardOptions::recording() };
    let fwd = forward_epoch(events, model, &mut store, batching, opts, &mut EpochRngs::from_seed(seed))?;
    let acc = if truncated { backward_truncated(&fwd.tape, model)? } else { backward_full(&fwd.tape, model)? };
    Ok(acc.grads.flatten())
}

/// Max relative error of full BPTT against extrapolated central differences of
/// the epoch loss (see [`extrapolated_check`]).
pub fn epoch_fd_error(
    model: &GrnnModel,
    events: &[Event],
    nodes: usize,
    batching: BatchingConfig,
    destinations: Option<&[NodeId]>,
    seed: u64,
    step: f64,
    sign_flip: bool,
) -> Result<f64> {
    let mut analytic = epoch_gradient(model, events, nodes, batching, destinations, seed, false)?;
    if sign_flip {
        flip_largest(&mut analytic);
    }
    let mut flat = model.flatten();
    let f = |theta: &[f64]| epoch_loss(model, theta, events, nodes, batching, destinations, seed).unwrap_or((f64::NAN, Vec::new()));
    extrapolated_check(f, &mut flat, &analytic, step)
}

fn flip_largest(g: &mut [f64]) {
    if let Some(i) = (0..g.len()).max_by(|&a, &b| g[a].abs().total_cmp(&g[b].abs())) {
        g[i] = -g[i];
    }
}

/// Random link-ranking stream over `users` sources and `items` destinations.
pub fn random_link_events(users: usize, items: usize, count: usize, feature_dim: usize, rng: &mut Rng) -> Result<Vec<Event>> {
    (0..count)
        .map(|k| {
            let src = rng.below(users as u64) as usize;
            let dst = users + rng.below(items as u64) as usize;
            let x = (0..feature_dim).map(|_| rng.standard_normal()).collect();
            Event::new(k, src, dst, k as f64, x, None)
        })
        .collect()
}

fn away_from_zero(rng: &mut Rng) -> f64 {
    let v = rng.uniform_in(0.5, 1.0);
    if rng.below(2) == 0 {
        v
    } else {
        -v
    }
}

fn gru_check(m: usize, rng: &mut Rng, step: f64) -> Result<f64> {
    let d_in = m + 1;
    let p = GruParameters::init(m, d_in, rng);
    let h: Vec<f64> = (0..m).map(|_| away_from_zero(rng)).collect();
    let u: Vec<f64> = (0..d_in).map(|_| away_from_zero(rng)).collect();
    let weights: Vec<f64> = (0..m).map(|_| away_from_zero(rng)).collect();
    let (_, cache) = p.forward(&h, &u)?;
    let mut g = GruParameters::zeros(m, d_in);
    p.backward(&cache, &weights, &mut g)?;
    let analytic: Vec<f64> = g.tensors().iter().flat_map(|t| t.iter().copied()).collect();
    let mut theta: Vec<f64> = p.tensors().iter().flat_map(|t| t.iter().copied()).collect();
    let f = |theta: &[f64]| {
        let mut q = p.clone();
        let mut k = 0;
        for t in q.tensors_mut() {
            for v in t.iter_mut() {
                *v = theta[k];
                k += 1;
            }
        }
        q.forward(&h, &u).map(|(out, _)| out.iter().zip(&weights).map(|(a, b)| a * b).sum()).unwrap_or(f64::NAN)
    };
    finite_diff_check(f, &mut theta, &analytic, step)
}

fn mlp_check(m: usize, rng: &mut Rng, step: f64) -> Result<f64> {
    let p = MlpParameters::init(2 * m, m, rng);
    let x: Vec<f64> = (0..2 * m).map(|_| away_from_zero(rng)).collect();
    let (_, cache) = p.forward(&x)?;
    let mut g = MlpParameters::zeros(2 * m, m);
    p.backward(&cache, 1.0, &mut g)?;
    let analytic: Vec<f64> = g.tensors().iter().flat_map(|t| t.iter().copied()).collect();
    let mut theta: Vec<f64> = p.tensors().iter().flat_map(|t| t.iter().copied()).collect();
    let f = |theta: &[f64]| {
        let mut q = p.clone();
        let mut k = 0;
        for t in q.tensors_mut() {
            for v in t.iter_mut() {
                *v = theta[k];
                k += 1;
            }
        }
        q.forward(&x).map(|(y, _)| y).unwrap_or(f64::NAN)
    };
    finite_diff_check(f, &mut theta, &analytic, step)
}

/// Initialised weights plus an O(1) perturbation of every entry, biases
/// included, so that states and gradients are well away from zero.
pub fn random_model(config: ModelConfig, rng: &mut Rng) -> Result<GrnnModel> {
    let mut model = GrnnModel::init(config, rng)?;
    for t in model.tensors_mut() {
        t.iter_mut().for_each(|v| *v += rng.uniform_in(-0.5, 0.5));
    }
    Ok(model)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn run_checks(s: &GradcheckSettings, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = Rng::derive(seed, Stream::Data, 0);
    let mut init = Rng::derive(seed, Stream::Init, 0);
    let tol = s.tolerance;
    let mut results = vec![
        CheckResult::new("gru_cell", gru_check(s.hidden, &mut init, s.step)?, tol),
        CheckResult::new("mlp_head", mlp_check(s.hidden, &mut init, s.step)?, tol),
    ];

    let task = SyntheticConfig { memory: 1, nodes: s.nodes, edges: s.events };
    let events = generate_epoch(&task, &mut rng)?;
    let cfg = ModelConfig { hidden: s.hidden, feature_dim: 1, task: Task::Regression, asymmetric: false };
    let model = random_model(cfg, &mut init)?;
    let strategies = [
        ("epoch_sequential", BatchingConfig::sequential(1)),
        ("epoch_tbatch", BatchingConfig::tbatch()),
        ("epoch_fixed_parallel", BatchingConfig::fixed_parallel(3)),
    ];
    for (i, (name, batching)) in strategies.into_iter().enumerate() {
        let err = epoch_fd_error(&model, &events, s.nodes, batching, None, seed, s.epoch_step, s.inject_sign_flip && i == 0)?;
        results.push(CheckResult::new(name, err, tol));
    }

    let users = s.nodes.div_ceil(2).max(1);
    let items = (s.nodes - users).max(1);
    let link_events = random_link_events(users, items, s.events, 2, &mut rng)?;
    let universe: Vec<NodeId> = (users..users + items).collect();
    let link_cfg = ModelConfig { hidden: s.hidden, feature_dim: 2, task: Task::LinkRanking, asymmetric: false };
    let link_model = random_model(link_cfg, &mut init)?;
    let err = epoch_fd_error(&link_model, &link_events, users + items, BatchingConfig::fixed_parallel(4), Some(&universe), seed, s.epoch_step, false)?;
    results.push(CheckResult::new("epoch_link_fixed_parallel", err, tol));

    // A single batch spanning the epoch leaves nothing to truncate.
    let whole = BatchingConfig::sequential(events.len());
    let full = epoch_gradient(&model, &events, s.nodes, whole, None, seed, false)?;
    let trunc = epoch_gradient(&model, &events, s.nodes, whole, None, seed, true)?;
    results.push(CheckResult { name: "truncation_vacuity".into(), error: max_abs_diff(&full, &trunc), tolerance: 0.0, passed: full == trunc });
    Ok(results)
}

pub fn cmd_gradcheck(config: &ExperimentConfig) -> Result<()> {
    let results = run_checks(&config.gradcheck, config.seed)?;
    for r in &results {
        println!("{:<28} max_err={:.3e} tol={:.1e} {}", r.name, r.error, r.tolerance, if r.passed { "ok" } else { "FAILED" });
    }
    let mut text = serde_json::to_string_pretty(&results)?;
    text.push('\n');
    write_atomic(&config.out.join("gradcheck.json"), text.as_bytes())?;
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(GrnnError::Evaluation(format!("gradient checks failed: {}", failed.join(", "))))
    }
}
