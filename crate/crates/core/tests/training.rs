use grnn::dyngraph::{BatchingConfig, NodeStateStore};
use grnn::engine::{forward_epoch, train_epoch, BpttMode, Checkpoint, EpochRngs, ForwardOptions, GrnnModel, ModelConfig, Task, TrainConfig, Trainer};
use grnn::numcore::{AdamwConfig, Rng};
use grnn::synthtask::{baseline_mse, generate_epoch, SyntheticConfig};

mod common;
use common::{random_link_stream, random_stream};

fn synth_cfg(hidden: usize) -> ModelConfig {
    ModelConfig { hidden, feature_dim: 1, task: Task::Regression, asymmetric: false }
}

#[test]
fn empty_epoch_has_zero_loss_and_empty_tape() {
    let model = GrnnModel::init(synth_cfg(3), &mut Rng::new(0)).unwrap();
    let mut store = NodeStateStore::new(4, 3);
    let fwd = forward_epoch(&[], &model, &mut store, BatchingConfig::sequential(1), ForwardOptions::recording(), &mut EpochRngs::from_seed(0)).unwrap();
    assert_eq!(fwd.total_loss, 0.0);
    assert!(fwd.tape.is_empty());
}

#[test]
fn zero_model_loss_is_the_baseline() {
    let events = generate_epoch(&SyntheticConfig { memory: 2, nodes: 20, edges: 300 }, &mut Rng::new(5)).unwrap();
    let model = GrnnModel::zeros(synth_cfg(4));
    let mut store = NodeStateStore::new(20, 4);
    let fwd = forward_epoch(&events, &model, &mut store, BatchingConfig::sequential(1), ForwardOptions::recording(), &mut EpochRngs::from_seed(0)).unwrap();
    assert!(fwd.outputs.iter().all(|&y| y == 0.0));
    let mean = fwd.total_loss / events.len() as f64;
    assert!((mean - baseline_mse(&events).unwrap()).abs() < 1e-12);
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let events = random_stream(5, 30, &mut Rng::new(1));
    let opt = AdamwConfig { learning_rate: 0.0, ..AdamwConfig::default() };
    let mut t = Trainer::new(synth_cfg(3), opt, 4).unwrap();
    let before = t.model.clone();
    let m = train_epoch(&events, &mut t, &mut NodeStateStore::new(5, 3), &TrainConfig::new(BpttMode::Full, BatchingConfig::sequential(1)), None).unwrap();
    assert_eq!(t.model, before);
    assert!(m.mean_loss > 0.0 && m.grad_norm > 0.0);
}

#[test]
fn fixed_seeds_give_identical_loss_curves() {
    let run = |mode| {
        let mut t = Trainer::new(synth_cfg(4), AdamwConfig::default(), 9).unwrap();
        let mut data = Rng::new(9);
        let mut store = NodeStateStore::new(10, 4);
        (0..5)
            .map(|_| {
                let ev = generate_epoch(&SyntheticConfig { memory: 1, nodes: 10, edges: 50 }, &mut data).unwrap();
                train_epoch(&ev, &mut t, &mut store, &TrainConfig::new(mode, BatchingConfig::sequential(1)), None).unwrap().total_loss.to_bits()
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(BpttMode::Full), run(BpttMode::Full));
    assert_eq!(run(BpttMode::Truncated), run(BpttMode::Truncated));
}

#[test]
fn training_reduces_synthetic_loss() {
    let mut t = Trainer::new(synth_cfg(8), AdamwConfig { learning_rate: 1e-2, ..AdamwConfig::default() }, 0).unwrap();
    let mut data = Rng::new(0);
    let cfg = SyntheticConfig { memory: 1, nodes: 10, edges: 100 };
    let mut store = NodeStateStore::new(10, 8);
    let mut losses = Vec::new();
    for _ in 0..150 {
        let ev = generate_epoch(&cfg, &mut data).unwrap();
        let m = train_epoch(&ev, &mut t, &mut store, &TrainConfig::new(BpttMode::Full, BatchingConfig::sequential(1)), None).unwrap();
        losses.push(m.mean_loss / baseline_mse(&ev).unwrap());
    }
    let head: f64 = losses[..10].iter().sum::<f64>() / 10.0;
    let tail: f64 = losses[140..].iter().sum::<f64>() / 10.0;
    assert!(tail < 0.5 * head, "{head} -> {tail}");
}

#[test]
fn checkpoint_resume_continues_identically() {
    let (events, universe) = random_link_stream(5, 6, 40, &mut Rng::new(2));
    let cfg = ModelConfig { hidden: 3, feature_dim: 2, task: Task::LinkRanking, asymmetric: false };
    let tc = TrainConfig::new(BpttMode::Truncated, BatchingConfig::fixed_parallel(8));
    let mut a = Trainer::new(cfg, AdamwConfig::default(), 1).unwrap();
    let mut store = NodeStateStore::new(11, 3);
    for _ in 0..2 {
        train_epoch(&events, &mut a, &mut store, &tc, Some(&universe)).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    Checkpoint::new(2, &a).save(&path).unwrap();
    let mut b = Checkpoint::load(&path).unwrap().trainer;
    assert_eq!(a, b);
    for _ in 0..2 {
        let ma = train_epoch(&events, &mut a, &mut store, &tc, Some(&universe)).unwrap();
        let mb = train_epoch(&events, &mut b, &mut NodeStateStore::new(11, 3), &tc, Some(&universe)).unwrap();
        assert_eq!(ma, mb);
    }
    assert_eq!(a, b);
    std::fs::write(&path, std::fs::read_to_string(&path).unwrap().replacen("\"version\":1", "\"version\":7", 1)).unwrap();
    assert!(Checkpoint::load(&path).is_err());
}

#[test]
fn link_ranking_needs_a_universe_and_regression_needs_targets() {
    let (events, _) = random_link_stream(2, 2, 4, &mut Rng::new(0));
    let cfg = ModelConfig { hidden: 2, feature_dim: 2, task: Task::LinkRanking, asymmetric: false };
    let mut t = Trainer::new(cfg, AdamwConfig::default(), 0).unwrap();
    assert!(train_epoch(&events, &mut t, &mut NodeStateStore::new(4, 2), &TrainConfig::new(BpttMode::Full, BatchingConfig::sequential(1)), None).is_err());
    let reg = ModelConfig { hidden: 2, feature_dim: 2, task: Task::Regression, asymmetric: false };
    let mut t = Trainer::new(reg, AdamwConfig::default(), 0).unwrap();
    assert!(train_epoch(&events, &mut t, &mut NodeStateStore::new(4, 2), &TrainConfig::new(BpttMode::Full, BatchingConfig::sequential(1)), None).is_err());
}
