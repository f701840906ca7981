#![allow(dead_code)]

use grnn::dyngraph::{Event, NodeId};
use grnn::engine::{GrnnModel, ModelConfig, Task};
use grnn::numcore::Rng;

/// Random regression stream with scalar features and targets.
pub fn random_stream(nodes: usize, len: usize, rng: &mut Rng) -> Vec<Event> {
    (0..len)
        .map(|k| {
            let s = rng.below(nodes as u64) as usize;
            let mut d = rng.below(nodes as u64 - 1) as usize;
            if d >= s {
                d += 1;
            }
            Event::new(k, s, d, k as f64, vec![rng.standard_normal()], Some(rng.standard_normal())).unwrap()
        })
        .collect()
}

/// Bipartite stream: sources `0..users`, destinations `users..users + items`.
pub fn random_link_stream(users: usize, items: usize, len: usize, rng: &mut Rng) -> (Vec<Event>, Vec<NodeId>) {
    let events = (0..len)
        .map(|k| {
            let s = rng.below(users as u64) as usize;
            let d = users + rng.below(items as u64) as usize;
            Event::new(k, s, d, k as f64, vec![rng.standard_normal(), rng.standard_normal()], None).unwrap()
        })
        .collect();
    (events, (users..users + items).collect())
}

pub fn regression_model(hidden: usize, seed: u64) -> GrnnModel {
    let cfg = ModelConfig { hidden, feature_dim: 1, task: Task::Regression, asymmetric: false };
    GrnnModel::init(cfg, &mut Rng::new(seed)).unwrap()
}

/// JODIE-layout CSV where each user mostly returns to one favourite item.
pub fn write_jodie_csv(path: &std::path::Path, users: usize, items: usize, len: usize, seed: u64) {
    let mut rng = Rng::new(seed);
    let mut text = String::from("user_id,item_id,timestamp,state_label,comma_separated_list_of_features\n");
    for k in 0..len {
        let u = rng.below(users as u64) as usize;
        let i = if rng.uniform() < 0.8 { u % items } else { rng.below(items as u64) as usize };
        text.push_str(&format!("u{u},i{i},{k}.0,0,{:.4},{:.4}\n", rng.standard_normal(), rng.standard_normal()));
    }
    std::fs::write(path, text).unwrap();
}
