//! Random hyperparameter search over the optimizer and dropout settings.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numcore::{Distribution, DropoutKind, Rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub learning_rate: (f64, f64),
    pub weight_decay: (f64, f64),
    pub mlp_dropout: (f64, f64),
    pub state_dropout: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace { learning_rate: (1e-3, 1e-2), weight_decay: (1e-5, 1.0), mlp_dropout: (0.0, 0.3), state_dropout: (0.0, 0.3) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub mlp_dropout: f64,
    pub state_dropout: f64,
    pub state_dropout_type: DropoutKind,
}

impl SearchSpace {
    pub fn contains(&self, t: &TrialConfig) -> bool {
        let inside = |v: f64, (a, b): (f64, f64)| (a..=b).contains(&v);
        inside(t.learning_rate, self.learning_rate)
            && inside(t.weight_decay, self.weight_decay)
            && inside(t.mlp_dropout, self.mlp_dropout)
            && inside(t.state_dropout, self.state_dropout)
    }

    pub fn sample(&self, rng: &mut Rng) -> Result<TrialConfig> {
        let learning_rate = Distribution::LogUniform { a: self.learning_rate.0, b: self.learning_rate.1 }.sample(rng)?;
        let weight_decay = Distribution::LogUniform { a: self.weight_decay.0, b: self.weight_decay.1 }.sample(rng)?;
        let mlp_dropout = Distribution::Uniform { a: self.mlp_dropout.0, b: self.mlp_dropout.1 }.sample(rng)?;
        let state_dropout = Distribution::Uniform { a: self.state_dropout.0, b: self.state_dropout.1 }.sample(rng)?;
        let state_dropout_type = if rng.below(2) == 0 { DropoutKind::Regular } else { DropoutKind::Recurrent };
        Ok(TrialConfig { learning_rate, weight_decay, mlp_dropout, state_dropout, state_dropout_type })
    }
}

pub fn random_search(space: &SearchSpace, trials: usize, seed: u64) -> Result<Vec<TrialConfig>> {
    let mut rng = Rng::derive(seed, Stream::Search, 0);
    (0..trials).map(|_| space.sample(&mut rng)).collect()
}
