//! Experiment configuration: defaults, JSON file, environment overrides, flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dyngraph::BatchingConfig;
use crate::engine::BpttMode;
use crate::error::{GrnnError, Result};
use crate::evalbench::{SearchSpace, TrialSettings};
use crate::io::write_atomic;
use crate::numcore::AdamwConfig;

/// Prefix of environment variables that override configuration keys.
/// Nested keys are joined with a double underscore: `GRNN_CFG_SYNTH__EPOCHS=10`.
pub const ENV_PREFIX: &str = "GRNN_CFG_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelection {
    #[value(name = "f_bptt")]
    FBptt,
    #[value(name = "t_bptt")]
    TBptt,
    Both,
}

impl ModeSelection {
    /// Truncated first, as `both` shares one ingestion for T then F.
    pub fn modes(self) -> Vec<BpttMode> {
        match self {
            ModeSelection::FBptt => vec![BpttMode::Full],
            ModeSelection::TBptt => vec![BpttMode::Truncated],
            ModeSelection::Both => vec![BpttMode::Truncated, BpttMode::Full],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSettings {
    /// Memory parameters to sweep.
    pub memory: Vec<usize>,
    /// Hidden state sizes to sweep.
    pub hidden: Vec<usize>,
    /// Runs per cell; run `r` uses seed `seed + r`.
    pub repeats: usize,
    pub nodes: usize,
    pub edges: usize,
    pub epochs: usize,
    /// Epochs averaged for the final MSE.
    pub final_window: usize,
    pub batching: BatchingConfig,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            memory: vec![1, 2, 4, 8],
            hidden: vec![32, 64, 128],
            repeats: 3,
            nodes: 100,
            edges: 1000,
            epochs: 5000,
            final_window: 100,
            batching: BatchingConfig::sequential(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSettings {
    pub dataset: Option<PathBuf>,
    /// Keep only the first `limit` events of the file.
    pub limit: Option<usize>,
    pub trials: usize,
    pub train_frac: f64,
    pub val_frac: f64,
    pub trial: TrialSettings,
    pub search: SearchSpace,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            dataset: None,
            limit: None,
            trials: 25,
            train_frac: 0.70,
            val_frac: 0.15,
            trial: TrialSettings::default(),
            search: SearchSpace::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckSettings {
    pub hidden: usize,
    pub events: usize,
    pub nodes: usize,
    /// Step of the plain central differences used for the cells.
    pub step: f64,
    /// Initial step of the extrapolated differences used for whole epochs.
    pub epoch_step: f64,
    pub tolerance: f64,
    /// Test fixture: flips the sign of one analytic gradient entry.
    pub inject_sign_flip: bool,
}

impl Default for GradcheckSettings {
    fn default() -> Self {
        GradcheckSettings { hidden: 4, events: 12, nodes: 5, step: 1e-5, epoch_step: 3e-2, tolerance: 1e-5, inject_sign_flip: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub mode: ModeSelection,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub out: PathBuf,
    /// Add wall-clock seconds to telemetry (makes outputs non-reproducible).
    pub timing: bool,
    pub optimizer: AdamwConfig,
    pub synth: SynthSettings,
    pub bench: BenchSettings,
    pub gradcheck: GradcheckSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            mode: ModeSelection::Both,
            threads: 0,
            out: PathBuf::from("results"),
            timing: false,
            optimizer: AdamwConfig::default(),
            synth: SynthSettings::default(),
            bench: BenchSettings::default(),
            gradcheck: GradcheckSettings::default(),
        }
    }
}

/// Flag values that take precedence over file and environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mode: Option<ModeSelection>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults, then `file`, then `GRNN_CFG_*` variables from `env`, then flags.
    pub fn resolve<I>(file: Option<&Path>, env: I, flags: &Overrides) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut value = serde_json::to_value(ExperimentConfig::default())?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| GrnnError::io(path, e))?;
            let from_file: Value = serde_json::from_str(&text).map_err(|e| GrnnError::Config(format!("{}: {e}", path.display())))?;
            merge(&mut value, from_file);
        }
        let mut vars: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        vars.sort();
        for (key, raw) in vars {
            let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(|s| s.to_ascii_lowercase()).collect();
            let parsed = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
            set_path(&mut value, &path, parsed).map_err(|e| GrnnError::Config(format!("{key}: {e}")))?;
        }
        let mut config: ExperimentConfig = serde_json::from_value(value).map_err(|e| GrnnError::Config(e.to_string()))?;
        if let Some(out) = &flags.out {
            config.out = out.clone();
        }
        if let Some(seed) = flags.seed {
            config.seed = seed;
        }
        if let Some(mode) = flags.mode {
            config.mode = mode;
        }
        if let Some(threads) = flags.threads {
            config.threads = threads;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GrnnError::Config(msg));
        let o = &self.optimizer;
        if !(o.learning_rate > 0.0 && o.weight_decay >= 0.0 && (0.0..1.0).contains(&o.beta1) && (0.0..1.0).contains(&o.beta2) && o.epsilon > 0.0) {
            return bad(format!("invalid optimizer settings {o:?}"));
        }
        let s = &self.synth;
        if s.memory.is_empty() || s.memory.contains(&0) {
            return bad("synth.memory must list values >= 1".into());
        }
        if s.hidden.is_empty() || s.hidden.contains(&0) {
            return bad("synth.hidden must list values >= 1".into());
        }
        if s.repeats == 0 || s.nodes < 2 || s.edges == 0 || s.epochs == 0 || s.final_window == 0 {
            return bad("synth.repeats, edges, epochs and final_window must be positive and nodes >= 2".into());
        }
        if s.batching.size == 0 && s.batching.strategy != crate::dyngraph::Strategy::TBatch {
            return bad("synth.batching.size must be positive".into());
        }
        let b = &self.bench;
        if b.trials == 0 || b.trial.hidden == 0 || b.trial.batch_size == 0 || b.trial.recall_k == 0 {
            return bad("bench.trials, trial.hidden, trial.batch_size and trial.recall_k must be positive".into());
        }
        for (name, (lo, hi)) in [
            ("learning_rate", b.search.learning_rate),
            ("weight_decay", b.search.weight_decay),
            ("mlp_dropout", b.search.mlp_dropout),
            ("state_dropout", b.search.state_dropout),
        ] {
            if !(lo <= hi && lo >= 0.0) {
                return bad(format!("bench.search.{name} range ({lo}, {hi}) is invalid"));
            }
        }
        if b.search.learning_rate.0 <= 0.0 || b.search.weight_decay.0 <= 0.0 {
            return bad("log-uniform search ranges need positive bounds".into());
        }
        if b.search.mlp_dropout.1 >= 1.0 || b.search.state_dropout.1 >= 1.0 {
            return bad("dropout search ranges must stay below 1".into());
        }
        let g = &self.gradcheck;
        if g.hidden == 0 || g.events == 0 || g.nodes < 2 || !(g.step > 0.0) || !(g.epoch_step > 0.0) || !(g.tolerance > 0.0) {
            return bad("gradcheck settings must be positive with nodes >= 2".into());
        }
        Ok(())
    }

    pub fn write_effective(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("effective_config.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(value: &mut Value, path: &[String], new: Value) -> std::result::Result<(), String> {
    let (last, parents) = path.split_last().ok_or("empty key")?;
    let mut cur = value;
    for p in parents {
        cur = cur.as_object_mut().and_then(|o| o.get_mut(p)).ok_or_else(|| format!("unknown key `{p}`"))?;
    }
    let obj = cur.as_object_mut().ok_or_else(|| format!("`{last}` is not inside an object"))?;
    if !obj.contains_key(last) {
        return Err(format!("unknown key `{last}`"));
    }
    obj.insert(last.clone(), new);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_validate() {
        let c = ExperimentConfig::resolve(None, env(&[]), &Overrides::default()).unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.optimizer.learning_rate, 1e-3);
        assert_eq!(c.optimizer.weight_decay, 1e-4);
    }

    #[test]
    fn precedence_file_env_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 5, "synth": {"epochs": 7, "memory": [2]}}"#).unwrap();
        let flags = Overrides { seed: Some(9), ..Overrides::default() };
        let c = ExperimentConfig::resolve(Some(&path), env(&[("GRNN_CFG_SYNTH__EPOCHS", "11"), ("OTHER", "x")]), &flags).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.synth.epochs, 11);
        assert_eq!(c.synth.memory, vec![2]);
        assert_eq!(c.synth.hidden, vec![32, 64, 128]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"synth": {"epoch": 7}}"#).unwrap();
        let e = ExperimentConfig::resolve(Some(&path), env(&[]), &Overrides::default()).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let e = ExperimentConfig::resolve(None, env(&[("GRNN_CFG_SYNTH__EPOCH", "3")]), &Overrides::default()).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn out_of_domain_rejected() {
        let e = ExperimentConfig::resolve(None, env(&[("GRNN_CFG_SYNTH__MEMORY", "[0]")]), &Overrides::default()).unwrap_err();
        assert!(matches!(e, GrnnError::Config(_)));
        let e = ExperimentConfig::resolve(None, env(&[("GRNN_CFG_OPTIMIZER__LEARNING_RATE", "-1")]), &Overrides::default()).unwrap_err();
        assert!(matches!(e, GrnnError::Config(_)));
    }

    #[test]
    fn effective_config_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig { seed: 3, ..ExperimentConfig::default() };
        c.bench.limit = Some(100);
        let path = c.write_effective(dir.path()).unwrap();
        let back = ExperimentConfig::resolve(Some(&path), env(&[]), &Overrides::default()).unwrap();
        assert_eq!(back, c);
    }
}
