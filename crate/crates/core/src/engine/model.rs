use serde::{Deserialize, Serialize};

use crate::dyngraph::{Event, EventModel, Role};
use crate::error::{GrnnError, Result};
use crate::numcore::{GruParameters, MlpParameters, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Edge regression; the head reads `[h_src; h_dst; x]`.
    Regression,
    /// Link ranking with one sampled negative per edge; the head reads `[h_src; h_dst]`.
    LinkRanking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: usize,
    pub feature_dim: usize,
    pub task: Task,
    /// Separate update cells for the source and destination roles.
    #[serde(default)]
    pub asymmetric: bool,
}

impl ModelConfig {
    pub fn head_input(&self) -> usize {
        match self.task {
            Task::Regression => 2 * self.hidden + self.feature_dim,
            Task::LinkRanking => 2 * self.hidden,
        }
    }
}

/// GRU update cell(s) plus the MLP readout. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrnnModel {
    pub config: ModelConfig,
    pub cell: GruParameters,
    pub dst_cell: Option<GruParameters>,
    pub head: MlpParameters,
}

impl GrnnModel {
    pub fn init(config: ModelConfig, rng: &mut Rng) -> Result<Self> {
        if config.hidden == 0 {
            return Err(GrnnError::Parameter("hidden size must be positive".into()));
        }
        let cell_in = config.hidden + config.feature_dim;
        let cell = GruParameters::init(config.hidden, cell_in, rng);
        let dst_cell = config.asymmetric.then(|| GruParameters::init(config.hidden, cell_in, rng));
        let head = MlpParameters::init(config.head_input(), config.hidden, rng);
        Ok(GrnnModel { config, cell, dst_cell, head })
    }

    pub fn zeros(config: ModelConfig) -> Self {
        let cell_in = config.hidden + config.feature_dim;
        GrnnModel {
            config,
            cell: GruParameters::zeros(config.hidden, cell_in),
            dst_cell: config.asymmetric.then(|| GruParameters::zeros(config.hidden, cell_in)),
            head: MlpParameters::zeros(config.head_input(), config.hidden),
        }
    }

    pub fn zeros_like(&self) -> Self {
        GrnnModel::zeros(self.config)
    }

    pub fn hidden(&self) -> usize {
        self.config.hidden
    }

    pub fn cell_for(&self, role: Role) -> &GruParameters {
        match (role, &self.dst_cell) {
            (Role::Destination, Some(c)) => c,
            _ => &self.cell,
        }
    }

    pub fn cell_for_mut(&mut self, role: Role) -> &mut GruParameters {
        match (role, &mut self.dst_cell) {
            (Role::Destination, Some(c)) => c,
            _ => &mut self.cell,
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.cell.tensors();
        if let Some(c) = &self.dst_cell {
            t.extend(c.tensors());
        }
        t.extend(self.head.tensors());
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.cell.tensors_mut();
        if let Some(c) = &mut self.dst_cell {
            t.extend(c.tensors_mut());
        }
        t.extend(self.head.tensors_mut());
        t
    }

    pub fn shapes(&self) -> Vec<usize> {
        self.tensors().iter().map(|t| t.len()).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.shapes().iter().sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn unflatten(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_parameters() {
            return Err(GrnnError::shape(format!("{} values for {} parameters", flat.len(), self.num_parameters())));
        }
        let mut k = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[k..k + n]);
            k += n;
        }
        Ok(())
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn add_assign(&mut self, other: &GrnnModel) -> Result<()> {
        if self.shapes() != other.shapes() {
            return Err(GrnnError::shape("adding models of different shapes"));
        }
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Readout on explicit state vectors.
    pub fn readout(&self, h_src: &[f64], h_other: &[f64], features: &[f64]) -> Result<f64> {
        let (logit, _) = match self.config.task {
            Task::Regression => self.head.forward_segments(&[h_src, h_other, features], None)?,
            Task::LinkRanking => self.head.forward_segments(&[h_src, h_other], None)?,
        };
        Ok(logit)
    }
}

impl EventModel for GrnnModel {
    fn output(&self, h_src: &[f64], h_dst: &[f64], event: &Event) -> Result<f64> {
        self.readout(h_src, h_dst, &event.features)
    }

    fn update(&self, h_own: &[f64], h_counterparty: &[f64], event: &Event, role: Role) -> Result<Vec<f64>> {
        let input: Vec<f64> = h_counterparty.iter().chain(&event.features).copied().collect();
        Ok(self.cell_for(role).forward(h_own, &input)?.0)
    }
}
