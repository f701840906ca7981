use serde::{Deserialize, Serialize};

use crate::dyngraph::{make_batches, Batch, BatchingConfig, Event, NodeId, NodeStateStore, Role};
use crate::engine::loss::{loss_bce, loss_mse};
use crate::engine::model::{GrnnModel, Task};
use crate::engine::tape::{EventRecord, EventTape, HeadRecord, Producer, Side, StateInput, UpdateRecord};
use crate::error::{GrnnError, Result};
use crate::numcore::dropout::dropout_forward;
use crate::numcore::{DropoutKind, Rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regularization {
    pub mlp_dropout: f64,
    pub state_dropout: f64,
    pub state_dropout_kind: DropoutKind,
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization { mlp_dropout: 0.0, state_dropout: 0.0, state_dropout_kind: DropoutKind::Regular }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForwardOptions<'a> {
    pub record: bool,
    pub training: bool,
    pub regularization: Regularization,
    /// Negative-sampling universe; required for link ranking.
    pub destinations: Option<&'a [NodeId]>,
}

impl<'a> ForwardOptions<'a> {
    pub fn recording() -> Self {
        ForwardOptions { record: true, training: true, regularization: Regularization::default(), destinations: None }
    }
}

/// Random streams consumed during a training forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRngs {
    pub dropout: Rng,
    pub negatives: Rng,
}

impl EpochRngs {
    pub fn from_seed(seed: u64) -> Self {
        EpochRngs { dropout: Rng::derive(seed, Stream::Dropout, 0), negatives: Rng::derive(seed, Stream::Negatives, 0) }
    }
}

#[derive(Debug)]
pub struct ForwardResult {
    pub total_loss: f64,
    /// Per-event loss, indexed by position in the event slice.
    pub losses: Vec<f64>,
    /// Regression prediction or positive logit, by position.
    pub outputs: Vec<f64>,
    pub tape: EventTape,
}

/// Incremental forward pass; one `run_batch` call per batch in order.
pub(crate) struct ForwardPass<'a> {
    events: &'a [Event],
    model: &'a GrnnModel,
    opts: ForwardOptions<'a>,
    producers: Vec<Producer>,
    pub(crate) tape: EventTape,
    pub(crate) total_loss: f64,
    pub(crate) losses: Vec<f64>,
    pub(crate) outputs: Vec<f64>,
    batches_run: usize,
}

impl<'a> ForwardPass<'a> {
    pub(crate) fn new(events: &'a [Event], model: &'a GrnnModel, store: &NodeStateStore, opts: ForwardOptions<'a>) -> Result<Self> {
        if store.hidden() != model.hidden() {
            return Err(GrnnError::shape(format!("store hidden size {} != model hidden size {}", store.hidden(), model.hidden())));
        }
        if model.config.task == Task::LinkRanking && opts.destinations.is_none_or(|d| d.is_empty()) {
            return Err(GrnnError::Config("link ranking needs a non-empty destination universe".into()));
        }
        Ok(ForwardPass {
            events,
            model,
            opts,
            producers: vec![None; store.nodes()],
            tape: EventTape::new(),
            total_loss: 0.0,
            losses: vec![0.0; events.len()],
            outputs: vec![0.0; events.len()],
            batches_run: 0,
        })
    }

    fn read(&self, store: &NodeStateStore, node: NodeId) -> Result<StateInput> {
        let producer = *self.producers.get(node).ok_or_else(|| GrnnError::Structural(format!("unknown node {node}")))?;
        Ok(StateInput { node, producer, value: store.state(node)?.to_vec() })
    }

    fn head(&self, e: &Event, src: &StateInput, dst: &StateInput, store: &NodeStateStore, rngs: &mut EpochRngs) -> Result<(HeadRecord, f64, f64)> {
        let reg = self.opts.regularization;
        let mlp_dropout = self.opts.training && reg.mlp_dropout > 0.0;
        let head = &self.model.head;
        match self.model.config.task {
            Task::Regression => {
                let target = e.target.ok_or_else(|| GrnnError::Data(format!("event {} has no regression target", e.index)))?;
                let drop = mlp_dropout.then_some((reg.mlp_dropout, &mut rngs.dropout));
                let (prediction, cache) = head.forward_segments(&[&src.value, &dst.value, &e.features], drop)?;
                let (loss, _) = loss_mse(prediction, target);
                Ok((HeadRecord::Regression { cache, prediction, target }, loss, prediction))
            }
            Task::LinkRanking => {
                let universe = self.opts.destinations.unwrap_or(&[]);
                let negative_node = universe[rngs.negatives.below(universe.len() as u64) as usize];
                let negative_input = self.read(store, negative_node)?;
                let drop = mlp_dropout.then_some((reg.mlp_dropout, &mut rngs.dropout));
                let (positive_logit, positive) = head.forward_segments(&[&src.value, &dst.value], drop)?;
                let drop = mlp_dropout.then_some((reg.mlp_dropout, &mut rngs.dropout));
                let (negative_logit, negative) = head.forward_segments(&[&src.value, &negative_input.value], drop)?;
                let loss = loss_bce(positive_logit, 1.0).0 + loss_bce(negative_logit, 0.0).0;
                Ok((HeadRecord::Link { positive, positive_logit, negative_input, negative, negative_logit }, loss, positive_logit))
            }
        }
    }

    pub(crate) fn run_batch(&mut self, batch: &Batch, store: &mut NodeStateStore, rngs: &mut EpochRngs) -> Result<()> {
        let batch_idx = self.batches_run;
        self.batches_run += 1;
        if self.opts.record {
            self.tape.begin_batch();
        }
        let parallel = batch.is_parallel();
        let applied = batch.applied_sides(self.events);
        let reg = self.opts.regularization;
        let state_dropout = self.opts.training && reg.state_dropout > 0.0;
        let mut pending: Vec<(NodeId, Vec<f64>, Producer, usize)> = Vec::new();

        for (&p, &(apply_src, apply_dst)) in batch.events.iter().zip(&applied) {
            let e = self.events.get(p).ok_or_else(|| GrnnError::Structural(format!("batch refers to missing event {p}")))?;
            let src_in = self.read(store, e.src)?;
            let dst_in = self.read(store, e.dst)?;
            let (head, loss, output) = self.head(e, &src_in, &dst_in, store, rngs)?;
            if !loss.is_finite() {
                return Err(GrnnError::Numerical { event: e.index, what: format!("loss is {loss}") });
            }
            self.total_loss += loss;
            self.losses[p] = loss;
            self.outputs[p] = output;

            let rec_idx = self.tape.next_index();
            let mut updates: [Option<UpdateRecord>; 2] = [None, None];
            let mut writes = Vec::with_capacity(2);
            for (side, apply) in [(Side::Src, apply_src), (Side::Dst, apply_dst)] {
                if !apply {
                    continue;
                }
                let (own, cp, role) = match side {
                    Side::Src => (&src_in, &dst_in, Role::Source),
                    Side::Dst => (&dst_in, &src_in, Role::Destination),
                };
                let input: Vec<f64> = cp.value.iter().chain(&e.features).copied().collect();
                let (h_new, cache) = self.model.cell_for(role).forward(&own.value, &input)?;
                let (h_out, dropout) = if state_dropout {
                    dropout_forward(&h_new, Some(&own.value), reg.state_dropout, reg.state_dropout_kind, &mut rngs.dropout)?
                } else {
                    (h_new, None)
                };
                if h_out.iter().any(|v| !v.is_finite()) {
                    return Err(GrnnError::Numerical { event: e.index, what: "non-finite state".into() });
                }
                let producer = if self.opts.record { Some((rec_idx, side)) } else { None };
                writes.push((own.node, h_out, producer, e.index));
                if self.opts.record {
                    updates[side as usize] = Some(UpdateRecord { cache, dropout });
                }
            }
            for w in writes {
                if parallel {
                    pending.push(w);
                } else {
                    self.write(store, w)?;
                }
            }
            if self.opts.record {
                self.tape.push(EventRecord { position: p, batch: batch_idx, src_in, dst_in, head, loss, updates });
            }
        }
        for w in pending {
            self.write(store, w)?;
        }
        Ok(())
    }

    fn write(&mut self, store: &mut NodeStateStore, (node, value, producer, event): (NodeId, Vec<f64>, Producer, usize)) -> Result<()> {
        store.set_state(node, &value, event)?;
        self.producers[node] = producer;
        Ok(())
    }

    /// Releases every record that no longer produces a live node state.
    pub(crate) fn release_consumed(&mut self, retained: &mut Vec<usize>) {
        let keep: std::collections::HashSet<usize> = self.producers.iter().flatten().map(|&(r, _)| r).collect();
        retained.retain(|&r| {
            if keep.contains(&r) {
                true
            } else {
                self.tape.release(r);
                false
            }
        });
    }

    pub(crate) fn finish(self) -> ForwardResult {
        ForwardResult { total_loss: self.total_loss, losses: self.losses, outputs: self.outputs, tape: self.tape }
    }
}

/// Runs one epoch forward from the current contents of `store`.
pub fn forward_epoch(
    events: &[Event],
    model: &GrnnModel,
    store: &mut NodeStateStore,
    batching: BatchingConfig,
    opts: ForwardOptions<'_>,
    rngs: &mut EpochRngs,
) -> Result<ForwardResult> {
    let batches = make_batches(events, batching)?;
    let mut pass = ForwardPass::new(events, model, store, opts)?;
    for b in &batches {
        pass.run_batch(b, store, rngs)?;
    }
    Ok(pass.finish())
}
