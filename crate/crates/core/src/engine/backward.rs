//! Reverse sweeps over an [`EventTape`].
//!
//! Full BPTT sweeps every record once, newest first, so gradients reach the
//! epoch-initial states through every batch boundary. Truncated BPTT sweeps
//! each batch on its own: gradient entering a state that an earlier batch
//! wrote still flows through the single update that wrote it (its parameter
//! gradient is kept), but stops at that update's inputs.

use std::collections::BTreeMap;

use crate::dyngraph::Role;
use crate::engine::loss::{loss_bce, loss_mse};
use crate::engine::model::GrnnModel;
use crate::engine::tape::{EventRecord, EventTape, HeadRecord, Producer, Side, UpdateRecord};
use crate::error::{GrnnError, Result};
use crate::numcore::matrix::add_assign;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientAccumulator {
    pub grads: GrnnModel,
    pub events: usize,
    pub loss: f64,
}

impl GradientAccumulator {
    pub fn new(model: &GrnnModel) -> Self {
        GradientAccumulator { grads: model.zeros_like(), events: 0, loss: 0.0 }
    }

    pub fn reset(&mut self) {
        self.grads = self.grads.zeros_like();
        self.events = 0;
        self.loss = 0.0;
    }

    pub fn norm(&self) -> f64 {
        self.grads.l2_norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cut {
    None,
    AtBatchStart,
}

struct Sweep<'t> {
    tape: &'t EventTape,
    lo: usize,
    cut: Cut,
    adjoint: Vec<[Option<Vec<f64>>; 2]>,
    foreign: BTreeMap<(usize, Side), Vec<f64>>,
}

fn accumulate(slot: &mut Option<Vec<f64>>, grad: &[f64]) {
    match slot {
        Some(acc) => add_assign(acc, grad),
        None => *slot = Some(grad.to_vec()),
    }
}

impl<'t> Sweep<'t> {
    fn route(&mut self, producer: Producer, grad: &[f64]) {
        let Some((rec, side)) = producer else { return };
        if rec >= self.lo {
            accumulate(&mut self.adjoint[rec - self.lo][side as usize], grad);
        } else if self.cut == Cut::AtBatchStart {
            let slot = self.foreign.entry((rec, side)).or_insert_with(|| vec![0.0; grad.len()]);
            add_assign(slot, grad);
        }
    }

    fn record(&self, idx: usize) -> Result<&'t EventRecord> {
        self.tape.record(idx).ok_or_else(|| GrnnError::Structural(format!("tape record {idx} is missing (released or never recorded)")))
    }
}

fn role(side: Side) -> Role {
    match side {
        Side::Src => Role::Source,
        Side::Dst => Role::Destination,
    }
}

/// Back-propagates `grad` through one state update. Returns the gradients
/// w.r.t. the owner's previous state and the counterparty state.
fn update_backward(model: &GrnnModel, grads: &mut GrnnModel, side: Side, upd: &UpdateRecord, grad: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = model.hidden();
    let (g_new, g_prev) = match &upd.dropout {
        Some(mask) => mask.backward(grad),
        None => (grad.to_vec(), None),
    };
    let (mut d_own, d_input) = model.cell_for(role(side)).backward(&upd.cache, &g_new, grads.cell_for_mut(role(side)))?;
    if let Some(gp) = g_prev {
        add_assign(&mut d_own, &gp);
    }
    Ok((d_own, d_input[..m].to_vec()))
}

fn sweep_range(tape: &EventTape, model: &GrnnModel, lo: usize, hi: usize, cut: Cut, acc: &mut GradientAccumulator) -> Result<()> {
    let m = model.hidden();
    let mut sw = Sweep { tape, lo, cut, adjoint: vec![[None, None]; hi - lo], foreign: BTreeMap::new() };
    for idx in (lo..hi).rev() {
        let rec = sw.record(idx)?;
        acc.events += 1;
        acc.loss += rec.loss;
        match &rec.head {
            HeadRecord::Regression { cache, prediction, target } => {
                let (_, g) = loss_mse(*prediction, *target);
                let d = model.head.backward(cache, g, &mut acc.grads.head)?;
                sw.route(rec.src_in.producer, &d[..m]);
                sw.route(rec.dst_in.producer, &d[m..2 * m]);
            }
            HeadRecord::Link { positive, positive_logit, negative_input, negative, negative_logit } => {
                let (_, g) = loss_bce(*positive_logit, 1.0);
                let d = model.head.backward(positive, g, &mut acc.grads.head)?;
                sw.route(rec.src_in.producer, &d[..m]);
                sw.route(rec.dst_in.producer, &d[m..2 * m]);
                let (_, g) = loss_bce(*negative_logit, 0.0);
                let d = model.head.backward(negative, g, &mut acc.grads.head)?;
                sw.route(rec.src_in.producer, &d[..m]);
                sw.route(negative_input.producer, &d[m..2 * m]);
            }
        }
        for side in [Side::Dst, Side::Src] {
            let Some(grad) = sw.adjoint[idx - lo][side as usize].take() else { continue };
            let upd = rec.updates[side as usize]
                .as_ref()
                .ok_or_else(|| GrnnError::Structural(format!("record {idx} has gradient for an update it did not apply")))?;
            let (d_own, d_cp) = update_backward(model, &mut acc.grads, side, upd, &grad)?;
            let other = match side {
                Side::Src => Side::Dst,
                Side::Dst => Side::Src,
            };
            sw.route(rec.input(side).producer, &d_own);
            sw.route(rec.input(other).producer, &d_cp);
        }
    }
    let foreign = std::mem::take(&mut sw.foreign);
    for ((idx, side), grad) in foreign.into_iter().rev() {
        let rec = sw.record(idx)?;
        let upd = rec.updates[side as usize]
            .as_ref()
            .ok_or_else(|| GrnnError::Structural(format!("record {idx} is referenced as producer but has no update")))?;
        update_backward(model, &mut acc.grads, side, upd, &grad)?;
    }
    Ok(())
}

/// Exact gradient of the summed epoch loss.
pub fn backward_full(tape: &EventTape, model: &GrnnModel) -> Result<GradientAccumulator> {
    let mut acc = GradientAccumulator::new(model);
    sweep_range(tape, model, 0, tape.len(), Cut::None, &mut acc)?;
    Ok(acc)
}

/// Sum over batches of the per-batch truncated gradients.
pub fn backward_truncated(tape: &EventTape, model: &GrnnModel) -> Result<GradientAccumulator> {
    let mut acc = GradientAccumulator::new(model);
    for b in (0..tape.batch_count()).rev() {
        backward_truncated_batch(tape, model, b, &mut acc)?;
    }
    Ok(acc)
}

/// Adds batch `batch`'s truncated gradient into `acc`.
pub fn backward_truncated_batch(tape: &EventTape, model: &GrnnModel, batch: usize, acc: &mut GradientAccumulator) -> Result<()> {
    if batch >= tape.batch_count() {
        return Err(GrnnError::Structural(format!("tape has no batch {batch}")));
    }
    let r = tape.batch_range(batch);
    sweep_range(tape, model, r.start, r.end, Cut::AtBatchStart, acc)
}
