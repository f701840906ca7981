use crate::dyngraph::batching::Batch;
use crate::dyngraph::event::Event;
use crate::dyngraph::store::NodeStateStore;
use crate::error::{GrnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Source,
    Destination,
}

/// Per-event readout and state update, as seen by the batching code.
pub trait EventModel {
    /// Prediction for an event from the endpoints' pre-update states.
    fn output(&self, h_src: &[f64], h_dst: &[f64], event: &Event) -> Result<f64>;

    /// New state of the endpoint playing `role`.
    fn update(&self, h_own: &[f64], h_counterparty: &[f64], event: &Event, role: Role) -> Result<Vec<f64>>;
}

/// What processing one event produced. States are `None` when the update was
/// discarded by a parallel-batch collision.
#[derive(Debug, Clone, PartialEq)]
pub struct EventOutput {
    pub position: usize,
    pub output: f64,
    pub src_state: Option<Vec<f64>>,
    pub dst_state: Option<Vec<f64>>,
}

fn step<M: EventModel>(model: &M, hs: &[f64], hd: &[f64], e: &Event, apply: (bool, bool)) -> Result<(f64, Option<Vec<f64>>, Option<Vec<f64>>)> {
    let output = model.output(hs, hd, e)?;
    if !output.is_finite() {
        return Err(GrnnError::Numerical { event: e.index, what: "non-finite output".into() });
    }
    let src = if apply.0 { Some(model.update(hs, hd, e, Role::Source)?) } else { None };
    let dst = if apply.1 { Some(model.update(hd, hs, e, Role::Destination)?) } else { None };
    Ok((output, src, dst))
}

/// Processes `events` one at a time; each update is visible to later events.
pub fn apply_events_sequential<M: EventModel>(store: &mut NodeStateStore, events: &[Event], model: &M) -> Result<Vec<EventOutput>> {
    let mut outputs = Vec::with_capacity(events.len());
    for (p, e) in events.iter().enumerate() {
        let hs = store.state(e.src)?.to_vec();
        let hd = store.state(e.dst)?.to_vec();
        let (output, src, dst) = step(model, &hs, &hd, e, (true, true))?;
        store.set_state(e.src, src.as_deref().unwrap(), e.index)?;
        store.set_state(e.dst, dst.as_deref().unwrap(), e.index)?;
        outputs.push(EventOutput { position: p, output, src_state: src, dst_state: dst });
    }
    Ok(outputs)
}

/// Processes one batch in parallel: every output and update reads the
/// batch-start store, and each node keeps only the update from its last
/// event in the batch.
pub fn apply_batch_parallel<M: EventModel>(store: &mut NodeStateStore, events: &[Event], batch: &Batch, model: &M) -> Result<Vec<EventOutput>> {
    let applied = batch.applied_sides(events);
    let mut outputs = Vec::with_capacity(batch.events.len());
    for (&p, &apply) in batch.events.iter().zip(&applied) {
        let e = events.get(p).ok_or_else(|| GrnnError::Structural(format!("batch refers to missing event {p}")))?;
        let (output, src, dst) = step(model, store.state(e.src)?, store.state(e.dst)?, e, apply)?;
        outputs.push(EventOutput { position: p, output, src_state: src, dst_state: dst });
    }
    for o in &outputs {
        let e = &events[o.position];
        if let Some(s) = &o.src_state {
            store.set_state(e.src, s, e.index)?;
        }
        if let Some(s) = &o.dst_state {
            store.set_state(e.dst, s, e.index)?;
        }
    }
    Ok(outputs)
}
