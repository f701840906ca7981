//! Event streams, per-node state, and batching strategies.

pub mod apply;
pub mod batching;
pub mod event;
pub mod store;

pub use apply::{apply_batch_parallel, apply_events_sequential, EventModel, EventOutput, Role};
pub use batching::{make_batches, make_batches_fixed, make_batches_sequential, make_batches_tbatch, Batch, BatchingConfig, Strategy};
pub use event::{validate_stream, Event, NodeId};
pub use store::NodeStateStore;
