//! Event-level gradient tape, full and truncated BPTT, and the training loop.

pub mod backward;
pub mod checkpoint;
pub mod forward;
pub mod loss;
pub mod model;
pub mod tape;
pub mod train;

pub use backward::{backward_full, backward_truncated, backward_truncated_batch, GradientAccumulator};
pub use checkpoint::{Checkpoint, TelemetryRecord};
pub use forward::{forward_epoch, EpochRngs, ForwardOptions, ForwardResult, Regularization};
pub use loss::{loss_bce, loss_mse};
pub use model::{GrnnModel, ModelConfig, Task};
pub use tape::{EventRecord, EventTape, Side};
pub use train::{train_epoch, BpttMode, EpochMetrics, StepSchedule, TrainConfig, Trainer};
