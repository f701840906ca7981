//! Dense numerical building blocks.

pub mod adamw;
pub mod dropout;
pub mod gradcheck;
pub mod gru;
pub mod matrix;
pub mod mlp;
pub mod rng;

pub use adamw::{AdamwConfig, AdamwState};
pub use dropout::{dropout_apply, DropoutKind, DropoutMask};
pub use gradcheck::{extrapolated_check, extrapolated_derivative, finite_diff_check, finite_diff_check_subset, relative_error};
pub use gru::{GruCache, GruParameters};
pub use matrix::Matrix;
pub use mlp::{MlpCache, MlpParameters};
pub use rng::{Distribution, Rng, Stream};
