//! Graph recurrent networks on continuous-time dynamic graphs, trained with
//! full or truncated backpropagation through time.

pub mod cli;
pub mod dyngraph;
pub mod engine;
pub mod error;
pub mod evalbench;
pub mod io;
pub mod numcore;
pub mod synthtask;

pub use error::{GrnnError, Result};
