//! Command implementations behind the `grnn` binary.

pub mod bench;
pub mod config;
pub mod gradcheck;
pub mod synth;

pub use config::{ExperimentConfig, ModeSelection, Overrides};

/// Runs `f` on a pool of `threads` workers (0 = pool default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> crate::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::GrnnError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
