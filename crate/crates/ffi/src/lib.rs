//! C ABI for the grnn library.
//!
//! Every fallible function returns a [`GrnnStatus`]; on failure the message is
//! available from [`grnn_last_error_message`] until the next call on the same
//! thread. Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use grnn::cli::synth::RunSpec;
use grnn::dyngraph::{BatchingConfig, NodeStateStore};
use grnn::engine::{train_epoch, BpttMode, ModelConfig, Task, TrainConfig, Trainer};
use grnn::evalbench::{compute_metrics, random_ranker_mrr};
use grnn::numcore::{AdamwConfig, Rng, Stream};
use grnn::synthtask::{baseline_mse, generate_epoch, oracle_targets, SyntheticConfig};
use grnn::GrnnError;

/// Result codes; the first four match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrnnStatus {
    Ok = 0,
    ConfigError = 1,
    DataError = 2,
    NumericalError = 3,
    NullPointer = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrnnBpttMode {
    Full = 0,
    Truncated = 1,
}

/// Settings of a synthetic-task trainer.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GrnnSynthParams {
    pub memory: usize,
    pub hidden: usize,
    pub nodes: usize,
    pub edges: usize,
    pub mode: GrnnBpttMode,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

/// Opaque synthetic-task trainer.
pub struct GrnnSynthTrainer {
    spec: RunSpec,
    task: SyntheticConfig,
    trainer: Trainer,
    store: NodeStateStore,
    data: Rng,
    config: TrainConfig,
    epochs: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &GrnnError) -> GrnnStatus {
    match err.exit_code() {
        1 => GrnnStatus::ConfigError,
        2 => GrnnStatus::DataError,
        _ => GrnnStatus::NumericalError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), GrnnStatus>) -> GrnnStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GrnnStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            GrnnStatus::Panic
        }
    }
}

fn check<T>(r: grnn::Result<T>) -> Result<T, GrnnStatus> {
    r.map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> GrnnStatus {
    set_error(&format!("{what} is null"));
    GrnnStatus::NullPointer
}

/// Message of the last failed call on this thread (empty after a success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn grnn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn grnn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parameters with the library defaults (M = 1, 32 units, 100 nodes,
/// 1000 edges, full BPTT, learning rate 1e-3, weight decay 1e-4, seed 0).
#[no_mangle]
pub extern "C" fn grnn_synth_params_default() -> GrnnSynthParams {
    let o = AdamwConfig::default();
    GrnnSynthParams {
        memory: 1,
        hidden: 32,
        nodes: 100,
        edges: 1000,
        mode: GrnnBpttMode::Full,
        learning_rate: o.learning_rate,
        weight_decay: o.weight_decay,
        seed: 0,
    }
}

/// Creates a trainer; `*out` receives the handle on success.
///
/// # Safety
/// `params` must point to a valid `GrnnSynthParams` and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn grnn_synth_trainer_new(params: *const GrnnSynthParams, out: *mut *mut GrnnSynthTrainer) -> GrnnStatus {
    guard(|| {
        let p = unsafe { params.as_ref() }.ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let task = SyntheticConfig { memory: p.memory, nodes: p.nodes, edges: p.edges };
        check(task.validate())?;
        if p.hidden == 0 {
            set_error("hidden must be positive");
            return Err(GrnnStatus::ConfigError);
        }
        let mode = match p.mode {
            GrnnBpttMode::Full => BpttMode::Full,
            GrnnBpttMode::Truncated => BpttMode::Truncated,
        };
        let optimizer = AdamwConfig { learning_rate: p.learning_rate, weight_decay: p.weight_decay, ..AdamwConfig::default() };
        let model = ModelConfig { hidden: p.hidden, feature_dim: 1, task: Task::Regression, asymmetric: false };
        let trainer = check(Trainer::new(model, optimizer, p.seed))?;
        let handle = GrnnSynthTrainer {
            spec: RunSpec { memory: p.memory, mode, hidden: p.hidden, seed: p.seed },
            task,
            trainer,
            store: NodeStateStore::new(p.nodes, p.hidden),
            data: Rng::derive(p.seed, Stream::Data, 0),
            config: TrainConfig::new(mode, BatchingConfig::sequential(1)),
            epochs: 0,
        };
        unsafe { *out = Box::into_raw(Box::new(handle)) };
        Ok(())
    })
}

/// Generates one epoch, trains on it and reports its mean loss and the
/// zero-predictor MSE. Either output pointer may be null.
///
/// # Safety
/// `trainer` must come from `grnn_synth_trainer_new`; outputs must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn grnn_synth_trainer_epoch(trainer: *mut GrnnSynthTrainer, mse: *mut f64, baseline: *mut f64) -> GrnnStatus {
    guard(|| {
        let t = unsafe { trainer.as_mut() }.ok_or_else(|| null("trainer"))?;
        let events = check(generate_epoch(&t.task, &mut t.data))?;
        let m = check(train_epoch(&events, &mut t.trainer, &mut t.store, &t.config, None))?;
        let b = check(baseline_mse(&events))?;
        t.epochs += 1;
        unsafe {
            if !mse.is_null() {
                *mse = m.mean_loss;
            }
            if !baseline.is_null() {
                *baseline = b;
            }
        }
        Ok(())
    })
}

/// Number of epochs trained so far, or 0 for a null handle.
///
/// # Safety
/// `trainer` must be null or come from `grnn_synth_trainer_new`.
#[no_mangle]
pub unsafe extern "C" fn grnn_synth_trainer_epochs(trainer: *const GrnnSynthTrainer) -> usize {
    unsafe { trainer.as_ref() }.map_or(0, |t| t.epochs)
}

/// Memory parameter the trainer was created with, or 0 for a null handle.
///
/// # Safety
/// `trainer` must be null or come from `grnn_synth_trainer_new`.
#[no_mangle]
pub unsafe extern "C" fn grnn_synth_trainer_memory(trainer: *const GrnnSynthTrainer) -> usize {
    unsafe { trainer.as_ref() }.map_or(0, |t| t.spec.memory)
}

/// Releases a trainer. Null is ignored.
///
/// # Safety
/// `trainer` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn grnn_synth_trainer_free(trainer: *mut GrnnSynthTrainer) {
    if !trainer.is_null() {
        drop(unsafe { Box::from_raw(trainer) });
    }
}

/// Targets of the graph adding task for an explicit edge list, from zero
/// buffers. `out` receives `len` values.
///
/// # Safety
/// `src`, `dst`, `x` must hold `len` readable elements and `out` `len` writable ones.
#[no_mangle]
pub unsafe extern "C" fn grnn_oracle_targets(
    nodes: usize,
    memory: usize,
    src: *const usize,
    dst: *const usize,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> GrnnStatus {
    guard(|| {
        if len == 0 {
            return Ok(());
        }
        if src.is_null() || dst.is_null() || x.is_null() || out.is_null() {
            return Err(null("an input or output array"));
        }
        let (s, d, v) = unsafe { (std::slice::from_raw_parts(src, len), std::slice::from_raw_parts(dst, len), std::slice::from_raw_parts(x, len)) };
        for (&a, &b) in s.iter().zip(d) {
            if a >= nodes || b >= nodes {
                set_error(&format!("node id outside 0..{nodes}"));
                return Err(GrnnStatus::DataError);
            }
        }
        let edges: Vec<_> = s.iter().zip(d).zip(v).map(|((&a, &b), &x)| (a, b, x)).collect();
        let targets = check(oracle_targets(nodes, memory, &edges))?;
        unsafe { ptr::copy_nonoverlapping(targets.as_ptr(), out, len) };
        Ok(())
    })
}

/// Mean reciprocal rank and recall@k of `len` ranks (each at least 1).
///
/// # Safety
/// `ranks` must hold `len` readable elements; `mrr` and `recall` must be writable.
#[no_mangle]
pub unsafe extern "C" fn grnn_rank_metrics(ranks: *const usize, len: usize, k: usize, mrr: *mut f64, recall: *mut f64) -> GrnnStatus {
    guard(|| {
        if mrr.is_null() || recall.is_null() {
            return Err(null("an output pointer"));
        }
        let r: &[usize] = if len == 0 {
            &[]
        } else if ranks.is_null() {
            return Err(null("ranks"));
        } else {
            unsafe { std::slice::from_raw_parts(ranks, len) }
        };
        let m = check(compute_metrics(r, k))?;
        unsafe {
            *mrr = m.mrr;
            *recall = m.recall_at_k;
        }
        Ok(())
    })
}

/// Expected MRR of a uniformly random ranking over `universe` candidates.
#[no_mangle]
pub extern "C" fn grnn_random_ranker_mrr(universe: usize) -> f64 {
    if universe == 0 {
        return f64::NAN;
    }
    random_ranker_mrr(universe)
}
