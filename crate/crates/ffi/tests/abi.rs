use std::ffi::CStr;
use std::ptr;

use grnn_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(grnn_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn trainer_lifecycle() {
    let mut params = grnn_synth_params_default();
    params.hidden = 4;
    params.nodes = 6;
    params.edges = 20;
    params.seed = 3;
    let mut handle: *mut GrnnSynthTrainer = ptr::null_mut();
    assert_eq!(unsafe { grnn_synth_trainer_new(&params, &mut handle) }, GrnnStatus::Ok);
    assert!(!handle.is_null());
    let (mut mse, mut base) = (f64::NAN, f64::NAN);
    for _ in 0..3 {
        assert_eq!(unsafe { grnn_synth_trainer_epoch(handle, &mut mse, &mut base) }, GrnnStatus::Ok);
        assert!(mse.is_finite() && base >= 0.0);
    }
    assert_eq!(unsafe { grnn_synth_trainer_epoch(handle, ptr::null_mut(), ptr::null_mut()) }, GrnnStatus::Ok);
    assert_eq!(unsafe { grnn_synth_trainer_epochs(handle) }, 4);
    assert_eq!(unsafe { grnn_synth_trainer_memory(handle) }, 1);
    unsafe { grnn_synth_trainer_free(handle) };
    unsafe { grnn_synth_trainer_free(ptr::null_mut()) };
}

#[test]
fn same_seed_same_losses() {
    let run = || {
        let mut params = grnn_synth_params_default();
        params.hidden = 3;
        params.nodes = 5;
        params.edges = 15;
        params.mode = GrnnBpttMode::Truncated;
        let mut h = ptr::null_mut();
        assert_eq!(unsafe { grnn_synth_trainer_new(&params, &mut h) }, GrnnStatus::Ok);
        let mut out = Vec::new();
        for _ in 0..3 {
            let mut mse = 0.0;
            assert_eq!(unsafe { grnn_synth_trainer_epoch(h, &mut mse, ptr::null_mut()) }, GrnnStatus::Ok);
            out.push(mse.to_bits());
        }
        unsafe { grnn_synth_trainer_free(h) };
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn invalid_params_report_config_error() {
    let mut params = grnn_synth_params_default();
    params.memory = 0;
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { grnn_synth_trainer_new(&params, &mut h) }, GrnnStatus::ConfigError);
    assert!(h.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { grnn_synth_trainer_new(ptr::null(), &mut h) }, GrnnStatus::NullPointer);
    assert_eq!(unsafe { grnn_synth_trainer_epoch(ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) }, GrnnStatus::NullPointer);
}

#[test]
fn oracle_matches_hand_trace() {
    // nodes A=0, B=1, M=1: targets 0, 0, 1
    let src = [0usize, 0, 0];
    let dst = [1usize, 1, 1];
    let x = [1.0, 2.0, 0.0];
    let mut out = [f64::NAN; 3];
    assert_eq!(unsafe { grnn_oracle_targets(2, 1, src.as_ptr(), dst.as_ptr(), x.as_ptr(), 3, out.as_mut_ptr()) }, GrnnStatus::Ok);
    assert_eq!(out, [0.0, 0.0, 1.0]);
    let bad = [5usize, 0, 0];
    assert_eq!(unsafe { grnn_oracle_targets(2, 1, bad.as_ptr(), dst.as_ptr(), x.as_ptr(), 3, out.as_mut_ptr()) }, GrnnStatus::DataError);
    let self_loop = [1usize, 0, 0];
    let status = unsafe { grnn_oracle_targets(2, 1, self_loop.as_ptr(), dst.as_ptr(), x.as_ptr(), 3, out.as_mut_ptr()) };
    assert_ne!(status, GrnnStatus::Ok);
    assert!(!last_error().is_empty());
}

#[test]
fn metrics_and_random_baseline() {
    let ranks = [1usize, 2, 4];
    let (mut mrr, mut recall) = (0.0, 0.0);
    assert_eq!(unsafe { grnn_rank_metrics(ranks.as_ptr(), 3, 10, &mut mrr, &mut recall) }, GrnnStatus::Ok);
    assert!((mrr - 1.75 / 3.0).abs() < 1e-15);
    assert_eq!(recall, 1.0);
    assert_eq!(unsafe { grnn_rank_metrics(ptr::null(), 0, 10, &mut mrr, &mut recall) }, GrnnStatus::NumericalError);
    assert!(last_error().contains("empty"));
    assert!((grnn_random_ranker_mrr(1000) - 0.007485470860550345).abs() < 1e-15);
    assert!(grnn_random_ranker_mrr(0).is_nan());
}

#[test]
fn version_is_cargo_version() {
    let v = unsafe { CStr::from_ptr(grnn_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
