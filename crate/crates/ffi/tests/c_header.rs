//! Compiles and runs a small C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "grnn.h"

int main(void) {
    GrnnSynthParams p = grnn_synth_params_default();
    p.hidden = 4; p.nodes = 6; p.edges = 10;
    GrnnSynthTrainer *t = NULL;
    if (grnn_synth_trainer_new(&p, &t) != GRNN_STATUS_OK) return 10;
    double mse = -1.0, base = -1.0;
    if (grnn_synth_trainer_epoch(t, &mse, &base) != GRNN_STATUS_OK) return 11;
    grnn_synth_trainer_free(t);
    if (!(mse >= 0.0) || !(base >= 0.0)) return 12;

    p.memory = 0;
    if (grnn_synth_trainer_new(&p, &t) != GRNN_STATUS_CONFIG_ERROR) return 13;
    if (strlen(grnn_last_error_message()) == 0) return 14;

    size_t ranks[3] = {1, 2, 4};
    double mrr = 0.0, recall = 0.0;
    if (grnn_rank_metrics(ranks, 3, 10, &mrr, &recall) != GRNN_STATUS_OK) return 15;
    printf("%.6f %.1f\n", mrr, recall);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    assert!(include.join("grnn.h").exists(), "header not generated");
    // tests/<exe> lives in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libgrnn_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = tmp.join("ffi_smoke.c");
    let bin = tmp.join("ffi_smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = match Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("skipping: no C compiler ({e})");
            return;
        }
    };
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.583333 1.0");
}
