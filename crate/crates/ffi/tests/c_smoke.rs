//! Compiles a small C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "inar.h"

int main(void) {
    InarSpec *spec = NULL;
    if (inar_spec_parse("poisson:1", &spec) != INAR_STATUS_OK) return 1;
    double p = 0.0;
    if (inar_transition_prob(spec, 0.9, 2, 1, &p) != INAR_STATUS_OK) return 2;
    if (fabs(p - 0.0698970938226) > 1e-12) return 3;
    if (inar_transition_prob(spec, -1.0, 2, 1, &p) != INAR_STATUS_DOMAIN) return 4;
    if (inar_last_error_message() == NULL) return 5;
    InarPath *path = NULL;
    if (inar_simulate(spec, 1.0, 20, 3, &path) != INAR_STATUS_OK) return 6;
    uint64_t values[21];
    size_t len = 0;
    if (inar_path_values(path, values, 21, &len) != INAR_STATUS_OK || len != 21) return 7;
    inar_path_free(path);
    inar_spec_free(spec);
    printf("ok\n");
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libinar_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = work.join("inar_smoke.c");
    let exe = work.join("inar_smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
