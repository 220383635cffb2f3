//! The build script must leave a complete C header in include/dsm.h.

use std::path::PathBuf;
use std::process::Command;

fn header_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("dsm.h")
}

#[test]
fn header_declares_the_full_surface() {
    let text = std::fs::read_to_string(header_path()).expect("include/dsm.h missing");
    for symbol in [
        "DsmStatus",
        "DsmOperator",
        "DsmSchedule",
        "DsmSolveReport",
        "dsm_version",
        "dsm_last_error",
        "dsm_operator_from_catalog",
        "dsm_operator_affine",
        "dsm_operator_dimension",
        "dsm_operator_apply",
        "dsm_operator_free",
        "dsm_minimal_norm",
        "dsm_schedule_constant",
        "dsm_schedule_power_law",
        "dsm_schedule_eps",
        "dsm_schedule_free",
        "dsm_solve",
        "dsm_report_status",
        "dsm_report_dimension",
        "dsm_report_limit",
        "dsm_report_final_residual",
        "dsm_report_steps",
        "dsm_report_free",
    ] {
        assert!(text.contains(symbol), "header lacks {symbol}");
    }
    assert!(text.contains("#ifndef DSM_H"), "missing include guard");
}

#[test]
fn header_compiles_as_c() {
    let header = header_path();
    let cc = ["cc", "gcc", "clang"]
        .iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok());
    let Some(cc) = cc else {
        eprintln!("no C compiler on PATH, skipping syntax check");
        return;
    };
    let out = Command::new(cc)
        .args(["-std=c99", "-fsyntax-only", "-x", "c"])
        .arg(&header)
        .output()
        .expect("failed to run C compiler");
    assert!(
        out.status.success(),
        "header failed C syntax check:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
