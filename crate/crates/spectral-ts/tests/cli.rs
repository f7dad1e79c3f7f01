//! CLI-level tests of the benchmark harness: flag validation, config
//! files, exit codes, and output files.

use std::path::Path;
use std::process::Command;

fn bench(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gp-ts-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn smoke_run_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = bench(&[
        "--func", "schwefel", "--dim", "2", "--method", "spectral-ts", "--runs", "2", "--iters",
        "5", "--seed", "7", "--out", out,
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    assert!(dir.path().join("trace_schwefel2d_spectral-ts_seed7.csv").exists());
    assert!(dir.path().join("trace_schwefel2d_spectral-ts_seed8.csv").exists());
    assert!(dir.path().join("summary_schwefel2d_spectral-ts.csv").exists());
}

#[test]
fn unknown_method_exits_2_listing_valid_methods() {
    let res = bench(&["--func", "schwefel", "--method", "bogus"]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(
        stderr.contains("spectral-ts") && stderr.contains("ts-rf") && stderr.contains("lcb"),
        "stderr should list valid methods: {stderr}"
    );
}

#[test]
fn unknown_function_exits_2() {
    let res = bench(&["--func", "rastrigin"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("schwefel"));
}

#[test]
fn missing_function_exits_2() {
    let res = bench(&["--method", "ei"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn ours_inner_requires_spectral_ts() {
    let res = bench(&["--func", "schwefel", "--method", "ei", "--inner", "ours"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unknown_flag_exits_2() {
    let res = bench(&["--func", "schwefel", "--frobnicate"]);
    assert_eq!(res.status.code(), Some(2));
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("bench.conf");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let cfg = write_config(
        dir.path(),
        &format!(
            "# benchmark settings\nfunc = schwefel\ndim = 2\nmethod = ei\nruns = 1\niters = 2\nseed = 3\nout = {}\n",
            out_a.display()
        ),
    );
    let res = bench(&["--config", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    assert!(out_a.join("trace_schwefel2d_ei_seed3.csv").exists());

    // Flags take precedence over the file.
    let res = bench(&[
        "--config",
        cfg.to_str().unwrap(),
        "--method",
        "lcb",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert!(out_b.join("trace_schwefel2d_lcb_seed3.csv").exists());
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "func = schwefel\nverbosity = 3\n");
    let res = bench(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("verbosity"));
}

#[test]
fn malformed_config_line_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "func schwefel\n");
    let res = bench(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn trace_csv_parses_losslessly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = bench(&[
        "--func", "levy", "--dim", "2", "--method", "lcb", "--runs", "1", "--iters", "3",
        "--seed", "11", "--out", out,
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let path = dir.path().join("trace_levy2d_lcb_seed11.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let rows = spectral_ts::bench::read_trace_csv(&path).unwrap();
    assert_eq!(rows.len(), 4);
    // Re-serializing every float must reproduce the file's tokens.
    for (line, row) in text.lines().skip(1).zip(&rows) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[4], spectral_ts::bench::format_float(row.y));
        assert_eq!(fields[5], spectral_ts::bench::format_float(row.y_min));
        assert_eq!(fields[9], spectral_ts::bench::format_float(row.log10_regret));
    }
}
