//! End-to-end checks of the command-line surface: report shapes, exit
//! codes and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torus-energy"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn torus-energy")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_row_set(path: &Path) {
    let mut text = String::from("# dim=2\n");
    for i in 0..7 {
        text.push_str(&format!("{},0.0\n", i as f64 / 7.0));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn generate_grid_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pts.csv");
    let res = run(&["generate", "--kind", "grid", "--p", "5", "--d", "2", "-o", out.to_str().unwrap()]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 26);
    assert!(text.starts_with("# dim=2\n"));
}

#[test]
fn generate_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let res = run(&[
            "generate", "--kind", "uniform-random", "--n", "20", "--d", "2",
            "--seed", "9", "-o", out.to_str().unwrap(),
        ]);
        assert!(res.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn spectrum_reproduces_sharpness_energy() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("row.csv");
    write_row_set(&pts);
    let out = run(&["spectrum", "-i", pts.to_str().unwrap(), "--box", "6", "1"]);
    let report = stdout_json(&out);
    let energy: f64 = report["report"]["energy"].as_str().unwrap().parse().unwrap();
    assert!((energy - 147.0).abs() < 1e-9 * 147.0);
    // config echoed
    assert_eq!(report["config"]["weight"], "uniform");
    assert_eq!(report["command"], "spectrum");
}

#[test]
fn reports_are_byte_identical_for_same_config() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("row.csv");
    write_row_set(&pts);
    let a = run(&["spectrum", "-i", pts.to_str().unwrap(), "--ball", "4"]);
    let b = run(&["spectrum", "-i", pts.to_str().unwrap(), "--ball", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sandwich_energy_dominates_zero_mode() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    let res = run(&[
        "generate", "--kind", "uniform-random", "--n", "9", "--d", "2",
        "--seed", "4", "-o", pts.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let out = run(&["bounds", "sandwich", "-i", pts.to_str().unwrap(), "--x", "10"]);
    let report = stdout_json(&out);
    let energy: f64 = report["report"]["energy_exact"].as_str().unwrap().parse().unwrap();
    assert!(energy >= 81.0);
}

#[test]
fn pair_energy_accepts_kernel_strings() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    let res = run(&[
        "generate", "--kind", "grid", "--p", "4", "--d", "2", "-o", pts.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let out = run(&[
        "bounds", "pair-energy", "-i", pts.to_str().unwrap(),
        "--kernel", "riesz_quartic(x=4)",
    ]);
    let report = stdout_json(&out);
    let diag: f64 = report["report"]["diagonal"].as_str().unwrap().parse().unwrap();
    assert!((diag - 16.0 * 16.0).abs() < 1e-9);
}

#[test]
fn reduce_emits_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base.csv");
    let pts = dir.path().join("pts.csv");
    assert!(run(&["generate", "--kind", "grid", "--p", "4", "--d", "2", "-o", base.to_str().unwrap()]).status.success());
    assert!(run(&[
        "generate", "--kind", "clustered-pairs", "--radius", "1e-4",
        "--base", base.to_str().unwrap(), "--seed", "1", "-o", pts.to_str().unwrap(),
    ])
    .status
    .success());
    let out = run(&["reduce", "-i", pts.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() >= 2);
    for line in &lines {
        let _: serde_json::Value = serde_json::from_str(line).expect("each line is JSON");
    }
    let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(first["branch"], "clustered");
    assert_eq!(first["n_after"], 16);
}

#[test]
fn heat_report_contains_norm_chain() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    assert!(run(&[
        "generate", "--kind", "uniform-random", "--n", "8", "--d", "2",
        "--seed", "2", "-o", pts.to_str().unwrap(),
    ])
    .status
    .success());
    let out = run(&["heat", "-i", pts.to_str().unwrap(), "--t", "0.05", "--grid-m", "32"]);
    let report = stdout_json(&out);
    let l2: f64 = report["report"]["grid_l2"].as_str().unwrap().parse().unwrap();
    let l4: f64 = report["report"]["grid_l4"].as_str().unwrap().parse().unwrap();
    let linf: f64 = report["report"]["grid_linf"].as_str().unwrap().parse().unwrap();
    assert!(l2 <= l4 + 1e-12 && l4 <= linf + 1e-12);
    assert_eq!(report["report"]["prop2"]["holds"], true);
}

#[test]
fn heat_opt_writes_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    let trace = dir.path().join("trace.csv");
    assert!(run(&[
        "generate", "--kind", "uniform-random", "--n", "6", "--d", "2",
        "--seed", "8", "-o", pts.to_str().unwrap(),
    ])
    .status
    .success());
    let out = run(&[
        "heat-opt", "-i", pts.to_str().unwrap(), "--t", "0.1",
        "--steps", "5", "--step-size", "0.001", "--trace", trace.to_str().unwrap(),
    ]);
    let report = stdout_json(&out);
    let first: f64 = report["report"]["initial_objective"].as_str().unwrap().parse().unwrap();
    let last: f64 = report["report"]["final_objective"].as_str().unwrap().parse().unwrap();
    assert!(last <= first);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("step,value,grad_norm,step_size\n"));
}

#[test]
fn paircorr_and_discrepancy_run() {
    let dir = tempfile::tempdir().unwrap();
    let one_d = dir.path().join("one.csv");
    assert!(run(&[
        "generate", "--kind", "uniform-random", "--n", "64", "--d", "1",
        "--seed", "5", "-o", one_d.to_str().unwrap(),
    ])
    .status
    .success());
    let out = run(&[
        "paircorr", "-i", one_d.to_str().unwrap(), "--s-grid", "0.5,1.0,2.0", "--sigma", "0.05",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["report"]["f_values"].as_array().unwrap().len(), 3);
    assert!(report["report"]["gaussian_statistic"].is_string());

    let two_d = dir.path().join("two.csv");
    assert!(run(&[
        "generate", "--kind", "uniform-random", "--n", "32", "--d", "2",
        "--seed", "6", "-o", two_d.to_str().unwrap(),
    ])
    .status
    .success());
    let out = run(&[
        "discrepancy", "-i", two_d.to_str().unwrap(), "--grid-m", "16",
        "--random-centers", "64",
    ]);
    let report = stdout_json(&out);
    let dev: f64 = report["report"]["max_deviation"].as_str().unwrap().parse().unwrap();
    assert!(dev > 0.0);
}

#[test]
fn usage_errors_exit_2() {
    // unknown flag
    let out = run(&["spectrum", "--frequency", "4"]);
    assert_eq!(out.status.code(), Some(2));
    // missing input file
    let out = run(&["spectrum", "-i", "/nonexistent/pts.csv", "--ball", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    // malformed kernel spec
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    assert!(run(&["generate", "--kind", "grid", "--p", "3", "--d", "2", "-o", pts.to_str().unwrap()]).status.success());
    let out = run(&["bounds", "pair-energy", "-i", pts.to_str().unwrap(), "--kernel", "squircle(r=1)"]);
    assert_eq!(out.status.code(), Some(2));
    // dimension mismatch: 3 box widths on a 2-d set
    let out = run(&["spectrum", "-i", pts.to_str().unwrap(), "--box", "2", "2", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("dup.csv");
    std::fs::write(&pts, "# dim=2\n0.25,0.25\n0.25,0.25\n").unwrap();
    let out = run(&[
        "bounds", "pair-energy", "-i", pts.to_str().unwrap(),
        "--kernel", "riesz_classical(s=2)",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("singular"));
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    assert!(run(&[
        "generate", "--kind", "uniform-random", "--n", "50", "--d", "2",
        "--seed", "11", "-o", pts.to_str().unwrap(),
    ])
    .status
    .success());
    let one = run(&["--threads", "1", "spectrum", "-i", pts.to_str().unwrap(), "--ball", "8"]);
    let many = run(&["--threads", "4", "spectrum", "-i", pts.to_str().unwrap(), "--ball", "8"]);
    assert!(one.status.success() && many.status.success());
    assert_eq!(one.stdout, many.stdout);
}
