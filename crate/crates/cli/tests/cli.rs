//! CLI surface tests: exit codes, output formats, the full-grid analysis
//! values, and the run/report subcommands driven through the binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn featforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_featforge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn mrr_output(table: &Path, higher: bool, tie: &str) -> std::collections::BTreeMap<String, f64> {
    let mut args = vec![
        "analyze-mrr".to_string(),
        "--table".into(),
        table.display().to_string(),
        "--tie-rule".into(),
        tie.into(),
    ];
    if higher {
        args.push("--higher-is-better".into());
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = featforge(&refs);
    assert!(out.status.success());
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .filter_map(|l| {
            let (m, v) = l.split_once(',')?;
            Some((m.to_string(), v.parse().ok()?))
        })
        .collect()
}

#[test]
fn usage_errors_exit_one() {
    let out = featforge(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = featforge(&[
        "run", "--data", "x.csv", "--target", "y", "--task", "sorting", "--out", "/tmp/x",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = featforge(&[
        "run",
        "--data",
        "x.csv",
        "--target",
        "y",
        "--task",
        "regression",
        "--backend",
        "remote",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--endpoint"));
    let out = featforge(&["analyze-mrr", "--table", "t.csv", "--tie-rule", "sloppy"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_two() {
    let out = featforge(&["analyze-pearson", "--points", "/nonexistent/points.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = featforge(&[
        "run",
        "--data",
        "/nonexistent/data.csv",
        "--target",
        "y",
        "--task",
        "regression",
        "--out",
        "/tmp/never",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let out = featforge(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

// Computed facts for the printed score grids, pinned so any change to the
// ranking logic is visible. The full grid includes the raw baseline column.
#[test]
fn full_grid_min_rank_values() {
    let by_method = mrr_output(&fixture("table1_full.csv"), true, "min-rank");
    assert!(
        (by_method["RogueOne"] - 0.7607).abs() < 5e-4,
        "{by_method:?}"
    );
    assert!((by_method["LLM-FE"] - 0.5763).abs() < 5e-4);
    assert!((by_method["Base"] - 0.2462).abs() < 5e-4);
    let by_method = mrr_output(&fixture("table2_full.csv"), false, "min-rank");
    assert!((by_method["RogueOne"] - 0.9111).abs() < 5e-4);
}

#[test]
fn full_grid_average_rank_values() {
    let by_method = mrr_output(&fixture("table1_full.csv"), true, "average-rank");
    assert!(
        (by_method["RogueOne"] - 0.7353).abs() < 5e-4,
        "{by_method:?}"
    );
    assert!((by_method["LLM-FE"] - 0.5117).abs() < 5e-4);
}

#[test]
fn pearson_cli_log_transform() {
    let out = featforge(&[
        "analyze-pearson",
        "--points",
        fixture("runtime_points.csv").to_str().unwrap(),
        "--log-x",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rho: f64 = text.trim().strip_prefix("rho = ").unwrap().parse().unwrap();
    // Log-transforming the entry counts weakens the runtime correlation.
    assert!((rho - 0.6058).abs() < 5e-4, "{rho}");
}

#[test]
fn run_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let mut csv = String::from("a,b,y\n");
    let mut state = 0x12345u64;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
    };
    for _ in 0..80 {
        let a = next();
        let b = next();
        let y = a * b + 0.01 * next();
        csv.push_str(&format!("{a:.5},{b:.5},{y:.5}\n"));
    }
    std::fs::write(&data, csv).unwrap();
    let out_dir = dir.path().join("run");
    let out = featforge(&[
        "run",
        "--data",
        data.to_str().unwrap(),
        "--target",
        "y",
        "--task",
        "regression",
        "--iters",
        "3",
        "--folds",
        "4",
        "--seed",
        "9",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("best iteration"), "{stdout}");
    assert!(out_dir.join("report.md").exists());

    let report = featforge(&["report", "--run-dir", out_dir.to_str().unwrap()]);
    assert!(report.status.success());
    let text = String::from_utf8(report.stdout).unwrap();
    assert!(text.contains("# Run report: data"));
    assert!(text.contains("Best iteration"));
    assert!(text.contains("## Final feature assessment"));
}
