use std::path::Path;
use std::process::{Command, Output};

fn tripose(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tripose"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn analyze_benchmark_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = tripose(&["analyze", "--problem", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("analysis.json"));
    let theta0 = report["theta0"].as_f64().unwrap();
    let phi01 = report["phi01"].as_f64().unwrap();
    assert!((theta0 - phi01).abs() < 1e-9);
    assert_eq!(report["geodesic_minima"].as_array().unwrap().len(), 3);
    assert_eq!(report["chordal_minima"].as_array().unwrap().len(), 1);
    assert_eq!(report["convexity_case"], "a");
    let problem = read_json(&dir.path().join("problem.json"));
    assert_eq!(problem["ground_truth"]["p2"][1], 1.0);
}

#[test]
fn analyze_half_turn_mismatch_has_two_chordal_minima() {
    let dir = tempfile::tempdir().unwrap();
    let pi = std::f64::consts::PI.to_string();
    let out = tripose(&["analyze", "--problem", "1", "--epsilon", &pi], dir.path());
    assert!(out.status.success());
    let report = read_json(&dir.path().join("analysis.json"));
    assert_eq!(report["chordal_minima"].as_array().unwrap().len(), 2);
}

#[test]
fn problem_file_round_trip_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.json");
    std::fs::write(
        &file,
        r#"{ "ground_truth": {"p1": [2.0, 0.0], "p2": [0.0, 3.0], "phi1": 0.3, "phi2": -0.4},
             "epsilon": 0.2, "sigma": 0.5 }"#,
    )
    .unwrap();
    let out = tripose(
        &["analyze", "--problem-file", file.to_str().unwrap(), "--p1", "-1.5,0.5"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let saved = read_json(&dir.path().join("problem.json"));
    assert_eq!(saved["ground_truth"]["p1"][0], -1.5);
    assert_eq!(saved["sigma"], 0.5);
    assert_eq!(saved["epsilon"], 0.2);
}

#[test]
fn malformed_problem_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, "{\n  \"ground_truth\": {\n    \"p1\": [1, 0,\n").unwrap();
    let out = tripose(&["analyze", "--problem-file", file.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn profile_and_surface_exports() {
    let dir = tempfile::tempdir().unwrap();
    assert!(tripose(&["profile1d", "--problem", "2"], dir.path()).status.success());
    let rows = data_rows(&dir.path().join("profile_1d.csv"));
    assert_eq!(rows[0], "phi1,f_1_km1,f_1_k0,f_1_kp1");
    assert_eq!(rows.len(), 2002);

    assert!(tripose(&["surface", "--which", "G_phi", "--n", "31"], dir.path()).status.success());
    let rows = data_rows(&dir.path().join("surface_G_phi.csv"));
    assert_eq!(rows.len(), 31);
    assert!(rows.iter().all(|r| r.split(',').count() == 31));

    let out = tripose(&["surface", "--which", "h"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn critical_points_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = tripose(&["critical-points", "--problem", "1", "--method", "perfect"], dir.path());
    assert!(out.status.success());
    let report = read_json(&dir.path().join("critical_points.json"));
    let points = report["points"].as_array().unwrap();
    assert_eq!(points.len(), 11);
    assert_eq!(points.iter().filter(|p| p["kind"] == "MIN").count(), 1);

    let out = tripose(&["critical-points", "--problem", "2", "--method", "perfect"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_sweep_writes_grid_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = tripose(&["sweep", "--problem", "3", "--grid-n", "25"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.path().join("basins_geodesic.csv"));
    assert_eq!(rows.len(), 25);
    let codes: Vec<i64> = rows
        .iter()
        .flat_map(|r| r.split(',').map(|c| c.parse::<i64>().unwrap()).collect::<Vec<_>>())
        .collect();
    let summary = read_json(&dir.path().join("summary_geodesic.json"));
    let local = codes.iter().filter(|&&c| c >= 1).count() as f64;
    let pct = summary["pct_local"].as_f64().unwrap();
    assert!((pct - 100.0 * local / 625.0).abs() < 1e-9);
    assert_eq!(summary["grid_n"], 25);
    assert!(summary["problem"]["measurements"]["phi12"].is_number());
}

#[test]
fn verify_passes_on_benchmarks() {
    let dir = tempfile::tempdir().unwrap();
    let out = tripose(&["verify", "--problem", "1", "--problem", "2", "--problem", "3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let reports = read_json(&dir.path().join("verify.json"));
    assert_eq!(reports.as_array().unwrap().len(), 3);
    assert!(dir.path().join("problem_benchmark-3.json").exists());
}

#[test]
fn verify_rejects_coincident_poses() {
    let dir = tempfile::tempdir().unwrap();
    let out = tripose(&["verify", "--problem", "1", "--p2", "1,0"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn unknown_benchmark_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tripose(&["analyze", "--problem", "4"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
