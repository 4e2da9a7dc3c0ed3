use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_mavol-lab");

const HEADER: &str = "scenario,k,N_k,mavol,mavol_rescaled,rhs_thm11,ratio_thm11,mz_gap,bms_defect_times_k,det_lemma_ratio,sat_residual,demailly_lhs,demailly_rhs,runtime_seconds";

fn small_config(scenario: &str, family: &str, extra: &str) -> String {
    format!(
        r#"{{"scenario": "{scenario}", "family": {family}, "k_ladder": [8, 16, 32],
            "grid": {{"base_radial": 6, "base_angular": 8, "integration_radial": 24}}{extra}}}"#
    )
}

const PRODUCT: &str = r#"{"model": {"a": 1, "b": 1, "perturbation": "none", "eps": 0.0}}"#;
const SEP: &str = r#"{"model": {"a": 1, "b": 1, "perturbation": "sep", "eps": 0.1}}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn mavol_lab(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("MAVOL_LAB_THREADS").output().unwrap()
}

fn rows(csv: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn catalog_lists_and_exports_bundled_scenarios() {
    let dir = TempDir::new().unwrap();
    let out = mavol_lab(&["catalog", "--export", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let listing = String::from_utf8(out.stdout).unwrap();
    for id in ["product", "sep-eps0.1", "sep-eps0.2", "cross-eps0.1", "sympow-1-1", "sympow-1-2"] {
        assert!(listing.lines().any(|l| l.starts_with(id)), "{id} missing");
        let text = std::fs::read_to_string(dir.path().join(format!("{id}.json"))).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["scenario"], id);
    }
}

#[test]
fn product_run_passes_with_unit_ratio() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "p.json", &small_config("product", PRODUCT, ""));
    let stem = dir.path().join("out/product");
    let out = mavol_lab(&["run", cfg.to_str().unwrap(), "--out", stem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&dir.path().join("out/product.csv"));
    assert_eq!(rows.len(), 3);
    for (row, k) in rows.iter().zip([8, 16, 32]) {
        assert_eq!(row[0], "product");
        assert_eq!(num(&row[1]), k as f64);
        assert_eq!(num(&row[2]), (k + 1) as f64);
        assert!((num(&row[6]) - 1.0).abs() <= 1e-6);
        assert!((num(&row[4]) - 1.0).abs() <= 1e-6);
        assert_eq!(row[13], "0");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/product.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
    assert_eq!(json["rows"][1]["N_k"], 17);
    assert!(json["gates"].as_array().unwrap().iter().all(|g| g["passed"] == true));
}

#[test]
fn unknown_key_is_rejected_without_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "config.json", &small_config("bad", PRODUCT, r#", "colour": "blue""#));
    let stem = dir.path().join("bad");
    let out = mavol_lab(&["run", cfg.to_str().unwrap(), "--out", stem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    assert!(!dir.path().join("bad.csv").exists());
    assert!(!dir.path().join("bad.json").exists());
}

#[test]
fn guard_violations_and_usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "k.json", &small_config("k", PRODUCT, "").replace("[8, 16, 32]", "[16, 8]"));
    assert_eq!(mavol_lab(&["run", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(mavol_lab(&["run", "does-not-exist.json"]).status.code(), Some(2));
    assert_eq!(mavol_lab(&["frobnicate"]).status.code(), Some(2));
    let ok = write(dir.path(), "ok.json", &small_config("ok", PRODUCT, ""));
    assert_eq!(mavol_lab(&["run", ok.to_str().unwrap(), "--threads", "0"]).status.code(), Some(2));
    let env = Command::new(BIN)
        .args(["run", ok.to_str().unwrap(), "--out", dir.path().join("e").to_str().unwrap()])
        .env("MAVOL_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(2));
    let bundle = write(dir.path(), "b.json", &small_config("b", r#"{"split-bundle": {"degrees": [1, 2, 3]}}"#, ""));
    assert_eq!(mavol_lab(&["run", bundle.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn gate_failure_exits_1_and_still_writes_the_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "g.json", &small_config("strict", SEP, r#", "gates": {"order": 4.0}"#));
    let stem = dir.path().join("strict");
    let out = mavol_lab(&["run", cfg.to_str().unwrap(), "--out", stem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("thm11-order") && stderr.contains("scenario=strict"), "{stderr}");
    assert_eq!(rows(&dir.path().join("strict.csv")).len(), 3);
}

#[test]
fn lost_positivity_is_a_numerical_abort() {
    let dir = TempDir::new().unwrap();
    let family = r#"{"model": {"a": 1, "b": 1, "perturbation": "sep", "eps": 10.0}}"#;
    let cfg = write(dir.path(), "n.json", &small_config("wild", family, ""));
    let stem = dir.path().join("wild");
    let out = mavol_lab(&["run", cfg.to_str().unwrap(), "--out", stem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not positive"));
    assert!(!dir.path().join("wild.csv").exists());
}

#[test]
fn sweep_is_eps_major_deterministic_and_consistent_with_product() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.json", &small_config("sep", SEP, ""));
    let product = write(dir.path(), "p.json", &small_config("product", PRODUCT, ""));
    let sweep = |name: &str, threads: &str| {
        let stem = dir.path().join(name);
        let out = mavol_lab(&[
            "sweep", cfg.to_str().unwrap(), "--eps", "0,0.2", "--k", "8,16,32", "--threads", threads, "--out",
            stem.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (std::fs::read(stem.with_extension("csv")).unwrap(), std::fs::read(stem.with_extension("json")).unwrap())
    };
    let first = sweep("a", "1");
    assert_eq!(first, sweep("b", "1"));
    assert_eq!(first, sweep("c", "3"));

    let swept = rows(&dir.path().join("a.csv"));
    assert_eq!(swept.len(), 6);
    let order: Vec<(String, String)> = swept.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    let expected: Vec<(String, String)> = ["sep@eps=0", "sep@eps=0.2"]
        .iter()
        .flat_map(|s| ["8", "16", "32"].map(|k| (s.to_string(), k.to_string())))
        .collect();
    assert_eq!(order, expected);

    let p = dir.path().join("p");
    assert_eq!(mavol_lab(&["run", product.to_str().unwrap(), "--out", p.to_str().unwrap()]).status.code(), Some(0));
    let product_rows = rows(&dir.path().join("p.csv"));
    for (s, p) in swept[..3].iter().zip(&product_rows) {
        for col in 1..14 {
            let (a, b) = (num(&s[col]), num(&p[col]));
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "column {col}: {a} vs {b}");
        }
    }
}

#[test]
fn sweep_needs_a_model_family() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "b.json", &small_config("b", r#"{"split-bundle": {"degrees": [1, 2]}}"#, ""));
    let out = mavol_lab(&["sweep", cfg.to_str().unwrap(), "--eps", "0.1", "--k", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sympow_run_matches_gm_over_am() {
    let dir = TempDir::new().unwrap();
    let family = r#"{"split-bundle": {"degrees": [1, 2]}}"#;
    let cfg = write(dir.path(), "y.json", &small_config("sympow", family, "").replace(r#""integration_radial": 24"#, r#""integration_radial": 24, "fd_step": 0.001"#));
    let stem = dir.path().join("y");
    let out = mavol_lab(&["run", cfg.to_str().unwrap(), "--out", stem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&dir.path().join("y.csv"));
    // S^8 of O(1) + O(2) has degrees 8..=16, arithmetic mean 12
    let log_gm = (8..=16).map(|d| (d as f64).ln()).sum::<f64>() / 9.0;
    let exact = log_gm.exp() / 12.0;
    assert!((num(&rows[0][4]) - exact).abs() < 1e-11);
}
