use std::path::Path;
use std::process::{Command, Output};

use hotspot_pricing_cli::csv::HEADER;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hotspot-pricing"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn config_path(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn price_hom_reports_interior_optimum() {
    let out = run(&["price-hom", "--market", "heavy-usage"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["regime"], "interior-root");
    assert!((v["price"].as_f64().unwrap() - 1.16159).abs() < 1e-4);
    assert!((v["expected_cost"].as_f64().unwrap() - 1.923168).abs() < 1e-5);
}

#[test]
fn price_het_and_mul_and_benchmark() {
    let het = run(&["price-het", "--market", "two-type"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&het)).unwrap();
    assert!((v["expected_cost"].as_f64().unwrap() - 1.58).abs() < 0.02);

    let mul = run(&["price-mul", "--traveler-density", "2e-3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&mul)).unwrap();
    assert_eq!(v["regime"], "high-traveler-density");

    let bench = run(&["benchmark"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&bench)).unwrap();
    assert!((v["expected_cost"].as_f64().unwrap() - 0.669).abs() < 2e-3);
}

#[test]
fn simulate_agrees_with_analytic() {
    let out = run(&["simulate", "--model", "hom", "--price", "0.5", "--trials", "200000", "--seed", "5"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["z"].as_f64().unwrap().abs() <= 3.0);
    assert_eq!(v["estimate"]["n_trials"], 200000);

    let missing = run(&["simulate", "--model", "het"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn sweep_writes_byte_stable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = run(&["sweep", "--preset", "fig6", "--trials", "5000", "--out", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    assert_eq!(lines.count(), 24);
}

#[test]
fn denser_hours_get_no_higher_price() {
    let out = run(&["sweep", "--preset", "fig6", "--trials", "1000"]);
    let mut rows: Vec<(f64, f64)> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    rows.sort_by(|x, y| x.0.total_cmp(&y.0));
    assert!(rows.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9));
}

#[test]
fn fig7_curves_converge() {
    let out = run(&["sweep", "--preset", "fig7", "--trials", "20000"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for q in ["Q=1.8", "Q=2"] {
        let last = text.lines().rfind(|l| l.starts_with(&format!("{q},"))).unwrap();
        let cost: f64 = last.split(',').nth(4).unwrap().parse().unwrap();
        assert!((cost - 1.58).abs() < 0.02, "{last}");
    }
}

#[test]
fn custom_sweep_from_config() {
    let out = run(&["--config", &config_path("reservation_sweep.json"), "sweep", "--trials", "2000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 10);
}

#[test]
fn bad_config_exits_2_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"market\": {\"roaming_fee\": 3}\n}\n").unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "price-hom"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("roaming_fee") && err.contains("line 2"), "{err}");

    let grid = dir.path().join("grid.json");
    std::fs::write(
        &grid,
        r#"{"sweep": {"experiment": "custom", "swept_param": {"name": "demand_gb", "grid": [0.3, 0.2]}}}"#,
    )
    .unwrap();
    let out = run(&["--config", grid.to_str().unwrap(), "sweep"]);
    assert_eq!(out.status.code(), Some(2));

    assert_eq!(run(&["--config", "/nonexistent/x.json", "benchmark"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--preset", "fig9"]).status.code(), Some(2));
}

#[test]
fn infeasible_market_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let mut params = hotspot_pricing::presets::baseline();
    params.reservation = 5.0;
    let text = format!("{{\"market\": {}}}", serde_json::to_string(&params).unwrap());
    std::fs::write(&path, text).unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "price-hom"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_passes_and_negative_control_fails() {
    let out = run(&["validate", "--trials", "100000"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    let out = run(&["validate", "--trials", "100000", "--corrupt", "mul"]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout(&out);
    assert!(report.lines().any(|l| l.starts_with("mul") && l.ends_with("FAIL")), "{report}");
    assert!(report.lines().filter(|l| l.ends_with("FAIL")).all(|l| l.starts_with("mul")));
}

#[test]
fn validate_from_config() {
    let out = run(&["--config", &config_path("heavy_validation.json"), "validate", "--trials", "50000"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}
