use std::path::Path;
use std::process::Command;

use pfseries_bench::RunReport;

fn pfseries(dir: &Path, config: &str, args: &[&str]) -> std::process::Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_pfseries"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

#[test]
fn series_of_constant_tent_data_is_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[problem]
map = "tent"
case = "constant"
constant = 1.0
alpha = 0.5

[series]
n_terms = 20
samples_per_dim = 257
"#;
    let out = pfseries(dir.path(), cfg, &["series"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("out/series_field.csv")).unwrap();
    let mut n = 0;
    for row in rdr.records() {
        let v: f64 = row.unwrap()[2].parse().unwrap();
        assert!((v - 2.0).abs() < 2f64.powi(-19), "value {v}");
        n += 1;
    }
    assert_eq!(n, 257);
    let json = std::fs::read_to_string(dir.path().join("out/series_report.json")).unwrap();
    let report = RunReport::from_json(&json).unwrap();
    assert_eq!(report.command, "series");
    assert!(report.l2_error.unwrap() < 1e-5);
}

#[test]
fn galerkin_sweep_writes_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[problem]
case = "smooth_exp"

[sweep]
method = "galerkin"
ns = [4, 8, 16]
"#;
    let out = pfseries(dir.path(), cfg, &["eoc-sweep"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("out/eoc-sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let json = std::fs::read_to_string(dir.path().join("out/eoc-sweep_report.json")).unwrap();
    let sweep = RunReport::from_json(&json).unwrap().sweep.unwrap();
    // Hat functions converge at second order on the smooth case.
    assert!(sweep.slope.unwrap() < -1.5, "slope {:?}", sweep.slope);
}

#[test]
fn bad_configs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [
        "[problem]\nalpha = 1.5\n",
        "[problem]\ncolour = \"red\"\n",
        "[problem]\nmap = \"circle_boundary\"\ncase = \"smooth_exp\"\n",
        "not toml at all [",
    ] {
        let out = pfseries(dir.path(), cfg, &["series"]);
        assert_eq!(out.status.code(), Some(2), "{cfg}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn missing_config_file_is_reported() {
    let out = Command::new(env!("CARGO_BIN_EXE_pfseries"))
        .args(["series", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.toml"));
}
