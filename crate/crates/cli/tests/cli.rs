use std::path::Path;
use std::process::{Command, Output};

fn run(mode: &str, config: &str, dir: &Path) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_pumpfield"))
        .args([mode, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn error_record(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

const SMALL_GRID: &str = "[grid]\nn_y = 12\nn_z = 10\n";

#[test]
fn coherent_map_schema_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("coherent-map", "", dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/coherent-map.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("b_y,b_z,f_x,f_y,f_z,g_x,missing"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10_000);
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first.len(), 7);
    // 17 significant digits
    assert_eq!(first[0], "2.0000000000000000e-3");
    assert!(rows.iter().all(|r| !r.ends_with(",1")));

    let meta = json(&dir.path().join("out/coherent-map.json"));
    assert_eq!(meta["mode"], "coherent-map");
    assert_eq!(meta["rows"], 10_000);
    assert_eq!(meta["missing_nodes"], 0);
    assert_eq!(meta["config"]["grid"]["n_y"], 100);
    assert_eq!(meta["config"]["bath"]["matsubara_terms"], 400);
}

#[test]
fn sidecar_config_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run("coherent-map", SMALL_GRID, dir.path()).status.success());
    let meta = json(&dir.path().join("out/coherent-map.json"));
    let resolved: toml::Value = serde_json::from_value(meta["config"].clone()).unwrap();
    let again = tempfile::tempdir().unwrap();
    assert!(run("coherent-map", &toml::to_string(&resolved).unwrap(), again.path()).status.success());
    let a = std::fs::read(dir.path().join("out/coherent-map.csv")).unwrap();
    let b = std::fs::read(again.path().join("out/coherent-map.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn dissipative_map_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = run("dissipative-map", SMALL_GRID, d.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("out/dissipative-map.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let meta = json(&a.path().join("out/dissipative-map.json"));
    assert_eq!(meta["rows"], 120);
    assert_eq!(meta["missing_nodes"], 0);
}

#[test]
fn fig2_default_dissipative_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("dissipative-map", "", dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/dissipative-map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10_001);
    assert_eq!(json(&dir.path().join("out/dissipative-map.json"))["missing_nodes"], 0);
}

#[test]
fn empty_path_list_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("charge", "[charge]\npaths = []\n", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let record = error_record(&out);
    assert_eq!(record["exit_code"], 2);
    assert_eq!(record["error"], "config");
    assert_eq!(json(&dir.path().join("out/error.json"))["exit_code"], 2);
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("coherent-map", "colour = 3\n", dir.path()).status.code(), Some(2));
    assert_eq!(run("coherent-map", "b_x = \n", dir.path()).status.code(), Some(2));
}

#[test]
fn range_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in ["[bath]\neta = 0.5\n", "[bath]\nkt = 3.0\n", "[bath]\nomega_d = 200.0\n", "b_x = -1.0\n"] {
        let out = run("coherent-map", cfg, dir.path());
        assert_eq!(out.status.code(), Some(3), "{cfg}");
        assert_eq!(error_record(&out)["exit_code"], 3);
    }
}

#[test]
fn widespread_node_failures_exit_4() {
    // at kT = 0.05 the default step violates the stability precondition
    let dir = tempfile::tempdir().unwrap();
    let out = run("dissipative-map", "[grid]\nn_y = 4\nn_z = 4\n[bath]\neta = 0.004\nkt = 0.05\n", dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_record(&out)["error"], "node-failures");
    // the partial map is still written, with the failures flagged
    let csv = std::fs::read_to_string(dir.path().join("out/dissipative-map.csv")).unwrap();
    assert!(csv.lines().skip(1).any(|r| r.ends_with(",1") && r.contains("NaN")));
}

#[test]
fn charge_reports_split() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[charge]\nsamples_per_edge = 10\n[[charge.paths]]\nname = \"red\"\nvertices = [[0.002, 0.0], [0.1, 0.0], [0.1, 1.0], [0.002, 1.0]]\n";
    let out = run("charge", cfg, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = json(&dir.path().join("out/charge.json"));
    let path = &meta["paths"][0];
    assert_eq!(path["name"], "red");
    let (q, qf, qg) = (
        path["q_dissipative"].as_f64().unwrap(),
        path["q_friction"].as_f64().unwrap(),
        path["q_geometric"].as_f64().unwrap(),
    );
    assert!((qf + qg - q).abs() < 1e-8 * q.abs().max(1.0));
    assert!(path["q_coherent"].as_f64().unwrap() < 0.0);
}

#[test]
fn oracle_check_passes_on_small_bath() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[bath]\neta = 0.005\nkt = 0.5\n[oracle]\nn_modes = 2\nn_fock = 4\nh = 0.002\n";
    let out = run("oracle-check", cfg, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("out/oracle-check.json"));
    assert_eq!(report["pass"], true);
    assert_eq!(report["dimension"], 32);
}

#[test]
fn failed_oracle_check_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[bath]\neta = 0.005\nkt = 0.5\n[oracle]\nn_modes = 2\nn_fock = 4\nh = 0.002\ntolerance = 1e-9\n";
    let out = run("oracle-check", cfg, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["error"], "validation");
    assert_eq!(json(&dir.path().join("out/oracle-check.json"))["pass"], false);
}

#[test]
fn scan_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[scan]\nomega_d = [10.0]\nb_y_max = [0.1]\ninitial_conditions = [\"zeroth\"]\nsamples_per_edge = 8\n";
    let out = run("scan", cfg, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("out/scan.md")).unwrap();
    assert!(report.contains("| 10 | 0.1 | Zeroth |"));
    assert_eq!(json(&dir.path().join("out/scan.json"))["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let config = pumpfield_cli::RunConfig::load(&path).unwrap();
        assert!(config.output.starts_with("out"), "{}", path.display());
    }
}
