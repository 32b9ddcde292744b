use std::path::Path;
use std::process::{Command, Output};

use sbminfo::cli::{Command as Cmd, ExperimentConfig, Overrides};
use sbminfo::quadrature::QuadratureRule;
use sbminfo::scalar_channel::mmse_scalar;

fn sbminfo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbminfo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn mi_curve_default_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbminfo(
        dir.path(),
        &["mi-curve", "--lambda-min", "0", "--lambda-max", "4", "--steps", "81", "--eps", "0", "--out", "mi.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("mi.csv")).unwrap();
    let (h, rows) = csv_rows(&text);
    assert_eq!(rows.len(), 81);
    let (l, psi) = (column(&h, "lambda"), column(&h, "psi"));
    for w in rows.windows(2) {
        assert!(w[1][l] > w[0][l]);
    }
    for r in &rows {
        if r[l] <= 1.0 {
            assert!((r[psi] - r[l] / 4.0).abs() < 1e-9, "{r:?}");
        }
    }
    assert!(dir.path().join("mi.csv.manifest.json").exists());
}

#[test]
fn single_point_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbminfo(dir.path(), &["mi-curve", "--lambda", "1", "--out", "one.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = csv_rows(&std::fs::read_to_string(dir.path().join("one.csv")).unwrap());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&h, "gamma_star")], 0.0);
}

/// γ*(2) by bisection on `γ = 2(1 − mmse(γ))` over a bracket away from 0.
fn gamma_star_two() -> f64 {
    let rule = QuadratureRule::standard();
    let f = |g: f64| 2.0 * (1.0 - mmse_scalar(g, &rule).unwrap()) - g;
    let (mut a, mut b) = (0.5, 2.0);
    assert!(f(a) > 0.0 && f(b) < 0.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn mmse_curve_row_at_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbminfo(dir.path(), &["mmse-curve", "--lambda-min", "0", "--lambda-max", "4", "--steps", "5", "--out", "m.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = csv_rows(&std::fs::read_to_string(dir.path().join("m.csv")).unwrap());
    let row = rows.iter().find(|r| r[0] == 2.0).unwrap();
    let g = gamma_star_two();
    let expect = 1.0 - (g / 2.0).powi(2);
    assert!((row[column(&h, "mmse_limit")] - expect).abs() < 1e-9);
    for r in &rows {
        assert!(r[column(&h, "vmmse_lower")] <= r[column(&h, "vmmse_upper")] + 1e-12);
    }
}

#[test]
fn amp_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["amp", "--lambda", "4", "--eps", "0.05", "--n", "1500", "--iters", "10", "--seed", "7"];
    let a = sbminfo(dir.path(), &[&args[..], &["--out", "a.csv"]].concat());
    let b = sbminfo(dir.path(), &[&args[..], &["--out", "b.csv"]].concat());
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let ta = std::fs::read(dir.path().join("a.csv")).unwrap();
    let tb = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(ta, tb);
    assert_eq!(String::from_utf8(ta).unwrap().lines().count(), 11);
}

#[test]
fn amp_without_side_information_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbminfo(dir.path(), &["amp", "--eps", "0", "--n", "100"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(err["command"], "amp");
    assert!(err["message"].as_str().unwrap().contains("eps"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbminfo(dir.path(), &["se", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // p̄ = 0.05 cannot carry λ = 1 at n = 12 (q would be negative).
    let out = sbminfo(dir.path(), &["sbm-sample", "--n", "12", "--pbar", "0.05", "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(err["error"], "parameter");
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbminfo(dir.path(), &["se", "--lambda", "3", "--eps", "0.1", "--iters", "12", "--out", "se.csv"]);
    assert!(out.status.success());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("se.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert!(m["wall_time_secs"].as_f64().unwrap() >= 0.0);
    let cfg: ExperimentConfig = serde_json::from_value(m["config"].clone()).unwrap();
    assert_eq!(cfg.lambda_max, 3.0);
    assert_eq!(cfg.iters, 12);

    // Re-running from the recorded config gives the same bytes.
    let toml_text = toml::to_string(&cfg).unwrap();
    let again = dir.path().join("again.toml");
    std::fs::write(&again, toml_text.replace("se.csv", "se2.csv").replace("command = \"se\"\n", "")).unwrap();
    let out = sbminfo(dir.path(), &["se", "--config", "again.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(dir.path().join("se.csv")).unwrap(),
        std::fs::read(dir.path().join("se2.csv")).unwrap()
    );
    let (h, rows) = csv_rows(&std::fs::read_to_string(dir.path().join("se.csv")).unwrap());
    assert_eq!(h, ["t", "gamma", "mu", "sigma2", "overlap", "mse"]);
    assert_eq!(rows.len(), 13);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "lambda_max = 2.0\nsteps = 3\nlambda_min = 1.0\neps = 0.2\n").unwrap();
    let out = sbminfo(dir.path(), &["mi-curve", "--config", "c.toml", "--eps", "0.1", "--out", "c.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["eps"], 0.1);
    assert_eq!(m["config"]["steps"], 3);
    assert_eq!(m["config"]["lambda_min"], 1.0);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "lamda = 2.0\n").unwrap();
    let out = sbminfo(dir.path(), &["se", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_round_trips() {
    let cfg = ExperimentConfig::from_overrides(Cmd::MiCurve, Overrides::default()).unwrap();
    let json = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), cfg);
    let t = toml::to_string(&cfg).unwrap();
    assert_eq!(toml::from_str::<ExperimentConfig>(&t).unwrap(), cfg);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = |o: Overrides| ExperimentConfig::from_overrides(Cmd::MiCurve, o).is_err();
    assert!(bad(Overrides { lambda_min: Some(3.0), lambda_max: Some(1.0), ..Default::default() }));
    assert!(bad(Overrides { steps: Some(0), ..Default::default() }));
    assert!(bad(Overrides { tol: Some(0.0), ..Default::default() }));
    assert!(bad(Overrides { eps: Some(1.5), ..Default::default() }));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, out: &str| {
        Command::new(env!("CARGO_BIN_EXE_sbminfo"))
            .current_dir(dir.path())
            .env("SBMINFO_THREADS", threads)
            .args(["mmse-curve", "--n", "6", "--steps", "4", "--mc-samples", "20", "--eps", "0.1", "--out", out])
            .output()
            .unwrap()
    };
    assert!(run("1", "t1.csv").status.success());
    assert!(run("3", "t3.csv").status.success());
    assert_eq!(
        std::fs::read(dir.path().join("t1.csv")).unwrap(),
        std::fs::read(dir.path().join("t3.csv")).unwrap()
    );
    let (h, _) = csv_rows(&std::fs::read_to_string(dir.path().join("t1.csv")).unwrap());
    assert!(h.iter().any(|c| c == "exact_mmse"));
}

#[test]
fn theta_sweep_and_graph_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbminfo(
        dir.path(),
        &["mi-curve", "--sweep", "theta", "--n", "100", "--pbar", "0.3", "--lambda-min", "0", "--lambda-max", "2", "--steps", "5", "--out", "th.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = csv_rows(&std::fs::read_to_string(dir.path().join("th.csv")).unwrap());
    assert_eq!(rows.len(), 5);
    let (p, q) = (column(&h, "p"), column(&h, "q"));
    for r in &rows {
        assert!(((r[p] + r[q]) / 2.0 - 0.3).abs() < 1e-9);
    }

    let out = sbminfo(dir.path(), &["sbm-sample", "--n", "50", "--lambda", "3", "--seed", "4", "--out", "g.txt"]);
    assert!(out.status.success());
    let g = std::fs::read_to_string(dir.path().join("g.txt")).unwrap();
    assert!(g.starts_with("# sbm n=50 "));
    let labels = std::fs::read_to_string(dir.path().join("g.txt.labels")).unwrap();
    assert_eq!(labels.lines().count(), 50);
}

#[test]
fn oracle_suite_passes_at_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbminfo(dir.path(), &["oracle-suite", "--n", "10", "--lambda", "2", "--format", "json", "--out", "o.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o.json")).unwrap()).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 5);
    for r in reports {
        assert_eq!(r["pass"], true, "{r}");
    }
}
