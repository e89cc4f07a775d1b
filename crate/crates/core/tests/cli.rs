use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn wienerlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wienerlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("WIENERLAB_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn simulate_writes_paths_and_manifest() {
    let dir = TempDir::new().unwrap();
    let o = wienerlab(
        &["simulate", "--model", "fbm", "--hurst", "0.7", "--steps", "1024", "--paths", "100", "--seed", "7"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("paths.csv"));
    assert_eq!(header, ["path_id", "t", "value"]);
    assert_eq!(rows.len(), 100 * 1025);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config"]["seed"], 7);
}

#[test]
fn optimize_reports_closed_form_and_estimate() {
    let dir = TempDir::new().unwrap();
    let o = wienerlab(
        &["optimize", "--utility", "exponential", "--beta", "1", "--theta", "const:0.3", "--w", "1", "--steps", "64", "--paths", "4000", "--seed", "1"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("optimize.json")).unwrap()).unwrap();
    let report = &v["report"];
    let closed = report["closed_form"].as_f64().unwrap();
    let est = report["expected_utility"].as_f64().unwrap();
    let se = report["SE"].as_f64().unwrap();
    let expected = 1.0 - (-1.0f64 - 0.045).exp();
    assert!((closed - expected).abs() < 0.01, "{closed}");
    assert!((est - closed).abs() < 5.0 * se + 1e-6, "{est} vs {closed} ± {se}");
}

#[test]
fn replicate_writes_per_level_residuals() {
    let dir = TempDir::new().unwrap();
    let o = wienerlab(
        &["replicate", "--target", "self", "--hurst", "0.7", "--levels", "8", "--seed", "3", "--steps", "4096"],
        dir.path(),
    );
    let c = code(&o);
    assert!(c == 0 || c == 2, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("replicate.json")).unwrap()).unwrap();
    assert_eq!(v["levels"].as_array().unwrap().len(), 8);
    assert_eq!(v["residuals"].as_array().unwrap().len(), 9);
    assert_eq!(c == 2, v["never_hit"].as_bool().unwrap());
    assert!(dir.path().join("psi.csv").is_file());
}

#[test]
fn report_on_empty_directory_is_missing_artifact() {
    let dir = TempDir::new().unwrap();
    let o = wienerlab(&["report", dir.path().to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).to_lowercase().contains("artifact"));
}

#[test]
fn report_single_optimize_run_is_one_row() {
    let dir = TempDir::new().unwrap();
    let run = dir.path().join("run");
    let o = wienerlab(&["optimize", "--steps", "32", "--paths", "500", "--seed", "2"], &run);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("tables");
    assert_eq!(code(&wienerlab(&["report", dir.path().to_str().unwrap()], &out)), 0);
    let (_, rows) = read_csv(&out.join("utility.csv"));
    assert_eq!(rows.len(), 1);
    assert!(!out.join("entropy.csv").exists());
}

#[test]
fn runs_differing_in_seed_differ_only_in_stochastic_columns() {
    let dir = TempDir::new().unwrap();
    for seed in ["4", "5"] {
        let run = dir.path().join(format!("seed{seed}"));
        let o = wienerlab(&["optimize", "--steps", "32", "--paths", "500", "--seed", seed], &run);
        assert_eq!(code(&o), 0);
    }
    let out = dir.path().join("tables");
    assert_eq!(code(&wienerlab(&["report", dir.path().to_str().unwrap()], &out)), 0);
    let (header, rows) = read_csv(&out.join("utility.csv"));
    assert_eq!(rows.len(), 2);
    let stochastic = ["run", "seed", "c_star", "expected_utility", "se", "closed_form", "budget_residual", "worst_probe_gap"];
    for (i, name) in header.iter().enumerate() {
        if stochastic.contains(&name.as_str()) {
            if matches!(name.as_str(), "seed" | "expected_utility" | "se") {
                assert_ne!(rows[0][i], rows[1][i], "{name} should vary with the seed");
            }
        } else {
            assert_eq!(rows[0][i], rows[1][i], "{name} should not depend on the seed");
        }
    }
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&wienerlab(&["bogus"], dir.path())), 1);
    assert_eq!(code(&wienerlab(&["simulate", "--hurst", "1.4"], dir.path())), 1);
    assert_eq!(code(&wienerlab(&["optimize", "--theta", "power:1,-0.7"], dir.path())), 1);
    assert!(!dir.path().join("paths.csv").exists());
}

#[test]
fn seed_falls_back_to_environment() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let run = |out: &Path, seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_wienerlab"))
            .args(["simulate", "--steps", "8", "--paths", "2", "--out"])
            .arg(out)
            .env("WIENERLAB_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        std::fs::read(out.join("paths.csv")).unwrap()
    };
    assert_eq!(run(a.path(), "9"), run(b.path(), "9"));
    assert_ne!(run(a.path(), "9"), run(b.path(), "10"));
}
