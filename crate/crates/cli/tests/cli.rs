use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn finestrat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finestrat"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = finestrat(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn gaussian_population(dir: &Path, strata: &str) {
    ok(
        dir,
        &["generate", "gaussian", "--scenario", "line", "--phi", "0.25", "--H", strata, "--seed", "1", "--out", "pop.csv"],
    );
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = finestrat(tmp.path(), &["generate", "gaussian", "--phi", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreadable_input_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let out = finestrat(tmp.path(), &["sample", "--population", "absent.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn generated_populations_have_one_row_per_unit() {
    let tmp = TempDir::new().unwrap();
    gaussian_population(tmp.path(), "50");
    let pop = fs::read_to_string(tmp.path().join("pop.csv")).unwrap();
    assert!(pop.starts_with("stratum,x,y\n"));
    assert_eq!(pop.lines().count(), 1 + 50 * 60);

    let hmt = ok(tmp.path(), &["generate", "hmt", "--seed", "1"]);
    assert_eq!(hmt.lines().count(), 1 + 2000);
}

#[test]
fn sample_keeps_one_unit_per_stratum() {
    let tmp = TempDir::new().unwrap();
    gaussian_population(tmp.path(), "10");
    let text = ok(tmp.path(), &["sample", "--population", "pop.csv", "--seed", "4"]);
    assert!(text.starts_with("stratum,x,stratum_size,unit,y\n"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn estimator_subset_selects_rows() {
    let tmp = TempDir::new().unwrap();
    gaussian_population(tmp.path(), "20");
    let text = ok(
        tmp.path(),
        &["estimate", "--population", "pop.csv", "--estimators", "coll,hb", "--iterations", "2000", "--out", "est.csv"],
    );
    assert!(text.is_empty());
    let table = fs::read_to_string(tmp.path().join("est.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "estimator,ht_mean,variance,cv,na_reason");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("Coll,") && lines[2].starts_with("HB,"));
    let sidecar = fs::read_to_string(tmp.path().join("est.csv.diagnostics.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&sidecar).unwrap();
    assert!(json.is_object());
}

#[test]
fn narrow_kernel_and_flat_means_report_na() {
    let tmp = TempDir::new().unwrap();
    let mut csv = String::from("stratum,x,stratum_size,unit,y\n");
    for (h, y) in [4.0, 6.0, 3.0, 7.0, 2.0, 8.0, 1.0, 9.0].iter().enumerate() {
        csv.push_str(&format!("s{h},{},10,0,{y}\n", h + 1));
    }
    fs::write(tmp.path().join("s.csv"), csv).unwrap();
    let text = ok(
        tmp.path(),
        &["estimate", "--sample", "s.csv", "--b", "0.01", "--estimators", "ker,dir", "--diagnostics", "d.json"],
    );
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].starts_with("Ker,") && rows[0].ends_with(",NA,NA,C_d = 0"), "{}", rows[0]);
    assert!(rows[1].ends_with(",NA,NA,M_hat infinite"), "{}", rows[1]);
}

#[test]
fn repeated_runs_are_identical() {
    let tmp = TempDir::new().unwrap();
    gaussian_population(tmp.path(), "20");
    let args = ["estimate", "--population", "pop.csv", "--iterations", "3000", "--seed", "9"];
    assert_eq!(ok(tmp.path(), &args), ok(tmp.path(), &args));
    let mut other = args.to_vec();
    other[6] = "10";
    assert_ne!(ok(tmp.path(), &args), ok(tmp.path(), &other));
}

#[test]
fn simulate_summarizes_each_estimator() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("spec.toml"),
        "schema_version = 1\npopulation = \"gaussian\"\nscenario = \"bump\"\nphi = 1.0\nstrata = 12\nseed = 2\nd = 0.5\nmcmc_iterations = 1000\nmcmc_burn_in = 100\nmcmc_thin = 10\n",
    )
    .unwrap();
    let text = ok(tmp.path(), &["simulate", "--spec", "spec.toml", "--R", "4", "--results", "r.csv"]);
    assert_eq!(text.lines().count(), 1 + 4);
    let results = fs::read_to_string(tmp.path().join("r.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 4 * 4);
}

#[test]
fn spec_with_unknown_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("bad.toml"), "schema_version = 1\nreplicatez = 3\n").unwrap();
    let out = finestrat(tmp.path(), &["simulate", "--spec", "bad.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn select_d_reports_the_minimizer() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("spec.toml"),
        "schema_version = 1\npopulation = \"gaussian\"\nscenario = \"line\"\nphi = 0.25\nstrata = 20\nseed = 3\nmcmc_iterations = 1000\nmcmc_burn_in = 100\nmcmc_thin = 10\n",
    )
    .unwrap();
    let out = finestrat(tmp.path(), &["select-d", "--spec", "spec.toml", "--grid", "0.05,5", "--R", "3"]);
    assert!(out.status.success());
    let curve = String::from_utf8(out.stdout).unwrap();
    assert_eq!(curve.lines().count(), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("selected d = "));
}
