use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use sepcoef::estimators::{lambda_nn, recommended_variant};
use sepcoef::oracles::{lambda_exact, ClosedFormModel};
use sepcoef::{NnVariant, ObservationSet};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sepcoef"));
    cmd.env_remove("SEPCOEF_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn noisy_csv(dir: &Path, n: usize) -> PathBuf {
    let mut s = String::from("signal,noise,y\n");
    for i in 0..n {
        let a = sepcoef::rng::unit(1, i as u64);
        let b = sepcoef::rng::unit(2, i as u64);
        let e = sepcoef::rng::unit(3, i as u64);
        s.push_str(&format!("{a:?},{b:?},{:?}\n", a + 0.05 * e));
    }
    write(dir, "noisy.csv", &s)
}

#[test]
fn estimate_matches_library_call() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d.csv", "x,y\n1,1\n2,2\n3,3\n4,4\n");
    let r = json(&run(&["estimate", "-i", p.to_str().unwrap(), "--seed", "9"]));
    let obs = ObservationSet::from_columns(&[vec![1.0, 2.0, 3.0, 4.0]], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let lib = lambda_nn(&obs, 9, NnVariant::Standard).unwrap();
    assert_eq!(num(&r["lambda"]).to_bits(), lib.value.to_bits());
    assert_eq!(num(&r["numerator"]).to_bits(), lib.numerator.to_bits());
    assert_eq!(num(&r["denominator"]).to_bits(), lib.denominator.to_bits());
    assert_eq!(r["variant"], "nn_standard");
    assert_eq!(r["n"], 4);
    assert_eq!(r["p"], 1);
    assert_eq!(r["seed"], 9);
    assert_eq!(r["config"]["seed"], 9);
    assert_eq!(r["config"]["command"], "estimate");
    assert_eq!(r["config"]["predictor_columns"], serde_json::json!(["x"]));
}

#[test]
fn non_numeric_cell_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d.csv", "x,y\n1,1\n2,oops\n3,3\n");
    let out = run(&["estimate", "-i", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("row 2") && msg.contains("'y'") && msg.contains("oops"), "{msg}");
}

#[test]
fn input_problems_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    assert_eq!(run(&["estimate", "-i", missing.to_str().unwrap()]).status.code(), Some(2));
    let p = write(dir.path(), "d.csv", "x,y\n1,1\n2,2\n");
    let out = run(&["estimate", "-i", p.to_str().unwrap(), "-r", "z"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'z'"));
    let ragged = write(dir.path(), "r.csv", "x,y\n1,1\n2\n");
    assert_eq!(run(&["estimate", "-i", ragged.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["oracle", "mvn", "--rho", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["estimate"]).status.code(), Some(2));
}

#[test]
fn degenerate_data_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d.csv", "x,y\n1,1\n1,2\n1,3\n");
    let out = run(&["estimate", "-i", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("identical"));
}

#[test]
fn rank_preprocessing_equals_preranked_input() {
    let dir = tempfile::tempdir().unwrap();
    let raw = write(dir.path(), "raw.csv", "x,y\n10,3\n20,1\n20,4\n5,1.5\n7,9\n");
    let ranked = write(dir.path(), "ranked.csv", "x,y\n3,3\n4.5,1\n4.5,4\n1,1.5\n2,9\n");
    let a = json(&run(&["estimate", "-i", raw.to_str().unwrap(), "--preprocess", "rank"]));
    let b = json(&run(&["estimate", "-i", ranked.to_str().unwrap()]));
    assert_eq!(num(&a["lambda"]).to_bits(), num(&b["lambda"]).to_bits());
    assert_eq!(a["config"]["preprocess"]["mode"], "rank");
}

#[test]
fn clip_negative_reports_zero() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d.csv", "x,y\n1,1\n2,4\n3,2\n4,3\n5,0\n");
    let plain = json(&run(&["estimate", "-i", p.to_str().unwrap()]));
    let clipped = json(&run(&["estimate", "-i", p.to_str().unwrap(), "--clip-negative"]));
    if num(&plain["lambda"]) < 0.0 {
        assert_eq!(num(&clipped["lambda"]), 0.0);
        assert!(clipped["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("reported as 0")));
    } else {
        assert_eq!(plain["lambda"], clipped["lambda"]);
    }
    assert_eq!(clipped["config"]["clip_negative"], true);
}

#[test]
fn oracle_values() {
    let r = json(&run(&["oracle", "mvn", "--rho", "0.7"]));
    let exact = lambda_exact(&ClosedFormModel::bivariate_normal(0.7)).unwrap();
    assert_eq!(num(&r["lambda"]).to_bits(), exact.to_bits());
    assert!((num(&r["lambda"]) - 0.326006461944708).abs() < 1e-12);
    assert!(r["psi"].is_null());

    let r = json(&run(&["oracle", "bf-normal", "--mu1", "0", "--mu2", "0", "--s1", "1", "--s2", "4"]));
    assert_eq!(num(&r["lambda"]), 0.0);
    assert_eq!(num(&r["psi"]), 0.5);

    let r = json(&run(&["oracle", "frechet-table", "--a10", "0.16666666666666666", "--a20", "0.3333333333333333"]));
    assert_eq!(num(&r["lambda"]), 64.0 / 81.0);

    for q in ["0.1", "0.25", "0.4"] {
        let r = json(&run(&["oracle", "three-group", "--q", q]));
        let q: f64 = q.parse().unwrap();
        assert!((num(&r["lambda"]) - q / (2.0 - 3.0 * q)).abs() < 1e-12);
    }

    let r = json(&run(&["oracle", "efgm", "--alpha", "-0.5", "--p", "2"]));
    assert_eq!(r["config"]["model"]["family"], "efgm");
}

#[test]
fn oracle_reads_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        dir.path(),
        "m.json",
        r#"{"family": "finite_pmf", "y_support": [0, 1], "x_support": [0, 1], "probs": [[0.5, 0.0], [0.0, 0.5]]}"#,
    );
    let r = json(&run(&["oracle", "model", "--file", model.to_str().unwrap()]));
    assert_eq!(num(&r["lambda"]), 1.0);
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"family": "finite_pmf", "y_support": [0, 1], "x_support": [0, 1], "probs": [[0.5, 0.0]]}"#,
    );
    assert_eq!(run(&["oracle", "model", "--file", bad.to_str().unwrap()]).status.code(), Some(2));
}

fn csv_rows(bytes: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect();
    (header, rows)
}

#[test]
fn fully_discretised_rank_estimate_is_one() {
    let out = run(&["simulate", "--scenario", "s3", "--k", "256", "--n", "256", "--reps", "50"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&out.stdout);
    let j = header.iter().position(|h| h == "rank_based").unwrap();
    assert_eq!(rows.len(), 50);
    for row in rows {
        assert_eq!(row[j].parse::<f64>().unwrap(), 1.0);
    }
}

#[test]
fn simulate_dump_round_trips_through_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let out = run(&[
        "simulate", "--scenario", "s2b", "--n", "300", "--reps", "2", "--seed", "17",
        "--dump-data", data.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&out.stdout);
    let seed_col = header.iter().position(|h| h == "estimator_seed").unwrap();
    let lam_col = header.iter().position(|h| h == "lambda_nn").unwrap();
    let est_seed = &rows[0][seed_col];
    let r = json(&run(&["estimate", "-i", data.to_str().unwrap(), "--variant", "auto", "--seed", est_seed]));
    let simulated: f64 = rows[0][lam_col].parse().unwrap();
    assert_eq!(num(&r["lambda"]).to_bits(), simulated.to_bits());
    assert_eq!(r["variant"], "nn_between_group");

    let spec = sepcoef::simgen::ScenarioSpec::new(sepcoef::simgen::Scenario::S2bBf, 300, 17, 2);
    let obs = sepcoef::simgen::generate(&spec).unwrap();
    let lib = lambda_nn(&obs, spec.estimator_seed(0), recommended_variant(&obs)).unwrap();
    assert_eq!(lib.value.to_bits(), simulated.to_bits());
}

#[test]
fn seed_from_environment_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let p = noisy_csv(dir.path(), 50);
    let env = bin().args(["estimate", "-i", p.to_str().unwrap()]).env("SEPCOEF_SEED", "42").output().unwrap();
    assert_eq!(json(&env)["seed"], 42);
    let flag = bin()
        .args(["estimate", "-i", p.to_str().unwrap(), "--seed", "7"])
        .env("SEPCOEF_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(json(&flag)["seed"], 7);
    assert_eq!(json(&run(&["estimate", "-i", p.to_str().unwrap()]))["seed"], 0);
}

fn significant_digits(literal: &str) -> usize {
    let mantissa = literal.trim_start_matches('-').split(['e', 'E']).next().unwrap();
    mantissa.chars().filter(char::is_ascii_digit).collect::<String>().trim_start_matches('0').len()
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let out = run(&["oracle", "uniform-shift", "--delta", "0.3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines() {
        if let Some(value) = line.trim().strip_prefix("\"lambda\": ") {
            let literal = value.trim_end_matches(',');
            assert_eq!(significant_digits(literal), 17, "{literal}");
            return;
        }
    }
    panic!("no lambda in {text}");
}

#[test]
fn permtest_is_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let p = noisy_csv(dir.path(), 80);
    let args = ["permtest", "-i", p.to_str().unwrap(), "-p", "signal", "--n-perms", "99", "--seed", "5", "--corrected"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert_eq!(num(&r["p_value"]), 0.0);
    assert_eq!(num(&r["corrected_p_value"]), 0.01);
    assert_eq!(r["config"]["n_perms"], 99);
    assert_eq!(r["config"]["corrected"], true);
}

#[test]
fn select_recovers_the_signal_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = noisy_csv(dir.path(), 400);
    for method in ["forward", "best-subset"] {
        let r = json(&run(&["select", "-i", p.to_str().unwrap(), "--method", method]));
        assert_eq!(r["selected_labels"], serde_json::json!(["signal"]), "{method}");
    }
}

#[test]
fn output_file_is_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let p = noisy_csv(dir.path(), 30);
    let target = dir.path().join("report.json");
    std::fs::write(&target, "stale").unwrap();
    let out = run(&["estimate", "-i", p.to_str().unwrap(), "-o", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(r["command"], "estimate");
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n != "report.json" && n != "noisy.csv")
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_keys(report: &Value, def: &Value) {
    let required: Vec<&str> = def["required"].as_array().unwrap().iter().map(|k| k.as_str().unwrap()).collect();
    let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    for k in &required {
        assert!(keys.contains(k), "missing {k}");
    }
    if def["additionalProperties"] == Value::Bool(false) {
        for k in &keys {
            assert!(required.contains(k), "unexpected {k}");
        }
    }
}

#[test]
fn reports_follow_the_published_schema() {
    let schema = schema();
    let dir = tempfile::tempdir().unwrap();
    let p = noisy_csv(dir.path(), 60);
    let input = p.to_str().unwrap();
    let reports = [
        ("estimate", run(&["estimate", "-i", input])),
        ("permtest", run(&["permtest", "-i", input, "--n-perms", "10"])),
        ("select", run(&["select", "-i", input, "--method", "best-subset"])),
        ("simulate", run(&["simulate", "--scenario", "s1", "--rho", "0.4", "--n", "50", "--reps", "3", "--format", "json"])),
        ("oracle", run(&["oracle", "exponential", "--rate1", "1", "--rate2", "2"])),
    ];
    for (name, out) in reports {
        let r = json(&out);
        assert_eq!(r["command"], name);
        assert_keys(&r, &schema["$defs"][name]);
        assert_keys(&r["config"], &schema["$defs"]["config"]);
    }
}

#[test]
fn csv_output_formats() {
    let out = run(&["oracle", "bernoulli", "--p1", "0.2", "--p2", "0.9", "--format", "csv"]);
    let (header, rows) = csv_rows(&out.stdout);
    assert_eq!(header, ["family", "lambda", "psi"]);
    assert_eq!(rows[0][0], "bernoulli_pair");
    let dir = tempfile::tempdir().unwrap();
    let p = noisy_csv(dir.path(), 40);
    let out = run(&["select", "-i", p.to_str().unwrap(), "--format", "csv"]);
    let (header, rows) = csv_rows(&out.stdout);
    assert_eq!(header, ["step", "columns", "labels", "lambda", "selected"]);
    assert!(rows.iter().any(|r| r[2] == "signal" && r[4] == "true"));
}
