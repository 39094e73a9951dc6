use std::path::Path;
use std::process::Command;

use jsonschema::JSONSchema;
use serde_json::Value;

use cslab::output::as_f64;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cslab").chain(args.iter().copied());
    let code = cslab::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn schema_for(command: &str) -> JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{command}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    JSONSchema::compile(&schema).unwrap()
}

/// Runs a command with JSON output, checks exit 0 and the schema.
fn json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    let command = v["command"].as_str().unwrap().to_string();
    let schema = schema_for(&command);
    if let Err(errors) = schema.validate(&v) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{command} output violates its schema: {msgs:?}");
    }
    v
}

fn f(v: &Value) -> f64 {
    as_f64(v).unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn lcs_command() {
    assert_eq!(json(&["lcs", "--a", "1000", "--b", "0100"])["lcs"], 3);
    assert_eq!(json(&["lcs", "--a", "", "--b", "0"])["lcs"], 0);
    assert_eq!(json(&["lcs", "--a", "IOOO", "--b", "0100", "--engine", "dp"])["lcs"], 3);
    let (code, out, err) = run(&["lcs", "--a", "10Z1", "--b", "0"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("'Z'"), "{err}");
    let (code, _, _) = run(&["lcs", "--a", "1010101010101010101010", "--b", "0101010101010101010101", "--engine", "bruteforce"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["lcs", "--a", "1"]);
    assert_eq!(code, 2);
}

#[test]
fn fit_command() {
    let closed = json(&["fit", "--mode", "closed-form"]);
    assert!((f(&closed["gamma"]) - 0.814050).abs() < 5e-7);
    assert_eq!(closed["exceeds_known_upper_bound"], false);
    let arratia = json(&["fit", "--mode", "arratia-steele"]);
    assert!((f(&arratia["gamma"]) - 0.828427).abs() < 5e-7);
    assert_eq!(arratia["exceeds_known_upper_bound"], true);
    let solved = json(&["fit"]);
    assert!((f(&solved["gamma"]) - f(&closed["gamma"])).abs() < 2e-6);
    assert_eq!(solved["multistart"]["converged"], 16);
    assert!(f(&solved["residuals"][1]).abs() < 1e-10);
    let (code, _, err) = run(&["fit", "--start", "0.9,0.9,0.9,0.9"]);
    assert_eq!(code, 3, "{err}");
    let (code, _, _) = run(&["fit", "--start", "0.4,0.5"]);
    assert_eq!(code, 2);
}

#[test]
fn gamma_is_deterministic_for_any_thread_count() {
    let args = ["gamma", "--n", "10000", "--trials", "100", "--seed", "7"];
    let (_, first, _) = run(&args);
    let (_, second, _) = run(&args);
    assert_eq!(first, second);
    let v = json(&args);
    let mean = f(&v["mean"]);
    assert!((0.79..=0.82).contains(&mean), "{mean}");
    let mut threaded = json(&[&args[..], &["--threads", "3"]].concat());
    threaded["config"]["threads"] = Value::Null;
    assert_eq!(threaded, v);
}

#[test]
fn seed_from_environment() {
    let bin = env!("CARGO_BIN_EXE_cslab");
    let out = |seed_env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(bin);
        cmd.args(["gamma", "--n", "64", "--trials", "30"]).args(extra);
        match seed_env {
            Some(s) => cmd.env("CSLAB_SEED", s),
            None => cmd.env_remove("CSLAB_SEED"),
        };
        let o = cmd.output().unwrap();
        assert!(o.status.success());
        String::from_utf8(o.stdout).unwrap()
    };
    assert_eq!(out(Some("42"), &[]), out(None, &["--seed", "42"]));
    assert_ne!(out(Some("42"), &[]), out(None, &[]));
    let v: Value = serde_json::from_str(&out(Some("42"), &[])).unwrap();
    assert_eq!(v["config"]["seed"], 42);
}

#[test]
fn simulate_b_command() {
    let v = json(&["simulate-b", "--p2", "0.5", "--seed", "3"]);
    let u = std::f64::consts::SQRT_2 - 1.0;
    assert!((f(&v["even_density"]) / u - 1.0).abs() < 0.01);
    assert!((f(&v["flux"]["fbar"]) / 0.828427 - 1.0).abs() < 0.01);

    let frozen = json(&["simulate-b", "--p2", "0", "--len", "1000", "--burn-in", "10", "--steps", "100", "--tally"]);
    assert_eq!(frozen["total_swaps"], 0);
    assert_eq!(f(&frozen["flux"]["fbar"]), 1.0);

    let (code, csv_out, _) = run(&["simulate-b", "--p2", "0.5", "--len", "200", "--burn-in", "0", "--steps", "10", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut reader = csv::Reader::from_reader(csv_out.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["halfstep", "even_density", "odd_density", "swap_rate"]);
    assert_eq!(reader.records().count(), 10);

    let (code, _, _) = run(&["simulate-b", "--p2", "0.5", "--len", "201"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["simulate-b", "--p2", "1.5"]);
    assert_eq!(code, 2);
}

#[test]
fn profile_command() {
    let v = json(&["profile", "--model", "b", "--p2", "0.5", "--n", "1000", "--members", "8"]);
    assert!((f(&v["transported_mass"]) - (3.0 - 2.0 * std::f64::consts::SQRT_2)).abs() < 0.02);
    let (code, csv_out, _) = run(&["profile", "--model", "cs", "--n", "1000", "--members", "4", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut reader = csv::Reader::from_reader(csv_out.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["x", "y_mean", "y_stderr"]);
    assert_eq!(reader.records().count(), 201);
    let (code, _, _) = run(&["profile", "--model", "cs", "--n", "10"]);
    assert_eq!(code, 2);
}

#[test]
fn verify_command() {
    let v = json(&["verify", "--suite", "exact"]);
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn trace_matches_golden_file() {
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/figure_trace.txt");
    let golden: Vec<String> = std::fs::read_to_string(golden_path).unwrap().lines().map(String::from).collect();
    let v = json(&["trace", "--a", "1000", "--b", "0100"]);
    let lines: Vec<String> = v["lines"].as_array().unwrap().iter().map(|l| l.as_str().unwrap().to_string()).collect();
    assert_eq!(lines, golden);
    let (_, text, _) = run(&["trace", "--a", "1000", "--b", "0100", "--format", "text"]);
    assert_eq!(text.lines().collect::<Vec<_>>(), golden);
}

#[test]
fn exact_convergence_and_independence() {
    let v = json(&["exact", "--n", "2"]);
    assert_eq!(v["total"], 18);
    let (code, _, _) = run(&["exact", "--n", "13"]);
    assert_eq!(code, 2);
    let v = json(&["convergence", "--ns", "16,64,256", "--trials", "50"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    let v = json(&["independence", "--trials", "10000", "--n", "6"]);
    assert_eq!(v["parity_violations"], 0);
}

#[test]
fn output_file_and_text_format() {
    let dir = std::env::temp_dir().join(format!("cslab-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fit.json");
    let (code, out, _) = run(&["fit", "--mode", "closed-form", "--output", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["method"], "closed-form");
    std::fs::remove_dir_all(&dir).unwrap();

    let (code, text, _) = run(&["fit", "--mode", "arratia-steele", "--format", "text"]);
    assert_eq!(code, 0);
    assert!(text.contains("exceeds the known upper bound"));
    let (code, _, _) = run(&["fit", "--mode", "closed-form", "--output", "/nonexistent-dir/x.json"]);
    assert_eq!(code, 1);
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("simulate-b"));
}
