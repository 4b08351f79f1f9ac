use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use lipconc_cli::commands::{run, Options, Subcommand};
use lipconc_cli::Problem;
use serde_json::{json, Value};

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn lipconc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipconc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn temp_problem(value: &Value) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(value.to_string().as_bytes()).unwrap();
    f
}

#[test]
fn psi_on_diagonal_example() {
    let out = lipconc(&["psi", problem("diagonal_n2.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["psi"], "2/1");
    assert_eq!(v["psi_norm"], "2/1");
    assert_eq!(v["tool"], "lipconc");
    assert!(v["version"].is_string());
    assert!(v["input_digest"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn verify_lp_on_diagonal_example() {
    let out = lipconc(&["verify-lp", problem("diagonal_n2.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["lhs"], "2/1");
    assert_eq!(v["rhs"], "2/1");
    assert_eq!(v["holds"], true);
    assert_eq!(v["norms"]["phi_norm"], "2/1");
}

#[test]
fn phi_reports_certificates() {
    let out = lipconc(&["phi", problem("diagonal_n2.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["phi_norm"], "2/1");
    let cert = &v["certificate"]["positive"];
    assert_eq!(cert["objective_value"], "2/1");
    assert_eq!(cert["primal"].as_array().unwrap().len(), 4);
    assert_eq!(cert["dual"].as_array().unwrap().len(), 4 + 8);
}

#[test]
fn decompose_reports_equality() {
    let out = lipconc(&["decompose", problem("weighted_dense_n3.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["psi"], v["decomposition_rhs"]);
    assert_eq!(v["holds"], true);
}

#[test]
fn eta_on_sticky_chain() {
    let out = lipconc(&["eta", problem("sticky_chain_n8.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["delta"][0][0], "1/1");
    assert_eq!(v["delta"][0][1], "4/5");
    assert_eq!(v["delta"][0][2], "16/25");
    assert_eq!(v["delta"][3][0], "0/1");
    assert_eq!(v["eta_bar"].as_array().unwrap().len(), 28);
    assert!(v["delta_norm"].as_f64().unwrap() > 1.0);
}

#[test]
fn martingale_and_bound() {
    let path = problem("weighted_dense_n3.json");
    let out = lipconc(&["martingale", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["bound"]["holds"], true);
    assert_eq!(v["bound"]["lipschitz"], "1/1");
    assert_eq!(v["profile"]["v_bar"].as_array().unwrap().len(), 3);

    let out = lipconc(&["bound", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let bounds = v["bounds"].as_array().unwrap();
    assert_eq!(bounds.len(), 3);
    assert_eq!(bounds[0]["t"], 0.5);
    assert!(bounds.iter().all(|b| b["corollary"].as_f64().unwrap() > 0.0));
}

#[test]
fn simulate_is_reproducible_and_reports_seed() {
    let path = problem("sticky_chain_n8.json");
    let a = lipconc(&["simulate", path.to_str().unwrap()]);
    let b = lipconc(&["simulate", path.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["thresholds"].as_array().unwrap().len(), 4);

    let c = lipconc(&["simulate", path.to_str().unwrap(), "--seed", "8"]);
    assert_eq!(json_of(&c)["seed"], 8);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn selftest_small_run() {
    let out = lipconc(&["selftest", "--instances", "20", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 3);
    assert_eq!(v["instances"], 20);
    assert_eq!(v["input_digest"], Value::Null);
}

#[test]
fn zero_weight_exits_one() {
    let f = temp_problem(&json!({"alphabet": 2, "n": 2, "weights": ["1", "0"], "function": "sum_of_symbols"}));
    let out = lipconc(&["psi", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("weights[1]") && err.contains("positive"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn input_errors_exit_one() {
    let out = lipconc(&["psi", "/nonexistent/problem.json"]);
    assert_eq!(out.status.code(), Some(1));
    let out = lipconc(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = lipconc(&["psi"]);
    assert_eq!(out.status.code(), Some(1));

    let f = temp_problem(&json!({"alphabet": 3, "n": 13, "weights": vec!["1"; 13], "function": "sum_of_symbols"}));
    let out = lipconc(&["psi", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--max-table"));
    let out = lipconc(&["psi", f.path().to_str().unwrap(), "--max-table", "10^7"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn missing_section_names_field() {
    let f = temp_problem(&json!({"alphabet": 2, "n": 2, "weights": ["1", "1"], "function": "sum_of_symbols"}));
    let out = lipconc(&["eta", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("measure"));
}

#[test]
fn violations_exit_three() {
    use lipconc_cli::commands::Outcome;
    let ok = Outcome { report: Value::Null, summary: String::new(), violation: false };
    assert_eq!(ok.exit_code(), 0);
    assert_eq!(Outcome { violation: true, ..ok }.exit_code(), 3);
}

#[test]
fn library_entry_point_matches_binary() {
    let bytes = std::fs::read(problem("diagonal_n2.json")).unwrap();
    let outcome = run(Subcommand::Psi, Some(&bytes), &Options::default()).unwrap();
    let out = lipconc(&["psi", problem("diagonal_n2.json").to_str().unwrap()]);
    assert_eq!(outcome.report, json_of(&out));
}

#[test]
fn problem_files_round_trip() {
    for name in ["diagonal_n2.json", "sticky_chain_n8.json", "weighted_dense_n3.json"] {
        let text = std::fs::read_to_string(problem(name)).unwrap();
        let parsed = Problem::from_json_str(&text).unwrap();
        let emitted = parsed.to_value();
        let reparsed = Problem::from_value(&emitted).unwrap();
        assert_eq!(parsed, reparsed, "{name}");
        assert_eq!(emitted, reparsed.to_value());
    }
}
