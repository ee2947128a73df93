use std::path::Path;
use std::process::{Command, Output};

fn ncfa(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncfa")).current_dir(dir).args(args).output().unwrap()
}

fn schema() -> jsonschema::Validator {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(report: &serde_json::Value) {
    let errors: Vec<String> = schema().iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn verify_writes_a_schema_valid_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncfa(
        &["verify", "--theorem", "rosenthal", "--ensemble", "classical:K=4,n=2", "--p", "4", "--trials", "50", "--seed", "7", "--out", "r.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_valid(&v);
    assert_eq!(v["reports"][0]["lhs"].as_array().unwrap().len(), 50);
    assert_eq!(v["reports"][0]["rhs"].as_array().unwrap().len(), 50);
}

#[test]
fn every_theorem_family_validates() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncfa(
        &[
            "verify", "--theorem", "js,js-positive,khinchine,khinchine-adjoint,modular,lemmas", "--spec", "Lp(3),sum(1.5,3)",
            "--phi", "M:2,4", "--ensemble", "gue_like:K=2,n=2", "--trials", "4",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_valid(&v);
    assert!(v["reports"].as_array().unwrap().len() > 10);
}

#[test]
fn sweep_emits_one_csv_row_per_spec_and_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncfa(&["sweep", "--theorem", "khinchine", "--spec", "Lp(1.5),Lp(3)", "--ensemble", "fermionic:K=4", "--trials", "20"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rows.headers().unwrap().iter().collect::<Vec<_>>(), ["theorem_id", "spec", "kind", "K", "n", "seed", "trial", "lhs", "rhs", "ratio"]);
    let records: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 2 * 20);
    assert_eq!(&records[20][1], "Lp(3)");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"theorems":["khinchine"],"specs":["Lp(3)"],"ensembles":["gue_like:K=2,n=2"],"trials":5,"seed":1,"format":"json"}"#,
    )
    .unwrap();
    let a = ncfa(&["verify", "--config", "run.json", "--trials", "3"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["reports"][0]["trials"], 3);
    assert_eq!(v["reports"][0]["ensemble"]["seed"], 1);
}

#[test]
fn oracle_suites_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncfa(&["oracle", "--check", "l2-orthogonality", "--trials", "1000"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["reports"][0]["failures"].as_array().unwrap().len(), 0);
    assert!(ncfa(&["oracle", "--trials", "50"], dir.path()).status.success());
}

#[test]
fn oracle_mu_reads_a_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let doc = r#"{"blocks":[{"dim":2,"weight":0.5,"entries":[[[3,0],[0,0]],[[0,0],[1,0]]]}]}"#;
    std::fs::write(dir.path().join("x.json"), doc).unwrap();
    let out = ncfa(&["oracle", "--check", "mu", "--input", "x.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["reports"][0]["mu"], serde_json::json!([{"v": 3.0, "len": 0.5}, {"v": 1.0, "len": 0.5}]));
    let missing = ncfa(&["oracle", "--check", "mu"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn exit_status_contract() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| ncfa(args, dir.path()).status.code();
    // malformed spec, unknown theorem, missing ensemble, inadmissible hypothesis
    assert_eq!(code(&["verify", "--theorem", "khinchine", "--spec", "Lp(3", "--ensemble", "fermionic:K=2"]), Some(2));
    assert_eq!(code(&["verify", "--theorem", "nope", "--ensemble", "fermionic:K=2"]), Some(2));
    assert_eq!(code(&["verify", "--theorem", "rosenthal"]), Some(2));
    assert_eq!(code(&["verify", "--theorem", "rosenthal", "--p", "1.5", "--ensemble", "fermionic:K=2"]), Some(2));
    // dimension and trial budgets
    assert_eq!(code(&["verify", "--theorem", "rosenthal", "--ensemble", "gue_like:K=7,n=4", "--trials", "1"]), Some(3));
    assert_eq!(code(&["verify", "--theorem", "rosenthal", "--ensemble", "gue_like:K=2,n=2", "--trials", "2000000"]), Some(3));
    // the exploratory flag bypasses the hypothesis check
    assert_eq!(code(&["verify", "--theorem", "rosenthal", "--p", "1.5", "--ensemble", "fermionic:K=2", "--exploratory", "--trials", "2"]), Some(0));
}
