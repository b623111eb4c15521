use std::path::PathBuf;

use hyperbsa::cli::run;
use hyperbsa::ClassificationTable;

fn path(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hyperbsa").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(path(&format!("tests/golden/{name}"))).unwrap()
}

#[test]
fn run_matches_golden() {
    let (code, out, err) = cli(&["run", "--input", "phi+"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out, golden("run_phi_plus.txt"));
    assert_eq!(out.lines().count(), 16);
    assert!(out.lines().all(|l| l.ends_with("0.062500000000")));
}

#[test]
fn run_is_deterministic() {
    for input in ["phi+", "phi-", "psi+", "psi-"] {
        for imp in ["canonical", "decomposed"] {
            let a = cli(&["run", "--input", input, "--impl", imp, "--format", "json"]);
            let b = cli(&["run", "--input", input, "--impl", imp, "--format", "json"]);
            assert_eq!(a.0, 0);
            assert_eq!(a, b);
        }
    }
}

#[test]
fn implementations_print_the_same_distribution() {
    for input in ["phi+", "phi-", "psi+", "psi-"] {
        let c = cli(&["run", "--input", input, "--impl", "canonical"]);
        let d = cli(&["run", "--input", input, "--impl", "decomposed"]);
        assert_eq!(c.1, d.1, "{input}");
    }
}

#[test]
fn run_json_is_well_formed() {
    let (code, out, _) = cli(&["run", "--input", "psi-", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["input"], "psi-");
    assert_eq!(v["outcomes"].as_array().unwrap().len(), 64);
    let total: f64 = v["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["probability"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn verify_passes_and_reports_success() {
    let (code, out, err) = cli(&["verify"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.matches("result: PASS").count(), 2);
    assert!(out.contains("success_probability: 1.000000000000"));
    assert!(out.contains("classification_accuracy: 64/64"));
}

#[test]
fn verify_json_has_both_implementations() {
    let (code, out, _) = cli(&["verify", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn tampered_table_fails_verification() {
    let (code, out, err) = cli(&["verify", "--impl", "canonical", "--tamper", "5"]);
    assert_eq!(code, 1);
    assert!(out.contains("result: FAIL"));
    assert!(err.contains("classification"));
    assert!(err.contains("success-probability"));
}

#[test]
fn detector_only_circuit_reports_unsortable_oam() {
    let (code, out, err) = cli(&["run", "--input", "phi+", "--circuit", &path("tests/fixtures/cli/empty.circ")]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("sppm"), "{err}");
    assert!(err.contains("OAM 0"), "{err}");
}

#[test]
fn lmax_override() {
    let (code, _, err) = cli(&["run", "--input", "phi+", "--lmax", "2", "--impl", "decomposed"]);
    assert_eq!(code, 0, "{err}");
    let (code, _, err) = cli(&["run", "--input", "phi+", "--lmax", "1", "--impl", "decomposed"]);
    assert_eq!(code, 1);
    assert!(err.contains("lmax = 1"), "{err}");
    let (code, _, _) = cli(&["run", "--input", "phi+", "--lmax", "1", "--impl", "canonical"]);
    assert_eq!(code, 0);
    let (code, _, _) = cli(&["run", "--input", "phi+", "--lmax", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(cli(&["run", "--input", "chi+"]).0, 2);
    assert_eq!(cli(&["frobnicate"]).0, 2);
    assert_eq!(cli(&["run"]).0, 2);
    let (code, _, err) = cli(&["run", "--input", "phi+", "--circuit", "/no/such/file.circ"]);
    assert_eq!(code, 2);
    assert!(err.contains("cannot read"));
    let (code, _, err) = cli(&[
        "run",
        "--input",
        "phi+",
        "--circuit",
        &path("tests/fixtures/malformed/undeclared_path.circ"),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("line 4, column"), "{err}");
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("export-table"));
}

#[test]
fn stages_lists_every_checkpoint() {
    let (code, out, _) = cli(&["stages", "--input", "psi+"]);
    assert_eq!(code, 0);
    for name in ["P-COS", "O-CPS", "DP stage", "OH", "HWP"] {
        assert!(out.contains(&format!("(after {name}): fidelity 1.000000000000")), "{name}");
    }
}

#[test]
fn describe_reprints_a_parsable_circuit() {
    let (code, out, _) = cli(&["describe"]);
    assert_eq!(code, 0);
    let body: String = out
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let reparsed = hyperbsa::circuit::parse_circuit(&body).unwrap();
    assert_eq!(reparsed, hyperbsa::circuit::fig2());
}

#[test]
fn export_table_round_trips() {
    let (code, out, _) = cli(&["export-table", "--format", "json"]);
    assert_eq!(code, 0);
    assert_eq!(out, golden("export_table.json"));
    let table = ClassificationTable::from_json(&out).unwrap();
    assert_eq!(table.rows(), ClassificationTable::published().unwrap().rows());
    let (_, text, _) = cli(&["export-table"]);
    assert_eq!(text, golden("export_table.txt"));
    assert_eq!(text.lines().count(), 64);
}

#[test]
fn oracle_command_passes() {
    let (code, out, _) = cli(&["oracle", "--impl", "decomposed", "--seed", "11"]);
    assert_eq!(code, 0);
    assert!(out.contains("result: PASS"));
    assert!(out.contains("seed 11"));
}

fn schema_for(def: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(path("../../docs/output-schema.json")).unwrap();
    let mut schema: serde_json::Value = serde_json::from_str(&text).unwrap();
    schema["$ref"] = serde_json::Value::String(format!("#/$defs/{def}"));
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn json_output_matches_schema() {
    let cases: [(&str, &[&str]); 6] = [
        ("run", &["run", "--input", "psi+", "--format", "json"]),
        ("verify", &["verify", "--format", "json"]),
        ("verify", &["verify", "--impl", "canonical", "--tamper", "7", "--format", "json"]),
        ("stages", &["stages", "--input", "phi-", "--format", "json"]),
        ("export_table", &["export-table", "--format", "json"]),
        ("oracle", &["oracle", "--format", "json"]),
    ];
    for (def, args) in cases {
        let (_, out, _) = cli(args);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let validator = schema_for(def);
        let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
    }
    let (_, out, _) = cli(&["run", "--input", "psi+", "--format", "json"]);
    let mut v: serde_json::Value = serde_json::from_str(&out).unwrap();
    v["outcomes"][0]["det_a"] = "D[0,H,a1]".into();
    assert!(!schema_for("run").is_valid(&v));
}
