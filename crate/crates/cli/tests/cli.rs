//! End-to-end tests of the command-line surface: exit codes, output
//! layout, input immutability and config precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dimpute")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

/// A two-dimension warehouse with shared geography vocabulary and a couple
/// of missing cells in the customer table.
fn fixture(dir: &Path) -> PathBuf {
    write(
        &dir.join("schema.json"),
        r#"{
  "name": "shop",
  "dimensions": [
    {
      "name": "customer",
      "id": "c_id",
      "attributes": ["c_id", "c_city", "c_state"],
      "hierarchies": [{"name": "geo", "parameters": ["c_id", "c_city", "c_state"], "weak": {}}],
      "table": "customer.csv"
    },
    {
      "name": "supplier",
      "id": "s_id",
      "attributes": ["s_id", "s_city", "s_state"],
      "hierarchies": [{"name": "geo", "parameters": ["s_id", "s_city", "s_state"], "weak": {}}],
      "table": "supplier.csv"
    }
  ],
  "facts": [{"name": "sales", "dimensions": ["customer", "supplier"]}]
}"#,
    );
    write(
        &dir.join("customer.csv"),
        "c_id,c_city,c_state\n1,Lyon,ARA\n2,Lyon,\n3,Nantes,\n4,Paris,IDF\n",
    );
    write(
        &dir.join("supplier.csv"),
        "s_id,s_city,s_state\n10,Nantes,PDL\n11,Paris,IDF\n",
    );
    dir.join("schema.json")
}

#[test]
fn validate_exits_zero_on_valid_schema() {
    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    let out = run(&["validate", schema.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_exits_one_and_prints_violations() {
    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    let broken = std::fs::read_to_string(&schema)
        .unwrap()
        .replace(r#""parameters": ["c_id", "c_city", "c_state"]"#, r#""parameters": ["c_city", "c_state"]"#);
    write(&schema, &broken);
    let out = run(&["validate", schema.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("first parameter"), "stdout: {stdout}");
}

#[test]
fn validate_exits_two_on_missing_or_garbled_config() {
    let out = run(&["validate", "/nonexistent/schema.json"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    write(&schema, "{ not json");
    let out = run(&["validate", schema.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_rejects_unknown_config_fields_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    let with_unknown = std::fs::read_to_string(&schema)
        .unwrap()
        .replace(r#""table": "customer.csv""#, r#""table": "customer.csv", "color": "red""#);
    write(&schema, &with_unknown);
    let out = run(&["validate", schema.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("dimensions[0]"), "stderr: {stderr}");
}

#[test]
fn impute_writes_outputs_and_leaves_inputs_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    let before = std::fs::read(dir.path().join("customer.csv")).unwrap();
    let out_dir = dir.path().join("repaired");

    let out = run(&[
        "impute",
        schema.to_str().unwrap(),
        "--strategy",
        "intra-inter-intra",
        "--policy",
        "first",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    assert_eq!(std::fs::read(dir.path().join("customer.csv")).unwrap(), before);
    for file in ["schema.json", "customer.csv", "supplier.csv", "fill_log.csv", "summary.json", "links.json"] {
        assert!(out_dir.join(file).exists(), "missing output {file}");
    }

    // row 2 shares Lyon with row 1 (intra); row 3 gets Nantes->PDL from the
    // supplier dimension (inter)
    let repaired = std::fs::read_to_string(out_dir.join("customer.csv")).unwrap();
    assert!(repaired.contains("2,Lyon,ARA"));
    assert!(repaired.contains("3,Nantes,PDL"));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["total_fills"], 2);
    assert_eq!(summary["by_source"]["intra"], 1);
    assert_eq!(summary["by_source"]["inter"], 1);

    let log = std::fs::read_to_string(out_dir.join("fill_log.csv")).unwrap();
    assert!(log.starts_with("dimension,row,attribute,value,donor_row,matched_on,source\n"));
    assert!(log.contains(",inter\n") && log.contains(",intra\n"));
}

#[test]
fn impute_with_intra_only_is_identity_modulo_fills() {
    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    let out_dir = dir.path().join("repaired");
    let out = run(&[
        "impute",
        schema.to_str().unwrap(),
        "--strategy",
        "intra",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    // the supplier table had no nulls: byte-identical round trip
    let supplier = std::fs::read_to_string(out_dir.join("supplier.csv")).unwrap();
    assert_eq!(supplier, "s_id,s_city,s_state\n10,Nantes,PDL\n11,Paris,IDF\n");
    // no links.json for a pure intra run
    assert!(!out_dir.join("links.json").exists());
}

#[test]
fn inject_is_deterministic_and_reports_truth() {
    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    let out1 = dir.path().join("inj1");
    let out2 = dir.path().join("inj2");
    for out_dir in [&out1, &out2] {
        let out = run(&[
            "inject",
            schema.to_str().unwrap(),
            "--attr",
            "customer.c_state",
            "--rate",
            "0.5",
            "--seed",
            "11",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(
        std::fs::read(out1.join("customer.csv")).unwrap(),
        std::fs::read(out2.join("customer.csv")).unwrap()
    );
    let truth = std::fs::read_to_string(out1.join("truth.csv")).unwrap();
    assert!(truth.starts_with("dimension,row,attribute,original_value\n"));
    // two non-null c_state cells, rate 0.5 -> exactly one injected
    assert_eq!(truth.lines().count(), 2);
}

#[test]
fn inject_rejects_ineligible_attribute_with_explanation() {
    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    let out = run(&[
        "inject",
        schema.to_str().unwrap(),
        "--attr",
        "customer.c_city",
        "--rate",
        "0.2",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not eligible"), "stderr: {stderr}");
    assert!(stderr.contains("identifier values are unique"), "stderr: {stderr}");
    assert!(!dir.path().join("x").exists(), "no outputs on failure");
}

#[test]
fn evaluate_writes_results_with_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    // a larger synthetic model so every rate injects at least one cell
    let data = dir.path().join("data");
    let out = run(&[
        "gen", "--levels", "3", "--fanout", "10,4", "--rows", "400",
        "--seed", "3", "--name", "store", "--out", data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out_dir = dir.path().join("eval");
    let out = run(&[
        "evaluate",
        data.join("schema.json").to_str().unwrap(),
        "--trials",
        "2",
        "--seed",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let lines: Vec<&str> = results.lines().collect();
    assert_eq!(lines[0], "rate,trials,imputation_rate,accuracy,runtime_s,strategy,policy");
    assert_eq!(lines.len(), 8, "one row per default rate:\n{results}");
    assert!(lines[1].starts_with("0.01,2,"));
    assert!(lines[7].starts_with("0.5,2,"));
}

#[test]
fn evaluate_rejects_ineligible_named_target() {
    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    let out = run(&[
        "evaluate",
        schema.to_str().unwrap(),
        "--attr",
        "customer.c_city",
        "--trials",
        "1",
        "--out",
        dir.path().join("eval").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_defaults_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    write(
        &dir.path().join("run.json"),
        r#"{"strategy": "inter", "policy": "majority", "passes": 2}"#,
    );

    // config file alone: strategy inter
    let out_dir = dir.path().join("from_config");
    let out = run(&[
        "impute",
        schema.to_str().unwrap(),
        "--config",
        dir.path().join("run.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["strategy"], "inter");
    assert_eq!(summary["policy"], "majority");
    assert_eq!(summary["passes"], 2);

    // explicit flag wins over the config file
    let out_dir = dir.path().join("flag_wins");
    let out = run(&[
        "impute",
        schema.to_str().unwrap(),
        "--config",
        dir.path().join("run.json").to_str().unwrap(),
        "--strategy",
        "intra",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["strategy"], "intra");
    assert_eq!(summary["policy"], "majority");
}

#[test]
fn null_token_flag_treats_token_as_missing() {
    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    write(
        &dir.path().join("customer.csv"),
        "c_id,c_city,c_state\n1,Lyon,ARA\n2,Lyon,NULL\n",
    );
    let out_dir = dir.path().join("repaired");
    let out = run(&[
        "impute",
        schema.to_str().unwrap(),
        "--strategy",
        "intra",
        "--null-token",
        "NULL",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let repaired = std::fs::read_to_string(out_dir.join("customer.csv")).unwrap();
    assert!(repaired.contains("2,Lyon,ARA"), "repaired: {repaired}");
}

#[test]
fn gen_output_validates_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = run(&[
        "gen", "--levels", "4", "--fanout", "4,3,2", "--rows", "120",
        "--weak", "0,1,0,1", "--non-strict", "0.2", "--seed", "9",
        "--name", "geo", "--out", data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["validate", data.join("schema.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(data.join("geo.csv")).unwrap();
    assert_eq!(csv.lines().count(), 121);
    assert!(csv.starts_with("id,l1,l1_w1,l2,l3,l3_w1\n"), "header: {}", csv.lines().next().unwrap());
}

#[test]
fn alias_map_enables_non_lexical_link() {
    let dir = tempfile::tempdir().unwrap();
    let schema = fixture(dir.path());
    // rename the supplier state column so lexical matching fails
    write(
        &dir.path().join("supplier.csv"),
        "s_id,s_city,s_area\n10,Nantes,PDL\n11,Paris,IDF\n",
    );
    let reschema = std::fs::read_to_string(&schema)
        .unwrap()
        .replace("s_state", "s_area");
    write(&schema, &reschema);
    write(
        &dir.path().join("aliases.json"),
        r#"[{"dimension_a": "customer", "attribute_a": "c_state", "dimension_b": "supplier", "attribute_b": "s_area"}]"#,
    );

    let no_alias = dir.path().join("plain");
    let out = run(&[
        "impute", schema.to_str().unwrap(),
        "--strategy", "inter",
        "--out", no_alias.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(no_alias.join("summary.json")).unwrap())
            .unwrap();
    // c_state ~ s_area scores far below threshold: row 3 stays empty
    assert_eq!(summary["total_fills"], 0);

    let with_alias = dir.path().join("aliased");
    let out = run(&[
        "impute", schema.to_str().unwrap(),
        "--strategy", "inter",
        "--aliases", dir.path().join("aliases.json").to_str().unwrap(),
        "--out", with_alias.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let repaired = std::fs::read_to_string(with_alias.join("customer.csv")).unwrap();
    assert!(repaired.contains("3,Nantes,PDL"), "repaired: {repaired}");
}
