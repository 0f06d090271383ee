use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seifert-wrt")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn radial_reports_tau_limit_and_residual() {
    let out = run(&["radial", "--loop", "2/1,3/1,5/-4", "--K", "5", "--N", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["result"]["tau"].is_string());
    assert!(v["result"]["limit"].is_string());
    assert!(v["result"]["residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["result"]["samples"].as_array().unwrap().len(), 8);
}

#[test]
fn apoly_prints_factored_polynomial() {
    let out = run(&["apoly", "--loop", "2/1,3/1,5/-4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["factored"], "(l - 1)(l - m^-30)(l + m^-30)");
}

#[test]
fn level_one_is_a_usage_error() {
    let out = run(&["tau", "--loop", "2/1,3/1,5/-4", "--K", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("K must be ≥ 2"));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["frobnicate"][..],
        &["tau", "--loop", "2/1,3/x"],
        &["tau", "--loop", "2/1,4/1"],
        &["median", "--kappa", "6-2j"],
        &["tau", "--N", "0"],
        &["radial", "--t0", "-1/8"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn failed_verification_exits_one_with_residuals() {
    let out = run(&["radial", "--K", "3", "--tol", "1e-40"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["pass"], false);
    let row = &v["checks"][0]["rows"][0];
    assert!(row["residual"].as_f64().unwrap() > 1e-40);
    assert_eq!(row["pass"], false);
}

#[test]
fn reports_embed_config_and_version() {
    let v = json(&run(&["constants", "--loop", "2/1,3/-1,7/-1", "--precision-bits", "192"]));
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["command"], "constants");
    assert_eq!(v["config"]["loop"], "2/1,3/-1,7/-1");
    assert_eq!(v["config"]["precision_bits"], 192);
    assert_eq!(v["config"]["N"], 1);
    assert_eq!(v["config"]["format"], "json");

    let m = json(&run(&["stokes", "--loop", "2/1,3/-1", "--m-max", "3"]));
    assert_eq!(m["config"]["kappa"], "6-2i");
    assert_eq!(m["config"]["delta"], 0.2);
    assert_eq!(m["config"]["m_max"], 3);
    assert_eq!(m["config"]["tol"], 1e-6);
}

#[test]
fn identical_inputs_give_identical_bytes() {
    for args in [
        &["constants"][..],
        &["tau", "--K", "7", "--N", "2"],
        &["borel", "--loop", "2/1,3/1,5/-2,7/-3", "--m-max", "5", "--format", "csv"],
        &["phi", "--N", "2", "--format", "csv"],
    ] {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["appendix", "--K", "6"];
    let free = run(&args);
    let capped = Command::new(env!("CARGO_BIN_EXE_seifert-wrt"))
        .args(args)
        .env("SEIFERT_WRT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(0));
    assert_eq!(free.stdout, capped.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_seifert-wrt")).arg("tau").env("SEIFERT_WRT_THREADS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn out_flag_writes_the_same_report() {
    let dir = std::env::temp_dir().join(format!("seifert-wrt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("tau.json");
    let stdout = run(&["tau", "--K", "4"]);
    let file = run(&["tau", "--K", "4", "--out", path.to_str().unwrap()]);
    assert!(file.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    let mut a = json(&stdout);
    let mut b: Value = serde_json::from_slice(&written).unwrap();
    // only the recorded output path differs
    a["config"]["out"] = Value::Null;
    b["config"]["out"] = Value::Null;
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn csv_has_header_comments_and_documented_columns() {
    let out = run(&["phi", "--loop", "2/1,3/-1", "--N", "2", "--cutoff", "120", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# seifert-wrt "));
    assert!(lines.next().unwrap().starts_with("# config {"));
    assert_eq!(lines.next().unwrap(), "# pass true");
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["exponent_num", "exponent_den", "coeff_num", "coeff_den"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(&rows[0][0], "-9");
    assert_eq!(&rows[0][1], "2");
    assert_eq!(&rows[0][2], "-1");
}

#[test]
fn exact_commands_pass() {
    for args in [
        &["qdiff", "--loop", "2/1,3/-1,7/-1", "--N", "2"][..],
        &["qdiff", "--loop", "2/1,3/-1", "--N", "3"],
        &["apoly", "--loop", "2/1,3/-1"],
        &["appendix", "--loop", "2/1,3/-1,7/-1", "--K", "5"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["pass"], true);
    }
}

#[test]
fn borel_sum_matches_partial_sum_at_large_kappa() {
    let out = run(&["pert", "--kappa", "100", "--m-max", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["coefficients"].as_array().unwrap().len(), 7);
    assert_eq!(v["checks"][0]["pass"], true);
}

#[test]
fn help_documents_csv_columns() {
    let out = run(&["borel", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("CSV columns: m,omega,order,residue,principal"));
}
