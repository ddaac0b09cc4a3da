use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_equinox"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn solve_then_check(name: &str) {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle.json");
    let out = run(bin()
        .arg("solve")
        .arg(scenario(name))
        .arg("-o")
        .arg(&bundle));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = run(bin().arg("check").arg(scenario(name)).arg(&bundle));
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}

#[test]
fn e1_solves_and_checks() {
    solve_then_check("e1.json");
}

#[test]
fn e2_solves_and_checks() {
    solve_then_check("e2.json");
}

#[test]
fn three_goods_solves_and_checks() {
    solve_then_check("three_goods.json");
}

#[test]
fn e1_certificate_has_the_known_price() {
    let out = run(bin().arg("solve").arg(scenario("e1.json")));
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let p: Vec<f64> = serde_json::from_value(v["certificate"]["price"].clone()).unwrap();
    assert!(
        (p[0] - 5.0).abs() < 1e-2 && (p[1] - 5.0).abs() < 1e-2,
        "{p:?}"
    );
    assert!(v["timing"]["solve_ms"].as_f64().is_some());
}

#[test]
fn tampered_certificate_names_the_clause() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle.json");
    let out = run(bin()
        .arg("solve")
        .arg(scenario("e1.json"))
        .arg("-o")
        .arg(&bundle));
    assert_eq!(out.status.code(), Some(0));
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&bundle).unwrap()).unwrap();
    v["certificate"]["price"] = serde_json::json!([6.0, 6.0]);
    std::fs::write(&bundle, v.to_string()).unwrap();
    let out = run(bin().arg("check").arg(scenario("e1.json")).arg(&bundle));
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stdout(&out).contains("FAIL normalization"),
        "{}",
        stdout(&out)
    );
    assert!(stderr(&out).contains("normalization"));
}

#[test]
fn unknown_key_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = std::fs::read_to_string(scenario("e1.json")).unwrap();
    std::fs::write(
        &path,
        text.replacen("\"schema\": 1,", "\"schema\": 1, \"colour\": 2,", 1),
    )
    .unwrap();
    let out = run(bin().arg("validate").arg(&path));
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));
}

#[test]
fn missing_file_and_bad_usage_exit_4() {
    let out = run(bin().arg("validate").arg("/nonexistent/x.json"));
    assert_eq!(out.status.code(), Some(4));
    let out = run(bin().arg("solve"));
    assert_eq!(out.status.code(), Some(4));
    let out = run(bin().arg("--help"));
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unpointed_cone_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.json");
    let text = std::fs::read_to_string(scenario("e1.json")).unwrap();
    let text = text.replace(
        "[[-1.0, 1.0], [0.0, -1.0], [-1.0, 0.0]]",
        "[[1.0, 0.0], [-1.0, 0.0], [0.0, -1.0]]",
    );
    std::fs::write(&path, text).unwrap();
    let out = run(bin().arg("validate").arg(&path));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = run(bin().arg("solve").arg(&path));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_passes_e1() {
    let out = run(bin().arg("validate").arg(scenario("e1.json")));
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["pointedness"]["pointed"], true);
}

#[test]
fn ivt_finds_the_midpoint_root() {
    let out = run(bin().args(["ivt", "--function=-1,2", "--epsilon", "1e-6"]));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let x: f64 = stdout(&out).trim().parse().unwrap();
    assert!((2.0 * x - 1.0).abs() <= 1e-6, "{x}");
}

#[test]
fn sweep_writes_the_table() {
    let out = run(bin()
        .arg("sweep")
        .arg(scenario("e1.json"))
        .args(["--eps0", "0.1", "-k", "2"]));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("n,epsilon,p_1,p_2,p_dot_eta,dist_eta_Y,price_step")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].ends_with(','));
    assert!(rows[2].starts_with("2,0.025,"));
}

#[test]
fn sweep_rejects_long_sequences() {
    let out = run(bin()
        .arg("sweep")
        .arg(scenario("e1.json"))
        .args(["-k", "13"]));
    assert_eq!(out.status.code(), Some(4));
}
