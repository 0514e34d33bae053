use mellipsoid::report::{Report, Value};
use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mellipsoid")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn structured(args: &[&str]) -> (Output, Report) {
    let mut all = args.to_vec();
    all.extend(["--format", "structured"]);
    let o = run(&all);
    let report = Report::parse_structured(&stdout(&o)).unwrap();
    (o, report)
}

fn float(r: &Report, section: &str, key: &str) -> f64 {
    match r.value(section, key) {
        Some(Value::Float(x)) => *x,
        other => panic!("{section}.{key}: {other:?}"),
    }
}

fn text<'a>(r: &'a Report, section: &str, key: &str) -> &'a str {
    match r.value(section, key) {
        Some(Value::Text(s)) => s,
        other => panic!("{section}.{key}: {other:?}"),
    }
}

#[test]
fn unit_disc_is_its_own_m_ellipsoid() {
    let (o, r) = structured(&["m-ellipsoid", "--body", &data("ball2.body")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(text(&r, "certificate", "verdict"), "PASS");
    match r.value("ellipsoid", "matrix") {
        Some(Value::Matrix(m)) => assert!((m - mellipsoid::linalg::Matrix::identity(2, 2)).amax() < 1e-9, "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn cube_volume_estimate() {
    let (o, r) = structured(&["volume", "--body", &data("cube3.body"), "--eps", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    let estimate = float(&r, "volume", "estimate");
    // The estimate lies in [vol, (1 + eps)^3 vol].
    assert!((8.0..=8.0 * 1.25f64.powi(3)).contains(&estimate), "{estimate}");
}

#[test]
fn structured_reports_round_trip() {
    let (o, r) = structured(&["svp", "--body", &data("ball2.body"), "--lattice", &data("hex.lattice")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(r.to_structured().unwrap(), stdout(&o));
}

#[test]
fn text_and_structured_agree_on_the_verdict() {
    let t = run(&["certify", "--body", &data("skewed.body")]);
    let (s, r) = structured(&["certify", "--body", &data("skewed.body")]);
    assert_eq!(t.status.code(), s.status.code());
    let verdict = text(&r, "certificate", "verdict");
    assert!(stdout(&t).contains(&format!("verdict: {verdict}")));
}

#[test]
fn malformed_body_is_a_parse_error() {
    let o = run(&["m-ellipsoid", "--body", &data("malformed.body")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["volume", "--body", &data("cube3.body")]).status.code(), Some(2));
    assert_eq!(run(&["volume", "--body", &data("cube3.body"), "--eps", "-1"]).status.code(), Some(2));
}

#[test]
fn asymmetric_volume_is_invalid_input() {
    let o = run(&["volume", "--body", &data("triangle.body"), "--eps", "0.5"]);
    assert_eq!(o.status.code(), Some(6));
    assert!(o.stdout.is_empty());
}

#[test]
fn missing_input_file() {
    let o = run(&["m-ellipsoid", "--body", &data("no-such.body")]);
    assert_eq!(o.status.code(), Some(66));
    assert!(o.stdout.is_empty());
}

#[test]
fn budget_exhaustion() {
    let o = run(&["volume", "--body", &data("cube3.body"), "--eps", "0.25", "--budget-cells", "100"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
}

#[test]
fn unwritable_output_path() {
    let o = run(&["m-ellipsoid", "--body", &data("ball2.body"), "--out", "/nonexistent-dir/report.txt"]);
    assert_eq!(o.status.code(), Some(73));
}

#[test]
fn out_file_matches_stdout() {
    let path: PathBuf = std::env::temp_dir().join(format!("mellipsoid-cli-{}.txt", std::process::id()));
    let args = ["enum", "--body", &data("cube2.body"), "--lattice", &data("z2.lattice"), "--center", "0.5,0"];
    let direct = run(&args);
    let mut with_out = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    with_out.extend(["--out", &p]);
    let o = run(&with_out);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
    std::fs::remove_file(&path).unwrap();
}
