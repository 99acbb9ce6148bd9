use cellca::io::{read_table_str, ReadOptions, SolutionDocument};
use cellca::{fit_ca, reconstitute, CellSet, ReconstitutionConfig};
use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn cellca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellca"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn sigma(v: &Value) -> Vec<f64> {
    v["sigma"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_f64().unwrap())
        .collect()
}

#[test]
fn fit_car() {
    let car = data("car.csv");
    let v = stdout_json(&cellca(&["fit", "-i", car.to_str().unwrap()]));
    let s = sigma(&v);
    assert!((s[0] - 0.335479769387).abs() < 1e-9);
    assert!((s[1] - 0.280577793633).abs() < 1e-9);
    assert!(v.get("diagnostics").is_none());
}

#[test]
fn fit_output_matches_library() {
    let car = data("car.csv");
    let out = cellca(&["fit", "-i", car.to_str().unwrap()]);
    let t = read_table_str(
        &std::fs::read_to_string(&car).unwrap(),
        &ReadOptions::default(),
    )
    .unwrap();
    let expected = SolutionDocument::new(&t, &fit_ca(&t).unwrap()).to_json();
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim_end(), expected);
}

#[test]
fn reconstitute_car_cell() {
    let car = data("car.csv");
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("out.json");
    let out = cellca(&[
        "reconstitute",
        "-i",
        car.to_str().unwrap(),
        "--cell",
        "Volvo:Safety",
        "--order",
        "2",
        "-o",
        dest.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&dest).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let value = v["reconstitution"]["cells"][0]["value"].as_f64().unwrap();
    assert!((value - 27.009256958602993).abs() < 1e-6);
    let s = sigma(&v);
    assert!(
        (s[0] - 0.334).abs() < 5e-4 && (s[1] - 0.186).abs() < 5e-4,
        "{s:?}"
    );

    let t = read_table_str(
        &std::fs::read_to_string(&car).unwrap(),
        &ReadOptions::default(),
    )
    .unwrap();
    let cells = CellSet::from_labels(&t, &[("Volvo", "Safety")]).unwrap();
    let res = reconstitute(&t, &cells, &ReconstitutionConfig::with_order(2)).unwrap();
    assert_eq!(
        text.trim_end(),
        SolutionDocument::from_reconstitution(&res).to_json()
    );
}

#[test]
fn negative_imputation_exits_one() {
    let ocean = data("ocean.csv");
    let out = cellca(&[
        "reconstitute",
        "-i",
        ocean.to_str().unwrap(),
        "--cell",
        "17:Resp.C.I",
        "--cell",
        "59:Resp.C.I",
        "--negative-policy",
        "error",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "NegativeImputation");
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = cellca(&["fit", "-i", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "ParseError");

    let car = data("car.csv");
    let out = cellca(&[
        "reconstitute",
        "-i",
        car.to_str().unwrap(),
        "--cell",
        "Yugo:Safety",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "UnknownLabel");

    let out = cellca(&["fit", "-i", car.to_str().unwrap(), "--format", "pdf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn supplementary_from_cell() {
    let car = data("car.csv");
    let v = stdout_json(&cellca(&[
        "supplementary",
        "-i",
        car.to_str().unwrap(),
        "--cell",
        "Volvo:Safety",
    ]));
    let s = sigma(&v);
    assert!((s[0] - 0.349748882566).abs() < 1e-9);
    assert!(v["supplementary"]["rows"]["Volvo"].is_array());
}

#[test]
fn diagnose_and_render() {
    let car = data("car.csv");
    let out = cellca(&["diagnose", "-i", car.to_str().unwrap(), "--top", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Volvo") && text.contains("Safety"));

    let out = cellca(&[
        "render",
        "-i",
        car.to_str().unwrap(),
        "--kind",
        "asymmetric_row",
        "--dims",
        "1,3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let svg = String::from_utf8(out.stdout).unwrap();
    assert!(svg.contains("<svg") && svg.contains("Dim 3"));
}
