//! End-to-end runs of the command-line driver through files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use qmano::cli::run_from;
use qmano::jsfamily::{pi_invariant, LocalData, MonodromyMatrix, Pair};
use qmano::C64;
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> i32 {
    run_from(std::iter::once("qmano").chain(args.iter().copied()))
}

fn write_json<T: serde::Serialize>(dir: &TempDir, name: &str, v: &T) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    p
}

fn read_value(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn reference_file(dir: &TempDir) -> PathBuf {
    write_json(dir, "local.json", &LocalData::reference())
}

fn complex_arg(z: C64) -> String {
    format!("{:.17},{:.17}", z.re, z.im)
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let local = reference_file(&dir);
    let out = dir.path().join("report.json");
    assert_eq!(run(&["--out", s(&out), "validate", s(&local)]), 0);
    let report = read_value(&out);
    assert_eq!(report["fr"], Value::Bool(true));
    assert_eq!(report["nr"], Value::Bool(true));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, b"{ \"q\": [0.5, ").unwrap();
    assert_eq!(run(&["validate", s(&bad)]), 2);

    let mut v = serde_json::to_value(LocalData::reference()).unwrap();
    v["sigma"][1] = serde_json::json!([7.0, 0.0]);
    let broken = write_json(&dir, "fr.json", &v);
    let out = dir.path().join("fr_report.json");
    assert_eq!(run(&["--out", s(&out), "validate", s(&broken)]), 1);
    assert_eq!(read_value(&out)["fr"], Value::Bool(false));
}

#[test]
fn missing_input_and_bad_pair_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let local = reference_file(&dir);
    assert_eq!(run(&["validate", s(&dir.path().join("absent.json"))]), 2);
    assert_eq!(run(&["pants", "--local", s(&local), "--pair", "1,1", "--xi", "0.7,0.1"]), 2);
    assert_eq!(run(&["pants", "--local", s(&local), "--xi", "nope"]), 2);
    assert_eq!(run(&["no-such-command"]), 2);
}

#[test]
fn pants_decompose_compose_round_trip() {
    let dir = TempDir::new().unwrap();
    let local = reference_file(&dir);
    let xi = C64::from_polar(0.7, 0.9);
    let pants = dir.path().join("pants.json");
    let code = run(&["--out", s(&pants), "pants", "--local", s(&local), "--pair", "1,2", "--xi", &complex_arg(xi), "--eta", "0.3,-1.1"]);
    assert_eq!(code, 0);
    let pv = read_value(&pants);
    assert_eq!(pv["chart"], "generic");
    let matrix = write_json(&dir, "matrix.json", &pv["matrix"]);

    let dec = dir.path().join("dec.json");
    assert_eq!(run(&["--out", s(&dec), "decompose", s(&matrix), "--pair", "1,2"]), 0);
    let dv = read_value(&dec);
    assert!(dv["chart"].is_object());
    let factors = write_json(&dir, "factors.json", &dv["factors"]);

    let comp = dir.path().join("comp.json");
    assert_eq!(run(&["--out", s(&comp), "compose", s(&factors)]), 0);
    let original: MonodromyMatrix = serde_json::from_value(pv["matrix"].clone()).unwrap();
    let back: MonodromyMatrix = serde_json::from_slice(&std::fs::read(&comp).unwrap()).unwrap();
    for x in [C64::new(0.63, 0.2), C64::new(-0.41, 0.77), C64::new(0.2, -0.9)] {
        let (a, b) = (original.eval(x).unwrap(), back.eval(x).unwrap());
        let scale = a.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - b[i][j]).norm() < 1e-7 * scale);
            }
        }
    }
    for p in Pair::all() {
        if let (Ok(u), Ok(v)) = (pi_invariant(&original, p), pi_invariant(&back, p)) {
            assert!(u.approx_eq(&v, 1e-7));
        }
    }
}

#[test]
fn special_xi_reports_lines() {
    let dir = TempDir::new().unwrap();
    let local = reference_file(&dir);
    let out = dir.path().join("special.json");
    let xi = complex_arg(C64::new(-1.0 / 1.2, 0.0));
    assert_eq!(run(&["--out", s(&out), "pants", "--local", s(&local), "--pair", "1,2", "--xi", &xi]), 0);
    let v = read_value(&out);
    assert_eq!(v["chart"], "special");
    assert!(!v["lines"].as_array().unwrap().is_empty());
    assert!(v["representative"]["matrix"].is_object());
}

#[test]
fn critical_xi_uses_logarithmic_chart() {
    let dir = TempDir::new().unwrap();
    let local = reference_file(&dir);
    let l = LocalData::reference();
    let ups = l.upsilon(Pair::new(0, 1).unwrap())[0].value;
    let out = dir.path().join("log.json");
    let code = run(&["--out", s(&out), "pants", "--local", s(&local), "--pair", "1,2", "--xi", &complex_arg(ups), "--eta", "0.4,-0.9"]);
    assert_eq!(code, 0);
    let v = read_value(&out);
    assert_eq!(v["chart"], "logarithmic");
    assert_eq!(v["y"], serde_json::json!([0.4, -0.9]));
}

#[test]
fn invariants_of_a_pants_matrix() {
    let dir = TempDir::new().unwrap();
    let local = reference_file(&dir);
    let pants = dir.path().join("pants.json");
    assert_eq!(run(&["--out", s(&pants), "pants", "--local", s(&local), "--xi", "0.55,0.4"]), 0);
    let matrix = write_json(&dir, "matrix.json", &read_value(&pants)["matrix"]);
    let out = dir.path().join("inv.json");
    assert_eq!(run(&["--out", s(&out), "invariants", s(&matrix)]), 0);
    let v = read_value(&out);
    assert_eq!(v["pairs"].as_array().unwrap().len(), 6);
}

#[test]
fn scan_twenty_by_twenty_within_budget() {
    let dir = TempDir::new().unwrap();
    let local = reference_file(&dir);
    let out = dir.path().join("scan.csv");
    let t = Instant::now();
    let code = run(&[
        "--format", "csv", "--out", s(&out), "scan", "--local", s(&local), "--xi-radii", "20", "--xi-args", "20",
    ]);
    let elapsed = t.elapsed().as_secs_f64();
    assert_eq!(code, 0);
    assert!(elapsed < 60.0, "{elapsed} s");
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(header.len(), 6 + 12 * 5 + 1);
    assert_eq!(rdr.records().count(), 400);
}

#[test]
fn scan_csv_matches_json() {
    let dir = TempDir::new().unwrap();
    let local = reference_file(&dir);
    let csv_out = dir.path().join("scan.csv");
    let json_out = dir.path().join("scan.json");
    let args = ["scan", "--local", s(&local), "--pair", "1,3", "--xi-radii", "3", "--xi-args", "4", "--eta-points", "2"];
    let with = |fmt: &str, out: &Path| {
        let mut v = vec!["--seed", "7", "--format", fmt, "--out", s(out)];
        v.extend(args);
        run(&v)
    };
    assert_eq!(with("csv", &csv_out), 0);
    assert_eq!(with("json", &json_out), 0);
    let rows = read_value(&json_out);
    let rows = rows.as_array().unwrap();
    let mut rdr = csv::Reader::from_path(&csv_out).unwrap();
    let header = rdr.headers().unwrap().clone();
    let records: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), rows.len());
    assert_eq!(rows.len(), 24);
    for (rec, obj) in records.iter().zip(rows) {
        for (k, cell) in header.iter().zip(rec.iter()) {
            assert_eq!(obj[k].as_str().unwrap(), cell, "column {k}");
        }
    }
}

#[test]
fn scan_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let local = reference_file(&dir);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        assert_eq!(run(&["--format", "csv", "--out", s(out), "scan", "--local", s(&local)]), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn fricke_lines_on_the_cayley_cubic() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("lines.json");
    assert_eq!(run(&["--out", s(&out), "fricke", "lines", "--e", "0,1;0,1;0,1;0,1"]), 0);
    assert_eq!(read_value(&out).as_array().unwrap().len(), 24);
    let csv_out = dir.path().join("lines.csv");
    assert_eq!(run(&["--format", "csv", "--out", s(&csv_out), "fricke", "lines", "--a", "0,0;0,0;0,0;0,0"]), 0);
    let mut rdr = csv::Reader::from_path(&csv_out).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 12);
    assert_eq!(rdr.records().count(), 24);
}

#[test]
fn fricke_jimbo_residuals_are_small() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("jimbo.csv");
    let e = "0.8,0.6;-0.28,0.96;0.6,-0.8;0.96,0.28";
    assert_eq!(run(&["--format", "csv", "--out", s(&out), "fricke", "jimbo", "--e", e, "--x1", "0.3,0.7"]), 0);
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == "residual").unwrap();
    let mut n = 0;
    for r in rdr.records() {
        let res: f64 = r.unwrap()[idx].parse().unwrap();
        assert!(res < 1e-9, "{res}");
        n += 1;
    }
    assert_eq!(n, 16);
}

#[test]
fn fricke_orbit_stays_on_the_surface() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("orbit.csv");
    let e = "0.8,0.6;-0.28,0.96;0.6,-0.8;0.96,0.28";
    assert_eq!(run(&["--seed", "3", "--format", "csv", "--out", s(&out), "fricke", "orbit", "--e", e, "--n", "40"]), 0);
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == "on_surface").unwrap();
    let flags: Vec<String> = rdr.records().map(|r| r.unwrap()[idx].to_string()).collect();
    assert!(flags.len() >= 40);
    assert!(flags.iter().all(|f| f == "true"));
}

#[test]
fn fricke_smooth_and_eval() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("smooth.json");
    assert_eq!(run(&["--out", s(&out), "fricke", "smooth", "--e", "0,1;0,1;0,1;0,1"]), 0);
    assert_eq!(read_value(&out)["smooth"], Value::Bool(false));
    let out = dir.path().join("eval.json");
    assert_eq!(run(&["--out", s(&out), "fricke", "eval", "--a", "0,0;0,0;0,0;0,0", "--x", "0,0;0,0;2,0"]), 0);
    assert_eq!(read_value(&out)["f"], serde_json::json!([0.0, 0.0]));
    assert_eq!(run(&["fricke", "eval", "--a", "0,0;0,0", "--x", "0,0;0,0;2,0"]), 2);
}
