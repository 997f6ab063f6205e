use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const CIRCLE_LINE: &str = "# circle meets line\nvariables: x y\nx^2 + y^2 - 1\n3*x - 2*y\n";

const PENCIL: &str = "\
n: 3
2 0.5 -0.3
0.5 1 0.2
-0.3 0.2 1.5

1 0.4 0
0.4 -1 0.7
0 0.7 0.3

-0.6 0 1
0 0.8 -0.2
1 -0.2 0.5

0.3 -1 0.2
-1 0.4 0
0.2 0 -0.9
";

fn hcont(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcont")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn circle_line_has_two_real_solutions() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "circle.sys", CIRCLE_LINE);
    let json = stdout_json(&hcont(&["solve", arg(&file), "--seed", "7"]));
    assert_eq!(json["n_paths"], 2);
    assert_eq!(json["n_failed"], 0);
    assert_eq!(json["seed"], 7);
    let sols = json["solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 2);
    let (a, b) = (2.0 / 13f64.sqrt(), 3.0 / 13f64.sqrt());
    for s in sols {
        assert_eq!(s["is_real"], true);
        assert_eq!(s["at_infinity"], false);
        let (x, _) = complex(&s["x"][0]);
        let (y, _) = complex(&s["x"][1]);
        assert!((x.abs() - a).abs() < 1e-9 && (y.abs() - b).abs() < 1e-9, "{x} {y}");
        assert!(x * y > 0.0);
    }
}

#[test]
fn output_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "circle.sys", CIRCLE_LINE);
    let target = dir.path().join("out.json");
    let out = hcont(&["solve", arg(&file), "--output", arg(&target)]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(json["solutions"].as_array().unwrap().len(), 2);
}

#[test]
fn parse_error_exits_with_two_and_names_the_line() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "bad.sys", "variables: x y\nx^2 + y^2 - 1\n3*x - * y\n");
    let out = hcont(&["solve", arg(&file)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3"), "{msg}");
}

#[test]
fn missing_file_exits_with_two() {
    let out = hcont(&["solve", "/nonexistent/system.sys"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_square_system_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "tall.sys", "variables: x y\nx + y\nx - y\nx*y - 1\n");
    let out = hcont(&["solve", arg(&file)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("3 polynomials in 2 variables"));
}

fn without_runtime(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("runtime_seconds");
    v
}

#[test]
fn fixed_seed_single_thread_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "sys.sys", "variables: x y\nx^3 - 2*x*y + y^2 - 1\nx^2 + y^2 - 4\n");
    let args = ["solve", arg(&file), "--seed", "42", "--threads", "1"];
    let first = stdout_json(&hcont(&args));
    let second = stdout_json(&hcont(&args));
    assert_eq!(
        serde_json::to_string(&without_runtime(first)).unwrap(),
        serde_json::to_string(&without_runtime(second)).unwrap()
    );
}

#[test]
fn json_round_trip_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "circle.sys", CIRCLE_LINE);
    let out = hcont(&["solve", arg(&file)]);
    let once = stdout_json(&out);
    let text = serde_json::to_string_pretty(&once).unwrap();
    let twice: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(once, twice);
    assert_eq!(text, serde_json::to_string_pretty(&twice).unwrap());
}

#[test]
fn no_endgame_flag_still_solves_regular_systems() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "circle.sys", CIRCLE_LINE);
    let json = stdout_json(&hcont(&["solve", arg(&file), "--no-endgame", "--tol", "1e-10"]));
    assert_eq!(json["solutions"].as_array().unwrap().len(), 2);
}

#[test]
fn bench_reports_verdict() {
    let out = hcont(&["bench", "cyclic4"]);
    // cyclic4 has no reference counts, so the run never fails
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().any(|l| l.starts_with("cyclic4")), "{text}");
    assert_eq!(hcont(&["bench", "nosuch"]).status.code(), Some(2));
}

fn singular_points(dir: &TempDir) -> (PathBuf, PathBuf) {
    let pencil = write(dir, "pencil.txt", PENCIL);
    let out = hcont(&["singular-points", arg(&pencil), "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let starts = write(dir, "starts.txt", &String::from_utf8(out.stdout).unwrap());
    (pencil, starts)
}

fn parse_starts(path: &Path) -> Vec<Vec<(f64, f64)>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let nums: Vec<f64> = l.split_whitespace().map(|w| w.parse().unwrap()).collect();
            nums.chunks(2).map(|c| (c[0], c[1])).collect()
        })
        .collect()
}

/// Whether two complex vectors span the same line.
fn same_point(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    let (i, _) = a
        .iter()
        .enumerate()
        .max_by(|x, y| x.1 .0.hypot(x.1 .1).total_cmp(&y.1 .0.hypot(y.1 .1)))
        .unwrap();
    let div = |p: (f64, f64), q: (f64, f64)| {
        let d = q.0 * q.0 + q.1 * q.1;
        ((p.0 * q.0 + p.1 * q.1) / d, (p.1 * q.0 - p.0 * q.1) / d)
    };
    let scale = div(b[i], a[i]);
    a.iter().zip(b).all(|(&p, &q)| {
        let sp = (p.0 * scale.0 - p.1 * scale.1, p.0 * scale.1 + p.1 * scale.0);
        (sp.0 - q.0).hypot(sp.1 - q.1) <= 1e-7 * (1.0 + q.0.hypot(q.1))
    })
}

#[test]
fn dethom_with_equal_pencils_keeps_the_starts() {
    let dir = TempDir::new().unwrap();
    let (pencil, starts) = singular_points(&dir);
    let points = parse_starts(&starts);
    assert_eq!(points.len(), 4);
    let json = stdout_json(&hcont(&["dethom", arg(&pencil), arg(&pencil), arg(&starts), "--threads", "1"]));
    assert_eq!(json["n_paths"], 4);
    assert_eq!(json["n_failed"], 0);
    let sols = json["solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 4);
    for s in sols {
        let x: Vec<(f64, f64)> = s["x"].as_array().unwrap().iter().map(complex).collect();
        assert!(points.iter().any(|p| same_point(p, &x)), "{x:?}");
        assert_eq!(s["on_spectrahedron"].is_null(), s["is_real"] == false);
    }
}

#[test]
fn dethom_reports_bad_starts_as_failures() {
    let dir = TempDir::new().unwrap();
    let (pencil, _) = singular_points(&dir);
    let starts = write(&dir, "bad.txt", "# not singular\n1 0 1 0 1 0 1 0\n");
    let json = stdout_json(&hcont(&["dethom", arg(&pencil), arg(&pencil), arg(&starts)]));
    assert_eq!(json["n_paths"], 1);
    assert_eq!(json["n_failed"], 1);
    assert_eq!(json["solutions"].as_array().unwrap().len(), 0);
    assert_eq!(json["failed_paths"][0]["path_index"], 0);
}

#[test]
fn dethom_input_errors() {
    let dir = TempDir::new().unwrap();
    let (pencil, _) = singular_points(&dir);
    let asym = write(&dir, "asym.txt", &PENCIL.replacen("2 0.5 -0.3", "2 0.6 -0.3", 1));
    let starts = write(&dir, "s.txt", "1 0 1 0 1 0\n");
    let good = write(&dir, "g.txt", "1 0 0 0 0 0 0 0\n");
    assert_eq!(hcont(&["dethom", arg(&asym), arg(&pencil), arg(&good)]).status.code(), Some(2));
    let out = hcont(&["dethom", arg(&pencil), arg(&pencil), arg(&starts)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}
