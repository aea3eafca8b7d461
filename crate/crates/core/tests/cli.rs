use std::path::Path;

use greendiag::cli::{run, EXIT_INADMISSIBLE, EXIT_INPUT, EXIT_NOT_FOUND, EXIT_OK, EXIT_TOLERANCE};
use greendiag::oracle::VerificationReport;
use greendiag::solver::SolutionDocument;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn greendiag(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("greendiag").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn presets_are_listed() {
    let r = greendiag(&["presets"]);
    assert_eq!(r.code, EXIT_OK);
    for name in ["constant", "cn2-gap-1", "cn2-gap-2", "cn2-gap-3"] {
        assert!(r.stdout.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn solve_triple_gap() {
    let r = greendiag(&["solve", "--preset", "cn2-gap-3", "--param", "m=1", "--param", "k2=1/2"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let doc = SolutionDocument::from_json(&r.stdout).unwrap();
    assert_eq!(doc.n, 3);
    assert_eq!(doc.m, vec![3, 2, 1, 0]);
    assert_eq!(doc.sigma, -1);
    // emitted documents round-trip
    assert_eq!(doc.to_json().trim_end(), r.stdout.trim_end());
}

#[test]
fn solve_constant() {
    let r = greendiag(&["solve", "--preset", "constant", "--param", "u0=5"]);
    assert_eq!(r.code, EXIT_OK);
    let doc = SolutionDocument::from_json(&r.stdout).unwrap();
    assert_eq!(doc.p, vec![vec!["1".to_string()]]);
    assert_eq!(doc.q, vec!["5".to_string(), "-1".to_string()]);
}

#[test]
fn inadmissible_spec_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    std::fs::write(&spec, r#"{"w": ["0", "0", "0", "0", "1"], "u": ["0", "1"]}"#).unwrap();
    let r = greendiag(&["solve", "--spec", path(&spec)]);
    assert_eq!(r.code, EXIT_INADMISSIBLE);
    assert!(r.stderr.contains("K != L-1"), "{}", r.stderr);
}

#[test]
fn exhausted_search_exits_2_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("quartic.json");
    std::fs::write(&spec, r#"{"w": ["1", "0", "0", "0", "1"], "u": ["0", "1", "2"]}"#).unwrap();
    let r = greendiag(&["solve", "--spec", path(&spec), "--n-max", "3"]);
    assert_eq!(r.code, EXIT_NOT_FOUND);
    assert!(r.stderr.contains("N = 3"), "{}", r.stderr);
}

#[test]
fn malformed_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("junk.json");
    std::fs::write(&spec, "{ not json").unwrap();
    assert_eq!(greendiag(&["solve", "--spec", path(&spec)]).code, EXIT_INPUT);
    assert_eq!(greendiag(&["solve", "--preset", "cn2-gap-9"]).code, EXIT_INPUT);
    assert_eq!(greendiag(&["solve", "--preset", "constant", "--param", "u0=1/0"]).code, EXIT_INPUT);
    assert_eq!(greendiag(&["solve", "--preset", "constant", "--param", "m=1"]).code, EXIT_INPUT);
    assert_eq!(greendiag(&["solve"]).code, EXIT_INPUT);
    assert_eq!(greendiag(&["frobnicate"]).code, EXIT_INPUT);
}

#[test]
fn verify_triple_gap_and_negative_controls() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let report = dir.path().join("report.json");
    let csv = dir.path().join("grid.csv");
    let r = greendiag(&["solve", "--preset", "cn2-gap-3", "--out", path(&sol)]);
    assert_eq!(r.code, EXIT_OK);

    let r = greendiag(&[
        "verify", "--preset", "cn2-gap-3", "--solution", path(&sol), "--out", path(&report), "--csv",
        path(&csv),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let parsed = VerificationReport::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(parsed.summary.max_abs_disagreement <= 1e-8);
    assert_eq!(parsed.to_json().trim_end(), std::fs::read_to_string(&report).unwrap().trim_end());
    let grid = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(grid.lines().next(), Some("x,p,G_closed,G_floquet,residual3"));
    assert_eq!(grid.lines().count(), parsed.points.len() + 1);

    // corrupted coefficient: the report is written and the exit code flags it
    let mut doc = SolutionDocument::from_json(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    doc.q[0] = "1".into();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, doc.to_json()).unwrap();
    let bad_report = dir.path().join("bad-report.json");
    let r = greendiag(&["verify", "--preset", "cn2-gap-3", "--solution", path(&bad), "--out", path(&bad_report)]);
    assert_eq!(r.code, EXIT_TOLERANCE);
    assert!(r.stderr.contains("FAIL exact_residual"));
    let parsed = VerificationReport::from_json(&std::fs::read_to_string(&bad_report).unwrap()).unwrap();
    assert!(!parsed.summary.passed);

    // solution produced for other parameters
    let r = greendiag(&["verify", "--preset", "cn2-gap-3", "--param", "k2=1/4", "--solution", path(&sol)]);
    assert_eq!(r.code, EXIT_INPUT);
    assert!(r.stderr.contains("hash mismatch"));
}

#[test]
fn tolerance_flags() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    greendiag(&["solve", "--preset", "cn2-gap-1", "--out", path(&sol)]);
    let base = ["verify", "--preset", "cn2-gap-1", "--solution", path(&sol), "--p", "-4,-0.2"];
    let mut strict = base.to_vec();
    strict.extend(["--tol", "residual3=1e-20"]);
    assert_eq!(greendiag(&strict).code, EXIT_TOLERANCE);
    let mut unknown = base.to_vec();
    unknown.extend(["--tol", "speed=1"]);
    assert_eq!(greendiag(&unknown).code, EXIT_INPUT);
    assert_eq!(greendiag(&base).code, EXIT_OK);
}

#[test]
fn eval_constant_and_band_flags() {
    let r = greendiag(&["eval", "--preset", "constant", "--param", "u0=5", "--p", "1", "--x", "0,1"]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.stdout, "x,p,G,flag\n0,1,0.25,\n1,1,0.25,\n");

    // -3.9 lies in the lowest band of the triple-gap potential
    let r = greendiag(&["eval", "--preset", "cn2-gap-3", "--p", "-3.9", "--x", "0,0.5"]);
    assert_eq!(r.code, EXIT_OK);
    let rows: Vec<&str> = r.stdout.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|l| l.ends_with(",,branch")));
}

#[test]
fn eval_is_periodic() {
    // two periods of cn²(x; 1/2), 2K = 3.7081493546027438
    let r = greendiag(&["eval", "--preset", "cn2-gap-3", "--p", "-10,0.5", "--x-range", "0:7.4162987092054876:17"]);
    assert_eq!(r.code, EXIT_OK);
    let g: Vec<f64> = r
        .stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(g.len(), 34);
    for row in g.chunks(17) {
        for i in 0..8 {
            assert!((row[i] - row[i + 8]).abs() <= 1e-9);
        }
    }
}

#[test]
fn bands_and_latex() {
    let r = greendiag(&["bands", "--preset", "cn2-gap-1"]);
    assert_eq!(r.code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["expected"], 3);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);

    let r = greendiag(&["latex", "--preset", "cn2-gap-1"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.starts_with("\\begin{align*}"));
}

#[test]
fn identical_invocations_are_identical() {
    let a = greendiag(&["eval", "--preset", "cn2-gap-2", "--p", "-7,1.2", "--x-range", "0:3:31"]);
    let b = greendiag(&["eval", "--preset", "cn2-gap-2", "--p", "-7,1.2", "--x-range", "0:3:31"]);
    assert_eq!(a.stdout, b.stdout);

    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    greendiag(&["solve", "--preset", "cn2-gap-2", "--out", path(&sol)]);
    let v1 = greendiag(&["verify", "--preset", "cn2-gap-2", "--solution", path(&sol)]);
    let v2 = greendiag(&["verify", "--preset", "cn2-gap-2", "--solution", path(&sol)]);
    assert_eq!(v1.code, EXIT_OK);
    assert_eq!(v1.stdout, v2.stdout);
}
