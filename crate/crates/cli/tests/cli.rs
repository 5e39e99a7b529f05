use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyptri"))
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn hyptri")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn value_of<'t>(text: &'t str, key: &str) -> &'t str {
    let prefix = format!("{key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no line {key:?} in:\n{text}"))
}

fn float_of(text: &str, key: &str) -> f64 {
    value_of(text, key).trim().parse().expect("float value")
}

fn complex_of(text: &str, key: &str) -> (f64, f64) {
    let (re, im) = value_of(text, key).split_once(',').expect("re,im");
    (re.parse().expect("re"), im.parse().expect("im"))
}

#[test]
fn validate_reports_counts_and_identities() {
    let out = run(&["validate", &fixture("compact2.tri")]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(value_of(&text, "t"), "2");
    assert_eq!(value_of(&text, "k"), "0");
    assert_eq!(value_of(&text, "identity"), "equations 12 = dim W 12");

    let out = run(&["validate", &fixture("cusped3.tri")]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(value_of(&text, "identity"), "equations 14 = dim W - 2k = 16 - 2");
    assert_eq!(value_of(&text, "boundary[0].euler"), "-2");
}

#[test]
fn validate_rejects_malformed_input_with_the_line_number() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("bad.tri");
    std::fs::write(&path, "format 1\ntets 1\nwat\n").expect("write");
    let out = run(&["validate", path.to_str().expect("path")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "stderr: {}", stderr(&out));
}

#[test]
fn missing_file_is_a_validation_failure() {
    let out = run(&["solve", "/nonexistent/thing.tri"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_prints_the_regular_point_deterministically() {
    let out = run(&["solve", &fixture("compact2.tri")]);
    assert!(out.status.success());
    let text = stdout(&out);
    for i in 0..12 {
        assert_eq!(
            value_of(&text, &format!("angle[{i}]")),
            "5.2359877559829882e-1"
        );
    }
    assert!(float_of(&text, "residual") <= 1e-11);
    assert!(!text.contains("cusp["));
    let again = run(&["solve", &fixture("compact2.tri")]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn reports_round_trip_as_initial_points() {
    let dir = tempfile::tempdir().expect("tempdir");
    let report = dir.path().join("report.txt");
    let out = run(&["solve", &fixture("cusped3.tri")]);
    assert!(out.status.success());
    std::fs::write(&report, &out.stdout).expect("write report");

    let again = run(&[
        "solve",
        &fixture("cusped3.tri"),
        "--init",
        report.to_str().expect("path"),
    ]);
    assert!(again.status.success());
    let first = stdout(&out);
    let text = stdout(&again);
    let iterations: usize = value_of(&text, "iterations").parse().expect("int");
    assert!(iterations <= 2, "took {iterations} iterations from its own report");
    for i in 0..18 {
        let key = format!("angle[{i}]");
        let a: f64 = float_of(&first, &key);
        let b: f64 = float_of(&text, &key);
        assert!((a - b).abs() <= 1e-12, "{key}: {a} vs {b}");
    }
}

#[test]
fn deform_reaches_the_requested_translation() {
    let out = run(&["deform", &fixture("cusped3.tri"), "--u", "0.1,0.05"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let (re, im) = complex_of(&text, "cusp[0].u");
    assert!((re - 0.1).abs() <= 1e-9 && (im - 0.05).abs() <= 1e-9);
    // A deformed point carries finite filling coefficients.
    assert_ne!(value_of(&text, "cusp[0].filling"), "inf");
}

#[test]
fn fill_solves_and_round_trips_its_coefficients() {
    let out = run(&["fill", &fixture("cusped3.tri"), "--coeffs", "1,2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let (p, q) = complex_of(&text, "cusp[0].filling");
    assert!((p - 1.0).abs() <= 1e-6 && (q - 2.0).abs() <= 1e-6, "({p}, {q})");
    assert!(float_of(&text, "cusp[0].filling_residual") <= 1e-9);
}

#[test]
fn fill_inf_echoes_the_complete_point() {
    let complete = run(&["solve", &fixture("cusped3.tri")]);
    let filled = run(&["fill", &fixture("cusped3.tri"), "--coeffs", "inf"]);
    assert!(filled.status.success());
    let a = stdout(&complete);
    let b = stdout(&filled);
    for i in 0..18 {
        let key = format!("angle[{i}]");
        assert_eq!(value_of(&a, &key), value_of(&b, &key));
    }
    assert_eq!(value_of(&b, "cusp[0].filling"), "inf");
}

#[test]
fn fill_sweep_lists_every_slope() {
    let out = run(&[
        "fill",
        &fixture("cusped3.tri"),
        "--box",
        "2",
        "--max-iter",
        "40",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(value_of(&text, "sweep.targets"), "8");
    assert_eq!(value_of(&text, "slope[1,2].status"), "solved");
    assert_eq!(value_of(&text, "slope[1,0].status"), "failed");
}

#[test]
fn cone_prescribes_compact_angle_sums() {
    let out = run(&[
        "cone",
        &fixture("compact2.tri"),
        "--angles",
        "5.8",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!((float_of(&text, "class[0].angle_sum") - 5.8).abs() <= 1e-10);

    let out = run(&["cone", &fixture("cusped3.tri"), "--angles", "5.8"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rank_certifies_the_tangent_space() {
    let out = run(&["rank", &fixture("cusped3.tri")]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(value_of(&text, "nullity"), "2");
    assert!(float_of(&text, "gap_ratio") > 1e3);
    assert!(float_of(&text, "full_system.rel_min_sv") > 1e-8);
    assert!(float_of(&text, "du.condition") < 1e6);
}

#[test]
fn rigidity_reports_flat_members_with_quartic_tails() {
    let out = run(&["rigidity", &fixture("cusped3.tri")]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(float_of(&text, "max_first_derivative") <= 1e-6);
    assert_eq!(value_of(&text, "flat_members"), "0");
    let mut orders = 0;
    for line in text.lines() {
        if let Some((key, val)) = line.split_once(" = ") {
            if key.starts_with("member[") && key.ends_with(".order") {
                let o: f64 = val.parse().expect("order");
                assert!((3.5..=4.5).contains(&o), "{line}");
                orders += 1;
            }
        }
    }
    assert_eq!(orders, 25);

    let out = run(&["rigidity", &fixture("compact2.tri")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no tangent directions"));
}

#[test]
fn tau_prints_the_extrapolated_shape() {
    let out = run(&["tau", &fixture("cusped3.tri")]);
    assert!(out.status.success());
    let (re, im) = complex_of(&stdout(&out), "tau");
    assert!((re - 0.5).abs() <= 1e-5 && (im - 0.8660254).abs() <= 1e-4);
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["deform", &fixture("cusped3.tri"), "--u", "0.1,0;0.2,0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["fill", &fixture("cusped3.tri")]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["solve", &fixture("cusped3.tri"), "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn nonconvergence_exits_three() {
    // The (1, 0) slope is shorter than the filling threshold and stalls.
    let out = run(&[
        "fill",
        &fixture("cusped3.tri"),
        "--coeffs",
        "1,0",
        "--max-iter",
        "40",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn enumerate_writes_parseable_files() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = run(&[
        "enumerate",
        "--max-tets",
        "2",
        "--out",
        dir.path().to_str().expect("path"),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(value_of(&text, "found"), "15");
    let written = dir.path().join("enum_0000.tri");
    let out = run(&["validate", written.to_str().expect("path")]);
    assert!(out.status.success());
}
