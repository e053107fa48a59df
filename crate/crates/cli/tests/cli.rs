//! Command contracts exercised through the built binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use modalmatrix::mvd::read_mvd_path;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modalmatrix"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let o = run(args, dir);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

fn report_value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in report:\n{report}"))
        .to_string()
}

#[test]
fn generate_writes_labelled_reproducible_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "generate",
        "--preset",
        "two-balanced",
        "--n",
        "200",
        "--rho",
        "1",
        "--sigma",
        "1",
        "--seed",
        "7",
        "-o",
    ];
    let summary = ok(&[&args[..], &["d.mvd"]].concat(), d);
    assert!(summary.contains("N=200 P=5 T=5"), "{summary}");
    ok(&[&args[..], &["e.mvd"]].concat(), d);
    let file = read_mvd_path(d.join("d.mvd")).unwrap();
    assert_eq!(file.data.len(), 200);
    assert_eq!(file.labels.as_ref().map(Vec::len), Some(200));
    assert_eq!(
        fs::read(d.join("d.mvd")).unwrap(),
        fs::read(d.join("e.mvd")).unwrap()
    );
}

#[test]
fn generate_from_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("gen.conf"),
        "preset = single\nn = 30\np = 2\nt = 3\nrho = 0\nseed = 5\n",
    )
    .unwrap();
    ok(
        &["generate", "--config", "gen.conf", "--n", "12", "-o", "x.mvd"],
        d,
    );
    let file = read_mvd_path(d.join("x.mvd")).unwrap();
    assert_eq!(file.data.len(), 12);
    assert_eq!(file.data.shape(), (2, 3));
    // rho = 0: every row is the prototype
    assert!(file.data.iter().all(|x| x == file.data.get(0)));
    fs::write(d.join("bad.conf"), "preset = single\nwhat = 1\n").unwrap();
    assert_eq!(
        run(&["generate", "--config", "bad.conf", "-o", "y.mvd"], d)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn cluster_two_balanced_reports_two_modes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "generate",
            "--preset",
            "two-balanced",
            "--n",
            "200",
            "--seed",
            "3",
            "-o",
            "d.mvd",
        ],
        d,
    );
    let report = ok(
        &[
            "cluster",
            "d.mvd",
            "--estimator",
            "balloon",
            "--k",
            "auto5",
            "--report",
            "r.txt",
        ],
        d,
    );
    assert_eq!(report_value(&report, "M"), "2");
    assert_eq!(report_value(&report, "k"), "71");
    assert!(report_value(&report, "wall_seconds").parse::<f64>().is_ok());
    assert_eq!(fs::read_to_string(d.join("r.txt")).unwrap(), report);
    let labels = fs::read_to_string(d.join("d.mvd.labels")).unwrap();
    assert_eq!(labels.lines().count(), 200);
    let modes = read_mvd_path(d.join("d.mvd.modes.mvd")).unwrap();
    assert_eq!(modes.data.len(), 2);
}

#[test]
fn cluster_standardized_modes_are_in_original_units() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("s.mvd"),
        "mvd 1 6 1 1\n100\n100.1\n100.2\n200\n200.1\n200.2\n",
    )
    .unwrap();
    let report = ok(
        &[
            "cluster",
            "s.mvd",
            "--estimator",
            "fixed",
            "--h",
            "0.3",
            "--standardize",
            "--modes",
            "m.mvd",
            "--labels",
            "l.txt",
        ],
        d,
    );
    assert_eq!(report_value(&report, "M"), "2");
    let modes = read_mvd_path(d.join("m.mvd")).unwrap();
    let v: Vec<f64> = modes.data.iter().map(|m| m.as_slice()[0]).collect();
    assert!(
        (v[0] - 100.1).abs() < 1e-3 && (v[1] - 200.1).abs() < 1e-3,
        "{v:?}"
    );
}

#[test]
fn cluster_error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("dup.mvd"), "mvd 1 4 1 1\n1\n1\n1\n5\n").unwrap();
    let o = run(
        &[
            "cluster",
            "dup.mvd",
            "--estimator",
            "samplepoint",
            "--k",
            "2",
            "--h",
            "1",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[0, 1, 2]"));
    assert_eq!(
        run(&["cluster", "missing.mvd", "--estimator", "fixed"], d)
            .status
            .code(),
        Some(3)
    );
    fs::write(d.join("bad.mvd"), "mvd 1 2 1 2\n1 2\n3\n").unwrap();
    assert_eq!(
        run(&["cluster", "bad.mvd", "--estimator", "fixed"], d)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["cluster", "dup.mvd", "--estimator", "fixed", "--k", "x"], d)
            .status
            .code(),
        Some(2)
    );
    let o = bin()
        .args(["cluster", "dup.mvd", "--estimator", "fixed"])
        .env("MODALMATRIX_THREADS", "abc")
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evaluate_prints_fm_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("a"), "1\n1\n2\n2\n").unwrap();
    fs::write(d.join("b"), "1\n1\n1\n2\n").unwrap();
    fs::write(d.join("s"), "1\n2\n3\n4\n").unwrap();
    fs::write(d.join("o"), "0\n0\n0\n0\n").unwrap();
    fs::write(d.join("short"), "0\n0\n").unwrap();
    let out = ok(&["evaluate", "a", "b"], d);
    assert!(out.starts_with("FM=0.408248\n"), "{out}");
    assert!(out.contains("  2   1   1"), "{out}");
    assert!(ok(&["evaluate", "a", "a"], d).starts_with("FM=1.000000"));
    assert!(ok(&["evaluate", "s", "o"], d).starts_with("FM=0.000000"));
    assert_eq!(run(&["evaluate", "a", "short"], d).status.code(), Some(2));
}

fn parse_values(out: &str) -> Vec<f64> {
    out.lines().map(|l| l.parse().unwrap()).collect()
}

#[test]
fn density_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("one.mvd"), "mvd 1 1 2 3\n0 0 0 0 0 0\n").unwrap();
    let v = parse_values(&ok(
        &[
            "density",
            "one.mvd",
            "--query",
            "one.mvd",
            "--estimator",
            "fixed",
            "--h",
            "1",
        ],
        d,
    ));
    assert!(
        (v[0] + 3.0 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12,
        "{v:?}"
    );

    ok(
        &[
            "generate",
            "--preset",
            "two-balanced",
            "--n",
            "40",
            "--p",
            "2",
            "--t",
            "2",
            "-o",
            "d.mvd",
        ],
        d,
    );
    let v = parse_values(&ok(
        &[
            "density",
            "d.mvd",
            "--query",
            "d.mvd",
            "--estimator",
            "fixed",
            "--h",
            "1000",
        ],
        d,
    ));
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
        (a.min(x), b.max(x))
    });
    let dens: Vec<f64> = v.iter().map(|x| x.exp()).collect();
    let mean = dens.iter().sum::<f64>() / dens.len() as f64;
    assert!((hi.exp() - lo.exp()) / mean < 0.01);

    fs::write(d.join("q.mvd"), "mvd 1 3 1 1\n0.5\n0.5\n2\n").unwrap();
    fs::write(d.join("x.mvd"), "mvd 1 4 1 1\n0\n1\n3\n4\n").unwrap();
    let v = parse_values(&ok(
        &[
            "density",
            "x.mvd",
            "--query",
            "q.mvd",
            "--estimator",
            "balloon",
            "--k",
            "2",
        ],
        d,
    ));
    assert_eq!(v.len(), 3);
    assert_eq!(v[0], v[1]);
    fs::write(d.join("wide.mvd"), "mvd 1 1 1 2\n0 0\n").unwrap();
    assert_eq!(
        run(
            &[
                "density",
                "x.mvd",
                "--query",
                "wide.mvd",
                "--estimator",
                "fixed",
                "--h",
                "1"
            ],
            d
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn bench_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("spec.txt"),
        "# tiny grid\nseed = 11\n[setting tiny]\npreset = two-balanced\nn = 40\np = 2\nt = 2\nreplicates = 2\nmethods = balloon-1\n",
    )
    .unwrap();
    ok(&["bench", "spec.txt", "-o", "out.csv", "--summary", "sum.csv"], d);
    let csv = fs::read_to_string(d.join("out.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "setting,method,replicate,fm,n_clusters,status,seconds");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("tiny,balloon-1,0,"));
    assert!(lines[2].starts_with("tiny,balloon-1,1,"));
    assert!(lines[1].contains(",ok,"));
    let summary = fs::read_to_string(d.join("sum.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(summary.lines().nth(1).unwrap().starts_with("tiny,balloon-1,2,"));

    let o = run(&["bench", "spec.txt"], d);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("setting,method"));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("setting,method,n_ok"));

    fs::write(d.join("bad.txt"), "[setting s]\nmethods = nope\n").unwrap();
    assert_eq!(run(&["bench", "bad.txt"], d).status.code(), Some(2));
}

#[test]
fn bench_records_failed_cells_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // rho = 0 yields exact duplicates, so sample-point radii collapse
    fs::write(
        d.join("spec.txt"),
        "[setting flat]\npreset = single\nn = 20\np = 2\nt = 2\nrho = 0\nreplicates = 2\nmethods = samplepoint-1, balloon-5\n",
    )
    .unwrap();
    ok(&["bench", "spec.txt", "-o", "out.csv", "--summary", "sum.csv"], d);
    let csv = fs::read_to_string(d.join("out.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("flat,samplepoint-1,0,,,degenerate,"), "{csv}");
    assert!(rows[1].starts_with("flat,balloon-5,0,"), "{csv}");
}
