use std::path::Path;
use std::process::Command;

use clap::Parser;
use mavem::cli::{run, Args, EPSILON_SCHEDULE};

fn mavem(args: &[&str], out: &Path) -> std::process::ExitStatus {
    Command::new(env!("CARGO_BIN_EXE_mavem"))
        .args(args)
        .arg("--output")
        .arg(out)
        .env("RUST_LOG", "warn")
        .status()
        .unwrap()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn convergence_table_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p1.dat");
    let status = mavem(&["--problem", "p1", "--sizes", "4,8", "--order", "2"], &out);
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("h H2 H1 L2"));
    let r = rows(&text);
    assert_eq!(r.len(), 2);
    assert!(r.iter().all(|row| row.len() == 4));
    assert!(r[1][0] < r[0][0] && r[1][1] < r[0][1]);
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--problem",
        "p2",
        "--mesh",
        "voronoi",
        "--sizes",
        "30,60",
        "--seed",
        "3",
    ];
    let (a, b) = (dir.path().join("a.dat"), dir.path().join("b.dat"));
    assert!(mavem(&args, &a).success());
    assert!(mavem(&args, &b).success());
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn non_convergence_exits_nonzero_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial.dat");
    let status = mavem(
        &[
            "--problem",
            "p1",
            "--sizes",
            "6",
            "--max-iter",
            "1",
            "--tol",
            "1e-15",
            "--no-warmup",
        ],
        &out,
    );
    assert!(!status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text, "h H2 H1 L2\n");
}

#[test]
fn invalid_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.dat");
    assert!(!mavem(&["--order", "1"], &out).success());
    assert!(!mavem(&["--problem", "p9"], &out).success());
    assert!(!mavem(&["--damping", "1.5"], &out).success());
}

// Self-baseline: computed once by this implementation.
#[test]
fn p1_regression_baseline() {
    let args = Args::try_parse_from(["mavem", "--problem", "p1", "--sizes", "11"]).unwrap();
    let outcome = run(&args.to_config()).unwrap();
    assert!(outcome.converged);
    let h2 = outcome.records[0].h2;
    assert!((h2 / 4.53849310716e-2 - 1.0).abs() < 0.05, "H2 = {h2:e}");
}

#[test]
fn epsilon_study_of_the_quadratic_problem() {
    let args = Args::try_parse_from([
        "mavem",
        "--problem",
        "quadratic",
        "--study",
        "epsilon",
        "--sizes",
        "6",
        "--order",
        "2",
        "--epsilon",
        "0.0005",
    ])
    .unwrap();
    let outcome = run(&args.to_config()).unwrap();
    assert!(outcome.converged);
    assert_eq!(outcome.records.len(), EPSILON_SCHEDULE.len());
    for (r, eps) in outcome.records.iter().zip(EPSILON_SCHEDULE) {
        assert_eq!(r.h, eps);
        assert!(r.h2 < 1e-8 && r.h1 < 1e-8 && r.l2 < 1e-8, "{r:?}");
    }
    assert!(outcome.table.starts_with("Epsilon H2 H1 L2\n"));
}
