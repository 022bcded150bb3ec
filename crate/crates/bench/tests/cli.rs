use std::fs;
use std::path::Path;

use dcopt_bench::cli::run;

const SMALL: &str = "dims = 40, 200, 10, 2\nlambda = 5e-3\nnum_seeds = 2\n";

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn dcopt(args: &[&str]) -> i32 {
    run(std::iter::once("dcopt").chain(args.iter().copied()))
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(dcopt(&["gen", "--config", &cfg, "--seed", "3", "--out", a.to_str().unwrap()]), 0);
    assert_eq!(dcopt(&["gen", "--config", &cfg, "--seed", "3", "--out", b.to_str().unwrap()]), 0);
    for name in ["A.csv", "b.csv", "x_true.csv", "outliers.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let c = dir.path().join("c");
    assert_eq!(dcopt(&["gen", "--config", &cfg, "--seed", "4", "--out", c.to_str().unwrap()]), 0);
    assert_ne!(fs::read(a.join("b.csv")).unwrap(), fs::read(c.join("b.csv")).unwrap());
    let rows = fs::read_to_string(a.join("A.csv")).unwrap().lines().count();
    assert_eq!(rows, 42);
}

#[test]
fn solve_writes_solutions_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    assert_eq!(dcopt(&["solve", "--config", &cfg, "--trace", "--out", out.to_str().unwrap()]), 0);
    for name in ["solution_pdcae.csv", "solution_npg.csv", "trace_pdcae.csv", "trace_npg.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let trace = fs::read_to_string(out.join("trace_pdcae.csv")).unwrap();
    assert!(trace.lines().next().unwrap().starts_with("k,fval,E,E_hat"));
    assert_eq!(fs::read_to_string(out.join("solution_pdcae.csv")).unwrap().lines().count(), 201);
}

#[test]
fn bench_compare_scatter_and_certify_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}r_factor = 1.0, 1.1\n"));
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    assert_eq!(dcopt(&["bench", "--config", &cfg, "--out", out_s]), 0);
    assert!(out.join("table1.csv").exists() && out.join("table2.csv").exists());
    assert_eq!(fs::read_to_string(out.join("table1.csv")).unwrap().lines().count(), 3);
    assert_eq!(dcopt(&["compare", "--config", &cfg, "--out", out_s]), 0);
    assert_eq!(fs::read_to_string(out.join("compare.csv")).unwrap().lines().count(), 5);
    assert_eq!(dcopt(&["scatter", "--config", &cfg, "--out", out_s]), 0);
    assert!(out.join("scatter.csv").exists());
    assert_eq!(dcopt(&["certify", "--config", &cfg, "--trace", "--out", out_s]), 0);
    assert!(out.join("trace.csv").exists());
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    for body in ["lambda = -1\n", "no_such_key = 3\n", "lambda = 1e-3\nlambda = 2e-3\n", "dims = 10, 20, 30\n", "mu = abc\n"] {
        let cfg = write_config(dir.path(), body);
        assert_eq!(dcopt(&["bench", "--config", &cfg, "--out", out_s]), 1, "{body:?}");
    }
    assert_eq!(dcopt(&["bench", "--config", "/nonexistent/run.cfg"]), 1);
    assert_eq!(dcopt(&["frobnicate"]), 1);
    assert_eq!(dcopt(&["--help"]), 0);
}

#[test]
fn solver_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // a linesearch cap below the curvature of the data forces a failure
    let cfg = write_config(dir.path(), &format!("{SMALL}solver = npg\nnpg_l0 = 1e-3\nnpg_lmin = 1e-3\nnpg_lmax = 1e-2\n"));
    let out = dir.path().join("out");
    assert_eq!(dcopt(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]), 2);
}
