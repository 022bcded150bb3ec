use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use dcopt::diagnostics::{certify_trace, fit_linear_rate};
use dcopt::TraceOptions;

use crate::config::ExperimentConfig;
use crate::experiments::{
    base_model, cell_model, cells, instance_spec, recovery_scatter, run_table, solve, solvers, BenchError, RunMetrics,
    SolverKind, TableRow,
};
use crate::instance::generate_instance;
use crate::output::{real, write_instance, write_scatter, write_table, write_trace, write_vector};

/// Tail fraction used by `certify` for the rate fit.
const CERTIFY_TAIL: f64 = 0.3;

#[derive(Debug, Parser)]
#[command(name = "dcopt", version, about = "Sparse recovery with outlier detection: solvers, benchmarks and diagnostics")]
pub struct Cli {
    /// Experiment configuration (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed; single-instance commands solve this seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Write per-iteration traces.
    #[arg(long, global = true)]
    pub trace: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one instance and write it as CSV.
    Gen,
    /// Solve one instance with the configured solvers.
    Solve,
    /// Average every configured cell over all seeds; one table per r_factor.
    Bench,
    /// Run both solvers on one instance for every configured cell.
    Compare,
    /// Recovery scatter data for one instance.
    Scatter,
    /// Check potential decrease, majorization and the linear rate on one solve.
    Certify,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
        cfg.seeds = None;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn single_seed(cli: &Cli, cfg: &ExperimentConfig) -> u64 {
    cli.seed.unwrap_or_else(|| cfg.seed_list()[0])
}

pub fn execute(cli: &Cli) -> Result<(), BenchError> {
    let cfg = load_config(cli)?;
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Gen => gen(cli, &cfg),
        Command::Solve => solve_one(cli, &cfg),
        Command::Bench => bench(cli, &cfg),
        Command::Compare => compare(cli, &cfg),
        Command::Scatter => scatter(cli, &cfg),
        Command::Certify => certify(cli, &cfg),
    }
}

fn gen(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), BenchError> {
    let seed = single_seed(cli, cfg);
    let dims = cfg.dim_list()[0];
    let inst = generate_instance(&instance_spec(cfg, dims), seed).map_err(BenchError::Setup)?;
    write_instance(&cli.out, &inst)?;
    println!(
        "seed {seed}: A is {}x{}, {} nonzeros in x_true, {} outlier rows -> {}",
        inst.a.rows(),
        inst.a.cols(),
        inst.support.len(),
        inst.outlier_support.len(),
        cli.out.display()
    );
    Ok(())
}

fn solve_one(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), BenchError> {
    let seed = single_seed(cli, cfg);
    let cell = cells(cfg)[0];
    let inst = generate_instance(&instance_spec(cfg, cell.dims), seed).map_err(BenchError::Setup)?;
    let model = base_model(cfg, &inst, &cell).map_err(BenchError::Setup)?;
    let trace = if cli.trace { TraceOptions::scalars() } else { TraceOptions::default() };
    for solver in solvers(cfg) {
        let result = solve(&model, solver, &cfg.pdcae, &cfg.npg, trace)
            .map_err(|source| BenchError::Solver { solver, seed, source })?;
        let metrics = RunMetrics::from_result(seed, &result, &inst.x_true);
        print_run(solver, &metrics);
        write_vector(&cli.out.join(format!("solution_{solver}.csv")), "x", &result.x_best)?;
        if let Some(t) = &result.trace {
            let report = match solver {
                SolverKind::Pdcae => certify_trace(t, &model.compile()).ok(),
                SolverKind::Npg => None,
            };
            write_trace(&cli.out.join(format!("trace_{solver}.csv")), t, report.as_ref())?;
        }
    }
    Ok(())
}

fn bench(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), BenchError> {
    let rows = run_table(cfg)?;
    for (j, &rf) in cfg.r_factors.iter().enumerate() {
        let table: Vec<TableRow> = rows.iter().filter(|r| r.cell.r_factor == rf).cloned().collect();
        let path = cli.out.join(format!("table{}.csv", j + 1));
        write_table(&path, &table)?;
        println!("r_factor {rf}: {}", path.display());
        print_table(&table);
    }
    Ok(())
}

fn compare(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), BenchError> {
    let seed = single_seed(cli, cfg);
    let all = cells(cfg);
    let mut w = csv::Writer::from_path(cli.out.join("compare.csv"))?;
    w.write_record(["lambda", "m", "n", "s", "t", "r", "solver", "iterations", "best_fval", "cpu", "rmsd", "status"])?;
    for dims in cfg.dim_list() {
        let inst = generate_instance(&instance_spec(cfg, dims), seed).map_err(BenchError::Setup)?;
        let mine: Vec<_> = all.iter().filter(|c| c.dims == dims).collect();
        let base = base_model(cfg, &inst, mine[0]).map_err(BenchError::Setup)?;
        for cell in mine {
            let model = cell_model(cfg, &base, &inst, cell).map_err(BenchError::Setup)?;
            println!("lambda {:e}, (m, n, s, t) = ({}, {}, {}, {}), r = {}", cell.lambda, dims.m, dims.n, dims.s, dims.t, cell.r);
            for solver in [SolverKind::Pdcae, SolverKind::Npg] {
                let result = solve(&model, solver, &cfg.pdcae, &cfg.npg, TraceOptions::default())
                    .map_err(|source| BenchError::Solver { solver, seed, source })?;
                let m = RunMetrics::from_result(seed, &result, &inst.x_true);
                print_run(solver, &m);
                w.write_record([
                    real(cell.lambda),
                    dims.m.to_string(),
                    dims.n.to_string(),
                    dims.s.to_string(),
                    dims.t.to_string(),
                    cell.r.to_string(),
                    solver.name().to_string(),
                    m.iterations.to_string(),
                    real(m.best_fval),
                    real(m.cpu_secs),
                    real(m.rmsd),
                    format!("{:?}", m.status),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn scatter(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), BenchError> {
    let seed = single_seed(cli, cfg);
    let s = recovery_scatter(cfg, seed)?;
    let path = cli.out.join("scatter.csv");
    write_scatter(&path, &s.points)?;
    println!(
        "seed {seed}: rmsd {:.3e} after {} iterations, {} points -> {}",
        s.rmsd,
        s.iterations,
        s.points.len(),
        path.display()
    );
    Ok(())
}

fn certify(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), BenchError> {
    let seed = single_seed(cli, cfg);
    let cell = cells(cfg)[0];
    let inst = generate_instance(&instance_spec(cfg, cell.dims), seed).map_err(BenchError::Setup)?;
    let model = base_model(cfg, &inst, &cell).map_err(BenchError::Setup)?;
    let result = solve(&model, SolverKind::Pdcae, &cfg.pdcae, &cfg.npg, TraceOptions::scalars())
        .map_err(|source| BenchError::Solver { solver: SolverKind::Pdcae, seed, source })?;
    let trace = result.trace.as_ref().expect("trace requested");
    let report = certify_trace(trace, &model.compile())?;

    println!("seed {seed}: {} iterations, status {:?}", result.iterations, result.status);
    println!("E-decrease violations: {}", report.decrease_violations.len());
    println!("majorization violations: {}", report.chain_violations.len());
    match report.bound_constant {
        Some(d) => println!("certificate bound constant D: {d:.6e}"),
        None => println!("certificate bound constant D: n/a"),
    }
    println!(
        "certificate norm: max {:.6e}, final {:.6e}",
        report.max_certificate_norm, report.final_certificate_norm
    );
    match fit_linear_rate(trace, CERTIFY_TAIL) {
        Ok(fit) => println!(
            "rate fit over k in [{}, {}): slope {:.6e}, R^2 {:.6}, factor {:.6}",
            fit.window.start, fit.window.end, fit.slope, fit.r_squared, fit.linear_factor
        ),
        Err(e) => println!("rate fit: {e}"),
    }
    if cli.trace {
        write_trace(&cli.out.join("trace.csv"), trace, Some(&report))?;
    }
    Ok(())
}

fn print_run(solver: SolverKind, m: &RunMetrics) {
    println!(
        "  {:<6} iter {:>6}  fval {:.6e}  rmsd {:.3e}  cpu {:.3}s  {:?}",
        solver.name(),
        m.iterations,
        m.best_fval,
        m.rmsd,
        m.cpu_secs,
        m.status
    );
}

fn print_table(rows: &[TableRow]) {
    println!(
        "  {:>8} {:>6} {:>6} {:>5} {:>4} {:>4} {:<6} {:>10} {:>9} {:>12} {:>8} {:>4}",
        "lambda", "m", "n", "s", "t", "r", "solver", "rmsd", "iter", "fval", "cpu", "max"
    );
    for r in rows {
        let c = &r.cell;
        println!(
            "  {:>8.1e} {:>6} {:>6} {:>5} {:>4} {:>4} {:<6} {:>10.3e} {:>9.1} {:>12.5e} {:>8.3} {:>4}",
            c.lambda,
            c.dims.m,
            c.dims.n,
            c.dims.s,
            c.dims.t,
            c.r,
            r.solver.name(),
            r.rmsd_mean,
            r.iter_mean,
            r.fval_mean,
            r.cpu_mean,
            r.maxiter_count
        );
    }
}
