use std::fmt;

use dcopt::{
    linalg::norm, DiagnosticsError, npg_solve, pdcae_solve, DcError, Loss, LossKind, NpgOptions, OutlierModel, PdcaeOptions, Regularizer,
    SolveResult, SolveStatus, TraceOptions,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, Dims, ExperimentConfig};
use crate::instance::{generate_instance, InstanceData, InstanceSpec};
use crate::rng::SeededRng;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DCOPT_THREADS";

/// Extra zero coordinates sampled into a recovery scatter.
pub const SCATTER_ZERO_SAMPLES: usize = 100;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("problem setup failed: {0}")]
    Setup(DcError),

    #[error("{solver} aborted on seed {seed}: {source}")]
    Solver {
        solver: SolverKind,
        seed: u64,
        #[source]
        source: DcError,
    },

    #[error("diagnostics failed: {0}")]
    Diagnostics(#[from] DiagnosticsError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl BenchError {
    /// 2 for solver aborts, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Solver { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Pdcae,
    Npg,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Pdcae => "pdcae",
            SolverKind::Npg => "npg",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One `(λ, size, r)` combination of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lambda: f64,
    pub dims: Dims,
    pub r_factor: f64,
    pub r: usize,
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub seed: u64,
    pub iterations: usize,
    pub best_fval: f64,
    /// Wall-clock seconds spent inside the solver call.
    pub cpu_secs: f64,
    /// `‖x_best − x_true‖ / √n`
    pub rmsd: f64,
    pub status: SolveStatus,
}

impl RunMetrics {
    pub fn from_result(seed: u64, result: &SolveResult, x_true: &[f64]) -> Self {
        let diff: Vec<f64> = result.x_best.iter().zip(x_true).map(|(a, b)| a - b).collect();
        Self {
            seed,
            iterations: result.iterations,
            best_fval: result.best_fval,
            cpu_secs: result.elapsed.as_secs_f64(),
            rmsd: norm(&diff) / (x_true.len() as f64).sqrt(),
            status: result.status,
        }
    }
}

/// Averages over the seeds of one cell for one solver.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub cell: Cell,
    pub solver: SolverKind,
    pub rmsd_mean: f64,
    pub iter_mean: f64,
    pub fval_mean: f64,
    pub cpu_mean: f64,
    pub maxiter_count: usize,
    pub runs: Vec<RunMetrics>,
}

impl TableRow {
    pub fn aggregate(cell: Cell, solver: SolverKind, runs: Vec<RunMetrics>) -> Self {
        let count = runs.len().max(1) as f64;
        let mean = |f: fn(&RunMetrics) -> f64| runs.iter().map(f).sum::<f64>() / count;
        Self {
            cell,
            solver,
            rmsd_mean: mean(|r| r.rmsd),
            iter_mean: mean(|r| r.iterations as f64),
            fval_mean: mean(|r| r.best_fval),
            cpu_mean: mean(|r| r.cpu_secs),
            maxiter_count: runs.iter().filter(|r| r.status == SolveStatus::MaxIter).count(),
            runs,
        }
    }
}

pub fn instance_spec(cfg: &ExperimentConfig, dims: Dims) -> InstanceSpec {
    InstanceSpec { dims, sigma: cfg.sigma, outlier_magnitude: cfg.outlier_magnitude }
}

/// Cells in output order: `r_factor` outermost, then `λ`, then size.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &r_factor in &cfg.r_factors {
        for &lambda in &cfg.lambdas {
            for dims in cfg.dim_list() {
                out.push(Cell { lambda, dims, r_factor, r: cfg.r_for(dims, r_factor), p: cfg.p_for(dims) });
            }
        }
    }
    out
}

pub fn build_loss(cfg: &ExperimentConfig, b: &[f64]) -> Result<Loss, DcError> {
    match cfg.loss {
        LossKind::Squared => Loss::squared(b.to_vec()),
        LossKind::SquaredHinge => Loss::squared_hinge(b.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect()),
        LossKind::QuadEpsInsensitive => Loss::quad_eps_insensitive(b.to_vec(), cfg.epsilon),
        LossKind::QuantileSquared => Loss::quantile_squared(b.to_vec(), cfg.tau),
    }
}

pub fn build_regularizer(cfg: &ExperimentConfig, cell: &Cell) -> Result<Regularizer, DcError> {
    Regularizer::from_parts(cfg.regularizer, cell.lambda, cfg.theta, cfg.mu, cell.p)
}

/// Model for one instance with the first cell's terms; other cells of the
/// same size reuse its spectral estimate through [`OutlierModel::with_terms`].
pub fn base_model(cfg: &ExperimentConfig, inst: &InstanceData, cell: &Cell) -> Result<OutlierModel, DcError> {
    OutlierModel::new(inst.a.clone(), build_loss(cfg, &inst.b)?, build_regularizer(cfg, cell)?, cell.r)
}

pub fn cell_model(
    cfg: &ExperimentConfig,
    base: &OutlierModel,
    inst: &InstanceData,
    cell: &Cell,
) -> Result<OutlierModel, DcError> {
    base.with_terms(build_loss(cfg, &inst.b)?, build_regularizer(cfg, cell)?, cell.r)
}

pub fn solve(
    model: &OutlierModel,
    solver: SolverKind,
    pdcae: &PdcaeOptions,
    npg: &NpgOptions,
    trace: TraceOptions,
) -> Result<SolveResult, DcError> {
    let problem = model.compile();
    let x0 = vec![0.0; model.matrix().cols()];
    match solver {
        SolverKind::Pdcae => pdcae_solve(&problem, &x0, &PdcaeOptions { trace, ..pdcae.clone() }),
        SolverKind::Npg => npg_solve(&problem, &x0, &NpgOptions { trace, ..npg.clone() }),
    }
}

pub fn solvers(cfg: &ExperimentConfig) -> Vec<SolverKind> {
    let mut out = Vec::new();
    if cfg.solver.runs_pdcae() {
        out.push(SolverKind::Pdcae);
    }
    if cfg.solver.runs_npg() {
        out.push(SolverKind::Npg);
    }
    out
}

/// Worker count from `DCOPT_THREADS`, defaulting to the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every cell on every seed with each selected solver from `x⁰ = 0` and
/// averages per `(cell, solver)`. Rows follow [`cells`] order, solvers in
/// `pdcae, npg` order.
pub fn run_table(cfg: &ExperimentConfig) -> Result<Vec<TableRow>, BenchError> {
    cfg.validate()?;
    let all_cells = cells(cfg);
    let kinds = solvers(cfg);
    let seeds = cfg.seed_list();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| BenchError::Config(ConfigError::Invalid(format!("thread pool: {e}"))))?;

    // One job per (size, seed): the instance and its spectral estimate are
    // shared by every λ and r of that size.
    let jobs: Vec<(Dims, u64)> = cfg
        .dim_list()
        .into_iter()
        .flat_map(|d| seeds.iter().map(move |&s| (d, s)))
        .collect();
    let per_job: Vec<Vec<(usize, SolverKind, RunMetrics)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(dims, seed)| {
                let inst = generate_instance(&instance_spec(cfg, dims), seed).map_err(BenchError::Setup)?;
                let mine: Vec<(usize, &Cell)> = all_cells.iter().enumerate().filter(|(_, c)| c.dims == dims).collect();
                let base = base_model(cfg, &inst, mine[0].1).map_err(BenchError::Setup)?;
                let mut out = Vec::new();
                for (idx, cell) in mine {
                    let model = cell_model(cfg, &base, &inst, cell).map_err(BenchError::Setup)?;
                    for &solver in &kinds {
                        let result = solve(&model, solver, &cfg.pdcae, &cfg.npg, TraceOptions::default())
                            .map_err(|source| BenchError::Solver { solver, seed, source })?;
                        out.push((idx, solver, RunMetrics::from_result(seed, &result, &inst.x_true)));
                    }
                }
                Ok(out)
            })
            .collect::<Result<_, BenchError>>()
    })?;

    let mut rows = Vec::new();
    for (idx, cell) in all_cells.iter().enumerate() {
        for &solver in &kinds {
            let runs: Vec<RunMetrics> = per_job
                .iter()
                .flatten()
                .filter(|(i, s, _)| *i == idx && *s == solver)
                .map(|(_, _, m)| m.clone())
                .collect();
            rows.push(TableRow::aggregate(*cell, solver, runs));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub index: usize,
    pub x_true: f64,
    pub x_solved: f64,
}

#[derive(Debug, Clone)]
pub struct Scatter {
    pub points: Vec<ScatterPoint>,
    pub rmsd: f64,
    pub iterations: usize,
}

/// Solves the first cell of `cfg` on one seed with the extrapolated solver.
/// Keeps the union of both supports plus up to 100 coordinates where both
/// vectors vanish, drawn from a separate stream of the same seed.
pub fn recovery_scatter(cfg: &ExperimentConfig, seed: u64) -> Result<Scatter, BenchError> {
    cfg.validate()?;
    let cell = cells(cfg)[0];
    let inst = generate_instance(&instance_spec(cfg, cell.dims), seed).map_err(BenchError::Setup)?;
    let model = base_model(cfg, &inst, &cell).map_err(BenchError::Setup)?;
    let result = solve(&model, SolverKind::Pdcae, &cfg.pdcae, &cfg.npg, TraceOptions::default())
        .map_err(|source| BenchError::Solver { solver: SolverKind::Pdcae, seed, source })?;
    let metrics = RunMetrics::from_result(seed, &result, &inst.x_true);
    let x = &result.x_best;

    let mut keep: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0 || inst.x_true[j] != 0.0).collect();
    let zeros: Vec<usize> = (0..x.len()).filter(|&j| x[j] == 0.0 && inst.x_true[j] == 0.0).collect();
    let mut rng = SeededRng::with_stream(seed, 1);
    keep.extend(rng.shuffle_prefix(zeros.len(), SCATTER_ZERO_SAMPLES).into_iter().map(|i| zeros[i]));
    keep.sort_unstable();

    Ok(Scatter {
        points: keep
            .into_iter()
            .map(|index| ScatterPoint { index, x_true: inst.x_true[index], x_solved: x[index] })
            .collect(),
        rmsd: metrics.rmsd,
        iterations: metrics.iterations,
    })
}
