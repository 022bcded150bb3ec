//! Proximal DC solvers: the extrapolated method (`pdcae_solve`) and the
//! nonmonotone linesearch baseline (`npg_solve`).

mod npg;
mod pdcae;
pub mod schedule;
mod trace;

use std::time::Duration;

pub use npg::npg_solve;
pub use pdcae::pdcae_solve;
pub use schedule::{beta_schedule, ThetaPair};
pub use trace::{IterateSnapshot, IterateTrace, TraceRecord};

use crate::error::{DcError, Result};
use crate::linalg::{dot, norm, sub};
use crate::problem::DcProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TraceOptions {
    /// Record one [`TraceRecord`] per iteration.
    pub record: bool,
    /// Also keep `x^k`, `u^{k−1}` and `ξ^k` for every iteration.
    pub keep_iterates: bool,
}

impl TraceOptions {
    pub fn scalars() -> Self {
        Self { record: true, keep_iterates: false }
    }

    pub fn full() -> Self {
        Self { record: true, keep_iterates: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdcaeOptions {
    /// `θ` is reset every `restart_period` iterations; 1 disables extrapolation.
    pub restart_period: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Upper clip for `β_k`, keeping `sup β_k < 1`.
    pub beta_cap: f64,
    pub trace: TraceOptions,
}

impl Default for PdcaeOptions {
    fn default() -> Self {
        Self {
            restart_period: 200,
            tol: 1e-4,
            max_iter: 10_000,
            beta_cap: 1.0 - 1e-12,
            trace: TraceOptions::default(),
        }
    }
}

impl PdcaeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restart_period == 0 {
            return Err(DcError::InvalidParameter("restart_period must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(DcError::InvalidParameter(format!("tol must be > 0 (got {})", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(DcError::InvalidParameter("max_iter must be >= 1".into()));
        }
        if !(self.beta_cap >= 0.0 && self.beta_cap < 1.0) {
            return Err(DcError::InvalidParameter(format!(
                "beta_cap must satisfy 0 <= beta_cap < 1 (got {})",
                self.beta_cap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpgOptions {
    /// Growth factor `τ > 1` of the linesearch modulus.
    pub tau_growth: f64,
    /// Sufficient-decrease constant `c`.
    pub c: f64,
    /// Nonmonotone memory `M`.
    pub memory: usize,
    pub l0: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub trace: TraceOptions,
}

impl Default for NpgOptions {
    fn default() -> Self {
        Self {
            tau_growth: 2.0,
            c: 1e-4,
            memory: 4,
            l0: 1.0,
            l_min: 1e-8,
            l_max: 1e8,
            tol: 1e-4,
            max_iter: 10_000,
            trace: TraceOptions::default(),
        }
    }
}

impl NpgOptions {
    /// Options that pin the linesearch modulus to `l` (`L_min = L0 = L_max = l`).
    pub fn frozen(l: f64) -> Self {
        Self { l0: l, l_min: l, l_max: l, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_growth > 1.0) {
            return Err(DcError::InvalidParameter(format!(
                "tau_growth must be > 1 (got {})",
                self.tau_growth
            )));
        }
        if !(self.c > 0.0) {
            return Err(DcError::InvalidParameter(format!("c must be > 0 (got {})", self.c)));
        }
        if self.memory == 0 {
            return Err(DcError::InvalidParameter("memory M must be >= 1".into()));
        }
        if !(self.l_min > 0.0 && self.l_min <= self.l0 && self.l0 <= self.l_max) {
            return Err(DcError::InvalidParameter(format!(
                "moduli must satisfy 0 < L_min <= L0 <= L_max (got {}, {}, {})",
                self.l_min, self.l0, self.l_max
            )));
        }
        if !(self.tol > 0.0) {
            return Err(DcError::InvalidParameter(format!("tol must be > 0 (got {})", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(DcError::InvalidParameter("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_final: Vec<f64>,
    /// The iterate with the smallest recorded objective value.
    pub x_best: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub best_fval: f64,
    pub final_fval: f64,
    pub elapsed: Duration,
    pub trace: Option<IterateTrace>,
}

/// What the termination test anchors the current step to.
#[derive(Debug, Clone, Copy)]
pub enum ResidualAnchor<'a> {
    /// Extrapolated solver: the previous extrapolated point `u^{k−1}`.
    Extrapolated { u_prev: &'a [f64] },
    /// Linesearch solver: the accepted modulus `L̄_{k−1}`.
    Linesearch { modulus_prev: f64 },
}

/// `√(L · ⟨∇f(x) − ∇f(u), x − u⟩)`, an upper bound on `‖∇f(x) − ∇f(u)‖` for
/// convex `L`-smooth `f`. For `f = ½‖A·‖²` it equals `√L ‖A(x − u)‖`.
fn curvature_bound(lipschitz: f64, grad_x: &[f64], grad_u: &[f64], x: &[f64], u: &[f64]) -> f64 {
    let dg = sub(grad_x, grad_u);
    let d = sub(x, u);
    (lipschitz * dot(&dg, &d).max(0.0)).sqrt()
}

/// Left-hand side of the extrapolated solver's stopping test:
/// `√[(√L‖A(x^k − u^{k−1})‖ + L‖x^k − u^{k−1}‖)² + ‖x^k − x^{k−1}‖²]`.
pub fn extrapolated_residual(
    lipschitz: f64,
    grad_x: &[f64],
    grad_u_prev: &[f64],
    x: &[f64],
    x_prev: &[f64],
    u_prev: &[f64],
) -> f64 {
    let first = curvature_bound(lipschitz, grad_x, grad_u_prev, x, u_prev) + lipschitz * norm(&sub(x, u_prev));
    let second = norm(&sub(x, x_prev));
    (first * first + second * second).sqrt()
}

/// Left-hand side of the linesearch solver's stopping test:
/// `√[(√L‖A(x^k − x^{k−1})‖ + L̄_{k−1}‖x^k − x^{k−1}‖)² + ‖x^k − x^{k−1}‖²]`.
pub fn linesearch_residual(
    lipschitz: f64,
    modulus_prev: f64,
    grad_x: &[f64],
    grad_prev: &[f64],
    x: &[f64],
    x_prev: &[f64],
) -> f64 {
    let step = norm(&sub(x, x_prev));
    let first = curvature_bound(lipschitz, grad_x, grad_prev, x, x_prev) + modulus_prev * step;
    (first * first + step * step).sqrt()
}

/// The stopping-test residual at `x^k`, recomputing gradients from `problem`.
/// Bounds `dist(0, ∂Ξ(x^k, ξ^k))` from above.
pub fn stationarity_residual<P: DcProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    x_prev: &[f64],
    anchor: ResidualAnchor<'_>,
) -> f64 {
    let l = problem.lipschitz();
    let grad_x = problem.smooth_gradient(x);
    match anchor {
        ResidualAnchor::Extrapolated { u_prev } => {
            let grad_u = problem.smooth_gradient(u_prev);
            extrapolated_residual(l, &grad_x, &grad_u, x, x_prev, u_prev)
        }
        ResidualAnchor::Linesearch { modulus_prev } => {
            let grad_prev = problem.smooth_gradient(x_prev);
            linesearch_residual(l, modulus_prev, &grad_x, &grad_prev, x, x_prev)
        }
    }
}

/// Norm of the explicit element
/// `[∇f(x^k) − ∇f(u^{k−1}) − L(x^k − u^{k−1}); x^{k−1} − x^k] ∈ ∂Ξ(x^k, ξ^k)`.
pub fn stationarity_certificate<P: DcProblem + ?Sized>(problem: &P, x: &[f64], x_prev: &[f64], u_prev: &[f64]) -> f64 {
    let l = problem.lipschitz();
    let grad_x = problem.smooth_gradient(x);
    let grad_u = problem.smooth_gradient(u_prev);
    let top: Vec<f64> = (0..x.len())
        .map(|i| (grad_x[i] - grad_u[i]) - l * (x[i] - u_prev[i]))
        .collect();
    let bottom = sub(x_prev, x);
    (dot(&top, &top) + dot(&bottom, &bottom)).sqrt()
}

/// `v = u − (∇f(u) − ξ) / L`, the forward point both solvers feed to the prox.
pub(crate) fn forward_point(u: &[f64], grad_u: &[f64], xi: &[f64], modulus: f64) -> Vec<f64> {
    u.iter()
        .zip(grad_u)
        .zip(xi)
        .map(|((ui, gi), si)| ui - (gi - si) / modulus)
        .collect()
}

pub(crate) fn ensure_finite(x: &[f64], iteration: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DcError::Diverged { iteration })
    }
}
