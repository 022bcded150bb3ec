//! The composite objective `F = f + P1 − P2` both solvers consume.

use crate::error::{check_len, DcError, Result};

/// A proper closed convex term with a computable proximal mapping.
pub trait ProxTerm: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// `argmin_y  value(y) + ‖y − v‖² / (2 step)`
    fn prox(&self, v: &[f64], step: f64) -> Vec<f64>;
}

/// A continuous convex term with a deterministic subgradient selector.
pub trait SubgradientTerm: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// One element of the subdifferential at `x`.
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
}

/// The identically zero function; usable as either `P1` or `P2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ProxTerm for Zero {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn prox(&self, v: &[f64], _step: f64) -> Vec<f64> {
        v.to_vec()
    }
}

impl SubgradientTerm for Zero {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
}

/// Function values at one point, plus whatever the problem wants to cache for
/// the first-order call that usually follows (for instance `A x`).
#[derive(Debug, Clone)]
pub struct PointEval {
    pub smooth: f64,
    pub p1: f64,
    pub p2: f64,
    pub aux: Vec<f64>,
}

impl PointEval {
    /// `F = (f + P1) − P2`; this order is used everywhere an objective value
    /// is formed.
    pub fn objective(&self) -> f64 {
        (self.smooth + self.p1) - self.p2
    }
}

/// First-order information at one point.
#[derive(Debug, Clone)]
pub struct FirstOrder {
    /// `∇f(x)`
    pub gradient: Vec<f64>,
    /// The selected element of `∂P2(x)`.
    pub subgradient: Vec<f64>,
    /// Vector whose successive differences feed the Barzilai–Borwein estimate
    /// of the linesearch solver. Defaults to `∇f(x)`.
    pub secant: Vec<f64>,
}

/// `min F(x) = f(x) + P1(x) − P2(x)` with `f` convex and `L`-smooth, `P1`
/// proper closed convex with an exact prox, `P2` continuous convex.
pub trait DcProblem: Send + Sync {
    fn dim(&self) -> usize;

    /// Lipschitz modulus `L` of `∇f`.
    fn lipschitz(&self) -> f64;

    fn smooth_value(&self, x: &[f64]) -> f64;
    fn smooth_gradient(&self, x: &[f64]) -> Vec<f64>;
    fn p1_value(&self, x: &[f64]) -> f64;
    fn prox_p1(&self, v: &[f64], step: f64) -> Vec<f64>;
    fn p2_value(&self, x: &[f64]) -> f64;
    fn p2_subgradient(&self, x: &[f64]) -> Vec<f64>;

    /// Whether `∇f` is affine (f quadratic). The solvers then form gradients
    /// at extrapolated points as affine combinations of cached gradients.
    fn affine_gradient(&self) -> bool {
        false
    }

    fn evaluate(&self, x: &[f64]) -> PointEval {
        PointEval {
            smooth: self.smooth_value(x),
            p1: self.p1_value(x),
            p2: self.p2_value(x),
            aux: Vec::new(),
        }
    }

    fn first_order(&self, x: &[f64], _eval: &PointEval) -> FirstOrder {
        let gradient = self.smooth_gradient(x);
        FirstOrder {
            secant: gradient.clone(),
            gradient,
            subgradient: self.p2_subgradient(x),
        }
    }
}

/// `F(x) = f(x) + P1(x) − P2(x)`, summed as `(f + P1) − P2`.
pub fn evaluate_objective<P: DcProblem + ?Sized>(problem: &P, x: &[f64]) -> Result<f64> {
    check_len("evaluate_objective", problem.dim(), x.len())?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(DcError::NonFinite("objective argument"));
    }
    let value = problem.evaluate(x).objective();
    if !value.is_finite() {
        return Err(DcError::NonFinite("objective value"));
    }
    Ok(value)
}

type ValueFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A [`DcProblem`] assembled from closures for `f` and `∇f` plus boxed terms.
pub struct CompositeProblem {
    dim: usize,
    value: ValueFn,
    gradient: GradientFn,
    lipschitz: f64,
    p1: Box<dyn ProxTerm>,
    p2: Box<dyn SubgradientTerm>,
    affine: bool,
}

impl CompositeProblem {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        lipschitz: f64,
        p1: impl ProxTerm + 'static,
        p2: impl SubgradientTerm + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(DcError::InvalidParameter("problem dimension must be positive".into()));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(DcError::InvalidParameter(format!(
                "Lipschitz modulus must be positive and finite (got {lipschitz})"
            )));
        }
        Ok(Self {
            dim,
            value: Box::new(value),
            gradient: Box::new(gradient),
            lipschitz,
            p1: Box::new(p1),
            p2: Box::new(p2),
            affine: false,
        })
    }

    /// Declares `f` quadratic so `∇f` may be extrapolated affinely.
    pub fn with_affine_gradient(mut self) -> Self {
        self.affine = true;
        self
    }
}

impl DcProblem for CompositeProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn smooth_value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn smooth_gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }

    fn p1_value(&self, x: &[f64]) -> f64 {
        self.p1.value(x)
    }

    fn prox_p1(&self, v: &[f64], step: f64) -> Vec<f64> {
        self.p1.prox(v, step)
    }

    fn p2_value(&self, x: &[f64]) -> f64 {
        self.p2.value(x)
    }

    fn p2_subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.p2.subgradient(x)
    }

    fn affine_gradient(&self) -> bool {
        self.affine
    }
}
