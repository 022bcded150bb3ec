/// One row of the per-iteration log.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `F(x^k)`
    pub fval: f64,
    /// `E(x^k, ξ^k, x^{k−1})`; extrapolated solver only, from `k = 1`.
    pub potential: Option<f64>,
    /// `Ê(x^k, x^{k−1}) = F(x^k) + (L/2)‖x^k − x^{k−1}‖²`, from `k = 1`.
    pub potential_hat: Option<f64>,
    /// Extrapolation weight used to form `u^k` (0 for the linesearch solver).
    pub beta: f64,
    /// `‖x^k − x^{k−1}‖`
    pub step_norm: f64,
    /// Stopping-test residual, from `k = 1`.
    pub residual: Option<f64>,
    /// Norm of the explicit element of `∂E(x^k, ξ^k, x^{k−1})`
    /// `[∇f(x^k) − ∇f(u^{k−1}) − L(x^{k−1} − u^{k−1}); x^{k−1} − x^k; −L(x^k − x^{k−1})]`.
    pub certificate_norm: Option<f64>,
    /// Accepted linesearch modulus `L̄_{k−1}` (linesearch solver only).
    pub modulus: Option<f64>,
    pub elapsed_secs: f64,
}

/// Full vectors for one iteration, kept only on request.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateSnapshot {
    pub x: Vec<f64>,
    /// `u^{k−1}` (extrapolated solver) or `x^{k−1}`; absent at `k = 0`.
    pub u_prev: Option<Vec<f64>>,
    /// `ξ^k ∈ ∂P2(x^{k−1})`; absent at `k = 0`.
    pub xi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub lipschitz: f64,
    pub records: Vec<TraceRecord>,
    pub iterates: Option<Vec<IterateSnapshot>>,
}

impl IterateTrace {
    pub(crate) fn new(lipschitz: f64, keep_iterates: bool) -> Self {
        Self {
            lipschitz,
            records: Vec::new(),
            iterates: keep_iterates.then(Vec::new),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
