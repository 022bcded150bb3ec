//! Nonconvex sparsity penalties written as `λ‖x‖₁ − P2(x)` with `P2` convex.
//!
//! | kind          | `P2(x)` per coordinate / overall                              |
//! |---------------|---------------------------------------------------------------|
//! | SCAD          | 0, `(|t|−λ)²/(2(θ−1))`, `λ|t| − (θ+1)λ²/2` on the three pieces |
//! | MCP           | `t²/(2θ)` for `|t| ≤ θλ`, else `λ|t| − θλ²/2`                  |
//! | ℓ1−2          | `λ‖x‖`                                                        |
//! | Truncated ℓ1  | `λμ` times the sum of the `p` largest magnitudes               |
//! | Capped ℓ1     | `λ Σ [|xᵢ| − θ]₊`                                             |

use std::fmt;
use std::str::FromStr;

use crate::error::{DcError, Result};
use crate::linalg::norm;
use crate::problem::{ProxTerm, SubgradientTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegularizerKind {
    Scad,
    Mcp,
    L1MinusL2,
    TruncatedL1,
    CappedL1,
}

impl RegularizerKind {
    pub const ALL: [RegularizerKind; 5] = [
        RegularizerKind::Scad,
        RegularizerKind::Mcp,
        RegularizerKind::L1MinusL2,
        RegularizerKind::TruncatedL1,
        RegularizerKind::CappedL1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegularizerKind::Scad => "scad",
            RegularizerKind::Mcp => "mcp",
            RegularizerKind::L1MinusL2 => "l1-l2",
            RegularizerKind::TruncatedL1 => "truncated-l1",
            RegularizerKind::CappedL1 => "capped-l1",
        }
    }
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegularizerKind {
    type Err = DcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "scad" => Ok(RegularizerKind::Scad),
            "mcp" => Ok(RegularizerKind::Mcp),
            "l1-l2" | "l1-minus-l2" => Ok(RegularizerKind::L1MinusL2),
            "truncated-l1" | "trl1" => Ok(RegularizerKind::TruncatedL1),
            "capped-l1" => Ok(RegularizerKind::CappedL1),
            other => Err(DcError::InvalidParameter(format!(
                "unknown regularizer '{other}' (expected scad, mcp, l1-l2, truncated-l1 or capped-l1)"
            ))),
        }
    }
}

/// `λ‖·‖₁`, the convex part shared by every regularizer here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Norm {
    lambda: f64,
}

impl L1Norm {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(DcError::InvalidParameter(format!(
                "lambda must satisfy lambda > 0 (got {lambda})"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl ProxTerm for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, v: &[f64], step: f64) -> Vec<f64> {
        soft_threshold(v, self.lambda * step)
    }
}

/// Componentwise `sign(vᵢ) · max(|vᵢ| − level, 0)`.
pub fn soft_threshold(v: &[f64], level: f64) -> Vec<f64> {
    v.iter()
        .map(|&vi| {
            let shrunk = vi.abs() - level;
            if shrunk > 0.0 {
                shrunk.copysign(vi)
            } else {
                0.0
            }
        })
        .collect()
}

fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Indices of the `count` largest entries of `scores`; ties go to the lower
/// index. Returned in no particular order.
pub(crate) fn top_indices(scores: &[f64], count: usize) -> Vec<usize> {
    let count = count.min(scores.len());
    if count == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let order = |a: &usize, b: &usize| {
        scores[*b]
            .partial_cmp(&scores[*a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(b))
    };
    if count < idx.len() {
        idx.select_nth_unstable_by(count - 1, order);
        idx.truncate(count);
    }
    idx
}

/// One of the five DC-decomposed penalties `λ‖x‖₁ − P2(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    kind: RegularizerKind,
    lambda: f64,
    theta: f64,
    mu: f64,
    p: usize,
}

impl Regularizer {
    fn check_lambda(lambda: f64) -> Result<()> {
        L1Norm::new(lambda).map(|_| ())
    }

    pub fn scad(lambda: f64, theta: f64) -> Result<Self> {
        Self::check_lambda(lambda)?;
        if !(theta > 2.0 && theta.is_finite()) {
            return Err(DcError::InvalidParameter(format!(
                "SCAD requires theta > 2 (got {theta})"
            )));
        }
        Ok(Self { kind: RegularizerKind::Scad, lambda, theta, mu: 0.0, p: 0 })
    }

    pub fn mcp(lambda: f64, theta: f64) -> Result<Self> {
        Self::check_lambda(lambda)?;
        if !(theta > 1.0 && theta.is_finite()) {
            return Err(DcError::InvalidParameter(format!(
                "MCP requires theta > 1 (got {theta})"
            )));
        }
        Ok(Self { kind: RegularizerKind::Mcp, lambda, theta, mu: 0.0, p: 0 })
    }

    pub fn l1_minus_l2(lambda: f64) -> Result<Self> {
        Self::check_lambda(lambda)?;
        Ok(Self { kind: RegularizerKind::L1MinusL2, lambda, theta: 0.0, mu: 0.0, p: 0 })
    }

    /// `p < n` is checked against the problem dimension by [`Regularizer::check_dimension`].
    pub fn truncated_l1(lambda: f64, mu: f64, p: usize) -> Result<Self> {
        Self::check_lambda(lambda)?;
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(DcError::InvalidParameter(format!(
                "truncated-l1 requires 0 < mu <= 1 (got {mu})"
            )));
        }
        if p == 0 {
            return Err(DcError::InvalidParameter(
                "truncated-l1 requires p >= 1 (got 0)".into(),
            ));
        }
        Ok(Self { kind: RegularizerKind::TruncatedL1, lambda, theta: 0.0, mu, p })
    }

    pub fn capped_l1(lambda: f64, theta: f64) -> Result<Self> {
        Self::check_lambda(lambda)?;
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(DcError::InvalidParameter(format!(
                "capped-l1 requires theta > 0 (got {theta})"
            )));
        }
        Ok(Self { kind: RegularizerKind::CappedL1, lambda, theta, mu: 0.0, p: 0 })
    }

    /// Builds a regularizer of `kind` from the full parameter set; parameters
    /// the kind does not use are ignored.
    pub fn from_parts(kind: RegularizerKind, lambda: f64, theta: f64, mu: f64, p: usize) -> Result<Self> {
        match kind {
            RegularizerKind::Scad => Self::scad(lambda, theta),
            RegularizerKind::Mcp => Self::mcp(lambda, theta),
            RegularizerKind::L1MinusL2 => Self::l1_minus_l2(lambda),
            RegularizerKind::TruncatedL1 => Self::truncated_l1(lambda, mu, p),
            RegularizerKind::CappedL1 => Self::capped_l1(lambda, theta),
        }
    }

    /// Verifies the regularizer is usable on vectors of length `n`.
    pub fn check_dimension(&self, n: usize) -> Result<()> {
        if self.kind == RegularizerKind::TruncatedL1 && self.p >= n {
            return Err(DcError::InvalidParameter(format!(
                "truncated-l1 requires p < n (got p = {}, n = {n})",
                self.p
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> RegularizerKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn p1(&self) -> L1Norm {
        L1Norm { lambda: self.lambda }
    }

    pub fn p1_value(&self, x: &[f64]) -> f64 {
        self.p1().value(x)
    }

    /// Soft-thresholding at level `λ · step`.
    pub fn prox_p1(&self, v: &[f64], step: f64) -> Vec<f64> {
        self.p1().prox(v, step)
    }

    pub fn p2_value(&self, x: &[f64]) -> f64 {
        let (lambda, theta) = (self.lambda, self.theta);
        match self.kind {
            RegularizerKind::Scad => x
                .iter()
                .map(|v| {
                    let t = v.abs();
                    if t <= lambda {
                        0.0
                    } else if t <= theta * lambda {
                        (t - lambda).powi(2) / (2.0 * (theta - 1.0))
                    } else {
                        lambda * t - (theta + 1.0) * lambda * lambda / 2.0
                    }
                })
                .sum(),
            RegularizerKind::Mcp => x
                .iter()
                .map(|v| {
                    let t = v.abs();
                    if t <= theta * lambda {
                        t * t / (2.0 * theta)
                    } else {
                        lambda * t - theta * lambda * lambda / 2.0
                    }
                })
                .sum(),
            RegularizerKind::L1MinusL2 => lambda * norm(x),
            RegularizerKind::TruncatedL1 => {
                let mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                let top = top_indices(&mags, self.p);
                let mut sorted = top;
                sorted.sort_unstable();
                lambda * self.mu * sorted.iter().map(|&i| mags[i]).sum::<f64>()
            }
            RegularizerKind::CappedL1 => {
                lambda * x.iter().map(|v| (v.abs() - theta).max(0.0)).sum::<f64>()
            }
        }
    }

    /// Deterministic element of `∂P2(x)`: the gradient for SCAD/MCP, `0` at
    /// the origin for ℓ1−2, `0` at the Capped-ℓ1 kinks, and for Truncated ℓ1
    /// `λμ·sign` on the top-`p` magnitudes (ties to the lower index).
    pub fn p2_subgradient(&self, x: &[f64]) -> Vec<f64> {
        let (lambda, theta) = (self.lambda, self.theta);
        match self.kind {
            RegularizerKind::Scad => x
                .iter()
                .map(|&v| {
                    let t = v.abs();
                    if t <= lambda {
                        0.0
                    } else if t <= theta * lambda {
                        sign(v) * (t - lambda) / (theta - 1.0)
                    } else {
                        sign(v) * lambda
                    }
                })
                .collect(),
            RegularizerKind::Mcp => x
                .iter()
                .map(|&v| if v.abs() <= theta * lambda { v / theta } else { sign(v) * lambda })
                .collect(),
            RegularizerKind::L1MinusL2 => {
                let nrm = norm(x);
                if nrm == 0.0 {
                    vec![0.0; x.len()]
                } else {
                    x.iter().map(|v| lambda * v / nrm).collect()
                }
            }
            RegularizerKind::TruncatedL1 => {
                let mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                let mut g = vec![0.0; x.len()];
                let scale = lambda * self.mu;
                for i in top_indices(&mags, self.p) {
                    g[i] = scale * sign(x[i]);
                }
                g
            }
            RegularizerKind::CappedL1 => x
                .iter()
                .map(|&v| if v.abs() > theta { lambda * sign(v) } else { 0.0 })
                .collect(),
        }
    }

    /// The full penalty `P1(x) − P2(x)`.
    pub fn penalty(&self, x: &[f64]) -> f64 {
        self.p1_value(x) - self.p2_value(x)
    }
}

/// The regularizer acts as the `P2` term when boxed into a problem.
impl SubgradientTerm for Regularizer {
    fn value(&self, x: &[f64]) -> f64 {
        self.p2_value(x)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.p2_subgradient(x)
    }
}
