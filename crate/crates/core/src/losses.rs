//! Separable losses `Ψ(s) = Σ ψᵢ(sᵢ)` with Lipschitz derivatives, each
//! attaining the minimum value 0.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, DcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `½(s − b)²`
    Squared,
    /// `½(1 − b s)₊²`, `b ∈ {−1, +1}`
    SquaredHinge,
    /// `½(|s − b| − ε)₊²`
    QuadEpsInsensitive,
    /// `(τ/2)(s − b)₊² + ((1−τ)/2)(b − s)₊²`
    QuantileSquared,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Squared,
        LossKind::SquaredHinge,
        LossKind::QuadEpsInsensitive,
        LossKind::QuantileSquared,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::SquaredHinge => "squared-hinge",
            LossKind::QuadEpsInsensitive => "eps-insensitive",
            LossKind::QuantileSquared => "quantile",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = DcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "squared" | "least-squares" => Ok(LossKind::Squared),
            "squared-hinge" => Ok(LossKind::SquaredHinge),
            "eps-insensitive" | "quad-eps-insensitive" => Ok(LossKind::QuadEpsInsensitive),
            "quantile" | "quantile-squared" => Ok(LossKind::QuantileSquared),
            other => Err(DcError::InvalidParameter(format!(
                "unknown loss '{other}' (expected squared, squared-hinge, eps-insensitive or quantile)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loss {
    kind: LossKind,
    targets: Vec<f64>,
    epsilon: f64,
    tau: f64,
    modulus: f64,
}

impl Loss {
    fn build(kind: LossKind, targets: Vec<f64>, epsilon: f64, tau: f64) -> Result<Self> {
        if targets.is_empty() {
            return Err(DcError::InvalidParameter("loss targets must be nonempty".into()));
        }
        if targets.iter().any(|b| !b.is_finite()) {
            return Err(DcError::NonFinite("loss targets"));
        }
        Ok(Self { kind, targets, epsilon, tau, modulus: 1.0 })
    }

    pub fn squared(targets: Vec<f64>) -> Result<Self> {
        Self::build(LossKind::Squared, targets, 0.0, 0.0)
    }

    pub fn squared_hinge(labels: Vec<f64>) -> Result<Self> {
        if let Some(b) = labels.iter().find(|&&b| b != 1.0 && b != -1.0) {
            return Err(DcError::InvalidParameter(format!(
                "squared-hinge labels must be +1 or -1 (got {b})"
            )));
        }
        Self::build(LossKind::SquaredHinge, labels, 0.0, 0.0)
    }

    pub fn quad_eps_insensitive(targets: Vec<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(DcError::InvalidParameter(format!(
                "eps-insensitive loss requires epsilon > 0 (got {epsilon})"
            )));
        }
        Self::build(LossKind::QuadEpsInsensitive, targets, epsilon, 0.0)
    }

    pub fn quantile_squared(targets: Vec<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(DcError::InvalidParameter(format!(
                "quantile loss requires 0 < tau < 1 (got {tau})"
            )));
        }
        Self::build(LossKind::QuantileSquared, targets, 0.0, tau)
    }

    /// Overrides the Lipschitz modulus `L_Ψ` (default 1, valid for every kind).
    pub fn with_modulus(mut self, modulus: f64) -> Result<Self> {
        if !(modulus > 0.0 && modulus.is_finite()) {
            return Err(DcError::InvalidParameter(format!(
                "loss modulus must be > 0 (got {modulus})"
            )));
        }
        self.modulus = modulus;
        Ok(self)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `L_Ψ`
    pub fn lipschitz_modulus(&self) -> f64 {
        self.modulus
    }

    /// `ψᵢ(s)`
    pub fn coordinate_value(&self, i: usize, s: f64) -> f64 {
        let b = self.targets[i];
        match self.kind {
            LossKind::Squared => 0.5 * (s - b) * (s - b),
            LossKind::SquaredHinge => {
                let h = (1.0 - b * s).max(0.0);
                0.5 * h * h
            }
            LossKind::QuadEpsInsensitive => {
                let h = ((s - b).abs() - self.epsilon).max(0.0);
                0.5 * h * h
            }
            LossKind::QuantileSquared => {
                let up = (s - b).max(0.0);
                let down = (b - s).max(0.0);
                0.5 * self.tau * up * up + 0.5 * (1.0 - self.tau) * down * down
            }
        }
    }

    /// `ψᵢ'(s)`
    pub fn coordinate_derivative(&self, i: usize, s: f64) -> f64 {
        let b = self.targets[i];
        match self.kind {
            LossKind::Squared => s - b,
            LossKind::SquaredHinge => -b * (1.0 - b * s).max(0.0),
            LossKind::QuadEpsInsensitive => {
                let r = s - b;
                let h = (r.abs() - self.epsilon).max(0.0);
                if r >= 0.0 {
                    h
                } else {
                    -h
                }
            }
            LossKind::QuantileSquared => {
                self.tau * (s - b).max(0.0) - (1.0 - self.tau) * (b - s).max(0.0)
            }
        }
    }

    /// `Ψ(s)`
    pub fn value(&self, s: &[f64]) -> Result<f64> {
        check_len("loss value", self.len(), s.len())?;
        Ok(self.value_unchecked(s))
    }

    pub(crate) fn value_unchecked(&self, s: &[f64]) -> f64 {
        s.iter().enumerate().map(|(i, &si)| self.coordinate_value(i, si)).sum()
    }

    /// `∇Ψ(s)`
    pub fn gradient(&self, s: &[f64]) -> Result<Vec<f64>> {
        check_len("loss gradient", self.len(), s.len())?;
        Ok(self.gradient_unchecked(s))
    }

    pub(crate) fn gradient_unchecked(&self, s: &[f64]) -> Vec<f64> {
        s.iter().enumerate().map(|(i, &si)| self.coordinate_derivative(i, si)).collect()
    }

    /// A minimizer `z̃` of `Ψ` with `Ψ(z̃) = 0`; for every kind this is `b`
    /// (for the hinge `bᵢ = 1/bᵢ` since the labels are ±1).
    pub fn argmin_representative(&self) -> Vec<f64> {
        self.targets.clone()
    }
}
