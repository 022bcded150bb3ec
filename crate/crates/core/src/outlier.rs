//! Sparse recovery with outlier detection:
//!
//! ```text
//! min_{x, z}  Ψ(Ax − z) + δ_Ω(z) + J1(x) − J2(x),     Ω = {z : ‖z‖₀ ≤ r}
//! ```
//!
//! Minimizing out `z` gives a DC program in `x` alone,
//!
//! ```text
//! f(x)  = (L_Ψ/2)‖Ax‖²
//! P1(x) = J1(x) = λ‖x‖₁
//! P2(x) = Q(x) + J2(x),   Q(x) = (L_Ψ/2)‖Ax‖² − min_{z∈Ω} Ψ(Ax − z)
//! ```
//!
//! where the inner minimization keeps the `r` coordinates with the largest
//! loss and zeroes their residuals.

use crate::error::{check_len, DcError, Result};
use crate::linalg::{dot, norm_sq, spectral_bound, DenseMatrix};
use crate::losses::Loss;
use crate::problem::{DcProblem, FirstOrder, PointEval};
use crate::regularizers::{top_indices, Regularizer};

/// Relative slack allowed when a caller-supplied modulus is compared against
/// the spectral estimate.
const MODULUS_CHECK_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct OutlierModel {
    a: DenseMatrix,
    loss: Loss,
    regularizer: Regularizer,
    budget: usize,
    lipschitz: f64,
}

impl OutlierModel {
    /// Builds the model with `L = L_Ψ · spectral_bound(A)`.
    pub fn new(a: DenseMatrix, loss: Loss, regularizer: Regularizer, budget: usize) -> Result<Self> {
        Self::validate(&a, &loss, &regularizer, budget)?;
        let lipschitz = loss.lipschitz_modulus() * spectral_bound(&a)?;
        if !(lipschitz > 0.0) {
            return Err(DcError::InvalidParameter("data matrix has zero spectral norm".into()));
        }
        Ok(Self { a, loss, regularizer, budget, lipschitz })
    }

    /// Builds the model with a caller-supplied `L`, which must dominate
    /// `L_Ψ · λ_max(AᵀA)`.
    pub fn with_lipschitz(
        a: DenseMatrix,
        loss: Loss,
        regularizer: Regularizer,
        budget: usize,
        lipschitz: f64,
    ) -> Result<Self> {
        Self::validate(&a, &loss, &regularizer, budget)?;
        let bound = loss.lipschitz_modulus() * spectral_bound(&a)?;
        if !(lipschitz.is_finite() && lipschitz > 0.0 && lipschitz >= bound * (1.0 - MODULUS_CHECK_SLACK)) {
            return Err(DcError::InvalidParameter(format!(
                "solver modulus must satisfy L >= L_psi * lambda_max(A^T A) = {bound:e} (got {lipschitz:e})"
            )));
        }
        Ok(Self { a, loss, regularizer, budget, lipschitz })
    }

    /// Same data matrix and spectral estimate, new loss, regularizer and
    /// budget. Avoids recomputing it across parameter sweeps.
    pub fn with_terms(&self, loss: Loss, regularizer: Regularizer, budget: usize) -> Result<Self> {
        Self::validate(&self.a, &loss, &regularizer, budget)?;
        let lipschitz = loss.lipschitz_modulus() * (self.lipschitz / self.loss.lipschitz_modulus());
        Ok(Self { a: self.a.clone(), loss, regularizer, budget, lipschitz })
    }

    fn validate(a: &DenseMatrix, loss: &Loss, regularizer: &Regularizer, budget: usize) -> Result<()> {
        check_len("loss targets vs. rows of A", a.rows(), loss.len())?;
        regularizer.check_dimension(a.cols())?;
        if budget == 0 || budget > a.rows() {
            return Err(DcError::InvalidParameter(format!(
                "outlier budget must satisfy 1 <= r <= m = {} (got {budget})",
                a.rows()
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn loss(&self) -> &Loss {
        &self.loss
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn loss_modulus(&self) -> f64 {
        self.loss.lipschitz_modulus()
    }

    /// A minimizer of `Ψ(s − z)` over `z ∈ Ω` for `s = Ax`.
    pub fn z_step_from_image(&self, image: &[f64]) -> Vec<f64> {
        let anchor = self.loss.argmin_representative();
        let scores: Vec<f64> = image
            .iter()
            .zip(&anchor)
            .enumerate()
            .map(|(i, (&s, &zt))| self.loss.coordinate_value(i, s) - self.loss.coordinate_value(i, zt))
            .collect();
        let mut z = vec![0.0; image.len()];
        for i in top_indices(&scores, self.budget) {
            z[i] = image[i] - anchor[i];
        }
        z
    }

    /// `z⁺ ∈ Argmin_{z∈Ω} Ψ(Ax − z)`
    pub fn z_step(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("z_step", self.a.cols(), x.len())?;
        Ok(self.z_step_from_image(&self.a.matvec(x)))
    }

    fn q_value_from_image(&self, image: &[f64], z: &[f64]) -> f64 {
        let residual: Vec<f64> = image.iter().zip(z).map(|(s, zi)| s - zi).collect();
        0.5 * self.loss_modulus() * norm_sq(image) - self.loss.value_unchecked(&residual)
    }

    /// `Q(x) = (L_Ψ/2)‖Ax‖² − min_{z∈Ω} Ψ(Ax − z)`
    pub fn q_value(&self, x: &[f64]) -> Result<f64> {
        check_len("q_value", self.a.cols(), x.len())?;
        let image = self.a.matvec(x);
        let z = self.z_step_from_image(&image);
        Ok(self.q_value_from_image(&image, &z))
    }

    /// `L_Ψ AᵀAx − Aᵀ∇Ψ(Ax − z⁺) ∈ ∂Q(x)`
    pub fn q_subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("q_subgradient", self.a.cols(), x.len())?;
        let image = self.a.matvec(x);
        let (gradient, secant) = self.gradient_parts(&image);
        Ok(gradient.iter().zip(&secant).map(|(g, w)| g - w).collect())
    }

    /// `(L_Ψ AᵀAx, Aᵀ∇Ψ(Ax − z⁺))` from `Ax`, in one sweep over `A`.
    fn gradient_parts(&self, image: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z = self.z_step_from_image(image);
        let residual: Vec<f64> = image.iter().zip(&z).map(|(s, zi)| s - zi).collect();
        let loss_grad = self.loss.gradient_unchecked(&residual);
        let (mut gradient, secant) = self.a.tr_matvec_pair(image, &loss_grad);
        let modulus = self.loss_modulus();
        if modulus != 1.0 {
            gradient.iter_mut().for_each(|g| *g *= modulus);
        }
        (gradient, secant)
    }

    /// `Φ(x, z) = Ψ(Ax − z) + δ_Ω(z) + J1(x) − J2(x)`; `+∞` when `‖z‖₀ > r`.
    pub fn joint_objective(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        check_len("joint objective (x)", self.a.cols(), x.len())?;
        check_len("joint objective (z)", self.a.rows(), z.len())?;
        if z.iter().filter(|v| **v != 0.0).count() > self.budget {
            return Ok(f64::INFINITY);
        }
        let image = self.a.matvec(x);
        let residual: Vec<f64> = image.iter().zip(z).map(|(s, zi)| s - zi).collect();
        Ok(self.loss.value_unchecked(&residual) + self.regularizer.penalty(x))
    }

    /// The DC program in `x` alone.
    pub fn compile(&self) -> OutlierProblem<'_> {
        OutlierProblem { model: self }
    }
}

/// [`OutlierModel`] viewed as a [`DcProblem`]. Evaluations cache `Ax` so a
/// full first-order step costs one sparse product and one fused transpose
/// sweep.
#[derive(Debug, Clone, Copy)]
pub struct OutlierProblem<'a> {
    model: &'a OutlierModel,
}

impl OutlierProblem<'_> {
    pub fn model(&self) -> &OutlierModel {
        self.model
    }
}

impl DcProblem for OutlierProblem<'_> {
    fn dim(&self) -> usize {
        self.model.a.cols()
    }

    fn lipschitz(&self) -> f64 {
        self.model.lipschitz
    }

    fn smooth_value(&self, x: &[f64]) -> f64 {
        0.5 * self.model.loss_modulus() * norm_sq(&self.model.a.matvec(x))
    }

    fn smooth_gradient(&self, x: &[f64]) -> Vec<f64> {
        let modulus = self.model.loss_modulus();
        let mut g = self.model.a.tr_matvec(&self.model.a.matvec(x));
        if modulus != 1.0 {
            g.iter_mut().for_each(|v| *v *= modulus);
        }
        g
    }

    fn p1_value(&self, x: &[f64]) -> f64 {
        self.model.regularizer.p1_value(x)
    }

    fn prox_p1(&self, v: &[f64], step: f64) -> Vec<f64> {
        self.model.regularizer.prox_p1(v, step)
    }

    fn p2_value(&self, x: &[f64]) -> f64 {
        let image = self.model.a.matvec(x);
        let z = self.model.z_step_from_image(&image);
        self.model.q_value_from_image(&image, &z) + self.model.regularizer.p2_value(x)
    }

    fn p2_subgradient(&self, x: &[f64]) -> Vec<f64> {
        let image = self.model.a.matvec(x);
        let (gradient, secant) = self.model.gradient_parts(&image);
        let eta = self.model.regularizer.p2_subgradient(x);
        gradient
            .iter()
            .zip(&secant)
            .zip(&eta)
            .map(|((g, w), e)| (g - w) + e)
            .collect()
    }

    fn affine_gradient(&self) -> bool {
        true
    }

    fn evaluate(&self, x: &[f64]) -> PointEval {
        let image = self.model.a.matvec(x);
        let z = self.model.z_step_from_image(&image);
        let smooth = 0.5 * self.model.loss_modulus() * dot(&image, &image);
        let q = self.model.q_value_from_image(&image, &z);
        PointEval {
            smooth,
            p1: self.model.regularizer.p1_value(x),
            p2: q + self.model.regularizer.p2_value(x),
            aux: image,
        }
    }

    fn first_order(&self, x: &[f64], eval: &PointEval) -> FirstOrder {
        let image = if eval.aux.len() == self.model.a.rows() {
            std::borrow::Cow::Borrowed(&eval.aux)
        } else {
            std::borrow::Cow::Owned(self.model.a.matvec(x))
        };
        let (gradient, secant) = self.model.gradient_parts(&image);
        let eta = self.model.regularizer.p2_subgradient(x);
        let subgradient = gradient
            .iter()
            .zip(&secant)
            .zip(&eta)
            .map(|((g, w), e)| (g - w) + e)
            .collect();
        FirstOrder { gradient, subgradient, secant }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::evaluate_objective;

    fn identity_model(b: Vec<f64>, r: usize) -> OutlierModel {
        let m = b.len();
        OutlierModel::new(
            DenseMatrix::identity(m).unwrap(),
            Loss::squared(b).unwrap(),
            Regularizer::truncated_l1(1.0, 0.5, 1).unwrap(),
            r,
        )
        .unwrap()
    }

    #[test]
    fn z_step_keeps_largest_residual() {
        // Ax − b = (5, −1, 0.3) at x = 0 when b = (−5, 1, −0.3)
        let model = identity_model(vec![-5.0, 1.0, -0.3], 1);
        assert_eq!(model.z_step(&[0.0; 3]).unwrap(), vec![5.0, 0.0, 0.0]);
    }

    #[test]
    fn full_budget_absorbs_everything() {
        let b = vec![1.0, -2.0, 0.5];
        let model = identity_model(b.clone(), 3);
        let x = [0.3, 0.1, -0.7];
        let z = model.z_step(&x).unwrap();
        let residual: Vec<f64> = x.iter().zip(&z).map(|(s, zi)| s - zi).collect();
        assert_eq!(model.loss().value(&residual).unwrap(), 0.0);
        let q = model.q_value(&x).unwrap();
        assert!((q - 0.5 * norm_sq(&x)).abs() < 1e-15);
        let g = model.q_subgradient(&x).unwrap();
        assert_eq!(g, x.to_vec());
    }

    #[test]
    fn q_at_origin_drops_the_largest_targets() {
        let b = vec![3.0, -1.0, 2.0, 0.5];
        let model = identity_model(b, 2);
        let q = model.q_value(&[0.0; 4]).unwrap();
        assert!((q + 0.5 * (1.0 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn construction_checks() {
        let a = DenseMatrix::identity(3).unwrap();
        let loss = Loss::squared(vec![0.0; 3]).unwrap();
        let reg = Regularizer::truncated_l1(1.0, 0.5, 1).unwrap();
        assert!(OutlierModel::new(a.clone(), loss.clone(), reg.clone(), 0).is_err());
        assert!(OutlierModel::new(a.clone(), loss.clone(), reg.clone(), 4).is_err());
        assert!(OutlierModel::new(a.clone(), Loss::squared(vec![0.0; 2]).unwrap(), reg.clone(), 1).is_err());
        let too_big_p = Regularizer::truncated_l1(1.0, 0.5, 3).unwrap();
        assert!(OutlierModel::new(a.clone(), loss.clone(), too_big_p, 1).is_err());
        let msg = OutlierModel::with_lipschitz(a.clone(), loss.clone(), reg.clone(), 1, 0.5)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("L >="), "{msg}");
        assert!(OutlierModel::with_lipschitz(a, loss, reg, 1, 1.0).is_ok());
    }

    #[test]
    fn compiled_objective_matches_joint_objective() {
        let b = vec![1.0, -2.0, 0.5, 4.0];
        let model = identity_model(b, 1);
        let problem = model.compile();
        let x = [0.2, -0.4, 0.0, 1.5];
        let z = model.z_step(&x).unwrap();
        let direct = model.joint_objective(&x, &z).unwrap();
        let compiled = evaluate_objective(&problem, &x).unwrap();
        assert!((direct - compiled).abs() < 1e-12);
        assert!(compiled >= 0.0);
    }

    #[test]
    fn first_order_matches_primitive_calls() {
        let b = vec![1.0, -2.0, 0.5, 4.0];
        let model = identity_model(b, 2);
        let problem = model.compile();
        let x = [0.2, -0.4, 0.0, 1.5];
        let eval = problem.evaluate(&x);
        let fo = problem.first_order(&x, &eval);
        assert_eq!(fo.gradient, problem.smooth_gradient(&x));
        assert_eq!(fo.subgradient, problem.p2_subgradient(&x));
        assert_eq!(eval.p2, problem.p2_value(&x));
    }
}
