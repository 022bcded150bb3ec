//! Independent oracles shared by the integration tests. Nothing here calls
//! into the loss, outlier or solver code paths it is used to check.

#![allow(dead_code)]

use dcopt::{DenseMatrix, Loss, LossKind, Regularizer, RegularizerKind};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * gaussian(rng)).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let entries = gaussian_vec(rng, rows * cols, 1.0 / (rows as f64).sqrt());
    DenseMatrix::from_row_major(rows, cols, &entries).unwrap()
}

/// Plain row-major product, written out independently of `DenseMatrix::matvec`.
pub fn naive_matvec(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (0..a.rows())
        .map(|i| (0..a.cols()).map(|j| a.get(i, j) * x[j]).sum())
        .collect()
}

pub fn naive_tr_matvec(a: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a.get(i, j) * v[i]).sum())
        .collect()
}

/// Loss parameters kept next to the constructed [`Loss`] so the oracle can
/// evaluate `ψᵢ` from scratch.
#[derive(Debug, Clone)]
pub struct LossParams {
    pub kind: LossKind,
    pub b: Vec<f64>,
    pub eps: f64,
    pub tau: f64,
}

impl LossParams {
    pub fn psi(&self, i: usize, s: f64) -> f64 {
        let b = self.b[i];
        let pos = |v: f64| v.max(0.0);
        match self.kind {
            LossKind::Squared => 0.5 * (s - b) * (s - b),
            LossKind::SquaredHinge => 0.5 * pos(1.0 - b * s).powi(2),
            LossKind::QuadEpsInsensitive => 0.5 * pos((s - b).abs() - self.eps).powi(2),
            LossKind::QuantileSquared => {
                0.5 * self.tau * pos(s - b).powi(2) + 0.5 * (1.0 - self.tau) * pos(b - s).powi(2)
            }
        }
    }

    pub fn dpsi(&self, i: usize, s: f64) -> f64 {
        let b = self.b[i];
        let pos = |v: f64| v.max(0.0);
        match self.kind {
            LossKind::Squared => s - b,
            LossKind::SquaredHinge => -b * pos(1.0 - b * s),
            LossKind::QuadEpsInsensitive => (s - b).signum() * pos((s - b).abs() - self.eps),
            LossKind::QuantileSquared => self.tau * pos(s - b) - (1.0 - self.tau) * pos(b - s),
        }
    }

    pub fn build(&self) -> Loss {
        match self.kind {
            LossKind::Squared => Loss::squared(self.b.clone()),
            LossKind::SquaredHinge => Loss::squared_hinge(self.b.clone()),
            LossKind::QuadEpsInsensitive => Loss::quad_eps_insensitive(self.b.clone(), self.eps),
            LossKind::QuantileSquared => Loss::quantile_squared(self.b.clone(), self.tau),
        }
        .unwrap()
    }
}

pub fn random_loss(kind: LossKind, rng: &mut ChaCha8Rng, m: usize) -> LossParams {
    let b = match kind {
        LossKind::SquaredHinge => (0..m).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect(),
        _ => gaussian_vec(rng, m, 1.0),
    };
    LossParams { kind, b, eps: rng.gen_range(0.05..0.5), tau: rng.gen_range(0.1..0.9) }
}

/// Visits every subset of `0..m` with at most `r` elements.
pub fn for_each_support(m: usize, r: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(start: usize, m: usize, r: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        visit(cur);
        if cur.len() == r {
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, r, cur, visit);
            cur.pop();
        }
    }
    rec(0, m, r, &mut Vec::new(), &mut visit);
}

/// `min_{‖z‖₀ ≤ r} Ψ(s − z)` by enumerating supports. On a support `S` the
/// free coordinates reach `ψᵢ = 0` and the rest keep `ψᵢ(sᵢ)`.
pub fn brute_force_inf(params: &LossParams, image: &[f64], r: usize) -> f64 {
    let full: Vec<f64> = (0..image.len()).map(|i| params.psi(i, image[i])).collect();
    let mut best = f64::INFINITY;
    for_each_support(image.len(), r, |support| {
        let kept: f64 = (0..image.len()).filter(|i| !support.contains(i)).map(|i| full[i]).sum();
        best = best.min(kept);
    });
    best
}

/// `Ψ(s − z)` evaluated from the oracle formulas.
pub fn loss_at(params: &LossParams, image: &[f64], z: &[f64]) -> f64 {
    (0..image.len()).map(|i| params.psi(i, image[i] - z[i])).sum()
}

pub fn random_regularizer(kind: RegularizerKind, rng: &mut ChaCha8Rng, n: usize) -> Regularizer {
    let lambda = rng.gen_range(0.05..1.0);
    match kind {
        RegularizerKind::Scad => Regularizer::scad(lambda, rng.gen_range(2.1..5.0)),
        RegularizerKind::Mcp => Regularizer::mcp(lambda, rng.gen_range(1.1..5.0)),
        RegularizerKind::L1MinusL2 => Regularizer::l1_minus_l2(lambda),
        RegularizerKind::TruncatedL1 => {
            Regularizer::truncated_l1(lambda, rng.gen_range(0.5..1.0), rng.gen_range(1..n.max(2)))
        }
        RegularizerKind::CappedL1 => Regularizer::capped_l1(lambda, rng.gen_range(0.1..1.5)),
    }
    .unwrap()
}

/// Indices of the `count` largest scores; ties go to the lower index.
/// Written as a full stable sort rather than a selection.
pub fn reference_top(scores: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(count);
    idx
}

/// Trimmed-loss model with the truncated ℓ1 penalty, solved by the plain
/// proximal DCA `x⁺ = S_{λ/L}(x − (∇f(x) − ξ)/L)` with `ξ = ∇Q-part + η`.
pub struct ReferenceModel<'a> {
    pub a: &'a DenseMatrix,
    pub loss: &'a LossParams,
    pub r: usize,
    pub lambda: f64,
    pub mu: f64,
    pub p: usize,
    pub l: f64,
}

impl ReferenceModel<'_> {
    fn z(&self, image: &[f64]) -> Vec<f64> {
        // Minimum of every ψᵢ is 0 at bᵢ, so the score is ψᵢ(sᵢ).
        let scores: Vec<f64> = (0..image.len()).map(|i| self.loss.psi(i, image[i])).collect();
        let mut z = vec![0.0; image.len()];
        for i in reference_top(&scores, self.r) {
            z[i] = image[i] - self.loss.b[i];
        }
        z
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let image = naive_matvec(self.a, x);
        let z = self.z(&image);
        let fit = loss_at(self.loss, &image, &z);
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        let mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let top: f64 = reference_top(&mags, self.p).iter().map(|&i| mags[i]).sum();
        fit + self.lambda * l1 - self.lambda * self.mu * top
    }

    pub fn step(&self, x: &[f64]) -> Vec<f64> {
        let image = naive_matvec(self.a, x);
        let z = self.z(&image);
        let dpsi: Vec<f64> = (0..image.len()).map(|i| self.loss.dpsi(i, image[i] - z[i])).collect();
        // ∇f(x) − ξ_Q = Aᵀ∇Ψ(Ax − z)
        let g = naive_tr_matvec(self.a, &dpsi);
        let mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let mut eta = vec![0.0; x.len()];
        for i in reference_top(&mags, self.p) {
            if x[i] != 0.0 {
                eta[i] = self.lambda * self.mu * x[i].signum();
            }
        }
        let level = self.lambda / self.l;
        (0..x.len())
            .map(|j| {
                let v = x[j] - (g[j] - eta[j]) / self.l;
                v.signum() * (v.abs() - level).max(0.0)
            })
            .collect()
    }
}
