//! Dense matrices and the handful of vector kernels the solvers need.
//!
//! Matrices are handed in row-major order but stored column by column: the
//! solvers multiply by sparse iterates (`A x` touches only the columns of the
//! nonzero entries of `x`) and by dense residuals on the transpose side (`Aᵀ v`
//! is one contiguous dot product per column).

use crate::error::{DcError, Result};

/// Relative change of the leading Ritz value at which the spectral estimate stops.
pub const SPECTRAL_TOL: f64 = 1e-10;
/// Iteration cap for the spectral estimate.
pub const SPECTRAL_MAX_ITER: usize = 5000;
/// Multiplicative inflation applied to the converged Ritz value so the
/// returned value errs on the side of an upper bound.
pub const SPECTRAL_INFLATION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    /// Column-major entries.
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(DcError::InvalidParameter(format!(
                "matrix dimensions must be at least 1x1 (got {rows}x{cols})"
            )));
        }
        crate::error::check_len("matrix entries", rows * cols, entries.len())?;
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(DcError::NonFinite("matrix entries"));
        }
        let mut data = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                data[j * rows + i] = entries[i * cols + j];
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a closure `(row, col) -> entry`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::from_row_major(rows, cols, &entries)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [f64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// `A x`. Zero entries of `x` are skipped, which leaves the result
    /// bit-identical to the dense product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec: dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.column(j), &mut y);
            }
        }
        y
    }

    /// `Aᵀ v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "tr_matvec: dimension mismatch");
        (0..self.cols).map(|j| dot(self.column(j), v)).collect()
    }

    /// `(Aᵀ v, Aᵀ w)` in a single sweep over the matrix.
    pub fn tr_matvec_pair(&self, v: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(v.len(), self.rows, "tr_matvec_pair: dimension mismatch");
        assert_eq!(w.len(), self.rows, "tr_matvec_pair: dimension mismatch");
        let mut out_v = Vec::with_capacity(self.cols);
        let mut out_w = Vec::with_capacity(self.cols);
        for j in 0..self.cols {
            let col = self.column(j);
            out_v.push(dot(col, v));
            out_w.push(dot(col, w));
        }
        (out_v, out_w)
    }
}

/// Dot product with four interleaved accumulators; the summation order is
/// fixed so results are reproducible across runs.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail_a = chunks_a.remainder();
    let tail_b = chunks_b.remainder();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut tail = 0.0;
    for (x, y) in tail_a.iter().zip(tail_b) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `a - b`
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `‖a - b‖`
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let d = sub(a, b);
    norm(&d)
}

/// Upper estimate of `λ_max(AᵀA)` by the Lanczos process.
///
/// Runs on the smaller Gram side (`AᵀA` when `n ≤ m`, otherwise `AAᵀ`; both
/// have the same nonzero spectrum) with full reorthogonalization, from a fixed
/// pseudo-random start with entries in `[0.5, 1.5)`. When the Krylov space
/// becomes invariant before spanning everything, the process restarts from
/// the coordinate vector least represented in the basis, so directions
/// orthogonal to the start are still reached. Each Krylov block stops when
/// its largest Ritz value changes by less than [`SPECTRAL_TOL`] relative; the
/// result is the largest Ritz value over all blocks, inflated by
/// `1 + SPECTRAL_INFLATION`. Spanning the whole space makes the value exact.
/// Hitting [`SPECTRAL_MAX_ITER`] steps returns the best estimate inside
/// [`DcError::SpectralNotConverged`].
pub fn spectral_bound(a: &DenseMatrix) -> Result<f64> {
    let (m, n) = (a.rows(), a.cols());
    let apply = |v: &[f64]| -> Vec<f64> {
        if n <= m {
            a.tr_matvec(&a.matvec(v))
        } else {
            a.matvec(&a.tr_matvec(v))
        }
    };
    let dim = m.min(n);
    let steps = SPECTRAL_MAX_ITER.min(dim);
    let inflate = |v: f64| v.max(0.0) * (1.0 + SPECTRAL_INFLATION);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha: Vec<f64> = Vec::with_capacity(steps);
    // beta[i] couples basis vectors i and i + 1; 0 marks a restart.
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut q = start_vector(dim);
    let mut block_start = 0;
    let mut block_ritz = f64::NAN;
    let mut settled = f64::NEG_INFINITY;

    while basis.len() < steps {
        let mut w = apply(&q);
        let a_k = dot(&q, &w);
        axpy(-a_k, &q, &mut w);
        if basis.len() > block_start {
            axpy(-beta[beta.len() - 1], &basis[basis.len() - 1], &mut w);
        }
        basis.push(q);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        alpha.push(a_k);

        let next = largest_tridiagonal_eigenvalue(&alpha[block_start..], &beta[block_start..]);
        let converged = (next - block_ritz).abs() <= SPECTRAL_TOL * next.abs();
        block_ritz = next;
        let ritz = settled.max(block_ritz);
        if converged {
            return Ok(inflate(ritz));
        }
        if basis.len() == steps {
            break;
        }
        let b_k = norm(&w);
        if b_k > 1e-13 * ritz.abs().max(f64::MIN_POSITIVE) {
            beta.push(b_k);
            q = w.into_iter().map(|x| x / b_k).collect();
        } else {
            // invariant subspace: restart orthogonally to everything so far
            settled = ritz;
            beta.push(0.0);
            block_start = basis.len();
            block_ritz = f64::NAN;
            q = fresh_direction(&basis, dim);
        }
    }
    let ritz = settled.max(block_ritz);
    if basis.len() == dim {
        // The basis spans the whole space; the Ritz values are the spectrum.
        return Ok(inflate(largest_tridiagonal_eigenvalue(&alpha, &beta)).max(inflate(ritz)));
    }
    Err(DcError::SpectralNotConverged {
        estimate: inflate(ritz),
        iterations: basis.len(),
    })
}

/// Unit vector with splitmix64-derived entries in `[0.5, 1.5)`.
fn start_vector(dim: usize) -> Vec<f64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut v: Vec<f64> = (0..dim)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            0.5 + (z >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    let s = norm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// The coordinate vector with the largest component orthogonal to `basis`,
/// orthogonalized and normalized.
fn fresh_direction(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    // ‖P⊥ e_j‖² = 1 − Σ_v v_j²
    let captured = (0..dim).map(|j| basis.iter().map(|v| v[j] * v[j]).sum::<f64>());
    let j = captured
        .enumerate()
        .fold((0, f64::INFINITY), |best, (j, c)| if c < best.1 { (j, c) } else { best })
        .0;
    let mut e = vec![0.0; dim];
    e[j] = 1.0;
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, &e);
            axpy(-c, v, &mut e);
        }
    }
    let s = norm(&e);
    e.iter_mut().for_each(|x| *x /= s);
    e
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`, by Sturm-count bisection. Returns the
/// upper end of the final bracket.
fn largest_tridiagonal_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    let k = alpha.len();
    let off = |i: usize| if i < beta.len() { beta[i].abs() } else { 0.0 };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let radius = off(i) + if i > 0 { off(i - 1) } else { 0.0 };
        lo = lo.min(alpha[i] - radius);
        hi = hi.max(alpha[i] + radius);
    }
    // Number of eigenvalues strictly below x.
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..k {
            let b2 = if i > 0 { beta[i - 1] * beta[i - 1] } else { 0.0 };
            d = alpha[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
