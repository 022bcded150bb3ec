//! Random regression instances with sparse signals and gross outliers.
//!
//! Draw order for one seed: the `(m + t) × n` Gaussian matrix in row-major
//! order, then the support of `x_true` as a shuffle prefix of `0..n`, then
//! the `s` signal values in support order, then the `m + t` noise values.

use dcopt::{DcError, DenseMatrix};

use crate::config::Dims;
use crate::rng::SeededRng;

#[derive(Debug, Clone)]
pub struct InstanceData {
    pub dims: Dims,
    /// `(m + t) × n` with unit-norm columns.
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub x_true: Vec<f64>,
    /// Support of `x_true` in draw order.
    pub support: Vec<usize>,
    /// Rows carrying an outlier: the last `t`.
    pub outlier_support: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct InstanceSpec {
    pub dims: Dims,
    pub sigma: f64,
    pub outlier_magnitude: f64,
}

/// `b = A x_true − z + σ ε` with `z` equal to `outlier_magnitude` on the last
/// `t` rows.
pub fn generate_instance(spec: &InstanceSpec, seed: u64) -> Result<InstanceData, DcError> {
    let Dims { m, n, s, t } = spec.dims;
    if s > n {
        return Err(DcError::InvalidParameter(format!("sparsity s = {s} exceeds n = {n}")));
    }
    if t > m {
        return Err(DcError::InvalidParameter(format!("outlier count t = {t} exceeds m = {m}")));
    }
    let rows = m + t;
    let mut rng = SeededRng::new(seed);

    let mut entries = vec![0.0; rows * n];
    for e in entries.iter_mut() {
        *e = rng.normal();
    }
    let mut a = DenseMatrix::from_row_major(rows, n, &entries)?;
    drop(entries);
    for j in 0..n {
        let col = a.column_mut(j);
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            col.iter_mut().for_each(|v| *v /= norm);
        }
    }

    let support = rng.shuffle_prefix(n, s);
    let mut x_true = vec![0.0; n];
    for &j in &support {
        x_true[j] = rng.normal();
    }

    let mut b = a.matvec(&x_true);
    for (i, bi) in b.iter_mut().enumerate() {
        let outlier = if i >= m { spec.outlier_magnitude } else { 0.0 };
        *bi = (*bi - outlier) + spec.sigma * rng.normal();
    }

    Ok(InstanceData {
        dims: spec.dims,
        a,
        b,
        x_true,
        support,
        outlier_support: (m..rows).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: usize, n: usize, s: usize, t: usize, sigma: f64) -> InstanceSpec {
        InstanceSpec { dims: Dims { m, n, s, t }, sigma, outlier_magnitude: 8.0 }
    }

    #[test]
    fn unit_columns_and_support() {
        let inst = generate_instance(&spec(40, 100, 7, 4, 1e-2), 3).unwrap();
        for j in 0..100 {
            let norm: f64 = inst.a.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        assert_eq!(inst.x_true.iter().filter(|v| **v != 0.0).count(), 7);
        assert_eq!(inst.outlier_support, vec![40, 41, 42, 43]);
        assert_eq!(inst.b.len(), 44);
    }

    #[test]
    fn noiseless_outlier_free_is_exact() {
        let inst = generate_instance(&spec(30, 60, 5, 0, 0.0), 9).unwrap();
        assert_eq!(inst.b, inst.a.matvec(&inst.x_true));
    }

    #[test]
    fn same_seed_same_bits() {
        let s = spec(20, 50, 4, 2, 1e-2);
        let a = generate_instance(&s, 17).unwrap();
        let b = generate_instance(&s, 17).unwrap();
        assert_eq!(a.a.to_row_major(), b.a.to_row_major());
        assert_eq!(a.b, b.b);
        assert_eq!(a.x_true, b.x_true);
        let c = generate_instance(&s, 18).unwrap();
        assert_ne!(a.b, c.b);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(generate_instance(&spec(10, 5, 6, 0, 0.0), 1).is_err());
        assert!(generate_instance(&spec(10, 50, 5, 11, 0.0), 1).is_err());
    }
}
