//! Proximal difference-of-convex solvers for problems of the form
//! `min f(x) + P1(x) − P2(x)`, with the nonconvex sparse regularizers and
//! outlier-aware least-squares models used in sparse recovery.
//!
//! ```
//! use dcopt::{pdcae_solve, DenseMatrix, Loss, OutlierModel, PdcaeOptions, Regularizer};
//!
//! let a = DenseMatrix::from_row_major(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
//! let loss = Loss::squared(vec![1.0, -1.0, 8.0]).unwrap();
//! let reg = Regularizer::mcp(0.1, 3.0).unwrap();
//! let model = OutlierModel::new(a, loss, reg, 1).unwrap();
//! let result = pdcae_solve(&model.compile(), &[0.0, 0.0], &PdcaeOptions::default()).unwrap();
//! assert!(result.x_final[0] > 0.5 && result.x_final[1] < -0.5);
//! ```

pub mod diagnostics;
mod error;
pub mod linalg;
pub mod losses;
pub mod outlier;
pub mod problem;
pub mod regularizers;
pub mod solvers;

pub use diagnostics::{
    certify_trace, fit_linear_rate, potential_e, potential_ehat, CertificateReport, DiagnosticsError, PotentialRecord,
    RateFit,
};
pub use error::{DcError, Result};
pub use linalg::{spectral_bound, DenseMatrix};
pub use losses::{Loss, LossKind};
pub use outlier::{OutlierModel, OutlierProblem};
pub use problem::{evaluate_objective, CompositeProblem, DcProblem, FirstOrder, PointEval, ProxTerm, SubgradientTerm, Zero};
pub use regularizers::{soft_threshold, L1Norm, Regularizer, RegularizerKind};
pub use solvers::{
    npg_solve, pdcae_solve, stationarity_certificate, stationarity_residual, IterateSnapshot, IterateTrace,
    NpgOptions, PdcaeOptions, ResidualAnchor, SolveResult, SolveStatus, TraceOptions, TraceRecord,
};
