//! Potential functions along solver traces, checks of the decrease and
//! majorization inequalities, and empirical linear-rate fits.

use std::ops::Range;

use thiserror::Error;

use crate::linalg::{dot, norm_sq, sub};
use crate::problem::DcProblem;
use crate::solvers::IterateTrace;

/// Relative slack for the per-step decrease check.
pub const DECREASE_SLACK: f64 = 1e-8;
/// Relative slack for `E ≥ Ê ≥ F`.
pub const CHAIN_SLACK: f64 = 1e-10;
/// Minimum number of records in a rate-fit window.
pub const MIN_RATE_WINDOW: usize = 50;
/// Minimum number of usable (strictly positive) gaps in a rate-fit window.
pub const MIN_RATE_POINTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("trace record {k} is missing {field}")]
    MissingField { k: usize, field: &'static str },

    #[error("rate window holds {available} records, need at least {needed}")]
    InsufficientData { needed: usize, available: usize },

    #[error("only {usable} of {window} records in the window decrease measurably, need at least {needed}")]
    InsufficientDecrease {
        usable: usize,
        window: usize,
        needed: usize,
    },

    #[error("tail_fraction must lie in (0, 1] (got {0})")]
    InvalidFraction(f64),
}

/// `((f + P1) − P2(anchor)) + ⟨anchor − x, ξ⟩ + (L/2)‖x − w‖²`.
///
/// Grouped so that `x = anchor = w` reproduces `(f + P1) − P2` bit for bit.
#[allow(clippy::too_many_arguments)]
pub(crate) fn potential_from_parts(
    smooth: f64,
    p1: f64,
    p2_anchor: f64,
    x: &[f64],
    xi: &[f64],
    anchor: &[f64],
    w: &[f64],
    lipschitz: f64,
) -> f64 {
    let coupling = dot(&sub(anchor, x), xi);
    let proximity = 0.5 * lipschitz * norm_sq(&sub(x, w));
    (((smooth + p1) - p2_anchor) + coupling) + proximity
}

/// `E(x, ξ, w) = f(x) + P1(x) − ⟨x, ξ⟩ + P2*(ξ) + (L/2)‖x − w‖²`, where
/// `ξ ∈ ∂P2(x_anchor)` so that `P2*(ξ) = ⟨x_anchor, ξ⟩ − P2(x_anchor)`.
pub fn potential_e<P: DcProblem + ?Sized>(problem: &P, x: &[f64], xi: &[f64], w: &[f64], x_anchor: &[f64]) -> f64 {
    potential_from_parts(
        problem.smooth_value(x),
        problem.p1_value(x),
        problem.p2_value(x_anchor),
        x,
        xi,
        x_anchor,
        w,
        problem.lipschitz(),
    )
}

/// `Ê(x, w) = F(x) + (L/2)‖x − w‖²`.
pub fn potential_ehat<P: DcProblem + ?Sized>(problem: &P, x: &[f64], w: &[f64]) -> f64 {
    problem.evaluate(x).objective() + 0.5 * problem.lipschitz() * norm_sq(&sub(x, w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialRecord {
    pub k: usize,
    pub e: f64,
    pub e_hat: f64,
    pub f: f64,
    /// `E_{k−1} − E_k − (L/2)(1 − β_{k−1}²)‖x^{k−1} − x^{k−2}‖²`, from `k = 2`.
    pub decrease_slack: Option<f64>,
    pub certificate_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub records: Vec<PotentialRecord>,
    /// Iterations whose decrease slack falls below `−1e−8·max(1, |E_{k−1}|)`.
    pub decrease_violations: Vec<usize>,
    /// Iterations breaking `E_k ≥ Ê_k ≥ F_k` beyond `1e−10·max(1, |E_k|)`.
    pub chain_violations: Vec<usize>,
    /// Smallest `D` with `‖cert_k‖ ≤ D(‖x^k − x^{k−1}‖ + ‖x^{k−1} − x^{k−2}‖)`
    /// over the trace; `None` when every step vanished.
    pub bound_constant: Option<f64>,
    pub max_certificate_norm: f64,
    pub final_certificate_norm: f64,
}

impl CertificateReport {
    pub fn is_clean(&self) -> bool {
        self.decrease_violations.is_empty() && self.chain_violations.is_empty()
    }
}

/// Checks the potential decrease, the majorization chain and the subgradient
/// bound along a trace of the extrapolated solver.
///
/// When the trace kept its iterates, `E`, `Ê`, `F` and the certificate are
/// recomputed from `problem`; otherwise the recorded values are used.
pub fn certify_trace<P: DcProblem + ?Sized>(
    trace: &IterateTrace,
    problem: &P,
) -> Result<CertificateReport, DiagnosticsError> {
    let l = trace.lipschitz;
    let mut records = Vec::with_capacity(trace.len());
    for (idx, rec) in trace.records.iter().enumerate().skip(1) {
        let k = rec.k;
        let (e, e_hat, f, cert) = match trace.iterates.as_ref() {
            Some(iterates) => recompute(problem, iterates, idx, l)?,
            None => (
                rec.potential.ok_or(DiagnosticsError::MissingField { k, field: "potential" })?,
                rec.potential_hat
                    .ok_or(DiagnosticsError::MissingField { k, field: "potential_hat" })?,
                rec.fval,
                rec.certificate_norm
                    .ok_or(DiagnosticsError::MissingField { k, field: "certificate_norm" })?,
            ),
        };
        records.push(PotentialRecord {
            k,
            e,
            e_hat,
            f,
            decrease_slack: None,
            certificate_norm: cert,
        });
    }

    let mut decrease_violations = Vec::new();
    let mut chain_violations = Vec::new();
    let mut bound_constant: Option<f64> = None;
    let mut max_certificate_norm = 0.0_f64;
    for i in 0..records.len() {
        // records[i] is trace record i + 1
        let rec = &trace.records[i + 1];
        if i > 0 {
            let earlier = &trace.records[i];
            let e_prev = records[i - 1].e;
            let slack = e_prev
                - records[i].e
                - 0.5 * l * (1.0 - earlier.beta * earlier.beta) * earlier.step_norm * earlier.step_norm;
            records[i].decrease_slack = Some(slack);
            if slack < -DECREASE_SLACK * e_prev.abs().max(1.0) {
                decrease_violations.push(records[i].k);
            }
        }
        let p = &records[i];
        let tol = CHAIN_SLACK * p.e.abs().max(1.0);
        if p.e < p.e_hat - tol || p.e_hat < p.f - tol {
            chain_violations.push(p.k);
        }
        let denom = rec.step_norm + trace.records[i].step_norm;
        if denom > 0.0 {
            let ratio = p.certificate_norm / denom;
            bound_constant = Some(bound_constant.map_or(ratio, |d| d.max(ratio)));
        }
        max_certificate_norm = max_certificate_norm.max(p.certificate_norm);
    }

    let final_certificate_norm = records.last().map_or(0.0, |r| r.certificate_norm);
    Ok(CertificateReport {
        records,
        decrease_violations,
        chain_violations,
        bound_constant,
        max_certificate_norm,
        final_certificate_norm,
    })
}

fn recompute<P: DcProblem + ?Sized>(
    problem: &P,
    iterates: &[crate::solvers::IterateSnapshot],
    idx: usize,
    l: f64,
) -> Result<(f64, f64, f64, f64), DiagnosticsError> {
    let cur = &iterates[idx];
    let prev = &iterates[idx - 1];
    let k = idx;
    let xi = cur.xi.as_ref().ok_or(DiagnosticsError::MissingField { k, field: "xi" })?;
    let u_prev = cur
        .u_prev
        .as_ref()
        .ok_or(DiagnosticsError::MissingField { k, field: "u_prev" })?;
    let x = &cur.x;
    let x_prev = &prev.x;

    let e = potential_e(problem, x, xi, x_prev, x_prev);
    let e_hat = potential_ehat(problem, x, x_prev);
    let f = problem.evaluate(x).objective();

    let grad_x = problem.smooth_gradient(x);
    let grad_u = problem.smooth_gradient(u_prev);
    let top: f64 = (0..x.len())
        .map(|i| {
            let t = (grad_x[i] - grad_u[i]) - l * (x_prev[i] - u_prev[i]);
            t * t
        })
        .sum();
    let step_sq = norm_sq(&sub(x, x_prev));
    Ok((e, e_hat, f, (top + (1.0 + l * l) * step_sq).sqrt()))
}

/// Least-squares fit of `log(E_k − ζ̂)` against `k` over a tail window.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// Iteration indices covered by the window.
    pub window: Range<usize>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `exp(slope)`
    pub linear_factor: f64,
    /// Estimated limit value.
    pub zeta_hat: f64,
    /// Number of points that entered the fit.
    pub points: usize,
}

/// Fits a linear rate to the potential values in the final `tail_fraction`
/// of the trace. Records without a potential fall back to `Ê`.
pub fn fit_linear_rate(trace: &IterateTrace, tail_fraction: f64) -> Result<RateFit, DiagnosticsError> {
    let series: Vec<(usize, f64)> = trace
        .records
        .iter()
        .filter_map(|r| r.potential.or(r.potential_hat).map(|e| (r.k, e)))
        .collect();
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(DiagnosticsError::InvalidFraction(tail_fraction));
    }
    let take = ((series.len() as f64) * tail_fraction).ceil() as usize;
    fit_linear_rate_series(&series[series.len() - take.min(series.len())..])
}

/// Same as [`fit_linear_rate`] on an explicit `(k, E_k)` window.
///
/// The limit is estimated as `ζ̂ = E_final − R − s`, where `R` sums the
/// geometric extrapolation of the successive decreases `E_k − E_{k+1}` past
/// the window and `s` is a few ulps of `E_final`.
pub fn fit_linear_rate_series(window: &[(usize, f64)]) -> Result<RateFit, DiagnosticsError> {
    if window.len() < MIN_RATE_WINDOW {
        return Err(DiagnosticsError::InsufficientData {
            needed: MIN_RATE_WINDOW,
            available: window.len(),
        });
    }
    let (k_last, e_last) = *window.last().expect("non-empty window");
    let scale = e_last.abs().max(1.0);
    let floor = 1e-14 * scale;

    let decreases: Vec<(f64, f64)> = window
        .windows(2)
        .filter_map(|w| {
            let d = w[0].1 - w[1].1;
            (d > floor).then(|| (w[0].0 as f64, d.ln()))
        })
        .collect();
    let insufficient = |usable| DiagnosticsError::InsufficientDecrease {
        usable,
        window: window.len(),
        needed: MIN_RATE_POINTS,
    };
    if decreases.len() < MIN_RATE_POINTS {
        return Err(insufficient(decreases.len()));
    }

    let remainder = match least_squares(&decreases) {
        Some((slope, intercept, _)) if slope < 0.0 => {
            let q = slope.exp();
            (intercept + slope * k_last as f64).exp() / (1.0 - q)
        }
        _ => 0.0,
    };
    let zeta_hat = e_last - remainder - 4.0 * f64::EPSILON * scale;

    let points: Vec<(f64, f64)> = window
        .iter()
        .filter_map(|&(k, e)| {
            let gap = e - zeta_hat;
            (gap > floor).then(|| (k as f64, gap.ln()))
        })
        .collect();
    if points.len() < MIN_RATE_POINTS {
        return Err(insufficient(points.len()));
    }
    let (slope, intercept, r_squared) = least_squares(&points).ok_or_else(|| insufficient(points.len()))?;

    Ok(RateFit {
        window: window[0].0..k_last + 1,
        slope,
        intercept,
        r_squared,
        linear_factor: slope.exp(),
        zeta_hat,
        points: points.len(),
    })
}

/// Ordinary least squares `y ≈ a·t + b`; returns `(a, b, R²)`.
fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in points {
        let dt = t - t_mean;
        let dy = y - y_mean;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sty * sty / (stt * syy)).clamp(0.0, 1.0)
    };
    Some((slope, intercept, r_squared))
}
