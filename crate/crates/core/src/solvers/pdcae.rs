use std::time::Instant;

use super::schedule::{beta_schedule, ThetaPair};
use super::{ensure_finite, extrapolated_residual, forward_point, PdcaeOptions, SolveResult, SolveStatus};
use super::{IterateSnapshot, IterateTrace, TraceRecord};
use crate::diagnostics::potential_from_parts;
use crate::error::{check_len, DcError, Result};
use crate::linalg::{norm, norm_sq, sub};
use crate::problem::{DcProblem, FirstOrder, PointEval};

/// Quantities carried from iteration `k − 1` into iteration `k`.
struct Previous {
    x: Vec<f64>,
    eval: PointEval,
    /// First-order data at `x^{k−1}`; its subgradient is `ξ^k`.
    first_order: FirstOrder,
    u: Vec<f64>,
    grad_u: Vec<f64>,
}

/// Proximal DC algorithm with extrapolation.
///
/// Each iteration takes `ξ^{k+1} ∈ ∂P2(x^k)`, forms
/// `u^k = x^k + β_k(x^k − x^{k−1})` and sets
/// `x^{k+1} = prox_{P1/L}(u^k − (∇f(u^k) − ξ^{k+1})/L)`, with `x^{−1} = x^0`.
/// Stops when the residual of [`extrapolated_residual`] drops below
/// `tol · max(1, ‖x^k‖)`.
pub fn pdcae_solve<P: DcProblem + ?Sized>(problem: &P, x0: &[f64], opts: &PdcaeOptions) -> Result<SolveResult> {
    opts.validate()?;
    check_len("initial point", problem.dim(), x0.len())?;
    ensure_finite(x0, 0)?;

    let start = Instant::now();
    let l = problem.lipschitz();
    let affine = problem.affine_gradient();

    let mut x = x0.to_vec();
    let mut eval = problem.evaluate(&x);
    let mut first_order = problem.first_order(&x, &eval);
    let mut prev: Option<Previous> = None;
    let mut theta = ThetaPair::RESET;

    let mut best_fval = f64::INFINITY;
    let mut x_best = x.clone();
    let mut trace = opts
        .trace
        .record
        .then(|| IterateTrace::new(l, opts.trace.keep_iterates));

    let mut k = 0;
    let status = loop {
        let fval = eval.objective();
        if !fval.is_finite() {
            return Err(DcError::Diverged { iteration: k });
        }
        if fval < best_fval {
            best_fval = fval;
            x_best.clone_from(&x);
        }

        let (beta, next_theta) = beta_schedule(k, theta, opts.restart_period, opts.beta_cap);

        let mut converged = false;
        if let Some(p) = &prev {
            let residual = extrapolated_residual(l, &first_order.gradient, &p.grad_u, &x, &p.x, &p.u);
            converged = residual < opts.tol * norm(&x).max(1.0);
            if let Some(trace) = trace.as_mut() {
                let step_sq = norm_sq(&sub(&x, &p.x));
                let potential = potential_from_parts(
                    eval.smooth,
                    eval.p1,
                    p.eval.p2,
                    &x,
                    &p.first_order.subgradient,
                    &p.x,
                    &p.x,
                    l,
                );
                // [∇f(x^k) − ∇f(u^{k−1}) − L(x^{k−1} − u^{k−1}); x^{k−1} − x^k; −L(x^k − x^{k−1})]
                let top_sq: f64 = (0..x.len())
                    .map(|i| {
                        let t = (first_order.gradient[i] - p.grad_u[i]) - l * (p.x[i] - p.u[i]);
                        t * t
                    })
                    .sum();
                trace.records.push(TraceRecord {
                    k,
                    fval,
                    potential: Some(potential),
                    potential_hat: Some(fval + 0.5 * l * step_sq),
                    beta,
                    step_norm: step_sq.sqrt(),
                    residual: Some(residual),
                    certificate_norm: Some((top_sq + (1.0 + l * l) * step_sq).sqrt()),
                    modulus: None,
                    elapsed_secs: start.elapsed().as_secs_f64(),
                });
                if let Some(iterates) = trace.iterates.as_mut() {
                    iterates.push(IterateSnapshot {
                        x: x.clone(),
                        u_prev: Some(p.u.clone()),
                        xi: Some(p.first_order.subgradient.clone()),
                    });
                }
            }
        } else if let Some(trace) = trace.as_mut() {
            trace.records.push(TraceRecord {
                k,
                fval,
                potential: None,
                potential_hat: None,
                beta,
                step_norm: 0.0,
                residual: None,
                certificate_norm: None,
                modulus: None,
                elapsed_secs: start.elapsed().as_secs_f64(),
            });
            if let Some(iterates) = trace.iterates.as_mut() {
                iterates.push(IterateSnapshot { x: x.clone(), u_prev: None, xi: None });
            }
        }

        if converged {
            break SolveStatus::Converged;
        }
        if k >= opts.max_iter {
            break SolveStatus::MaxIter;
        }
        theta = next_theta;

        let (u, grad_u) = match &prev {
            Some(p) if beta != 0.0 => {
                let u: Vec<f64> = x.iter().zip(&p.x).map(|(xi, xp)| xi + beta * (xi - xp)).collect();
                let grad_u = if affine {
                    first_order
                        .gradient
                        .iter()
                        .zip(&p.first_order.gradient)
                        .map(|(g, gp)| g + beta * (g - gp))
                        .collect()
                } else {
                    problem.smooth_gradient(&u)
                };
                (u, grad_u)
            }
            _ => (x.clone(), first_order.gradient.clone()),
        };

        let v = forward_point(&u, &grad_u, &first_order.subgradient, l);
        let x_next = problem.prox_p1(&v, 1.0 / l);
        ensure_finite(&x_next, k + 1)?;
        let eval_next = problem.evaluate(&x_next);
        let first_order_next = problem.first_order(&x_next, &eval_next);

        prev = Some(Previous {
            x: std::mem::replace(&mut x, x_next),
            eval: std::mem::replace(&mut eval, eval_next),
            first_order: std::mem::replace(&mut first_order, first_order_next),
            u,
            grad_u,
        });
        k += 1;
    };

    Ok(SolveResult {
        final_fval: eval.objective(),
        x_final: x,
        x_best,
        status,
        iterations: k,
        best_fval,
        elapsed: start.elapsed(),
        trace,
    })
}
