use std::collections::VecDeque;
use std::time::Instant;

use super::{ensure_finite, forward_point, linesearch_residual, NpgOptions, SolveResult, SolveStatus};
use super::{IterateSnapshot, IterateTrace, TraceRecord};
use crate::error::{check_len, DcError, Result};
use crate::linalg::{dot, norm, norm_sq, sub};
use crate::problem::DcProblem;

/// `sᵀy` below this value makes the Barzilai–Borwein estimate fall back to
/// halving the previous accepted modulus.
const BB_CURVATURE_FLOOR: f64 = 1e-12;

/// Proximal DCA with a nonmonotone linesearch.
///
/// At `x^k` the solver picks `ζ^k ∈ ∂P2(x^k)`, initializes the modulus by a
/// Barzilai–Borwein estimate clipped to `[L_min, L_max]`, and accepts
/// `x⁺ = prox_{P1/L_k}(x^k − (∇f(x^k) − ζ^k)/L_k)` once
/// `F(x⁺) ≤ max_{[k−M+1]₊ ≤ j ≤ k} F(x^j) − (c/2)‖x⁺ − x^k‖²`, multiplying
/// `L_k` by `τ` otherwise. Exceeding `L_max` aborts with
/// [`DcError::LinesearchFailure`].
pub fn npg_solve<P: DcProblem + ?Sized>(problem: &P, x0: &[f64], opts: &NpgOptions) -> Result<SolveResult> {
    opts.validate()?;
    check_len("initial point", problem.dim(), x0.len())?;
    ensure_finite(x0, 0)?;

    let start = Instant::now();
    let l = problem.lipschitz();

    let mut x = x0.to_vec();
    let mut eval = problem.evaluate(&x);
    let mut first_order = problem.first_order(&x, &eval);
    let mut history: VecDeque<f64> = VecDeque::with_capacity(opts.memory);

    // (x^{k−1}, ∇f(x^{k−1}), secant at x^{k−1}, L̄_{k−1})
    let mut prev: Option<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> = None;

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
        if history.len() == opts.memory {
            history.pop_front();
        }
        history.push_back(fval);

        let mut converged = false;
        if let Some((x_prev, grad_prev, _, modulus_prev)) = &prev {
            let residual = linesearch_residual(l, *modulus_prev, &first_order.gradient, grad_prev, &x, x_prev);
            converged = residual < opts.tol * norm(&x).max(1.0);
            if let Some(trace) = trace.as_mut() {
                let step_sq = norm_sq(&sub(&x, x_prev));
                trace.records.push(TraceRecord {
                    k,
                    fval,
                    potential: None,
                    potential_hat: Some(fval + 0.5 * l * step_sq),
                    beta: 0.0,
                    step_norm: step_sq.sqrt(),
                    residual: Some(residual),
                    certificate_norm: None,
                    modulus: Some(*modulus_prev),
                    elapsed_secs: start.elapsed().as_secs_f64(),
                });
                if let Some(iterates) = trace.iterates.as_mut() {
                    iterates.push(IterateSnapshot { x: x.clone(), u_prev: Some(x_prev.clone()), xi: None });
                }
            }
        } else if let Some(trace) = trace.as_mut() {
            trace.records.push(TraceRecord {
                k,
                fval,
                potential: None,
                potential_hat: None,
                beta: 0.0,
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

        let mut modulus = match &prev {
            None => opts.l0,
            Some((x_prev, _, secant_prev, modulus_prev)) => {
                let s = sub(&x, x_prev);
                let y = sub(&first_order.secant, secant_prev);
                let sy = dot(&s, &y);
                if sy >= BB_CURVATURE_FLOOR {
                    (sy / norm_sq(&s)).max(opts.l_min).min(opts.l_max)
                } else {
                    (modulus_prev / 2.0).max(opts.l_min).min(opts.l_max)
                }
            }
        };

        let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (x_next, eval_next) = loop {
            let v = forward_point(&x, &first_order.gradient, &first_order.subgradient, modulus);
            let candidate = problem.prox_p1(&v, 1.0 / modulus);
            ensure_finite(&candidate, k + 1)?;
            let candidate_eval = problem.evaluate(&candidate);
            let decrease = 0.5 * opts.c * norm_sq(&sub(&candidate, &x));
            if candidate_eval.objective() <= reference - decrease {
                break (candidate, candidate_eval);
            }
            modulus *= opts.tau_growth;
            if modulus > opts.l_max {
                return Err(DcError::LinesearchFailure {
                    iteration: k,
                    modulus,
                    cap: opts.l_max,
                });
            }
        };

        let first_order_next = problem.first_order(&x_next, &eval_next);
        let x_prev = std::mem::replace(&mut x, x_next);
        eval = eval_next;
        let fo_prev = std::mem::replace(&mut first_order, first_order_next);
        prev = Some((x_prev, fo_prev.gradient, fo_prev.secant, modulus));
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
