mod common;

use common::{gaussian_vec, random_loss, random_matrix, rng};
use dcopt::diagnostics::DiagnosticsError;
use dcopt::linalg::dot;
use dcopt::{
    certify_trace, evaluate_objective, fit_linear_rate, npg_solve, pdcae_solve, potential_e, potential_ehat,
    CompositeProblem, DcProblem, L1Norm, LossKind, NpgOptions, OutlierModel, PdcaeOptions, Regularizer,
    RegularizerKind, TraceOptions,
};
use rand::Rng;

/// `f(x) = ½‖Bx‖²`, `P1 = λ‖x‖₁`, `P2` the concave part of `reg`.
fn small_problem(b: Vec<f64>, rows: usize, cols: usize, reg: Regularizer, l: f64) -> CompositeProblem {
    let b2 = b.clone();
    let apply = move |b: &[f64], x: &[f64]| -> Vec<f64> {
        (0..rows).map(|i| (0..cols).map(|j| b[i * cols + j] * x[j]).sum()).collect()
    };
    let apply2 = apply.clone();
    let lambda = reg.lambda();
    CompositeProblem::new(
        cols,
        move |x: &[f64]| 0.5 * apply(&b, x).iter().map(|v| v * v).sum::<f64>(),
        move |x: &[f64]| {
            let bx = apply2(&b2, x);
            (0..cols).map(|j| (0..rows).map(|i| b2[i * cols + j] * bx[i]).sum()).collect()
        },
        l,
        L1Norm::new(lambda).unwrap(),
        reg,
    )
    .unwrap()
    .with_affine_gradient()
}

/// `sup_y ⟨y, ξ⟩ − P2(y)` over a uniform grid on `[−r, r]²`.
fn grid_conjugate(reg: &Regularizer, xi: &[f64], r: f64, nodes: usize) -> f64 {
    let h = 2.0 * r / (nodes - 1) as f64;
    let mut best = f64::NEG_INFINITY;
    for i in 0..nodes {
        for j in 0..nodes {
            let y = [-r + i as f64 * h, -r + j as f64 * h];
            best = best.max(dot(&y, xi) - reg.p2_value(&y));
        }
    }
    best
}

#[test]
fn potential_matches_grid_conjugate() {
    let mut g = rng(40);
    for kind in RegularizerKind::ALL {
        if kind == RegularizerKind::TruncatedL1 {
            continue; // p < n forces p = 1 at n = 2, still covered below
        }
        let reg = match kind {
            RegularizerKind::Scad => Regularizer::scad(0.5, 3.0),
            RegularizerKind::Mcp => Regularizer::mcp(0.5, 2.0),
            RegularizerKind::L1MinusL2 => Regularizer::l1_minus_l2(0.5),
            _ => Regularizer::capped_l1(0.5, 0.8),
        }
        .unwrap();
        let b = gaussian_vec(&mut g, 6, 1.0);
        let problem = small_problem(b, 3, 2, reg.clone(), 5.0);
        for _ in 0..5 {
            let x = gaussian_vec(&mut g, 2, 1.0);
            let w = gaussian_vec(&mut g, 2, 1.0);
            let anchor: Vec<f64> = (0..2).map(|_| g.gen_range(-2.0..2.0)).collect();
            let xi = problem.p2_subgradient(&anchor);
            let conj = grid_conjugate(&reg, &xi, 3.0, 1501);
            let dx: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a - b).collect();
            let expected = problem.smooth_value(&x) + problem.p1_value(&x) - dot(&x, &xi)
                + conj
                + 0.5 * problem.lipschitz() * dot(&dx, &dx);
            let e = potential_e(&problem, &x, &xi, &w, &anchor);
            assert!((e - expected).abs() <= 1e-5, "{kind}: {e} vs {expected}");
            assert!(e >= expected - 1e-12, "{kind}: grid sup exceeds the exact conjugate");
        }
    }
    let reg = Regularizer::truncated_l1(0.5, 0.7, 1).unwrap();
    let problem = small_problem(vec![1.0, 0.0, 0.0, 1.0], 2, 2, reg.clone(), 1.0);
    let anchor = [1.2, -0.4];
    let xi = problem.p2_subgradient(&anchor);
    let conj = grid_conjugate(&reg, &xi, 3.0, 1501);
    let x = [0.3, 0.1];
    let expected = problem.smooth_value(&x) + problem.p1_value(&x) - dot(&x, &xi) + conj;
    assert!((potential_e(&problem, &x, &xi, &x, &anchor) - expected).abs() <= 1e-5);
}

#[test]
fn potential_collapses_to_objective_bit_for_bit() {
    let mut g = rng(41);
    let a = random_matrix(&mut g, 10, 15);
    let params = random_loss(LossKind::QuantileSquared, &mut g, 10);
    let model = OutlierModel::new(a, params.build(), Regularizer::scad(0.1, 3.7).unwrap(), 2).unwrap();
    let problem = model.compile();
    for _ in 0..20 {
        let x = gaussian_vec(&mut g, 15, 1.0);
        let xi = problem.p2_subgradient(&x);
        let f = evaluate_objective(&problem, &x).unwrap();
        assert_eq!(potential_e(&problem, &x, &xi, &x, &x), f);
        assert_eq!(potential_ehat(&problem, &x, &x), f);
        let w = gaussian_vec(&mut g, 15, 1.0);
        assert!(potential_ehat(&problem, &x, &w) > f);
    }
}

fn outlier_model(seed: u64, kind: LossKind) -> OutlierModel {
    let mut g = rng(seed);
    let a = random_matrix(&mut g, 30, 60);
    let params = random_loss(kind, &mut g, 30);
    let reg = Regularizer::truncated_l1(0.02, 0.9, 5).unwrap();
    OutlierModel::new(a, params.build(), reg, 3).unwrap()
}

#[test]
fn extrapolated_traces_certify_cleanly() {
    for (seed, kind) in LossKind::ALL.into_iter().enumerate() {
        let model = outlier_model(50 + seed as u64, kind);
        let problem = model.compile();
        for trace_opts in [TraceOptions::full(), TraceOptions::scalars()] {
            let opts = PdcaeOptions { trace: trace_opts, tol: 1e-6, ..Default::default() };
            let result = pdcae_solve(&problem, &vec![0.0; 60], &opts).unwrap();
            let report = certify_trace(result.trace.as_ref().unwrap(), &problem).unwrap();
            assert!(report.is_clean(), "{kind}: {:?} {:?}", report.decrease_violations, report.chain_violations);
            assert!(report.bound_constant.unwrap().is_finite());
            assert!(report.final_certificate_norm < report.max_certificate_norm);
        }
    }
}

#[test]
fn recomputed_and_recorded_potentials_agree() {
    let model = outlier_model(60, LossKind::Squared);
    let problem = model.compile();
    let opts = PdcaeOptions { trace: TraceOptions::full(), max_iter: 200, ..Default::default() };
    let result = pdcae_solve(&problem, &vec![0.0; 60], &opts).unwrap();
    let trace = result.trace.unwrap();
    let report = certify_trace(&trace, &problem).unwrap();
    for (p, r) in report.records.iter().zip(trace.records.iter().skip(1)) {
        assert!((p.e - r.potential.unwrap()).abs() <= 1e-12 * p.e.abs().max(1.0));
        assert!((p.e_hat - r.potential_hat.unwrap()).abs() <= 1e-12 * p.e.abs().max(1.0));
        assert!((p.certificate_norm - r.certificate_norm.unwrap()).abs() <= 1e-9 * p.certificate_norm.max(1.0));
    }
}

#[test]
fn unextrapolated_slack_is_nonnegative() {
    let model = outlier_model(70, LossKind::SquaredHinge);
    let problem = model.compile();
    let opts = PdcaeOptions { restart_period: 1, trace: TraceOptions::full(), ..Default::default() };
    let result = pdcae_solve(&problem, &vec![0.0; 60], &opts).unwrap();
    let report = certify_trace(result.trace.as_ref().unwrap(), &problem).unwrap();
    for p in &report.records {
        if let Some(slack) = p.decrease_slack {
            assert!(slack >= -1e-12 * p.e.abs().max(1.0), "k = {}: slack {slack}", p.k);
        }
    }
}

#[test]
fn linesearch_trace_lacks_the_potential() {
    let model = outlier_model(80, LossKind::Squared);
    let problem = model.compile();
    let opts = NpgOptions { trace: TraceOptions::scalars(), ..Default::default() };
    let result = npg_solve(&problem, &vec![0.0; 60], &opts).unwrap();
    match certify_trace(result.trace.as_ref().unwrap(), &problem) {
        Err(DiagnosticsError::MissingField { field, .. }) => assert_eq!(field, "potential"),
        other => panic!("expected a missing-field error, got {other:?}"),
    }
}

#[test]
fn rate_fit_rejects_bad_fractions_and_short_traces() {
    let model = outlier_model(90, LossKind::Squared);
    let problem = model.compile();
    let opts = PdcaeOptions { trace: TraceOptions::scalars(), max_iter: 20, ..Default::default() };
    let result = pdcae_solve(&problem, &vec![0.0; 60], &opts).unwrap();
    let trace = result.trace.unwrap();
    assert!(matches!(fit_linear_rate(&trace, 0.0), Err(DiagnosticsError::InvalidFraction(_))));
    assert!(matches!(fit_linear_rate(&trace, 1.5), Err(DiagnosticsError::InvalidFraction(_))));
    assert!(matches!(fit_linear_rate(&trace, 1.0), Err(DiagnosticsError::InsufficientData { .. })));
}
