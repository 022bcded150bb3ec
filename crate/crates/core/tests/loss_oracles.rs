mod common;

use common::{random_loss, rng};
use dcopt::{Loss, LossKind};
use rand::Rng;

#[test]
fn value_examples() {
    assert_eq!(Loss::squared(vec![1.0, 2.0]).unwrap().value(&[1.0, 2.0]).unwrap(), 0.0);
    assert_eq!(Loss::quad_eps_insensitive(vec![0.0], 1.0).unwrap().value(&[0.5]).unwrap(), 0.0);
    let q = Loss::quantile_squared(vec![0.0], 0.3).unwrap().value(&[2.0]).unwrap();
    assert!((q - 0.6).abs() < 1e-15);
}

#[test]
fn gradient_examples() {
    assert_eq!(Loss::squared(vec![1.0]).unwrap().gradient(&[3.0]).unwrap(), vec![2.0]);
    assert_eq!(Loss::squared_hinge(vec![1.0]).unwrap().gradient(&[2.0]).unwrap(), vec![0.0]);
}

#[test]
fn argmin_examples() {
    assert_eq!(Loss::squared(vec![1.0, -4.0]).unwrap().argmin_representative(), vec![1.0, -4.0]);
    let hinge = Loss::squared_hinge(vec![-1.0]).unwrap();
    assert_eq!(hinge.argmin_representative(), vec![-1.0]);
    assert_eq!(hinge.value(&[-1.0]).unwrap(), 0.0);
    let eps = Loss::quad_eps_insensitive(vec![2.0], 0.5).unwrap();
    assert_eq!(eps.argmin_representative(), vec![2.0]);
    assert_eq!(eps.value(&[2.0]).unwrap(), 0.0);
}

#[test]
fn values_match_independent_formulas() {
    let mut r = rng(10);
    for kind in LossKind::ALL {
        let params = random_loss(kind, &mut r, 12);
        let loss = params.build();
        let s: Vec<f64> = (0..12).map(|_| r.gen_range(-4.0..4.0)).collect();
        let expected: f64 = (0..12).map(|i| params.psi(i, s[i])).sum();
        assert!((loss.value(&s).unwrap() - expected).abs() <= 1e-12 * expected.max(1.0));
        let grad = loss.gradient(&s).unwrap();
        for i in 0..12 {
            assert!((grad[i] - params.dpsi(i, s[i])).abs() <= 1e-14);
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut r = rng(11);
    let h = 1e-6;
    for kind in LossKind::ALL {
        let params = random_loss(kind, &mut r, 1);
        let loss = params.build();
        for _ in 0..1000 {
            let s = r.gen_range(-4.0..4.0);
            let fd = (loss.value(&[s + h]).unwrap() - loss.value(&[s - h]).unwrap()) / (2.0 * h);
            let g = loss.gradient(&[s]).unwrap()[0];
            assert!((fd - g).abs() <= 1e-6, "{kind} at {s}: fd {fd}, gradient {g}");
        }
    }
}

#[test]
fn derivative_is_lipschitz_with_the_declared_modulus() {
    let mut r = rng(12);
    for kind in LossKind::ALL {
        let params = random_loss(kind, &mut r, 1);
        let loss = params.build();
        assert_eq!(loss.lipschitz_modulus(), 1.0);
        let mut sup = 0.0_f64;
        for _ in 0..100_000 {
            let a = r.gen_range(-5.0..5.0);
            let c = r.gen_range(-5.0..5.0);
            let da = loss.coordinate_derivative(0, a);
            let dc = loss.coordinate_derivative(0, c);
            assert!((da - dc).abs() <= loss.lipschitz_modulus() * (a - c).abs() + 1e-12);
            if a != c {
                sup = sup.max((da - dc).abs() / (a - c).abs());
            }
        }
        assert!(sup <= 1.0 + 1e-12, "{kind}: ratio {sup}");
    }
}

#[test]
fn squared_hinge_ratio_sup_over_a_million_pairs() {
    let mut r = rng(13);
    let loss = Loss::squared_hinge(vec![1.0]).unwrap();
    let mut sup = 0.0_f64;
    for _ in 0..1_000_000 {
        let a = r.gen_range(-3.0..3.0);
        let c = r.gen_range(-3.0..3.0);
        if a != c {
            let ratio = (loss.coordinate_derivative(0, a) - loss.coordinate_derivative(0, c)).abs() / (a - c).abs();
            sup = sup.max(ratio);
        }
    }
    assert!(sup <= 1.0 + 1e-12 && sup > 0.99);
}

#[test]
fn nonnegative_convex_and_zero_at_argmin() {
    let mut r = rng(14);
    for kind in LossKind::ALL {
        let params = random_loss(kind, &mut r, 6);
        let loss = params.build();
        assert_eq!(loss.value(&loss.argmin_representative()).unwrap(), 0.0);
        for _ in 0..2000 {
            let i = r.gen_range(0..6);
            let a = r.gen_range(-5.0..5.0);
            let c = r.gen_range(-5.0..5.0);
            let (fa, fc) = (loss.coordinate_value(i, a), loss.coordinate_value(i, c));
            assert!(fa >= 0.0);
            assert!(loss.coordinate_value(i, 0.5 * (a + c)) <= 0.5 * (fa + fc) + 1e-12);
        }
    }
}

#[test]
fn constructor_and_dimension_errors() {
    assert!(Loss::squared_hinge(vec![1.0, 0.5]).is_err());
    assert!(Loss::quad_eps_insensitive(vec![0.0], 0.0).is_err());
    assert!(Loss::quantile_squared(vec![0.0], 1.0).is_err());
    assert!(Loss::squared(vec![0.0, 1.0]).unwrap().value(&[0.0]).is_err());
    assert!(Loss::squared(vec![0.0]).unwrap().with_modulus(-1.0).is_err());
}
