use uc_core::carleman::*;
use uc_core::Error;
use uc_experiments::chain::*;
use uc_experiments::model::*;

fn params() -> CarlemanParams {
    CarlemanParams::new(3, 0.05, 0.25, 0.5).unwrap()
}

fn exp_pair() -> ModelPair {
    ModelPair::manufactured(3, infinite_order_corpus(1.0).remove(0))
}

#[test]
fn zero_pair_gives_zero_terms() {
    let cp = ChainParams::new(params(), 2, 1.0);
    let rep = chain_report(&ModelPair::zero(3), &[4.0, 8.0], &cp).unwrap();
    for row in &rep.rows {
        for (name, v) in row.terms() {
            assert_eq!(v, 0.0, "{name}");
        }
    }
}

#[test]
fn absorption_coefficients_and_flags() {
    let (c, r) = (3.0, 0.25);
    let cp = ChainParams::new(params(), 2, c);
    let rep = chain_report(&exp_pair(), &[4.0, 16.0, 64.0], &cp).unwrap();
    for row in &rep.rows {
        let l = row.lambda;
        let nth = l.cbrt();
        let want = [
            ("t_u", c * r * r),
            ("t_grad", c * r * r / nth),
            ("t_v", c * r / l),
            ("s_v", c / l),
            ("s_u", c * r),
            ("s_grad", c * r / nth),
        ];
        assert_eq!(row.absorptions.len(), want.len());
        for (a, (name, coef)) in row.absorptions.iter().zip(want) {
            assert_eq!(a.term, name);
            assert!((a.coefficient - coef).abs() < 1e-14);
            assert_eq!(a.absorbed, coef < 0.5);
        }
        assert_eq!(row.all_absorbed(), row.absorptions.iter().all(|a| a.coefficient < 0.5));
    }
}

#[test]
fn rows_are_linear_in_the_pair() {
    let cp = ChainParams::new(params(), 2, 1.0);
    let u = infinite_order_corpus(1.0).remove(3);
    let a = chain_report(&ModelPair::manufactured(3, u.clone()), &[8.0, 16.0], &cp).unwrap();
    let b = chain_report(&ModelPair::manufactured(3, u.scaled(2.5)), &[8.0, 16.0], &cp).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        for ((name, p), (_, q)) in x.terms().into_iter().zip(y.terms()) {
            assert!((q - 2.5 * p).abs() <= 1e-10 * q.abs(), "{name}: {p} {q}");
        }
    }
    assert!((a.c_prime_spread() - b.c_prime_spread()).abs() < 1e-10);
}

#[test]
fn inadmissible_or_small_lambda_is_rejected() {
    let cp = ChainParams::new(params(), 2, 1.0);
    for l in [4.5, 3.0] {
        let err = chain_report(&exp_pair(), &[8.0, l], &cp).unwrap_err();
        assert!(matches!(err, Error::InadmissibleLambda(x) if x == l));
    }
}

#[test]
fn bounded_quantity_of_a_constant() {
    let p = params();
    let (_, q) = p.exponents();
    let u = TestFunction::new("one", vec![RadialFactor::Constant { c: 2.0 }], Harmonic::One, 1.0, VanishingOrder::Finite(0));
    let grid = QuadratureGrid::radial(3, p.radius, 20, 16);
    let b = bounded_quantity(&u, 0.0, &p, &grid).unwrap();
    let want = 2.0 * (unit_ball_volume(3) * p.radius.powi(3)).powf(1.0 / q);
    assert!((b.value - want).abs() < 1e-10 * want, "{} {want}", b.value);
    assert!(!b.divergent);
}

#[test]
fn finite_order_diverges_past_the_threshold() {
    let p = params();
    let u = finite_order_corpus(1.0).remove(1);
    assert_eq!(u.vanishing, VanishingOrder::Finite(5));
    let grid = QuadratureGrid::adapted(&u, &p, 5.0, 16).unwrap();
    let below = bounded_quantity(&u, 5.0, &p, &grid).unwrap();
    assert!(below.value.is_finite() && below.value > 0.0);
    let above = bounded_quantity(&u, 5.5, &p, &grid).unwrap();
    assert!(above.divergent && above.value.is_infinite());
}

#[test]
fn phi_norm_dominates_second_differences() {
    let plateau = 0.25;
    let h = 1e-4;
    let mut fd = 0.0f64;
    for i in 1..200 {
        let x = i as f64 / 200.0;
        let f = |t: f64| bump_phi(&[t, 0.0, 0.0], plateau);
        fd = fd.max(((f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)).abs());
    }
    let c2 = phi_c2_norm(plateau);
    assert!(c2 >= 1.0);
    assert!(c2 >= fd * (1.0 - 1e-3), "{c2} {fd}");
}

#[test]
fn ok_bound_assembles_its_factors() {
    let p = params();
    for k in [2u32, 4, 6] {
        let t = ok_term(&exp_pair(), k, 10.0, &p, 16).unwrap();
        let want = p.radius.powf(-10.0) * 2f64.powf(12.0 * k as f64) * phi_c2_norm(p.radius) * t.sobolev;
        assert!((t.bound - want).abs() <= 1e-10 * want);
        assert!(t.leibniz >= 0.0 && t.sobolev > 0.0);
    }
}
