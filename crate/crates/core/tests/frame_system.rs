use proptest::prelude::*;
use uc_core::carleman::*;
use uc_core::einstein::*;
use uc_core::frame::{direct_frame_oracle, integrate_frame, jacobi_gamma_y, FrameOptions, OracleOptions};
use uc_core::metric::MetricField;

fn unit(v: &[f64]) -> Vec<f64> {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / s).collect()
}

#[test]
fn jacobi_fields_on_a_scaled_hyperbolic_space() {
    // Γ_{iY}^j = θθᵀ + r√−k coth(r√−k)(I − θθᵀ)
    let k = -0.5;
    let field = MetricField::hyperbolic(3, k).unwrap();
    let dir = unit(&[0.2, -0.4, 0.9]);
    let radii = [0.2, 0.6, 1.0];
    let states = integrate_frame(&field, &[0.3, 0.2, -0.1], &dir, &radii, 1e-3, &FrameOptions::default()).unwrap();
    for (s, &r) in states.iter().zip(&radii) {
        let a = r * (-k as f64).sqrt();
        let f = a / a.tanh();
        for i in 0..3 {
            for j in 0..3 {
                let want = dir[i] * dir[j] + f * (if i == j { 1.0 } else { 0.0 } - dir[i] * dir[j]);
                assert!((s.gamma_y[i * 3 + j] - want).abs() < 1e-8, "r={r}");
            }
        }
        let closed = jacobi_gamma_y(k, r, &dir);
        assert!(s.gamma_y.iter().zip(&closed).all(|(a, b)| (a - b).abs() < 1e-8));
    }
}

#[test]
fn transport_agrees_with_brute_force_on_a_curved_sphere() {
    let field = MetricField::sphere(3, 2.0).unwrap();
    let p0 = [0.1, 0.05, -0.2];
    for dir in [[1.0, 0.0, 0.0], [0.3, -0.7, 0.2], [-0.5, 0.5, 0.5]] {
        let ode = integrate_frame(&field, &p0, &dir, &[0.4], 1e-3, &FrameOptions::default()).unwrap();
        let oracle = direct_frame_oracle(&field, &p0, &dir, 0.4, &OracleOptions::default()).unwrap();
        assert!(ode[0].max_deviation(&oracle) < 1e-5);
    }
}

#[test]
fn cosmological_constant_shift_is_seen_linearly() {
    let p = [0.1, -0.3, 0.2];
    let base = EinsteinScalar::new(MetricField::sphere(3, 1.0).unwrap(), ScalarSolution::constant(0.2), Potential::zero(), CosmologicalConstant(2.0));
    assert!(base.on_shell_defect(&p).unwrap() < 1e-12);
    let eps = 1e-3;
    let shifted = EinsteinScalar::new(base.field.clone(), ScalarSolution::constant(0.2), Potential::zero(), CosmologicalConstant(2.0 + eps));
    let gmax = base.field.metric_at(&p).unwrap().g().amax();
    assert!((shifted.einstein_residual(&p).unwrap().max_abs() - eps * gmax).abs() < 1e-12);
}

#[test]
fn massive_field_vacuum_is_on_shell_in_four_dimensions() {
    let s = EinsteinScalar::new(MetricField::hyperbolic(4, -1.0).unwrap(), ScalarSolution::constant(0.0), Potential::quadratic(0.7), CosmologicalConstant(-3.0));
    let p = [0.2, 0.1, -0.1, 0.3];
    assert!(s.on_shell_defect(&p).unwrap() < 1e-12);
    assert!(s.curvature_laplacian_residual(&p).unwrap().residual.max_abs() < 1e-10);
    assert!(s.prolonged_scalar_residual_2(&p).unwrap().residual.max_abs() < 1e-10);
}

#[test]
fn power_norm_matches_closed_form() {
    // ‖r^m‖_{L^s(B_R)} = (|S²| R^{ms+3} / (ms+3))^{1/s}
    let (n, radius) = (3, 0.3);
    for m in [1u32, 3] {
        let u = TestFunction::new("p", vec![RadialFactor::Power { m: m as i32 }], Harmonic::One, 1.0, VanishingOrder::Finite(m));
        let grid = QuadratureGrid::radial(n, radius, 12, 16);
        let vals = grid.sample_function(&u, |v| v.u);
        for s in [2.0, 6.0] {
            let ms = m as f64 * s;
            let want = (unit_sphere_area(n) * radius.powf(ms + 3.0) / (ms + 3.0)).powf(1.0 / s);
            let got = weighted_norm(&grid, &vals, 0.0, s, 0.05, false).unwrap();
            assert!((got - want).abs() < 1e-12 * want, "m={m} s={s}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lemma2_ratio_is_scale_invariant(c in 0.01f64..100.0, pick in 0usize..6) {
        let p = CarlemanParams::new(3, 0.05, 0.25, 0.5).unwrap();
        let u = infinite_order_corpus(0.25).remove(pick);
        let grid = QuadratureGrid::adapted(&u, &p, 16.0, 16).unwrap();
        let a = lemma2_verify(&u, &[8.0, 16.0], &p, &grid, None).unwrap();
        let b = lemma2_verify(&u.scaled(c), &[8.0, 16.0], &p, &grid, None).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            prop_assert!((x.ratio - y.ratio).abs() <= 1e-12 * x.ratio);
        }
    }
}
