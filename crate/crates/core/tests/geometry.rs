use proptest::prelude::*;
use uc_core::geodesic::{geodesic, GeodesicOptions};
use uc_core::geometry::{christoffel, ricci, riemann, scalar_curvature};
use uc_core::jet::Scalar;
use uc_core::metric::{Backend, MetricField};
use uc_core::tensor::riemann_symmetry_residuals;

/// `e^{2f} δ` with `f = 0.1 x₀ + 0.05 x₁²`.
fn conformal(n: usize) -> MetricField {
    MetricField::custom(n, None, move |x| {
        let two_f = x[0].scale(0.2).add_jet(&x[1].mul_jet(&x[1]).scale(0.1));
        let e = two_f.exp();
        (0..n * n).map(|k| if k / n == k % n { e.clone() } else { x[0].constant_like(0.0) }).collect()
    })
}

fn f_grad(x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    g[0] = 0.1;
    g[1] = 0.1 * x[1];
    g
}

#[test]
fn conformal_scalar_curvature() {
    // R = −e^{−2f} (2(n−1)Δf + (n−2)(n−1)|∇f|²)
    for n in [2, 3, 4] {
        let field = conformal(n);
        for x in [vec![0.1; n], (0..n).map(|i| 0.2 - 0.15 * i as f64).collect::<Vec<_>>()] {
            let f = 0.1 * x[0] + 0.05 * x[1] * x[1];
            let lap = 0.1;
            let g2: f64 = f_grad(&x).iter().map(|v| v * v).sum();
            let m = n as f64;
            let want = -(-2.0 * f).exp() * (2.0 * (m - 1.0) * lap + (m - 2.0) * (m - 1.0) * g2);
            let got = scalar_curvature(&field, &x).unwrap();
            assert!((got - want).abs() < 1e-12, "n={n}: {got} {want}");
        }
    }
}

#[test]
fn conformal_christoffel_symbols() {
    // Γ^k_ij = δ_ik ∂_j f + δ_jk ∂_i f − δ_ij ∂_k f
    let n = 3;
    let x = [0.3, -0.2, 0.1];
    let df = f_grad(&x);
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let gam = christoffel(&conformal(n), &x).unwrap();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let want = d(i, k) * df[j] + d(j, k) * df[i] - d(i, j) * df[k];
                assert!((gam.get(&[k, i, j]) - want).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn stereographic_geodesic_through_the_origin() {
    // |x| = 2 tan(s/2) along radial geodesics of the unit sphere
    let field = MetricField::sphere(3, 1.0).unwrap();
    let v = [0.0, 0.6, 0.8];
    let arc = geodesic(&field, &[0.0; 3], &v, 1.2, &GeodesicOptions::default()).unwrap();
    for (s, x) in arc.params.iter().zip(&arc.positions) {
        let r = 2.0 * (s / 2.0).tan();
        for (xi, vi) in x.iter().zip(v) {
            assert!((xi - r * vi).abs() < 1e-9, "s={s}");
        }
    }
    assert!(arc.speed_drift(&field).unwrap() < 1e-9);
}

#[test]
fn backends_agree_on_a_generic_metric() {
    let field = conformal(3);
    let fd = field.clone().with_backend(Backend::finite_difference_with(1e-4));
    let x = [0.2, 0.1, -0.3];
    let a = riemann(&field, &x).unwrap();
    let b = riemann(&fd, &x).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn curvature_symmetries_at_random_points(x in prop::collection::vec(-0.5f64..0.5, 4)) {
        let field = conformal(4);
        let r = riemann(&field, &x).unwrap();
        prop_assert!(riemann_symmetry_residuals(&r).unwrap().max() < 1e-12);
        let ric = ricci(&field, &x).unwrap();
        prop_assert!(ric.max_abs_diff(&ric.permute(&[1, 0]).unwrap()) < 1e-12);
    }

    #[test]
    fn space_form_ricci_is_einstein(k in prop_oneof![0.2f64..2.0, -2.0f64..-0.2], x in prop::collection::vec(-0.4f64..0.4, 3)) {
        let field = MetricField::space_form(3, k).unwrap();
        let ric = ricci(&field, &x).unwrap();
        let g = field.metric_at(&x).unwrap().lower_tensor();
        prop_assert!(ric.max_abs_diff(&g.scale(2.0 * k)) < 1e-10);
    }
}
