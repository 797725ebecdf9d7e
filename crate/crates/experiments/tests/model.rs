use proptest::prelude::*;
use uc_core::carleman::*;
use uc_experiments::model::*;

fn exp_pair() -> ModelPair {
    ModelPair::manufactured(3, infinite_order_corpus(1.0).remove(2))
}

fn polar(x: &[f64]) -> (f64, Vec<f64>) {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    (r, x.iter().map(|v| v / r).collect())
}

#[test]
fn zero_pair_has_no_residual() {
    let grid = QuadratureGrid::new(3, 0.5, 10, 8, 4);
    let res = model_residuals(&ModelPair::zero(3), &grid, 1.0);
    assert_eq!(res.max_u(), 0.0);
    assert_eq!(res.max_v(), 0.0);
    assert_eq!(res.max_slack(), 0.0);
}

#[test]
fn manufactured_pair_solves_first_equation() {
    let pair = exp_pair();
    let grid = QuadratureGrid::new(3, 0.9, 12, 8, 4);
    let res = model_residuals(&pair, &grid, 1.0);
    let scale = pair.sample(&grid, |p| p.laplacian.abs()).values.iter().fold(0.0f64, |m, v| m.max(*v));
    assert!(res.max_u() <= 1e-13 * scale, "{} vs {}", res.max_u(), scale);
    assert!(res.max_v() > 0.0);
}

#[test]
fn radial_derivative_of_v_matches_differences() {
    let pair = exp_pair();
    let x = [0.21, -0.13, 0.08];
    let (r, w) = polar(&x);
    let h = 1e-5;
    let v = |s: f64| pair.at(s, &w).v;
    let fd = r * (v(r + h) - v(r - h)) / (2.0 * h);
    let got = pair.at(r, &w).yv;
    assert!((fd - got).abs() < 1e-6 * (1.0 + got.abs()), "{fd} {got}");
}

#[test]
fn slack_vanishes_under_a_large_budget() {
    // |Δu| = |u + ∂_r u + v| ≤ |u| + |∇u| + |v| when v is manufactured
    let grid = QuadratureGrid::new(3, 0.9, 12, 8, 4);
    let res = model_residuals(&exp_pair(), &grid, 1.0);
    assert!(res.slack_u.values.iter().all(|&s| s <= 1e-9));
}

#[test]
fn cutoff_supports() {
    let pair = exp_pair();
    let plateau = 0.25;
    let w = [0.6, 0.0, 0.8];
    let c0 = assemble_cutoff_pair(&pair, 0, plateau);
    assert_eq!(c0.at(0.2, &w).u_k, 0.0);
    for k in 1..6u32 {
        let c = assemble_cutoff_pair(&pair, k, plateau);
        let s = 0.5f64.powi(k as i32);
        for i in 1..400 {
            let r = 1.2 * i as f64 / 400.0;
            let v = c.at(r, &w);
            if r <= s * plateau || r >= s {
                assert_eq!(v.leibniz, 0.0, "k={k} r={r}");
            }
            if r <= s * plateau {
                assert_eq!(v.u_k, 0.0);
            }
            if r >= 1.0 {
                assert_eq!(v.u_k, 0.0);
                assert_eq!(v.v_phi, 0.0);
            }
        }
    }
}

#[test]
fn cutoff_laplacian_matches_differences() {
    let pair = exp_pair();
    let cut = assemble_cutoff_pair(&pair, 2, 0.25);
    let x = [0.09, 0.1, -0.05];
    let uk = |y: &[f64]| {
        let (r, w) = polar(y);
        cut.at(r, &w).u_k
    };
    let h = 1e-4;
    let mut lap = 0.0;
    for i in 0..3 {
        let (mut a, mut b) = (x, x);
        a[i] += h;
        b[i] -= h;
        lap += (uk(&a) - 2.0 * uk(&x) + uk(&b)) / (h * h);
    }
    let (r, w) = polar(&x);
    let got = cut.at(r, &w);
    assert!((lap - got.laplacian_u_k).abs() < 1e-4 * (1.0 + lap.abs()), "{lap} {}", got.laplacian_u_k);
    // Δu_k = χ_k Δ(φu) + Leibniz terms, and φ = 1 here
    assert!(got.phi == 1.0);
    let direct = got.chi * got.base.laplacian + got.leibniz;
    assert!((direct - got.laplacian_u_k).abs() < 1e-9 * (1.0 + lap.abs()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn first_equation_holds_for_any_coefficients(a0 in -2.0f64..2.0, a1 in -2.0f64..2.0, a2 in 0.5f64..3.0, r in 0.05f64..0.9) {
        let pair = exp_pair().with_coefficients(ModelCoefficients { u_eq: [a0, a1, a2], v_eq: [1.0; 3] });
        let w = [0.0, 0.6, 0.8];
        let p = pair.at(r, &w);
        let res = p.laplacian - (a0 * p.u + a1 * p.du_r + a2 * p.v);
        prop_assert!(res.abs() <= 1e-10 * (1.0 + p.laplacian.abs()));
    }
}
