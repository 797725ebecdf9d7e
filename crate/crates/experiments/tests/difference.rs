use nalgebra::DMatrix;
use uc_core::einstein::*;
use uc_core::geodesic::orthonormal_basis;
use uc_core::metric::MetricField;
use uc_core::Error;
use uc_experiments::difference::*;

const P0: [f64; 3] = [0.3, 0.1, -0.2];

fn potential() -> Potential {
    // V(1) = 0 and V'(1) = 0 for the unit sphere, V(0) = 2.2 for K = 1.1
    Potential::quartic(2.2, -0.8, 0.8)
}

fn unit_sphere() -> Solution {
    Solution::new(MetricField::sphere(3, 1.0).unwrap(), ScalarSolution::constant(1.0), &P0)
}

fn opts() -> PipelineOptions {
    PipelineOptions::default()
}

#[test]
fn identical_solutions_agree_everywhere() {
    let a = unit_sphere();
    let r = difference_pipeline(&a, &a.clone(), &potential(), CosmologicalConstant(0.0), &opts()).unwrap();
    assert_eq!(r.max_du_total(), 0.0);
    assert_eq!(r.max_dv_total(), 0.0);
    assert!(r.uc_hypothesis && r.agrees_to_order);
    assert_eq!(r.first_disagreement(), None);
    assert!(r.points > 0);
}

#[test]
fn rotated_chart_is_the_same_solution() {
    let a = unit_sphere();
    let (c, s) = (0.6f64.cos(), 0.6f64.sin());
    let q = [c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0];
    let qm = DMatrix::from_row_slice(3, 3, &q);
    let pb: Vec<f64> = (0..3).map(|i| (0..3).map(|j| q[j * 3 + i] * P0[j]).sum()).collect();
    let basis = orthonormal_basis(&a.field, &P0).unwrap();
    let b = Solution::new(
        a.field.rotated(&q).unwrap(),
        ScalarSolution::constant(1.0).rotated(&q).unwrap(),
        &pb,
    )
    .with_basis(qm.transpose() * basis);
    let r = difference_pipeline(&a, &b, &potential(), CosmologicalConstant(0.0), &opts()).unwrap();
    assert!(r.max_du_total() <= 1e-6, "{:?}", r.max_du);
    assert!(r.max_dv_total() <= 1e-6, "{:?}", r.max_dv);
    assert!(r.uc_hypothesis);
}

#[test]
fn different_curvatures_disagree_at_order_zero() {
    let a = unit_sphere();
    let b = Solution::new(MetricField::sphere(3, 1.1).unwrap(), ScalarSolution::constant(0.0), &P0);
    let r = difference_pipeline(&a, &b, &potential(), CosmologicalConstant(0.0), &opts()).unwrap();
    assert_eq!(r.first_disagreement(), Some(0));
    assert!(!r.uc_hypothesis);
    // δR_{ijkl} = (K_b - K_a)(δ_ik δ_jl - δ_il δ_jk) in orthonormal frames
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let want = 0.1 * (d(i, k) * d(j, l) - d(i, l) * d(j, k));
                    worst = worst.max((r.origin_du[((i * 3 + j) * 3 + k) * 3 + l] - want).abs());
                }
            }
        }
    }
    assert!(worst <= 1e-6, "{worst}");
    assert!((r.origin_du[81] - 1.0).abs() <= 1e-12);
}

#[test]
fn swapping_negates_the_difference() {
    let a = unit_sphere();
    let b = Solution::new(MetricField::sphere(3, 1.1).unwrap(), ScalarSolution::constant(0.0), &P0);
    let o = PipelineOptions { inequality: false, ..opts() };
    let ab = difference_pipeline(&a, &b, &potential(), CosmologicalConstant(0.0), &o).unwrap();
    let ba = difference_pipeline(&b, &a, &potential(), CosmologicalConstant(0.0), &o).unwrap();
    assert_eq!(ab.rows.len(), ba.rows.len());
    for (x, y) in ab.rows.iter().zip(&ba.rows) {
        assert!(x.du.iter().zip(&y.du).all(|(p, q)| *p == -*q));
        assert!(x.dv.iter().zip(&y.dv).all(|(p, q)| *p == -*q));
    }
}

#[test]
fn scalar_difference_is_homogeneous_in_flat_vacuum() {
    let flat = |c: f64| Solution::new(MetricField::euclidean(3), ScalarSolution::constant(c), &P0);
    let o = PipelineOptions { inequality: false, ..opts() };
    let run = |a: f64, b: f64| difference_pipeline(&flat(a), &flat(b), &Potential::zero(), CosmologicalConstant(0.0), &o).unwrap();
    let base = run(0.5, 0.2);
    let scaled = run(1.5, 0.6);
    assert!((base.max_du[1] - 0.3).abs() < 1e-14);
    assert!((scaled.max_du[1] - 3.0 * base.max_du[1]).abs() < 1e-14);
    assert_eq!(scaled.max_du[0], 0.0);
    assert_eq!(scaled.max_dv_total(), 0.0);
}

#[test]
fn off_shell_input_is_rejected() {
    let a = unit_sphere();
    let b = Solution::new(MetricField::sphere(3, 1.1).unwrap(), ScalarSolution::constant(1.0), &P0);
    let err = difference_pipeline(&a, &b, &potential(), CosmologicalConstant(0.0), &opts()).unwrap_err();
    assert!(matches!(err, Error::OffShell { .. }), "{err:?}");
}
