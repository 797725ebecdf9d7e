use uc_core::carleman::sphere_rule;
use uc_experiments::vanishing::*;

fn dirs() -> Vec<Vec<f64>> {
    sphere_rule(3, 3).into_iter().map(|(d, _)| d).collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn cubic_with_angular_factor() {
    let est = vanishing_order_estimate(|x| Ok(norm(x).powi(2) * (x[0] + 2.0 * x[2])), &dirs(), &default_radii(), 0.0).unwrap();
    assert!((est.order - 3.0).abs() < 0.1, "{}", est.order);
    assert!(!est.infinite);
}

#[test]
fn flat_exponential_is_infinite() {
    let est = vanishing_order_estimate(|x| Ok((-1.0 / norm(x)).exp()), &dirs(), &default_radii(), 0.0).unwrap();
    assert!(est.infinite && est.order == ORDER_CAP);
}

#[test]
fn nonzero_constant_has_order_zero() {
    let est = vanishing_order_estimate(|_| Ok(2.5), &dirs(), &default_radii(), 0.0).unwrap();
    assert!(est.order.abs() < 0.05);
}

#[test]
fn zero_field_reports_the_cap() {
    let est = vanishing_order_estimate(|_| Ok(0.0), &dirs(), &default_radii(), 0.0).unwrap();
    assert!(est.infinite);
    let noisy = vanishing_order_estimate(|x| Ok(1e-12 * x[0].signum()), &dirs(), &default_radii(), 1e-10).unwrap();
    assert!(noisy.infinite);
}

#[test]
fn radii_follow_the_dyadic_schedule() {
    let r = default_radii();
    assert_eq!(r.len(), 11);
    assert_eq!(r[0], 0.1);
    assert!((r[10] - 0.1 / 1024.0).abs() < 1e-18);
}
