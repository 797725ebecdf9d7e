use rayon::prelude::*;
use uc_core::einstein::*;
use uc_core::jet::Scalar;
use uc_core::metric::{Backend, MetricField};
use uc_core::Result;

use crate::config::RunConfig;
use crate::report::{Check, SuiteOutput, Table};
use crate::sampling;

pub const IDENTITY_TOL: f64 = 1e-5;
pub const ORDER_RANGE: (f64, f64) = (1.8, 2.2);
const REFINE_STEPS: (f64, f64) = (2e-3, 1e-3);
const MAX_POINTS: usize = 24;

/// A smooth non-symmetric perturbation of the flat metric in three dimensions.
pub fn generic_metric() -> MetricField {
    MetricField::custom(3, None, |x| {
        let n = 3;
        let mut g = Vec::with_capacity(9);
        for i in 0..n {
            for j in 0..n {
                let mut c = x[0].constant_like(if i == j { 1.0 } else { 0.0 });
                let bump = x[i].mul_jet(&x[j]).scale(0.1).add_jet(&x[(i + j) % n].sin().scale(0.05));
                c = c.add_jet(&bump.mul_jet(&x[1].cos()));
                g.push(c);
            }
        }
        g
    })
}

pub fn generic_scalar() -> ScalarSolution {
    ScalarSolution::new(|x| x[0].sin().mul_jet(&x[1].scale(0.7).exp()).add_jet(&x[2].mul_jet(&x[2]).scale(0.3)))
}

/// Exact solutions with constant scalar field in dimension `n`, with `k` the
/// sphere curvature.
pub fn exact_solutions(n: usize, k: f64) -> Result<Vec<(String, EinsteinScalar)>> {
    let nm = (n - 1) as f64;
    let mut out = vec![
        (
            "sphere_cosmological".to_string(),
            EinsteinScalar::new(MetricField::sphere(n, k)?, ScalarSolution::constant(0.4), Potential::zero(), CosmologicalConstant(nm * k)),
        ),
        (
            "hyperbolic_cosmological".to_string(),
            EinsteinScalar::new(
                MetricField::hyperbolic(n, -k)?,
                ScalarSolution::constant(-0.3),
                Potential::zero(),
                CosmologicalConstant(-nm * k),
            ),
        ),
        (
            "euclidean_constant".to_string(),
            EinsteinScalar::new(MetricField::euclidean(n), ScalarSolution::constant(1.2), Potential::zero(), CosmologicalConstant(0.0)),
        ),
        (
            "sphere_massive_vacuum".to_string(),
            EinsteinScalar::new(MetricField::sphere(n, k)?, ScalarSolution::constant(0.0), Potential::quadratic(1.3), CosmologicalConstant(nm * k)),
        ),
    ];
    // V(φ₀) = (n−1)k and V'(φ₀) = 0 at φ₀ = 1 with a nonzero V''
    let c = nm * k + 0.2;
    out.push((
        "sphere_quartic".to_string(),
        EinsteinScalar::new(MetricField::sphere(n, k)?, ScalarSolution::constant(1.0), Potential::quartic(c, -0.8, 0.8), CosmologicalConstant(0.0)),
    ));
    Ok(out)
}

fn residuals(s: &EinsteinScalar, p: &[f64]) -> Result<[f64; 7]> {
    Ok([
        s.einstein_residual(p)?.max_abs(),
        s.scalar_residual(p)?.abs(),
        bianchi2_residual(&s.field, p)?.max_abs(),
        s.contracted_bianchi_residual(p)?.residual.max_abs(),
        s.curvature_laplacian_residual(p)?.residual.max_abs(),
        s.prolonged_scalar_residual_1(p)?.residual.max_abs(),
        s.prolonged_scalar_residual_2(p)?.residual.max_abs(),
    ])
}

const NAMES: [&str; 7] = [
    "einstein",
    "scalar",
    "bianchi",
    "contracted_bianchi",
    "curvature_laplacian",
    "prolonged_1",
    "prolonged_2",
];

/// Field equations and every derived identity on the exact solutions, the
/// same identities off shell on a generic metric, and the convergence order
/// of the finite-difference backend.
pub fn system_residuals(cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let n = cfg.geometry.n;
    let k = if cfg.geometry.curvature != 0.0 { cfg.geometry.curvature.abs() } else { 1.0 };
    let count = cfg.geometry.points.min(MAX_POINTS);
    let points = sampling::ball_points(&mut sampling::rng(cfg.run.seed, 3), n, cfg.geometry.sample_radius.min(0.9), count);
    let mut cols = vec!["solution", "point"];
    cols.extend(NAMES);
    let mut table = Table::new("system_residuals", &cols);
    let solutions = match exact_solutions(n, k) {
        Ok(s) => s,
        Err(e) => {
            out.checks.push(Check::failed("system_setup", &e.to_string()));
            return out;
        }
    };
    for (name, sol) in &solutions {
        let rows: Vec<Result<[f64; 7]>> = points.par_iter().map(|p| residuals(sol, p)).collect();
        let mut worst = [0.0f64; 7];
        let mut ok = true;
        for (i, r) in rows.into_iter().enumerate() {
            match r {
                Ok(r) => {
                    for (w, v) in worst.iter_mut().zip(r) {
                        *w = w.max(v);
                    }
                    let mut row = vec![name.as_str().into(), i.into()];
                    row.extend(r.iter().map(|&v| v.into()));
                    table.push(row);
                }
                Err(e) => {
                    ok = false;
                    out.checks.push(Check::failed(format!("{name}_point_{i}"), &e.to_string()));
                }
            }
        }
        if ok {
            for (label, w) in NAMES.iter().zip(worst) {
                out.checks.push(Check::at_most(format!("{name}_{label}"), w, IDENTITY_TOL));
            }
        }
    }
    out.tables.push(table);
    if n == 3 {
        out.extend(generic_identities(&points));
    }
    out
}

fn generic_identities(points: &[Vec<f64>]) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let (f, phi) = (generic_metric(), generic_scalar());
    let p = &points[..points.len().min(6)];
    let ident: Result<Vec<[f64; 5]>> = p
        .par_iter()
        .map(|x| {
            Ok([
                bianchi2_residual(&f, x)?.max_abs(),
                contracted_bianchi_identity_residual(&f, x)?.max_abs(),
                curvature_laplacian_identity_residual(&f, x)?.max_abs(),
                prolonged_identity_residual_1(&f, &phi, x)?.max_abs(),
                prolonged_identity_residual_2(&f, &phi, x)?.max_abs(),
            ])
        })
        .collect();
    let labels = ["bianchi", "contracted_bianchi", "curvature_laplacian", "prolonged_1", "prolonged_2"];
    match ident {
        Ok(rows) => {
            for (j, l) in labels.iter().enumerate() {
                let w = rows.iter().map(|r| r[j]).fold(0.0, f64::max);
                out.checks.push(Check::at_most(format!("generic_identity_{l}"), w, IDENTITY_TOL));
            }
        }
        Err(e) => out.checks.push(Check::failed("generic_identity", &e.to_string())),
    }
    let mut table = Table::new("refinement", &["residual", "h", "error"]);
    let errs = |h: f64| -> Result<[f64; 4]> {
        let ff = f.clone().with_backend(Backend::finite_difference_with(h));
        let ph = phi.clone().with_backend(Backend::finite_difference_with(h));
        let x = &p[0];
        Ok([
            curvature_laplacian_manufactured_residual(&ff, &f, x)?.max_abs(),
            contracted_bianchi_manufactured_residual(&ff, &f, x)?.max_abs(),
            prolonged_manufactured_residual_1(&ff, &ph, (&f, &phi), x)?.max_abs(),
            prolonged_manufactured_residual_2(&ff, &ph, (&f, &phi), x)?.max_abs(),
        ])
    };
    let refine = ["curvature_laplacian", "contracted_bianchi", "prolonged_1", "prolonged_2"];
    match (errs(REFINE_STEPS.0), errs(REFINE_STEPS.1)) {
        (Ok(c), Ok(fine)) => {
            for (j, l) in refine.iter().enumerate() {
                table.push(vec![(*l).into(), REFINE_STEPS.0.into(), c[j].into()]);
                table.push(vec![(*l).into(), REFINE_STEPS.1.into(), fine[j].into()]);
                let order = observed_order(c[j], fine[j]);
                let name = format!("refinement_order_{l}");
                out.checks.push(Check {
                    name,
                    pass: (ORDER_RANGE.0..=ORDER_RANGE.1).contains(&order),
                    value: order,
                    tolerance: ORDER_RANGE.0,
                });
            }
        }
        (Err(e), _) | (_, Err(e)) => out.checks.push(Check::failed("refinement", &e.to_string())),
    }
    out.tables.push(table);
    out
}
