use rayon::prelude::*;
use uc_core::frame::{direct_frame_oracle, integrate_frame_in_chart, jacobi_gamma_y, FrameOptions, FrameState, OracleOptions};
use uc_core::geometry::{ricci, riemann};
use uc_core::metric::{Backend, MetricField};
use uc_core::normal_chart::{normal_chart_for, NormalChart, SpaceFormChart};
use uc_core::tensor::riemann_symmetry_residuals;
use uc_core::Result;

use crate::config::RunConfig;
use crate::report::{Check, SuiteOutput, Table};
use crate::sampling;

pub const RICCI_ANALYTIC_TOL: f64 = 1e-9;
pub const RICCI_FD_TOL: f64 = 1e-6;
pub const SYMMETRY_TOL: f64 = 1e-6;
pub const ORACLE_TOL: f64 = 1e-5;
pub const DRIFT_TOL: f64 = 1e-7;
pub const FLAT_TOL: f64 = 1e-12;
pub const JACOBI_TOL: f64 = 1e-6;

pub fn field_from(cfg: &RunConfig) -> Result<MetricField> {
    let g = &cfg.geometry;
    let field = MetricField::from_name(&g.preset, g.n, g.curvature)?;
    Ok(match g.backend.as_str() {
        "finite-difference" => field.with_backend(Backend::finite_difference_with(g.h)),
        _ => field,
    })
}

fn sample_radius(cfg: &RunConfig, field: &MetricField) -> f64 {
    let r = cfg.geometry.sample_radius;
    field.domain_radius().map_or(r, |d| r.min(0.9 * d))
}

fn ricci_defect(field: &MetricField, k: f64, p: &[f64]) -> Result<f64> {
    let n = field.dim() as f64;
    let ric = ricci(field, p)?;
    let g = field.metric_at(p)?.lower_tensor();
    Ok(ric.max_abs_diff(&g.scale((n - 1.0) * k)))
}

/// `Ric = (n−1)Kg` with both backends and the algebraic Riemann symmetries.
pub fn curvature_check(cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let field = match field_from(cfg) {
        Ok(f) => f,
        Err(e) => {
            out.checks.push(Check::failed("curvature_setup", &e.to_string()));
            return out;
        }
    };
    let analytic = field.clone().with_backend(Backend::Analytic);
    let fd = field.clone().with_backend(Backend::finite_difference_with(cfg.geometry.h));
    let k = field.preset().constant_curvature();
    let label = format!("{}_n{}", cfg.geometry.preset, cfg.geometry.n);
    let points = sampling::ball_points(
        &mut sampling::rng(cfg.run.seed, 1),
        cfg.geometry.n,
        sample_radius(cfg, &field),
        cfg.geometry.points,
    );
    let rows: Vec<Result<(f64, Option<f64>, Option<f64>, f64)>> = points
        .par_iter()
        .map(|p| {
            let (ra, rf) = match k {
                Some(k) => (Some(ricci_defect(&analytic, k, p)?), Some(ricci_defect(&fd, k, p)?)),
                None => (None, None),
            };
            let sym = riemann_symmetry_residuals(&riemann(&field, p)?)?.max();
            let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok((r, ra, rf, sym))
        })
        .collect();
    let mut table = Table::new("curvature_points", &["point", "radius", "ricci_analytic", "ricci_fd", "symmetry"]);
    let (mut ma, mut mf, mut ms) = (0.0f64, 0.0f64, 0.0f64);
    for (i, row) in rows.into_iter().enumerate() {
        match row {
            Ok((r, ra, rf, sym)) => {
                ma = ma.max(ra.unwrap_or(0.0));
                mf = mf.max(rf.unwrap_or(0.0));
                ms = ms.max(sym);
                table.push(vec![i.into(), r.into(), ra.unwrap_or(f64::NAN).into(), rf.unwrap_or(f64::NAN).into(), sym.into()]);
            }
            Err(e) => out.checks.push(Check::failed(format!("{label}_point_{i}"), &e.to_string())),
        }
    }
    if k.is_some() {
        out.checks.push(Check::at_most(format!("{label}_ricci_analytic"), ma, RICCI_ANALYTIC_TOL));
        out.checks.push(Check::at_most(format!("{label}_ricci_fd"), mf, RICCI_FD_TOL));
    }
    out.checks.push(Check::at_most(format!("{label}_riemann_symmetry"), ms, SYMMETRY_TOL));
    out.tables.push(table);
    out
}

struct RayResult {
    oracle: [f64; 8],
    drift: f64,
    jacobi: Option<f64>,
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn ray(field: &MetricField, chart: &dyn NormalChart, p0: &[f64], dir: &[f64], cfg: &RunConfig) -> Result<RayResult> {
    let f = &cfg.frame;
    let mut radii: Vec<f64> = f.jacobi_radii.iter().copied().filter(|&r| r <= f.radius).collect();
    radii.push(f.radius);
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let opts = FrameOptions {
        invariant_tol: 1e-3,
        ..FrameOptions::default()
    };
    let states = integrate_frame_in_chart(chart, dir, &radii, f.seed_radius, &opts)?;
    let mut drift = 0.0f64;
    let mut jacobi = None;
    let k = field.preset().constant_curvature();
    for (s, &r) in states.iter().zip(&radii) {
        let x: Vec<f64> = dir.iter().map(|t| t * r).collect();
        let inv = s.invariants(&chart.metric(&x)?);
        drift = drift.max(inv.duality).max(inv.orthonormality);
        if let (Some(k), true) = (k, f.jacobi_radii.contains(&r)) {
            let d = max_diff(&s.gamma_y, &jacobi_gamma_y(k, r, dir));
            jacobi = Some(jacobi.unwrap_or(0.0f64).max(d));
        }
    }
    let last = states.last().expect("at least one radius");
    let oracle = direct_frame_oracle(field, p0, dir, f.radius, &OracleOptions::default())?;
    Ok(RayResult {
        oracle: last.block_deviation(&oracle),
        drift,
        jacobi,
    })
}

/// Frame ODE against the brute-force oracle, invariant drift, the Jacobi
/// closed form and the flat fixed point.
pub fn frame_ode(cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let label = format!("{}_n{}", cfg.geometry.preset, cfg.geometry.n);
    let field = match field_from(cfg) {
        Ok(f) => f,
        Err(e) => {
            out.checks.push(Check::failed("frame_setup", &e.to_string()));
            return out;
        }
    };
    let n = cfg.geometry.n;
    let mut rng = sampling::rng(cfg.run.seed, 2);
    let p0 = sampling::ball_points(&mut rng, n, 0.4 * sample_radius(cfg, &field), 1).remove(0);
    let dirs = sampling::directions(&mut rng, n, cfg.frame.rays);
    let chart = match normal_chart_for(&field, &p0) {
        Ok(c) => c,
        Err(e) => {
            out.checks.push(Check::failed("frame_setup", &e.to_string()));
            return out;
        }
    };
    let results: Vec<Result<RayResult>> = dirs.par_iter().map(|d| ray(&field, chart.as_ref(), &p0, d, cfg)).collect();
    let mut table = Table::new(
        "frame_rays",
        &[
            "ray", "e", "dual", "de", "ddual", "gamma", "gamma_y", "dgamma", "dgamma_y", "drift", "jacobi",
        ],
    );
    let (mut dev, mut drift, mut jac) = (0.0f64, 0.0f64, None::<f64>);
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => {
                dev = r.oracle.iter().copied().fold(dev, f64::max);
                drift = drift.max(r.drift);
                if let Some(j) = r.jacobi {
                    jac = Some(jac.unwrap_or(0.0).max(j));
                }
                let mut row = vec![i.into()];
                row.extend(r.oracle.iter().map(|&v| v.into()));
                row.push(r.drift.into());
                row.push(r.jacobi.unwrap_or(f64::NAN).into());
                table.push(row);
            }
            Err(e) => out.checks.push(Check::failed(format!("{label}_ray_{i}"), &e.to_string())),
        }
    }
    out.checks.push(Check::at_most(format!("{label}_oracle_deviation"), dev, ORACLE_TOL));
    out.checks.push(Check::at_most(format!("{label}_invariant_drift"), drift, DRIFT_TOL));
    if let Some(j) = jac {
        out.checks.push(Check::at_most(format!("{label}_jacobi_closed_form"), j, JACOBI_TOL));
    }
    out.checks.push(flat_fixed_point(n, &dirs, cfg));
    out.tables.push(table);
    out
}

fn flat_fixed_point(n: usize, dirs: &[Vec<f64>], cfg: &RunConfig) -> Check {
    let chart = match SpaceFormChart::new(n, 0.0) {
        Ok(c) => c,
        Err(e) => return Check::failed("flat_fixed_point", &e.to_string()),
    };
    let r = cfg.frame.radius;
    let devs: Result<Vec<f64>> = dirs
        .par_iter()
        .map(|d| {
            let s = integrate_frame_in_chart(&chart, d, &[r], cfg.frame.seed_radius, &FrameOptions::default())?;
            Ok(s[0].max_deviation(&FrameState::flat(n, r, d)))
        })
        .collect();
    match devs {
        Ok(d) => Check::at_most("flat_fixed_point", d.into_iter().fold(0.0, f64::max), FLAT_TOL),
        Err(e) => Check::failed("flat_fixed_point", &e.to_string()),
    }
}
