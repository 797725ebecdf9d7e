use nalgebra::DMatrix;
use uc_core::einstein::{CosmologicalConstant, Potential, ScalarSolution};
use uc_core::geodesic::orthonormal_basis;
use uc_core::metric::MetricField;
use uc_core::Result;
use uc_experiments::difference::{difference_pipeline, DifferenceReport, PipelineOptions, Solution};

use crate::config::RunConfig;
use crate::report::{Check, SuiteOutput, Table};

/// `V = c + ½μφ² − ¼μφ⁴` with `V(1) = (n−1)k_a`, `V(0) = (n−1)k_b` and
/// `V'(0) = V'(1) = 0`, so that `φ ≡ 1` on the `k_a` sphere and `φ ≡ 0` on
/// the `k_b` sphere both solve the system with zero cosmological constant.
pub fn bridging_potential(n: usize, k_a: f64, k_b: f64) -> Potential {
    let m = (n - 1) as f64;
    let mu = 4.0 * m * (k_a - k_b);
    Potential::quartic(m * k_b, mu, -mu)
}

/// Rotation by `angle` in the plane of the first two coordinates, row-major.
pub fn plane_rotation(n: usize, angle: f64) -> Vec<f64> {
    let mut q: Vec<f64> = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
    let (c, s) = (angle.cos(), angle.sin());
    q[0] = c;
    q[1] = -s;
    q[n] = s;
    q[n + 1] = c;
    q
}

/// Largest deviation of the `R` block of `δu` at the base point from
/// `Δk (δ_ik δ_jl − δ_il δ_jk)`.
pub fn riemann_block_error(report: &DifferenceReport, dk: f64) -> f64 {
    let n = report.n;
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let want = dk * (d(i, k) * d(j, l) - d(i, l) * d(j, k));
                    worst = worst.max((report.origin_du[((i * n + j) * n + k) * n + l] - want).abs());
                }
            }
        }
    }
    worst
}

pub struct Configurations {
    pub identical: Result<DifferenceReport>,
    pub rotated: Result<DifferenceReport>,
    pub perturbed: Result<DifferenceReport>,
}

pub fn run_configurations(cfg: &RunConfig) -> Result<Configurations> {
    let pc = &cfg.pipeline;
    let n = pc.n;
    let pot = bridging_potential(n, pc.curvature, pc.perturbed_curvature);
    let lc = CosmologicalConstant(0.0);
    let opts = PipelineOptions {
        radius: pc.radius,
        ..PipelineOptions::default()
    };
    let field = MetricField::sphere(n, pc.curvature)?;
    let p0 = &pc.base_point;
    let a = Solution::new(field.clone(), ScalarSolution::constant(1.0), p0);
    let q = plane_rotation(n, pc.rotation_angle);
    let qm = DMatrix::from_row_slice(n, n, &q);
    let pb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[j * n + i] * p0[j]).sum()).collect();
    let basis = orthonormal_basis(&field, p0)?;
    let rotated = Solution::new(field.rotated(&q)?, ScalarSolution::constant(1.0).rotated(&q)?, &pb).with_basis(qm.transpose() * basis);
    let perturbed = Solution::new(MetricField::sphere(n, pc.perturbed_curvature)?, ScalarSolution::constant(0.0), p0);
    Ok(Configurations {
        identical: difference_pipeline(&a, &a.clone(), &pot, lc, &opts),
        rotated: difference_pipeline(&a, &rotated, &pot, lc, &opts),
        perturbed: difference_pipeline(&a, &perturbed, &pot, lc, &opts),
    })
}

pub fn diff_pipeline(cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let tol = cfg.pipeline.tolerance;
    let runs = match run_configurations(cfg) {
        Ok(r) => r,
        Err(e) => {
            out.checks.push(Check::failed("pipeline_setup", &e.to_string()));
            return out;
        }
    };
    let mut rows = Table::new(
        "pipeline_rows",
        &[
            "configuration", "r", "direction", "du_riemann", "du_phi", "du_dphi", "du_ddphi", "dv_e", "dv_dual", "dv_de", "dv_ddual",
            "dv_gamma", "dv_gamma_y", "dv_dgamma", "dv_dgamma_y",
        ],
    );
    let mut summary = Table::new(
        "pipeline_summary",
        &["configuration", "points", "max_du", "max_dv", "order_u", "order_v", "first_disagreement", "constant_u", "constant_v"],
    );
    for (name, r) in [("identical", &runs.identical), ("rotated", &runs.rotated), ("perturbed", &runs.perturbed)] {
        let rep = match r {
            Ok(rep) => rep,
            Err(e) => {
                out.checks.push(Check::failed(format!("{name}_pipeline"), &e.to_string()));
                continue;
            }
        };
        for row in &rep.rows {
            let mut cells = vec![name.into(), row.r.into(), row.direction.into()];
            cells.extend(row.du_blocks.iter().map(|&v| v.into()));
            cells.extend(row.dv_blocks.iter().map(|&v| v.into()));
            rows.push(cells);
        }
        summary.push(vec![
            name.into(),
            rep.points.into(),
            rep.max_du_total().into(),
            rep.max_dv_total().into(),
            rep.order_u.order.into(),
            rep.order_v.order.into(),
            rep.first_disagreement().map_or("none".to_string(), |k| k.to_string()).into(),
            rep.constant_u.unwrap_or(f64::NAN).into(),
            rep.constant_v.unwrap_or(f64::NAN).into(),
        ]);
        match name {
            "perturbed" => {
                out.checks.push(Check::flag("perturbed_order_zero", rep.first_disagreement() == Some(0)));
                let dk = cfg.pipeline.perturbed_curvature - cfg.pipeline.curvature;
                out.checks.push(Check::at_most("perturbed_riemann_block", riemann_block_error(rep, dk), tol));
            }
            _ => {
                out.checks.push(Check::at_most(format!("{name}_du"), rep.max_du_total(), tol));
                out.checks.push(Check::at_most(format!("{name}_dv"), rep.max_dv_total(), tol));
            }
        }
    }
    out.tables.push(rows);
    out.tables.push(summary);
    out
}
