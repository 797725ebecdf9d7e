use rayon::prelude::*;
use uc_core::carleman::*;
use uc_core::Result;

use crate::config::RunConfig;
use crate::report::{Check, SuiteOutput, Table};

pub const STABILITY_TOL: f64 = 1.2;
pub const BY_PARTS_TOL: f64 = 1e-6;
pub const BLOWUP_TOL: f64 = 2.0;
const BY_PARTS_NODES: usize = 64;
const PROBE_LEVELS: usize = 24;

pub fn params(cfg: &RunConfig) -> Result<CarlemanParams> {
    let c = &cfg.carleman;
    CarlemanParams::new(cfg.geometry.n, c.delta, c.radius, c.r0)
}

/// Admissible values of `lambdas`, logging the rest.
pub fn admissible(lambdas: &[f64], n: usize, table: &mut Table, context: &str) -> Vec<f64> {
    lambdas
        .iter()
        .copied()
        .filter(|&l| {
            let ok = lambda_admissible(l, n);
            if !ok {
                log::info!("{context}: skipping λ = {l}, within ½ of k + (n−2)/2 for some k ≥ 1");
                table.push(vec![context.into(), l.into(), "inadmissible".into()]);
            }
            ok
        })
        .collect()
}

pub fn probe_lambdas(cfg: &RunConfig) -> Vec<f64> {
    let s = &cfg.sweep;
    let steps = ((s.probe_max - s.probe_min) / s.probe_step + 1e-9).floor() as usize;
    (0..=steps).map(|i| s.probe_min + i as f64 * s.probe_step).collect()
}

/// Mean of the last quarter of `v` over the mean of the first quarter.
pub fn quartile_growth(v: &[f64]) -> f64 {
    let q = (v.len() / 4).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    mean(&v[v.len() - q..]) / mean(&v[..q])
}

pub fn carleman_verify(cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let p = match params(cfg) {
        Ok(p) => p,
        Err(e) => {
            out.checks.push(Check::failed("carleman_setup", &e.to_string()));
            return out;
        }
    };
    let mut skipped = Table::new("skipped_lambdas", &["sweep", "lambda", "reason"]);
    let lambdas = admissible(&cfg.sweep.lambdas, p.n, &mut skipped, "lemma2");
    out.extend(lemma2_suite(cfg, &p, &lambdas));
    let probe = admissible(&probe_lambdas(cfg), p.n, &mut skipped, "probe");
    out.extend(probe_suite(&p, &probe, cfg.carleman.nodes));
    out.tables.push(skipped);
    out
}

fn lemma2_suite(cfg: &RunConfig, p: &CarlemanParams, lambdas: &[f64]) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let mut table = Table::new("lemma2", &["function", "lambda", "lhs", "rhs", "ratio", "grid_levels"]);
    // the lemma is stated for functions compactly supported in B_R
    let corpus = infinite_order_corpus(p.radius);
    let lmax = lambdas.iter().copied().fold(0.0, f64::max);
    let tables: Vec<Result<(Lemma2Table, usize)>> = corpus
        .par_iter()
        .map(|u| {
            let grid = QuadratureGrid::adapted(u, p, lmax, cfg.carleman.nodes)?;
            Ok((lemma2_verify(u, lambdas, p, &grid, None)?, grid.levels))
        })
        .collect();
    let mut per_lambda = vec![0.0f64; lambdas.len()];
    let mut ok = !lambdas.is_empty();
    for (u, t) in corpus.iter().zip(tables) {
        match t {
            Ok((t, levels)) => {
                for (s, row) in per_lambda.iter_mut().zip(&t.rows) {
                    *s = s.max(row.ratio);
                    table.push(vec![t.function.as_str().into(), row.lambda.into(), row.lhs.into(), row.rhs.into(), row.ratio.into(), levels.into()]);
                }
            }
            Err(e) => {
                ok = false;
                out.checks.push(Check::failed(format!("lemma2_{}", u.name), &e.to_string()));
            }
        }
    }
    if ok {
        let c_meas = per_lambda.iter().copied().fold(0.0, f64::max);
        let lo = per_lambda.iter().copied().fold(f64::INFINITY, f64::min);
        out.checks.push(Check::flag("lemma2_constant_finite", c_meas.is_finite() && c_meas > 0.0));
        out.checks.push(Check::at_most("lemma2_constant_stability", c_meas / lo, STABILITY_TOL));
        let mut sup = Table::new("lemma2_constant", &["lambda", "sup_ratio"]);
        for (l, s) in lambdas.iter().zip(&per_lambda) {
            sup.push(vec![(*l).into(), (*s).into()]);
        }
        out.tables.push(sup);
    }
    out.tables.push(table);
    let mut bp = Table::new("by_parts", &["function", "lambda", "direct", "by_parts", "relative"]);
    let lambda = cfg.corpus.by_parts_lambda;
    for u in corpus.iter().filter(|u| u.is_radial()) {
        let name = format!("by_parts_{}", u.name);
        let r = QuadratureGrid::adapted(u, p, lambda, BY_PARTS_NODES).and_then(|g| by_parts_identity(u, lambda, p, &g));
        match r {
            Ok((a, b)) => {
                let rel = (a - b).abs() / a.abs().max(b.abs());
                bp.push(vec![u.name.as_str().into(), lambda.into(), a.into(), b.into(), rel.into()]);
                out.checks.push(Check::at_most(name, rel, BY_PARTS_TOL));
            }
            Err(e) => out.checks.push(Check::failed(name, &e.to_string())),
        }
    }
    out.tables.push(bp);
    out
}

fn probe_suite(p: &CarlemanParams, lambdas: &[f64], nodes: usize) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let mut table = Table::new("carleman_probe", &["function", "lambda", "lhs_value", "lhs_gradient", "rhs", "ratio"]);
    let corpus = origin_excluded_corpus(p.radius);
    let results: Vec<Result<Vec<SoggeRow>>> = corpus
        .par_iter()
        .map(|u| {
            let grid = QuadratureGrid::for_function(u, p.n, p.radius, PROBE_LEVELS, nodes);
            sogge_probe(u, lambdas, p, &grid)
        })
        .collect();
    for (u, r) in corpus.iter().zip(results) {
        let name = format!("probe_growth_{}", u.name);
        match r {
            Ok(rows) if !rows.is_empty() => {
                let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
                for r in &rows {
                    table.push(vec![u.name.as_str().into(), r.lambda.into(), r.lhs_value.into(), r.lhs_gradient.into(), r.rhs.into(), r.ratio.into()]);
                }
                out.checks.push(Check::at_most(name, quartile_growth(&ratios), BLOWUP_TOL));
            }
            Ok(_) => out.checks.push(Check::failed(name, "no admissible λ in the probe range")),
            Err(e) => out.checks.push(Check::failed(name, &e.to_string())),
        }
    }
    out.tables.push(table);
    out
}
