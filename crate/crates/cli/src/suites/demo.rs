use rayon::prelude::*;
use uc_core::carleman::*;
use uc_core::Result;
use uc_experiments::chain::{bounded_quantity, chain_report, ok_term, Bounded, ChainParams, SweepReport};
use uc_experiments::model::ModelPair;

use crate::config::RunConfig;
use crate::report::{Check, SuiteOutput, Table};
use crate::suites::carleman::admissible;

pub const FLAT_FACTOR: f64 = 2.0;
pub const GROWTH_MIN: f64 = 1e3;
pub const C_PRIME_SPREAD_TOL: f64 = 1.2;
const FINITE_LEVELS: usize = 40;

pub fn demo_params(cfg: &RunConfig) -> Result<CarlemanParams> {
    let c = &cfg.carleman;
    CarlemanParams::new(cfg.geometry.n, c.delta, cfg.demo.radius, c.r0)
}

/// `value(λ_last) / value(λ_first)`; undefined (NaN) when either end diverges.
pub fn growth(rows: &[Bounded]) -> f64 {
    match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if !a.divergent && !b.divergent => b.value / a.value,
        _ => f64::NAN,
    }
}

/// `max / min` of the values; NaN if any diverges.
pub fn flatness(rows: &[Bounded]) -> f64 {
    if rows.iter().any(|r| r.divergent) {
        return f64::NAN;
    }
    let hi = rows.iter().map(|r| r.value).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Largest `bound(k+1) / bound(k)`; at most 1 for a nonincreasing sequence.
pub fn worst_step(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| if w[1] == 0.0 { 0.0 } else { w[1] / w[0] })
        .fold(0.0, f64::max)
}

fn bounded_sweep(u: &TestFunction, lambdas: &[f64], p: &CarlemanParams, nodes: usize) -> Result<Vec<Bounded>> {
    let grid = match u.vanishing {
        VanishingOrder::Infinite => QuadratureGrid::adapted(u, p, lambdas.iter().copied().fold(0.0, f64::max), nodes)?,
        VanishingOrder::Finite(_) => QuadratureGrid::for_function(u, p.n, p.radius, FINITE_LEVELS, nodes),
    };
    lambdas.iter().map(|&l| bounded_quantity(u, l, p, &grid)).collect()
}

pub fn uc_demo(cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let p = match demo_params(cfg) {
        Ok(p) => p,
        Err(e) => {
            out.checks.push(Check::failed("demo_setup", &e.to_string()));
            return out;
        }
    };
    let mut skipped = Table::new("skipped_lambdas", &["sweep", "lambda", "reason"]);
    let lambdas = admissible(&cfg.demo.lambdas, p.n, &mut skipped, "demo");
    out.tables.push(skipped);
    if lambdas.is_empty() {
        out.checks.push(Check::failed("demo_lambdas", "no admissible λ"));
        return out;
    }
    out.extend(contrast(cfg, &p, &lambdas));
    out.extend(ok_decay(cfg, &p));
    out.extend(chains(cfg, &p, &lambdas));
    out
}

fn contrast(cfg: &RunConfig, p: &CarlemanParams, lambdas: &[f64]) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let support = cfg.corpus.support;
    let infinite = infinite_order_corpus(support);
    let finite = finite_order_corpus(support).into_iter().find(|u| u.vanishing == VanishingOrder::Finite(5));
    let mut all: Vec<TestFunction> = infinite.clone();
    all.extend(finite.clone());
    let sweeps: Vec<Result<Vec<Bounded>>> = all.par_iter().map(|u| bounded_sweep(u, lambdas, p, cfg.carleman.nodes)).collect();
    let mut table = Table::new("contrast", &["function", "vanishing", "lambda", "bounded", "divergent"]);
    let mut good: Vec<(TestFunction, Vec<Bounded>)> = Vec::new();
    for (u, s) in all.iter().zip(sweeps) {
        match s {
            Ok(rows) => {
                let order = match u.vanishing {
                    VanishingOrder::Finite(m) => m.to_string(),
                    VanishingOrder::Infinite => "infinite".into(),
                };
                for r in &rows {
                    table.push(vec![u.name.as_str().into(), order.as_str().into(), r.lambda.into(), r.value.into(), r.divergent.into()]);
                }
                good.push((u.clone(), rows));
            }
            Err(e) => out.checks.push(Check::failed(format!("bounded_{}", u.name), &e.to_string())),
        }
    }
    out.tables.push(table);
    for (u, rows) in &good {
        match u.vanishing {
            VanishingOrder::Infinite => out.checks.push(Check::at_most(format!("bounded_flat_{}", u.name), flatness(rows), FLAT_FACTOR)),
            VanishingOrder::Finite(m) => {
                let g = growth(rows);
                if g.is_nan() {
                    log::warn!("{}: the weighted norm diverges for λ ≥ {}, growth across the sweep is undefined", u.name, m as f64 + p.n as f64 / p.exponents().1);
                }
                out.checks.push(Check::at_least(format!("bounded_growth_{}", u.name), g, GROWTH_MIN));
            }
        }
    }
    if let Some((_, fin)) = good.iter().find(|(u, _)| matches!(u.vanishing, VanishingOrder::Finite(_))) {
        let m = 5.0;
        let mut separated = true;
        for (u, rows) in good.iter().filter(|(u, _)| u.vanishing == VanishingOrder::Infinite) {
            for (a, b) in rows.iter().zip(fin) {
                if a.lambda >= 2.0 * m && !(a.value < b.value) {
                    log::warn!("{} is not below the finite-order pair at λ = {}", u.name, a.lambda);
                    separated = false;
                }
            }
        }
        out.checks.push(Check::flag("bounded_separation", separated));
    }
    out
}

fn ok_decay(cfg: &RunConfig, p: &CarlemanParams) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let d = &cfg.demo;
    let pair = ModelPair::manufactured(p.n, infinite_order_corpus(cfg.corpus.support).remove(0));
    let ks: Vec<u32> = (d.ok_k_min..=d.ok_k_max).collect();
    let terms: Result<Vec<_>> = ks.par_iter().map(|&k| ok_term(&pair, k, d.ok_lambda, p, cfg.carleman.nodes)).collect();
    let mut table = Table::new("ok_terms", &["k", "lambda", "sobolev", "bound", "leibniz"]);
    match terms {
        Ok(t) => {
            for r in &t {
                table.push(vec![r.k.into(), r.lambda.into(), r.sobolev.into(), r.bound.into(), r.leibniz.into()]);
            }
            let bounds: Vec<f64> = t.iter().map(|r| r.bound).collect();
            out.checks.push(Check::at_most("ok_bound_monotone", worst_step(&bounds), 1.0));
        }
        Err(e) => out.checks.push(Check::failed("ok_bound_monotone", &e.to_string())),
    }
    out.tables.push(table);
    out
}

fn chains(cfg: &RunConfig, p: &CarlemanParams, lambdas: &[f64]) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let cp = ChainParams {
        nodes: cfg.carleman.nodes,
        ..ChainParams::new(*p, cfg.demo.k, cfg.demo.constant)
    };
    let pairs: Vec<ModelPair> = infinite_order_corpus(cfg.corpus.support).into_iter().map(|u| ModelPair::manufactured(p.n, u)).collect();
    let reports: Vec<Result<SweepReport>> = pairs.iter().map(|pair| chain_report(pair, lambdas, &cp)).collect();
    let mut sweep = Table::new("sweep", &["pair", "lambda", "term", "value"]);
    let mut absorb = Table::new("absorption", &["pair", "lambda", "term", "coefficient", "absorbed"]);
    let mut consistent = true;
    for (pair, r) in pairs.iter().zip(reports) {
        match r {
            Ok(rep) => {
                for row in &rep.rows {
                    for (term, v) in row.terms() {
                        sweep.push(vec![rep.pair.as_str().into(), row.lambda.into(), term.into(), v.into()]);
                    }
                    for a in &row.absorptions {
                        consistent &= a.absorbed == (a.coefficient < 0.5);
                        absorb.push(vec![rep.pair.as_str().into(), row.lambda.into(), a.term.into(), a.coefficient.into(), a.absorbed.into()]);
                    }
                }
                out.checks.push(Check::at_most(format!("c_prime_spread_{}", rep.pair), rep.c_prime_spread(), C_PRIME_SPREAD_TOL));
            }
            Err(e) => out.checks.push(Check::failed(format!("chain_{}", pair.u.name), &e.to_string())),
        }
    }
    out.checks.push(Check::flag("absorption_consistent", consistent));
    out.tables.push(sweep);
    out.tables.push(absorb);
    out
}
