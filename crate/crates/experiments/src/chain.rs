//! Numerical evaluation of every term in the Carleman chains for the
//! cutoff pair, the absorption bookkeeping, and the decay quantities that
//! drive the vanishing conclusion.

use rayon::prelude::*;
use serde::Serialize;
use uc_core::carleman::{
    hat_r, lambda_admissible, log_weighted_norm, weighted_norm, CarlemanParams, GridValues, QuadratureGrid, RadialFactor, TestFunction,
    VanishingOrder,
};
use uc_core::{Error, Result};

use crate::model::{assemble_cutoff_pair, ModelPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainParams {
    pub carleman: CarlemanParams,
    /// Cutoff index of `χ_k`.
    pub k: u32,
    /// The constant `C` shared by both Carleman inequalities.
    pub constant: f64,
    /// Gauss nodes per radial shell.
    pub nodes: usize,
    /// Shells of the outer annulus `B_1 ∖ B_R`, graded toward `|x| = 1`.
    pub outer_levels: usize,
}

impl ChainParams {
    pub fn new(carleman: CarlemanParams, k: u32, constant: f64) -> ChainParams {
        ChainParams {
            carleman,
            k,
            constant,
            nodes: 16,
            outer_levels: 24,
        }
    }
}

/// `‖(R̂/r̂)^λ u‖_{L^q(B_R)}`, infinite when `r̂^{−λ}u ∉ L^q` near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounded {
    pub lambda: f64,
    pub value: f64,
    pub divergent: bool,
}

/// `‖(R̂/r̂)^λ u‖_{L^q(B_R)}`. For `u` of finite vanishing order `m` the
/// integrand behaves like `r^{q(m−λ)+n−1}` and diverges once `λ ≥ m + n/q`.
pub fn bounded_quantity(u: &TestFunction, lambda: f64, params: &CarlemanParams, grid: &QuadratureGrid) -> Result<Bounded> {
    let (_, q) = params.exponents();
    if let VanishingOrder::Finite(m) = u.vanishing {
        if lambda >= m as f64 + params.n as f64 / q {
            return Ok(Bounded {
                lambda,
                value: f64::INFINITY,
                divergent: true,
            });
        }
    }
    let vals = grid.sample_function(u, |p| p.u);
    let log_norm = log_weighted_norm(grid, &vals, lambda, q, params.delta, false)?;
    let big = hat_r(params.radius, params.delta)?;
    Ok(Bounded {
        lambda,
        value: (lambda * big.ln() + log_norm).exp(),
        divergent: false,
    })
}

/// Sup over `(0, 1)` of `|φ|`, `|∇φ|` and the operator norm of `∇²φ`.
pub fn phi_c2_norm(plateau: f64) -> f64 {
    let f = RadialFactor::Bump { scale: 1.0, plateau };
    (1..4000)
        .map(|i| {
            let r = i as f64 / 4000.0;
            let d = f.derivatives(r, 2);
            d[0].abs().max(d[1].abs()).max(d[2].abs()).max((d[1] / r).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OkTerm {
    pub k: u32,
    pub lambda: f64,
    /// `‖u‖_{W^{1,p}(B_{2^{−k}})}`.
    pub sobolev: f64,
    /// `R^{−λ} 2^{(λ+2)k} ‖φ‖_{C²} ‖u‖_{W^{1,p}(B_{2^{−k}})}`.
    pub bound: f64,
    /// `‖r̂^{−λ}(2∇χ_k·∇u + uΔχ_k)‖_{L^p(B_R)}`, the quantity the bound controls.
    pub leibniz: f64,
}

/// The Leibniz remainder of `Δu_k` and its `o_k(1)` bound.
pub fn ok_term(pair: &ModelPair, k: u32, lambda: f64, params: &CarlemanParams, nodes: usize) -> Result<OkTerm> {
    let (p, _) = params.exponents();
    let n = pair.n;
    let rho = 0.5f64.powi(k as i32);
    let ball = QuadratureGrid::for_function(&pair.u, n, rho, 40, nodes);
    let u = ball.sample_function(&pair.u, |v| v.u);
    let gu = ball.sample_function(&pair.u, |v| v.grad.iter().map(|g| g * g).sum::<f64>().sqrt());
    let sobolev = weighted_norm(&ball, &u, 0.0, p, params.delta, false)? + weighted_norm(&ball, &gu, 0.0, p, params.delta, false)?;
    let c2 = phi_c2_norm(params.radius);
    let log_bound = -lambda * params.radius.ln() + (lambda + 2.0) * k as f64 * 2f64.ln() + c2.ln() + sobolev.ln();
    let cut = assemble_cutoff_pair(pair, k, params.radius);
    let (lo, hi) = (rho * params.radius, rho.min(params.radius));
    let leibniz = if lo < hi {
        let shell = QuadratureGrid::annulus(n, lo, hi, 12, nodes, pair.u.is_radial());
        let vals = cut.sample(&shell, |c| c.leibniz);
        weighted_norm(&shell, &vals, lambda, p, params.delta, false)?
    } else {
        0.0
    };
    Ok(OkTerm {
        k,
        lambda,
        sobolev,
        bound: log_bound.exp(),
        leibniz,
    })
}

/// One absorption step: the term's coefficient against the left side it
/// is absorbed into, and whether it is below ½.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Absorption {
    pub term: &'static str,
    pub coefficient: f64,
    pub absorbed: bool,
}

impl Absorption {
    fn new(term: &'static str, coefficient: f64) -> Absorption {
        Absorption {
            term,
            coefficient,
            absorbed: coefficient < 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRow {
    pub lambda: f64,
    /// `‖r̂^{−λ}u_k‖_q + λ^{1/n}‖r̂^{−λ}r^{−1+δ/2}∇u_k‖_q` on `B_R`.
    pub u_lhs: f64,
    /// `‖r̂^{−λ}Δu_k‖_{L^p(B_R)}`.
    pub laplacian_u_k: f64,
    /// `‖r̂^{−λ}(2∇χ_k·∇u + uΔχ_k)‖_{L^p(B_R)}`.
    pub leibniz: f64,
    /// `R²‖r̂^{−λ}χ_k u‖_q`.
    pub t_u: f64,
    /// `R²‖r̂^{−λ}χ_k∇u‖_q`.
    pub t_grad: f64,
    /// `R‖r̂^{−λ}χ_k v‖_2`.
    pub t_v: f64,
    /// `‖r̂^{−λ}Δ(φu)‖_{L^p(B_1∖B_R)}`.
    pub outer_u: f64,
    /// `λ‖r̂^{−λ}v‖_{L^2(B_R)}`.
    pub v_lhs: f64,
    /// `‖r̂^{−λ}v‖_2`.
    pub s_v: f64,
    /// `R‖r̂^{−λ}u‖_q`.
    pub s_u: f64,
    /// `R‖r̂^{−λ}∇u‖_q`.
    pub s_grad: f64,
    /// `‖r̂^{−λ}Y(φv)‖_{L^2(B_1∖B_R)}`.
    pub outer_v: f64,
    /// `‖r̂^{−λ}u‖_q + λ^{1/n}‖r̂^{−λ}r^{−1+δ/2}∇u‖_q + λ‖r̂^{−λ}v‖_2` on `B_R`.
    pub final_lhs: f64,
    /// `R̂^λ · final_lhs`, the smallest `C′` with `final_lhs ≤ C′R̂^{−λ}`.
    pub c_prime: f64,
    /// `‖(R̂/r̂)^λ u‖_{L^q(B_R)}`.
    pub bounded_u: f64,
    /// `‖(R̂/r̂)^λ v‖_{L^q(B_R)}`.
    pub bounded_v: f64,
    pub absorptions: Vec<Absorption>,
}

impl ChainRow {
    pub fn all_absorbed(&self) -> bool {
        self.absorptions.iter().all(|a| a.absorbed)
    }

    /// `(name, value)` for every numeric term, in a fixed order.
    pub fn terms(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("u_lhs", self.u_lhs),
            ("laplacian_u_k", self.laplacian_u_k),
            ("leibniz", self.leibniz),
            ("t_u", self.t_u),
            ("t_grad", self.t_grad),
            ("t_v", self.t_v),
            ("outer_u", self.outer_u),
            ("v_lhs", self.v_lhs),
            ("s_v", self.s_v),
            ("s_u", self.s_u),
            ("s_grad", self.s_grad),
            ("outer_v", self.outer_v),
            ("final_lhs", self.final_lhs),
            ("c_prime", self.c_prime),
            ("bounded_u", self.bounded_u),
            ("bounded_v", self.bounded_v),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub pair: String,
    pub n: usize,
    pub delta: f64,
    pub radius: f64,
    pub k: u32,
    pub constant: f64,
    pub grid_levels: usize,
    pub rows: Vec<ChainRow>,
}

impl SweepReport {
    /// `max C′ / min C′` over the sweep.
    pub fn c_prime_spread(&self) -> f64 {
        let (lo, hi) = self
            .rows
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.c_prime), hi.max(r.c_prime)));
        hi / lo
    }
}

struct Fields {
    inner: QuadratureGrid,
    outer: QuadratureGrid,
    u_k: GridValues,
    grad_u_k: GridValues,
    lap_u_k: GridValues,
    leibniz: GridValues,
    chi_u: GridValues,
    chi_grad: GridValues,
    chi_v: GridValues,
    u: GridValues,
    grad: GridValues,
    v: GridValues,
    outer_lap: GridValues,
    outer_yv: GridValues,
}

fn norm(values: &[f64]) -> f64 {
    values.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Evaluates the three chains for `pair` over `lambdas`.
pub fn chain_report(pair: &ModelPair, lambdas: &[f64], params: &ChainParams) -> Result<SweepReport> {
    let cp = &params.carleman;
    let n = cp.n;
    if let Some(&bad) = lambdas.iter().find(|&&l| !(l > n as f64 && lambda_admissible(l, n))) {
        return Err(Error::InadmissibleLambda(bad));
    }
    let lambda_max = lambdas.iter().copied().fold(0.0, f64::max);
    let inner = QuadratureGrid::adapted(&pair.u, cp, lambda_max, params.nodes)?;
    let outer = QuadratureGrid::annulus(n, cp.radius, 1.0, params.outer_levels, params.nodes, pair.u.is_radial());
    let cut = assemble_cutoff_pair(pair, params.k, cp.radius);
    let f = Fields {
        u_k: cut.sample(&inner, |c| c.u_k),
        grad_u_k: cut.sample(&inner, |c| norm(&c.grad_u_k)),
        lap_u_k: cut.sample(&inner, |c| c.laplacian_u_k),
        leibniz: cut.sample(&inner, |c| c.leibniz),
        chi_u: cut.sample(&inner, |c| c.chi * c.base.u),
        chi_grad: cut.sample(&inner, |c| c.chi * c.base.grad_norm()),
        chi_v: cut.sample(&inner, |c| c.chi * c.base.v),
        u: pair.sample(&inner, |p| p.u),
        grad: pair.sample(&inner, |p| p.grad_norm()),
        v: pair.sample(&inner, |p| p.v),
        outer_lap: cut.sample(&outer, |c| c.laplacian_phi_u),
        outer_yv: cut.sample(&outer, |c| c.y_phi_v),
        inner,
        outer,
    };
    let rows = lambdas.par_iter().map(|&lambda| chain_row(&f, lambda, params)).collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        pair: pair.u.name.clone(),
        n,
        delta: cp.delta,
        radius: cp.radius,
        k: params.k,
        constant: params.constant,
        grid_levels: f.inner.levels,
        rows,
    })
}

fn chain_row(f: &Fields, lambda: f64, params: &ChainParams) -> Result<ChainRow> {
    let cp = &params.carleman;
    let (p, q) = cp.exponents();
    let (d, r, c) = (cp.delta, cp.radius, params.constant);
    let nth = lambda.powf(1.0 / cp.n as f64);
    let inner = |g: &GridValues, s: f64, extra: bool| weighted_norm(&f.inner, g, lambda, s, d, extra);
    let outer = |g: &GridValues, s: f64| weighted_norm(&f.outer, g, lambda, s, d, false);
    let u_lhs = inner(&f.u_k, q, false)? + nth * inner(&f.grad_u_k, q, true)?;
    let s_v = inner(&f.v, 2.0, false)?;
    let (nu, ngrad) = (inner(&f.u, q, false)?, inner(&f.grad, q, true)?);
    let final_lhs = nu + nth * ngrad + lambda * s_v;
    let big = hat_r(r, d)?;
    let bounded = |g: &GridValues| -> Result<f64> {
        Ok((lambda * big.ln() + log_weighted_norm(&f.inner, g, lambda, q, d, false)?).exp())
    };
    Ok(ChainRow {
        lambda,
        u_lhs,
        laplacian_u_k: inner(&f.lap_u_k, p, false)?,
        leibniz: inner(&f.leibniz, p, false)?,
        t_u: r * r * inner(&f.chi_u, q, false)?,
        t_grad: r * r * inner(&f.chi_grad, q, false)?,
        t_v: r * inner(&f.chi_v, 2.0, false)?,
        outer_u: outer(&f.outer_lap, p)?,
        v_lhs: lambda * s_v,
        s_v,
        s_u: r * nu,
        s_grad: r * inner(&f.grad, q, false)?,
        outer_v: outer(&f.outer_yv, 2.0)?,
        final_lhs,
        c_prime: big.powf(lambda) * final_lhs,
        bounded_u: bounded(&f.u)?,
        bounded_v: bounded(&f.v)?,
        // r^{−1+δ/2} ≥ 1 on B_R lets gradient terms absorb into the weighted gradient norm
        absorptions: vec![
            Absorption::new("t_u", c * r * r),
            Absorption::new("t_grad", c * r * r / nth),
            Absorption::new("t_v", c * r / lambda),
            Absorption::new("s_v", c / lambda),
            Absorption::new("s_u", c * r),
            Absorption::new("s_grad", c * r / nth),
        ],
    })
}
