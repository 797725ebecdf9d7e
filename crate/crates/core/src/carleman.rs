//! Carleman weights on balls of `ℝⁿ` with the flat metric: the weight
//! `r̂^{−λ}` with `r̂ = r(1 − r^δ)`, cutoffs, weighted `L^s` norms by graded
//! polar quadrature, and numerical checks of the two Carleman inequalities.
//!
//! Norms are accumulated in the log domain, since `r̂^{−λ}` spans hundreds of
//! orders of magnitude across the radial grid.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::jacobi::GaussJacobi;
use gauss_quad::legendre::GaussLegendre;
use gauss_quad::FiniteAboveNegOneF64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};

/// A Carleman exponent; distinct from the cosmological constant.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct CarlemanLambda(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarlemanParams {
    pub n: usize,
    pub delta: f64,
    pub radius: f64,
    pub r0: f64,
}

impl CarlemanParams {
    pub fn new(n: usize, delta: f64, radius: f64, r0: f64) -> Result<CarlemanParams> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("dimension {n} < 3")));
        }
        if !(delta > 0.0 && delta < 2.0 / n as f64) {
            return Err(Error::InvalidParameter(format!("δ = {delta} outside (0, 2/{n})")));
        }
        if !(radius > 0.0 && radius < r0 && r0 < 1.0) {
            return Err(Error::InvalidParameter(format!("need 0 < R = {radius} < R0 = {r0} < 1")));
        }
        Ok(CarlemanParams { n, delta, radius, r0 })
    }

    /// `sup_{r ≤ R} r^δ/(1 − r^δ)`, the factor the absorption step wants ≤ 1.
    pub fn absorption_factor(&self) -> f64 {
        let t = self.radius.powf(self.delta);
        t / (1.0 - t)
    }

    pub fn exponents(&self) -> (f64, f64) {
        lebesgue_exponents(self.n)
    }
}

/// `r̂ = r(1 − r^δ)`.
pub fn hat_r(r: f64, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("r̂ needs 0 ≤ r < 1, got {r}")));
    }
    Ok(r * (1.0 - r.powf(delta)))
}

/// `|λ − (k + (n−2)/2)| ≥ ½` for every `k ≥ 1`.
pub fn lambda_admissible(lambda: f64, n: usize) -> bool {
    let t = lambda - (n as f64 - 2.0) / 2.0;
    let k = t.round().max(1.0);
    (t - k).abs() >= 0.5 - 1e-12
}

/// `(p, q) = (2n/(n+2), 2n/(n−2))`.
pub fn lebesgue_exponents(n: usize) -> (f64, f64) {
    let n = n as f64;
    (2.0 * n / (n + 2.0), 2.0 * n / (n - 2.0))
}

pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

fn exp_recip(x: &Jet) -> Jet {
    x.recip().scale(-1.0).exp()
}

/// Smooth step on `[0, 1]`: 1 at 0, 0 at 1, flat to all orders at both ends.
pub fn smooth_step(t: &Jet) -> Jet {
    let v = t.value();
    if v <= 0.0 {
        return t.constant_like(1.0);
    }
    if v >= 1.0 {
        return t.constant_like(0.0);
    }
    let a = exp_recip(&t.scale(-1.0).add_scalar(1.0));
    let b = exp_recip(t);
    a.div_jet(&a.add_jet(&b))
}

/// The cutoff `φ`: 1 on `B_a`, supported in `B_1`, as a function of `|x|`.
pub fn bump_profile(s: &Jet, plateau: f64) -> Jet {
    smooth_step(&s.add_scalar(-plateau).scale(1.0 / (1.0 - plateau)))
}

/// `φ(x)` with plateau radius `plateau`.
pub fn bump_phi(x: &[f64], plateau: f64) -> f64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    bump_profile(&Jet::seed(&[r], 0)[0], plateau).value()
}

/// `χ_k(x) = 1 − φ(2^k x)`, `φ` with plateau `plateau`.
pub fn cutoff_chi_k(k: u32, plateau: f64, x: &[f64]) -> f64 {
    let y: Vec<f64> = x.iter().map(|v| v * 2f64.powi(k as i32)).collect();
    1.0 - bump_phi(&y, plateau)
}

/// One radial factor of a test function, evaluated on a one-variable jet in `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RadialFactor {
    Constant { c: f64 },
    /// `exp(−r^{−s})`.
    ExpDecay { s: f64 },
    /// `r^m`.
    Power { m: i32 },
    /// `φ(r/scale)` with the given plateau.
    Bump { scale: f64, plateau: f64 },
    /// `χ_k` of `φ` with the given plateau: zero near the origin.
    Annulus { k: u32, plateau: f64 },
    /// `exp(1 − 1/(1 − t²))` in `t = (r − center)/half_width`, zero for `|t| ≥ 1`.
    Shell { center: f64, half_width: f64 },
}

impl RadialFactor {
    /// `[f, f', …, f^{(degree)}]` at `r`.
    pub fn derivatives(&self, r: f64, degree: usize) -> Vec<f64> {
        let j = self.eval(&Jet::seed(&[r], degree)[0]);
        (0..=degree).map(|d| j.partial(&[d as u8])).collect()
    }

    pub fn eval(&self, r: &Jet) -> Jet {
        match *self {
            RadialFactor::Constant { c } => r.constant_like(c),
            RadialFactor::ExpDecay { s } => {
                if r.value() <= 0.0 {
                    return r.constant_like(0.0);
                }
                r.powf(-s).scale(-1.0).exp()
            }
            RadialFactor::Power { m } => {
                let mut acc = r.constant_like(1.0);
                for _ in 0..m {
                    acc = acc.mul_jet(r);
                }
                acc
            }
            RadialFactor::Bump { scale, plateau } => bump_profile(&r.scale(1.0 / scale), plateau),
            RadialFactor::Annulus { k, plateau } => {
                bump_profile(&r.scale(2f64.powi(k as i32)), plateau).scale(-1.0).add_scalar(1.0)
            }
            RadialFactor::Shell { center, half_width } => {
                let t = r.add_scalar(-center).scale(1.0 / half_width);
                if t.value().abs() >= 1.0 {
                    return r.constant_like(0.0);
                }
                let one_minus = t.mul_jet(&t).scale(-1.0).add_scalar(1.0);
                one_minus.recip().scale(-1.0).add_scalar(1.0).exp()
            }
        }
    }
}

/// Homogeneous harmonic polynomials used as angular factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Harmonic {
    One,
    /// `x_0`.
    Linear,
    /// `x_0 x_1`.
    Mixed,
    /// `x_0² − x_1²`.
    Saddle,
}

impl Harmonic {
    pub fn degree(&self) -> i32 {
        match self {
            Harmonic::One => 0,
            Harmonic::Linear => 1,
            Harmonic::Mixed | Harmonic::Saddle => 2,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Harmonic::One => 1.0,
            Harmonic::Linear => x[0],
            Harmonic::Mixed => x[0] * x[1],
            Harmonic::Saddle => x[0] * x[0] - x[1] * x[1],
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        match self {
            Harmonic::One => {}
            Harmonic::Linear => g[0] = 1.0,
            Harmonic::Mixed => {
                g[0] = x[1];
                g[1] = x[0];
            }
            Harmonic::Saddle => {
                g[0] = 2.0 * x[0];
                g[1] = -2.0 * x[1];
            }
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VanishingOrder {
    Finite(u32),
    Infinite,
}

/// `u(x) = f(|x|) h(x)` with `f` a product of radial factors and `h` harmonic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub name: String,
    pub factors: Vec<RadialFactor>,
    pub harmonic: Harmonic,
    pub support: f64,
    pub vanishing: VanishingOrder,
}

/// `u`, `∇u`, `Δu` (flat) and `Yu = r∂_r u` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointValues {
    pub u: f64,
    pub grad: Vec<f64>,
    pub laplacian: f64,
    pub radial: f64,
}

impl TestFunction {
    pub fn new(name: &str, factors: Vec<RadialFactor>, harmonic: Harmonic, support: f64, vanishing: VanishingOrder) -> Self {
        TestFunction {
            name: name.to_string(),
            factors,
            harmonic,
            support,
            vanishing,
        }
    }

    pub fn zero(support: f64) -> Self {
        TestFunction::new("zero", vec![RadialFactor::Constant { c: 0.0 }], Harmonic::One, support, VanishingOrder::Infinite)
    }

    /// `c·u`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.factors.push(RadialFactor::Constant { c });
        out
    }

    pub fn is_radial(&self) -> bool {
        self.harmonic == Harmonic::One
    }

    /// `[f, f', f'']` at `r`.
    pub fn profile(&self, r: f64) -> [f64; 3] {
        let d = self.profile_up_to(r, 2);
        [d[0], d[1], d[2]]
    }

    /// `[f, f', …, f^{(degree)}]` of the radial part at `r`.
    pub fn profile_up_to(&self, r: f64, degree: usize) -> Vec<f64> {
        let x = &Jet::seed(&[r], degree)[0];
        let mut acc = x.constant_like(1.0);
        for f in &self.factors {
            acc = acc.mul_jet(&f.eval(x));
        }
        (0..=degree).map(|d| acc.partial(&[d as u8])).collect()
    }

    /// Values at radius `r` in unit direction `omega`.
    pub fn at(&self, r: f64, omega: &[f64]) -> PointValues {
        let n = omega.len();
        let [f, f1, f2] = self.profile(r);
        let x: Vec<f64> = omega.iter().map(|w| w * r).collect();
        let l = self.harmonic.degree();
        let h = self.harmonic.eval(&x);
        let gh = self.harmonic.gradient(&x);
        let grad = (0..n).map(|i| f1 * omega[i] * h + f * gh[i]).collect();
        let laplacian = if r > 0.0 {
            (f2 + (n as f64 - 1.0 + 2.0 * l as f64) * f1 / r) * h
        } else {
            0.0
        };
        PointValues {
            u: f * h,
            grad,
            laplacian,
            radial: (r * f1 + l as f64 * f) * h,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (r, omega) = polar(x);
        self.at(r, &omega).u
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (r, omega) = polar(x);
        self.at(r, &omega).grad
    }
}

fn polar(x: &[f64]) -> (f64, Vec<f64>) {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let omega = if r > 0.0 {
        x.iter().map(|v| v / r).collect()
    } else {
        let mut e = vec![0.0; x.len()];
        e[0] = 1.0;
        e
    };
    (r, omega)
}

/// Radial Gauss–Legendre nodes on dyadic shells `[2^{−j−1}R, 2^{−j}R]`,
/// `j = 0..levels`, times a product Gauss rule on `S^{n−1}`.
/// Deepest shell index [`QuadratureGrid::adapted`] will try.
pub const MAX_LEVELS: usize = 64;

#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub n: usize,
    pub radius: f64,
    pub levels: usize,
    /// `(r, w, shell)`; `w` excludes `r^{n−1}`.
    pub radial: Vec<(f64, f64, usize)>,
    /// `(ω, w)` with `Σ w = |S^{n−1}|`.
    pub sphere: Vec<(Vec<f64>, f64)>,
}

fn legendre(m: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(m).expect("at least one node"))
        .as_node_weight_pairs()
        .to_vec()
}

/// Gauss rule for `∫_{−1}^{1} g(t)(1 − t²)^a dt`.
fn jacobi_symmetric(m: usize, a: f64) -> Vec<(f64, f64)> {
    if a == 0.0 {
        return legendre(m);
    }
    let a = FiniteAboveNegOneF64::new(a).expect("exponent above −1");
    GaussJacobi::new(NonZeroUsize::new(m).expect("at least one node"), a, a)
        .as_node_weight_pairs()
        .to_vec()
}

/// Product rule on `S^{n−1}` in hyperspherical angles: `m` nodes per polar
/// angle (Gauss–Jacobi in its cosine) and `2m` equispaced azimuths.
pub fn sphere_rule(n: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    let mut pts: Vec<(Vec<f64>, f64)> = (0..2 * m)
        .map(|k| {
            let a = PI * k as f64 / m as f64;
            (vec![a.cos(), a.sin()], PI / m as f64)
        })
        .collect();
    for dim in 3..=n {
        // S^{dim−1} from S^{dim−2}: x = (cos θ, sin θ · y), measure sin^{dim−2}θ dθ
        let rule = jacobi_symmetric(m, (dim as f64 - 3.0) / 2.0);
        let mut next = Vec::with_capacity(pts.len() * m);
        for &(t, wt) in &rule {
            let s = (1.0 - t * t).sqrt();
            for (y, wy) in &pts {
                let mut x = vec![t];
                x.extend(y.iter().map(|v| v * s));
                next.push((x, wt * wy));
            }
        }
        pts = next;
    }
    pts
}

impl QuadratureGrid {
    pub fn new(n: usize, radius: f64, levels: usize, nodes: usize, angular: usize) -> QuadratureGrid {
        let sphere = sphere_rule(n, angular);
        QuadratureGrid::with_sphere(n, radius, levels, nodes, sphere)
    }

    /// Single-direction rule, exact for radial integrands.
    pub fn radial(n: usize, radius: f64, levels: usize, nodes: usize) -> QuadratureGrid {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        QuadratureGrid::with_sphere(n, radius, levels, nodes, vec![(e, unit_sphere_area(n))])
    }

    /// Grid adapted to `u`: radial rule when `u` is radial.
    pub fn for_function(u: &TestFunction, n: usize, radius: f64, levels: usize, nodes: usize) -> QuadratureGrid {
        if u.is_radial() {
            QuadratureGrid::radial(n, radius, levels, nodes)
        } else {
            QuadratureGrid::new(n, radius, levels, nodes, 8)
        }
    }

    /// Shells of `[inner, outer)` graded toward `outer`:
    /// `[outer − w 2^{−j}, outer − w 2^{−j−1}]`, `w = outer − inner`.
    pub fn annulus(n: usize, inner: f64, outer: f64, levels: usize, nodes: usize, radial_only: bool) -> QuadratureGrid {
        let sphere = if radial_only {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            vec![(e, unit_sphere_area(n))]
        } else {
            sphere_rule(n, 8)
        };
        let rule = legendre(nodes);
        let w = outer - inner;
        let mut radial = Vec::with_capacity(levels * nodes);
        for j in 0..levels {
            let (lo, hi) = (outer - w * 0.5f64.powi(j as i32), outer - w * 0.5f64.powi(j as i32 + 1));
            let (mid, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
            for &(t, wt) in &rule {
                radial.push((mid + half * t, wt * half, j));
            }
        }
        QuadratureGrid {
            n,
            radius: outer,
            levels,
            radial,
            sphere,
        }
    }

    fn with_sphere(n: usize, radius: f64, levels: usize, nodes: usize, sphere: Vec<(Vec<f64>, f64)>) -> QuadratureGrid {
        let rule = legendre(nodes);
        let mut radial = Vec::with_capacity(levels * nodes);
        for j in 0..levels {
            let (hi, lo) = (radius * 0.5f64.powi(j as i32), radius * 0.5f64.powi(j as i32 + 1));
            let (mid, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
            for &(t, w) in &rule {
                radial.push((mid + half * t, w * half, j));
            }
        }
        QuadratureGrid {
            n,
            radius,
            levels,
            radial,
            sphere,
        }
    }

    /// Adds shells toward the origin until the innermost one carries less
    /// than `1e−3` of `‖r̂^{−λ_max} u‖₂²`.
    pub fn adapted(u: &TestFunction, params: &CarlemanParams, lambda_max: f64, nodes: usize) -> Result<QuadratureGrid> {
        let mut levels = 8;
        loop {
            let grid = QuadratureGrid::for_function(u, params.n, params.radius, levels, nodes);
            let vals = grid.sample_function(u, |p| p.u);
            if inner_shell_share(&grid, &vals, lambda_max, 2.0, params.delta)? < 1e-3 {
                return Ok(grid);
            }
            if levels >= MAX_LEVELS {
                return Err(Error::QuadratureUnresolved {
                    share: inner_shell_share(&grid, &vals, lambda_max, 2.0, params.delta)?,
                });
            }
            levels += 4;
        }
    }

    /// Same shells and spherical rule with `factor` times the radial nodes.
    pub fn refined(&self, factor: usize) -> QuadratureGrid {
        let nodes = self.radial.len() / self.levels.max(1);
        QuadratureGrid::with_sphere(self.n, self.radius, self.levels, nodes * factor, self.sphere.clone())
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.sphere.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sphere_weight(&self) -> f64 {
        self.sphere.iter().map(|(_, w)| w).sum()
    }

    /// Values of `f(r, ω)` on every node, radial index major.
    pub fn sample(&self, f: impl Fn(f64, &[f64]) -> f64 + Sync) -> GridValues {
        let values = self
            .radial
            .par_iter()
            .flat_map_iter(|&(r, _, _)| self.sphere.iter().map(move |(w, _)| (r, w)).collect::<Vec<_>>())
            .map(|(r, w)| f(r, w))
            .collect();
        GridValues { values }
    }

    /// Samples a test function: `pick` selects the quantity.
    pub fn sample_function(&self, u: &TestFunction, pick: impl Fn(&PointValues) -> f64 + Sync) -> GridValues {
        self.sample(|r, w| pick(&u.at(r, w)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridValues {
    pub values: Vec<f64>,
}

impl GridValues {
    pub fn scale(&self, c: f64) -> GridValues {
        GridValues {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// Largest share of an `L^s` norm's `s`-th power the innermost shell may hold.
pub const INNER_SHELL_LIMIT: f64 = 0.1;

/// Log-domain terms `ln(w_i |r̂^{−λ} extra f|^s r^{n−1})` grouped by shell.
fn log_terms(grid: &QuadratureGrid, f: &GridValues, lambda: f64, s: f64, delta: f64, extra: bool) -> Result<Vec<Vec<f64>>> {
    let m = grid.sphere.len();
    let mut shells = vec![Vec::new(); grid.levels];
    for (ri, &(r, wr, shell)) in grid.radial.iter().enumerate() {
        let lhat = hat_r(r, delta)?.ln();
        let mut base = wr.ln() + (grid.n as f64 - 1.0) * r.ln() - s * lambda * lhat;
        if extra {
            base += s * (delta / 2.0 - 1.0) * r.ln();
        }
        for (si, (_, ws)) in grid.sphere.iter().enumerate() {
            let v = f.values[ri * m + si].abs();
            if v > 0.0 {
                shells[shell].push(base + ws.ln() + s * v.ln());
            }
        }
    }
    Ok(shells)
}

fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `‖r̂^{−λ} (r^{−1+δ/2})^{[extra]} f‖_{L^s(B_R)}` in natural log, with
/// the innermost-shell guard.
pub fn log_weighted_norm(grid: &QuadratureGrid, f: &GridValues, lambda: f64, s: f64, delta: f64, extra: bool) -> Result<f64> {
    let shells = log_terms(grid, f, lambda, s, delta, extra)?;
    let per_shell: Vec<f64> = shells.into_iter().map(log_sum_exp).collect();
    let total = log_sum_exp(per_shell.iter().cloned());
    if total == f64::NEG_INFINITY {
        return Ok(total);
    }
    let inner = per_shell.last().copied().unwrap_or(f64::NEG_INFINITY);
    let share = (inner - total).exp();
    if share > INNER_SHELL_LIMIT {
        return Err(Error::QuadratureUnresolved { share });
    }
    Ok(total / s)
}

/// `‖r̂^{−λ} (r^{−1+δ/2})^{[extra]} f‖_{L^s(B_R)}`.
pub fn weighted_norm(grid: &QuadratureGrid, f: &GridValues, lambda: f64, s: f64, delta: f64, extra: bool) -> Result<f64> {
    Ok(log_weighted_norm(grid, f, lambda, s, delta, extra)?.exp())
}

/// Share of the `s`-th power carried by the innermost shell.
pub fn inner_shell_share(grid: &QuadratureGrid, f: &GridValues, lambda: f64, s: f64, delta: f64) -> Result<f64> {
    let per_shell: Vec<f64> = log_terms(grid, f, lambda, s, delta, false)?
        .into_iter()
        .map(log_sum_exp)
        .collect();
    let total = log_sum_exp(per_shell.iter().cloned());
    if total == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok((per_shell.last().copied().unwrap_or(f64::NEG_INFINITY) - total).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Row {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `λ‖r̂^{−λ}u‖₂ / ‖r̂^{−λ}Yu‖₂`; zero when both norms vanish.
    pub ratio: f64,
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Table {
    pub function: String,
    pub rows: Vec<Lemma2Row>,
    pub sup_ratio: f64,
    /// `sup ratio ≤ declared` when a constant is declared.
    pub holds: Option<bool>,
}

/// Both sides of `‖r̂^{−λ}u‖₂ ≤ (C/λ)‖r̂^{−λ}Yu‖₂` across `lambdas`.
pub fn lemma2_verify(
    u: &TestFunction,
    lambdas: &[f64],
    params: &CarlemanParams,
    grid: &QuadratureGrid,
    declared: Option<f64>,
) -> Result<Lemma2Table> {
    if let Some(&bad) = lambdas.iter().find(|&&l| l <= params.n as f64) {
        return Err(Error::InadmissibleLambda(bad));
    }
    let vals = grid.sample_function(u, |p| p.u);
    let yvals = grid.sample_function(u, |p| p.radial);
    let rows = lambdas
        .par_iter()
        .map(|&lambda| {
            let ll = log_weighted_norm(grid, &vals, lambda, 2.0, params.delta, false)?;
            let lr = log_weighted_norm(grid, &yvals, lambda, 2.0, params.delta, false)?;
            let vacuous = ll == f64::NEG_INFINITY && lr == f64::NEG_INFINITY;
            let ratio = if vacuous { 0.0 } else { lambda * (ll - lr).exp() };
            Ok(Lemma2Row {
                lambda,
                lhs: ll.exp(),
                rhs: lr.exp(),
                ratio,
                vacuous,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(Lemma2Table {
        function: u.name.clone(),
        holds: declared.map(|c| sup_ratio <= c),
        rows,
        sup_ratio,
    })
}

/// The two sides of the integration-by-parts step for a radial `u`:
/// `∫ r̂^{−2λ} u² r^{n−1} dr` directly, and
/// `(2/(2λ−n)) ∫ (1−r^δ)^{−2λ} u u_r r^{n−2λ} dr + (2λδ/(2λ−n)) ∫ (r^δ/(1−r^δ)) r̂^{−2λ} u² r^{n−1} dr`,
/// both times `|S^{n−1}|`. Returned as `(direct, by_parts)`, each divided
/// by the same scale `e^M` to stay finite.
pub fn by_parts_identity(u: &TestFunction, lambda: f64, params: &CarlemanParams, grid: &QuadratureGrid) -> Result<(f64, f64)> {
    if !u.is_radial() {
        return Err(Error::InvalidParameter("by-parts identity needs a radial function".into()));
    }
    let (n, d) = (params.n as f64, params.delta);
    let area = unit_sphere_area(params.n);
    let mut direct = Vec::new();
    let mut parts = Vec::new();
    for &(r, w, _) in &grid.radial {
        let [f, f1, _] = u.profile(r);
        if f == 0.0 {
            continue;
        }
        let rd = r.powf(d);
        let lw = -2.0 * lambda * hat_r(r, d)?.ln() + (n - 1.0) * r.ln() + w.ln();
        direct.push((lw + 2.0 * f.abs().ln(), 1.0));
        // (1−r^δ)^{−2λ} r^{n−2λ} = r̂^{−2λ} r^{n−1} · r
        let c1 = 2.0 / (2.0 * lambda - n);
        if f1 != 0.0 {
            parts.push((lw + r.ln() + f.abs().ln() + f1.abs().ln() + c1.ln(), (f * f1).signum()));
        }
        let c2 = 2.0 * lambda * d / (2.0 * lambda - n) * rd / (1.0 - rd);
        parts.push((lw + 2.0 * f.abs().ln() + c2.ln(), 1.0));
    }
    let m = direct.iter().chain(&parts).map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let sum = |ts: &[(f64, f64)]| ts.iter().map(|(l, s)| s * (l - m).exp()).sum::<f64>() * area;
    Ok((sum(&direct), sum(&parts)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoggeRow {
    pub lambda: f64,
    pub admissible: bool,
    pub lhs_value: f64,
    pub lhs_gradient: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub vacuous: bool,
}

/// `(‖r̂^{−λ}u‖_q + λ^{1/n}‖r̂^{−λ}r^{−1+δ/2}∇u‖_q) / ‖r̂^{−λ}Δu‖_p` with the
/// flat Laplacian, for each admissible `λ`.
pub fn sogge_probe(u: &TestFunction, lambdas: &[f64], params: &CarlemanParams, grid: &QuadratureGrid) -> Result<Vec<SoggeRow>> {
    if let Some(&bad) = lambdas.iter().find(|&&l| !lambda_admissible(l, params.n)) {
        return Err(Error::InadmissibleLambda(bad));
    }
    let (p, q) = params.exponents();
    let vals = grid.sample_function(u, |v| v.u);
    let grads = grid.sample_function(u, |v| v.grad.iter().map(|g| g * g).sum::<f64>().sqrt());
    let laps = grid.sample_function(u, |v| v.laplacian);
    lambdas
        .par_iter()
        .map(|&lambda| {
            let lv = log_weighted_norm(grid, &vals, lambda, q, params.delta, false)?;
            let lg = lambda.ln() / params.n as f64 + log_weighted_norm(grid, &grads, lambda, q, params.delta, true)?;
            let lr = log_weighted_norm(grid, &laps, lambda, p, params.delta, false)?;
            let vacuous = lr == f64::NEG_INFINITY && lv == f64::NEG_INFINITY;
            Ok(SoggeRow {
                lambda,
                admissible: true,
                lhs_value: lv.exp(),
                lhs_gradient: lg.exp(),
                rhs: lr.exp(),
                ratio: if vacuous { 0.0 } else { (log_sum_exp([lv, lg]) - lr).exp() },
                vacuous,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderCheck {
    pub norm_p: f64,
    pub norm_2: f64,
    pub norm_q: f64,
    /// `|B_1|^{2/n}`, so `‖f‖_p ≤ c_p R² ‖f‖_q`.
    pub c_p: f64,
    /// `|B_1|^{1/n}`, so `‖f‖_2 ≤ c_2 R ‖f‖_q`.
    pub c_2: f64,
    pub holds_p: bool,
    pub holds_2: bool,
}

/// The two Hölder steps for `r̂^{−λ} f` on `B_R`.
pub fn holder_step_check(grid: &QuadratureGrid, f: &GridValues, lambda: f64, params: &CarlemanParams) -> Result<HolderCheck> {
    let (p, q) = params.exponents();
    let n = params.n as f64;
    let norm = |s| weighted_norm(grid, f, lambda, s, params.delta, false);
    let (norm_p, norm_2, norm_q) = (norm(p)?, norm(2.0)?, norm(q)?);
    let vol = unit_ball_volume(params.n);
    let (c_p, c_2) = (vol.powf(2.0 / n), vol.powf(1.0 / n));
    let r = grid.radius;
    let slack = 1.0 + 1e-10;
    Ok(HolderCheck {
        norm_p,
        norm_2,
        norm_q,
        c_p,
        c_2,
        holds_p: norm_p <= slack * c_p * r * r * norm_q,
        holds_2: norm_2 <= slack * c_2 * r * norm_q,
    })
}

/// Infinite-order test functions supported in `B_support`.
pub fn infinite_order_corpus(support: f64) -> Vec<TestFunction> {
    let bump = RadialFactor::Bump {
        scale: support,
        plateau: 0.5,
    };
    let mk = |name: &str, s: f64, h: Harmonic| {
        TestFunction::new(name, vec![RadialFactor::ExpDecay { s }, bump], h, support, VanishingOrder::Infinite)
    };
    vec![
        mk("exp1", 1.0, Harmonic::One),
        mk("exp2", 2.0, Harmonic::One),
        mk("exp1_linear", 1.0, Harmonic::Linear),
        mk("exp1_mixed", 1.0, Harmonic::Mixed),
        mk("exp2_linear", 2.0, Harmonic::Linear),
        mk("exp2_saddle", 2.0, Harmonic::Saddle),
    ]
}

/// `r^m h(x) φ(x/support)` for `m ∈ {3, 5, 8}`.
pub fn finite_order_corpus(support: f64) -> Vec<TestFunction> {
    let bump = RadialFactor::Bump {
        scale: support,
        plateau: 0.5,
    };
    [(3, Harmonic::One), (5, Harmonic::One), (8, Harmonic::Linear)]
        .into_iter()
        .map(|(m, h)| {
            let order = m as u32 + h.degree() as u32;
            TestFunction::new(&format!("power{m}"), vec![RadialFactor::Power { m }, bump], h, support, VanishingOrder::Finite(order))
        })
        .collect()
}

/// Functions supported in an annulus of `B_R ∖ {0}`.
pub fn origin_excluded_corpus(radius: f64) -> Vec<TestFunction> {
    let shell = RadialFactor::Shell {
        center: radius / 2.0,
        half_width: radius / 4.0,
    };
    let mk = |name: &str, h: Harmonic| TestFunction::new(name, vec![shell], h, radius, VanishingOrder::Infinite);
    vec![
        mk("shell", Harmonic::One),
        mk("shell_linear", Harmonic::Linear),
        mk("shell_mixed", Harmonic::Mixed),
        TestFunction::new(
            "annulus_exp1",
            vec![
                RadialFactor::Annulus { k: 3, plateau: 0.5 },
                RadialFactor::ExpDecay { s: 1.0 },
                RadialFactor::Bump {
                    scale: radius,
                    plateau: 0.5,
                },
            ],
            Harmonic::One,
            radius,
            VanishingOrder::Infinite,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize, delta: f64, radius: f64) -> CarlemanParams {
        CarlemanParams::new(n, delta, radius, 0.9).unwrap()
    }

    fn exp_bump(radius: f64) -> TestFunction {
        infinite_order_corpus(radius).remove(0)
    }

    #[test]
    fn hat_r_values() {
        assert_eq!(hat_r(0.0, 0.3).unwrap(), 0.0);
        let want = 0.5 * (1.0 - 0.840_896_415_253_714_6);
        assert!((hat_r(0.5, 0.25).unwrap() - want).abs() < 1e-15);
        assert!((hat_r(0.5, 0.25).unwrap() - 0.07955).abs() < 1e-5);
        assert!(hat_r(1.0, 0.1).is_err());
        assert!(hat_r(-0.1, 0.1).is_err());
        assert!((hat_r(1e-8, 0.1).unwrap() / 1e-8 - (1.0 - 1e-8f64.powf(0.1))).abs() < 1e-15);
    }

    #[test]
    fn hat_r_monotone_below_turning_point() {
        // d r̂/dr = 1 − (1+δ) r^δ vanishes at r* = (1+δ)^{−1/δ} ≈ 0.3855 for δ = 0.1
        let turn = 1.1f64.powf(-10.0);
        for i in 0..1000 {
            let r1 = turn * i as f64 / 1000.0;
            let r2 = r1 + turn / 1000.0;
            assert!(hat_r(r1, 0.1).unwrap() < hat_r(r2, 0.1).unwrap());
        }
        assert!(hat_r(0.45, 0.1).unwrap() > hat_r(0.5, 0.1).unwrap());
    }

    #[test]
    fn admissibility_boundaries() {
        assert!(lambda_admissible(2.0, 3));
        assert!(!lambda_admissible(1.6, 3));
        assert!(lambda_admissible(10.5, 4));
        assert!(!lambda_admissible(10.0, 4));
    }

    #[test]
    fn exponents() {
        let (p, q) = lebesgue_exponents(3);
        assert!((p - 1.2).abs() < 1e-15 && (q - 6.0).abs() < 1e-15);
        let (p, q) = lebesgue_exponents(4);
        assert!((p - 4.0 / 3.0).abs() < 1e-15 && (q - 4.0).abs() < 1e-15);
        for n in 3..12 {
            let (p, q) = lebesgue_exponents(n);
            assert!(p < 2.0 && 2.0 < q);
        }
    }

    #[test]
    fn params_validation() {
        assert!(CarlemanParams::new(2, 0.1, 0.1, 0.5).is_err());
        assert!(CarlemanParams::new(3, 0.7, 0.1, 0.5).is_err());
        assert!(CarlemanParams::new(3, 0.1, 0.6, 0.5).is_err());
        let p = params(3, 0.5, 0.2);
        assert!(p.absorption_factor() <= 1.0);
        // needs R ≤ 2^{−1/δ}
        assert!(params(3, 0.05, 0.25).absorption_factor() > 1.0);
    }

    #[test]
    fn radial_monomials_exact() {
        for n in [3usize, 4, 5] {
            let grid = QuadratureGrid::radial(n, 0.7, 40, 16);
            for m in 0..=20 {
                let e = (m + n) as f64;
                let got: f64 = grid.radial.iter().map(|&(r, w, _)| w * r.powi((m + n - 1) as i32)).sum();
                let want = 0.7f64.powf(e) / e;
                assert!((got - want).abs() / want < 1e-10, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn sphere_rule_moments() {
        for n in 2..=6 {
            let rule = sphere_rule(n, 8);
            let area = unit_sphere_area(n);
            let total: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((total - area).abs() < 1e-12 * area, "n={n}");
            let x2: f64 = rule.iter().map(|(x, w)| w * x[0] * x[0]).sum();
            assert!((x2 - area / n as f64).abs() < 1e-12);
            let x2y2: f64 = rule.iter().map(|(x, w)| w * x[0] * x[0] * x[1] * x[1]).sum();
            assert!((x2y2 - area / (n * (n + 2)) as f64).abs() < 1e-12);
            for (x, _) in &rule {
                assert!((x.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn closed_form_balls() {
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn zero_and_volume_norms() {
        let grid = QuadratureGrid::radial(3, 0.5, 40, 16);
        let zero = grid.sample_function(&TestFunction::zero(0.5), |p| p.u);
        assert_eq!(weighted_norm(&grid, &zero, 20.0, 2.0, 0.05, false).unwrap(), 0.0);
        let one = TestFunction::new("one", vec![RadialFactor::Constant { c: 1.0 }], Harmonic::One, 0.5, VanishingOrder::Finite(0));
        let vals = grid.sample_function(&one, |p| p.u);
        let got = weighted_norm(&grid, &vals, 0.0, 2.0, 0.05, false).unwrap();
        let want = (unit_ball_volume(3) * 0.125).sqrt();
        assert!((got - want).abs() < 1e-8);
    }

    #[test]
    fn non_radial_norm_matches_separated_integral() {
        // ∫ (x₀ g(r))² = (|S²|/3) ∫ r⁴ g² dr for n = 3
        let u = infinite_order_corpus(0.5).remove(2);
        let grid = QuadratureGrid::new(3, 0.5, 40, 16, 6);
        let vals = grid.sample_function(&u, |p| p.u);
        let got = weighted_norm(&grid, &vals, 0.0, 2.0, 0.05, false).unwrap();
        let radial = QuadratureGrid::radial(3, 0.5, 40, 16);
        let oracle: f64 = radial
            .radial
            .iter()
            .map(|&(r, w, _)| w * r.powi(4) * u.profile(r)[0].powi(2))
            .sum::<f64>()
            * unit_sphere_area(3)
            / 3.0;
        assert!((got - oracle.sqrt()).abs() < 1e-12 * got);
    }

    #[test]
    fn self_convergence_at_lambda_20() {
        let u = exp_bump(0.5);
        let coarse = QuadratureGrid::radial(3, 0.5, 40, 16);
        let fine = coarse.refined(2);
        let a = weighted_norm(&coarse, &coarse.sample_function(&u, |p| p.u), 20.0, 2.0, 0.05, false).unwrap();
        let b = weighted_norm(&fine, &fine.sample_function(&u, |p| p.u), 20.0, 2.0, 0.05, false).unwrap();
        assert!(((a - b) / b).abs() < 1e-8, "{a} {b}");
    }

    #[test]
    fn unresolved_origin_is_rejected() {
        // r³ against r̂^{−40} diverges at the origin
        let u = finite_order_corpus(0.5).remove(0);
        let grid = QuadratureGrid::radial(3, 0.5, 20, 16);
        let vals = grid.sample_function(&u, |p| p.u);
        assert!(matches!(
            weighted_norm(&grid, &vals, 40.0, 2.0, 0.05, false),
            Err(Error::QuadratureUnresolved { .. })
        ));
    }

    #[test]
    fn lemma2_on_exp_bump() {
        let p = params(3, 0.05, 0.25);
        let u = exp_bump(0.25);
        let lambdas: Vec<f64> = (4..=64).map(f64::from).collect();
        let grid = QuadratureGrid::adapted(&u, &p, 64.0, 16).unwrap();
        let table = lemma2_verify(&u, &lambdas, &p, &grid, None).unwrap();
        assert!(table.rows.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0));
        let declared = 1.1 * table.sup_ratio;
        let again = lemma2_verify(&u, &lambdas, &p, &grid, Some(declared)).unwrap();
        assert_eq!(again.holds, Some(true));
        let fine = lemma2_verify(&u, &lambdas, &p, &grid.refined(2), None).unwrap();
        for (a, b) in table.rows.iter().zip(&fine.rows) {
            assert!(((a.ratio - b.ratio) / b.ratio).abs() < 5e-4);
        }
    }

    #[test]
    fn lemma2_rejects_small_lambda_and_flags_zero() {
        let p = params(3, 0.05, 0.25);
        let grid = QuadratureGrid::radial(3, 0.25, 30, 16);
        assert!(matches!(
            lemma2_verify(&exp_bump(0.25), &[3.0], &p, &grid, None),
            Err(Error::InadmissibleLambda(_))
        ));
        let t = lemma2_verify(&TestFunction::zero(0.25), &[10.0], &p, &grid, Some(1.0)).unwrap();
        assert!(t.rows[0].vacuous && t.rows[0].lhs == 0.0 && t.rows[0].rhs == 0.0);
    }

    #[test]
    fn by_parts_identity_radial() {
        let p = params(3, 0.05, 0.25);
        for u in infinite_order_corpus(0.25).into_iter().filter(|u| u.is_radial()) {
            for lambda in [5.0, 16.0, 40.0] {
                // the cutoff transition and exp(−1/r²) need 64 nodes per shell here
                let grid = QuadratureGrid::adapted(&u, &p, lambda, 64).unwrap();
                let (direct, parts) = by_parts_identity(&u, lambda, &p, &grid).unwrap();
                assert!(((direct - parts) / direct).abs() < 1e-6, "{} λ={lambda}: {direct} {parts}", u.name);
            }
        }
    }

    #[test]
    fn sogge_probe_bounded_and_homogeneous() {
        let p = params(3, 0.05, 0.25);
        let u = origin_excluded_corpus(0.25).remove(0);
        let grid = QuadratureGrid::radial(3, 0.25, 12, 32);
        let lambdas: Vec<f64> = (5..=50).map(f64::from).collect();
        let rows = sogge_probe(&u, &lambdas, &p, &grid).unwrap();
        let quarter = rows.len() / 4;
        let mean = |rs: &[SoggeRow]| rs.iter().map(|r| r.ratio).sum::<f64>() / rs.len() as f64;
        let (first, last) = (mean(&rows[..quarter]), mean(&rows[rows.len() - quarter..]));
        assert!(last <= 2.0 * first, "first {first} last {last}");
        let doubled = sogge_probe(&u.scaled(2.0), &lambdas, &p, &grid).unwrap();
        for (a, b) in rows.iter().zip(&doubled) {
            assert!(((a.ratio - b.ratio) / a.ratio).abs() < 1e-12);
        }
        let z = sogge_probe(&TestFunction::zero(0.25), &[5.0], &p, &grid).unwrap();
        assert!(z[0].vacuous);
        assert!(matches!(sogge_probe(&u, &[5.5], &p, &grid), Err(Error::InadmissibleLambda(_))));
    }

    #[test]
    fn holder_constant_function_is_tight() {
        let p = params(3, 0.05, 0.25);
        let grid = QuadratureGrid::radial(3, 0.25, 40, 16);
        let one = grid.sample(|_, _| 1.0);
        let h = holder_step_check(&grid, &one, 0.0, &p).unwrap();
        assert!((h.norm_p / (h.c_p * 0.0625 * h.norm_q) - 1.0).abs() < 1e-10);
        assert!((h.norm_2 / (h.c_2 * 0.25 * h.norm_q) - 1.0).abs() < 1e-10);
        assert!(h.holds_p && h.holds_2);
    }

    #[test]
    fn holder_scaling_on_small_support() {
        let p = params(3, 0.05, 0.25);
        let grid = QuadratureGrid::radial(3, 0.25, 40, 32);
        let ratio = |rho: f64| {
            let u = TestFunction::new(
                "small",
                vec![RadialFactor::Bump { scale: rho, plateau: 0.3 }],
                Harmonic::One,
                rho,
                VanishingOrder::Finite(0),
            );
            let h = holder_step_check(&grid, &grid.sample_function(&u, |v| v.u), 0.0, &p).unwrap();
            h.norm_p / h.norm_q
        };
        let r = ratio(0.01) / ratio(0.02);
        assert!((r - 0.25).abs() < 1e-8, "{r}");
    }

    #[test]
    fn chi_k_support_and_c2_bound() {
        let plateau = 0.5;
        for k in 0..4u32 {
            let s = 0.5f64.powi(k as i32);
            assert_eq!(cutoff_chi_k(k, plateau, &[0.0, 0.3 * plateau * s, 0.0]), 0.0);
            assert_eq!(cutoff_chi_k(k, plateau, &[plateau * s, 0.0, 0.0]), 0.0);
            assert_eq!(cutoff_chi_k(k, plateau, &[s, 0.0, 0.0]), 1.0);
            assert_eq!(cutoff_chi_k(k, plateau, &[0.0, 0.0, 1.7]), 1.0);
        }
        // central differences along rays, sup of |f|, |f'|, |f''|
        let c2 = |f: &dyn Fn(f64) -> f64, reach: f64| {
            let h = reach * 1e-4;
            (1..2000)
                .map(|i| {
                    let t = reach * i as f64 / 2000.0;
                    let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
                    let d2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
                    f(t).abs().max(d1.abs()).max(d2.abs())
                })
                .fold(0.0, f64::max)
        };
        let phi_norm = c2(&|t| bump_phi(&[t, 0.0, 0.0], plateau), 1.2);
        for k in 1..4u32 {
            let chi_norm = c2(&|t| cutoff_chi_k(k, plateau, &[t, 0.0, 0.0]), 1.2);
            assert!(chi_norm <= 4f64.powi(k as i32) * phi_norm * (1.0 + 1e-6), "k={k}");
            assert!(chi_norm >= 2f64.powi(k as i32) * 0.9, "k={k}");
        }
    }

    #[test]
    fn point_values_match_finite_differences() {
        let x = [0.11, -0.07, 0.05];
        for u in infinite_order_corpus(0.3).iter().chain(&origin_excluded_corpus(0.3)) {
            let (r, w) = polar(&x);
            let pv = u.at(r, &w);
            let h = 1e-5;
            let mut lap = 0.0;
            for i in 0..3 {
                let mut a = x;
                let mut b = x;
                a[i] += h;
                b[i] -= h;
                let (fa, fb) = (u.value(&a), u.value(&b));
                let d = (fa - fb) / (2.0 * h);
                assert!((d - pv.grad[i]).abs() < 1e-6 * (1.0 + d.abs()), "{} ∂{i}", u.name);
                lap += (fa - 2.0 * pv.u + fb) / (h * h);
            }
            assert!((lap - pv.laplacian).abs() < 1e-4 * (1.0 + lap.abs()), "{} Δ", u.name);
            let yu = pv.grad.iter().zip(&x).map(|(g, xi)| g * xi).sum::<f64>();
            assert!((yu - pv.radial).abs() < 1e-12 * (1.0 + yu.abs()), "{} Y", u.name);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn admissibility_matches_lattice_scan(lambda in 0.01f64..60.0, n in 3usize..8) {
            let shift = (n as f64 - 2.0) / 2.0;
            let d = (1..200).map(|k| (lambda - (k as f64 + shift)).abs()).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(lambda_admissible(lambda, n), d >= 0.5 - 1e-12);
        }

        #[test]
        fn hat_r_below_r(r in 0.0f64..0.99, delta in 0.01f64..0.6) {
            let h = hat_r(r, delta).unwrap();
            prop_assert!(h <= r && h >= 0.0);
        }

        #[test]
        fn norm_homogeneous_and_monotone(c in 0.1f64..10.0, lambda in 5.0f64..30.0, s in 1.1f64..6.0) {
            let u = exp_bump(0.25);
            let grid = QuadratureGrid::radial(3, 0.25, 30, 16);
            let v = grid.sample_function(&u, |p| p.u);
            let a = weighted_norm(&grid, &v, lambda, s, 0.05, false).unwrap();
            let b = weighted_norm(&grid, &v.scale(c), lambda, s, 0.05, false).unwrap();
            prop_assert!((b - c * a).abs() <= 1e-12 * b);
            let up = weighted_norm(&grid, &v, lambda + 1.0, s, 0.05, false).unwrap();
            prop_assert!(up >= a);
        }
    }
}
