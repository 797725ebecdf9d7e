//! Metric fields on a single coordinate chart.
//!
//! A field is a function from coordinate jets to the `n×n` metric components,
//! so the analytic backend differentiates it exactly by forward-mode jets.
//! The finite-difference backend evaluates the same function at plain points
//! and assembles jets from central-difference partials instead.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace, Scalar, MAX_DEGREE};
use crate::tensor::MetricAtPoint;

pub type MetricFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Euclidean,
    /// Conformal chart `g = (1 + (K/4)|x|²)^{-2} δ`, `K > 0`.
    Sphere { k: f64 },
    /// Same conformal chart with `K < 0`, defined on `|x| < 2/√(-K)`.
    Hyperbolic { k: f64 },
    /// Geodesic normal coordinates of the space form of curvature `K`.
    NormalSpaceForm { k: f64 },
    Custom,
}

impl Preset {
    /// Sectional curvature when the preset has constant curvature.
    pub fn constant_curvature(&self) -> Option<f64> {
        match *self {
            Preset::Euclidean => Some(0.0),
            Preset::Sphere { k } | Preset::Hyperbolic { k } | Preset::NormalSpaceForm { k } => Some(k),
            Preset::Custom => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Analytic,
    /// Central differences with step `h_low` for orders 1–2 and `h_high` for 3–4.
    FiniteDifference { h_low: f64, h_high: f64 },
}

impl Backend {
    pub fn finite_difference() -> Backend {
        Backend::FiniteDifference { h_low: 1e-4, h_high: 1e-3 }
    }

    /// Same stencils with both steps scaled from `h` (orders 3–4 use `10h`).
    pub fn finite_difference_with(h: f64) -> Backend {
        Backend::FiniteDifference { h_low: h, h_high: 10.0 * h }
    }
}

#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    preset: Preset,
    backend: Backend,
    domain_radius: Option<f64>,
    f: Arc<MetricFn>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("dim", &self.dim)
            .field("preset", &self.preset)
            .field("backend", &self.backend)
            .field("domain_radius", &self.domain_radius)
            .finish()
    }
}

fn squared_norm(x: &[Jet]) -> Jet {
    let mut s = x[0].mul_jet(&x[0]);
    for xi in &x[1..] {
        s = s.add_jet(&xi.mul_jet(xi));
    }
    s
}

fn conformal(x: &[Jet], k: f64) -> Vec<Jet> {
    let n = x.len();
    let psi = squared_norm(x).scale(0.25 * k).add_scalar(1.0).recip();
    let psi2 = psi.mul_jet(&psi);
    let zero = psi2.scale(0.0);
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            g.push(if i == j { psi2.clone() } else { zero.clone() });
        }
    }
    g
}

/// Power-series coefficients in `s = |x|²` of `sn_K(r)²/r²` and `(1 − sn_K(r)²/r²)/s`.
fn normal_chart_series(k: f64) -> (Vec<f64>, Vec<f64>) {
    const TERMS: usize = 40;
    let mut a = Vec::with_capacity(TERMS);
    let mut b = Vec::with_capacity(TERMS);
    // a_j = (-1)^j 2^{2j+1} K^j / (2j+2)!,  b_j = -a_{j+1}
    let mut fact = 2.0; // (2j+2)!
    let mut pow = 2.0; // 2^{2j+1} K^j
    for j in 0..=TERMS {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let aj = sign * pow / fact;
        if j < TERMS {
            a.push(aj);
        }
        if j >= 1 {
            b.push(-aj);
        }
        fact *= ((2 * j + 3) * (2 * j + 4)) as f64;
        pow *= 4.0 * k;
    }
    (a, b)
}

fn normal_space_form(x: &[Jet], a: &[f64], b: &[f64]) -> Vec<Jet> {
    let n = x.len();
    let s = squared_norm(x);
    let fa = s.series(a);
    let fb = s.series(b);
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut gij = fb.mul_jet(&x[i]).mul_jet(&x[j]);
            if i == j {
                gij = gij.add_jet(&fa);
            }
            g.push(gij);
        }
    }
    g
}

impl MetricField {
    pub fn euclidean(n: usize) -> MetricField {
        MetricField {
            dim: n,
            preset: Preset::Euclidean,
            backend: Backend::Analytic,
            domain_radius: None,
            f: Arc::new(move |x: &[Jet]| {
                let sp = x[0].space();
                (0..n * n)
                    .map(|k| Jet::constant(sp, if k / n == k % n { 1.0 } else { 0.0 }))
                    .collect()
            }),
        }
    }

    /// Constant curvature `k` in the conformal chart `(1 + (k/4)|x|²)^{-2} δ`;
    /// `k = 0` gives the Euclidean metric.
    pub fn space_form(n: usize, k: f64) -> Result<MetricField> {
        if !k.is_finite() {
            return Err(Error::InvalidParameter(format!("curvature {k} is not finite")));
        }
        if k == 0.0 {
            return Ok(MetricField::euclidean(n));
        }
        let (preset, domain_radius) = if k > 0.0 {
            (Preset::Sphere { k }, None)
        } else {
            (Preset::Hyperbolic { k }, Some(2.0 / (-k).sqrt()))
        };
        Ok(MetricField {
            dim: n,
            preset,
            backend: Backend::Analytic,
            domain_radius,
            f: Arc::new(move |x: &[Jet]| conformal(x, k)),
        })
    }

    pub fn sphere(n: usize, k: f64) -> Result<MetricField> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!("sphere curvature must be positive, got {k}")));
        }
        MetricField::space_form(n, k)
    }

    pub fn hyperbolic(n: usize, k: f64) -> Result<MetricField> {
        if !(k < 0.0) {
            return Err(Error::InvalidParameter(format!("hyperbolic curvature must be negative, got {k}")));
        }
        MetricField::space_form(n, k)
    }

    /// The space form of curvature `k` in geodesic normal coordinates around
    /// the origin: `g = A(s) δ + B(s) x xᵀ` with `s = |x|²`, `A = sn_k(r)²/r²`.
    pub fn normal_space_form(n: usize, k: f64) -> Result<MetricField> {
        if !k.is_finite() {
            return Err(Error::InvalidParameter(format!("curvature {k} is not finite")));
        }
        let (a, b) = normal_chart_series(k);
        let domain_radius = if k > 0.0 {
            Some(std::f64::consts::PI / k.sqrt())
        } else {
            // the series is entire but loses digits to cancellation far out
            Some(3.0 / k.abs().max(1e-12).sqrt())
        };
        Ok(MetricField {
            dim: n,
            preset: Preset::NormalSpaceForm { k },
            backend: Backend::Analytic,
            domain_radius,
            f: Arc::new(move |x: &[Jet]| normal_space_form(x, &a, &b)),
        })
    }

    /// A user-supplied metric. `f` maps coordinate jets to the row-major metric
    /// components and must only use jet arithmetic, so that every backend works.
    pub fn custom(n: usize, domain_radius: Option<f64>, f: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> MetricField {
        MetricField {
            dim: n,
            preset: Preset::Custom,
            backend: Backend::Analytic,
            domain_radius,
            f: Arc::new(f),
        }
    }

    /// Builds a preset from its configuration name.
    pub fn from_name(name: &str, n: usize, k: f64) -> Result<MetricField> {
        match name {
            "euclidean" => Ok(MetricField::euclidean(n)),
            "sphere" => MetricField::sphere(n, k),
            "hyperbolic" => MetricField::hyperbolic(n, k),
            "normal" | "normal_space_form" => MetricField::normal_space_form(n, k),
            other => Err(Error::InvalidParameter(format!("unknown metric preset '{other}'"))),
        }
    }

    /// Pullback by the rotation `x ↦ Qx`, `Q` row-major orthogonal:
    /// `g'(x) = Qᵀ g(Qx) Q`. Every preset is isotropic about the origin, so
    /// the pulled-back field keeps its preset and chart radius.
    pub fn rotated(&self, q: &[f64]) -> Result<MetricField> {
        let n = self.dim;
        check_orthogonal(n, q)?;
        let inner = self.f.clone();
        let q = q.to_vec();
        Ok(MetricField {
            f: Arc::new(move |x: &[Jet]| {
                let y = apply_linear(n, &q, x);
                let g = inner(&y);
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = x[0].constant_like(0.0);
                        for a in 0..n {
                            for b in 0..n {
                                let c = q[a * n + i] * q[b * n + j];
                                if c != 0.0 {
                                    acc = acc.add_jet(&g[a * n + b].scale(c));
                                }
                            }
                        }
                        out.push(acc);
                    }
                }
                out
            }),
            ..self.clone()
        })
    }

    pub fn with_backend(mut self, backend: Backend) -> MetricField {
        self.backend = backend;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn preset(&self) -> Preset {
        self.preset
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn domain_radius(&self) -> Option<f64> {
        self.domain_radius
    }

    pub fn check_domain(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutsideDomain {
                point: p.to_vec(),
                reason: "non-finite coordinate".into(),
            });
        }
        if let Some(rad) = self.domain_radius {
            let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r >= rad {
                return Err(Error::OutsideDomain {
                    point: p.to_vec(),
                    reason: format!("|x| = {r:.6} ≥ chart radius {rad:.6}"),
                });
            }
        }
        Ok(())
    }

    fn eval_plain(&self, p: &[f64]) -> Vec<f64> {
        let x = Jet::seed(p, 0);
        (self.f)(&x).iter().map(|c| c.value()).collect()
    }

    pub fn metric_at(&self, p: &[f64]) -> Result<MetricAtPoint> {
        self.check_domain(p)?;
        MetricAtPoint::from_components(self.dim, &self.eval_plain(p))
    }

    /// Row-major metric components as jets of degree `degree` in the
    /// displacement from `p`.
    pub fn metric_jet(&self, p: &[f64], degree: usize) -> Result<Vec<Jet>> {
        if degree > MAX_DEGREE {
            return Err(Error::InsufficientOrder {
                requested: degree,
                supported: MAX_DEGREE,
            });
        }
        self.check_domain(p)?;
        match self.backend {
            Backend::Analytic => {
                let g = (self.f)(&Jet::seed(p, degree));
                Ok(g.into_iter().map(|c| pad(c, degree)).collect())
            }
            Backend::FiniteDifference { h_low, h_high } => self.fd_jet(p, degree, h_low, h_high),
        }
    }

    fn fd_jet(&self, p: &[f64], degree: usize, h_low: f64, h_high: f64) -> Result<Vec<Jet>> {
        finite_difference_jets(p, degree, h_low, h_high, self.dim * self.dim, |x| {
            self.check_domain(x)?;
            Ok(self.eval_plain(x))
        })
    }
}

/// `y_i = Σ_j Q_ij x_j` on jets.
pub fn apply_linear(n: usize, q: &[f64], x: &[Jet]) -> Vec<Jet> {
    (0..n)
        .map(|i| {
            let mut acc = x[0].constant_like(0.0);
            for (j, xj) in x.iter().enumerate() {
                if q[i * n + j] != 0.0 {
                    acc = acc.add_jet(&xj.scale(q[i * n + j]));
                }
            }
            acc
        })
        .collect()
}

pub fn check_orthogonal(n: usize, q: &[f64]) -> Result<()> {
    if q.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: q.len() });
    }
    for i in 0..n {
        for j in 0..n {
            let d: f64 = (0..n).map(|a| q[a * n + i] * q[a * n + j]).sum::<f64>() - if i == j { 1.0 } else { 0.0 };
            if d.abs() > 1e-12 {
                return Err(Error::InvalidParameter("rotation matrix is not orthogonal".into()));
            }
        }
    }
    Ok(())
}

/// Jets of degree `degree` at `p` for a vector-valued function with `outputs`
/// components, from tensor-product central stencils: step `h_low` for partials
/// of order one and two, `h_high` above.
pub fn finite_difference_jets(
    p: &[f64],
    degree: usize,
    h_low: f64,
    h_high: f64,
    outputs: usize,
    mut eval: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<Jet>> {
    if degree > MAX_DEGREE {
        return Err(Error::InsufficientOrder {
            requested: degree,
            supported: MAX_DEGREE,
        });
    }
    let space = JetSpace::get(p.len());
    let len = space.len(degree);
    let mut partials = vec![vec![0.0; len]; outputs];
    let mut caches = [Stencil::new(p, h_low, outputs), Stencil::new(p, h_high, outputs)];
    for k in 0..len {
        let alpha = space.exponents(k);
        let order: usize = alpha.iter().map(|&a| a as usize).sum();
        let cache = if order <= 2 { &mut caches[0] } else { &mut caches[1] };
        let d = cache.partial(alpha, &mut eval)?;
        for c in 0..outputs {
            partials[c][k] = d[c];
        }
    }
    Ok(partials
        .iter()
        .map(|pc| Jet::from_partials(space, degree, |alpha| pc[space.index_of(alpha).unwrap()]))
        .collect())
}

/// Jets from a constant-valued closure carry the maximal degree; cut them to
/// the requested one so downstream degrees are predictable.
pub(crate) fn pad(c: Jet, degree: usize) -> Jet {
    if c.degree() > degree {
        c.truncate(degree)
    } else {
        c
    }
}

/// One-dimensional central-difference weights on integer offsets, per order.
fn weights(order: u8) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("orders above four are rejected earlier"),
    }
}

struct Stencil<'a> {
    p: &'a [f64],
    h: f64,
    outputs: usize,
    cache: HashMap<Vec<i32>, Vec<f64>>,
}

type Eval<'e> = dyn FnMut(&[f64]) -> Result<Vec<f64>> + 'e;

impl<'a> Stencil<'a> {
    fn new(p: &'a [f64], h: f64, outputs: usize) -> Stencil<'a> {
        Stencil {
            p,
            h,
            outputs,
            cache: HashMap::new(),
        }
    }

    fn value(&mut self, off: &[i32], eval: &mut Eval<'_>) -> Result<&Vec<f64>> {
        if !self.cache.contains_key(off) {
            let x: Vec<f64> = self.p.iter().zip(off).map(|(p, &o)| p + o as f64 * self.h).collect();
            let v = eval(&x)?;
            if v.len() != self.outputs {
                return Err(Error::DimensionMismatch {
                    expected: self.outputs,
                    got: v.len(),
                });
            }
            self.cache.insert(off.to_vec(), v);
        }
        Ok(&self.cache[off])
    }

    /// Tensor-product stencil for `∂^α` of every output.
    fn partial(&mut self, alpha: &[u8], eval: &mut Eval<'_>) -> Result<Vec<f64>> {
        let order: i32 = alpha.iter().map(|&a| a as i32).sum();
        let scale = self.h.powi(-order);
        let mut acc = vec![0.0; self.outputs];
        let mut off = vec![0i32; self.p.len()];
        self.accumulate(alpha, 0, 1.0, &mut off, &mut acc, eval)?;
        for a in &mut acc {
            *a *= scale;
        }
        Ok(acc)
    }

    fn accumulate(
        &mut self,
        alpha: &[u8],
        var: usize,
        w: f64,
        off: &mut Vec<i32>,
        acc: &mut [f64],
        eval: &mut Eval<'_>,
    ) -> Result<()> {
        if var == alpha.len() {
            let v = self.value(off, eval)?;
            for (a, x) in acc.iter_mut().zip(v) {
                *a += w * x;
            }
            return Ok(());
        }
        for &(o, wi) in weights(alpha[var]) {
            off[var] = o;
            self.accumulate(alpha, var + 1, w * wi, off, acc, eval)?;
        }
        off[var] = 0;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conformal_metric_values() {
        let f = MetricField::sphere(3, 1.0).unwrap();
        let m = f.metric_at(&[0.3, 0.0, 0.0]).unwrap();
        let psi = 1.0 / (1.0 + 0.25 * 0.09);
        assert!((m.g()[(0, 0)] - psi * psi).abs() < 1e-15);
        assert_eq!(m.g()[(0, 1)], 0.0);
    }

    #[test]
    fn hyperbolic_chart_boundary() {
        let f = MetricField::hyperbolic(3, -1.0).unwrap();
        assert!(f.metric_at(&[1.9, 0.0, 0.0]).is_ok());
        assert!(matches!(f.metric_at(&[2.0, 0.0, 0.0]), Err(Error::OutsideDomain { .. })));
        assert!(MetricField::sphere(3, -1.0).is_err());
    }

    #[test]
    fn normal_chart_radial_and_transverse_parts() {
        for &k in &[1.0, -1.0, 0.7] {
            let f = MetricField::normal_space_form(3, k).unwrap();
            let r: f64 = 0.8;
            let m = f.metric_at(&[0.0, r, 0.0]).unwrap();
            let sn = if k > 0.0 {
                (k.sqrt() * r).sin() / k.sqrt()
            } else {
                ((-k).sqrt() * r).sinh() / (-k).sqrt()
            };
            assert!((m.g()[(1, 1)] - 1.0).abs() < 1e-14);
            assert!((m.g()[(0, 0)] - (sn / r).powi(2)).abs() < 1e-14);
            assert!((m.g()[(2, 2)] - (sn / r).powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn fd_first_partials_match_analytic() {
        let f = MetricField::sphere(3, 1.0).unwrap();
        let p = [0.3, -0.2, 0.1];
        let a = f.metric_jet(&p, 2).unwrap();
        let d = f.clone().with_backend(Backend::finite_difference()).metric_jet(&p, 2).unwrap();
        for (x, y) in a.iter().zip(&d) {
            for i in 0..3 {
                assert!((x.d1(i) - y.d1(i)).abs() < 1e-6);
            }
            assert!((x.partial(&[1, 1, 0]) - y.partial(&[1, 1, 0])).abs() < 1e-6);
        }
    }

    #[test]
    fn fd_high_order_partials() {
        let f = MetricField::hyperbolic(3, -1.0).unwrap();
        let p = [0.2, 0.1, -0.3];
        let a = f.metric_jet(&p, 4).unwrap();
        let d = f.clone().with_backend(Backend::finite_difference()).metric_jet(&p, 4).unwrap();
        for alpha in [[3u8, 0, 0], [1, 1, 1], [2, 0, 2], [0, 4, 0]] {
            let err = (a[0].partial(&alpha) - d[0].partial(&alpha)).abs();
            assert!(err < 1e-3 * a[0].partial(&alpha).abs().max(1.0), "{alpha:?}: {err}");
        }
    }
}
