//! Residuals of the Einstein-scalar equations
//!
//! ```text
//! R_ij = ∇_iφ ∇_jφ + (V(φ) + λ) g_ij,      Δφ = V'(φ)
//! ```
//!
//! and of the second-order system they imply for `u = (R, φ, ∇φ, ∇²φ)`.
//! Conventions: `R_ijkl = g(R(∂_i,∂_j)∂_k, ∂_l)`, `Ric_jk = g^{il} R_ijkl`,
//! covariant derivatives put the new slot first, `φ_j = ∇_jφ`,
//! `φ_jk = ∇_j∇_kφ`, `φ_jmk = ∇_j∇_m∇_kφ`. On a covariant tensor
//!
//! ```text
//! [∇_a, ∇_b] T_{c1…cr} = −Σ_s R_{a b c_s}{}^p T_{c1…p…cr}
//! ```
//!
//! Contracted Bianchi identity, with `D_klm = ∇^a R_aklm`:
//!
//! ```text
//! ∇^i R_jkim = −∇_j Ric_km + ∇_k Ric_jm,      D_klm = ∇_m Ric_kl − ∇_l Ric_km
//! ```
//!
//! and on shell
//!
//! ```text
//! ∇^i R_jkim = φ_j φ_km − φ_k φ_jm + V'(φ)(φ_k g_jm − φ_j g_km)
//! ```
//!
//! Laplacian of the curvature, from the divergence of the second Bianchi
//! identity:
//!
//! ```text
//! ΔR_jklm = ∇_j D_klm − ∇_k D_jlm + Q_jklm
//! Q_jklm  = g^{ia} ( R_ajk{}^p R_pilm + R_aji{}^p R_kplm + R_ajl{}^p R_kipm + R_ajm{}^p R_kilp
//!                  + R_aki{}^p R_pjlm + R_akj{}^p R_iplm + R_akl{}^p R_ijpm + R_akm{}^p R_ijlp )
//! ```
//!
//! with, on shell,
//!
//! ```text
//! ∇_j D_klm = φ_jmk φ_l + φ_mk φ_jl − φ_jlk φ_m − φ_lk φ_jm
//!           + V''(φ) φ_j (g_kl φ_m − g_km φ_l) + V'(φ)(g_kl φ_jm − g_km φ_jl)
//! ```
//!
//! The third derivatives keep the order `∇_j(∇²φ)_mk`; swapping `j` with `m`
//! would add `−R_jmkp φ^p`.
//!
//! Prolonged scalar equations, with `f = Δφ`:
//!
//! ```text
//! Δ∇_jφ      = ∇_j f + Ric_jp φ^p
//! Δ(∇²φ)_jk  = ∇_j∇_k f + (∇_j Ric_kp − D_jkp) φ^p + Ric_kp φ_j{}^p + Ric_jp φ^p{}_k − 2 R_ajkp φ^{ap}
//! ```
//!
//! and on shell `∇_j f = V''(φ)φ_j`, `∇_j∇_k f = V'''(φ)φ_jφ_k + V''(φ)φ_jk`.
//!
//! The `*_identity_residual` functions keep `Ric` and `f` as computed from the
//! data instead of substituting the field equations, so they vanish for any
//! metric and scalar; they are the manufactured-solution form used for
//! discretization-order tests.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::frame::FrameState;
use crate::geometry::LocalGeometry;
use crate::jet::{Jet, Scalar};
use crate::metric::{apply_linear, check_orthogonal, finite_difference_jets, pad, Backend, MetricField};
use crate::tensor::{riemann_symmetry_residuals, Tensor, Variance};

/// Field equations must hold to this tolerance before the on-shell
/// identities are meaningful.
pub const ON_SHELL_TOL: f64 = 1e-6;

pub type ScalarFn = dyn Fn(&[Jet]) -> Jet + Send + Sync;

/// The scalar field as a function of coordinate jets, differentiated exactly
/// or by central differences of its plain values.
#[derive(Clone)]
pub struct ScalarSolution {
    f: Arc<ScalarFn>,
    backend: Backend,
}

impl fmt::Debug for ScalarSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarSolution").field("backend", &self.backend).finish()
    }
}

impl ScalarSolution {
    pub fn new(f: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> ScalarSolution {
        ScalarSolution {
            f: Arc::new(f),
            backend: Backend::Analytic,
        }
    }

    pub fn constant(v: f64) -> ScalarSolution {
        ScalarSolution::new(move |x| x[0].constant_like(v))
    }

    /// `x ↦ φ(Qx)`, `Q` row-major orthogonal.
    pub fn rotated(&self, q: &[f64]) -> Result<ScalarSolution> {
        let n = (q.len() as f64).sqrt().round() as usize;
        check_orthogonal(n, q)?;
        let (inner, q) = (self.f.clone(), q.to_vec());
        Ok(ScalarSolution {
            f: Arc::new(move |x: &[Jet]| inner(&apply_linear(n, &q, x))),
            backend: self.backend,
        })
    }

    /// `x ↦ c·φ(x)`.
    pub fn scaled(&self, c: f64) -> ScalarSolution {
        let inner = self.f.clone();
        ScalarSolution {
            f: Arc::new(move |x: &[Jet]| inner(x).scale(c)),
            backend: self.backend,
        }
    }

    pub fn with_backend(mut self, backend: Backend) -> ScalarSolution {
        self.backend = backend;
        self
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        (self.f)(&Jet::seed(p, 0)).value()
    }

    pub fn jet(&self, p: &[f64], degree: usize) -> Result<Jet> {
        match self.backend {
            Backend::Analytic => Ok(pad((self.f)(&Jet::seed(p, degree)), degree)),
            Backend::FiniteDifference { h_low, h_high } => {
                let mut j = finite_difference_jets(p, degree, h_low, h_high, 1, |x| Ok(vec![self.value(x)]))?;
                Ok(j.remove(0))
            }
        }
    }

    /// `[∇φ, ∇²φ, …]` up to `order` (at most 4) at `p`.
    pub fn covariant_derivatives(&self, field: &MetricField, p: &[f64], order: usize) -> Result<Vec<Tensor<f64>>> {
        let geo = LocalGeometry::connection(field, p, order.max(1))?;
        let mut t = scalar_tensor(field.dim(), self.jet(p, order)?);
        let mut out = Vec::with_capacity(order);
        for _ in 0..order {
            t = geo.covariant_derivative(&t)?;
            out.push(t.values());
        }
        Ok(out)
    }
}

fn scalar_tensor(n: usize, j: Jet) -> Tensor<Jet> {
    Tensor::from_vec(n, vec![], vec![j]).expect("one component for rank zero")
}

pub type PotentialFn = dyn Fn(f64) -> [f64; 4] + Send + Sync;

/// `V` with its first three derivatives and a declared Lipschitz bound for `V'''`.
#[derive(Clone)]
pub struct Potential {
    name: String,
    f: Arc<PotentialFn>,
    lipschitz: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl Potential {
    /// `f(x)` returns `[V, V', V'', V''']` at `x`.
    pub fn custom(name: &str, lipschitz: f64, f: impl Fn(f64) -> [f64; 4] + Send + Sync + 'static) -> Potential {
        Potential {
            name: name.to_string(),
            f: Arc::new(f),
            lipschitz,
        }
    }

    pub fn zero() -> Potential {
        Potential::custom("zero", 0.0, |_| [0.0; 4])
    }

    /// `V = ½ m² φ²`.
    pub fn quadratic(m: f64) -> Potential {
        let m2 = m * m;
        Potential::custom("quadratic", 0.0, move |x| [0.5 * m2 * x * x, m2 * x, m2, 0.0])
    }

    /// `V = c + ½ μ φ² + ¼ g φ⁴`.
    pub fn quartic(c: f64, mu: f64, g: f64) -> Potential {
        Potential::custom("quartic", 6.0 * g.abs(), move |x| {
            [
                c + 0.5 * mu * x * x + 0.25 * g * x.powi(4),
                mu * x + g * x.powi(3),
                mu + 3.0 * g * x * x,
                6.0 * g * x,
            ]
        })
    }

    /// Named preset as used in configuration files.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Potential> {
        let arg = |i: usize| params.get(i).copied().unwrap_or(0.0);
        match name {
            "zero" => Ok(Potential::zero()),
            "quadratic" => Ok(Potential::quadratic(arg(0))),
            "quartic" => Ok(Potential::quartic(arg(0), arg(1), arg(2))),
            other => Err(Error::InvalidParameter(format!("unknown potential `{other}`"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn derivatives(&self, x: f64) -> [f64; 4] {
        (self.f)(x)
    }

    pub fn v(&self, x: f64) -> f64 {
        self.derivatives(x)[0]
    }

    /// Largest mismatch between each supplied derivative and the central
    /// difference of the one below it, over `samples`.
    pub fn consistency_error(&self, samples: &[f64], h: f64) -> f64 {
        let mut worst = 0.0f64;
        for &x in samples {
            let (lo, mid, hi) = (self.derivatives(x - h), self.derivatives(x), self.derivatives(x + h));
            for d in 0..3 {
                worst = worst.max(((hi[d] - lo[d]) / (2.0 * h) - mid[d + 1]).abs());
            }
        }
        worst
    }
}

/// The cosmological constant of the field equations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CosmologicalConstant(pub f64);

/// A residual together with the field-equation defect at the point, set when
/// the defect exceeds [`ON_SHELL_TOL`].
#[derive(Debug, Clone)]
pub struct Checked {
    pub residual: Tensor<f64>,
    pub off_shell: Option<f64>,
}

/// Plain component arrays (row-major, rank from the name) feeding the
/// right-hand sides. `dr[a,…] = ∇_a R_…`, `phi3[a,b,c] = ∇_a∇_b∇_cφ`.
#[derive(Debug, Clone)]
pub struct FieldData {
    pub n: usize,
    pub g: Vec<f64>,
    pub gi: Vec<f64>,
    pub r: Vec<f64>,
    pub dr: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub phi3: Vec<f64>,
}

/// Blocks of `Δu` or of its right-hand side: `R`, `φ`, `∇φ`, `∇²φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsBlocks {
    pub riemann: Vec<f64>,
    pub phi: f64,
    pub dphi: Vec<f64>,
    pub ddphi: Vec<f64>,
}

impl RhsBlocks {
    pub fn max_abs(&self) -> f64 {
        self.riemann
            .iter()
            .chain(&self.dphi)
            .chain(&self.ddphi)
            .chain(std::iter::once(&self.phi))
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &RhsBlocks) -> f64 {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        d(&self.riemann, &other.riemann)
            .max(d(&self.dphi, &other.dphi))
            .max(d(&self.ddphi, &other.ddphi))
            .max((self.phi - other.phi).abs())
    }
}

struct Ix(usize);

impl Ix {
    fn i2(&self, a: usize, b: usize) -> usize {
        a * self.0 + b
    }
    fn i3(&self, a: usize, b: usize, c: usize) -> usize {
        self.i2(a, b) * self.0 + c
    }
    fn i4(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        self.i3(a, b, c) * self.0 + d
    }
    fn i5(&self, a: usize, b: usize, c: usize, d: usize, e: usize) -> usize {
        self.i4(a, b, c, d) * self.0 + e
    }
}

/// `Σ_q gi[p,q] t[…,q]` on the last slot.
fn raise_last(n: usize, gi: &[f64], t: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for (base, chunk) in out.chunks_mut(n).enumerate() {
        for (p, o) in chunk.iter_mut().enumerate() {
            *o = (0..n).map(|q| gi[p * n + q] * t[base * n + q]).sum();
        }
    }
    out
}

/// The curvature-squared part `Q_jklm` of `ΔR_jklm`.
pub fn curvature_quadratic(n: usize, gi: &[f64], r: &[f64]) -> Vec<f64> {
    let x = Ix(n);
    let ru = raise_last(n, gi, r);
    let mut q = vec![0.0; n.pow(4)];
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                for m in 0..n {
                    let mut acc = 0.0;
                    for i in 0..n {
                        for a in 0..n {
                            let w = gi[x.i2(i, a)];
                            if w == 0.0 {
                                continue;
                            }
                            let mut s = 0.0;
                            for p in 0..n {
                                s += ru[x.i4(a, j, k, p)] * r[x.i4(p, i, l, m)]
                                    + ru[x.i4(a, j, i, p)] * r[x.i4(k, p, l, m)]
                                    + ru[x.i4(a, j, l, p)] * r[x.i4(k, i, p, m)]
                                    + ru[x.i4(a, j, m, p)] * r[x.i4(k, i, l, p)]
                                    + ru[x.i4(a, k, i, p)] * r[x.i4(p, j, l, m)]
                                    + ru[x.i4(a, k, j, p)] * r[x.i4(i, p, l, m)]
                                    + ru[x.i4(a, k, l, p)] * r[x.i4(i, j, p, m)]
                                    + ru[x.i4(a, k, m, p)] * r[x.i4(i, j, l, p)];
                            }
                            acc += w * s;
                        }
                    }
                    q[x.i4(j, k, l, m)] = acc;
                }
            }
        }
    }
    q
}

impl FieldData {
    fn ricci(&self) -> Vec<f64> {
        let (n, x) = (self.n, Ix(self.n));
        let mut ric = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    for l in 0..n {
                        acc += self.gi[x.i2(i, l)] * self.r[x.i4(i, j, k, l)];
                    }
                }
                ric[x.i2(j, k)] = acc;
            }
        }
        ric
    }

    /// `∇_a Ric_jk`.
    fn d_ricci(&self) -> Vec<f64> {
        let (n, x) = (self.n, Ix(self.n));
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = 0.0;
                    for i in 0..n {
                        for l in 0..n {
                            acc += self.gi[x.i2(i, l)] * self.dr[x.i5(a, i, j, k, l)];
                        }
                    }
                    out[x.i3(a, j, k)] = acc;
                }
            }
        }
        out
    }

    /// `D_klm = ∇^a R_aklm`.
    fn divergence(&self) -> Vec<f64> {
        let (n, x) = (self.n, Ix(self.n));
        let mut out = vec![0.0; n * n * n];
        for k in 0..n {
            for l in 0..n {
                for m in 0..n {
                    let mut acc = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            acc += self.gi[x.i2(a, b)] * self.dr[x.i5(a, b, k, l, m)];
                        }
                    }
                    out[x.i3(k, l, m)] = acc;
                }
            }
        }
        out
    }

    fn up1(&self) -> Vec<f64> {
        raise_last(self.n, &self.gi, &self.phi1)
    }

    /// On-shell `∇_j D_klm` with `V'`, `V''` supplied.
    fn grad_divergence_on_shell(&self, dv: f64, ddv: f64) -> Vec<f64> {
        let (n, x) = (self.n, Ix(self.n));
        let (g, p1, p2, p3) = (&self.g, &self.phi1, &self.phi2, &self.phi3);
        let mut out = vec![0.0; n.pow(4)];
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        out[x.i4(j, k, l, m)] = p3[x.i3(j, m, k)] * p1[l] + p2[x.i2(m, k)] * p2[x.i2(j, l)]
                            - p3[x.i3(j, l, k)] * p1[m]
                            - p2[x.i2(l, k)] * p2[x.i2(j, m)]
                            + ddv * p1[j] * (g[x.i2(k, l)] * p1[m] - g[x.i2(k, m)] * p1[l])
                            + dv * (g[x.i2(k, l)] * p2[x.i2(j, m)] - g[x.i2(k, m)] * p2[x.i2(j, l)]);
                    }
                }
            }
        }
        out
    }

    /// `∇_jD_klm − ∇_kD_jlm + Q_jklm` from a supplied `∇D`.
    fn riemann_rhs(&self, grad_d: &[f64]) -> Vec<f64> {
        let (n, x) = (self.n, Ix(self.n));
        let mut out = curvature_quadratic(n, &self.gi, &self.r);
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        out[x.i4(j, k, l, m)] += grad_d[x.i4(j, k, l, m)] - grad_d[x.i4(k, j, l, m)];
                    }
                }
            }
        }
        out
    }

    /// `grad_f + Ric_jp φ^p`.
    fn dphi_rhs(&self, grad_f: &[f64]) -> Vec<f64> {
        let (n, x) = (self.n, Ix(self.n));
        let (ric, up) = (self.ricci(), self.up1());
        (0..n)
            .map(|j| grad_f[j] + (0..n).map(|p| ric[x.i2(j, p)] * up[p]).sum::<f64>())
            .collect()
    }

    /// `hess_f + (∇_jRic_kp − D_jkp)φ^p + Ric_kp φ_j^p + Ric_jp φ^p_k − 2R_ajkp φ^{ap}`.
    fn ddphi_rhs(&self, hess_f: &[f64]) -> Vec<f64> {
        let (n, x) = (self.n, Ix(self.n));
        let (ric, dric, div, up) = (self.ricci(), self.d_ricci(), self.divergence(), self.up1());
        let mixed = raise_last(n, &self.gi, &self.phi2);
        let mut both = vec![0.0; n * n];
        for a in 0..n {
            for p in 0..n {
                both[x.i2(a, p)] = (0..n).map(|b| self.gi[x.i2(a, b)] * mixed[x.i2(b, p)]).sum();
            }
        }
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                let mut acc = hess_f[x.i2(j, k)];
                for p in 0..n {
                    acc += (dric[x.i3(j, k, p)] - div[x.i3(j, k, p)]) * up[p]
                        + ric[x.i2(k, p)] * mixed[x.i2(j, p)]
                        + ric[x.i2(j, p)] * mixed[x.i2(k, p)];
                    for a in 0..n {
                        acc -= 2.0 * self.r[x.i4(a, j, k, p)] * both[x.i2(a, p)];
                    }
                }
                out[x.i2(j, k)] = acc;
            }
        }
        out
    }

    fn trace2(&self) -> f64 {
        let n = self.n;
        (0..n * n).map(|k| self.gi[k] * self.phi2[k]).sum()
    }

    /// Right-hand sides of the `u` system with the field equations substituted;
    /// `b = [V', V'', V''']` at `φ`.
    pub fn rhs(&self, b: [f64; 3]) -> RhsBlocks {
        let n = self.n;
        let x = Ix(n);
        let [dv, ddv, dddv] = b;
        let grad_f: Vec<f64> = self.phi1.iter().map(|p| ddv * p).collect();
        let mut hess_f = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                hess_f[x.i2(j, k)] = dddv * self.phi1[j] * self.phi1[k] + ddv * self.phi2[x.i2(j, k)];
            }
        }
        RhsBlocks {
            riemann: self.riemann_rhs(&self.grad_divergence_on_shell(dv, ddv)),
            phi: self.trace2(),
            dphi: self.dphi_rhs(&grad_f),
            ddphi: self.ddphi_rhs(&hess_f),
        }
    }
}

/// Everything the residuals need at one point, as plain values.
struct PointData {
    fd: FieldData,
    /// `∇^k φ` for `k = 1..=level`, flattened; `dphi[0]` is `∇φ`.
    dphi: Vec<Vec<f64>>,
    phi: f64,
    /// `∇∇R` when `level ≥ 4`.
    ddr: Vec<f64>,
    /// `f = Δφ` with `∇f` and `∇∇f` when `level ≥ 4`.
    forcing: Vec<Vec<f64>>,
}

impl PointData {
    fn new(field: &MetricField, phi: &ScalarSolution, p: &[f64], level: usize) -> Result<PointData> {
        let n = field.dim();
        let geo = LocalGeometry::new(field, p, level)?;
        let g = geo.metric().lower_tensor().into_components();
        let gi = geo.metric().upper_tensor().into_components();
        let pj = phi.jet(p, level)?;
        let value = pj.value();
        let mut t = scalar_tensor(n, pj);
        let mut jets = Vec::new();
        for _ in 0..level {
            t = geo.covariant_derivative(&t)?;
            jets.push(t.clone());
        }
        let dphi: Vec<Vec<f64>> = jets.iter().map(|t| t.values().into_components()).collect();
        let (mut r, mut dr, mut ddr) = (Vec::new(), Vec::new(), Vec::new());
        if level >= 2 {
            let rj = geo.riemann()?;
            r = rj.values().into_components();
            if level >= 3 {
                let drj = geo.covariant_derivative(rj)?;
                dr = drj.values().into_components();
                if level >= 4 {
                    ddr = geo.covariant_derivative(&drj)?.values().into_components();
                }
            }
        }
        let mut forcing = Vec::new();
        if level >= 2 {
            let f = geo.raise(&jets[1], 0)?.contract(0, 1)?;
            forcing.push(f.values().into_components());
            if level >= 4 {
                let df = geo.covariant_derivative(&f)?;
                forcing.push(df.values().into_components());
                forcing.push(geo.covariant_derivative(&df)?.values().into_components());
            }
        }
        let pick = |k: usize| dphi.get(k).cloned().unwrap_or_default();
        Ok(PointData {
            fd: FieldData {
                n,
                g,
                gi,
                r,
                dr,
                phi1: pick(0),
                phi2: pick(1),
                phi3: pick(2),
            },
            dphi,
            phi: value,
            ddr,
            forcing,
        })
    }

    /// `Δ` of `∇^k φ` from `∇^{k+2} φ`.
    fn laplacian_of_dphi(&self, k: usize) -> Vec<f64> {
        let n = self.fd.n;
        let t = &self.dphi[k + 1];
        let tail = n.pow(k as u32);
        (0..tail)
            .map(|rest| (0..n * n).map(|ab| self.fd.gi[ab] * t[ab * tail + rest]).sum())
            .collect()
    }

    fn laplacian_of_riemann(&self) -> Vec<f64> {
        let n4 = self.fd.n.pow(4);
        (0..n4)
            .map(|rest| {
                (0..self.fd.n * self.fd.n)
                    .map(|ab| self.fd.gi[ab] * self.ddr[ab * n4 + rest])
                    .sum()
            })
            .collect()
    }

    /// `∇_j D_klm` with `D_klm = ∇_m Ric_kl − ∇_l Ric_km`, from `∇∇R`.
    fn grad_divergence_identity(&self) -> Vec<f64> {
        let (n, x) = (self.fd.n, Ix(self.fd.n));
        let n6 = |a, b, c, d, e, f| x.i5(a, b, c, d, e) * n + f;
        let dd_ric = |a: usize, b: usize, k: usize, l: usize| -> f64 {
            let mut acc = 0.0;
            for i in 0..n {
                for q in 0..n {
                    acc += self.fd.gi[x.i2(i, q)] * self.ddr[n6(a, b, i, k, l, q)];
                }
            }
            acc
        };
        let mut out = vec![0.0; n.pow(4)];
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        out[x.i4(j, k, l, m)] = dd_ric(j, m, k, l) - dd_ric(j, l, k, m);
                    }
                }
            }
        }
        out
    }
}

fn tensor(n: usize, rank: usize, comps: Vec<f64>) -> Tensor<f64> {
    Tensor::from_vec(n, vec![Variance::Lower; rank], comps).expect("component count matches rank")
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// A metric, scalar field, potential and cosmological constant on one chart.
#[derive(Debug, Clone)]
pub struct EinsteinScalar {
    pub field: MetricField,
    pub phi: ScalarSolution,
    pub potential: Potential,
    pub lambda: CosmologicalConstant,
}

impl EinsteinScalar {
    pub fn new(field: MetricField, phi: ScalarSolution, potential: Potential, lambda: CosmologicalConstant) -> Self {
        EinsteinScalar {
            field,
            phi,
            potential,
            lambda,
        }
    }

    fn data(&self, p: &[f64], level: usize) -> Result<PointData> {
        PointData::new(&self.field, &self.phi, p, level)
    }

    fn b(&self, phi: f64) -> [f64; 4] {
        self.potential.derivatives(phi)
    }

    /// `Ric − ∇φ⊗∇φ − (V(φ) + λ) g`.
    pub fn einstein_residual(&self, p: &[f64]) -> Result<Tensor<f64>> {
        let d = self.data(p, 2)?;
        Ok(self.einstein_from(&d))
    }

    fn einstein_from(&self, d: &PointData) -> Tensor<f64> {
        let n = d.fd.n;
        let ric = d.fd.ricci();
        let s = self.b(d.phi)[0] + self.lambda.0;
        let comps = (0..n * n)
            .map(|k| ric[k] - d.fd.phi1[k / n] * d.fd.phi1[k % n] - s * d.fd.g[k])
            .collect();
        tensor(n, 2, comps)
    }

    /// `Δφ − V'(φ)`.
    pub fn scalar_residual(&self, p: &[f64]) -> Result<f64> {
        let d = self.data(p, 2)?;
        Ok(d.forcing[0][0] - self.b(d.phi)[1])
    }

    /// Largest field-equation residual at `p`.
    pub fn on_shell_defect(&self, p: &[f64]) -> Result<f64> {
        let d = self.data(p, 2)?;
        Ok(self.defect_from(&d))
    }

    fn defect_from(&self, d: &PointData) -> f64 {
        let e = self.einstein_from(d).max_abs();
        e.max((d.forcing[0][0] - self.b(d.phi)[1]).abs())
    }

    fn checked(&self, d: &PointData, n: usize, rank: usize, comps: Vec<f64>) -> Checked {
        let defect = self.defect_from(d);
        if defect > ON_SHELL_TOL {
            log::warn!("identity evaluated off shell: field-equation defect {defect:.3e}");
        }
        Checked {
            residual: tensor(n, rank, comps),
            off_shell: (defect > ON_SHELL_TOL).then_some(defect),
        }
    }

    /// `∇^i R_jkim − [φ_j φ_km − φ_k φ_jm + V'(φ)(φ_k g_jm − φ_j g_km)]`.
    pub fn contracted_bianchi_residual(&self, p: &[f64]) -> Result<Checked> {
        let d = self.data(p, 3)?;
        let (n, x) = (d.fd.n, Ix(d.fd.n));
        let dv = self.b(d.phi)[1];
        let (g, p1, p2) = (&d.fd.g, &d.fd.phi1, &d.fd.phi2);
        let lhs = contracted_divergence(&d.fd);
        let mut out = vec![0.0; n * n * n];
        for j in 0..n {
            for k in 0..n {
                for m in 0..n {
                    let rhs = p1[j] * p2[x.i2(k, m)] - p1[k] * p2[x.i2(j, m)]
                        + dv * (p1[k] * g[x.i2(j, m)] - p1[j] * g[x.i2(k, m)]);
                    out[x.i3(j, k, m)] = lhs[x.i3(j, k, m)] - rhs;
                }
            }
        }
        Ok(self.checked(&d, n, 3, out))
    }

    /// `ΔR_jklm` minus its on-shell expansion.
    pub fn curvature_laplacian_residual(&self, p: &[f64]) -> Result<Checked> {
        let d = self.data(p, 4)?;
        let b = self.b(d.phi);
        let rhs = d.fd.riemann_rhs(&d.fd.grad_divergence_on_shell(b[1], b[2]));
        let res = sub(&d.laplacian_of_riemann(), &rhs);
        Ok(self.checked(&d, d.fd.n, 4, res))
    }

    /// `Δ∇_jφ − V''(φ)∇_jφ − Ric_jk ∇^kφ`.
    pub fn prolonged_scalar_residual_1(&self, p: &[f64]) -> Result<Checked> {
        let d = self.data(p, 3)?;
        let ddv = self.b(d.phi)[2];
        let grad_f: Vec<f64> = d.fd.phi1.iter().map(|v| ddv * v).collect();
        let res = sub(&d.laplacian_of_dphi(1), &d.fd.dphi_rhs(&grad_f));
        Ok(self.checked(&d, d.fd.n, 1, res))
    }

    /// `Δ(∇²φ)_jk` minus its on-shell expansion.
    pub fn prolonged_scalar_residual_2(&self, p: &[f64]) -> Result<Checked> {
        let d = self.data(p, 4)?;
        let rhs = d.fd.rhs(self.b_tail(d.phi)).ddphi;
        let res = sub(&d.laplacian_of_dphi(2), &rhs);
        Ok(self.checked(&d, d.fd.n, 2, res))
    }

    fn b_tail(&self, phi: f64) -> [f64; 3] {
        let b = self.b(phi);
        [b[1], b[2], b[3]]
    }

    /// `[V', V'', V''']` at the field value at `p`.
    pub fn coefficients(&self, p: &[f64]) -> [f64; 3] {
        self.b_tail(self.phi.value(p))
    }
}

/// `∇^i R_jkim` (derivative contracted with the third slot).
fn contracted_divergence(fd: &FieldData) -> Vec<f64> {
    let (n, x) = (fd.n, Ix(fd.n));
    let mut out = vec![0.0; n * n * n];
    for j in 0..n {
        for k in 0..n {
            for m in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    for i in 0..n {
                        acc += fd.gi[x.i2(a, i)] * fd.dr[x.i5(a, j, k, i, m)];
                    }
                }
                out[x.i3(j, k, m)] = acc;
            }
        }
    }
    out
}

/// `∇_i R_jklm + ∇_j R_kilm + ∇_k R_ijlm`, rank 5.
pub fn bianchi2_residual(field: &MetricField, p: &[f64]) -> Result<Tensor<f64>> {
    let geo = LocalGeometry::new(field, p, 3)?;
    let dr = geo.covariant_derivative(geo.riemann()?)?.values();
    let n = field.dim();
    Ok(Tensor::from_fn(n, vec![Variance::Lower; 5], |x| {
        let (i, j, k, l, m) = (x[0], x[1], x[2], x[3], x[4]);
        dr.get(&[i, j, k, l, m]) + dr.get(&[j, k, i, l, m]) + dr.get(&[k, i, j, l, m])
    }))
}

/// `∇^i R_jkim + ∇_j Ric_km − ∇_k Ric_jm` for any metric.
pub fn contracted_bianchi_identity_residual(field: &MetricField, p: &[f64]) -> Result<Tensor<f64>> {
    contracted_bianchi_manufactured_residual(field, field, p)
}

/// As [`contracted_bianchi_identity_residual`], with the Ricci terms taken
/// from `source`; with `source` exact and `field` discretized the result is
/// pure discretization error.
pub fn contracted_bianchi_manufactured_residual(field: &MetricField, source: &MetricField, p: &[f64]) -> Result<Tensor<f64>> {
    let zero = ScalarSolution::constant(0.0);
    let d = PointData::new(field, &zero, p, 3)?;
    let dric = PointData::new(source, &zero, p, 3)?.fd.d_ricci();
    let (n, x) = (d.fd.n, Ix(d.fd.n));
    let lhs = contracted_divergence(&d.fd);
    let mut out = vec![0.0; n * n * n];
    for j in 0..n {
        for k in 0..n {
            for m in 0..n {
                out[x.i3(j, k, m)] = lhs[x.i3(j, k, m)] + dric[x.i3(j, k, m)] - dric[x.i3(k, j, m)];
            }
        }
    }
    Ok(tensor(n, 3, out))
}

/// `ΔR_jklm − (∇_jD_klm − ∇_kD_jlm + Q_jklm)` with `D` from the Ricci
/// tensor, for any metric.
pub fn curvature_laplacian_identity_residual(field: &MetricField, p: &[f64]) -> Result<Tensor<f64>> {
    curvature_laplacian_manufactured_residual(field, field, p)
}

/// As [`curvature_laplacian_identity_residual`], with the `∇D` source term
/// taken from `source`.
pub fn curvature_laplacian_manufactured_residual(field: &MetricField, source: &MetricField, p: &[f64]) -> Result<Tensor<f64>> {
    let zero = ScalarSolution::constant(0.0);
    let d = PointData::new(field, &zero, p, 4)?;
    let grad_d = PointData::new(source, &zero, p, 4)?.grad_divergence_identity();
    let rhs = d.fd.riemann_rhs(&grad_d);
    Ok(tensor(d.fd.n, 4, sub(&d.laplacian_of_riemann(), &rhs)))
}

/// `Δ∇_jφ − ∇_j(Δφ) − Ric_jp φ^p` for any metric and scalar.
pub fn prolonged_identity_residual_1(field: &MetricField, phi: &ScalarSolution, p: &[f64]) -> Result<Tensor<f64>> {
    prolonged_manufactured_residual_1(field, phi, (field, phi), p)
}

/// As [`prolonged_identity_residual_1`], with the forcing `Δφ` taken from
/// the `source` pair.
pub fn prolonged_manufactured_residual_1(
    field: &MetricField,
    phi: &ScalarSolution,
    source: (&MetricField, &ScalarSolution),
    p: &[f64],
) -> Result<Tensor<f64>> {
    let d = PointData::new(field, phi, p, 4)?;
    let forcing = PointData::new(source.0, source.1, p, 4)?.forcing;
    let rhs = d.fd.dphi_rhs(&forcing[1]);
    Ok(tensor(d.fd.n, 1, sub(&d.laplacian_of_dphi(1), &rhs)))
}

/// `Δ(∇²φ)_jk` minus its expansion with `f = Δφ` kept, for any metric and scalar.
pub fn prolonged_identity_residual_2(field: &MetricField, phi: &ScalarSolution, p: &[f64]) -> Result<Tensor<f64>> {
    prolonged_manufactured_residual_2(field, phi, (field, phi), p)
}

/// As [`prolonged_identity_residual_2`], with the forcing `Δφ` taken from
/// the `source` pair.
pub fn prolonged_manufactured_residual_2(
    field: &MetricField,
    phi: &ScalarSolution,
    source: (&MetricField, &ScalarSolution),
    p: &[f64],
) -> Result<Tensor<f64>> {
    let d = PointData::new(field, phi, p, 4)?;
    let forcing = PointData::new(source.0, source.1, p, 4)?.forcing;
    let rhs = d.fd.ddphi_rhs(&forcing[2]);
    Ok(tensor(d.fd.n, 2, sub(&d.laplacian_of_dphi(2), &rhs)))
}

/// Convergence order implied by errors at step `h` and `h/2`.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Frame components of `u = (R, φ, ∇φ, ∇²φ)` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureState {
    pub point: Vec<f64>,
    pub n: usize,
    pub riemann: Vec<f64>,
    pub phi: f64,
    pub dphi: Vec<f64>,
    pub ddphi: Vec<f64>,
}

/// Frame derivatives `e_i(u)`, derivative slot first.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub riemann: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub ddphi: Vec<f64>,
}

impl CurvatureState {
    pub fn zeros(n: usize, point: &[f64]) -> CurvatureState {
        CurvatureState {
            point: point.to_vec(),
            n,
            riemann: vec![0.0; n.pow(4)],
            phi: 0.0,
            dphi: vec![0.0; n],
            ddphi: vec![0.0; n * n],
        }
    }

    /// Largest Riemann-symmetry defect of the `R` block.
    pub fn symmetry_defect(&self) -> f64 {
        riemann_symmetry_residuals(&tensor(self.n, 4, self.riemann.clone()))
            .map(|r| r.max())
            .unwrap_or(f64::INFINITY)
    }

    /// `(R, φ, ∇φ, ∇²φ)` flattened in that order.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.riemann.clone();
        v.push(self.phi);
        v.extend_from_slice(&self.dphi);
        v.extend_from_slice(&self.ddphi);
        v
    }
}

/// Applies `e` (`e[i·n+α] = e_i^α`) to every slot of a covariant array.
pub fn frame_components(n: usize, e: &[f64], t: &[f64]) -> Vec<f64> {
    let mut cur = t.to_vec();
    let mut next = vec![0.0; cur.len()];
    let mut stride = cur.len();
    while stride > 1 {
        stride /= n;
        for off in 0..cur.len() {
            let i = (off / stride) % n;
            let base = off - i * stride;
            next[off] = (0..n).map(|a| e[i * n + a] * cur[base + a * stride]).sum();
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// `∇_i T_A = e_i(T_A) − Σ_s Γ_{i a_s}^c T_{…c…}` or, with `sign = −1`, its
/// inverse. `gamma[(i·n+a)·n+c] = Γ_{ia}^c`, `t` of rank `rank`, `dt` with the
/// derivative slot first.
fn connection_shift(n: usize, rank: usize, gamma: &[f64], t: &[f64], dt: &[f64], sign: f64) -> Vec<f64> {
    let len = n.pow(rank as u32);
    let mut out = dt.to_vec();
    for i in 0..n {
        for off in 0..len {
            let mut acc = 0.0;
            let mut stride = len;
            for _ in 0..rank {
                stride /= n;
                let a = (off / stride) % n;
                let base = off - a * stride;
                for c in 0..n {
                    acc += gamma[(i * n + a) * n + c] * t[base + c * stride];
                }
            }
            out[i * len + off] += sign * acc;
        }
    }
    out
}

/// Frame components of `u` at `p` for the frame block `e` of `frame`; the
/// frame must be expressed in the chart of `field`.
pub fn assemble_u(field: &MetricField, phi: &ScalarSolution, frame: &FrameState, p: &[f64]) -> Result<CurvatureState> {
    let n = check_frame(field, frame)?;
    let geo = LocalGeometry::new(field, p, 2)?;
    let d = phi.covariant_derivatives(field, p, 2)?;
    Ok(CurvatureState {
        point: p.to_vec(),
        n,
        riemann: frame_components(n, &frame.e, geo.riemann()?.values().components()),
        phi: phi.value(p),
        dphi: frame_components(n, &frame.e, d[0].components()),
        ddphi: frame_components(n, &frame.e, d[1].components()),
    })
}

fn check_frame(field: &MetricField, frame: &FrameState) -> Result<usize> {
    let n = field.dim();
    if frame.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: frame.n,
        });
    }
    Ok(n)
}

/// Frame derivatives `e_i(u)` at `p`, from covariant derivatives and the
/// frame connection `Γ_{ij}^k` of `frame`.
pub fn assemble_du(field: &MetricField, phi: &ScalarSolution, frame: &FrameState, p: &[f64]) -> Result<StateDerivative> {
    let n = check_frame(field, frame)?;
    let (e, gam) = (&frame.e, &frame.gamma);
    let geo = LocalGeometry::new(field, p, 3)?;
    let dr = geo.covariant_derivative(geo.riemann()?)?.values();
    let d = phi.covariant_derivatives(field, p, 3)?;
    let u = assemble_u(field, phi, frame, p)?;
    let fr = |t: &Tensor<f64>| frame_components(n, e, t.components());
    Ok(StateDerivative {
        riemann: connection_shift(n, 4, gam, &u.riemann, &fr(&dr), 1.0),
        phi: u.dphi.clone(),
        dphi: connection_shift(n, 1, gam, &u.dphi, &fr(&d[1]), 1.0),
        ddphi: connection_shift(n, 2, gam, &u.ddphi, &fr(&d[2]), 1.0),
    })
}

/// Frame components of `Δu` at `p`, computed directly from the fields.
pub fn frame_laplacian(field: &MetricField, phi: &ScalarSolution, frame: &FrameState, p: &[f64]) -> Result<RhsBlocks> {
    let n = check_frame(field, frame)?;
    let d = PointData::new(field, phi, p, 4)?;
    Ok(RhsBlocks {
        riemann: frame_components(n, &frame.e, &d.laplacian_of_riemann()),
        phi: d.forcing[0][0],
        dphi: frame_components(n, &frame.e, &d.laplacian_of_dphi(1)),
        ddphi: frame_components(n, &frame.e, &d.laplacian_of_dphi(2)),
    })
}

/// Right-hand side of `Δu = …` in an orthonormal frame: covariant
/// derivatives are rebuilt from `e_i(u)` and `Γ_{ij}^k` (the `v` variables),
/// and `b = [V', V'', V''']` at `φ`. Every term carries a factor of `u` or
/// `e(u)`, so `u = 0` gives zero. The `φ` block is `tr ∇²φ`.
pub fn main_system_rhs(u: &CurvatureState, du: &StateDerivative, gamma: &[f64], b: [f64; 3]) -> Result<RhsBlocks> {
    let n = u.n;
    if gamma.len() != n.pow(3) || du.riemann.len() != n.pow(5) || du.ddphi.len() != n.pow(3) {
        return Err(Error::DimensionMismatch {
            expected: n.pow(3),
            got: gamma.len(),
        });
    }
    let id: Vec<f64> = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
    let fd = FieldData {
        n,
        g: id.clone(),
        gi: id,
        r: u.riemann.clone(),
        dr: connection_shift(n, 4, gamma, &u.riemann, &du.riemann, -1.0),
        phi1: u.dphi.clone(),
        phi2: u.ddphi.clone(),
        phi3: connection_shift(n, 2, gamma, &u.ddphi, &du.ddphi, -1.0),
    };
    Ok(fd.rhs(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{integrate_frame, FrameOptions};

    pub(super) fn wobble() -> MetricField {
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

    pub(super) fn ripple() -> ScalarSolution {
        ScalarSolution::new(|x| x[0].sin().mul_jet(&x[1].scale(0.7).exp()).add_jet(&x[2].mul_jet(&x[2]).scale(0.3)))
    }

    fn de_sitter_like(phi0: f64) -> EinsteinScalar {
        EinsteinScalar::new(
            MetricField::sphere(3, 1.0).unwrap(),
            ScalarSolution::constant(phi0),
            Potential::zero(),
            CosmologicalConstant(2.0),
        )
    }

    #[test]
    fn potential_presets_are_consistent() {
        let xs = [-1.0, -0.3, 0.0, 0.4, 1.2];
        for v in [Potential::zero(), Potential::quadratic(1.3), Potential::quartic(0.2, -1.0, 0.5)] {
            assert!(v.consistency_error(&xs, 1e-4) < 1e-6, "{}", v.name());
        }
    }

    #[test]
    fn constant_field_on_sphere_is_on_shell() {
        let s = de_sitter_like(0.4);
        let p = [0.3, -0.2, 0.1];
        assert!(s.einstein_residual(&p).unwrap().max_abs() < 1e-9);
        assert!(s.scalar_residual(&p).unwrap().abs() < 1e-12);
        let c = s.contracted_bianchi_residual(&p).unwrap();
        assert!(c.off_shell.is_none() && c.residual.max_abs() < 1e-10);
        let l = s.curvature_laplacian_residual(&p).unwrap();
        assert!(l.residual.max_abs() < 1e-9, "{}", l.residual.max_abs());
        assert!(s.prolonged_scalar_residual_1(&p).unwrap().residual.max_abs() < 1e-10);
        assert!(s.prolonged_scalar_residual_2(&p).unwrap().residual.max_abs() < 1e-10);
    }

    #[test]
    fn quadratic_curvature_cancels_on_space_forms() {
        for k in [1.0, -1.0, 0.5] {
            let f = MetricField::space_form(4, k).unwrap();
            let geo = LocalGeometry::new(&f, &[0.1, 0.2, -0.1, 0.05], 2).unwrap();
            let gi = geo.metric().upper_tensor().into_components();
            let r = geo.riemann().unwrap().values().into_components();
            let q = curvature_quadratic(4, &gi, &r);
            assert!(q.iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn einstein_residual_responds_linearly_to_the_potential() {
        let eps = 1e-3;
        let s = EinsteinScalar::new(
            MetricField::sphere(3, 1.0).unwrap(),
            ScalarSolution::constant(0.0),
            Potential::quartic(eps, 0.0, 1.0),
            CosmologicalConstant(2.0),
        );
        let p = [0.2, 0.1, -0.3];
        let gmax = s.field.metric_at(&p).unwrap().g().amax();
        assert!((s.einstein_residual(&p).unwrap().max_abs() - eps * gmax).abs() < 1e-10);
    }

    #[test]
    fn identities_hold_for_a_generic_metric() {
        let f = wobble();
        let p = [0.2, -0.1, 0.3];
        assert!(bianchi2_residual(&f, &p).unwrap().max_abs() < 1e-10);
        assert!(contracted_bianchi_identity_residual(&f, &p).unwrap().max_abs() < 1e-10);
        let l = curvature_laplacian_identity_residual(&f, &p).unwrap().max_abs();
        assert!(l < 1e-9, "{l}");
        assert!(prolonged_identity_residual_1(&f, &ripple(), &p).unwrap().max_abs() < 1e-10);
        assert!(prolonged_identity_residual_2(&f, &ripple(), &p).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn manufactured_residuals_converge_at_second_order() {
        let f = wobble();
        let phi = ripple();
        let p = [0.2, -0.1, 0.3];
        let errs = |h: f64| {
            let ff = f.clone().with_backend(Backend::finite_difference_with(h));
            let ph = phi.clone().with_backend(Backend::finite_difference_with(h));
            [
                curvature_laplacian_manufactured_residual(&ff, &f, &p).unwrap().max_abs(),
                contracted_bianchi_manufactured_residual(&ff, &f, &p).unwrap().max_abs(),
                prolonged_manufactured_residual_1(&ff, &ph, (&f, &phi), &p).unwrap().max_abs(),
                prolonged_manufactured_residual_2(&ff, &ph, (&f, &phi), &p).unwrap().max_abs(),
            ]
        };
        let (coarse, fine) = (errs(2e-3), errs(1e-3));
        for (c, f) in coarse.iter().zip(&fine) {
            let order = observed_order(*c, *f);
            assert!((1.8..=2.2).contains(&order), "{order}");
        }
    }

    #[test]
    fn finite_difference_hessian_is_symmetric() {
        let phi = ripple().with_backend(Backend::finite_difference());
        let d = phi.covariant_derivatives(&wobble(), &[0.1, 0.0, -0.2], 2).unwrap();
        let h = &d[1];
        assert!(h.max_abs_diff(&h.permute(&[1, 0]).unwrap()) < 1e-8);
    }

    #[test]
    fn nonconstant_field_is_flagged_off_shell() {
        let s = EinsteinScalar::new(MetricField::euclidean(3), ripple(), Potential::zero(), CosmologicalConstant(0.0));
        let c = s.contracted_bianchi_residual(&[0.1, 0.2, 0.3]).unwrap();
        assert!(c.off_shell.is_some());
    }

    #[test]
    fn main_system_rhs_vanishes_at_zero() {
        let n = 3;
        let u = CurvatureState::zeros(n, &[0.0; 3]);
        let du = StateDerivative {
            riemann: vec![0.0; n.pow(5)],
            phi: vec![0.0; n],
            dphi: vec![0.0; n * n],
            ddphi: vec![0.0; n.pow(3)],
        };
        let gamma: Vec<f64> = (0..27).map(|k| (k as f64).sin()).collect();
        let rhs = main_system_rhs(&u, &du, &gamma, [1.0, -2.0, 3.0]).unwrap();
        assert_eq!(rhs.max_abs(), 0.0);
    }

    #[test]
    fn frame_rhs_matches_coordinate_rhs() {
        let field = MetricField::normal_space_form(3, 1.0).unwrap();
        let dir = [0.6, 0.0, 0.8];
        let r = 0.4;
        let frame = integrate_frame(&field, &[0.0; 3], &dir, &[r], 1e-3, &FrameOptions::default())
            .unwrap()
            .remove(0);
        let p: Vec<f64> = dir.iter().map(|d| d * r).collect();
        let phi = ripple();
        let b = [0.3, -0.7, 1.1];
        let u = assemble_u(&field, &phi, &frame, &p).unwrap();
        assert!(u.symmetry_defect() < 1e-10);
        let du = assemble_du(&field, &phi, &frame, &p).unwrap();
        let framed = main_system_rhs(&u, &du, &frame.gamma, b).unwrap();
        let d = PointData::new(&field, &phi, &p, 4).unwrap();
        let coord = d.fd.rhs(b);
        let e = &frame.e;
        assert!((framed.phi - coord.phi).abs() < 1e-8);
        for (a, c) in [
            (&framed.riemann, &coord.riemann),
            (&framed.dphi, &coord.dphi),
            (&framed.ddphi, &coord.ddphi),
        ] {
            let c = frame_components(3, e, c);
            let err = a.iter().zip(&c).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(err < 1e-7, "{err}");
        }
    }

    #[test]
    fn constant_field_frame_system_balances_on_sphere() {
        let field = MetricField::normal_space_form(3, 1.0).unwrap();
        let dir = [0.0, 1.0, 0.0];
        let frame = integrate_frame(&field, &[0.0; 3], &dir, &[0.3], 1e-3, &FrameOptions::default())
            .unwrap()
            .remove(0);
        let p = [0.0, 0.3, 0.0];
        let phi = ScalarSolution::constant(0.2);
        let u = assemble_u(&field, &phi, &frame, &p).unwrap();
        let du = assemble_du(&field, &phi, &frame, &p).unwrap();
        let lhs = frame_laplacian(&field, &phi, &frame, &p).unwrap();
        let rhs = main_system_rhs(&u, &du, &frame.gamma, [0.0; 3]).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-8, "{}", lhs.max_abs_diff(&rhs));
    }
}
