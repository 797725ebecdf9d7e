//! The radially parallel orthonormal frame and its connection coefficients,
//! evolved along rays by a first-order system in `Y = r∂_r`.
//!
//! With `e_i = e_i^α ∂_α`, `∂_α = e^i_α e_i`, `Γ_{ij}^k = g(∇_{e_i}e_j, e_k)` and
//! `Γ_{iY}^j = g(∇_{e_i}Y, e_j)`, the system reads (frame curvature
//! `R_{lijk} = e_l^a e_i^b e_j^c e_k^d R_{abcd}`, frame components of `Y`
//! written `Y^l = Y^γ e^l_γ`):
//!
//! ```text
//! Y(e_i^α)      = ∂_βY^α e_i^β − Γ_{iY}^k e_k^α
//! Y(e^i_α)      = −∂_αY^β e^i_β + e^j_α Γ_{jY}^i
//! Y(∂_β e_i^α)  = −∂_βY^γ ∂_γe_i^α + ∂_β∂_γY^α e_i^γ + ∂_γY^α ∂_βe_i^γ − ∂_βΓ_{iY}^k e_k^α − Γ_{iY}^k ∂_βe_k^α
//! Y(∂_β e^i_α)  = −∂_βY^γ ∂_γe^i_α − ∂_α∂_βY^γ e^i_γ − ∂_αY^γ ∂_βe^i_γ + ∂_βe^j_α Γ_{jY}^i + e^j_α ∂_βΓ_{jY}^i
//! Y(Γ_{ij}^k)   = Y^l R_{lijk} − Γ_{iY}^p Γ_{pj}^k
//! Y(Γ_{iY}^j)   = Y^k Y^l R_{kilj} + Γ_{iY}^j − Γ_{iY}^p Γ_{pY}^j
//! Y(∂_αΓ_{ij}^k) = −∂_αY^β ∂_βΓ_{ij}^k + ∂_α(Y^l) R_{lijk} + Y^l ∂_α(R_{lijk}) − ∂_αΓ_{iY}^p Γ_{pj}^k − Γ_{iY}^p ∂_αΓ_{pj}^k
//! Y(∂_αΓ_{iY}^j) = −∂_αY^β ∂_βΓ_{iY}^j + ∂_αΓ_{iY}^j − ∂_αΓ_{iY}^p Γ_{pY}^j − Γ_{iY}^p ∂_αΓ_{pY}^j
//!                  + ∂_α(Y^k Y^l) R_{kilj} + Y^k Y^l ∂_α(R_{kilj})
//! ```
//!
//! `∂_α(R_{lijk})` is the partial of the frame components, so it picks up
//! `∂_α e` terms besides the coordinate partials of `R_{abcd}`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesic::{exp_map, orthonormal_basis};
use crate::metric::MetricField;
use crate::normal_chart::{normal_chart_for, transform4, CurvatureSample, NormalChart};
use crate::ode::{dopri45, OdeOptions};
use crate::tensor::MetricAtPoint;

/// Smallest admissible seed radius; below it the `1/r` factor dominates round-off.
pub const MIN_SEED_RADIUS: f64 = 1e-6;

pub const BLOCK_NAMES: [&str; 8] = ["e", "dual", "de", "ddual", "gamma", "gamma_y", "dgamma", "dgamma_y"];

/// All eight blocks, flat row-major:
/// `e[i·n+α] = e_i^α`, `dual[i·n+α] = e^i_α`, `de[(β·n+i)·n+α] = ∂_β e_i^α`,
/// `ddual[(β·n+i)·n+α] = ∂_β e^i_α`, `gamma[(i·n+j)·n+k] = Γ_{ij}^k`,
/// `gamma_y[i·n+j] = Γ_{iY}^j`, `dgamma[((α·n+i)·n+j)·n+k] = ∂_αΓ_{ij}^k`,
/// `dgamma_y[(α·n+i)·n+j] = ∂_αΓ_{iY}^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameState {
    pub n: usize,
    pub r: f64,
    pub direction: Vec<f64>,
    pub e: Vec<f64>,
    pub dual: Vec<f64>,
    pub de: Vec<f64>,
    pub ddual: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_y: Vec<f64>,
    pub dgamma: Vec<f64>,
    pub dgamma_y: Vec<f64>,
}

fn identity(n: usize) -> Vec<f64> {
    (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

impl FrameState {
    pub fn zeros(n: usize, r: f64, direction: &[f64]) -> FrameState {
        FrameState {
            n,
            r,
            direction: direction.to_vec(),
            e: vec![0.0; n * n],
            dual: vec![0.0; n * n],
            de: vec![0.0; n * n * n],
            ddual: vec![0.0; n * n * n],
            gamma: vec![0.0; n * n * n],
            gamma_y: vec![0.0; n * n],
            dgamma: vec![0.0; n * n * n * n],
            dgamma_y: vec![0.0; n * n * n],
        }
    }

    /// The flat-space state: `e = δ`, `Γ_{iY} = δ`, everything else zero.
    pub fn flat(n: usize, r: f64, direction: &[f64]) -> FrameState {
        let mut s = FrameState::zeros(n, r, direction);
        s.e = identity(n);
        s.dual = identity(n);
        s.gamma_y = identity(n);
        s
    }

    pub fn blocks(&self) -> [&[f64]; 8] {
        [
            &self.e,
            &self.dual,
            &self.de,
            &self.ddual,
            &self.gamma,
            &self.gamma_y,
            &self.dgamma,
            &self.dgamma_y,
        ]
    }

    fn blocks_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.e,
            &mut self.dual,
            &mut self.de,
            &mut self.ddual,
            &mut self.gamma,
            &mut self.gamma_y,
            &mut self.dgamma,
            &mut self.dgamma_y,
        ]
    }

    pub fn len(n: usize) -> usize {
        3 * n * n + 4 * n * n * n + n * n * n * n
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    pub fn from_slice(n: usize, r: f64, direction: &[f64], v: &[f64]) -> FrameState {
        let mut s = FrameState::zeros(n, r, direction);
        let mut off = 0;
        for b in s.blocks_mut() {
            let len = b.len();
            b.copy_from_slice(&v[off..off + len]);
            off += len;
        }
        s
    }

    /// Max-norm difference per block, in [`BLOCK_NAMES`] order.
    pub fn block_deviation(&self, other: &FrameState) -> [f64; 8] {
        let (a, b) = (self.blocks(), other.blocks());
        std::array::from_fn(|k| max_diff(a[k], b[k]))
    }

    pub fn max_deviation(&self, other: &FrameState) -> f64 {
        self.block_deviation(other).into_iter().fold(0.0, f64::max)
    }

    /// Residuals of duality, orthonormality and antisymmetry of `Γ_{ij}^k` in `(j,k)`.
    pub fn invariants(&self, metric: &MetricAtPoint) -> FrameInvariants {
        let n = self.n;
        let mut duality: f64 = 0.0;
        let mut ortho: f64 = 0.0;
        let g = metric.g();
        for a in 0..n {
            for b in 0..n {
                let s: f64 = (0..n).map(|i| self.dual[i * n + a] * self.e[i * n + b]).sum();
                duality = duality.max((s - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += g[(a, b)] * self.e[i * n + a] * self.e[j * n + b];
                    }
                }
                ortho = ortho.max((s - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        let mut anti: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    anti = anti.max((self.gamma[(i * n + j) * n + k] + self.gamma[(i * n + k) * n + j]).abs());
                }
            }
        }
        FrameInvariants {
            duality,
            orthonormality: ortho,
            antisymmetry: anti,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameInvariants {
    pub duality: f64,
    pub orthonormality: f64,
    pub antisymmetry: f64,
}

impl FrameInvariants {
    pub fn max(&self) -> f64 {
        self.duality.max(self.orthonormality).max(self.antisymmetry)
    }
}

/// `Y^α`, `∂_βY^α` at `[β·n+α]` and `∂_β∂_γY^α` at `[(β·n+γ)·n+α]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialData {
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    pub ddy: Vec<f64>,
}

impl RadialData {
    /// In normal coordinates `Y = x^α ∂_α` exactly.
    pub fn normal(x: &[f64]) -> RadialData {
        let n = x.len();
        RadialData {
            y: x.to_vec(),
            dy: identity(n),
            ddy: vec![0.0; n * n * n],
        }
    }
}

/// `Y`-derivatives of all eight blocks, given coordinate curvature at the point.
pub fn frame_ode_rhs(v: &FrameState, rd: &RadialData, curv: &CurvatureSample) -> FrameState {
    let n = v.n;
    let (n2, n4) = (n * n, n * n * n * n);
    let e = &v.e;
    let dual = &v.dual;
    let de = &v.de;
    let ddual = &v.ddual;
    let gam = &v.gamma;
    let gy = &v.gamma_y;
    let dgam = &v.dgamma;
    let dgy = &v.dgamma_y;
    let yv = &rd.y;
    let dyv = &rd.dy;
    let ddy = &rd.ddy;
    let mut out = FrameState::zeros(n, v.r, &v.direction);

    // frame curvature and its coordinate partials
    let rf = transform4(n, &curv.riemann, [e, e, e, e]);
    let mut drf = vec![0.0; n * n4];
    for a in 0..n {
        let dea = &de[a * n2..(a + 1) * n2];
        let parts = [
            transform4(n, &curv.riemann, [dea, e, e, e]),
            transform4(n, &curv.riemann, [e, dea, e, e]),
            transform4(n, &curv.riemann, [e, e, dea, e]),
            transform4(n, &curv.riemann, [e, e, e, dea]),
            transform4(n, &curv.d_riemann[a * n4..(a + 1) * n4], [e, e, e, e]),
        ];
        for p in &parts {
            for (d, x) in drf[a * n4..(a + 1) * n4].iter_mut().zip(p) {
                *d += x;
            }
        }
    }
    // frame components of Y and their partials
    let yf: Vec<f64> = (0..n).map(|l| (0..n).map(|g| yv[g] * dual[l * n + g]).sum()).collect();
    let mut dyf = vec![0.0; n2];
    for a in 0..n {
        for l in 0..n {
            dyf[a * n + l] = (0..n)
                .map(|g| dyv[a * n + g] * dual[l * n + g] + yv[g] * ddual[(a * n + l) * n + g])
                .sum();
        }
    }

    for i in 0..n {
        for al in 0..n {
            let mut s = 0.0;
            for b in 0..n {
                s += dyv[b * n + al] * e[i * n + b];
                s -= gy[i * n + b] * e[b * n + al];
            }
            out.e[i * n + al] = s;
            let mut s = 0.0;
            for b in 0..n {
                s -= dyv[al * n + b] * dual[i * n + b];
                s += dual[b * n + al] * gy[b * n + i];
            }
            out.dual[i * n + al] = s;
        }
    }
    for b in 0..n {
        for i in 0..n {
            for al in 0..n {
                let mut s = 0.0;
                for c in 0..n {
                    s -= dyv[b * n + c] * de[(c * n + i) * n + al];
                    s += ddy[(b * n + c) * n + al] * e[i * n + c];
                    s += dyv[c * n + al] * de[(b * n + i) * n + c];
                    s -= dgy[(b * n + i) * n + c] * e[c * n + al];
                    s -= gy[i * n + c] * de[(b * n + c) * n + al];
                }
                out.de[(b * n + i) * n + al] = s;
                let mut s = 0.0;
                for c in 0..n {
                    s -= dyv[b * n + c] * ddual[(c * n + i) * n + al];
                    s -= ddy[(al * n + b) * n + c] * dual[i * n + c];
                    s -= dyv[al * n + c] * ddual[(b * n + i) * n + c];
                    s += ddual[(b * n + c) * n + al] * gy[c * n + i];
                    s += dual[c * n + al] * dgy[(b * n + c) * n + i];
                }
                out.ddual[(b * n + i) * n + al] = s;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += yf[l] * rf[((l * n + i) * n + j) * n + k];
                    s -= gy[i * n + l] * gam[(l * n + j) * n + k];
                }
                out.gamma[(i * n + j) * n + k] = s;
            }
            let mut s = gy[i * n + j];
            for p in 0..n {
                s -= gy[i * n + p] * gy[p * n + j];
                for q in 0..n {
                    s += yf[p] * yf[q] * rf[((p * n + i) * n + q) * n + j];
                }
            }
            out.gamma_y[i * n + j] = s;
        }
    }
    for a in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for b in 0..n {
                        s -= dyv[a * n + b] * dgam[((b * n + i) * n + j) * n + k];
                        s += dyf[a * n + b] * rf[((b * n + i) * n + j) * n + k];
                        s += yf[b] * drf[a * n4 + ((b * n + i) * n + j) * n + k];
                        s -= dgy[(a * n + i) * n + b] * gam[(b * n + j) * n + k];
                        s -= gy[i * n + b] * dgam[((a * n + b) * n + j) * n + k];
                    }
                    out.dgamma[((a * n + i) * n + j) * n + k] = s;
                }
                let mut s = dgy[(a * n + i) * n + j];
                for b in 0..n {
                    s -= dyv[a * n + b] * dgy[(b * n + i) * n + j];
                    s -= dgy[(a * n + i) * n + b] * gy[b * n + j];
                    s -= gy[i * n + b] * dgy[(a * n + b) * n + j];
                    for c in 0..n {
                        let idx = ((b * n + i) * n + c) * n + j;
                        s += (dyf[a * n + b] * yf[c] + yf[b] * dyf[a * n + c]) * rf[idx];
                        s += yf[b] * yf[c] * drf[a * n4 + idx];
                    }
                }
                out.dgamma_y[(a * n + i) * n + j] = s;
            }
        }
    }
    out
}

/// Second-order Taylor data of the frame at normal coordinates `x`, from the
/// curvature `r0` at the base point (where the frame is the coordinate basis).
pub fn taylor_seed(r0: &[f64], x: &[f64], r: f64, direction: &[f64]) -> FrameState {
    let n = x.len();
    let at = |a: usize, b: usize, c: usize, d: usize| r0[((a * n + b) * n + c) * n + d];
    // R_{x i x j} and its partials
    let rx = |i: usize, j: usize| {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += x[a] * x[b] * at(a, i, b, j);
            }
        }
        s
    };
    let drx = |m: usize, i: usize, j: usize| (0..n).map(|a| x[a] * (at(m, i, a, j) + at(a, i, m, j))).sum::<f64>();
    let mut s = FrameState::flat(n, r, direction);
    for i in 0..n {
        for j in 0..n {
            let q = rx(i, j);
            s.e[i * n + j] -= q / 6.0;
            s.dual[i * n + j] += q / 6.0;
            s.gamma_y[i * n + j] += q / 3.0;
            for m in 0..n {
                let dq = drx(m, i, j);
                s.de[(m * n + i) * n + j] = -dq / 6.0;
                s.ddual[(m * n + i) * n + j] = dq / 6.0;
                s.dgamma_y[(m * n + i) * n + j] = dq / 3.0;
            }
            for k in 0..n {
                s.gamma[(i * n + j) * n + k] = 0.5 * (0..n).map(|l| x[l] * at(l, i, j, k)).sum::<f64>();
                for a in 0..n {
                    s.dgamma[((a * n + i) * n + j) * n + k] = 0.5 * at(a, i, j, k);
                }
            }
        }
    }
    s
}

#[derive(Debug, Clone, Copy)]
pub struct FrameOptions {
    pub ode: OdeOptions,
    /// Abort when any invariant residual at an output radius exceeds this.
    pub invariant_tol: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions {
            ode: OdeOptions::default(),
            invariant_tol: 1e-6,
        }
    }
}

fn unit(direction: &[f64]) -> Result<Vec<f64>> {
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidParameter("ray direction must be a nonzero vector".into()));
    }
    Ok(direction.iter().map(|v| v / norm).collect())
}

/// Integrates `dv/dr = Y(v)/r` along the ray `x = rθ` of a normal chart,
/// from the Taylor seed at `r0`, returning the state at each of `radii`.
pub fn integrate_frame_in_chart(
    chart: &dyn NormalChart,
    direction: &[f64],
    radii: &[f64],
    r0: f64,
    opts: &FrameOptions,
) -> Result<Vec<FrameState>> {
    let n = chart.dim();
    if direction.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: direction.len(),
        });
    }
    if r0 < MIN_SEED_RADIUS {
        return Err(Error::SeedRadiusTooSmall { r0, min: MIN_SEED_RADIUS });
    }
    let theta = unit(direction)?;
    let r_max = radii.iter().copied().fold(r0, f64::max);
    if radii.iter().any(|&r| r < r0) {
        return Err(Error::InvalidParameter(format!("output radii must be at least the seed radius {r0}")));
    }
    let base = chart.curvature(&vec![0.0; n])?;
    let x0: Vec<f64> = theta.iter().map(|t| t * r0).collect();
    let seed = taylor_seed(&base.riemann, &x0, r0, &theta);
    let rhs = |r: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let x: Vec<f64> = theta.iter().map(|t| t * r).collect();
        let state = FrameState::from_slice(n, r, &theta, y);
        let curv = chart.curvature(&x)?;
        let d = frame_ode_rhs(&state, &RadialData::normal(&x), &curv).to_vec();
        for (o, v) in dy.iter_mut().zip(d) {
            *o = v / r;
        }
        Ok(())
    };
    let tr = dopri45(rhs, r0, &seed.to_vec(), r_max, radii, &opts.ode)?;
    let mut out = Vec::with_capacity(radii.len());
    for (&r, y) in radii.iter().zip(&tr.outputs) {
        let state = FrameState::from_slice(n, r, &theta, y);
        let x: Vec<f64> = theta.iter().map(|t| t * r).collect();
        let inv = state.invariants(&chart.metric(&x)?);
        for (what, drift) in [
            ("duality", inv.duality),
            ("orthonormality", inv.orthonormality),
            ("antisymmetry", inv.antisymmetry),
        ] {
            if drift > opts.invariant_tol {
                return Err(Error::FrameInvariant {
                    r,
                    what,
                    drift,
                    tol: opts.invariant_tol,
                });
            }
        }
        out.push(state);
    }
    Ok(out)
}

/// Frame states along the ray of direction `direction` (components in the
/// orthonormal basis at `p0` used for the normal coordinates).
pub fn integrate_frame(
    field: &MetricField,
    p0: &[f64],
    direction: &[f64],
    radii: &[f64],
    r0: f64,
    opts: &FrameOptions,
) -> Result<Vec<FrameState>> {
    let chart = normal_chart_for(field, p0)?;
    integrate_frame_in_chart(chart.as_ref(), direction, radii, r0, opts)
}

/// Finite-difference settings of the brute-force oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// RK4 steps per exponential-map evaluation.
    pub steps: usize,
    /// Step of the inner stencil (frame partials).
    pub h_inner: f64,
    /// Step of the outer stencil (connection partials).
    pub h_outer: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            steps: 48,
            h_inner: 2e-3,
            h_outer: 4e-3,
        }
    }
}

const STENCIL: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];

struct OracleCtx<'a> {
    field: &'a MetricField,
    p0: &'a [f64],
    basis: DMatrix<f64>,
    opts: OracleOptions,
}

impl OracleCtx<'_> {
    /// `N[α,i] = e_i^α` at normal coordinates `x`.
    fn frame(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = x.len();
        let w = &self.basis * DMatrix::from_column_slice(n, 1, x);
        let e = exp_map(self.field, self.p0, w.as_slice(), &self.basis, self.opts.steps)?;
        let m = e.jacobian * &self.basis;
        m.lu().solve(&e.transported).ok_or(Error::MetricNotPositiveDefinite)
    }

    /// Frame, its partials `dn[β]`, and the connection coefficients at `x`.
    fn local(&self, x: &[f64]) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>, Vec<f64>, Vec<f64>)> {
        let n = x.len();
        let nm = self.frame(x)?;
        let mut dn = Vec::with_capacity(n);
        for b in 0..n {
            let mut acc = DMatrix::zeros(n, n);
            for (s, w) in STENCIL {
                let mut xs = x.to_vec();
                xs[b] += s * self.opts.h_inner;
                acc += self.frame(&xs)? * (w / self.opts.h_inner);
            }
            dn.push(acc);
        }
        let dual = nm.clone().try_inverse().ok_or(Error::MetricNotPositiveDefinite)?;
        // [e_i, e_j]^α = e_i^β ∂_β e_j^α − e_j^β ∂_β e_i^α, c_{ij}^k = e^k_α [e_i,e_j]^α
        let mut c = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for al in 0..n {
                        let mut br = 0.0;
                        for b in 0..n {
                            br += nm[(b, i)] * dn[b][(al, j)] - nm[(b, j)] * dn[b][(al, i)];
                        }
                        s += dual[(k, al)] * br;
                    }
                    c[(i * n + j) * n + k] = s;
                }
            }
        }
        let cc = |i: usize, j: usize, k: usize| c[(i * n + j) * n + k];
        let mut gamma = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    gamma[(i * n + j) * n + k] = 0.5 * (cc(i, j, k) - cc(j, k, i) + cc(k, i, j));
                }
            }
        }
        // ∇_{e_i}Y = [e_i, Y] since ∇_Y e_i = 0, and Y = x^α ∂_α
        let mut gamma_y = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = if i == j { 1.0 } else { 0.0 };
                for al in 0..n {
                    for b in 0..n {
                        s -= dual[(j, al)] * x[b] * dn[b][(al, i)];
                    }
                }
                gamma_y[i * n + j] = s;
            }
        }
        Ok((nm, dn, gamma, gamma_y))
    }
}

/// The same frame state by brute force: exponential map and parallel
/// transport in the original chart, mapped into normal coordinates, with
/// coordinate partials from nested fourth-order central differences.
pub fn direct_frame_oracle(
    field: &MetricField,
    p0: &[f64],
    direction: &[f64],
    r: f64,
    opts: &OracleOptions,
) -> Result<FrameState> {
    let n = field.dim();
    let theta = unit(direction)?;
    let ctx = OracleCtx {
        field,
        p0,
        basis: orthonormal_basis(field, p0)?,
        opts: *opts,
    };
    let x: Vec<f64> = theta.iter().map(|t| t * r).collect();
    let (nm, dn, gamma, gamma_y) = ctx.local(&x)?;
    let dual = nm.clone().try_inverse().ok_or(Error::MetricNotPositiveDefinite)?;
    let mut s = FrameState::zeros(n, r, &theta);
    for i in 0..n {
        for al in 0..n {
            s.e[i * n + al] = nm[(al, i)];
            s.dual[i * n + al] = dual[(i, al)];
            for b in 0..n {
                s.de[(b * n + i) * n + al] = dn[b][(al, i)];
                // ∂(N⁻¹) = −N⁻¹ (∂N) N⁻¹
                let dd = -(&dual * &dn[b] * &dual);
                s.ddual[(b * n + i) * n + al] = dd[(i, al)];
            }
        }
    }
    s.gamma = gamma;
    s.gamma_y = gamma_y;
    let shifted: Vec<(usize, f64, f64)> = (0..n).flat_map(|a| STENCIL.iter().map(move |&(st, w)| (a, st, w))).collect();
    let parts: Vec<(usize, f64, Vec<f64>, Vec<f64>)> = shifted
        .par_iter()
        .map(|&(a, st, w)| {
            let mut xs = x.clone();
            xs[a] += st * opts.h_outer;
            ctx.local(&xs).map(|(_, _, g, gy)| (a, w, g, gy))
        })
        .collect::<Result<_>>()?;
    let n3 = n * n * n;
    for (a, w, g, gy) in parts {
        for (d, v) in s.dgamma[a * n3..(a + 1) * n3].iter_mut().zip(&g) {
            *d += w * v / opts.h_outer;
        }
        for (d, v) in s.dgamma_y[a * n * n..(a + 1) * n * n].iter_mut().zip(&gy) {
            *d += w * v / opts.h_outer;
        }
    }
    Ok(s)
}

/// `Γ_{iY}^j` for constant curvature `k` at radius `r` along `θ`:
/// `θθᵀ + f(r)(I − θθᵀ)` with `f = r√k cot(r√k)` (hyperbolic for `k < 0`).
pub fn jacobi_gamma_y(k: f64, r: f64, theta: &[f64]) -> Vec<f64> {
    let n = theta.len();
    let f = if k > 0.0 {
        let s = r * k.sqrt();
        s / s.tan()
    } else if k < 0.0 {
        let s = r * (-k).sqrt();
        s / s.tanh()
    } else {
        1.0
    };
    (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let p = theta[i] * theta[j];
            p + f * (if i == j { 1.0 } else { 0.0 } - p)
        })
        .collect()
}
