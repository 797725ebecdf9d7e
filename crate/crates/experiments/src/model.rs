//! The model system `Δu = a₀u + a₁∂_r u + a₂v`, `Y(v) = b₀v + b₁u + b₂∂_r u`
//! on `ℝⁿ` with the flat metric, for pairs built from separated test functions.

use serde::Serialize;
use uc_core::carleman::{GridValues, QuadratureGrid, RadialFactor, TestFunction, VanishingOrder};

/// Coefficient triples of the two equations; `∇u` enters through `∂_r u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelCoefficients {
    /// `(a₀, a₁, a₂)` in `Δu = a₀u + a₁∂_r u + a₂v`.
    pub u_eq: [f64; 3],
    /// `(b₀, b₁, b₂)` in `Y(v) = b₀v + b₁u + b₂∂_r u`.
    pub v_eq: [f64; 3],
}

impl Default for ModelCoefficients {
    fn default() -> Self {
        ModelCoefficients {
            u_eq: [1.0; 3],
            v_eq: [1.0; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VSource {
    Zero,
    /// `v = (Δu − a₀u − a₁∂_r u)/a₂`, so the first equation holds exactly.
    Manufactured,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelPair {
    pub n: usize,
    pub u: TestFunction,
    pub v: VSource,
    pub coefficients: ModelCoefficients,
}

/// Everything the chains need at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PairValues {
    pub u: f64,
    pub grad: Vec<f64>,
    pub du_r: f64,
    pub laplacian: f64,
    pub v: f64,
    /// `Y(v) = r ∂_r v`.
    pub yv: f64,
}

impl PairValues {
    pub fn grad_norm(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

impl ModelPair {
    pub fn manufactured(n: usize, u: TestFunction) -> ModelPair {
        ModelPair {
            n,
            u,
            v: VSource::Manufactured,
            coefficients: ModelCoefficients::default(),
        }
    }

    pub fn zero(n: usize) -> ModelPair {
        ModelPair {
            n,
            u: TestFunction::zero(1.0),
            v: VSource::Zero,
            coefficients: ModelCoefficients::default(),
        }
    }

    pub fn with_coefficients(mut self, c: ModelCoefficients) -> ModelPair {
        self.coefficients = c;
        self
    }

    pub fn vanishing(&self) -> VanishingOrder {
        self.u.vanishing
    }

    pub fn at(&self, r: f64, omega: &[f64]) -> PairValues {
        let n = self.n as f64;
        let l = self.u.harmonic.degree() as f64;
        let x: Vec<f64> = omega.iter().map(|w| w * r).collect();
        let h = self.u.harmonic.eval(&x);
        let p = self.u.at(r, omega);
        let d = self.u.profile_up_to(r, 3);
        let (f, f1, f2, f3) = (d[0], d[1], d[2], d[3]);
        let du_r = (f1 + l * f / r) * h;
        let (v, yv) = match self.v {
            VSource::Zero => (0.0, 0.0),
            VSource::Manufactured => {
                let [a0, a1, a2] = self.coefficients.u_eq;
                let c = n - 1.0 + 2.0 * l;
                let lap = f2 + c * f1 / r;
                let dlap = f3 + c * (f2 / r - f1 / (r * r));
                let big_v = (lap - a0 * f - a1 * (f1 + l * f / r)) / a2;
                let dv = (dlap - a0 * f1 - a1 * (f2 + l * f1 / r - l * f / (r * r))) / a2;
                (big_v * h, (r * dv + l * big_v) * h)
            }
        };
        PairValues {
            u: p.u,
            grad: p.grad,
            du_r,
            laplacian: p.laplacian,
            v,
            yv,
        }
    }

    pub fn sample(&self, grid: &QuadratureGrid, pick: impl Fn(&PairValues) -> f64 + Sync) -> GridValues {
        grid.sample(|r, w| pick(&self.at(r, w)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelResiduals {
    /// `|Δu − (a₀u + a₁∂_r u + a₂v)|`.
    pub res_u: GridValues,
    /// `|Y(v) − (b₀v + b₁u + b₂∂_r u)|`.
    pub res_v: GridValues,
    /// `max(0, |Δu| − C(|u| + |∇u| + |v|))`.
    pub slack_u: GridValues,
    /// `max(0, |Y(v)| − C(|v| + |u| + |∇u|))`.
    pub slack_v: GridValues,
}

fn max_abs(g: &GridValues) -> f64 {
    g.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

impl ModelResiduals {
    pub fn max_u(&self) -> f64 {
        max_abs(&self.res_u)
    }

    pub fn max_v(&self) -> f64 {
        max_abs(&self.res_v)
    }

    pub fn max_slack(&self) -> f64 {
        max_abs(&self.slack_u).max(max_abs(&self.slack_v))
    }
}

/// Pointwise residuals of both equations and the slack of the inequality
/// form with budget `budget`.
pub fn model_residuals(pair: &ModelPair, grid: &QuadratureGrid, budget: f64) -> ModelResiduals {
    let [a0, a1, a2] = pair.coefficients.u_eq;
    let [b0, b1, b2] = pair.coefficients.v_eq;
    ModelResiduals {
        res_u: pair.sample(grid, |p| (p.laplacian - (a0 * p.u + a1 * p.du_r + a2 * p.v)).abs()),
        res_v: pair.sample(grid, |p| (p.yv - (b0 * p.v + b1 * p.u + b2 * p.du_r)).abs()),
        slack_u: pair.sample(grid, |p| (p.laplacian.abs() - budget * (p.u.abs() + p.grad_norm() + p.v.abs())).max(0.0)),
        slack_v: pair.sample(grid, |p| (p.yv.abs() - budget * (p.v.abs() + p.u.abs() + p.grad_norm())).max(0.0)),
    }
}

/// `u_k = χ_k φ u` and `v_φ = φ v` with `φ = 1` on `B_plateau`, supported in `B_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffPair<'a> {
    pub pair: &'a ModelPair,
    pub k: u32,
    pub plateau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffValues {
    pub chi: f64,
    pub phi: f64,
    pub u_k: f64,
    pub grad_u_k: Vec<f64>,
    pub laplacian_u_k: f64,
    /// `2∇χ_k·∇u + uΔχ_k`.
    pub leibniz: f64,
    pub v_phi: f64,
    /// `Δ(φu)`.
    pub laplacian_phi_u: f64,
    /// `Y(φv)`.
    pub y_phi_v: f64,
    pub base: PairValues,
}

/// `[ψ, ψ', ψ'']` for a radial factor.
fn radial(f: RadialFactor, r: f64) -> [f64; 3] {
    let d = f.derivatives(r, 2);
    [d[0], d[1], d[2]]
}

/// `Δ(ψu)` for radial `ψ`, given `[ψ, ψ', ψ'']`.
fn product_laplacian(n: usize, r: f64, psi: [f64; 3], p: &PairValues) -> f64 {
    let lap_psi = psi[2] + (n as f64 - 1.0) * psi[1] / r;
    psi[0] * p.laplacian + 2.0 * psi[1] * p.du_r + p.u * lap_psi
}

pub fn assemble_cutoff_pair(pair: &ModelPair, k: u32, plateau: f64) -> CutoffPair<'_> {
    CutoffPair { pair, k, plateau }
}

impl CutoffPair<'_> {
    pub fn chi_factor(&self) -> RadialFactor {
        RadialFactor::Annulus {
            k: self.k,
            plateau: self.plateau,
        }
    }

    pub fn phi_factor(&self) -> RadialFactor {
        RadialFactor::Bump {
            scale: 1.0,
            plateau: self.plateau,
        }
    }

    pub fn at(&self, r: f64, omega: &[f64]) -> CutoffValues {
        let n = self.pair.n;
        let base = self.pair.at(r, omega);
        let chi = radial(self.chi_factor(), r);
        let phi = radial(self.phi_factor(), r);
        // ψ = χφ
        let psi = [
            chi[0] * phi[0],
            chi[1] * phi[0] + chi[0] * phi[1],
            chi[2] * phi[0] + 2.0 * chi[1] * phi[1] + chi[0] * phi[2],
        ];
        let grad_u_k = omega.iter().zip(&base.grad).map(|(w, g)| psi[1] * w * base.u + psi[0] * g).collect();
        let lap_chi = chi[2] + (n as f64 - 1.0) * chi[1] / r;
        CutoffValues {
            chi: chi[0],
            phi: phi[0],
            u_k: psi[0] * base.u,
            grad_u_k,
            laplacian_u_k: product_laplacian(n, r, psi, &base),
            leibniz: 2.0 * chi[1] * base.du_r + base.u * lap_chi,
            v_phi: phi[0] * base.v,
            laplacian_phi_u: product_laplacian(n, r, phi, &base),
            y_phi_v: r * phi[1] * base.v + phi[0] * base.yv,
            base,
        }
    }

    pub fn sample(&self, grid: &QuadratureGrid, pick: impl Fn(&CutoffValues) -> f64 + Sync) -> GridValues {
        grid.sample(|r, w| pick(&self.at(r, w)))
    }
}
