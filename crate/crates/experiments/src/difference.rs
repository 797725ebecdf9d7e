//! Two Einstein-scalar solutions compared in aligned geodesic normal
//! coordinates: `δu` (curvature and scalar blocks in the transported frame)
//! and `δv` (the frame-ODE state) on a common grid around the base points.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use uc_core::carleman::{sphere_rule, QuadratureGrid};
use uc_core::einstein::{
    assemble_du, assemble_u, frame_laplacian, CosmologicalConstant, CurvatureState, EinsteinScalar, Potential, ScalarSolution, ON_SHELL_TOL,
};
use uc_core::frame::{frame_ode_rhs, integrate_frame_in_chart, FrameOptions, FrameState, RadialData};
use uc_core::geodesic::{exp_map, orthonormal_basis};
use uc_core::metric::{MetricField, Preset};
use uc_core::normal_chart::{ExpChart, NormalChart, SpaceFormChart};
use uc_core::{Error, Result};

use crate::vanishing::{default_radii, vanishing_order_estimate, VanishingEstimate};

/// A solution with its base point and the orthonormal frame there.
#[derive(Debug, Clone)]
pub struct Solution {
    pub field: MetricField,
    pub phi: ScalarSolution,
    pub p0: Vec<f64>,
    /// Columns form the frame at `p0`; Cholesky-based when absent.
    pub basis: Option<DMatrix<f64>>,
}

impl Solution {
    pub fn new(field: MetricField, phi: ScalarSolution, p0: &[f64]) -> Solution {
        Solution {
            field,
            phi,
            p0: p0.to_vec(),
            basis: None,
        }
    }

    pub fn with_basis(mut self, basis: DMatrix<f64>) -> Solution {
        self.basis = Some(basis);
        self
    }

    fn frame_at_base(&self) -> Result<DMatrix<f64>> {
        match &self.basis {
            Some(b) => Ok(b.clone()),
            None => orthonormal_basis(&self.field, &self.p0),
        }
    }

    /// Closed form for constant-curvature presets, exponential map otherwise.
    fn chart(&self, basis: &DMatrix<f64>) -> Result<Box<dyn NormalChart>> {
        match self.field.preset() {
            Preset::Custom => Ok(Box::new(ExpChart::new(self.field.clone(), &self.p0)?.with_basis(basis.clone()))),
            preset => {
                let k = preset.constant_curvature().expect("presets have constant curvature");
                Ok(Box::new(SpaceFormChart::new(self.field.dim(), k)?))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Radius of the normal-coordinate ball.
    pub radius: f64,
    pub levels: usize,
    pub nodes: usize,
    /// Polar nodes of the spherical rule.
    pub angular: usize,
    pub vanishing_radii: Vec<f64>,
    /// Differences at or below this count as zero when fitting orders.
    pub noise_floor: f64,
    /// Order `m` to which `δu`, `δv` must vanish at the base point.
    pub order_checked: u32,
    pub exp_steps: usize,
    pub frame: FrameOptions,
    /// Also evaluate `Δδu`, `∇δu` and `Y(δv)` for the inequality constants.
    pub inequality: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            radius: 0.4,
            levels: 3,
            nodes: 4,
            angular: 2,
            vanishing_radii: default_radii(),
            noise_floor: 1e-8,
            order_checked: 2,
            exp_steps: 64,
            frame: FrameOptions::default(),
            inequality: true,
        }
    }
}

/// `u` and `v` at one normal-coordinate point, flattened block by block.
#[derive(Debug, Clone)]
struct PointSample {
    u: Vec<f64>,
    v: Vec<f64>,
    du: Vec<f64>,
    lap: Vec<f64>,
    yv: Vec<f64>,
}

fn flatten_u(u: &CurvatureState) -> Vec<f64> {
    let mut out = u.riemann.clone();
    out.push(u.phi);
    out.extend(&u.dphi);
    out.extend(&u.ddphi);
    out
}

/// Lengths of the four `u` blocks: `R`, `φ`, `∇φ`, `∇²φ`.
fn u_blocks(n: usize) -> [usize; 4] {
    [n.pow(4), 1, n, n * n]
}

fn v_blocks(n: usize) -> [usize; 8] {
    let z = FrameState::zeros(n, 1.0, &vec![0.0; n]);
    let b = z.blocks();
    std::array::from_fn(|i| b[i].len())
}

fn block_max<const K: usize>(lens: [usize; K], d: &[f64]) -> [f64; K] {
    let mut out = [0.0; K];
    let mut off = 0;
    for (o, len) in out.iter_mut().zip(lens) {
        *o = d[off..off + len].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        off += len;
    }
    out
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Frame with `e_i^β` taken from the columns of `frame`.
fn chart_frame(n: usize, frame: &DMatrix<f64>, template: &FrameState) -> FrameState {
    let mut s = template.clone();
    for i in 0..n {
        for b in 0..n {
            s.e[i * n + b] = frame[(b, i)];
        }
    }
    s
}

struct Prepared<'a> {
    sol: &'a Solution,
    basis: DMatrix<f64>,
    chart: Box<dyn NormalChart>,
}

impl Prepared<'_> {
    /// Samples along the ray `θ` at `radii`.
    fn ray(&self, theta: &[f64], radii: &[f64], opts: &PipelineOptions) -> Result<Vec<PointSample>> {
        let n = self.sol.field.dim();
        let r0 = radii.iter().copied().fold(f64::INFINITY, f64::min) / 2.0;
        let states = integrate_frame_in_chart(self.chart.as_ref(), theta, radii, r0, &opts.frame)?;
        radii
            .iter()
            .zip(states)
            .map(|(&r, v)| {
                let x: Vec<f64> = theta.iter().map(|t| t * r).collect();
                let w = &self.basis * DMatrix::from_column_slice(n, 1, &x);
                let e = exp_map(&self.sol.field, &self.sol.p0, w.as_slice(), &self.basis, opts.exp_steps)?;
                let fr = chart_frame(n, &e.transported, &v);
                let u = assemble_u(&self.sol.field, &self.sol.phi, &fr, &e.point)?;
                let (du, lap, yv) = if opts.inequality {
                    let d = assemble_du(&self.sol.field, &self.sol.phi, &fr, &e.point)?;
                    let l = frame_laplacian(&self.sol.field, &self.sol.phi, &fr, &e.point)?;
                    let yv = frame_ode_rhs(&v, &RadialData::normal(&x), &self.chart.curvature(&x)?).to_vec();
                    let mut lap = l.riemann;
                    lap.push(l.phi);
                    lap.extend(l.dphi);
                    lap.extend(l.ddphi);
                    ([d.riemann, d.phi, d.dphi, d.ddphi].concat(), lap, yv)
                } else {
                    (Vec::new(), Vec::new(), Vec::new())
                };
                Ok(PointSample {
                    u: flatten_u(&u),
                    v: v.to_vec(),
                    du,
                    lap,
                    yv,
                })
            })
            .collect()
    }

    fn origin(&self) -> Result<Vec<f64>> {
        let n = self.sol.field.dim();
        let mut dir = vec![0.0; n];
        dir[0] = 1.0;
        let fr = chart_frame(n, &self.basis, &FrameState::zeros(n, 0.0, &dir));
        Ok(flatten_u(&assemble_u(&self.sol.field, &self.sol.phi, &fr, &self.sol.p0)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceRow {
    pub r: f64,
    pub direction: usize,
    /// Max of `|δu|` per block: `R`, `φ`, `∇φ`, `∇²φ`.
    pub du_blocks: [f64; 4],
    /// Max of `|δv|` per frame-state block.
    pub dv_blocks: [f64; 8],
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceReport {
    pub n: usize,
    pub points: usize,
    pub max_du: [f64; 4],
    pub max_dv: [f64; 8],
    /// `δu` at the base point, all blocks flattened.
    pub origin_du: Vec<f64>,
    pub origin_blocks: [f64; 4],
    pub order_u: VanishingEstimate,
    pub order_v: VanishingEstimate,
    pub order_checked: u32,
    /// Both differences vanish to at least the checked order.
    pub agrees_to_order: bool,
    /// Both differences vanish to infinite order within resolution.
    pub uc_hypothesis: bool,
    /// `max |Δδu| / (|δu| + |∇δu| + |δv|)` over points with a nonzero denominator.
    pub constant_u: Option<f64>,
    /// `max |Y(δv)| / (|δv| + |δu| + |∇δu|)`.
    pub constant_v: Option<f64>,
    pub rows: Vec<DifferenceRow>,
}

impl DifferenceReport {
    pub fn max_du_total(&self) -> f64 {
        self.max_du.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_dv_total(&self) -> f64 {
        self.max_dv.iter().copied().fold(0.0, f64::max)
    }

    /// The first order with a nonzero difference at the base point, if any.
    pub fn first_disagreement(&self) -> Option<u32> {
        if sup(&self.origin_du) > 0.0 {
            Some(0)
        } else if !self.uc_hypothesis {
            Some(self.order_u.order.min(self.order_v.order).floor() as u32)
        } else {
            None
        }
    }
}

fn check_on_shell(sol: &Solution, potential: &Potential, lambda: CosmologicalConstant) -> Result<()> {
    let sys = EinsteinScalar::new(sol.field.clone(), sol.phi.clone(), potential.clone(), lambda);
    let defect = sys.on_shell_defect(&sol.p0)?;
    if defect > ON_SHELL_TOL {
        return Err(Error::OffShell {
            what: "difference pipeline input",
            value: defect,
            tol: ON_SHELL_TOL,
        });
    }
    Ok(())
}

fn ratio(num: f64, den: f64, floor: f64) -> Option<f64> {
    (den > floor).then_some(num / den)
}

/// Builds `δu = u_a − u_b`, `δv = v_a − v_b` on the graded ball of radius
/// `opts.radius` and at the vanishing radii, with both solutions expressed
/// in their own normal coordinates and transported frames.
pub fn difference_pipeline(
    a: &Solution,
    b: &Solution,
    potential: &Potential,
    lambda: CosmologicalConstant,
    opts: &PipelineOptions,
) -> Result<DifferenceReport> {
    let n = a.field.dim();
    if b.field.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.field.dim(),
        });
    }
    check_on_shell(a, potential, lambda)?;
    check_on_shell(b, potential, lambda)?;
    let prep = |s| -> Result<Prepared<'_>> {
        let basis = Solution::frame_at_base(s)?;
        Ok(Prepared {
            chart: s.chart(&basis)?,
            sol: s,
            basis,
        })
    };
    let (pa, pb) = (prep(a)?, prep(b)?);
    let grid = QuadratureGrid::new(n, opts.radius, opts.levels, opts.nodes, opts.angular);
    let directions: Vec<Vec<f64>> = sphere_rule(n, opts.angular).into_iter().map(|(d, _)| d).collect();
    let grid_radii: Vec<f64> = grid.radial.iter().map(|&(r, _, _)| r).collect();
    let mut radii: Vec<f64> = grid_radii.iter().chain(&opts.vanishing_radii).copied().collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let per_ray: Vec<(Vec<PointSample>, Vec<PointSample>)> = directions
        .par_iter()
        .map(|d| Ok((pa.ray(d, &radii, opts)?, pb.ray(d, &radii, opts)?)))
        .collect::<Result<_>>()?;
    let (ub, vb) = (u_blocks(n), v_blocks(n));
    let diff = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p - q).collect() };
    let mut rows = Vec::new();
    let (mut max_du, mut max_dv) = ([0.0; 4], [0.0; 8]);
    let (mut cu, mut cv): (Option<f64>, Option<f64>) = (None, None);
    for (di, (sa, sb)) in per_ray.iter().enumerate() {
        for (ri, &r) in radii.iter().enumerate() {
            let du = diff(&sa[ri].u, &sb[ri].u);
            let dv = diff(&sa[ri].v, &sb[ri].v);
            let (bu, bv) = (block_max(ub, &du), block_max(vb, &dv));
            if r <= opts.radius {
                for (m, x) in max_du.iter_mut().zip(bu) {
                    *m = f64::max(*m, x);
                }
                for (m, x) in max_dv.iter_mut().zip(bv) {
                    *m = f64::max(*m, x);
                }
            }
            if opts.inequality {
                let (nu, nv) = (sup(&du), sup(&dv));
                let ngrad = sup(&diff(&sa[ri].du, &sb[ri].du));
                let nlap = sup(&diff(&sa[ri].lap, &sb[ri].lap));
                let nyv = sup(&diff(&sa[ri].yv, &sb[ri].yv));
                if let Some(c) = ratio(nlap, nu + ngrad + nv, opts.noise_floor) {
                    cu = Some(cu.map_or(c, |m| m.max(c)));
                }
                if let Some(c) = ratio(nyv, nv + nu + ngrad, opts.noise_floor) {
                    cv = Some(cv.map_or(c, |m| m.max(c)));
                }
            }
            if grid_radii.contains(&r) {
                rows.push(DifferenceRow {
                    r,
                    direction: di,
                    du_blocks: bu,
                    dv_blocks: bv,
                    du,
                    dv,
                });
            }
        }
    }
    let lookup = |x: &[f64], which: usize| -> Result<f64> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ri = radii.iter().position(|&q| (q - r).abs() <= 1e-14 * r).expect("sampled radius");
        let di = directions
            .iter()
            .position(|d| d.iter().zip(x).all(|(p, q)| (p * r - q).abs() <= 1e-14))
            .expect("sampled direction");
        let (sa, sb) = &per_ray[di];
        Ok(if which == 0 {
            sup(&diff(&sa[ri].u, &sb[ri].u))
        } else {
            sup(&diff(&sa[ri].v, &sb[ri].v))
        })
    };
    let order_u = vanishing_order_estimate(|x| lookup(x, 0), &directions, &opts.vanishing_radii, opts.noise_floor)?;
    let order_v = vanishing_order_estimate(|x| lookup(x, 1), &directions, &opts.vanishing_radii, opts.noise_floor)?;
    let origin_du = diff(&pa.origin()?, &pb.origin()?);
    let m = opts.order_checked as f64;
    Ok(DifferenceReport {
        n,
        points: rows.len(),
        max_du,
        max_dv,
        origin_blocks: block_max(ub, &origin_du),
        origin_du,
        agrees_to_order: order_u.at_least(m) && order_v.at_least(m),
        uc_hypothesis: order_u.infinite && order_v.infinite,
        order_u,
        order_v,
        order_checked: opts.order_checked,
        constant_u: cu,
        constant_v: cv,
        rows,
    })
}
