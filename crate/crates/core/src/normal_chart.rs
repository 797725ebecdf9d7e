//! Geodesic normal coordinates around a base point, as seen by the frame ODE:
//! the metric and the coordinate components of `R_{abcd}` and `∂_e R_{abcd}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geodesic::{exp_map, orthonormal_basis};
use crate::geometry::{constant_curvature_riemann, riemann, LocalGeometry};
use crate::metric::{MetricField, Preset};
use crate::tensor::{MetricAtPoint, Tensor, Variance};

/// Riemann components `[((a·n + b)·n + c)·n + d]` and their partials
/// `[e·n⁴ + …]` in normal coordinates.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub riemann: Vec<f64>,
    pub d_riemann: Vec<f64>,
}

pub trait NormalChart: Send + Sync {
    fn dim(&self) -> usize;
    fn metric(&self, x: &[f64]) -> Result<MetricAtPoint>;
    fn curvature(&self, x: &[f64]) -> Result<CurvatureSample>;
}

/// The space form of curvature `k`, in closed form.
#[derive(Debug, Clone)]
pub struct SpaceFormChart {
    k: f64,
    field: MetricField,
}

impl SpaceFormChart {
    pub fn new(n: usize, k: f64) -> Result<SpaceFormChart> {
        Ok(SpaceFormChart {
            k,
            field: MetricField::normal_space_form(n, k)?,
        })
    }

    pub fn field(&self) -> &MetricField {
        &self.field
    }
}

impl NormalChart for SpaceFormChart {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn metric(&self, x: &[f64]) -> Result<MetricAtPoint> {
        self.field.metric_at(x)
    }

    fn curvature(&self, x: &[f64]) -> Result<CurvatureSample> {
        let n = self.dim();
        let g = Tensor::from_vec(n, vec![Variance::Lower; 2], self.field.metric_jet(x, 1)?)?;
        let r = constant_curvature_riemann(&g, self.k);
        let comps = r.components();
        Ok(CurvatureSample {
            riemann: comps.iter().map(|c| c.value()).collect(),
            d_riemann: (0..n).flat_map(|e| comps.iter().map(move |c| c.d1(e))).collect(),
        })
    }
}

/// A metric field that is already written in normal coordinates around the
/// origin; curvature and its partials come from third-order metric jets.
#[derive(Debug, Clone)]
pub struct JetChart {
    field: MetricField,
}

impl JetChart {
    pub fn new(field: MetricField) -> JetChart {
        JetChart { field }
    }
}

impl NormalChart for JetChart {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn metric(&self, x: &[f64]) -> Result<MetricAtPoint> {
        self.field.metric_at(x)
    }

    fn curvature(&self, x: &[f64]) -> Result<CurvatureSample> {
        let n = self.dim();
        let geo = LocalGeometry::new(&self.field, x, 3)?;
        let comps = geo.riemann()?.components();
        Ok(CurvatureSample {
            riemann: comps.iter().map(|c| c.value()).collect(),
            d_riemann: (0..n).flat_map(|e| comps.iter().map(move |c| c.d1(e))).collect(),
        })
    }
}

/// Normal coordinates built numerically from the exponential map of an
/// arbitrary chart: `y = exp_{p0}(B x)` with `B` orthonormal at `p0`.
/// Curvature is pulled back through `∂y/∂x`; its partials use a fourth-order
/// central stencil of step `h`.
#[derive(Debug, Clone)]
pub struct ExpChart {
    field: MetricField,
    p0: Vec<f64>,
    basis: DMatrix<f64>,
    steps: usize,
    h: f64,
}

impl ExpChart {
    pub fn new(field: MetricField, p0: &[f64]) -> Result<ExpChart> {
        let basis = orthonormal_basis(&field, p0)?;
        Ok(ExpChart {
            field,
            p0: p0.to_vec(),
            basis,
            steps: 64,
            h: 1e-3,
        })
    }

    /// Replaces the orthonormal basis at `p0` (columns).
    pub fn with_basis(mut self, basis: DMatrix<f64>) -> ExpChart {
        self.basis = basis;
        self
    }

    pub fn with_resolution(mut self, steps: usize, h: f64) -> ExpChart {
        self.steps = steps;
        self.h = h;
        self
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Chart point and `∂y/∂x` at normal coordinates `x`.
    pub fn chart_point(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let n = self.field.dim();
        let w = &self.basis * DMatrix::from_column_slice(n, 1, x);
        let e = exp_map(&self.field, &self.p0, w.as_slice(), &DMatrix::zeros(n, 0), self.steps)?;
        Ok((e.point, e.jacobian * &self.basis))
    }

    fn pulled_back_riemann(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let (y, m) = self.chart_point(x)?;
        let r = riemann(&self.field, &y)?;
        let mats: Vec<Vec<f64>> = (0..4).map(|_| (0..n * n).map(|k| m[(k % n, k / n)]).collect()).collect();
        Ok(transform4(n, r.components(), [&mats[0], &mats[1], &mats[2], &mats[3]]))
    }
}

impl NormalChart for ExpChart {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn metric(&self, x: &[f64]) -> Result<MetricAtPoint> {
        let (y, m) = self.chart_point(x)?;
        let g = self.field.metric_at(&y)?;
        let gn = m.transpose() * g.g() * &m;
        MetricAtPoint::new((&gn + gn.transpose()) * 0.5)
    }

    fn curvature(&self, x: &[f64]) -> Result<CurvatureSample> {
        let n = self.dim();
        let riemann = self.pulled_back_riemann(x)?;
        let n4 = riemann.len();
        let mut d_riemann = vec![0.0; n * n4];
        for e in 0..n {
            for (s, w) in [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)] {
                let mut xs = x.to_vec();
                xs[e] += s * self.h;
                let r = self.pulled_back_riemann(&xs)?;
                for (d, v) in d_riemann[e * n4..(e + 1) * n4].iter_mut().zip(&r) {
                    *d += w * v / self.h;
                }
            }
        }
        Ok(CurvatureSample { riemann, d_riemann })
    }
}

/// Applies a matrix to every slot of a rank-4 array:
/// `out[i0..i3] = Σ M0[i0·n+a] M1[i1·n+b] M2[i2·n+c] M3[i3·n+d] T[a,b,c,d]`.
pub fn transform4(n: usize, t: &[f64], m: [&[f64]; 4]) -> Vec<f64> {
    let mut cur = t.to_vec();
    let mut next = vec![0.0; cur.len()];
    for (slot, mat) in m.iter().enumerate() {
        let stride = n.pow(3 - slot as u32);
        for off in 0..cur.len() {
            let i = (off / stride) % n;
            let base = off - i * stride;
            let mut acc = 0.0;
            for a in 0..n {
                acc += mat[i * n + a] * cur[base + a * stride];
            }
            next[off] = acc;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// The normal chart the frame ODE should use for `field` around `p0`:
/// closed form for constant-curvature presets, exponential map otherwise.
pub fn normal_chart_for(field: &MetricField, p0: &[f64]) -> Result<Box<dyn NormalChart>> {
    field.check_domain(p0)?;
    match field.preset() {
        Preset::Custom => Ok(Box::new(ExpChart::new(field.clone(), p0)?)),
        preset => {
            let k = preset.constant_curvature().ok_or_else(|| Error::InvalidParameter("preset without curvature".into()))?;
            Ok(Box::new(SpaceFormChart::new(field.dim(), k)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_with_identity_is_identity() {
        let n = 3;
        let t: Vec<f64> = (0..81).map(|k| k as f64 * 0.1 - 2.0).collect();
        let id: Vec<f64> = (0..9).map(|k| if k / 3 == k % 3 { 1.0 } else { 0.0 }).collect();
        assert_eq!(transform4(n, &t, [&id, &id, &id, &id]), t);
    }

    #[test]
    fn exp_chart_agrees_with_closed_form() {
        let conf = MetricField::sphere(3, 1.0).unwrap();
        let exp = ExpChart::new(conf, &[0.0; 3]).unwrap();
        let closed = SpaceFormChart::new(3, 1.0).unwrap();
        let x = [0.2, -0.1, 0.25];
        let a = exp.metric(&x).unwrap();
        let b = closed.metric(&x).unwrap();
        assert!((a.g() - b.g()).amax() < 1e-9);
        let ca = exp.curvature(&x).unwrap();
        let cb = closed.curvature(&x).unwrap();
        let err = ca.riemann.iter().zip(&cb.riemann).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        assert!(err < 1e-9, "{err}");
        let derr = ca.d_riemann.iter().zip(&cb.d_riemann).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        assert!(derr < 1e-6, "{derr}");
    }

    #[test]
    fn jet_chart_agrees_with_closed_form() {
        let jet = JetChart::new(MetricField::normal_space_form(3, -1.0).unwrap());
        let closed = SpaceFormChart::new(3, -1.0).unwrap();
        let x = [0.3, 0.1, -0.2];
        let (a, b) = (jet.curvature(&x).unwrap(), closed.curvature(&x).unwrap());
        for (u, v) in a.riemann.iter().zip(&b.riemann).chain(a.d_riemann.iter().zip(&b.d_riemann)) {
            assert!((u - v).abs() < 1e-11);
        }
    }
}
