//! Geodesics, parallel transport and the exponential map.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::connection_values;
use crate::metric::MetricField;
use crate::ode::{dopri45, rk4, OdeOptions};
use crate::tensor::{Tensor, Variance};

#[derive(Debug, Clone)]
pub struct GeodesicArc {
    pub base: Vec<f64>,
    pub velocity: Vec<f64>,
    pub params: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

impl GeodesicArc {
    /// `max |g(γ',γ') − 1|` over the samples.
    pub fn speed_drift(&self, field: &MetricField) -> Result<f64> {
        let mut drift: f64 = 0.0;
        for (x, v) in self.positions.iter().zip(&self.velocities) {
            let m = field.metric_at(x)?;
            drift = drift.max((m.inner(v, v) - 1.0).abs());
        }
        Ok(drift)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GeodesicOptions {
    pub ode: OdeOptions,
    /// Number of equally spaced samples in `[0, r_max]`, endpoints included.
    pub samples: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            ode: OdeOptions::default(),
            samples: 11,
        }
    }
}

fn christoffel_at(field: &MetricField, x: &[f64]) -> Result<Vec<f64>> {
    Ok(connection_values(field, x, false)?.0)
}

fn acceleration(c: &[f64], v: &[f64], out: &mut [f64]) {
    let n = v.len();
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += c[(k * n + i) * n + j] * v[i] * v[j];
            }
        }
        *o = -acc;
    }
}

/// Checks `|v|_g = 1` at `p`, renormalizing tiny deviations.
pub fn normalize_unit(field: &MetricField, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: v.len(),
        });
    }
    let m = field.metric_at(p)?;
    let norm = m.inner(v, v).sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotUnitVelocity(norm));
    }
    Ok(v.iter().map(|c| c / norm).collect())
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    if k <= 1 {
        return vec![b];
    }
    (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
}

/// Unit-speed geodesic from `p` with initial velocity `v`, sampled on `[0, r_max]`.
pub fn geodesic(field: &MetricField, p: &[f64], v: &[f64], r_max: f64, opts: &GeodesicOptions) -> Result<GeodesicArc> {
    let n = field.dim();
    let v = normalize_unit(field, p, v)?;
    let mut y0 = p.to_vec();
    y0.extend_from_slice(&v);
    let params = linspace(0.0, r_max, opts.samples);
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let gam = christoffel_at(field, &y[..n])?;
        dy[..n].copy_from_slice(&y[n..]);
        acceleration(&gam, &y[n..], &mut dy[n..]);
        Ok(())
    };
    let tr = dopri45(rhs, 0.0, &y0, r_max, &params, &opts.ode)?;
    Ok(GeodesicArc {
        base: p.to_vec(),
        velocity: v,
        params,
        positions: tr.outputs.iter().map(|y| y[..n].to_vec()).collect(),
        velocities: tr.outputs.iter().map(|y| y[n..].to_vec()).collect(),
    })
}

/// Parallel transport of `t0` (given at the arc's base point) to every arc sample.
/// The geodesic is re-integrated together with the transport equation.
pub fn parallel_transport(field: &MetricField, arc: &GeodesicArc, t0: &Tensor<f64>, opts: &OdeOptions) -> Result<Vec<Tensor<f64>>> {
    let n = field.dim();
    if t0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: t0.dim(),
        });
    }
    let rank = t0.rank();
    let variance = t0.variance().to_vec();
    let m = t0.components().len();
    let mut y0 = arc.base.clone();
    y0.extend_from_slice(&arc.velocity);
    y0.extend_from_slice(t0.components());
    let t_end = arc.params.last().copied().unwrap_or(0.0);
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let g = christoffel_at(field, &y[..n])?;
        let vel = &y[n..2 * n];
        dy[..n].copy_from_slice(vel);
        acceleration(&g, vel, &mut dy[n..2 * n]);
        // A^a_c = Γ^a_{bc} v^b
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for c in 0..n {
                a[i * n + c] = (0..n).map(|b| g[(i * n + b) * n + c] * vel[b]).sum();
            }
        }
        let comps = &y[2 * n..];
        let mut idx = vec![0usize; rank];
        for off in 0..m {
            crate::tensor::unravel(off, n, &mut idx);
            let mut acc = 0.0;
            for s in 0..rank {
                let stride = n.pow((rank - 1 - s) as u32);
                let base = off - idx[s] * stride;
                for c in 0..n {
                    let tc = comps[base + c * stride];
                    acc += match variance[s] {
                        Variance::Upper => -a[idx[s] * n + c] * tc,
                        Variance::Lower => a[c * n + idx[s]] * tc,
                    };
                }
            }
            dy[2 * n + off] = acc;
        }
        Ok(())
    };
    let tr = dopri45(rhs, 0.0, &y0, t_end, &arc.params, opts)?;
    tr.outputs
        .iter()
        .map(|y| Tensor::from_vec(n, variance.clone(), y[2 * n..].to_vec()))
        .collect()
}

/// Endpoint data of `t ↦ exp_p(t w)` at `t = 1`.
#[derive(Debug, Clone)]
pub struct ExpMap {
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
    /// `∂ exp_p(w) / ∂w`, chart components.
    pub jacobian: DMatrix<f64>,
    /// Parallel transports of the supplied vectors, one per column.
    pub transported: DMatrix<f64>,
}

/// Exponential map with its differential (Jacobi fields) and the parallel
/// transport of the columns of `frame`, by `steps` fixed RK4 steps. Fixed
/// steps make the result a smooth function of `w`, which finite differences
/// of the map rely on.
pub fn exp_map(field: &MetricField, p: &[f64], w: &[f64], frame: &DMatrix<f64>, steps: usize) -> Result<ExpMap> {
    let n = field.dim();
    if w.len() != n || p.len() != n || frame.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.len(),
        });
    }
    let nf = frame.ncols();
    // layout: y | y' | J (n×n, row a col α) | J' | E (n×nf)
    let (oj, ojp, oe) = (2 * n, 2 * n + n * n, 2 * n + 2 * n * n);
    let mut y0 = vec![0.0; oe + n * nf];
    y0[..n].copy_from_slice(p);
    y0[n..2 * n].copy_from_slice(w);
    for a in 0..n {
        y0[ojp + a * n + a] = 1.0;
        for c in 0..nf {
            y0[oe + a * nf + c] = frame[(a, c)];
        }
    }
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (gc, dg) = connection_values(field, &y[..n], true)?;
        let dg = dg.expect("partials requested");
        let n3 = n * n * n;
        let vel = &y[n..2 * n];
        dy[..n].copy_from_slice(vel);
        acceleration(&gc, vel, &mut dy[n..2 * n]);
        // A^a_c = Γ^a_{bc} v^b ;  H^a_m = ∂_m Γ^a_{bc} v^b v^c
        let mut a = vec![0.0; n * n];
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for c in 0..n {
                a[i * n + c] = (0..n).map(|b| gc[(i * n + b) * n + c] * vel[b]).sum();
            }
            for mm in 0..n {
                let mut acc = 0.0;
                for b in 0..n {
                    for c in 0..n {
                        acc += dg[mm * n3 + (i * n + b) * n + c] * vel[b] * vel[c];
                    }
                }
                h[i * n + mm] = acc;
            }
        }
        for i in 0..n {
            for al in 0..n {
                dy[oj + i * n + al] = y[ojp + i * n + al];
                let mut acc = 0.0;
                for mm in 0..n {
                    acc -= h[i * n + mm] * y[oj + mm * n + al];
                    acc -= 2.0 * a[i * n + mm] * y[ojp + mm * n + al];
                }
                dy[ojp + i * n + al] = acc;
            }
            for c in 0..nf {
                dy[oe + i * nf + c] = -(0..n).map(|m2| a[i * n + m2] * y[oe + m2 * nf + c]).sum::<f64>();
            }
        }
        Ok(())
    };
    let y = rk4(rhs, 0.0, &y0, 1.0, steps)?;
    Ok(ExpMap {
        point: y[..n].to_vec(),
        velocity: y[n..2 * n].to_vec(),
        jacobian: DMatrix::from_row_slice(n, n, &y[oj..oj + n * n]),
        transported: DMatrix::from_row_slice(n, nf, &y[oe..oe + n * nf]),
    })
}

/// An orthonormal basis at `p` (columns), by Cholesky of the metric:
/// `B = L^{-T}` so that `Bᵀ g B = I`.
pub fn orthonormal_basis(field: &MetricField, p: &[f64]) -> Result<DMatrix<f64>> {
    let m = field.metric_at(p)?;
    let l = m.g().clone().cholesky().ok_or(Error::MetricNotPositiveDefinite)?.l();
    l.transpose().try_inverse().ok_or(Error::MetricNotPositiveDefinite)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_geodesic_is_a_line() {
        let f = MetricField::euclidean(3);
        let v = [0.6, 0.0, 0.8];
        let arc = geodesic(&f, &[1.0, 2.0, 3.0], &v, 2.0, &GeodesicOptions::default()).unwrap();
        for (t, x) in arc.params.iter().zip(&arc.positions) {
            for i in 0..3 {
                assert!((x[i] - ([1.0, 2.0, 3.0][i] + t * v[i])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_unit_velocity() {
        let f = MetricField::euclidean(3);
        let r = geodesic(&f, &[0.0; 3], &[1.0, 1.0, 0.0], 1.0, &GeodesicOptions::default());
        assert!(matches!(r, Err(Error::NotUnitVelocity(_))));
    }

    #[test]
    fn sphere_geodesic_through_origin_is_a_ray() {
        let f = MetricField::sphere(2, 1.0).unwrap();
        let arc = geodesic(&f, &[0.0, 0.0], &[0.6, 0.8], 1.5, &GeodesicOptions::default()).unwrap();
        for x in &arc.positions {
            assert!((0.8 * x[0] - 0.6 * x[1]).abs() < 1e-12);
        }
        // chart radius of geodesic distance d is 2 tan(d/2)
        let end = &arc.positions[arc.positions.len() - 1];
        let r = (end[0] * end[0] + end[1] * end[1]).sqrt();
        assert!((r - 2.0 * 0.75f64.tan()).abs() < 1e-9);
        assert!(arc.speed_drift(&f).unwrap() < 1e-9);
    }

    #[test]
    fn transport_preserves_orthonormality() {
        let f = MetricField::sphere(3, 1.0).unwrap();
        let p = [0.2, -0.1, 0.3];
        let b = orthonormal_basis(&f, &p).unwrap();
        let m0 = f.metric_at(&p).unwrap();
        let v: Vec<f64> = (0..3).map(|i| b[(i, 0)] * 0.6 + b[(i, 2)] * 0.8).collect();
        assert!((m0.inner(&v, &v) - 1.0).abs() < 1e-12);
        let arc = geodesic(&f, &p, &v, 1.0, &GeodesicOptions::default()).unwrap();
        let frames: Vec<Vec<Tensor<f64>>> = (0..3)
            .map(|c| {
                let e = Tensor::from_vec(3, vec![Variance::Upper], b.column(c).iter().copied().collect()).unwrap();
                parallel_transport(&f, &arc, &e, &OdeOptions::default()).unwrap()
            })
            .collect();
        for (s, x) in arc.positions.iter().enumerate() {
            let m = f.metric_at(x).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let ip = m.inner(frames[i][s].components(), frames[j][s].components());
                    assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-9);
                }
            }
        }
        // the velocity transports to itself
        let vt = parallel_transport(&f, &arc, &Tensor::from_vec(3, vec![Variance::Upper], v.clone()).unwrap(), &OdeOptions::default())
            .unwrap();
        for (s, vel) in arc.velocities.iter().enumerate() {
            for i in 0..3 {
                assert!((vt[s].components()[i] - vel[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exp_map_jacobian_matches_finite_differences() {
        let f = MetricField::hyperbolic(3, -1.0).unwrap();
        let p = [0.1, 0.2, -0.1];
        let w = [0.3, -0.2, 0.25];
        let id = DMatrix::identity(3, 3);
        let e = exp_map(&f, &p, &w, &id, 200).unwrap();
        let h = 1e-5;
        for al in 0..3 {
            let mut wp = w;
            let mut wm = w;
            wp[al] += h;
            wm[al] -= h;
            let a = exp_map(&f, &p, &wp, &id, 200).unwrap().point;
            let b = exp_map(&f, &p, &wm, &id, 200).unwrap().point;
            for i in 0..3 {
                assert!(((a[i] - b[i]) / (2.0 * h) - e.jacobian[(i, al)]).abs() < 1e-8);
            }
        }
    }
}
