//! Levi-Civita connection and curvature from metric jets.
//!
//! Conventions: `Γ^k_{ij}` is stored with slots `[k, i, j]`;
//! `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z` and
//! `R_{ijkl} = g(R(∂_i,∂_j)∂_k, ∂_l)`, so a space of constant curvature `K`
//! has `R_{ijkl} = K(g_{il}g_{jk} − g_{ik}g_{jl})` and `Ric_{jk} = g^{il}R_{ijkl}`.
//! Covariant derivatives put the new index first: `(∇T)_{m…} = ∇_m T_{…}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::metric::{Backend, MetricField, Preset};
use crate::tensor::{MetricAtPoint, Tensor, Variance};

use Variance::{Lower, Upper};

/// A tensor field given by its values on coordinate jets.
pub type TensorField<'a> = dyn Fn(&[Jet]) -> Result<Tensor<Jet>> + 'a;

/// Inverse of a matrix of jets, by the terminating Neumann series around its value.
pub fn invert_jet_matrix(n: usize, m: &[Jet], degree: usize) -> Result<Vec<Jet>> {
    let m0 = DMatrix::from_fn(n, n, |i, j| m[i * n + j].value());
    let inv0 = m0.clone().try_inverse().ok_or(Error::MetricNotPositiveDefinite)?;
    let space = m[0].space();
    let cst = |v: f64| Jet::constant(space, v);
    // E = −inv0 · (M − M0), which has no constant term
    let mut e = vec![cst(0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = cst(0.0);
            for k in 0..n {
                let dm = m[k * n + j].add_scalar(-m0[(k, j)]);
                acc = acc.add_jet(&dm.scale(-inv0[(i, k)]));
            }
            e[i * n + j] = acc.truncate(degree);
        }
    }
    // S = I + E + E² + … + E^degree, evaluated as I + E(I + E(…))
    let ident = |i: usize, j: usize| cst(if i == j { 1.0 } else { 0.0 });
    let mut s: Vec<Jet> = (0..n * n).map(|k| ident(k / n, k % n)).collect();
    for _ in 0..degree {
        let mut next = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ident(i, j);
                for k in 0..n {
                    acc = acc.add_jet(&e[i * n + k].mul_jet(&s[k * n + j]));
                }
                next.push(acc);
            }
        }
        s = next;
    }
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = cst(0.0);
            for k in 0..n {
                acc = acc.add_jet(&s[i * n + k].scale(inv0[(k, j)]));
            }
            out.push(acc.truncate(degree));
        }
    }
    Ok(out)
}

/// Metric, connection and curvature expanded around one point.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    p: Vec<f64>,
    degree: usize,
    metric: MetricAtPoint,
    g: Tensor<Jet>,
    g_inv: Tensor<Jet>,
    christoffel: Tensor<Jet>,
    riemann: Option<Tensor<Jet>>,
}

impl LocalGeometry {
    /// Expands the metric to `degree` (1..=4); curvature needs at least 2.
    pub fn new(field: &MetricField, p: &[f64], degree: usize) -> Result<LocalGeometry> {
        LocalGeometry::build(field, p, degree, true)
    }

    /// Metric and connection only; [`LocalGeometry::riemann`] reports an error.
    pub fn connection(field: &MetricField, p: &[f64], degree: usize) -> Result<LocalGeometry> {
        LocalGeometry::build(field, p, degree, false)
    }

    fn build(field: &MetricField, p: &[f64], degree: usize, curvature: bool) -> Result<LocalGeometry> {
        if degree == 0 {
            return Err(Error::InsufficientOrder {
                requested: 1,
                supported: 0,
            });
        }
        let n = field.dim();
        let gj = field.metric_jet(p, degree)?;
        let metric = MetricAtPoint::from_components(n, &gj.iter().map(|c| c.value()).collect::<Vec<_>>())?;
        let ginv = invert_jet_matrix(n, &gj, degree)?;
        let g = Tensor::from_vec(n, vec![Lower, Lower], gj)?;
        let g_inv = Tensor::from_vec(n, vec![Upper, Upper], ginv)?;
        // first kind: Γ_{ijl} = ½(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})
        let dg: Vec<Vec<Jet>> = (0..n)
            .map(|m| g.components().iter().map(|c| c.diff(m)).collect())
            .collect();
        let first = Tensor::from_fn(n, vec![Lower; 3], |x| {
            let (i, j, l) = (x[0], x[1], x[2]);
            dg[i][j * n + l]
                .add_jet(&dg[j][i * n + l])
                .sub_jet(&dg[l][i * n + j])
                .scale(0.5)
        });
        let christoffel = Tensor::from_fn(n, vec![Upper, Lower, Lower], |x| {
            let (k, i, j) = (x[0], x[1], x[2]);
            let mut acc = g_inv.get(&[k, 0]).mul_jet(first.get(&[i, j, 0]));
            for l in 1..n {
                acc = acc.add_jet(&g_inv.get(&[k, l]).mul_jet(first.get(&[i, j, l])));
            }
            acc
        });
        let riemann = if curvature && degree >= 2 {
            Some(riemann_from_christoffel(&g, &christoffel))
        } else {
            None
        };
        Ok(LocalGeometry {
            p: p.to_vec(),
            degree,
            metric,
            g,
            g_inv,
            christoffel,
            riemann,
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn point(&self) -> &[f64] {
        &self.p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn metric(&self) -> &MetricAtPoint {
        &self.metric
    }

    pub fn g(&self) -> &Tensor<Jet> {
        &self.g
    }

    pub fn g_inv(&self) -> &Tensor<Jet> {
        &self.g_inv
    }

    /// `Γ^k_{ij}` as jets of degree `degree − 1`.
    pub fn christoffel(&self) -> &Tensor<Jet> {
        &self.christoffel
    }

    /// `R_{ijkl}` as jets of degree `degree − 2`.
    pub fn riemann(&self) -> Result<&Tensor<Jet>> {
        self.riemann.as_ref().ok_or(Error::InsufficientOrder {
            requested: 2,
            supported: self.degree,
        })
    }

    /// `Ric_{jk} = g^{il} R_{ijkl}`.
    pub fn ricci(&self) -> Result<Tensor<Jet>> {
        self.riemann()?.raise_lower_with(0, &self.g, &self.g_inv)?.contract(0, 3)
    }

    pub fn scalar_curvature(&self) -> Result<Jet> {
        let ric = self.ricci()?.raise_lower_with(0, &self.g, &self.g_inv)?;
        Ok(ric.contract(0, 1)?.into_components().remove(0))
    }

    pub fn raise(&self, t: &Tensor<Jet>, slot: usize) -> Result<Tensor<Jet>> {
        if t.variance().get(slot) != Some(&Lower) {
            return Err(Error::ShapeMismatch(format!("slot {slot} is not a lower slot")));
        }
        t.raise_lower_with(slot, &self.g, &self.g_inv)
    }

    pub fn lower(&self, t: &Tensor<Jet>, slot: usize) -> Result<Tensor<Jet>> {
        if t.variance().get(slot) != Some(&Upper) {
            return Err(Error::ShapeMismatch(format!("slot {slot} is not an upper slot")));
        }
        t.raise_lower_with(slot, &self.g, &self.g_inv)
    }

    /// `∇_m T`, new slot first. The result has degree one less than the
    /// smaller of `T`'s degree and the connection's.
    pub fn covariant_derivative(&self, t: &Tensor<Jet>) -> Result<Tensor<Jet>> {
        let n = self.dim();
        if t.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: t.dim(),
            });
        }
        let min_degree = t.components().iter().map(|c| c.degree()).min().unwrap_or(0);
        if min_degree == 0 {
            return Err(Error::InsufficientOrder {
                requested: 1,
                supported: 0,
            });
        }
        let rank = t.rank();
        let mut variance = vec![Lower];
        variance.extend_from_slice(t.variance());
        let gam = &self.christoffel;
        let mut src = vec![0usize; rank];
        Ok(Tensor::from_fn(n, variance, |idx| {
            let m = idx[0];
            let a = &idx[1..];
            let mut acc = t.get(a).diff(m);
            for s in 0..rank {
                src.copy_from_slice(a);
                for c in 0..n {
                    src[s] = c;
                    let term = match t.variance()[s] {
                        Upper => gam.get(&[a[s], m, c]).mul_jet(t.get(&src)),
                        Lower => gam.get(&[c, m, a[s]]).mul_jet(t.get(&src)).scale(-1.0),
                    };
                    acc = acc.add_jet(&term);
                }
            }
            acc
        }))
    }

    /// `Δ_g T = g^{ab} ∇_a ∇_b T`.
    pub fn laplacian(&self, t: &Tensor<Jet>) -> Result<Tensor<Jet>> {
        let dd = self.covariant_derivative(&self.covariant_derivative(t)?)?;
        self.raise(&dd, 0)?.contract(0, 1)
    }
}

fn riemann_from_christoffel(g: &Tensor<Jet>, gam: &Tensor<Jet>) -> Tensor<Jet> {
    let n = g.dim();
    // R^m_{kij}-style endomorphism: (R(∂_i,∂_j)∂_k)^m
    let endo = Tensor::from_fn(n, vec![Lower, Lower, Lower, Upper], |x| {
        let (i, j, k, m) = (x[0], x[1], x[2], x[3]);
        let mut acc = gam.get(&[m, j, k]).diff(i).sub_jet(&gam.get(&[m, i, k]).diff(j));
        for p in 0..n {
            acc = acc
                .add_jet(&gam.get(&[m, i, p]).mul_jet(gam.get(&[p, j, k])))
                .sub_jet(&gam.get(&[m, j, p]).mul_jet(gam.get(&[p, i, k])));
        }
        acc
    });
    Tensor::from_fn(n, vec![Lower; 4], |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        let mut acc = g.get(&[l, 0]).mul_jet(endo.get(&[i, j, k, 0]));
        for m in 1..n {
            acc = acc.add_jet(&g.get(&[l, m]).mul_jet(endo.get(&[i, j, k, m])));
        }
        acc
    })
}

/// `Γ^k_{ij}` at `p`.
pub fn christoffel(field: &MetricField, p: &[f64]) -> Result<Tensor<f64>> {
    Ok(LocalGeometry::connection(field, p, 1)?.christoffel().values())
}

/// All-lower Riemann tensor at `p`.
pub fn riemann(field: &MetricField, p: &[f64]) -> Result<Tensor<f64>> {
    Ok(LocalGeometry::new(field, p, 2)?.riemann()?.values())
}

pub fn ricci(field: &MetricField, p: &[f64]) -> Result<Tensor<f64>> {
    Ok(LocalGeometry::new(field, p, 2)?.ricci()?.values())
}

pub fn scalar_curvature(field: &MetricField, p: &[f64]) -> Result<f64> {
    Ok(LocalGeometry::new(field, p, 2)?.scalar_curvature()?.value())
}

/// `∇T` at `p` for a field given on jets.
pub fn covariant_derivative(t: &TensorField<'_>, field: &MetricField, p: &[f64]) -> Result<Tensor<f64>> {
    let geo = LocalGeometry::new(field, p, 1)?;
    let tj = t(&Jet::seed(p, 1))?;
    Ok(geo.covariant_derivative(&tj)?.values())
}

/// `Δ_g T` at `p` for a field given on jets.
pub fn laplace_beltrami(t: &TensorField<'_>, field: &MetricField, p: &[f64]) -> Result<Tensor<f64>> {
    let geo = LocalGeometry::new(field, p, 2)?;
    let tj = t(&Jet::seed(p, 2))?;
    Ok(geo.laplacian(&tj)?.values())
}

/// Closed-form curvature of a space of constant curvature `k` for a metric `g`.
pub fn constant_curvature_riemann<S: Scalar>(g: &Tensor<S>, k: f64) -> Tensor<S> {
    let n = g.dim();
    Tensor::from_fn(n, vec![Lower; 4], |x| {
        let (i, j, kk, l) = (x[0], x[1], x[2], x[3]);
        g.get(&[i, l])
            .mul_s(g.get(&[j, kk]))
            .sub_s(&g.get(&[i, kk]).mul_s(g.get(&[j, l])))
            .scale_s(k)
    })
}


/// Christoffel symbols at a plain point, flat `[(k·n + i)·n + j]`, and when
/// asked their first partials `[m·n³ + (k·n + i)·n + j]`. Conformal presets
/// with the analytic backend use the closed form of the conformal factor;
/// everything else goes through metric jets.
pub fn connection_values(field: &MetricField, x: &[f64], partials: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let n = field.dim();
    let n3 = n * n * n;
    let conformal_k = match (field.preset(), field.backend()) {
        (Preset::Euclidean, _) => Some(0.0),
        (Preset::Sphere { k } | Preset::Hyperbolic { k }, Backend::Analytic) => Some(k),
        _ => None,
    };
    let Some(k) = conformal_k else {
        let geo = LocalGeometry::connection(field, x, if partials { 2 } else { 1 })?;
        let c = geo.christoffel().components();
        let vals = c.iter().map(|j| j.value()).collect();
        let d = partials.then(|| (0..n).flat_map(|m| c.iter().map(move |j| j.d1(m))).collect());
        return Ok((vals, d));
    };
    field.check_domain(x)?;
    // Γ^k_{ij} = δ^k_i σ_j + δ^k_j σ_i − δ_{ij} σ_k with σ = −log(1 + K|x|²/4)
    let q = 1.0 + 0.25 * k * x.iter().map(|v| v * v).sum::<f64>();
    let ds: Vec<f64> = x.iter().map(|&xi| -0.5 * k * xi / q).collect();
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut vals = vec![0.0; n3];
    for kk in 0..n {
        for i in 0..n {
            for j in 0..n {
                vals[(kk * n + i) * n + j] = d(kk, i) * ds[j] + d(kk, j) * ds[i] - d(i, j) * ds[kk];
            }
        }
    }
    let dvals = partials.then(|| {
        // σ_{am} = −(K/2)(δ_{am}/q − (K/2) x_a x_m / q²)
        let dds = |a: usize, m: usize| -0.5 * k * (d(a, m) / q - 0.5 * k * x[a] * x[m] / (q * q));
        let mut out = vec![0.0; n * n3];
        for m in 0..n {
            for kk in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        out[m * n3 + (kk * n + i) * n + j] = d(kk, i) * dds(j, m) + d(kk, j) * dds(i, m) - d(i, j) * dds(kk, m);
                    }
                }
            }
        }
        out
    });
    Ok((vals, dvals))
}
