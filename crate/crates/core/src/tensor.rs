//! Dense tensors with explicit variance tracking.
//!
//! Components are stored row-major: slot 0 is the slowest index. Contraction
//! is only allowed between an upper and a lower slot; moving indices with the
//! metric is always an explicit [`Tensor::raise_lower`] call.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::Scalar;

/// Default tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variance {
    Upper,
    Lower,
}

impl Variance {
    pub fn flip(self) -> Variance {
        match self {
            Variance::Upper => Variance::Lower,
            Variance::Lower => Variance::Upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S = f64> {
    dim: usize,
    variance: Vec<Variance>,
    comps: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    /// Tensor with every component set to `fill`.
    pub fn filled(dim: usize, variance: Vec<Variance>, fill: S) -> Tensor<S> {
        let len = dim.pow(variance.len() as u32);
        Tensor {
            dim,
            variance,
            comps: vec![fill; len],
        }
    }

    pub fn from_fn(dim: usize, variance: Vec<Variance>, mut f: impl FnMut(&[usize]) -> S) -> Tensor<S> {
        let rank = variance.len();
        let len = dim.pow(rank as u32);
        let mut idx = vec![0usize; rank];
        let mut comps = Vec::with_capacity(len);
        for off in 0..len {
            unravel(off, dim, &mut idx);
            comps.push(f(&idx));
        }
        Tensor { dim, variance, comps }
    }

    pub fn from_vec(dim: usize, variance: Vec<Variance>, comps: Vec<S>) -> Result<Tensor<S>> {
        let len = dim.pow(variance.len() as u32);
        if comps.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "{} components for dim {} rank {}",
                comps.len(),
                dim,
                variance.len()
            )));
        }
        Ok(Tensor { dim, variance, comps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn components(&self) -> &[S] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [S] {
        &mut self.comps
    }

    pub fn into_components(self) -> Vec<S> {
        self.comps
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        &self.comps[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let o = self.offset(idx);
        self.comps[o] = v;
    }

    pub fn map<T: Scalar>(&self, f: impl FnMut(&S) -> T) -> Tensor<T> {
        Tensor {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    /// Component values (the jet value for jet tensors).
    pub fn values(&self) -> Tensor<f64> {
        self.map(|c| c.value())
    }

    fn same_shape(&self, other: &Tensor<S>, what: &str) -> Result<()> {
        if self.dim != other.dim || self.variance != other.variance {
            return Err(Error::ShapeMismatch(format!(
                "{what}: dim {} {:?} vs dim {} {:?}",
                self.dim, self.variance, other.dim, other.variance
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor<S>) -> Result<Tensor<S>> {
        self.same_shape(other, "add")?;
        Ok(Tensor {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add_s(b)).collect(),
        })
    }

    pub fn sub(&self, other: &Tensor<S>) -> Result<Tensor<S>> {
        self.same_shape(other, "sub")?;
        Ok(Tensor {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub_s(b)).collect(),
        })
    }

    pub fn scale(&self, a: f64) -> Tensor<S> {
        self.map(|c| c.scale_s(a))
    }

    /// Tensor product; slots of `self` come first.
    pub fn outer(&self, other: &Tensor<S>) -> Result<Tensor<S>> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut variance = self.variance.clone();
        variance.extend_from_slice(&other.variance);
        let mut comps = Vec::with_capacity(self.comps.len() * other.comps.len());
        for a in &self.comps {
            for b in &other.comps {
                comps.push(a.mul_s(b));
            }
        }
        Ok(Tensor {
            dim: self.dim,
            variance,
            comps,
        })
    }

    /// Sums over a paired upper/lower slot, removing both.
    pub fn contract(&self, slot_a: usize, slot_b: usize) -> Result<Tensor<S>> {
        let rank = self.rank();
        for s in [slot_a, slot_b] {
            if s >= rank {
                return Err(Error::SlotOutOfRange { slot: s, rank });
            }
        }
        if slot_a == slot_b {
            return Err(Error::BadContraction {
                a: slot_a,
                b: slot_b,
                reason: "identical slots",
            });
        }
        if self.variance[slot_a] == self.variance[slot_b] {
            return Err(Error::BadContraction {
                a: slot_a,
                b: slot_b,
                reason: "both slots have the same variance; raise or lower one explicitly",
            });
        }
        Ok(self.trace_unchecked(slot_a, slot_b))
    }

    /// Trace over two slots ignoring variance. Only valid in orthonormal frames
    /// or when the caller has already applied the metric.
    pub(crate) fn trace_unchecked(&self, slot_a: usize, slot_b: usize) -> Tensor<S> {
        let rank = self.rank();
        let variance: Vec<Variance> = self
            .variance
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != slot_a && i != slot_b)
            .map(|(_, v)| *v)
            .collect();
        let zero = self.comps[0].zero_like();
        let mut full = vec![0usize; rank];
        Tensor::from_fn(self.dim, variance, |idx| {
            let mut k = 0;
            for (s, slot) in full.iter_mut().enumerate() {
                if s != slot_a && s != slot_b {
                    *slot = idx[k];
                    k += 1;
                }
            }
            let mut acc = zero.clone();
            for i in 0..self.dim {
                full[slot_a] = i;
                full[slot_b] = i;
                acc = acc.add_s(&self.comps[self.offset(&full)]);
            }
            acc
        })
    }

    /// Reorders slots: slot `s` of the result is slot `order[s]` of `self`.
    pub fn permute(&self, order: &[usize]) -> Result<Tensor<S>> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        if order.len() != rank || order.iter().any(|&o| o >= rank || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::ShapeMismatch(format!("invalid permutation {order:?}")));
        }
        let variance = order.iter().map(|&o| self.variance[o]).collect();
        let mut src = vec![0usize; rank];
        Ok(Tensor::from_fn(self.dim, variance, |idx| {
            for (s, &o) in order.iter().enumerate() {
                src[o] = idx[s];
            }
            self.comps[self.offset(&src)].clone()
        }))
    }

    /// Flips the variance of `slot` by contracting with `g` (lowering) or
    /// `g_inv` (raising). Both are supplied in the scalar type of `self`.
    pub fn raise_lower_with(&self, slot: usize, g: &Tensor<S>, g_inv: &Tensor<S>) -> Result<Tensor<S>> {
        let rank = self.rank();
        if slot >= rank {
            return Err(Error::SlotOutOfRange { slot, rank });
        }
        let m = match self.variance[slot] {
            Variance::Upper => g,
            Variance::Lower => g_inv,
        };
        if m.rank() != 2 || m.dim != self.dim {
            return Err(Error::ShapeMismatch("metric must be a rank-2 tensor of matching dimension".into()));
        }
        let mut variance = self.variance.clone();
        variance[slot] = variance[slot].flip();
        let zero = self.comps[0].zero_like();
        let mut src = vec![0usize; rank];
        Ok(Tensor::from_fn(self.dim, variance, |idx| {
            src.copy_from_slice(idx);
            let mut acc = zero.clone();
            for p in 0..self.dim {
                src[slot] = p;
                let mp = &m.comps[idx[slot] * self.dim + p];
                acc = acc.add_s(&mp.mul_s(&self.comps[self.offset(&src)]));
            }
            acc
        }))
    }
}

impl Tensor<f64> {
    pub fn zeros(dim: usize, variance: Vec<Variance>) -> Tensor<f64> {
        Tensor::filled(dim, variance, 0.0)
    }

    pub fn scalar(dim: usize, v: f64) -> Tensor<f64> {
        Tensor {
            dim,
            variance: Vec::new(),
            comps: vec![v],
        }
    }

    /// The identity map `δ^i_j`.
    pub fn kronecker(dim: usize) -> Tensor<f64> {
        Tensor::from_fn(dim, vec![Variance::Upper, Variance::Lower], |i| {
            if i[0] == i[1] {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor<f64>) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn raise_lower(&self, slot: usize, m: &MetricAtPoint) -> Result<Tensor<f64>> {
        self.raise_lower_with(slot, &m.lower_tensor(), &m.upper_tensor())
    }
}

pub(crate) fn unravel(mut off: usize, dim: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = off % dim;
        off /= dim;
    }
}

/// Symmetric positive-definite metric at a single point, with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricAtPoint {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
}

impl MetricAtPoint {
    pub fn new(g: DMatrix<f64>) -> Result<MetricAtPoint> {
        let n = g.nrows();
        if g.ncols() != n {
            return Err(Error::ShapeMismatch(format!("metric is {}x{}", n, g.ncols())));
        }
        let scale = g.amax().max(f64::MIN_POSITIVE);
        let asym = (&g - g.transpose()).amax() / scale;
        if asym > 1e-12 {
            return Err(Error::MetricNotSymmetric(asym));
        }
        let chol = g.clone().cholesky().ok_or(Error::MetricNotPositiveDefinite)?;
        let g_inv = chol.inverse();
        Ok(MetricAtPoint { g, g_inv })
    }

    pub fn from_components(n: usize, comps: &[f64]) -> Result<MetricAtPoint> {
        if comps.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: comps.len(),
            });
        }
        MetricAtPoint::new(DMatrix::from_row_slice(n, n, comps))
    }

    pub fn euclidean(n: usize) -> MetricAtPoint {
        MetricAtPoint {
            g: DMatrix::identity(n, n),
            g_inv: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn g_inv(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    pub fn lower_tensor(&self) -> Tensor<f64> {
        let n = self.dim();
        Tensor::from_fn(n, vec![Variance::Lower; 2], |i| self.g[(i[0], i[1])])
    }

    pub fn upper_tensor(&self) -> Tensor<f64> {
        let n = self.dim();
        Tensor::from_fn(n, vec![Variance::Upper; 2], |i| self.g_inv[(i[0], i[1])])
    }

    /// `max |g·g_inv − I|`.
    pub fn inverse_residual(&self) -> f64 {
        let n = self.dim();
        (&self.g * &self.g_inv - DMatrix::identity(n, n)).amax()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.g[(i, j)] * u[i] * v[j];
            }
        }
        acc
    }
}

/// Max-norm residuals of the algebraic Riemann symmetries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    /// `R_ijkl + R_jikl`
    pub antisym_first: f64,
    /// `R_ijkl + R_ijlk`
    pub antisym_second: f64,
    /// `R_ijkl − R_klij`
    pub pair: f64,
    /// `R_ijkl + R_jkil + R_kijl`
    pub first_bianchi: f64,
}

impl SymmetryReport {
    pub fn max(&self) -> f64 {
        self.antisym_first
            .max(self.antisym_second)
            .max(self.pair)
            .max(self.first_bianchi)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

pub fn riemann_symmetry_residuals(r: &Tensor<f64>) -> Result<SymmetryReport> {
    if r.rank() != 4 {
        return Err(Error::WrongRank {
            expected: 4,
            got: r.rank(),
        });
    }
    if r.variance().iter().any(|&v| v != Variance::Lower) {
        return Err(Error::ShapeMismatch("Riemann tensor must be all-lower".into()));
    }
    let n = r.dim();
    let mut rep = SymmetryReport {
        antisym_first: 0.0,
        antisym_second: 0.0,
        pair: 0.0,
        first_bianchi: 0.0,
    };
    let at = |i, j, k, l| *r.get(&[i, j, k, l]);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = at(i, j, k, l);
                    rep.antisym_first = rep.antisym_first.max((v + at(j, i, k, l)).abs());
                    rep.antisym_second = rep.antisym_second.max((v + at(i, j, l, k)).abs());
                    rep.pair = rep.pair.max((v - at(k, l, i, j)).abs());
                    rep.first_bianchi = rep
                        .first_bianchi
                        .max((v + at(j, k, i, l) + at(k, i, j, l)).abs());
                }
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Variance::{Lower, Upper};

    fn constant_curvature(m: &MetricAtPoint, k: f64) -> Tensor<f64> {
        let g = m.g();
        Tensor::from_fn(m.dim(), vec![Lower; 4], |x| {
            let (i, j, kk, l) = (x[0], x[1], x[2], x[3]);
            k * (g[(i, l)] * g[(j, kk)] - g[(i, kk)] * g[(j, l)])
        })
    }

    fn spd(n: usize, seed: &[f64]) -> MetricAtPoint {
        let a = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()]);
        let g = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
        MetricAtPoint::new((&g + g.transpose()) * 0.5).unwrap()
    }

    #[test]
    fn trace_of_identity_is_dimension() {
        for n in 1..=6 {
            let t = Tensor::kronecker(n).contract(0, 1).unwrap();
            assert_eq!(t.components(), &[n as f64]);
        }
    }

    #[test]
    fn metric_times_inverse_traces_to_dimension() {
        let m = spd(4, &[0.3, -0.2, 0.7, 0.1, 0.05]);
        let prod = m.lower_tensor().outer(&m.upper_tensor()).unwrap();
        // g_{ij} g^{jk}: contract slot 1 (lower) with slot 2 (upper)
        let delta = prod.contract(1, 2).unwrap();
        assert!(delta.max_abs_diff(&Tensor::from_fn(4, vec![Lower, Upper], |i| (i[0] == i[1]) as u8 as f64)) < 1e-12);
        let tr = delta.contract(0, 1).unwrap();
        assert!((tr.components()[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ricci_trace_of_round_sphere_curvature() {
        // Conformal sphere chart at x = (0.3, 0, 0), K = 1.
        let psi = 1.0 / (1.0 + 0.25 * 0.09);
        let m = MetricAtPoint::new(DMatrix::identity(3, 3) * (psi * psi)).unwrap();
        let r = constant_curvature(&m, 1.0);
        // Ric_jk = R^i_{jki}: raise slot 0, trace with slot 3.
        let ric = r.raise_lower(0, &m).unwrap().contract(0, 3).unwrap();
        // Frame components: divide by g (conformal, diagonal).
        for i in 0..3 {
            assert!((ric.get(&[i, i]) / m.g()[(i, i)] - 2.0).abs() < 1e-12);
        }
        // The opposite trace (slots 0 and 2) carries the opposite sign.
        let other = r.raise_lower(0, &m).unwrap().contract(0, 2).unwrap();
        assert!((other.get(&[0, 0]) / m.g()[(0, 0)] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn contraction_errors() {
        let t = Tensor::zeros(3, vec![Lower, Lower]);
        assert!(matches!(t.contract(0, 1), Err(Error::BadContraction { .. })));
        assert!(matches!(t.contract(0, 2), Err(Error::SlotOutOfRange { .. })));
        assert!(matches!(Tensor::kronecker(3).contract(1, 1), Err(Error::BadContraction { .. })));
    }

    #[test]
    fn raise_on_euclidean_is_identity() {
        let t = Tensor::from_fn(3, vec![Lower, Upper, Lower], |i| (i[0] * 9 + i[1] * 3 + i[2]) as f64 - 4.0);
        let m = MetricAtPoint::euclidean(3);
        let r = t.raise_lower(0, &m).unwrap();
        assert_eq!(r.variance(), &[Upper, Upper, Lower]);
        assert_eq!(r.components(), t.components());
    }

    #[test]
    fn lowering_kronecker_gives_metric() {
        let m = spd(3, &[0.4, 0.1, -0.3, 0.2]);
        let low = Tensor::kronecker(3).raise_lower(0, &m).unwrap();
        assert!(low.max_abs_diff(&m.lower_tensor()) < 1e-14);
    }

    #[test]
    fn metric_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(MetricAtPoint::new(bad), Err(Error::MetricNotSymmetric(_))));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(MetricAtPoint::new(indef), Err(Error::MetricNotPositiveDefinite));
        let m = spd(5, &[0.9, -0.1, 0.3]);
        assert!(m.inverse_residual() < 1e-10);
    }

    #[test]
    fn constant_curvature_satisfies_symmetries() {
        let m = spd(4, &[0.2, 0.5, -0.1, 0.3, 0.8]);
        let rep = riemann_symmetry_residuals(&constant_curvature(&m, -0.7)).unwrap();
        assert!(rep.within(1e-12), "{rep:?}");
        let zero = riemann_symmetry_residuals(&Tensor::zeros(3, vec![Lower; 4])).unwrap();
        assert_eq!(zero.max(), 0.0);
        assert!(matches!(
            riemann_symmetry_residuals(&Tensor::zeros(3, vec![Lower; 2])),
            Err(Error::WrongRank { .. })
        ));
    }

    proptest! {
        #[test]
        fn contraction_is_linear(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            xs in proptest::collection::vec(-1.0f64..1.0, 81),
            ys in proptest::collection::vec(-1.0f64..1.0, 81),
        ) {
            let v = vec![Upper, Lower, Lower, Upper];
            let t = Tensor::from_vec(3, v.clone(), xs).unwrap();
            let s = Tensor::from_vec(3, v, ys).unwrap();
            let lhs = t.scale(a).add(&s.scale(b)).unwrap().contract(0, 2).unwrap();
            let rhs = t.contract(0, 2).unwrap().scale(a).add(&s.contract(0, 2).unwrap().scale(b)).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn raise_lower_round_trip(
            seed in proptest::collection::vec(-1.0f64..1.0, 16),
            xs in proptest::collection::vec(-1.0f64..1.0, 64),
            slot in 0usize..3,
        ) {
            let m = spd(4, &seed);
            let t = Tensor::from_vec(4, vec![Lower, Upper, Lower], xs).unwrap();
            let back = t.raise_lower(slot, &m).unwrap().raise_lower(slot, &m).unwrap();
            prop_assert_eq!(back.variance(), t.variance());
            prop_assert!(back.max_abs_diff(&t) < 1e-12);
        }
    }
}
