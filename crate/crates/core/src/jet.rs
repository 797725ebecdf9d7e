//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients `c_α = ∂^α f(p) / α!` of a smooth
//! function around a base point `p`, for all multi-indices `|α| ≤ deg`.
//! Arithmetic on jets propagates derivatives exactly (forward-mode automatic
//! differentiation to order [`MAX_DEGREE`]), which is how the geometry code
//! obtains metric partials, Christoffel symbols, curvature and its covariant
//! derivatives at a point without symbolic algebra.
//!
//! Monomials are ordered by total degree, so truncating a jet to a lower degree
//! is a prefix of the coefficient vector. Coefficients beyond the stored length
//! are implicitly zero; a constant is a one-element vector.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Highest derivative order tracked by any jet.
pub const MAX_DEGREE: usize = 4;
/// Largest number of variables a jet space can be built for.
pub const MAX_VARS: usize = 8;

/// Monomial tables for jets in `n` variables.
pub struct JetSpace {
    n: usize,
    exps: Vec<Vec<u8>>,
    /// `count[d]` is the number of monomials of total degree `≤ d`.
    count: [usize; MAX_DEGREE + 1],
    degree_of: Vec<u8>,
    /// `raise[k][i]` is the index of `exps[k] + e_i`, if its degree is within bounds.
    raise: Vec<Vec<Option<usize>>>,
    /// Product table `(a, b, a+b)` sorted by total degree of the result.
    pairs: Vec<(u32, u32, u32)>,
    /// `pair_end[d]` is the number of product pairs with result degree `≤ d`.
    pair_end: [usize; MAX_DEGREE + 1],
    alpha_factorial: Vec<f64>,
}

static SPACES: [OnceLock<JetSpace>; MAX_VARS + 1] = [const { OnceLock::new() }; MAX_VARS + 1];

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

impl JetSpace {
    /// Shared jet space for `n` variables.
    pub fn get(n: usize) -> &'static JetSpace {
        assert!(
            (1..=MAX_VARS).contains(&n),
            "jet spaces support 1..={MAX_VARS} variables, got {n}"
        );
        SPACES[n].get_or_init(|| JetSpace::build(n))
    }

    fn build(n: usize) -> JetSpace {
        let mut exps: Vec<Vec<u8>> = Vec::new();
        let mut count = [0usize; MAX_DEGREE + 1];
        for d in 0..=MAX_DEGREE {
            let mut current = Vec::new();
            compositions(n, d, &mut vec![0u8; n], 0, &mut current);
            exps.extend(current);
            count[d] = exps.len();
        }
        let degree_of: Vec<u8> = exps
            .iter()
            .map(|e| e.iter().map(|&v| v as u32).sum::<u32>() as u8)
            .collect();
        let find = |target: &[u8]| exps.iter().position(|e| e.as_slice() == target);
        let raise = exps
            .iter()
            .map(|e| {
                (0..n)
                    .map(|i| {
                        let mut up = e.clone();
                        up[i] += 1;
                        find(&up)
                    })
                    .collect()
            })
            .collect();
        let mut pairs = Vec::new();
        for (a, ea) in exps.iter().enumerate() {
            for (b, eb) in exps.iter().enumerate() {
                let sum: Vec<u8> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                if let Some(c) = find(&sum) {
                    pairs.push((a as u32, b as u32, c as u32));
                }
            }
        }
        pairs.sort_by_key(|&(_, _, c)| (degree_of[c as usize], c));
        let mut pair_end = [0usize; MAX_DEGREE + 1];
        for d in 0..=MAX_DEGREE {
            pair_end[d] = pairs
                .iter()
                .take_while(|p| degree_of[p.2 as usize] as usize <= d)
                .count();
        }
        let alpha_factorial = exps
            .iter()
            .map(|e| e.iter().map(|&v| factorial(v as usize)).product())
            .collect();
        JetSpace {
            n,
            exps,
            count,
            degree_of,
            raise,
            pairs,
            pair_end,
            alpha_factorial,
        }
    }

    pub fn vars(&self) -> usize {
        self.n
    }

    /// Number of monomials of total degree at most `deg`.
    pub fn len(&self, deg: usize) -> usize {
        self.count[deg.min(MAX_DEGREE)]
    }

    pub fn exponents(&self, k: usize) -> &[u8] {
        &self.exps[k]
    }

    pub fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        if alpha.len() != self.n {
            return None;
        }
        let d: usize = alpha.iter().map(|&a| a as usize).sum();
        if d > MAX_DEGREE {
            return None;
        }
        let start = if d == 0 { 0 } else { self.count[d - 1] };
        (start..self.count[d]).find(|&k| self.exps[k] == alpha)
    }

    /// Multi-indices of total degree exactly `d`.
    pub fn monomials_of_degree(&self, d: usize) -> impl Iterator<Item = (usize, &[u8])> {
        let start = if d == 0 { 0 } else { self.count[d - 1] };
        (start..self.count[d]).map(move |k| (k, self.exps[k].as_slice()))
    }
}

fn compositions(n: usize, remaining: usize, cur: &mut Vec<u8>, pos: usize, out: &mut Vec<Vec<u8>>) {
    if pos == n - 1 {
        cur[pos] = remaining as u8;
        out.push(cur.clone());
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v as u8;
        compositions(n, remaining - v, cur, pos + 1, out);
    }
}

/// Truncated Taylor expansion of a scalar function around a point.
#[derive(Clone)]
pub struct Jet {
    space: &'static JetSpace,
    deg: u8,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("n", &self.space.n)
            .field("deg", &self.deg)
            .field("coeffs", &self.c)
            .finish()
    }
}

impl Jet {
    /// Constant function. Constants carry full degree so they never truncate.
    pub fn constant(space: &'static JetSpace, v: f64) -> Jet {
        Jet {
            space,
            deg: MAX_DEGREE as u8,
            c: vec![v],
        }
    }

    /// The coordinate function `x_i` expanded around `value`.
    pub fn variable(space: &'static JetSpace, deg: usize, i: usize, value: f64) -> Jet {
        assert!(deg <= MAX_DEGREE);
        let mut c = vec![0.0; space.len(deg.min(1))];
        c[0] = value;
        if deg >= 1 {
            c[1 + i] = 1.0;
        }
        Jet {
            space,
            deg: deg as u8,
            c,
        }
    }

    /// Jets of the coordinate functions around `p`, truncated at `deg`.
    pub fn seed(p: &[f64], deg: usize) -> Vec<Jet> {
        let space = JetSpace::get(p.len());
        p.iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(space, deg, i, v))
            .collect()
    }

    /// Builds a jet from partial derivatives `∂^α f(p)` supplied per multi-index.
    pub fn from_partials(
        space: &'static JetSpace,
        deg: usize,
        mut partial: impl FnMut(&[u8]) -> f64,
    ) -> Jet {
        let len = space.len(deg);
        let c = (0..len)
            .map(|k| partial(&space.exps[k]) / space.alpha_factorial[k])
            .collect();
        Jet {
            space,
            deg: deg as u8,
            c,
        }
    }

    pub fn space(&self) -> &'static JetSpace {
        self.space
    }

    pub fn degree(&self) -> usize {
        self.deg as usize
    }

    pub fn value(&self) -> f64 {
        self.c.first().copied().unwrap_or(0.0)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    /// `∂^α f(p)` for a multi-index within the jet degree.
    pub fn partial(&self, alpha: &[u8]) -> f64 {
        let k = self
            .space
            .index_of(alpha)
            .expect("multi-index outside the jet space");
        assert!(
            self.space.degree_of[k] <= self.deg,
            "partial of order {} requested from a degree-{} jet",
            self.space.degree_of[k],
            self.deg
        );
        self.coeff(k) * self.space.alpha_factorial[k]
    }

    /// First partial `∂_i f(p)`.
    pub fn d1(&self, i: usize) -> f64 {
        assert!(self.deg >= 1, "first partial of a degree-0 jet");
        self.coeff(1 + i)
    }

    pub fn truncate(&self, deg: usize) -> Jet {
        let deg = deg.min(self.deg as usize);
        let len = self.space.len(deg).min(self.c.len());
        Jet {
            space: self.space,
            deg: deg as u8,
            c: self.c[..len].to_vec(),
        }
    }

    /// Exact partial derivative `∂_i`, lowering the degree by one.
    pub fn diff(&self, i: usize) -> Jet {
        assert!(self.deg >= 1, "cannot differentiate a degree-0 jet");
        let deg = self.deg as usize - 1;
        let len = self.space.len(deg);
        let mut c = vec![0.0; len];
        for (k, slot) in c.iter_mut().enumerate() {
            if let Some(up) = self.space.raise[k][i] {
                let a = self.space.exps[k][i] as f64 + 1.0;
                *slot = a * self.coeff(up);
            }
        }
        trim(&mut c);
        Jet {
            space: self.space,
            deg: deg as u8,
            c,
        }
    }

    fn check(&self, other: &Jet) {
        debug_assert!(
            std::ptr::eq(self.space, other.space),
            "jets from different spaces"
        );
    }

    pub fn add_jet(&self, other: &Jet) -> Jet {
        self.check(other);
        let deg = self.deg.min(other.deg);
        let len = self.c.len().max(other.c.len()).min(self.space.len(deg as usize));
        let c = (0..len).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Jet {
            space: self.space,
            deg,
            c,
        }
    }

    pub fn sub_jet(&self, other: &Jet) -> Jet {
        self.check(other);
        let deg = self.deg.min(other.deg);
        let len = self.c.len().max(other.c.len()).min(self.space.len(deg as usize));
        let c = (0..len).map(|k| self.coeff(k) - other.coeff(k)).collect();
        Jet {
            space: self.space,
            deg,
            c,
        }
    }

    pub fn scale(&self, a: f64) -> Jet {
        Jet {
            space: self.space,
            deg: self.deg,
            c: self.c.iter().map(|v| v * a).collect(),
        }
    }

    pub fn add_scalar(&self, a: f64) -> Jet {
        let mut out = self.clone();
        if out.c.is_empty() {
            out.c.push(a);
        } else {
            out.c[0] += a;
        }
        out
    }

    pub fn mul_jet(&self, other: &Jet) -> Jet {
        self.check(other);
        let deg = self.deg.min(other.deg);
        if self.c.len() <= 1 {
            let mut r = other.scale(self.value());
            r.deg = deg;
            r.c.truncate(self.space.len(deg as usize));
            return r;
        }
        if other.c.len() <= 1 {
            let mut r = self.scale(other.value());
            r.deg = deg;
            r.c.truncate(self.space.len(deg as usize));
            return r;
        }
        let len = self.space.len(deg as usize);
        let mut c = vec![0.0; len];
        let (la, lb) = (self.c.len() as u32, other.c.len() as u32);
        for &(a, b, r) in &self.space.pairs[..self.space.pair_end[deg as usize]] {
            if a < la && b < lb {
                c[r as usize] += self.c[a as usize] * other.c[b as usize];
            }
        }
        Jet {
            space: self.space,
            deg,
            c,
        }
    }

    /// `f(self)` for a univariate `f` given its derivatives `f^(k)(value)`, `k = 0..=deg`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let deg = self.deg as usize;
        assert!(derivs.len() > deg, "compose needs derivatives up to the jet degree");
        let mut h = self.clone();
        if !h.c.is_empty() {
            h.c[0] = 0.0;
        }
        let mut out = Jet {
            space: self.space,
            deg: self.deg,
            c: vec![derivs[0]],
        };
        if self.c.len() <= 1 {
            return out;
        }
        let mut power = h.clone();
        let mut kfact = 1.0;
        for (k, &dk) in derivs.iter().enumerate().take(deg + 1).skip(1) {
            kfact *= k as f64;
            out = out.add_jet(&power.scale(dk / kfact));
            if k < deg {
                power = power.mul_jet(&h);
            }
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        assert!(a != 0.0, "reciprocal of a jet with zero value");
        let mut d = [0.0; MAX_DEGREE + 1];
        let mut s = 1.0 / a;
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = s;
            s *= -((k + 1) as f64) / a;
        }
        self.compose(&d)
    }

    pub fn div_jet(&self, other: &Jet) -> Jet {
        self.mul_jet(&other.recip())
    }

    /// `self^p` for real `p`; the value must be positive unless `p` is a non-negative integer.
    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        let mut d = [0.0; MAX_DEGREE + 1];
        let mut coef = 1.0;
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = coef * a.powf(p - k as f64);
            coef *= p - k as f64;
        }
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e; MAX_DEGREE + 1])
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let mut d = [0.0; MAX_DEGREE + 1];
        d[0] = a.ln();
        let mut s = 1.0 / a;
        for k in 1..=MAX_DEGREE {
            d[k] = s;
            s *= -(k as f64) / a;
        }
        self.compose(&d)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s, c])
    }

    /// Evaluates the power series `Σ coeffs[k] · self^k` by Horner's rule.
    pub fn series(&self, coeffs: &[f64]) -> Jet {
        let mut acc = Jet::constant(self.space, *coeffs.last().unwrap_or(&0.0));
        for &a in coeffs.iter().rev().skip(1) {
            acc = acc.mul_jet(self).add_scalar(a);
        }
        acc
    }
}

fn trim(c: &mut Vec<f64>) {
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        c.pop();
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &'a Jet) -> Jet {
        self.add_jet(rhs)
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &'a Jet) -> Jet {
        self.sub_jet(rhs)
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &'a Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Scalar types usable as tensor components: plain reals and jets.
pub trait Scalar: Clone + fmt::Debug + Send + Sync {
    fn zero_like(&self) -> Self;
    fn constant_like(&self, v: f64) -> Self;
    fn add_s(&self, o: &Self) -> Self;
    fn sub_s(&self, o: &Self) -> Self;
    fn mul_s(&self, o: &Self) -> Self;
    fn scale_s(&self, a: f64) -> Self;
    fn value(&self) -> f64;
}

impl Scalar for f64 {
    fn zero_like(&self) -> f64 {
        0.0
    }
    fn constant_like(&self, v: f64) -> f64 {
        v
    }
    fn add_s(&self, o: &f64) -> f64 {
        self + o
    }
    fn sub_s(&self, o: &f64) -> f64 {
        self - o
    }
    fn mul_s(&self, o: &f64) -> f64 {
        self * o
    }
    fn scale_s(&self, a: f64) -> f64 {
        self * a
    }
    fn value(&self) -> f64 {
        *self
    }
}

impl Scalar for Jet {
    fn zero_like(&self) -> Jet {
        Jet::constant(self.space, 0.0)
    }
    fn constant_like(&self, v: f64) -> Jet {
        Jet::constant(self.space, v)
    }
    fn add_s(&self, o: &Jet) -> Jet {
        self.add_jet(o)
    }
    fn sub_s(&self, o: &Jet) -> Jet {
        self.sub_jet(o)
    }
    fn mul_s(&self, o: &Jet) -> Jet {
        self.mul_jet(o)
    }
    fn scale_s(&self, a: f64) -> Jet {
        self.scale(a)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
}
