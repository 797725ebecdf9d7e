//! Empirical vanishing order at a point from sup-norms on shrinking spheres.

use serde::Serialize;
use uc_core::Result;

/// Orders at or above this are reported as infinite within resolution.
pub const ORDER_CAP: f64 = 20.0;

/// `0.1·2^{−j}` for `j = 0..=10`.
pub fn default_radii() -> Vec<f64> {
    (0..=10).map(|j| 0.1 * 0.5f64.powi(j)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingEstimate {
    /// Least-squares slope of `log sup` against `log r`, capped at [`ORDER_CAP`].
    pub order: f64,
    pub infinite: bool,
    /// `(r, sup over the sphere of radius r)`.
    pub samples: Vec<(f64, f64)>,
}

impl VanishingEstimate {
    pub fn at_least(&self, m: f64) -> bool {
        self.infinite || self.order >= m
    }
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / k, b + y / k));
    let (sxy, sxx) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    sxy / sxx
}

/// Fits `log sup_{|x|=r} |f(x)| ≈ m log r + c` over `radii`, sampling each
/// sphere at `directions`. Radii where the sup is at most `floor` (zero for
/// exact fields, the noise level for computed ones) drop out; fewer than two
/// remaining samples count as infinite order.
pub fn vanishing_order_estimate(
    field: impl Fn(&[f64]) -> Result<f64>,
    directions: &[Vec<f64>],
    radii: &[f64],
    floor: f64,
) -> Result<VanishingEstimate> {
    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut sup = 0.0f64;
        for d in directions {
            let x: Vec<f64> = d.iter().map(|v| v * r).collect();
            sup = sup.max(field(&x)?.abs());
        }
        samples.push((r, sup));
    }
    let logs: Vec<(f64, f64)> = samples.iter().filter(|s| s.1 > floor).map(|&(r, s)| (r.ln(), s.ln())).collect();
    if logs.len() < 2 {
        return Ok(VanishingEstimate {
            order: ORDER_CAP,
            infinite: true,
            samples,
        });
    }
    let m = slope(&logs);
    Ok(VanishingEstimate {
        order: m.min(ORDER_CAP),
        infinite: m >= ORDER_CAP,
        samples,
    })
}
