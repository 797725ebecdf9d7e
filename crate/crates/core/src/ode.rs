//! Explicit Runge–Kutta integrators: adaptive Dormand–Prince 5(4) with cubic
//! Hermite dense output, and fixed-step classical RK4.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `None` picks one from the interval length.
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_min: 1e-14,
            max_steps: 200_000,
        }
    }
}

/// Accepted steps of an adaptive run plus the values at requested output times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub dys: Vec<Vec<f64>>,
    /// Values at the requested output times, in request order.
    pub outputs: Vec<Vec<f64>>,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.ys.last().expect("trajectory has at least the initial point")
    }

    /// Cubic Hermite interpolation between accepted steps.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let forward = self.ts.last().unwrap() >= &self.ts[0];
        let k = match self
            .ts
            .windows(2)
            .position(|w| if forward { t <= w[1] } else { t >= w[1] })
        {
            Some(k) => k,
            None => self.ts.len().saturating_sub(2),
        };
        if self.ts.len() == 1 {
            return self.ys[0].clone();
        }
        let (t0, t1) = (self.ts[k], self.ts[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        (0..self.ys[k].len())
            .map(|i| {
                h00 * self.ys[k][i] + h10 * h * self.dys[k][i] + h01 * self.ys[k + 1][i] + h11 * h * self.dys[k + 1][i]
            })
            .collect()
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// Steps are shortened to land exactly on every time in `outputs`, so output
/// values carry the full integrator accuracy rather than interpolation error.
pub fn dopri45<F>(mut f: F, t0: f64, y0: &[f64], t_end: f64, outputs: &[f64], opts: &OdeOptions) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut targets: Vec<(f64, usize)> = outputs.iter().copied().enumerate().map(|(i, t)| (t, i)).collect();
    targets.sort_by(|a, b| (dir * a.0).partial_cmp(&(dir * b.0)).unwrap());
    for &(t, _) in &targets {
        if dir * (t - t0) < -1e-15 * span.max(1.0) || dir * (t - t_end) > 1e-15 * span.max(1.0) {
            return Err(Error::InvalidParameter(format!("output time {t} outside the integration interval")));
        }
    }
    let mut outs: Vec<Option<Vec<f64>>> = vec![None; outputs.len()];
    let mut next_target = 0;
    while next_target < targets.len() && (targets[next_target].0 - t0).abs() <= 1e-15 * span.max(1.0) {
        outs[targets[next_target].1] = Some(y0.to_vec());
        next_target += 1;
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    f(t, &y, &mut k1)?;
    let mut traj = Trajectory {
        ts: vec![t],
        ys: vec![y.clone()],
        dys: vec![k1.clone()],
        outputs: Vec::new(),
        rejected: 0,
    };
    if span == 0.0 {
        traj.outputs = outs.into_iter().map(|o| o.unwrap_or_else(|| y0.to_vec())).collect();
        return Ok(traj);
    }
    let mut h = opts.h_init.unwrap_or(span * 1e-2).min(span);
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut steps = 0;
    while dir * (t_end - t) > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepUnderflow { t, h });
        }
        let mut stop = t_end;
        if next_target < targets.len() {
            stop = targets[next_target].0;
        }
        let remaining = (stop - t).abs();
        let mut landing = false;
        if h >= remaining {
            h = remaining;
            landing = true;
        }
        let hs = dir * h;
        for i in 0..n {
            tmp[i] = y[i] + hs * A21 * k1[i];
        }
        f(t + C2 * hs, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * hs, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * hs, &tmp, &mut k4)?;
        for i in 0..n {
            tmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * hs, &tmp, &mut k5)?;
        for i in 0..n {
            tmp[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + hs, &tmp, &mut k6)?;
        for i in 0..n {
            y5[i] = y[i] + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(t + hs, &y5, &mut k7)?;
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((e / sc).abs());
        }
        if err <= 1.0 {
            t = if landing { stop } else { t + hs };
            std::mem::swap(&mut y, &mut y5);
            std::mem::swap(&mut k1, &mut k7);
            traj.ts.push(t);
            traj.ys.push(y.clone());
            traj.dys.push(k1.clone());
            while landing && next_target < targets.len() && targets[next_target].0 == stop {
                outs[targets[next_target].1] = Some(y.clone());
                next_target += 1;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            traj.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < opts.h_min {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    }
    traj.outputs = outs
        .into_iter()
        .map(|o| o.unwrap_or_else(|| traj.last().to_vec()))
        .collect();
    Ok(traj)
}

/// Classical fourth-order Runge–Kutta with `steps` equal steps.
pub fn rk4<F>(mut f: F, t0: f64, y0: &[f64], t1: f64, steps: usize) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len();
    let h = (t1 - t0) / steps as f64;
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for s in 0..steps {
        let t = t0 + h * s as f64;
        f(t, &y, &mut k1)?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        f(t + h, &tmp, &mut k4)?;
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[0] = y[1];
        dy[1] = -y[0];
        Ok(())
    }

    #[test]
    fn dopri_hits_outputs_exactly() {
        let outs = [0.5, 2.0, 0.0, 3.0];
        let tr = dopri45(oscillator, 0.0, &[0.0, 1.0], 3.0, &outs, &OdeOptions::default()).unwrap();
        for (t, y) in outs.iter().zip(&tr.outputs) {
            assert!((y[0] - t.sin()).abs() < 1e-9, "t={t}");
            assert!((y[1] - t.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn dopri_backwards_and_dense_output() {
        let tr = dopri45(oscillator, 1.0, &[1f64.sin(), 1f64.cos()], -1.0, &[], &OdeOptions::default()).unwrap();
        assert!((tr.last()[0] + 1f64.sin()).abs() < 1e-9);
        let mid = tr.eval(0.123);
        assert!((mid[0] - 0.123f64.sin()).abs() < 1e-7);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |steps| (rk4(oscillator, 0.0, &[0.0, 1.0], 1.0, steps).unwrap()[0] - 1f64.sin()).abs();
        let ratio = err(20) / err(40);
        assert!((ratio.log2() - 4.0).abs() < 0.2, "ratio {ratio}");
    }
}
