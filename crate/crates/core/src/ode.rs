//! Adaptive Dormand-Prince 5(4) integrator with Hairer's continuous
//! extension, sized for the small radial systems of the oracles.

use crate::error::{Error, Result};
use crate::math::{pow, sqrt};
use alloc::format;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

// 5th-order solution minus embedded 4th-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-12, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

/// Continuous extension over one accepted step `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        core::array::from_fn(|i| {
            c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])))
        })
    }

    /// Bisects the dense output for a sign change of `g` inside the step.
    pub fn locate(&self, g: impl Fn(&[f64; N]) -> f64) -> Option<f64> {
        let (mut lo, mut hi) = (self.t0, self.t1());
        let (glo, ghi) = (g(&self.eval(lo)), g(&self.eval(hi)));
        if glo == 0.0 {
            return Some(lo);
        }
        if glo.signum() == ghi.signum() {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let gm = g(&self.eval(mid));
            if gm == 0.0 {
                return Some(mid);
            }
            if gm.signum() == glo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// What the step observer wants next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, calling `observe` with the
/// dense output and end state of every accepted step. The final step is
/// clipped to land exactly on `t_end`.
pub fn integrate<const N: usize, F, O>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: Tolerances,
    mut observe: O,
) -> Result<()>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&DenseStep<N>, &[f64; N]) -> Control,
{
    if t_end <= t0 {
        return Ok(());
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = initial_step(&y, &k1, &tol).min(t_end - t0).min(tol.h_max);
    let mut steps = 0usize;

    loop {
        if steps >= tol.max_steps {
            return Err(Error::InvalidInput(format!(
                "adaptive integrator exceeded {} steps at t = {t}",
                tol.max_steps
            )));
        }
        steps += 1;
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (i, yi) in ys.iter_mut().enumerate() {
                for (j, kj) in k.iter().enumerate().take(s) {
                    *yi += h * A[s][j] * kj[i];
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        // Stage 7 evaluates f at the 5th-order solution (FSAL).
        let mut y_new = y;
        for (i, yi) in y_new.iter_mut().enumerate() {
            for (j, kj) in k.iter().enumerate().take(6) {
                *yi += h * A[6][j] * kj[i];
            }
        }

        let mut err = 0.0;
        for i in 0..N {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
            let sc = tol.atol + tol.rtol * f64::max(y[i].abs(), y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = sqrt(err / N as f64);

        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.2;
            if h < 1e-300 {
                return Err(Error::InvalidInput(format!("step size underflow at t = {t}")));
            }
            continue;
        }

        if err <= 1.0 {
            let mut cont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k[6][i] - bspl;
                cont[4][i] = h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>();
            }
            let dense = DenseStep { t0: t, h, cont };
            t = if last { t_end } else { t + h };
            y = y_new;
            k1 = k[6];
            if observe(&dense, &y) == Control::Stop || last {
                return Ok(());
            }
        }

        let factor = if err == 0.0 { 5.0 } else { 0.9 * pow(err, -0.2) };
        h = (h * factor.clamp(0.2, 5.0)).min(tol.h_max);
        if h < 1e-300 {
            return Err(Error::InvalidInput(format!("step size underflow at t = {t}")));
        }
    }
}

fn initial_step<const N: usize>(y: &[f64; N], f0: &[f64; N], tol: &Tolerances) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = tol.atol + tol.rtol * y[i].abs();
        d0 += (y[i] / sc) * (y[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    let (d0, d1) = (sqrt(d0 / N as f64), sqrt(d1 / N as f64));
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        (0.01 * d0 / d1).min(1e-2)
    }
}
