//! Trigonometric-interpolant differentiation on a uniform periodic grid.
//!
//! Power-of-two sizes go through an iterative radix-2 FFT; any other even size
//! falls back to a direct DFT with a precomputed twiddle table, which is
//! O(n²) but exact in the same sense.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{cos, sin, TAU};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    #[inline]
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }

    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }

    #[inline]
    fn scale(self, s: f64) -> Self {
        Self::new(self.re * s, self.im * s)
    }
}

#[derive(Debug)]
enum Transform {
    Radix2 { twiddles: Vec<Complex>, bitrev: Vec<usize> },
    Direct { table: Vec<Complex> },
}

/// Precomputed transform for one grid size.
#[derive(Debug)]
pub struct SpectralPlan {
    n: usize,
    transform: Transform,
}

impl SpectralPlan {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "spectral plan needs at least two nodes");
        // e^{-2πi m/n}
        let root = |m: usize| {
            let a = -TAU * m as f64 / n as f64;
            Complex::new(cos(a), sin(a))
        };
        let transform = if n.is_power_of_two() {
            let bits = n.trailing_zeros();
            let bitrev = (0..n)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
                .collect();
            let twiddles = (0..n / 2).map(root).collect();
            Transform::Radix2 { twiddles, bitrev }
        } else {
            Transform::Direct { table: (0..n).map(root).collect() }
        };
        Self { n, transform }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward DFT, `X_k = Σ_j x_j e^{-2πi jk/n}`.
    fn forward(&self, x: &[f64]) -> Vec<Complex> {
        let data: Vec<Complex> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(data, false)
    }

    /// Inverse DFT including the 1/n factor; returns the real part.
    fn inverse_real(&self, spec: Vec<Complex>) -> Vec<f64> {
        let inv = 1.0 / self.n as f64;
        self.transform(spec, true).into_iter().map(|c| c.re * inv).collect()
    }

    fn transform(&self, mut data: Vec<Complex>, inverse: bool) -> Vec<Complex> {
        let n = self.n;
        match &self.transform {
            Transform::Radix2 { twiddles, bitrev } => {
                for i in 0..n {
                    let j = bitrev[i];
                    if i < j {
                        data.swap(i, j);
                    }
                }
                let mut len = 2;
                while len <= n {
                    let half = len / 2;
                    let stride = n / len;
                    for start in (0..n).step_by(len) {
                        for k in 0..half {
                            let mut w = twiddles[k * stride];
                            if inverse {
                                w.im = -w.im;
                            }
                            let a = data[start + k];
                            let b = data[start + k + half].mul(w);
                            data[start + k] = a.add(b);
                            data[start + k + half] = a.sub(b);
                        }
                    }
                    len <<= 1;
                }
                data
            }
            Transform::Direct { table } => {
                let mut out = vec![Complex::default(); n];
                for (k, slot) in out.iter_mut().enumerate() {
                    let mut acc = Complex::default();
                    for (j, &v) in data.iter().enumerate() {
                        let mut w = table[(j * k) % n];
                        if inverse {
                            w.im = -w.im;
                        }
                        acc = acc.add(v.mul(w));
                    }
                    *slot = acc;
                }
                out
            }
        }
    }

    /// Signed wavenumber of DFT bin `k`; the Nyquist bin maps to `+n/2`.
    #[inline]
    fn wavenumber(&self, k: usize) -> f64 {
        if k <= self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        }
    }

    /// First (`order == 1`) or second (`order == 2`) derivative of the
    /// trigonometric interpolant of `x`, sampled back on the grid.
    ///
    /// The Nyquist mode is dropped for the first derivative (its derivative
    /// is not representable as a real grid function) and kept with weight
    /// `−(n/2)²` for the second.
    pub fn derivative(&self, x: &[f64], order: u8) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        debug_assert!(order == 1 || order == 2);
        let n = self.n;
        // The mean does not contribute, but its rounding would.
        let mean = x.iter().sum::<f64>() / n as f64;
        let centred: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let mut spec = self.forward(&centred);
        for (k, c) in spec.iter_mut().enumerate() {
            let kk = self.wavenumber(k);
            *c = if order == 1 {
                if n % 2 == 0 && k == n / 2 {
                    Complex::default()
                } else {
                    // multiply by i·k
                    Complex::new(-c.im * kk, c.re * kk)
                }
            } else {
                c.scale(-kk * kk)
            };
        }
        self.inverse_real(spec)
    }

    /// Zero every mode with `|k| > max_mode` (used for 2/3-rule dealiasing).
    pub fn truncate(&self, x: &[f64], max_mode: usize) -> Vec<f64> {
        let mut spec = self.forward(x);
        for (k, c) in spec.iter_mut().enumerate() {
            if self.wavenumber(k).abs() > max_mode as f64 {
                *c = Complex::default();
            }
        }
        self.inverse_real(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|j| TAU * j as f64 / n as f64).collect()
    }

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn radix2_and_direct_agree() {
        for &n in &[16usize, 24, 32, 48] {
            let th = grid(n);
            let x: Vec<f64> = th.iter().map(|&t| 1.0 + 0.3 * cos(3.0 * t) - 0.2 * sin(5.0 * t)).collect();
            let d1 = SpectralPlan::new(n).derivative(&x, 1);
            let expect: Vec<f64> =
                th.iter().map(|&t| -0.9 * sin(3.0 * t) - 1.0 * cos(5.0 * t)).collect();
            assert!(max_err(&d1, &expect) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn nyquist_mode_second_derivative() {
        let n = 16;
        let x: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let plan = SpectralPlan::new(n);
        let d2 = plan.derivative(&x, 2);
        for (a, b) in d2.iter().zip(&x) {
            assert!((a + 64.0 * b).abs() < 1e-10);
        }
        let d1 = plan.derivative(&x, 1);
        assert!(d1.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn truncate_removes_high_modes() {
        let n = 32;
        let th = grid(n);
        let x: Vec<f64> = th.iter().map(|&t| cos(2.0 * t) + cos(12.0 * t)).collect();
        let y = SpectralPlan::new(n).truncate(&x, n / 3);
        let expect: Vec<f64> = th.iter().map(|&t| cos(2.0 * t)).collect();
        assert!(max_err(&y, &expect) < 1e-13);
    }
}
