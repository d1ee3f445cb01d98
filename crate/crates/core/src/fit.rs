//! Small fitting and differencing helpers shared by the solver, diagnostics
//! and convergence studies.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{log2, sqrt};

/// Finite-difference weights for derivatives `0..=max_order` at `x0` from
/// arbitrary distinct nodes (Fornberg's recursion).
///
/// `weights[m][j]` multiplies `f(nodes[j])` in the estimate of the `m`-th
/// derivative.
pub fn fd_weights(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Applies `weights` to `values`.
pub fn apply(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

/// Least-squares quadratic `c0 + c1 x + c2 x²` through the points.
pub fn quadratic_fit(xs: &[f64], ys: &[f64]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let p = [1.0, x, x * x];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += p[i] * p[j];
            }
            r[i] += p[i] * y;
        }
    }
    solve3(m, r)
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

/// Real root of `c0 + c1 x + c2 x²` closest to `guess`.
pub fn quadratic_root_near(c: [f64; 3], guess: f64) -> Option<f64> {
    let [c0, c1, c2] = c;
    if c2.abs() < 1e-14 * (c1.abs() + c0.abs()) {
        return if c1 != 0.0 { Some(-c0 / c1) } else { None };
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return None;
    }
    // Numerically stable pair.
    let q = -0.5 * (c1 + c1.signum() * sqrt(disc));
    let roots = [q / c2, if q != 0.0 { c0 / q } else { q / c2 }];
    roots.into_iter().min_by(|a, b| (a - guess).abs().total_cmp(&(b - guess).abs()))
}

/// Observed convergence order between successive errors with refinement
/// ratio `ratio`.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    log2(coarse / fine) / log2(ratio)
}

/// Richardson extrapolation of the last two values of a sequence refined by
/// `ratio` per level, assuming error `∝ h^order`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    let q = libm::pow(ratio, order);
    fine + (fine - coarse) / (q - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_weights_uniform() {
        let w = fd_weights(0.0, &[-0.1, 0.0, 0.1], 2);
        assert!((w[1][0] + 5.0).abs() < 1e-12 && w[1][1].abs() < 1e-12 && (w[1][2] - 5.0).abs() < 1e-12);
        assert!((w[2][0] - 100.0).abs() < 1e-9 && (w[2][1] + 200.0).abs() < 1e-9);
        let w = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 3);
        let expect = [-0.5, 1.0, 0.0, -1.0, 0.5];
        for (a, b) in w[3].iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nonuniform_weights_exact_on_quadratics() {
        let xs = [0.0, 0.3, 1.1];
        let f = |x: f64| 2.0 - x + 3.0 * x * x;
        let w = fd_weights(0.3, &xs, 2);
        let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        assert!((apply(&w[1], &vals) - (-1.0 + 6.0 * 0.3)).abs() < 1e-12);
        assert!((apply(&w[2], &vals) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_fit_and_root() {
        let xs = [-3.0, -2.0, -1.0, 0.0];
        let ys: Vec<f64> = xs.iter().map(|&x| (x - 0.5) * (x + 4.0)).collect();
        let c = quadratic_fit(&xs, &ys).unwrap();
        assert!((quadratic_root_near(c, 0.3).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn richardson_removes_leading_term() {
        let exact = 1.5;
        let v = |h: f64| exact + 0.3 * h * h * h * h;
        let r = richardson(v(0.1), v(0.05), 2.0, 4.0);
        assert!((r - exact).abs() < 1e-15);
        assert!((observed_order(0.16, 0.01, 2.0) - 4.0).abs() < 1e-12);
    }
}
