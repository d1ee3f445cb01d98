//! Monitored scalars and identity residuals along a trajectory.
//!
//! Each record stores the instantaneous right-hand sides of the length and
//! area evolution identities, evaluated on the state:
//!
//! ```text
//! L'   = ∫ P dθ
//! L''  = ∫ [(P_θ² − 1) k + d P] dθ
//! A'   = ∫ P / k dθ
//! A''  = −2π + ∫ P² dθ + d A'
//! A''' = 2 ∫ P P_τ dθ + d A''
//! ```
//!
//! [`finalize_residuals`] compares them with finite differences of the
//! recorded `L(t)`, `A(t)` series.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit;
use crate::geometry;
use crate::math::{PI, TAU};
use crate::solver::{SupportState, Trajectory};

/// Absolute slack in the support-function containment test.
pub const CONTAINMENT_TOL: f64 = 1e-10;

/// Instantaneous values of the evolution identities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Identities {
    pub dl_dt: f64,
    pub d2l_dt2: f64,
    pub da_dt: f64,
    pub d2a_dt2: f64,
    pub d3a_dt3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub length: f64,
    pub area: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// `max_j |S_θτ|`.
    pub grad_bound: f64,
    /// `min_j (S_θθ + S)`.
    pub conv_margin: f64,
    pub width: f64,
    /// `L² / (4πA)`.
    pub isoper: f64,
    pub identities: Identities,
    pub dl_dt_residual: Option<f64>,
    pub d2l_dt2_residual: Option<f64>,
    pub da_dt_residual: Option<f64>,
    pub d2a_dt2_residual: Option<f64>,
    pub d3a_dt3_residual: Option<f64>,
    pub curvature_pde_residual: Option<f64>,
}

/// Everything computable from one state. Residuals stay `None` until
/// [`finalize_residuals`].
pub fn record(state: &SupportState, d: f64) -> Result<DiagnosticsRecord> {
    let grid = &state.grid;
    let v = state.validate(0)?;
    let (s, p) = (&state.s, &state.p);
    let p_th = grid.plan().derivative(p, 1);

    let length = geometry::length_checked(grid, s, &v);
    let area = geometry::area_from(grid, s, &v);
    let conv_margin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let v_max = v.iter().copied().fold(0.0, f64::max);
    let grad_bound = p_th.iter().fold(0.0, |m, q| f64::max(m, q.abs()));

    let n = grid.n();
    let mut p_dot = Vec::with_capacity(n);
    for j in 0..n {
        p_dot.push((p_th[j] * p_th[j] - 1.0) / v[j] + d * p[j]);
    }
    let dl_dt = grid.integrate(p);
    let d2l_dt2 = grid.integrate(&p_dot);
    let da_dt = grid.integrate(&mul(p, &v));
    let d2a_dt2 = -TAU + grid.integrate(&mul(p, p)) + d * da_dt;
    let d3a_dt3 = 2.0 * grid.integrate(&mul(p, &p_dot)) + d * d2a_dt2;

    Ok(DiagnosticsRecord {
        t: state.t,
        length,
        area,
        k_min: 1.0 / v_max,
        k_max: 1.0 / conv_margin,
        grad_bound,
        conv_margin,
        width: geometry::width_of(grid, s),
        isoper: length * length / (4.0 * PI * area),
        identities: Identities { dl_dt, d2l_dt2, da_dt, d2a_dt2, d3a_dt3 },
        dl_dt_residual: None,
        d2l_dt2_residual: None,
        da_dt_residual: None,
        d2a_dt2_residual: None,
        d3a_dt3_residual: None,
        curvature_pde_residual: None,
    })
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Fills the residual fields of every interior record: three-point centred
/// differences for the first and second derivatives and the curvature
/// equation, five points for `A'''`. Works on non-uniform record spacing;
/// it is second order on uniform spacing.
pub fn finalize_residuals(mut traj: Trajectory) -> Result<Trajectory> {
    let n = traj.records.len();
    if n < 5 {
        return Err(Error::TooFewRecords { need: 5, got: n });
    }
    if traj.snapshots.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: traj.snapshots.len() });
    }
    let times: Vec<f64> = traj.records.iter().map(|r| r.t).collect();
    let lengths: Vec<f64> = traj.records.iter().map(|r| r.length).collect();
    let areas: Vec<f64> = traj.records.iter().map(|r| r.area).collect();

    let mut pde = Vec::with_capacity(n);
    for i in 0..n {
        pde.push(if i == 0 || i + 1 == n {
            None
        } else {
            Some(curvature_pde_residual(&traj, i, traj.d)?)
        });
    }

    for i in 0..n {
        let rec = &mut traj.records[i];
        rec.curvature_pde_residual = pde[i];
        if i == 0 || i + 1 == n {
            continue;
        }
        let w = fit::fd_weights(times[i], &times[i - 1..=i + 1], 2);
        let id = rec.identities;
        rec.dl_dt_residual = Some((fit::apply(&w[1], &lengths[i - 1..=i + 1]) - id.dl_dt).abs());
        rec.d2l_dt2_residual =
            Some((fit::apply(&w[2], &lengths[i - 1..=i + 1]) - id.d2l_dt2).abs());
        rec.da_dt_residual = Some((fit::apply(&w[1], &areas[i - 1..=i + 1]) - id.da_dt).abs());
        rec.d2a_dt2_residual = Some((fit::apply(&w[2], &areas[i - 1..=i + 1]) - id.d2a_dt2).abs());
        if i >= 2 && i + 2 < n {
            let w5 = fit::fd_weights(times[i], &times[i - 2..=i + 2], 3);
            rec.d3a_dt3_residual =
                Some((fit::apply(&w5[3], &areas[i - 2..=i + 2]) - id.d3a_dt3).abs());
        }
    }
    Ok(traj)
}

/// Max-norm residual of the curvature evolution equation
///
/// ```text
/// k_tt = k²(1 − S_θt²) k_θθ + 2k S_θt k_θt + 4k² S_θt S_t k_θ
///        + (d − 4k S_t) k_t + (S_θt² + 1 − 2 S_t²) k³
/// ```
///
/// at record `index`, with `k_t`, `k_tt` differenced over the neighbouring
/// snapshots and θ-derivatives taken spectrally.
pub fn curvature_pde_residual(traj: &Trajectory, index: usize, d: f64) -> Result<f64> {
    let n_rec = traj.snapshots.len();
    if index == 0 || index + 1 >= n_rec {
        return Err(Error::NotApplicable(format!(
            "record {index} has no neighbours on both sides ({n_rec} snapshots)"
        )));
    }
    let snaps = &traj.snapshots[index - 1..=index + 1];
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let ks: Vec<Vec<f64>> = snaps
        .iter()
        .map(|s| {
            geometry::radius_of_curvature(&s.grid, &s.s).map(|v| v.into_iter().map(|x| 1.0 / x).collect())
        })
        .collect::<Result<_>>()?;
    let w = fit::fd_weights(times[1], &times, 2);

    let mid = &snaps[1];
    let grid = &mid.grid;
    let n = grid.n();
    let k = &ks[1];
    let k_t: Vec<f64> = (0..n).map(|j| w[1][0] * ks[0][j] + w[1][1] * k[j] + w[1][2] * ks[2][j]).collect();
    let k_tt: Vec<f64> = (0..n).map(|j| w[2][0] * ks[0][j] + w[2][1] * k[j] + w[2][2] * ks[2][j]).collect();
    let k_th = grid.plan().derivative(k, 1);
    let k_thth = grid.plan().derivative(k, 2);
    let k_tht = grid.plan().derivative(&k_t, 1);
    let s_t = &mid.p;
    let s_tht = grid.plan().derivative(s_t, 1);

    let mut worst = 0.0f64;
    for j in 0..n {
        let (kj, q, st) = (k[j], s_tht[j], s_t[j]);
        let rhs = kj * kj * (1.0 - q * q) * k_thth[j]
            + 2.0 * kj * q * k_tht[j]
            + 4.0 * kj * kj * q * st * k_th[j]
            + (d - 4.0 * kj * st) * k_t[j]
            + (q * q + 1.0 - 2.0 * st * st) * kj * kj * kj;
        worst = worst.max((k_tt[j] - rhs).abs());
    }
    Ok(worst)
}

/// Largest excess `max_j (inner_j − outer_j)` of the inner support function.
pub fn containment_gap(outer: &SupportState, inner: &SupportState) -> Result<f64> {
    if outer.n() != inner.n() {
        return Err(Error::GridMismatch { left: outer.n(), right: inner.n() });
    }
    Ok(inner.s.iter().zip(&outer.s).map(|(i, o)| i - o).fold(f64::NEG_INFINITY, f64::max))
}

/// Whether the convex body of `inner` lies inside that of `outer`
/// (pointwise ordering of support functions about the common origin).
pub fn containment(outer: &SupportState, inner: &SupportState) -> Result<bool> {
    Ok(containment_gap(outer, inner)? <= CONTAINMENT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::InitialShape;
    use crate::grid::ThetaGrid;
    use alloc::vec;

    fn state(n: usize, shape: InitialShape, p: f64) -> SupportState {
        let g = ThetaGrid::new(n).unwrap();
        let s = g.nodes().into_iter().map(|t| shape.support(t)).collect();
        SupportState::new(g, 0.0, s, vec![p; n]).unwrap()
    }

    #[test]
    fn record_unit_circle() {
        let r = record(&state(64, InitialShape::Circle { r0: 1.0 }, 0.0), 0.0).unwrap();
        assert!((r.length - TAU).abs() < 1e-13);
        assert!((r.area - PI).abs() < 1e-13);
        assert!((r.k_min - 1.0).abs() < 1e-15 && (r.k_max - 1.0).abs() < 1e-15);
        assert_eq!(r.grad_bound, 0.0);
        assert!((r.width - 2.0).abs() < 1e-15);
        assert!((r.isoper - 1.0).abs() < 1e-13);
        assert!((r.identities.d2a_dt2 + TAU).abs() < 1e-13);
        assert!(r.dl_dt_residual.is_none());
    }

    #[test]
    fn record_moving_circle() {
        let r = record(&state(64, InitialShape::Circle { r0: 1.0 }, -0.2), 0.0).unwrap();
        assert!((r.identities.dl_dt + 0.2 * TAU).abs() < 1e-13);
    }

    #[test]
    fn conv_margin_is_inverse_k_max() {
        let r = record(&state(128, InitialShape::Ellipse { a: 1.2, b: 1.0 }, 0.0), 0.0).unwrap();
        assert!((r.conv_margin * r.k_max - 1.0).abs() < 1e-10);
        assert!(r.k_min <= r.k_max);
        assert!(r.isoper >= 1.0);
    }

    #[test]
    fn containment_examples() {
        let two = state(32, InitialShape::Circle { r0: 2.0 }, 0.0);
        let one = state(32, InitialShape::Circle { r0: 1.0 }, 0.0);
        assert!(containment(&two, &one).unwrap());
        let pert = state(32, InitialShape::Perturbed { r0: 1.0, eps: 0.1, m: 2 }, 0.0);
        assert!(!containment(&one, &pert).unwrap());
        let outer = state(32, InitialShape::Circle { r0: 1.3 }, 0.0);
        let ell = state(32, InitialShape::Ellipse { a: 1.2, b: 1.0 }, 0.0);
        assert!(containment(&outer, &ell).unwrap());
        let other = state(16, InitialShape::Circle { r0: 1.0 }, 0.0);
        assert_eq!(containment(&one, &other), Err(Error::GridMismatch { left: 32, right: 16 }));
    }
}
