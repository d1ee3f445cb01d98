//! Closed relativistic string `(t, X(t, u))` in `R^{1,2}`.
//!
//! Integrates the Nambu-Goto equation in a general parametrization,
//!
//! ```text
//! |X_u|² X_tt − 2⟨X_t, X_u⟩ X_tu + (|X_t|² − 1) X_uu = 0,
//! ```
//!
//! and monitors the orthogonal gauge `⟨X_t, X_u⟩ = 0` and the time-like
//! condition `(1 − |X_t|²)|X_u|² + ⟨X_t, X_u⟩² > 0` instead of assuming them.
//!
//! Time steps use the characteristic speeds of the frozen-coefficient
//! equation: with `g01 = ⟨V, X_u⟩`, `g11 = |X_u|²`, plane waves in `u` travel
//! at `(−g01 ± sqrt(g01² + (1 − |V|²) g11)) / g11`, so
//! `dt = cfl · Δu / max_j (|g01| + sqrt(g01² + (1 − |V|²) g11)) / g11`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::ThetaGrid;
use crate::math::{cos, sin, sqrt};

pub type Vec2 = [f64; 2];

/// Largest `|⟨V, X_u⟩|` accepted in initial data.
pub const GAUGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StringState {
    /// Periodic `u`-grid, `u_j = 2πj/m`.
    pub grid: ThetaGrid,
    pub t: f64,
    pub x: Vec<Vec2>,
    pub v: Vec<Vec2>,
}

impl StringState {
    pub fn new(grid: ThetaGrid, t: f64, x: Vec<Vec2>, v: Vec<Vec2>) -> Result<Self> {
        grid.check_len(x.len())?;
        grid.check_len(v.len())?;
        Ok(Self { grid, t, x, v })
    }

    /// Circle of radius `r0` with radial velocity `r1` (gauge-compatible).
    pub fn circle(m: usize, r0: f64, r1: f64) -> Result<Self> {
        let grid = ThetaGrid::new(m)?;
        let (x, v) = grid
            .nodes()
            .into_iter()
            .map(|u| {
                let (c, s) = (cos(u), sin(u));
                ([r0 * c, r0 * s], [r1 * c, r1 * s])
            })
            .unzip();
        Self::new(grid, 0.0, x, v)
    }

    /// Ellipse `(a cos u, b sin u)` moving with speed `vn` along its outward
    /// normal (gauge-compatible).
    pub fn ellipse(m: usize, a: f64, b: f64, vn: f64) -> Result<Self> {
        let grid = ThetaGrid::new(m)?;
        let (x, v) = grid
            .nodes()
            .into_iter()
            .map(|u| {
                let (c, s) = (cos(u), sin(u));
                let (nx, ny) = (b * c, a * s);
                let norm = sqrt(nx * nx + ny * ny);
                ([a * c, b * s], [vn * nx / norm, vn * ny / norm])
            })
            .unzip();
        Self::new(grid, 0.0, x, v)
    }

    pub fn m(&self) -> usize {
        self.grid.n()
    }

    fn component(pts: &[Vec2], c: usize) -> Vec<f64> {
        pts.iter().map(|p| p[c]).collect()
    }

    fn deriv(&self, pts: &[Vec2], order: u8) -> Vec<Vec2> {
        let plan = self.grid.plan();
        let dx = plan.derivative(&Self::component(pts, 0), order);
        let dy = plan.derivative(&Self::component(pts, 1), order);
        dx.into_iter().zip(dy).map(|(a, b)| [a, b]).collect()
    }

    /// `max_j |⟨V_j, (X_u)_j⟩|`.
    pub fn gauge_residual(&self) -> f64 {
        let xu = self.deriv(&self.x, 1);
        self.v.iter().zip(&xu).map(|(v, e)| dot(*v, *e).abs()).fold(0.0, f64::max)
    }

    /// `min_j (1 − |V|²)|X_u|² + ⟨V, X_u⟩²`; positive iff time-like.
    pub fn timelike_margin(&self) -> f64 {
        let xu = self.deriv(&self.x, 1);
        self.v
            .iter()
            .zip(&xu)
            .map(|(v, e)| {
                let g01 = dot(*v, *e);
                (1.0 - dot(*v, *v)) * dot(*e, *e) + g01 * g01
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance between two nodes.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.x.iter().enumerate() {
            for b in &self.x[i + 1..] {
                let d = [a[0] - b[0], a[1] - b[1]];
                best = best.max(dot(d, d));
            }
        }
        sqrt(best)
    }

    /// Mean distance of the nodes from the origin.
    pub fn mean_radius(&self) -> f64 {
        self.x.iter().map(|p| sqrt(dot(*p, *p))).sum::<f64>() / self.m() as f64
    }

    fn max_char_speed(&self) -> Result<f64> {
        let xu = self.deriv(&self.x, 1);
        let mut worst = 0.0f64;
        for (j, (v, e)) in self.v.iter().zip(&xu).enumerate() {
            let g11 = dot(*e, *e);
            if g11 <= 0.0 {
                return Err(Error::DegenerateParametrization(j));
            }
            let g01 = dot(*v, *e);
            let disc = g01 * g01 + (1.0 - dot(*v, *v)) * g11;
            if disc <= 0.0 {
                return Err(Error::TimelikeViolation(sqrt(dot(*v, *v))));
            }
            worst = worst.max((g01.abs() + sqrt(disc)) / g11);
        }
        Ok(worst)
    }
}

#[inline]
fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `(X_t, V_t)` with `V_t = [2⟨V, X_u⟩ V_u − (|V|² − 1) X_uu] / |X_u|²`.
pub fn string_rhs(state: &StringState) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
    let xu = state.deriv(&state.x, 1);
    let xuu = state.deriv(&state.x, 2);
    let vu = state.deriv(&state.v, 1);
    let scale = xu.iter().map(|e| dot(*e, *e)).fold(0.0, f64::max);
    let mut acc = Vec::with_capacity(state.m());
    for j in 0..state.m() {
        let g11 = dot(xu[j], xu[j]);
        if !(g11 > 1e-28 * scale.max(1e-300)) {
            return Err(Error::DegenerateParametrization(j));
        }
        let g01 = dot(state.v[j], xu[j]);
        let w = dot(state.v[j], state.v[j]) - 1.0;
        acc.push([
            (2.0 * g01 * vu[j][0] - w * xuu[j][0]) / g11,
            (2.0 * g01 * vu[j][1] - w * xuu[j][1]) / g11,
        ]);
    }
    Ok((state.v.clone(), acc))
}

fn rk4(state: &StringState, dt: f64) -> Result<StringState> {
    let shift = |base: &StringState, dx: &[Vec2], dv: &[Vec2], h: f64| StringState {
        grid: base.grid.clone(),
        t: base.t,
        x: base.x.iter().zip(dx).map(|(a, b)| [a[0] + h * b[0], a[1] + h * b[1]]).collect(),
        v: base.v.iter().zip(dv).map(|(a, b)| [a[0] + h * b[0], a[1] + h * b[1]]).collect(),
    };
    let (a1, b1) = string_rhs(state)?;
    let (a2, b2) = string_rhs(&shift(state, &a1, &b1, 0.5 * dt))?;
    let (a3, b3) = string_rhs(&shift(state, &a2, &b2, 0.5 * dt))?;
    let (a4, b4) = string_rhs(&shift(state, &a3, &b3, dt))?;
    let comb = |y: &[Vec2], k1: &[Vec2], k2: &[Vec2], k3: &[Vec2], k4: &[Vec2]| -> Vec<Vec2> {
        (0..y.len())
            .map(|j| {
                core::array::from_fn(|c| {
                    y[j][c] + dt / 6.0 * (k1[j][c] + 2.0 * k2[j][c] + 2.0 * k3[j][c] + k4[j][c])
                })
            })
            .collect()
    };
    let next = StringState {
        grid: state.grid.clone(),
        t: state.t + dt,
        x: comb(&state.x, &a1, &a2, &a3, &a4),
        v: comb(&state.v, &b1, &b2, &b3, &b4),
    };
    if let Some(j) = next.x.iter().chain(&next.v).position(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::NumericalFailure { node: j % next.m(), stage: 5 });
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StringTermination {
    ReachedTEnd,
    CollapseDetected,
    TimelikeLost,
    DegenerateParametrization,
    NumericalFailure,
}

impl StringTermination {
    pub fn as_str(&self) -> &'static str {
        match self {
            StringTermination::ReachedTEnd => "reached_t_end",
            StringTermination::CollapseDetected => "collapse_detected",
            StringTermination::TimelikeLost => "timelike_lost",
            StringTermination::DegenerateParametrization => "degenerate_parametrization",
            StringTermination::NumericalFailure => "numerical_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StringRecord {
    pub t: f64,
    pub mean_radius: f64,
    pub diameter: f64,
    pub gauge_residual: f64,
    pub timelike_margin: f64,
}

impl StringRecord {
    fn of(state: &StringState) -> Self {
        Self {
            t: state.t,
            mean_radius: state.mean_radius(),
            diameter: state.diameter(),
            gauge_residual: state.gauge_residual(),
            timelike_margin: state.timelike_margin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StringOptions {
    pub record_every: usize,
    /// Collapse threshold on the node diameter.
    pub diameter_min: f64,
}

impl Default for StringOptions {
    fn default() -> Self {
        Self { record_every: 1, diameter_min: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StringRun {
    pub records: Vec<StringRecord>,
    pub snapshots: Vec<StringState>,
    pub termination: StringTermination,
    pub t_final: f64,
    pub steps: usize,
}

/// RK4 + CFL evolution from gauge-compatible, time-like initial data.
pub fn string_evolve(
    initial: StringState,
    cfl: f64,
    t_end: f64,
    options: &StringOptions,
) -> Result<StringRun> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidConfig(format!("cfl must lie in (0, 1], got {cfl}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) || options.record_every == 0 {
        return Err(Error::InvalidConfig(format!(
            "need t_end > 0 and record_every >= 1, got {t_end}, {}",
            options.record_every
        )));
    }
    let gauge = initial.gauge_residual();
    if gauge > GAUGE_TOL {
        return Err(Error::InvalidInput(format!(
            "initial data violates the orthogonal gauge: max |<V, X_u>| = {gauge:e}"
        )));
    }
    if initial.timelike_margin() <= 0.0 {
        return Err(Error::InvalidInput("initial data is not time-like".into()));
    }

    let mut state = initial;
    let mut run = StringRun {
        records: alloc::vec![StringRecord::of(&state)],
        snapshots: alloc::vec![state.clone()],
        termination: StringTermination::ReachedTEnd,
        t_final: state.t,
        steps: 0,
    };
    loop {
        let speed = match state.max_char_speed() {
            Ok(s) => s,
            Err(e) => {
                run.termination = termination_for(&e);
                break;
            }
        };
        let mut dt = cfl * state.grid.spacing() / speed;
        let mut land = false;
        if state.t + dt >= t_end {
            dt = t_end - state.t;
            land = true;
        }
        let mut next = match rk4(&state, dt) {
            Ok(n) => n,
            Err(e) => {
                run.termination = termination_for(&e);
                break;
            }
        };
        if land {
            next.t = t_end;
        }
        state = next;
        run.steps += 1;

        let rec = StringRecord::of(&state);
        let term = if rec.timelike_margin <= 0.0 {
            Some(StringTermination::TimelikeLost)
        } else if rec.diameter < options.diameter_min {
            Some(StringTermination::CollapseDetected)
        } else if land {
            Some(StringTermination::ReachedTEnd)
        } else {
            None
        };
        if term.is_some() || run.steps % options.record_every == 0 {
            run.records.push(rec);
            run.snapshots.push(state.clone());
        }
        if let Some(term) = term {
            run.termination = term;
            break;
        }
    }
    run.t_final = run.records.last().map_or(0.0, |r| r.t);
    Ok(run)
}

fn termination_for(e: &Error) -> StringTermination {
    match e {
        Error::TimelikeViolation(_) => StringTermination::TimelikeLost,
        Error::DegenerateParametrization(_) => StringTermination::DegenerateParametrization,
        _ => StringTermination::NumericalFailure,
    }
}
