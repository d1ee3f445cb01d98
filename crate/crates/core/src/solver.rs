//! Method-of-lines integration of the support-function flow.
//!
//! The second-order equation is carried as the first-order system
//!
//! ```text
//! S_τ = P
//! P_τ = (P_θ² − 1)/(S_θθ + S) + d·P
//! ```
//!
//! (`P_θ` is `S_θτ`). θ-derivatives are spectral, time stepping is classical
//! RK4 under a CFL limit built from the characteristic speeds `k S_θτ ± k`.

use alloc::format;
use alloc::vec::Vec;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result, Stage};
use crate::fit;
use crate::geometry::{self, InitialShape, VelocityShape};
use crate::grid::ThetaGrid;

/// Hard cap on accepted steps per run.
pub const MAX_STEPS: usize = 20_000_000;

/// Flow unknown at one instant: `S` and `P = S_τ` on the θ-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportState {
    pub grid: ThetaGrid,
    pub t: f64,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
}

impl SupportState {
    pub fn new(grid: ThetaGrid, t: f64, s: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let state = Self { grid, t, s, p };
        state.validate(0)?;
        Ok(state)
    }

    /// Checks lengths, finiteness and strict convexity; returns `S_θθ + S`.
    pub fn validate(&self, stage: Stage) -> Result<Vec<f64>> {
        self.grid.check_len(self.s.len())?;
        self.grid.check_len(self.p.len())?;
        if let Some(node) = self.p.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure { node, stage });
        }
        geometry::radius_of_curvature(&self.grid, &self.s).map_err(|e| e.at_stage(stage))
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub initial: InitialShape,
    pub velocity: VelocityShape,
    pub n: usize,
    pub cfl: f64,
    /// Dissipation constant, `d <= 0`; `0` is the undamped flow.
    pub d: f64,
    pub t_end: f64,
    pub k_max_limit: f64,
    pub width_min: f64,
    /// Record every this many accepted steps (ignored when `record_dt` is set).
    pub record_every: usize,
    /// Record at exact multiples of this interval, clipping steps to land on
    /// them. Gives the uniform cadence the differenced identities want.
    pub record_dt: Option<f64>,
    /// 2/3-rule filtering of `P_τ`.
    pub dealias: bool,
}

impl FlowConfig {
    pub const DEFAULT_CFL: f64 = 0.5;
    pub const DEFAULT_T_END: f64 = 10.0;
    pub const DEFAULT_K_MAX_LIMIT: f64 = 1e4;
    pub const DEFAULT_WIDTH_MIN: f64 = 1e-3;

    pub fn new(initial: InitialShape, n: usize) -> Self {
        Self {
            initial,
            velocity: VelocityShape::default(),
            n,
            cfl: Self::DEFAULT_CFL,
            d: 0.0,
            t_end: Self::DEFAULT_T_END,
            k_max_limit: Self::DEFAULT_K_MAX_LIMIT,
            width_min: Self::DEFAULT_WIDTH_MIN,
            record_every: 1,
            record_dt: None,
            dealias: false,
        }
    }

    pub fn with_velocity(mut self, velocity: VelocityShape) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_dissipation(mut self, d: f64) -> Self {
        self.d = d;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_record_dt(mut self, record_dt: f64) -> Self {
        self.record_dt = Some(record_dt);
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.d <= 0.0 && self.d.is_finite()) {
            return bad(format!("dissipation d must be <= 0, got {}", self.d));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.k_max_limit > 0.0) || !(self.width_min > 0.0) {
            return bad(format!(
                "thresholds must be positive, got k_max_limit = {}, width_min = {}",
                self.k_max_limit, self.width_min
            ));
        }
        if self.record_every == 0 {
            return bad("record_every must be >= 1".into());
        }
        if let Some(h) = self.record_dt {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("record_dt must be positive, got {h}"));
            }
        }
        if self.n < ThetaGrid::MIN_NODES || self.n % 2 != 0 {
            return bad(format!("n must be even and >= 16, got {}", self.n));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedTEnd,
    CollapseDetected,
    BlowupDetected,
    HyperbolicityLost,
    NumericalFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ReachedTEnd => "reached_t_end",
            Termination::CollapseDetected => "collapse_detected",
            Termination::BlowupDetected => "blowup_detected",
            Termination::HyperbolicityLost => "hyperbolicity_lost",
            Termination::NumericalFailure => "numerical_failure",
        }
    }
}

impl core::fmt::Display for Termination {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Non-fatal observations about the inputs of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// `max |f̃_θ| >= 1`: the initial data sits outside the light cone.
    VelocityOutsideLightCone { max_slope: f64 },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::VelocityOutsideLightCone { max_slope } => write!(
                f,
                "initial velocity slope max|f_theta| = {max_slope} >= 1 (outside the light cone)"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    /// One state per record, same order.
    pub snapshots: Vec<SupportState>,
    pub termination: Termination,
    pub t_final: f64,
    pub steps: usize,
    /// Dissipation the run used; the residual identities need it.
    pub d: f64,
    pub warnings: Vec<Warning>,
    /// The error that ended the run for `HyperbolicityLost`/`NumericalFailure`.
    pub failure: Option<Error>,
}

/// `(S_τ, P_τ)` for the current state.
pub fn rhs(state: &SupportState, d: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    eval_rhs(&state.grid, &state.s, &state.p, d, false, 0)
}

fn eval_rhs(
    grid: &ThetaGrid,
    s: &[f64],
    p: &[f64],
    d: f64,
    dealias: bool,
    stage: Stage,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some(node) = s.iter().chain(p).position(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure { node: node % grid.n(), stage });
    }
    let v = geometry::radius_of_curvature(grid, s).map_err(|e| e.at_stage(stage))?;
    let p_th = grid.plan().derivative(p, 1);
    let mut p_dot: Vec<f64> = p_th
        .iter()
        .zip(&v)
        .zip(p)
        .map(|((q, vj), pj)| (q * q - 1.0) / vj + d * pj)
        .collect();
    if dealias {
        p_dot = grid.plan().truncate(&p_dot, grid.n() / 3);
    }
    Ok((p.to_vec(), p_dot))
}

/// `max_j k_j (|P_θ| + 1)`, bounding both characteristic speeds.
pub fn max_char_speed(state: &SupportState) -> Result<f64> {
    let v = geometry::radius_of_curvature(&state.grid, &state.s)?;
    let p_th = state.grid.plan().derivative(&state.p, 1);
    Ok(v.iter().zip(&p_th).map(|(vj, q)| (q.abs() + 1.0) / vj).fold(0.0, f64::max))
}

/// `cfl · Δθ / max_char_speed`.
pub fn cfl_dt(state: &SupportState, cfl: f64) -> Result<f64> {
    Ok(cfl * state.grid.spacing() / max_char_speed(state)?)
}

/// One classical RK4 step.
pub fn step(state: &SupportState, dt: f64, d: f64) -> Result<SupportState> {
    step_with(state, dt, d, false)
}

pub fn step_with(state: &SupportState, dt: f64, d: f64, dealias: bool) -> Result<SupportState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let g = &state.grid;
    let axpy = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> {
        base.iter().zip(k).map(|(b, k)| b + h * k).collect()
    };

    let (ks1, kp1) = eval_rhs(g, &state.s, &state.p, d, dealias, 1)?;
    let (ks2, kp2) = eval_rhs(
        g,
        &axpy(&state.s, &ks1, 0.5 * dt),
        &axpy(&state.p, &kp1, 0.5 * dt),
        d,
        dealias,
        2,
    )?;
    let (ks3, kp3) = eval_rhs(
        g,
        &axpy(&state.s, &ks2, 0.5 * dt),
        &axpy(&state.p, &kp2, 0.5 * dt),
        d,
        dealias,
        3,
    )?;
    let (ks4, kp4) =
        eval_rhs(g, &axpy(&state.s, &ks3, dt), &axpy(&state.p, &kp3, dt), d, dealias, 4)?;

    let combine = |y: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
        (0..y.len())
            .map(|j| y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
            .collect()
    };
    let next = SupportState {
        grid: g.clone(),
        t: state.t + dt,
        s: combine(&state.s, &ks1, &ks2, &ks3, &ks4),
        p: combine(&state.p, &kp1, &kp2, &kp3, &kp4),
    };
    next.validate(5)?;
    Ok(next)
}

/// Integrates a full run from `S = h`, `P = −f̃` until `t_end`, collapse,
/// blow-up or failure. Runtime terminations are reported in the returned
/// trajectory, never as errors.
pub fn evolve(config: &FlowConfig) -> Result<Trajectory> {
    config.validate()?;
    let grid = ThetaGrid::new(config.n)?;
    let (support, velocity) = geometry::make_initial(&config.initial, &config.velocity, &grid)?;

    let mut warnings = Vec::new();
    let slope = velocity.max_slope();
    if slope >= 1.0 {
        warnings.push(Warning::VelocityOutsideLightCone { max_slope: slope });
    }

    let p0 = velocity.samples().iter().map(|f| -f).collect();
    let mut state = SupportState::new(grid, 0.0, support.into_samples(), p0)?;
    let d = config.d;

    let mut traj = Trajectory {
        records: Vec::new(),
        snapshots: Vec::new(),
        termination: Termination::ReachedTEnd,
        t_final: 0.0,
        steps: 0,
        d,
        warnings,
        failure: None,
    };
    push_record(&mut traj, &state)?;

    let mut next_record_index = 1usize;
    loop {
        if traj.steps >= MAX_STEPS {
            traj.termination = Termination::NumericalFailure;
            traj.failure =
                Some(Error::InvalidInput(format!("step limit {MAX_STEPS} reached at t = {}", state.t)));
            break;
        }

        let mut dt = match cfl_dt(&state, config.cfl) {
            Ok(dt) => dt,
            Err(e) => {
                fail(&mut traj, e);
                break;
            }
        };
        let mut target = None;
        if state.t + dt >= config.t_end {
            dt = config.t_end - state.t;
            target = Some(config.t_end);
        }
        let mut record_due = false;
        if let Some(h) = config.record_dt {
            let next_rec = next_record_index as f64 * h;
            if next_rec <= config.t_end && state.t + dt >= next_rec {
                dt = next_rec - state.t;
                target = Some(next_rec);
                record_due = true;
            }
        }

        let mut next = match step_with(&state, dt, d, config.dealias) {
            Ok(next) => next,
            Err(e) => {
                fail(&mut traj, e);
                break;
            }
        };
        if let Some(t) = target {
            next.t = t;
        }
        traj.steps += 1;
        state = next;

        if config.record_dt.is_some() {
            if record_due {
                next_record_index += 1;
            }
        } else {
            record_due = traj.steps % config.record_every == 0;
        }

        let v = state.validate(0)?;
        let k_max = v.iter().fold(f64::INFINITY, |m, x| m.min(*x)).recip();
        let width = geometry::width_of(&state.grid, &state.s);
        let termination = if width <= config.width_min {
            Some(Termination::CollapseDetected)
        } else if k_max >= config.k_max_limit {
            if width <= 10.0 * config.width_min {
                Some(Termination::CollapseDetected)
            } else {
                Some(Termination::BlowupDetected)
            }
        } else if state.t >= config.t_end {
            Some(Termination::ReachedTEnd)
        } else {
            None
        };

        if record_due || termination.is_some() {
            push_record(&mut traj, &state)?;
        }
        if let Some(term) = termination {
            traj.termination = term;
            break;
        }
    }

    traj.t_final = traj.records.last().map_or(0.0, |r| r.t);
    Ok(traj)
}

fn push_record(traj: &mut Trajectory, state: &SupportState) -> Result<()> {
    traj.records.push(diagnostics::record(state, traj.d)?);
    traj.snapshots.push(state.clone());
    Ok(())
}

fn fail(traj: &mut Trajectory, e: Error) {
    traj.termination = match e {
        Error::HyperbolicityLost { .. } => Termination::HyperbolicityLost,
        _ => Termination::NumericalFailure,
    };
    traj.failure = Some(e);
}

/// Collapse time extrapolated from the tail of a collapsing trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseEstimate {
    /// Midpoint of the width- and length-based estimates.
    pub time: f64,
    /// Half their spread.
    pub uncertainty: f64,
    pub from_width: f64,
    pub from_length: f64,
}

/// Fits quadratics to `width_max(t)` and `L(t)` over the last four records
/// and returns the midpoint of their roots.
pub fn estimate_collapse_time(traj: &Trajectory) -> Result<CollapseEstimate> {
    if traj.termination != Termination::CollapseDetected {
        return Err(Error::NotApplicable(format!(
            "trajectory terminated with {}, not collapse",
            traj.termination
        )));
    }
    let n = traj.records.len();
    if n < 4 {
        return Err(Error::TooFewRecords { need: 4, got: n });
    }
    let tail = &traj.records[n - 4..];
    let t_last = tail[3].t;
    let xs: Vec<f64> = tail.iter().map(|r| r.t - t_last).collect();
    let root = |ys: Vec<f64>| -> Result<f64> {
        // Linear extrapolation from the last two points picks the branch.
        let slope = (ys[3] - ys[2]) / (xs[3] - xs[2]);
        let guess = -ys[3] / slope;
        let c = fit::quadratic_fit(&xs, &ys)
            .ok_or_else(|| Error::NotApplicable("degenerate collapse fit".into()))?;
        let r = fit::quadratic_root_near(c, guess).unwrap_or(guess);
        Ok(t_last + r)
    };
    let from_width = root(tail.iter().map(|r| r.width).collect())?;
    let from_length = root(tail.iter().map(|r| r.length).collect())?;
    Ok(CollapseEstimate {
        time: 0.5 * (from_width + from_length),
        uncertainty: 0.5 * (from_width - from_length).abs(),
        from_width,
        from_length,
    })
}
