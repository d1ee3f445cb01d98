//! Run orchestration: single runs, refinement studies, containment
//! comparisons, oracle dumps and parallel sweeps.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use hmcf_core::fit::{observed_order, richardson};
use hmcf_core::{
    circle_flow, containment_gap, estimate_collapse_time, evolve, finalize_residuals, make_initial, reconstruct,
    string_circle, string_evolve, CollapseEstimate, DiagnosticsRecord, FlowConfig, InitialShape, RadialSolution,
    StringRun, StringState, StringTermination, SupportProfile, Termination, ThetaGrid, Trajectory, VelocityShape,
    CONTAINMENT_TOL,
};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{self, ConfigError, RunConfig, StringInitial, StringRunConfig};
use crate::output;

/// Identity residual maxima are taken over records with `t <= IDENTITY_WINDOW * t_final`;
/// the tail approaching a singularity is excluded.
pub const IDENTITY_WINDOW: f64 = 0.8;

/// Record interval used by `compare` when neither config sets one.
pub const DEFAULT_COMPARE_DT: f64 = 0.01;

pub const WORKERS_ENV: &str = "HMCF_WORKERS";

/// Keys of `max_identity_residuals`, in file order.
pub const RESIDUAL_KEYS: [&str; 6] = ["dL_dt", "d2L_dt2", "dA_dt", "d2A_dt2", "d3A_dt3", "curvature_pde"];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Core(#[from] hmcf_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Precondition(_) => 2,
            RunError::Core(
                hmcf_core::Error::InvalidConfig(_)
                | hmcf_core::Error::InvalidInput(_)
                | hmcf_core::Error::InvalidGrid(_)
                | hmcf_core::Error::NotApplicable(_)
                | hmcf_core::Error::TimelikeViolation(_),
            ) => 2,
            RunError::Core(hmcf_core::Error::HyperbolicityLost { .. }) => 3,
            RunError::Core(_) => 4,
            RunError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

pub fn termination_exit_code(t: Termination) -> i32 {
    match t {
        Termination::HyperbolicityLost => 3,
        Termination::NumericalFailure => 4,
        _ => 0,
    }
}

pub fn string_exit_code(t: StringTermination) -> i32 {
    match t {
        StringTermination::TimelikeLost => 3,
        StringTermination::DegenerateParametrization | StringTermination::NumericalFailure => 4,
        _ => 0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub config_digest: String,
    pub kind: &'static str,
    pub termination: String,
    pub t_final: f64,
    pub steps: usize,
    pub collapse_estimate: Option<CollapseEstimate>,
    pub max_identity_residuals: BTreeMap<&'static str, Option<f64>>,
    /// String runs only: worst gauge residual and smallest time-like margin.
    pub string_monitors: Option<(f64, f64)>,
    pub warnings: Vec<String>,
    pub failure: Option<String>,
    pub wall_time: f64,
    pub exit_code: i32,
}

impl RunSummary {
    pub fn to_json(&self) -> Value {
        let residuals: serde_json::Map<String, Value> =
            self.max_identity_residuals.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        let mut v = json!({
            "config_digest": self.config_digest,
            "kind": self.kind,
            "termination": self.termination,
            "t_final": self.t_final,
            "steps": self.steps,
            "collapse_estimate": self.collapse_estimate.map(|c| json!({
                "time": c.time,
                "uncertainty": c.uncertainty,
                "from_width": c.from_width,
                "from_length": c.from_length,
            })),
            "max_identity_residuals": residuals,
            "warnings": self.warnings,
            "failure": self.failure,
            "wall_time": self.wall_time,
            "exit_code": self.exit_code,
        });
        if let Some((gauge, margin)) = self.string_monitors {
            v["max_gauge_residual"] = json!(gauge);
            v["min_timelike_margin"] = json!(margin);
        }
        v
    }
}

/// A finished flow run with residuals filled in where enough records exist.
#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
}

pub fn max_identity_residuals(records: &[DiagnosticsRecord], t_final: f64) -> BTreeMap<&'static str, Option<f64>> {
    let window: Vec<&DiagnosticsRecord> =
        records.iter().filter(|r| r.t <= IDENTITY_WINDOW * t_final).collect();
    let pick: [fn(&DiagnosticsRecord) -> Option<f64>; 6] = [
        |r| r.dl_dt_residual,
        |r| r.d2l_dt2_residual,
        |r| r.da_dt_residual,
        |r| r.d2a_dt2_residual,
        |r| r.d3a_dt3_residual,
        |r| r.curvature_pde_residual,
    ];
    RESIDUAL_KEYS
        .iter()
        .zip(pick)
        .map(|(k, f)| (*k, window.iter().filter_map(|r| f(r)).reduce(f64::max)))
        .collect()
}

pub fn simulate_flow(cfg: &FlowConfig, digest: &str) -> Result<FlowOutcome, RunError> {
    let start = Instant::now();
    let mut traj = evolve(cfg)?;
    if traj.records.len() >= 5 {
        traj = finalize_residuals(traj)?;
    }
    let collapse_estimate = estimate_collapse_time(&traj).ok();
    let summary = RunSummary {
        config_digest: digest.to_string(),
        kind: "flow",
        termination: traj.termination.as_str().to_string(),
        t_final: traj.t_final,
        steps: traj.steps,
        collapse_estimate,
        max_identity_residuals: max_identity_residuals(&traj.records, traj.t_final),
        string_monitors: None,
        warnings: traj.warnings.iter().map(|w| w.to_string()).collect(),
        failure: traj.failure.as_ref().map(|e| e.to_string()),
        wall_time: start.elapsed().as_secs_f64(),
        exit_code: termination_exit_code(traj.termination),
    };
    Ok(FlowOutcome { trajectory: traj, summary })
}

pub fn string_initial(cfg: &StringRunConfig) -> hmcf_core::Result<StringState> {
    let state = match cfg.initial {
        StringInitial::Circle { r0 } => StringState::circle(cfg.m, r0, cfg.vn)?,
        StringInitial::Ellipse { a, b } => StringState::ellipse(cfg.m, a, b, cfg.vn)?,
    };
    if state.timelike_margin() <= 0.0 {
        return Err(hmcf_core::Error::TimelikeViolation(cfg.vn.abs()));
    }
    Ok(state)
}

pub fn simulate_string(cfg: &StringRunConfig, digest: &str) -> Result<(StringRun, RunSummary), RunError> {
    let start = Instant::now();
    let run = string_evolve(string_initial(cfg)?, cfg.cfl, cfg.t_end, &cfg.options)?;
    let gauge = run.records.iter().map(|r| r.gauge_residual).fold(0.0, f64::max);
    let margin = run.records.iter().map(|r| r.timelike_margin).fold(f64::INFINITY, f64::min);
    let summary = RunSummary {
        config_digest: digest.to_string(),
        kind: "string",
        termination: run.termination.as_str().to_string(),
        t_final: run.t_final,
        steps: run.steps,
        collapse_estimate: None,
        max_identity_residuals: BTreeMap::new(),
        string_monitors: Some((gauge, margin)),
        warnings: Vec::new(),
        failure: None,
        wall_time: start.elapsed().as_secs_f64(),
        exit_code: string_exit_code(run.termination),
    };
    Ok((run, summary))
}

fn snapshot_indices(count: usize, every: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..count).step_by(every).collect();
    if count > 0 && idx.last() != Some(&(count - 1)) {
        idx.push(count - 1);
    }
    idx
}

fn write_summary(dir: &Path, summary: &RunSummary) -> Result<(), RunError> {
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary.to_json()).expect("summary serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

pub fn write_flow(outcome: &FlowOutcome, dir: &Path, snapshot_every: usize, svg: bool) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let traj = &outcome.trajectory;
    let diag = dir.join("diagnostics.csv");
    fs::write(&diag, output::diagnostics_csv(&traj.records)).map_err(io_err(&diag))?;
    let mut curves = Vec::new();
    for i in snapshot_indices(traj.snapshots.len(), snapshot_every) {
        let state = &traj.snapshots[i];
        let name = format!("snapshot_{i:04}.csv");
        let path = dir.join(&name);
        fs::write(&path, output::snapshot_csv(state)?).map_err(io_err(&path))?;
        if svg {
            let curve = reconstruct(&SupportProfile::new(state.grid.clone(), state.s.clone())?)?;
            curves.push((state.t, curve.x.iter().zip(&curve.y).map(|(x, y)| [*x, *y]).collect()));
        }
    }
    if svg {
        let path = dir.join("curves.svg");
        fs::write(&path, output::curves_svg(&curves)).map_err(io_err(&path))?;
    }
    write_summary(dir, &outcome.summary)
}

pub fn write_string(run: &StringRun, summary: &RunSummary, dir: &Path, snapshot_every: usize, svg: bool) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let diag = dir.join("string_diagnostics.csv");
    fs::write(&diag, output::string_csv(&run.records)).map_err(io_err(&diag))?;
    let mut curves = Vec::new();
    for i in snapshot_indices(run.snapshots.len(), snapshot_every) {
        let state = &run.snapshots[i];
        let path = dir.join(format!("snapshot_{i:04}.csv"));
        fs::write(&path, output::string_snapshot_csv(state)).map_err(io_err(&path))?;
        curves.push((state.t, state.x.clone()));
    }
    if svg {
        let path = dir.join("curves.svg");
        fs::write(&path, output::curves_svg(&curves)).map_err(io_err(&path))?;
    }
    write_summary(dir, summary)
}

/// Executes a parsed config and writes its files into `dir`.
pub fn run(cfg: &RunConfig, dir: &Path, svg: bool) -> Result<RunSummary, RunError> {
    let digest = cfg.digest();
    let every = cfg.output().snapshot_every;
    match cfg {
        RunConfig::Flow(f) => {
            let outcome = simulate_flow(&f.flow, &digest)?;
            write_flow(&outcome, dir, every, svg)?;
            Ok(outcome.summary)
        }
        RunConfig::String(s) => {
            let (run, summary) = simulate_string(s, &digest)?;
            write_string(&run, &summary, dir, every, svg)?;
            Ok(summary)
        }
    }
}

// ---------------------------------------------------------------- refine

#[derive(Debug, Clone, PartialEq)]
pub struct RefineLevel {
    pub n: usize,
    pub record_dt: Option<f64>,
    pub termination: Termination,
    pub t_final: f64,
    pub collapse_estimate: Option<f64>,
    /// Max-norm error of `S` at the evaluation time against the oracle
    /// (circles) or the finest level.
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineTable {
    pub at: f64,
    /// `"oracle"` or `"finest"`.
    pub reference: &'static str,
    pub levels: Vec<RefineLevel>,
    /// Observed orders between consecutive levels.
    pub orders: Vec<f64>,
    /// Fourth-order Richardson extrapolation of the two finest collapse
    /// estimates, when every level collapsed.
    pub collapse_extrapolated: Option<f64>,
}

impl RefineTable {
    pub fn to_json(&self) -> Value {
        json!({
            "at": self.at,
            "reference": self.reference,
            "levels": self.levels.iter().map(|l| json!({
                "n": l.n,
                "record_dt": l.record_dt,
                "termination": l.termination.as_str(),
                "t_final": l.t_final,
                "collapse_estimate": l.collapse_estimate,
                "error": l.error,
            })).collect::<Vec<_>>(),
            "observed_orders": self.orders,
            "collapse_extrapolated": self.collapse_extrapolated,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,n,t_final,termination,collapse_estimate,error,observed_order\n");
        for (i, l) in self.levels.iter().enumerate() {
            let order = if i == 0 { None } else { self.orders.get(i - 1).copied() };
            let f = |x: Option<f64>| x.map(output::fmt_num).unwrap_or_default();
            out.push_str(&format!(
                "{i},{},{},{},{},{},{}\n",
                l.n,
                output::fmt_num(l.t_final),
                l.termination.as_str(),
                f(l.collapse_estimate),
                f(l.error),
                f(order)
            ));
        }
        out
    }
}

fn level_config(base: &FlowConfig, level: usize) -> FlowConfig {
    let mut cfg = base.clone();
    cfg.n = base.n << level;
    cfg.record_dt = base.record_dt.map(|h| h / (1u64 << level) as f64);
    cfg
}

fn circle_oracle(cfg: &FlowConfig) -> Option<(f64, f64)> {
    match (cfg.initial, cfg.velocity) {
        (InitialShape::Circle { r0 }, VelocityShape::Constant { f0 }) => Some((r0, -f0)),
        _ => None,
    }
}

fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    results.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("every item ran")).collect()
}

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Reruns `base` with `n` and the record cadence doubled per level.
/// `at` defaults to half the coarsest run's final time.
pub fn refine(base: &FlowConfig, levels: usize, at: Option<f64>) -> Result<RefineTable, RunError> {
    if levels < 3 {
        return Err(RunError::Precondition(format!("refine needs at least 3 levels, got {levels}")));
    }
    let configs: Vec<FlowConfig> = (0..levels).map(|l| level_config(base, l)).collect();
    let workers = worker_count();
    let full: Vec<Result<Trajectory, hmcf_core::Error>> = parallel_map(&configs, workers, evolve);
    let full = full.into_iter().collect::<Result<Vec<_>, _>>()?;

    let at = at.unwrap_or(0.5 * full[0].t_final);
    if let Some(short) = full.iter().find(|t| t.t_final < at) {
        return Err(RunError::Precondition(format!(
            "evaluation time {at} lies beyond a level that ended at {} ({})",
            short.t_final, short.termination
        )));
    }
    let truncated: Vec<FlowConfig> = configs.iter().map(|c| c.clone().with_t_end(at)).collect();
    let states: Vec<Result<Trajectory, hmcf_core::Error>> = parallel_map(&truncated, workers, evolve);
    let states = states.into_iter().collect::<Result<Vec<_>, _>>()?;
    let finals: Vec<&Vec<f64>> = states.iter().map(|t| &t.snapshots.last().expect("final state").s).collect();

    let (reference, errors, orders) = match circle_oracle(base) {
        Some((r0, r1)) => {
            let exact = circle_flow(r0, r1, base.d, at)?.last().1;
            let errors: Vec<Option<f64>> = finals
                .iter()
                .map(|s| Some(s.iter().map(|v| (v - exact).abs()).fold(0.0, f64::max)))
                .collect();
            let orders = errors.windows(2).map(|w| observed_order(w[0].unwrap(), w[1].unwrap(), 2.0)).collect();
            ("oracle", errors, orders)
        }
        None => {
            let finest = finals[levels - 1];
            let gap = |coarse: &[f64], fine: &[f64]| {
                let stride = fine.len() / coarse.len();
                coarse.iter().enumerate().map(|(j, v)| (v - fine[j * stride]).abs()).fold(0.0, f64::max)
            };
            let errors =
                (0..levels).map(|l| (l + 1 < levels).then(|| gap(finals[l], finest))).collect();
            let diffs: Vec<f64> = (0..levels - 1).map(|l| gap(finals[l], finals[l + 1])).collect();
            let orders = diffs.windows(2).map(|w| observed_order(w[0], w[1], 2.0)).collect();
            ("finest", errors, orders)
        }
    };

    let estimates: Vec<Option<f64>> =
        full.iter().map(|t| estimate_collapse_time(t).ok().map(|c| c.time)).collect();
    let collapse_extrapolated = match (estimates[levels - 2], estimates[levels - 1]) {
        (Some(c), Some(f)) if estimates.iter().all(Option::is_some) => Some(richardson(c, f, 2.0, 4.0)),
        _ => None,
    };

    let levels = configs
        .iter()
        .zip(&full)
        .zip(estimates)
        .zip(errors)
        .map(|(((cfg, traj), est), error)| RefineLevel {
            n: cfg.n,
            record_dt: cfg.record_dt,
            termination: traj.termination,
            t_final: traj.t_final,
            collapse_estimate: est,
            error,
        })
        .collect();
    Ok(RefineTable { at, reference, levels, orders, collapse_extrapolated })
}

// ---------------------------------------------------------------- compare

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub t: f64,
    /// `max_θ (S_inner − S_outer)` at that record.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentReport {
    pub record_dt: f64,
    pub common_records: usize,
    pub violations: usize,
    pub first_violation: Option<Violation>,
    pub max_gap: f64,
    pub outer_termination: Termination,
    pub outer_t_final: f64,
    pub inner_termination: Termination,
    pub inner_t_final: f64,
    pub inner_terminates_first: bool,
}

impl ContainmentReport {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.inner_terminates_first
    }

    pub fn to_json(&self) -> Value {
        json!({
            "record_dt": self.record_dt,
            "common_records": self.common_records,
            "violations": self.violations,
            "first_violation": self.first_violation.as_ref().map(|v| json!({"t": v.t, "gap": v.gap})),
            "max_gap": self.max_gap,
            "tolerance": CONTAINMENT_TOL,
            "outer": {"termination": self.outer_termination.as_str(), "t_final": self.outer_t_final},
            "inner": {"termination": self.inner_termination.as_str(), "t_final": self.inner_t_final},
            "inner_terminates_first": self.inner_terminates_first,
            "holds": self.holds(),
        })
    }
}

/// Checks the containment preconditions, runs both configs on a shared
/// record cadence and compares support functions at every common record.
pub fn compare(outer: &FlowConfig, inner: &FlowConfig) -> Result<ContainmentReport, RunError> {
    if outer.n != inner.n {
        return Err(RunError::Precondition(format!("grids differ: outer n = {}, inner n = {}", outer.n, inner.n)));
    }
    let grid = ThetaGrid::new(outer.n)?;
    let (so, fo) = make_initial(&outer.initial, &outer.velocity, &grid)?;
    let (si, fi) = make_initial(&inner.initial, &inner.velocity, &grid)?;
    let gap0 = si.samples().iter().zip(so.samples()).map(|(i, o)| i - o).fold(f64::NEG_INFINITY, f64::max);
    if gap0 > CONTAINMENT_TOL {
        return Err(RunError::Precondition(format!(
            "initial containment fails: inner support exceeds outer by {gap0:e}"
        )));
    }
    let slack = fo.samples().iter().zip(fi.samples()).map(|(o, i)| o - i).fold(f64::NEG_INFINITY, f64::max);
    if slack > CONTAINMENT_TOL {
        return Err(RunError::Precondition(format!(
            "inner speed must dominate outer pointwise; outer exceeds inner by {slack:e}"
        )));
    }

    let h = match (outer.record_dt, inner.record_dt) {
        (Some(a), Some(b)) => a.min(b),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => DEFAULT_COMPARE_DT,
    };
    let pair = [outer.clone().with_record_dt(h), inner.clone().with_record_dt(h)];
    let runs: Vec<Result<Trajectory, hmcf_core::Error>> = parallel_map(&pair, 2, evolve);
    let mut runs = runs.into_iter();
    let o = runs.next().expect("outer")?;
    let i = runs.next().expect("inner")?;

    let (mut a, mut b) = (0, 0);
    let mut report = ContainmentReport {
        record_dt: h,
        common_records: 0,
        violations: 0,
        first_violation: None,
        max_gap: f64::NEG_INFINITY,
        outer_termination: o.termination,
        outer_t_final: o.t_final,
        inner_termination: i.termination,
        inner_t_final: i.t_final,
        inner_terminates_first: i.t_final <= o.t_final,
    };
    while a < o.snapshots.len() && b < i.snapshots.len() {
        let (ta, tb) = (o.snapshots[a].t, i.snapshots[b].t);
        if (ta - tb).abs() <= 1e-12 * ta.abs().max(1.0) {
            let gap = containment_gap(&o.snapshots[a], &i.snapshots[b])?;
            report.common_records += 1;
            report.max_gap = report.max_gap.max(gap);
            if gap > CONTAINMENT_TOL {
                report.violations += 1;
                report.first_violation.get_or_insert(Violation { t: ta, gap });
            }
            a += 1;
            b += 1;
        } else if ta < tb {
            a += 1;
        } else {
            b += 1;
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------- oracle

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Flow,
    String,
}

pub fn oracle(kind: OracleKind, r0: f64, r1: f64, d: f64, t_end: f64) -> Result<RadialSolution, RunError> {
    Ok(match kind {
        OracleKind::Flow => circle_flow(r0, r1, d, t_end)?,
        OracleKind::String => {
            if d != 0.0 {
                return Err(RunError::Precondition("the string oracle has no dissipation term".into()));
            }
            string_circle(r0, r1, t_end)?
        }
    })
}

// ---------------------------------------------------------------- sweep

/// Config paths listed one per line (`#` comments), relative to the list.
pub fn read_sweep(list: &Path) -> Result<Vec<PathBuf>, RunError> {
    let text = fs::read_to_string(list).map_err(io_err(list))?;
    let base = list.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| base.join(l))
        .collect())
}

#[derive(Debug)]
pub struct SweepResult {
    pub digest: String,
    pub source: PathBuf,
    pub outcome: Result<RunSummary, RunError>,
}

/// Parses every config up front, then runs them `workers` at a time into
/// `out/<digest>/`. Configs with identical digests run once.
pub fn sweep(paths: &[PathBuf], out: &Path, workers: usize, svg: bool) -> Result<Vec<SweepResult>, RunError> {
    let mut jobs: Vec<(PathBuf, RunConfig)> = Vec::new();
    for p in paths {
        let cfg = config::load(p).map_err(|e| RunError::Precondition(format!("{}: {e}", p.display())))?;
        if jobs.iter().all(|(_, c)| c.digest() != cfg.digest()) {
            jobs.push((p.clone(), cfg));
        }
    }
    let results = parallel_map(&jobs, workers, |(path, cfg)| {
        let digest = cfg.digest();
        let outcome = run(cfg, &out.join(&digest), svg);
        SweepResult { digest, source: path.clone(), outcome }
    });
    fs::create_dir_all(out).map_err(io_err(out))?;
    let merged: serde_json::Map<String, Value> = results
        .iter()
        .map(|r| {
            let v = match &r.outcome {
                Ok(s) => json!({"source": r.source.display().to_string(), "summary": s.to_json()}),
                Err(e) => json!({"source": r.source.display().to_string(), "error": e.to_string(), "exit_code": e.exit_code()}),
            };
            (r.digest.clone(), v)
        })
        .collect();
    let path = out.join("sweep_summary.json");
    let text = serde_json::to_string_pretty(&Value::Object(merged)).expect("summary serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(results)
}
