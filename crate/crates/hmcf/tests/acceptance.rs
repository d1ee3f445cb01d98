//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use hmcf::runner::{self, simulate_flow};
use hmcf_core::{
    circle_flow, collapse_time_quadrature, curvature_pde_residual, estimate_collapse_time, evolve,
    finalize_residuals, make_initial, string_circle, string_collapse_time_quadrature, string_evolve,
    DiagnosticsRecord, FlowConfig, InitialShape, StringOptions, StringState, Termination, ThetaGrid, Trajectory,
    VelocityShape,
};

const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Flow runs made along the way, re-checked by the convexity and light-cone
/// criteria.
#[derive(Default)]
struct Runs(Vec<(String, FlowConfig, Trajectory)>);

impl Runs {
    fn evolve(&mut self, label: &str, cfg: &FlowConfig) -> Trajectory {
        let traj = evolve(cfg).expect("acceptance config is valid");
        self.0.push((label.to_string(), cfg.clone(), traj.clone()));
        traj
    }
}

fn circle(r0: f64, n: usize) -> FlowConfig {
    FlowConfig::new(InitialShape::Circle { r0 }, n)
}

fn constant(f0: f64) -> VelocityShape {
    VelocityShape::Constant { f0 }
}

fn ellipse_run() -> FlowConfig {
    FlowConfig::new(InitialShape::Ellipse { a: 1.2, b: 1.0 }, 128).with_velocity(constant(0.1))
}

fn perturbed(f0: f64) -> FlowConfig {
    FlowConfig::new(InitialShape::Perturbed { r0: 1.0, eps: 0.05, m: 3 }, 128).with_velocity(constant(f0))
}

fn final_error(traj: &Trajectory, exact: f64) -> f64 {
    traj.snapshots.last().unwrap().s.iter().map(|s| (s - exact).abs()).fold(0.0, f64::max)
}

fn c1_circle_collapse(runs: &mut Runs) -> Outcome {
    let cfg = circle(1.0, 256);
    let start = Instant::now();
    let out = simulate_flow(&cfg, "").unwrap();
    let wall = start.elapsed().as_secs_f64();
    runs.0.push(("circle(1) n=256".into(), cfg.clone(), out.trajectory.clone()));
    let Some(est) = out.summary.collapse_estimate else {
        return outcome(false, format!("no collapse estimate, termination {}", out.summary.termination));
    };
    let err = (est.time - SQRT_HALF_PI).abs();
    let table = runner::refine(&cfg, 3, None).unwrap();
    let Some(rich) = table.collapse_extrapolated else {
        return outcome(false, "refine levels did not all collapse".into());
    };
    let rich_err = (rich - SQRT_HALF_PI).abs();
    outcome(
        err <= 2e-3 && rich_err <= 1e-4 && wall < 10.0,
        format!(
            "estimate {:.9} ± {:.1e} (err {err:.2e} <= 2e-3), Richardson over n=256..1024 {rich:.9} (err {rich_err:.2e} <= 1e-4), {wall:.2} s",
            est.time, est.uncertainty
        ),
    )
}

fn c2_oracle_tracking(runs: &mut Runs) -> Outcome {
    let exact = circle_flow(1.0, -0.2, 0.0, 0.5).unwrap().last().1;
    let base = circle(1.0, 64).with_velocity(constant(0.2)).with_t_end(0.5);
    let start = Instant::now();
    let coarse = final_error(&runs.evolve("circle f=0.2 cfl=0.5", &base), exact);
    let wall = start.elapsed().as_secs_f64();
    let half = final_error(&runs.evolve("circle f=0.2 cfl=0.25", &base.clone().with_cfl(0.25)), exact);
    let ratio = coarse / half;
    outcome(
        coarse <= 1e-8 && ratio >= 14.0 && wall < 5.0,
        format!(
            "max|S - R| at t=0.5: {coarse:.3e} at cfl 0.5 (<= 1e-8), {half:.3e} at cfl 0.25, ratio {ratio:.1} (>= 14), {wall:.3} s"
        ),
    )
}

fn c3_dissipative(runs: &mut Runs) -> Outcome {
    let exact = circle_flow(1.0, 0.0, -1.0, 0.5).unwrap().last().1;
    let cfg = circle(1.0, 64).with_dissipation(-1.0).with_t_end(0.5);
    let err = final_error(&runs.evolve("circle d=-1", &cfg), exact);
    outcome(err <= 1e-8, format!("max|S - R| at t=0.5 with d=-1: {err:.3e} (<= 1e-8) at default cfl 0.5"))
}

/// Interior maxima (dL, d2A, d3A) over the first 80% of the run.
fn identity_maxima(traj: &Trajectory) -> [f64; 3] {
    let m = runner::max_identity_residuals(&traj.records, traj.t_final);
    [m["dL_dt"], m["d2A_dt2"], m["d3A_dt3"]].map(|v| v.unwrap_or(f64::NAN))
}

const IDENTITY_CADENCE: f64 = 1.25e-3;

fn identity_ladder(runs: &mut Runs) -> ([f64; 3], [f64; 3], f64) {
    let mut levels = Vec::new();
    for h in [IDENTITY_CADENCE, IDENTITY_CADENCE / 2.0] {
        let traj = runs.evolve(&format!("ellipse f=0.1 record_dt={h}"), &ellipse_run().with_record_dt(h));
        let l0 = traj.records[0].length;
        levels.push((identity_maxima(&finalize_residuals(traj).unwrap()), l0));
    }
    (levels[0].0, levels[1].0, levels[0].1)
}

fn c4_length_identity(ladder: &([f64; 3], [f64; 3], f64)) -> Outcome {
    let (c, f, l0) = *ladder;
    let bound = 1e-4 * l0;
    let ratio = c[0] / f[0];
    outcome(
        c[0] <= bound && f[0] <= bound && ratio >= 3.5,
        format!(
            "dL/dt residual {:.3e} -> {:.3e} (<= {bound:.3e}), ratio {ratio:.2} (>= 3.5), cadence {IDENTITY_CADENCE} -> {}",
            c[0],
            f[0],
            IDENTITY_CADENCE / 2.0
        ),
    )
}

fn c5_area_identity(ladder: &([f64; 3], [f64; 3], f64)) -> Outcome {
    let (c, f, _) = *ladder;
    let bound2 = 1e-4 * 2.0 * PI;
    let (r2, r3) = (c[1] / f[1], c[2] / f[2]);
    outcome(
        c[1] <= bound2 && f[1] <= bound2 && r2 >= 3.5 && c[2] <= 1e-3 && f[2] <= 1e-3 && r3 >= 3.5,
        format!(
            "d2A/dt2 residual {:.3e} -> {:.3e} (<= {bound2:.3e}), ratio {r2:.2}; d3A/dt3 residual {:.3e} -> {:.3e} (<= 1e-3), ratio {r3:.2} (>= 3.5)",
            c[1], f[1], c[2], f[2]
        ),
    )
}

fn c6_convexity(runs: &Runs) -> Outcome {
    let mut worst: Option<(String, f64)> = None;
    let mut ok = true;
    for (label, _, traj) in &runs.0 {
        let k0 = traj.records[0].k_min;
        let floor = k0 - 1e-6 * k0;
        let lowest = traj.records.iter().map(|r| r.k_min).fold(f64::INFINITY, f64::min);
        ok &= lowest >= floor;
        let slack = (lowest - floor) / k0;
        if worst.as_ref().map_or(true, |(_, s)| slack < *s) {
            worst = Some((label.clone(), slack));
        }
    }
    let (label, slack) = worst.unwrap();
    outcome(
        ok,
        format!("{} runs; tightest (min k - floor)/k_min(0) = {slack:.3e} on {label}", runs.0.len()),
    )
}

fn c7_light_cone(runs: &Runs) -> Outcome {
    let mut ok = true;
    let mut checked = 0;
    let mut worst = (String::new(), 0.0f64);
    for (label, cfg, traj) in &runs.0 {
        let grid = ThetaGrid::new(cfg.n).unwrap();
        let (_, f) = make_initial(&cfg.initial, &cfg.velocity, &grid).unwrap();
        if f.max_slope() >= 1.0 {
            continue;
        }
        checked += 1;
        let g = traj.records.iter().map(|r| r.grad_bound).fold(0.0, f64::max);
        ok &= g < 1.0;
        if g > worst.1 {
            worst = (label.clone(), g);
        }
    }
    outcome(ok, format!("{checked} runs; largest grad_bound {:.6} on {}", worst.1, worst.0))
}

fn c8_containment(runs: &mut Runs) -> Outcome {
    let outer = circle(1.3, 128);
    let inner = ellipse_run();
    let report = runner::compare(&outer, &inner).unwrap();
    let h = report.record_dt;
    runs.evolve("compare outer circle(1.3)", &outer.with_record_dt(h));
    runs.evolve("compare inner ellipse", &inner.with_record_dt(h));
    outcome(
        report.violations == 0 && report.inner_terminates_first,
        format!(
            "{} common records, {} violations, max gap {:.3e}; inner {} at {:.5} <= outer {} at {:.5}",
            report.common_records,
            report.violations,
            report.max_gap,
            report.inner_termination,
            report.inner_t_final,
            report.outer_termination,
            report.outer_t_final
        ),
    )
}

const PDE_CADENCE: f64 = 1e-3;

fn pde_pair(runs: &mut Runs, d: f64) -> (f64, f64, f64) {
    let base = perturbed(0.0).with_dissipation(d);
    let coarse = runs.evolve(&format!("perturbed d={d} record_dt={PDE_CADENCE}"), &base.clone().with_record_dt(PDE_CADENCE));
    let fine = runs.evolve(&format!("perturbed d={d} record_dt={}", PDE_CADENCE / 2.0), &base.with_record_dt(PDE_CADENCE / 2.0));
    let t_mid = (0.5 * coarse.t_final / PDE_CADENCE).round() * PDE_CADENCE;
    let at = |traj: &Trajectory| {
        let i = traj.records.iter().position(|r| (r.t - t_mid).abs() < 1e-9).expect("mid-run record");
        curvature_pde_residual(traj, i, d).unwrap()
    };
    (t_mid, at(&coarse), at(&fine))
}

fn c9_curvature_pde(runs: &mut Runs) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [0.0, -0.5] {
        let (t, c, f) = pde_pair(runs, d);
        let ratio = c / f;
        ok &= c <= 1e-3 && f <= 1e-3 && ratio >= 3.5;
        parts.push(format!("d={d}: t={t:.3} {c:.3e} -> {f:.3e} ratio {ratio:.2}"));
    }
    outcome(ok, format!("{} (<= 1e-3, ratio >= 3.5, cadence {PDE_CADENCE} -> {})", parts.join("; "), PDE_CADENCE / 2.0))
}

fn c10_shrink_to_point(runs: &mut Runs) -> Outcome {
    let traj = runs.evolve("perturbed f=0.2", &perturbed(0.2));
    let last: &DiagnosticsRecord = traj.records.last().unwrap();
    let monotone = traj.records.windows(2).all(|w| w[1].length < w[0].length);
    let est = estimate_collapse_time(&traj).map(|c| format!("{:.6}", c.time)).unwrap_or_else(|_| "n/a".into());
    outcome(
        traj.termination == Termination::CollapseDetected && last.width <= 1e-3 && monotone,
        format!(
            "termination {} at t={:.6}, final width {:.4e} (<= 1e-3), k_max {:.3e}, grad_bound {:.6}, L monotone {monotone}, isoper {:.6}, collapse estimate {est}",
            traj.termination, traj.t_final, last.width, last.k_max, last.grad_bound, last.isoper
        ),
    )
}

fn c11_string() -> Outcome {
    let run = string_evolve(StringState::circle(64, 1.0, 0.0).unwrap(), 0.25, 1.0, &StringOptions::default()).unwrap();
    let exact = string_circle(1.0, 0.0, 1.0).unwrap().last().1;
    let state = run.snapshots.last().unwrap();
    let track = state.x.iter().map(|p| (p[0].hypot(p[1]) - exact).abs()).fold(0.0, f64::max);
    let gauge = run.records.iter().map(|r| r.gauge_residual).fold(0.0, f64::max);
    let t_string = string_circle(1.0, 0.0, 10.0).unwrap().collapse_time.unwrap();
    let t_quad = string_collapse_time_quadrature(1.0, 0.0).unwrap();
    let t_flow = circle_flow(1.0, 0.0, 0.0, 10.0).unwrap().collapse_time.unwrap();
    let diff = t_string - t_flow;
    let expected = PI / 2.0 - SQRT_HALF_PI;
    let ok = state.t == 1.0
        && track <= 1e-8
        && (t_string - PI / 2.0).abs() <= 1e-8
        && (t_string - t_quad).abs() <= 1e-8
        && (diff - expected).abs() <= 2e-8;
    outcome(
        ok,
        format!(
            "max||X|-R| at t=1: {track:.3e} (<= 1e-8), gauge <= {gauge:.1e}; T_string {t_string:.10} (quadrature {t_quad:.10}), T_flow {t_flow:.10}, difference {diff:.6}"
        ),
    )
}

fn c12_oracle_grid() -> Outcome {
    let mut worst = 0.0f64;
    for r0 in [0.5, 1.0, 2.0] {
        for r1 in [0.0, -0.5, -1.0] {
            let q = collapse_time_quadrature(r0, r1).unwrap();
            let o = circle_flow(r0, r1, 0.0, 10.0 * r0).unwrap().collapse_time.unwrap();
            worst = worst.max((q - o).abs());
        }
    }
    outcome(worst <= 1e-8, format!("max |T_quadrature - T_ode| over 3x3 grid: {worst:.3e} (<= 1e-8)"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut runs = Runs::default();
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    results.push((1, "circle collapse time", c1_circle_collapse(&mut runs)));
    results.push((2, "oracle tracking", c2_oracle_tracking(&mut runs)));
    results.push((3, "dissipative oracle", c3_dissipative(&mut runs)));
    let ladder = identity_ladder(&mut runs);
    results.push((4, "length identity", c4_length_identity(&ladder)));
    results.push((5, "area identities", c5_area_identity(&ladder)));
    results.push((8, "containment", c8_containment(&mut runs)));
    results.push((9, "curvature equation", c9_curvature_pde(&mut runs)));
    results.push((10, "shrink to a point", c10_shrink_to_point(&mut runs)));
    results.push((6, "convexity preserved", c6_convexity(&runs)));
    results.push((7, "light cone", c7_light_cone(&runs)));
    results.push((11, "string correspondence", c11_string()));
    results.push((12, "oracle self-consistency", c12_oracle_grid()));
    results.sort_by_key(|r| r.0);

    let passed = results.iter().filter(|r| r.2.pass).count();
    for (n, name, o) in &results {
        println!("criterion {n:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{passed}/{} criteria passed in {:.1} s", results.len(), start.elapsed().as_secs_f64());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
