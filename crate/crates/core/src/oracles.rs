//! Radial reference solutions.
//!
//! A circle of radius `R(t)` centred at the origin stays a circle under both
//! evolutions, which reduce to scalar ODEs:
//!
//! * flow: `R'' = −1/R + d·R'` (first integral `½R'² + ln R` when `d = 0`),
//! * string: `R'' = (R'² − 1)/R` (first integral `(1 − R'²)/R²`).
//!
//! Both are integrated adaptively until `R` falls to `HALT_FRACTION · r0`;
//! the remaining time to `R = 0` is closed through the first integral.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{asin, exp, ln, sqrt};
use crate::ode::{self, Control, Tolerances};
use crate::quadrature;

/// Radius fraction at which direct integration hands over to the first
/// integral.
pub const HALT_FRACTION: f64 = 1e-6;

const QUAD_TOL: f64 = 1e-14;
// e^{−W²} is below 1e-21 past this cut-off.
const GAUSS_CUTOFF: f64 = 7.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    pub times: Vec<f64>,
    pub radius: Vec<f64>,
    pub rate: Vec<f64>,
    pub collapse_time: Option<f64>,
}

impl RadialSolution {
    pub fn last(&self) -> (f64, f64, f64) {
        let i = self.times.len() - 1;
        (self.times[i], self.radius[i], self.rate[i])
    }
}

/// Circle under the (optionally dissipative) flow: `R'' = −1/R + d R'`,
/// `R(0) = r0`, `R'(0) = r1`.
pub fn circle_flow(r0: f64, r1: f64, d: f64, t_end: f64) -> Result<RadialSolution> {
    check_radius(r0)?;
    let energy = 0.5 * r1 * r1 + ln(r0);
    radial(
        move |y: &[f64; 2]| [y[1], -1.0 / y[0] + d * y[1]],
        r0,
        r1,
        t_end,
        |rs, rate| {
            // Remaining time from R = rs with the local energy; exact when d = 0.
            let a2 = if d == 0.0 { 2.0 * (energy - ln(rs)) } else { rate * rate };
            flow_fall_time(rs, a2)
        },
    )
}

/// Circle under the string equation: `R'' = (R'² − 1)/R`, `|r1| < 1`.
pub fn string_circle(r0: f64, r1: f64, t_end: f64) -> Result<RadialSolution> {
    check_radius(r0)?;
    if !(r1.abs() < 1.0) {
        return Err(Error::TimelikeViolation(r1.abs()));
    }
    let c = (1.0 - r1 * r1) / (r0 * r0);
    radial(
        |y: &[f64; 2]| [y[1], (y[1] * y[1] - 1.0) / y[0]],
        r0,
        r1,
        t_end,
        move |rs, _| {
            // R' = −sqrt(1 − c R²) near collapse.
            let sc = sqrt(c);
            Ok(asin(sc * rs) / sc)
        },
    )
}

/// Flow collapse time from the energy integral,
/// `∫_0^{r0} dR / sqrt(r1² − 2 ln(R/r0))`, for `r1 ≤ 0`, `d = 0`.
pub fn collapse_time_quadrature(r0: f64, r1: f64) -> Result<f64> {
    check_radius(r0)?;
    if r1 > 0.0 {
        return Err(Error::NotApplicable(format!(
            "r1 = {r1} > 0: the circle first expands; use circle_flow"
        )));
    }
    flow_fall_time(r0, r1 * r1)
}

/// String collapse time `∫_0^{r0} dR / sqrt(1 − c R²)`, `c = (1 − r1²)/r0²`,
/// for `−1 < r1 ≤ 0`.
pub fn string_collapse_time_quadrature(r0: f64, r1: f64) -> Result<f64> {
    check_radius(r0)?;
    if r1 > 0.0 {
        return Err(Error::NotApplicable(format!("r1 = {r1} > 0: use string_circle")));
    }
    if r1 <= -1.0 {
        return Err(Error::TimelikeViolation(r1.abs()));
    }
    let c = (1.0 - r1 * r1) / (r0 * r0);
    // R = r0 − w² moves the endpoint singularity at R = r0 (r1 = 0) into a
    // smooth integrand; 1 − cR² = r1² + c w² (2 r0 − w²).
    quadrature::integrate(
        |w| 2.0 * w / sqrt(r1 * r1 + c * w * w * (2.0 * r0 - w * w)),
        0.0,
        sqrt(r0),
        QUAD_TOL,
    )
}

/// `∫_0^{r} dR / sqrt(a² − 2 ln(R/r))`, with `R = r e^{−w²}`.
fn flow_fall_time(r: f64, a2: f64) -> Result<f64> {
    let v = quadrature::integrate(
        |w| 2.0 * w * exp(-w * w) / sqrt(a2 + 2.0 * w * w),
        0.0,
        GAUSS_CUTOFF,
        QUAD_TOL,
    )?;
    Ok(r * v)
}

fn check_radius(r0: f64) -> Result<()> {
    if r0 > 0.0 && r0.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("initial radius must be positive, got {r0}")))
    }
}

fn radial<F, T>(accel: F, r0: f64, r1: f64, t_end: f64, tail: T) -> Result<RadialSolution>
where
    F: Fn(&[f64; 2]) -> [f64; 2],
    T: Fn(f64, f64) -> Result<f64>,
{
    let halt = HALT_FRACTION * r0;
    let mut sol = RadialSolution {
        times: alloc::vec![0.0],
        radius: alloc::vec![r0],
        rate: alloc::vec![r1],
        collapse_time: None,
    };
    let mut event = None;
    ode::integrate(|_, y| accel(y), 0.0, [r0, r1], t_end, Tolerances::default(), |step, y| {
        if y[0] <= halt {
            if let Some(ts) = step.locate(|s| s[0] - halt) {
                let ys = step.eval(ts);
                event = Some((ts, ys[1]));
                sol.times.push(ts);
                sol.radius.push(ys[0]);
                sol.rate.push(ys[1]);
                return Control::Stop;
            }
        }
        sol.times.push(step.t1());
        sol.radius.push(y[0]);
        sol.rate.push(y[1]);
        Control::Continue
    })?;
    if let Some((ts, rate)) = event {
        sol.collapse_time = Some(ts + tail(halt, rate)?);
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;

    const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;

    #[test]
    fn flow_collapse_equality_case() {
        let sol = circle_flow(1.0, 0.0, 0.0, 10.0).unwrap();
        assert!((sol.collapse_time.unwrap() - SQRT_HALF_PI).abs() < 1e-9);
        let sol = circle_flow(2.0, 0.0, 0.0, 10.0).unwrap();
        assert!((sol.collapse_time.unwrap() - 2.0 * SQRT_HALF_PI).abs() < 2e-9);
    }

    #[test]
    fn negative_velocity_matches_energy_integral() {
        // ∫_0^1 dR / sqrt(1 − 2 ln R), evaluated directly in R with a
        // different substitution from the library route.
        let direct = quadrature::integrate(
            |u: f64| {
                let r = u * u;
                2.0 * u / sqrt(1.0 - 2.0 * ln(r))
            },
            0.0,
            1.0,
            1e-13,
        )
        .unwrap();
        let ode = circle_flow(1.0, -1.0, 0.0, 10.0).unwrap().collapse_time.unwrap();
        assert!((ode - direct).abs() < 1e-8, "{ode} vs {direct}");
        assert!(direct < SQRT_HALF_PI);
    }

    #[test]
    fn quadrature_examples() {
        assert!((collapse_time_quadrature(1.0, 0.0).unwrap() - SQRT_HALF_PI).abs() < 1e-13);
        assert!((collapse_time_quadrature(0.5, 0.0).unwrap() - 0.626_657_068_657_750_1).abs() < 1e-13);
        assert!(collapse_time_quadrature(1.0, -1.0).unwrap() < SQRT_HALF_PI);
        assert!(matches!(collapse_time_quadrature(1.0, 0.5), Err(Error::NotApplicable(_))));
        assert!(matches!(circle_flow(0.0, 0.0, 0.0, 1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn string_examples() {
        let sol = string_circle(1.0, 0.0, 10.0).unwrap();
        assert!((sol.collapse_time.unwrap() - PI / 2.0).abs() < 1e-9);
        assert!((string_collapse_time_quadrature(1.0, 0.0).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!(string_circle(1.0, 0.9999, 0.5).is_ok());
        assert_eq!(string_circle(1.0, 1.0, 0.5), Err(Error::TimelikeViolation(1.0)));
    }

    #[test]
    fn string_radius_is_cosine() {
        let sol = string_circle(1.0, 0.0, 1.0).unwrap();
        let (t, r, rate) = sol.last();
        assert_eq!(t, 1.0);
        assert!((r - libm::cos(1.0)).abs() < 1e-11);
        assert!((rate + libm::sin(1.0)).abs() < 1e-11);
    }

    #[test]
    fn dissipative_ode_holds() {
        let sol = circle_flow(1.0, 0.0, -1.0, 0.5).unwrap();
        let (t, r, _) = sol.last();
        assert_eq!(t, 0.5);
        assert!(r < 1.0 && r > 0.8);
        assert!(sol.collapse_time.is_none());
    }
}
