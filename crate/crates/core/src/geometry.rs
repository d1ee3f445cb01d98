//! Strictly convex closed curves represented by their support function.
//!
//! For a convex body containing the origin, `S(θ)` is the distance from the
//! origin to the supporting line with outward normal `(cos θ, sin θ)`. All
//! geometry follows from `S` and its θ-derivatives:
//!
//! * radius of curvature `v = S_θθ + S = 1/k`,
//! * boundary point `(S cos θ − S_θ sin θ, S sin θ + S_θ cos θ)`,
//! * length `∫ v dθ = ∫ S dθ`, area `½ ∫ S v dθ`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::ThetaGrid;
use crate::math::{cos, sin, sqrt};

/// Relative agreement demanded between `∫(S_θθ + S)` and `∫S`.
const LENGTH_SELF_CHECK: f64 = 1e-10;

/// Samples of a support function on a [`ThetaGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SupportProfile {
    grid: ThetaGrid,
    s: Vec<f64>,
}

impl SupportProfile {
    /// Validates finiteness and strict convexity.
    pub fn new(grid: ThetaGrid, s: Vec<f64>) -> Result<Self> {
        grid.check_len(s.len())?;
        check_finite(&s)?;
        radius_of_curvature(&grid, &s)?;
        Ok(Self { grid, s })
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.s
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.s
    }
}

/// Euclidean reconstruction of a support profile.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    pub grid: ThetaGrid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub k: Vec<f64>,
}

/// Initial normal speed `f̃(θ) ≥ 0` along the inner normal.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile {
    grid: ThetaGrid,
    f: Vec<f64>,
}

impl VelocityProfile {
    pub fn new(grid: ThetaGrid, f: Vec<f64>) -> Result<Self> {
        grid.check_len(f.len())?;
        check_finite(&f)?;
        if let Some((j, v)) = f.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "initial velocity must be >= 0, got f({j}) = {v}"
            )));
        }
        Ok(Self { grid, f })
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.f
    }

    /// `max_j |f̃_θ(θ_j)|`; values `>= 1` put the initial data outside the
    /// light cone `S_θτ² < 1`.
    pub fn max_slope(&self) -> f64 {
        self.grid
            .plan()
            .derivative(&self.f, 1)
            .iter()
            .fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

/// Initial curve families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialShape {
    Circle { r0: f64 },
    /// Centred ellipse with semi-axes `a` (along x) and `b`.
    Ellipse { a: f64, b: f64 },
    /// `S = r0 + eps·cos(m θ)`.
    Perturbed { r0: f64, eps: f64, m: u32 },
}

/// Initial normal-velocity families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityShape {
    Constant { f0: f64 },
    /// `f̃ = f0 + amp·cos(mode θ)`.
    Cosine { f0: f64, amp: f64, mode: u32 },
}

impl Default for VelocityShape {
    fn default() -> Self {
        VelocityShape::Constant { f0: 0.0 }
    }
}

impl InitialShape {
    /// Analytic support function.
    pub fn support(&self, theta: f64) -> f64 {
        match *self {
            InitialShape::Circle { r0 } => r0,
            InitialShape::Ellipse { a, b } => {
                let (c, s) = (cos(theta), sin(theta));
                sqrt(a * a * c * c + b * b * s * s)
            }
            InitialShape::Perturbed { r0, eps, m } => r0 + eps * cos(m as f64 * theta),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            InitialShape::Circle { r0 } => positive("r0", r0),
            InitialShape::Ellipse { a, b } => {
                positive("a", a)?;
                positive("b", b)
            }
            InitialShape::Perturbed { r0, eps, m } => {
                positive("r0", r0)?;
                if !eps.is_finite() {
                    return Err(Error::InvalidConfig(format!("eps must be finite, got {eps}")));
                }
                let mf = m as f64;
                let factor = (mf * mf - 1.0).abs();
                let margin = r0 - eps.abs() * factor;
                if margin <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "perturbation breaks strict convexity: convexity margin \
                         r0 - |eps|*(m^2-1) = {r0} - {}*{factor} = {margin} <= 0",
                        eps.abs()
                    )));
                }
                if r0 - eps.abs() <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "origin must be interior: r0 - |eps| = {} <= 0",
                        r0 - eps.abs()
                    )));
                }
                Ok(())
            }
        }
    }
}

impl VelocityShape {
    pub fn speed(&self, theta: f64) -> f64 {
        match *self {
            VelocityShape::Constant { f0 } => f0,
            VelocityShape::Cosine { f0, amp, mode } => f0 + amp * cos(mode as f64 * theta),
        }
    }
}

/// Spectral θ-derivative of grid samples.
pub fn deriv_theta(grid: &ThetaGrid, values: &[f64], order: u8) -> Result<Vec<f64>> {
    grid.derivative(values, order)
}

/// `S_θθ + S` at every node, failing with a hyperbolicity-loss error where it
/// is not strictly positive.
pub fn radius_of_curvature(grid: &ThetaGrid, s: &[f64]) -> Result<Vec<f64>> {
    grid.check_len(s.len())?;
    let mut v = grid.plan().derivative(s, 2);
    for (j, (vj, sj)) in v.iter_mut().zip(s).enumerate() {
        *vj += sj;
        if !vj.is_finite() {
            return Err(Error::NumericalFailure { node: j, stage: 0 });
        }
        if *vj <= 0.0 {
            return Err(Error::HyperbolicityLost { node: j, margin: *vj, stage: 0 });
        }
    }
    Ok(v)
}

/// `k_j = 1/(S_θθ + S)(θ_j)`.
pub fn curvature(p: &SupportProfile) -> Result<Vec<f64>> {
    Ok(radius_of_curvature(&p.grid, &p.s)?.into_iter().map(|v| 1.0 / v).collect())
}

pub fn reconstruct(p: &SupportProfile) -> Result<CurveSample> {
    let k = curvature(p)?;
    let ds = p.grid.plan().derivative(&p.s, 1);
    let n = p.grid.n();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for j in 0..n {
        let th = p.grid.node(j);
        let (c, s) = (cos(th), sin(th));
        x.push(p.s[j] * c - ds[j] * s);
        y.push(p.s[j] * s + ds[j] * c);
    }
    Ok(CurveSample { grid: p.grid.clone(), x, y, k })
}

/// Perimeter, computed both as `∫(S_θθ + S)` and `∫S`; the two must agree.
pub fn length(p: &SupportProfile) -> Result<f64> {
    let v = radius_of_curvature(&p.grid, &p.s)?;
    Ok(length_checked(&p.grid, &p.s, &v))
}

pub(crate) fn length_checked(grid: &ThetaGrid, s: &[f64], v: &[f64]) -> f64 {
    let by_radius = grid.integrate(v);
    let by_support = grid.integrate(s);
    let scale = grid.spacing() * v.iter().chain(s).map(|x| x.abs()).sum::<f64>();
    assert!(
        (by_radius - by_support).abs() <= LENGTH_SELF_CHECK * scale,
        "length self-check failed: {by_radius} vs {by_support}"
    );
    by_radius
}

/// Enclosed area `½ ∫ S (S_θθ + S) dθ`.
pub fn area(p: &SupportProfile) -> Result<f64> {
    let v = radius_of_curvature(&p.grid, &p.s)?;
    Ok(area_from(&p.grid, &p.s, &v))
}

pub(crate) fn area_from(grid: &ThetaGrid, s: &[f64], v: &[f64]) -> f64 {
    0.5 * grid.spacing() * s.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
}

/// Maximal width `max_j S(θ_j) + S(θ_j + π)`.
pub fn width_max(p: &SupportProfile) -> f64 {
    width_of(&p.grid, &p.s)
}

pub(crate) fn width_of(grid: &ThetaGrid, s: &[f64]) -> f64 {
    (0..grid.n() / 2)
        .map(|j| s[j] + s[grid.antipode(j)])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Samples the initial curve and velocity. The solver starts from
/// `S(·,0) = h`, `S_τ(·,0) = −f̃`.
pub fn make_initial(
    shape: &InitialShape,
    velocity: &VelocityShape,
    grid: &ThetaGrid,
) -> Result<(SupportProfile, VelocityProfile)> {
    shape.validate()?;
    let nodes = grid.nodes();
    let s = nodes.iter().map(|&t| shape.support(t)).collect();
    let f = nodes.iter().map(|&t| velocity.speed(t)).collect();
    Ok((SupportProfile::new(grid.clone(), s)?, VelocityProfile::new(grid.clone(), f)?))
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(node) => Err(Error::NumericalFailure { node, stage: 0 }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{PI, TAU};
    use alloc::vec;

    fn grid(n: usize) -> ThetaGrid {
        ThetaGrid::new(n).unwrap()
    }

    fn profile(n: usize, f: impl Fn(f64) -> f64) -> SupportProfile {
        let g = grid(n);
        let s = g.nodes().into_iter().map(f).collect();
        SupportProfile::new(g, s).unwrap()
    }

    fn ellipse(n: usize) -> SupportProfile {
        let shape = InitialShape::Ellipse { a: 2.0, b: 1.0 };
        profile(n, |t| shape.support(t))
    }

    #[test]
    fn derivative_examples() {
        let g = grid(32);
        let th = g.nodes();
        let c1: Vec<f64> = th.iter().map(|&t| cos(t)).collect();
        let d = deriv_theta(&g, &c1, 1).unwrap();
        for (a, &t) in d.iter().zip(&th) {
            assert!((a + sin(t)).abs() < 1e-13);
        }
        let c2: Vec<f64> = th.iter().map(|&t| cos(2.0 * t)).collect();
        let d = deriv_theta(&g, &c2, 2).unwrap();
        for (a, &t) in d.iter().zip(&th) {
            assert!((a + 4.0 * cos(2.0 * t)).abs() < 1e-12);
        }
        let d = deriv_theta(&g, &vec![5.0; 32], 1).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-14));
        assert_eq!(
            deriv_theta(&g, &[1.0; 8], 1),
            Err(Error::LengthMismatch { expected: 32, got: 8 })
        );
        assert_eq!(deriv_theta(&g, &c1, 3), Err(Error::InvalidOrder(3)));
    }

    #[test]
    fn curvature_examples() {
        let k = curvature(&profile(64, |_| 2.0)).unwrap();
        assert!(k.iter().all(|v| (v - 0.5).abs() < 1e-14));

        // S + S_θθ = a²b²/S³, so k(0) = a/b².
        let k = curvature(&ellipse(128)).unwrap();
        assert!((k[0] - 2.0).abs() < 1e-9, "{}", k[0]);

        let k = curvature(&profile(64, |t| 1.0 + 0.1 * cos(2.0 * t))).unwrap();
        assert!((k[0] - 10.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn curvature_rejects_concave() {
        let g = grid(32);
        let s: Vec<f64> = g.nodes().iter().map(|&t| 1.0 + 0.4 * cos(2.0 * t)).collect();
        assert!(matches!(SupportProfile::new(g.clone(), s), Err(Error::HyperbolicityLost { .. })));
        let mut s = vec![1.0; 32];
        s[3] = f64::NAN;
        assert!(matches!(SupportProfile::new(g, s), Err(Error::NumericalFailure { node: 3, .. })));
    }

    #[test]
    fn reconstruct_examples() {
        let c = reconstruct(&profile(32, |_| 1.0)).unwrap();
        assert!((c.x[0] - 1.0).abs() < 1e-15 && c.y[0].abs() < 1e-15);

        let c = reconstruct(&ellipse(128)).unwrap();
        assert!((c.x[0] - 2.0).abs() < 1e-12 && c.y[0].abs() < 1e-12);

        let c = reconstruct(&profile(64, |t| 1.0 + 0.1 * cos(2.0 * t))).unwrap();
        assert!(c.x[16].abs() < 1e-12 && (c.y[16] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn length_examples() {
        assert!((length(&profile(32, |_| 1.0)).unwrap() - TAU).abs() < 1e-13);
        let l = length(&profile(32, |t| 1.0 + 0.1 * cos(2.0 * t))).unwrap();
        assert!((l - TAU).abs() < 1e-13);
    }

    #[test]
    fn area_examples() {
        assert!((area(&profile(32, |_| 2.0)).unwrap() - 4.0 * PI).abs() < 1e-12);
        let a = area(&profile(32, |t| 1.0 + 0.1 * cos(2.0 * t))).unwrap();
        assert!((a - PI * 0.985).abs() < 1e-13);
        assert!((area(&ellipse(128)).unwrap() - TAU).abs() < 1e-10);
    }

    #[test]
    fn width_examples() {
        assert!((width_max(&profile(32, |_| 1.0)) - 2.0).abs() < 1e-15);
        assert!((width_max(&profile(32, |t| 1.0 + 0.1 * cos(2.0 * t))) - 2.2).abs() < 1e-14);
        assert!((width_max(&ellipse(64)) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn make_initial_examples() {
        let g = grid(64);
        let (s, f) =
            make_initial(&InitialShape::Circle { r0: 1.0 }, &VelocityShape::default(), &g).unwrap();
        assert!(s.samples().iter().all(|&v| v == 1.0));
        assert!(f.samples().iter().all(|&v| v == 0.0));

        let shape = InitialShape::Perturbed { r0: 1.0, eps: 0.1, m: 2 };
        let (s, _) = make_initial(&shape, &VelocityShape::default(), &g).unwrap();
        assert!((s.samples()[0] - 1.1).abs() < 1e-15);

        let bad = InitialShape::Perturbed { r0: 1.0, eps: 0.4, m: 2 };
        let err = make_initial(&bad, &VelocityShape::default(), &g).unwrap_err();
        match err {
            Error::InvalidConfig(msg) => assert!(msg.contains("convexity margin"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }

        let neg = VelocityShape::Cosine { f0: 0.1, amp: 0.2, mode: 2 };
        assert!(matches!(
            make_initial(&InitialShape::Circle { r0: 1.0 }, &neg, &g),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn velocity_slope() {
        let g = grid(64);
        let v = VelocityShape::Cosine { f0: 1.0, amp: 0.5, mode: 3 };
        let (_, f) = make_initial(&InitialShape::Circle { r0: 1.0 }, &v, &g).unwrap();
        assert!((f.max_slope() - 1.5).abs() < 1e-3);
    }
}
