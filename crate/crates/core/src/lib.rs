//! Numerical core for the hyperbolic mean curvature flow of strictly convex
//! closed plane curves.
//!
//! Curves are carried by their support function `S(θ)` on a uniform periodic
//! normal-angle grid. The flow reduces to the hyperbolic Monge-Ampère system
//!
//! ```text
//! S_ττ = (S_θτ² − 1) / (S_θθ + S) + d·S_τ
//! ```
//!
//! which [`solver`] integrates with spectral θ-derivatives and classical RK4.
//! [`diagnostics`] evaluates length/area/curvature identities along a run,
//! [`oracles`] provides high-accuracy radial reference solutions and
//! [`string`] evolves the closed relativistic string in `R^{1,2}` for
//! comparison.
//!
//! The crate is `no_std` (with `alloc`); the `std` feature only adds
//! `std::error::Error` plumbing through `thiserror`.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
mod math;

pub mod diagnostics;
pub mod fit;
pub mod geometry;
pub mod grid;
pub mod ode;
pub mod oracles;
pub mod quadrature;
pub mod solver;
pub mod spectral;
pub mod string;

pub use diagnostics::{
    containment, containment_gap, curvature_pde_residual, finalize_residuals, record,
    DiagnosticsRecord, Identities, CONTAINMENT_TOL,
};
pub use error::{Error, Result};
pub use geometry::{
    area, curvature, deriv_theta, length, make_initial, reconstruct, width_max, CurveSample,
    InitialShape, SupportProfile, VelocityProfile, VelocityShape,
};
pub use grid::ThetaGrid;
pub use oracles::{
    circle_flow, collapse_time_quadrature, string_circle, string_collapse_time_quadrature,
    RadialSolution,
};
pub use solver::{
    cfl_dt, estimate_collapse_time, evolve, max_char_speed, rhs, step, CollapseEstimate,
    FlowConfig, SupportState, Termination, Trajectory, Warning,
};
pub use string::{
    string_evolve, string_rhs, StringOptions, StringRecord, StringRun, StringState,
    StringTermination,
};
