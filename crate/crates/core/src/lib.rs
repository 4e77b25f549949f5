//! Numerical tools for the one-dimensional advective Cahn-Hilliard model of
//! Langmuir-Blodgett transfer,
//!
//! ```text
//! u_t = mu_xx - beta u_x,   mu = -u_xx + (u + c0)^3 - (u + c0) + nu zeta(x),
//! u(0) = u_x(L) = mu(0) = mu_x(L) = 0,
//! ```
//!
//! on `[0, L]`: steady states by shooting, continuation in `beta` and `L`,
//! linearized spectra, and time integration with energy audits.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases below fix it to `f64`.

// Index loops mirror the stencils; negated comparisons reject NaN on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod continuation;
pub mod error;
pub mod evolve;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod scalar;
pub mod shoot;
pub mod spectrum;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ModelParams = model::ModelParams<f64>;
pub type Grid = grid::Grid<f64>;
pub type Field = grid::Field<f64>;
pub type ShootOptions = shoot::ShootOptions<f64>;
pub type ShootSolution = shoot::ShootSolution<f64>;
pub type SteadyState = shoot::SteadyState<f64>;
pub type Catalog = shoot::Catalog<f64>;
pub type BranchPoint = shoot::BranchPoint<f64>;
pub type Branch = continuation::Branch<f64>;
pub type SpectrumResult = spectrum::SpectrumResult<f64>;
pub type EvolveOptions = evolve::EvolveOptions<f64>;
pub type Trajectory = evolve::Trajectory<f64>;
pub type EvolveReport = evolve::EvolveReport<f64>;
