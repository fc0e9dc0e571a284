//! Null controls for the one-dimensional Burgers-alpha system
//!
//! ```text
//! y_t - y_xx + z y_x = v 1_(a,b)    in (0,L) x (0,T)
//! z - alpha^2 z_xx   = y            in (0,L) x (0,T)
//! y = z = 0                         on x = 0, L
//! ```
//!
//! The crate provides finite-difference solvers for the forward problem, a
//! penalized-duality (HUM) solver for linear null controls, the fixed-point
//! loop that turns those into controls for the nonlinear system, and the
//! parameter studies built on top of them.
//!
//! All numerics are generic over [`Real`]; the aliases below fix `f64`.

pub mod control;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod filter;
pub mod grid;
pub mod hum;
pub mod io;
pub mod num;
pub mod tridiag;
pub mod window;

pub use error::{Error, Result};
pub use filter::AlphaParam;
pub use grid::{Grid1D, NormKind, ScalarField, SpaceTimeNorm, Trajectory};
pub use num::Real;
pub use window::ControlWindow;

pub type Grid = grid::Grid1D<f64>;
pub type Field = grid::ScalarField<f64>;
pub type Traj = grid::Trajectory<f64>;
pub type Window = window::ControlWindow<f64>;
pub type Alpha = filter::AlphaParam<f64>;
pub type Forcing = dynamics::ForcingSpec<f64>;
pub type LinearProblem = hum::LinearControlProblem<f64>;
pub type HumResult = hum::HumSolution<f64>;
pub type ControlResult = control::NonlinearControlResult<f64>;
