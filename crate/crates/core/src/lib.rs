//! Adaptive lowest-order Raviart–Thomas mixed finite elements for steady
//! convection–diffusion–reaction problems
//!
//! ```text
//! -∇·(S∇p) + ∇·(p w) + r p = f
//! ```
//!
//! on polygonal domains in 2D. The crate covers the whole adaptive cycle:
//! conforming triangulations with longest-edge bisection ([`mesh`]),
//! piecewise-constant problem data and the benchmark problems ([`problem`]),
//! centered and upwind-weighted RT0/P0 discretizations ([`assembly`]),
//! a sparse direct solve ([`solver`]), the elementwise quadratic
//! postprocessing of the scalar unknown ([`postprocess`]), a posteriori
//! error estimators ([`estimators`]), Dörfler marking and the
//! SOLVE → ESTIMATE → MARK → REFINE loop ([`adapt`]), and the
//! error/convergence bookkeeping used to judge all of it ([`verify`]).

pub mod adapt;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod mesh;
pub mod postprocess;
pub mod problem;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
