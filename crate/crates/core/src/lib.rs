//! Numerical laboratory for cohomogeneity-one shrinking gradient Ricci solitons
//! with two-summand principal orbits.
//!
//! The library integrates the six-dimensional soliton ODE system in the
//! arc-length coordinate, monitors its conservation laws, computes the
//! phase-space diagnostics (generalized mean curvature, winding angle,
//! Lyapunov functional), and runs shooting-method scans over the singular-orbit
//! initial conditions to locate metrics that close up smoothly.
//!
//! Modules:
//! - [`geometry`]: orbit-type presets and curvature quantities.
//! - [`dynamics`]: the soliton vector field, residual monitors, diagnostics.
//! - [`integrator`]: series initialization, fixed-step RK4, event detection.
//! - [`shooting`]: closeness metrics, grid scans, cluster extraction, refinement.
//! - [`warped`]: the m-factor warped-product phase system and its closed-form
//!   solutions, fixed points, and linearization.
//! - [`cli`]: command-line front end and CSV/JSON/SVG emission.

// Validation deliberately writes `!(x > 0.0)` so NaN inputs fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod shooting;
pub mod warped;

pub use error::{Error, Result};
