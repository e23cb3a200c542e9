//! Numerical laboratory for L_p-contractivity of semigroups generated by
//! second-order elliptic systems with values in `H = C^m` and Neumann
//! boundary conditions.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] and [`field`]: uniform grids with trapezoid weights, vector
//!   valued fields, weighted L_p norms, the sign map and the duality map.
//! * [`projection`]: metric projection of L_2 onto the unit L_p ball.
//! * [`coefficients`] and [`form`]: coefficient fields, ellipticity
//!   constants and Q1 assembly of the sesquilinear form.
//! * [`semigroup`]: implicit Euler / Crank-Nicolson evolution and L_p norm
//!   trajectories.
//! * [`criterion`]: admissible exponent intervals, dissipativity gaps,
//!   certification and counterexample search.
//! * [`calculus`]: finite-difference checks of the truncation chain rule,
//!   the norm derivative, and convexity / Young / Hölder equality cases.
//! * [`harness`]: configuration, orchestration and persistence behind the
//!   `lab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod calculus;
pub mod coefficients;
pub mod criterion;
pub mod error;
pub mod field;
pub mod form;
pub mod grid;
pub mod harness;
pub mod io;
pub mod probes;
pub mod projection;
pub mod rng;
pub mod semigroup;
mod sum;

pub use num_complex::Complex64;

pub use coefficients::{CoefficientField, EllipticityConstants, Family};
pub use criterion::{CertificationVerdict, PInterval, UpperBound};
pub use error::{LabError, Result};
pub use field::{PExponent, VectorField};
pub use form::FormMatrix;
pub use grid::Grid;
pub use projection::ProjectionResult;
pub use semigroup::{Scheme, StepperConfig, TrajectoryReport};
