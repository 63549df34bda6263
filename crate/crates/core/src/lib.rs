//! Numerical solvers for radial and axially symmetric solutions of
//! `(-Δ)^{n/2} u = |x|^{nα} e^{nu}` with prescribed total curvature, together
//! with Pohozaev and asymptotic diagnostics.

pub mod axisym;
pub mod cli;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod interp;
pub mod kernel;
pub mod oracle2d;
pub mod quadrature;
pub mod radial;

pub use constants::{Constants, ProblemParams};
pub use error::{Error, Result};
