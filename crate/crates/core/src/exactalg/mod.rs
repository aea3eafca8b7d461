//! Exact arithmetic over the rationals: scalars, dense polynomials in one and
//! two variables, and exact linear-system solving.
//!
//! Every symbolic step of the solver runs on these types, so nothing in this
//! module touches floating point except for pivot selection and the explicit
//! `eval_f64` conversions used by the numeric layer.

mod bipoly;
mod linsolve;
mod rational;
mod unipoly;

pub use bipoly::BiPoly;
pub use linsolve::{rank, solve_linear_exact, LinearSystemError};
pub use rational::{format_rational, parse_rational, rat, to_f64, ParseRationalError, Rational};
pub use unipoly::UniPoly;
