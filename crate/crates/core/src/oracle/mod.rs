//! Numeric cross-checks of an exact solution.
//!
//! Nothing here feeds back into the solver. The closed form is evaluated in
//! floating point through the numeric `x → z` map, and compared against
//!
//! * the nonlinear equation itself, with derivatives taken by finite
//!   differences in `x` ([`residual3_numeric`]);
//! * the Green function diagonal `φψ` assembled from the Bloch solutions of
//!   `f″ = (U − p) f` ([`floquet_green_diag`]);
//! * the band edges, where the monodromy trace must reach `±2`
//!   ([`band_edges_check`]).

mod closed;
mod floquet;
mod report;
mod roots;

use thiserror::Error;

pub use closed::{eval_g, residual3_numeric, sigma_fix, ClosedForm};
pub use floquet::{
    floquet_green_diag, monodromy, FloquetPair, Monodromy, NumericPotential, DEFAULT_STEPS,
};
pub use report::{
    band_edges_check, verify, verify_on_grid, BandEdgeReport, BandEdgeRow, Check, GreenSample,
    OracleGrid, Summary, Tolerances, VerificationReport, VerifyOptions,
};
pub use roots::real_roots;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("Q({p}) = {q} is not positive: p is in a band or at an edge")]
    Branch { p: f64, q: f64 },
    #[error("the potential has no numeric x -> z map")]
    NoNumericMap,
    #[error("the potential is not periodic")]
    NoPeriod,
    #[error("p = {p} lies inside a band (trace = {trace})")]
    InsideBand { p: f64, trace: f64 },
    #[error("p = {p} is at a band edge (trace = {trace}); Bloch solutions coincide")]
    DegenerateEigenvectors { p: f64, trace: f64 },
    #[error("asymptote G*2*sqrt(-p) = {value} at p = {p} is not +-1")]
    AsymptoteFailure { p: f64, value: f64 },
    #[error("found {found} real roots of Q, expected {expected}")]
    RootCountMismatch { found: usize, expected: usize },
}
