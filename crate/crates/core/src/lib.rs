//! Closed-form diagonals `G(p, x)` of the resolvent `(−∂ₓ² + U(x) − p)⁻¹`,
//! the Laplace transform in time of the heat kernel diagonal, for potentials
//! that become polynomial after a change of variables. Every closed form is
//! checked numerically by code that shares nothing with the solver.
//!
//! The pipeline is
//!
//! 1. [`classify`]: describe the potential as `(w, u)` polynomials in `z` and
//!    decide whether a polynomial closed form can exist;
//! 2. [`solver`]: compute `G(p, x) = σ·P(p, z) / (2√Q(p))` exactly over ℚ;
//! 3. [`oracle`]: evaluate `G` numerically through [`elliptic`] functions and
//!    compare against the Green function built from Floquet solutions.
//!
//! ```
//! use std::collections::BTreeMap;
//! use greendiag::classify::PotentialSpec;
//! use greendiag::solver::{solve, SolveOptions};
//!
//! let spec = PotentialSpec::preset("cn2-gap-1", &BTreeMap::new()).unwrap();
//! let sol = solve(&spec, SolveOptions::default()).unwrap();
//! assert_eq!(sol.n(), 1);
//! assert!(sol.is_exact_solution(&spec));
//! ```

pub mod classify;
pub mod cli;
pub mod elliptic;
pub mod exactalg;
pub mod oracle;
pub mod solver;
