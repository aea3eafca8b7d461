//! Exact polynomial solutions `G = σ·P(p,z) / (2√Q(p))` of
//!
//! ```text
//! 2G·G″ − (G′)² − 4(U − p)·G² + 1 = 0
//! ```
//!
//! after the change of variables `x → z`. With `w = (z′)²` the equation for
//! the numerator reads
//!
//! ```text
//! 2P·(w·P_zz + ½w′·P_z) − w·P_z² − 4(u − p)·P² + 4Q = 0.
//! ```
//!
//! # Algorithm
//!
//! Write `P = Σₙ pⁿ Pₙ(z)` with `P_N = 1`. Splitting the equation by powers of
//! `p` from the top down, the `p^{N+n+1}` equation fixes every `z^l`, `l ≥ 1`,
//! coefficient of `Pₙ` once the higher slices are known: its `z`-derivative is
//!
//! ```text
//! ∂_z Pₙ = −¼·T(Pₙ₊₁),   T(f) = w f‴ + (3/2)w′f″ + ½w″f′ − 4u f′ − 2u′f,
//! ```
//!
//! which is linear and triangular. The constants `cₙ = Pₙ,₀` stay free during
//! the sweep, and because `T` is linear every slice is a combination
//! `Pₙ = Σₖ cₙ₊ₖ Rₖ(z)` of one fixed tower `R₀ = 1, Rₖ₊₁ = −¼∫T(Rₖ)`. The
//! `p^N` equation then reduces to `T(P₀) = 0`, one exact linear system in the
//! constants. Finally `Q` is read off the `z⁰` part of the equation and the
//! whole residual is checked to vanish identically.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{self, Admissibility, ClassifyError, PotentialSpec, DEFAULT_M0_MAX};
use crate::exactalg::{
    format_rational, parse_rational, rat, solve_linear_exact, BiPoly, LinearSystemError,
    ParseRationalError, Rational, UniPoly,
};

/// A verified closed form: numerator `P(p, z)`, radicand `Q(p)`, and the
/// branch sign `σ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionForm {
    n: usize,
    p: BiPoly,
    q: UniPoly,
    sigma: i8,
}

impl SolutionForm {
    /// Top power of `p` in `P`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `Mₙ = deg_z Pₙ` for `n = 0..=N`.
    pub fn m(&self) -> Vec<usize> {
        (0..=self.n)
            .map(|i| self.p.row(i).degree().unwrap_or(0))
            .collect()
    }

    pub fn p(&self) -> &BiPoly {
        &self.p
    }

    pub fn q(&self) -> &UniPoly {
        &self.q
    }

    pub fn sigma(&self) -> i8 {
        self.sigma
    }

    /// `P_{n,l}`
    pub fn p_coeff(&self, n: usize, l: usize) -> Rational {
        self.p.coeff(n, l)
    }

    /// `q_n`
    pub fn q_coeff(&self, n: usize) -> Rational {
        self.q.coeff(n)
    }

    /// Same form with one coefficient replaced. Intended for negative controls.
    pub fn with_p_coeff(&self, n: usize, l: usize, value: Rational) -> Self {
        let mut rows = self.p.rows().to_vec();
        rows.resize(rows.len().max(n + 1), UniPoly::zero());
        let mut c = rows[n].coeffs().to_vec();
        c.resize(c.len().max(l + 1), Rational::zero());
        c[l] = value;
        rows[n] = UniPoly::new(c);
        Self {
            p: BiPoly::new(rows),
            ..self.clone()
        }
    }

    pub fn with_sigma(self, sigma: i8) -> Self {
        Self { sigma, ..self }
    }

    pub fn with_q_coeff(&self, n: usize, value: Rational) -> Self {
        let mut c = self.q.coeffs().to_vec();
        c.resize(c.len().max(n + 1), Rational::zero());
        c[n] = value;
        Self {
            q: UniPoly::new(c),
            ..self.clone()
        }
    }

    /// Whether the equation residual vanishes identically for `spec`.
    pub fn is_exact_solution(&self, spec: &PotentialSpec) -> bool {
        build_residual(&self.p, &self.q, spec).is_zero()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Linear(LinearSystemError),
    /// The `p⁰` slice came out with a different degree than the ansatz.
    DegreeMismatch { expected: usize, found: Option<usize> },
    /// The `z⁰`-free part of the equation at `p^power` does not vanish, so no
    /// `z`-independent `Q` exists.
    ZDependentRemainder { power: usize },
    NonzeroResidual,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Linear(e) => write!(f, "constant system: {e}"),
            Failure::DegreeMismatch { expected, found } => match found {
                Some(d) => write!(f, "deg_z P_0 = {d}, ansatz expects {expected}"),
                None => write!(f, "P_0 vanishes, ansatz expects degree {expected}"),
            },
            Failure::ZDependentRemainder { power } => {
                write!(f, "equation at p^{power} leaves a z-dependent remainder")
            }
            Failure::NonzeroResidual => write!(f, "final residual is not identically zero"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attempt {
    pub m0: usize,
    pub n: usize,
    pub failure: Failure,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no solution with M0 = {m0}, N = {n}: {failure}")]
    NoSolutionAtThisN { m0: usize, n: usize, failure: Failure },
    #[error("invalid input: {0}")]
    InadmissibleInput(String),
    #[error("no solution found ({} attempts)", .trace.len())]
    NotFound { trace: Vec<Attempt> },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Highest `N` tried per `M₀`; defaults to `N_min + 3`.
    pub n_max: Option<usize>,
    pub m0_max: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            n_max: None,
            m0_max: DEFAULT_M0_MAX,
        }
    }
}

/// `2P(P_zz·w + P_z·w′/2) − P_z²·w − 4(u − p)P² + 4Q`.
pub fn build_residual(p: &BiPoly, q: &UniPoly, spec: &PotentialSpec) -> BiPoly {
    &residual_without_q(p, spec) + &BiPoly::from_p(q).scale(&rat(4, 1))
}

fn residual_without_q(p: &BiPoly, spec: &PotentialSpec) -> BiPoly {
    let w = spec.w();
    let half_dw = w.derivative().scale(&rat(1, 2));
    let pz = p.dz();
    let pzz = pz.dz();
    let inner = &pzz.mul_z(w) + &pz.mul_z(&half_dw);
    let two_p_inner = (p * &inner).scale(&rat(2, 1));
    let grad = (&pz * &pz).mul_z(w);
    let u_minus_p = &BiPoly::from_z(spec.u().clone()) - &BiPoly::p();
    let pot = (&(&u_minus_p * p) * p).scale(&rat(4, 1));
    &(&two_p_inner - &grad) - &pot
}

/// `T(f) = w f‴ + (3/2)w′f″ + ½w″f′ − 4u f′ − 2u′f`
fn third_order_operator(f: &UniPoly, spec: &PotentialSpec) -> UniPoly {
    let w = spec.w();
    let u = spec.u();
    let (d1, d2, d3) = (f.derivative(), f.derivative().derivative(), f.derivative().derivative().derivative());
    let dw = w.derivative();
    let ddw = dw.derivative();
    let terms = [
        w * &d3,
        (&dw * &d2).scale(&rat(3, 2)),
        (&ddw * &d1).scale(&rat(1, 2)),
        (u * &d1).scale(&rat(-4, 1)),
        (&u.derivative() * f).scale(&rat(-2, 1)),
    ];
    terms.iter().fold(UniPoly::zero(), |acc, t| &acc + t)
}

/// `R₀ = 1`, `Rₖ₊₁ = −¼ ∫ T(Rₖ) dz` with zero constant, for `k = 0..=top`.
pub fn slice_tower(spec: &PotentialSpec, top: usize) -> Vec<UniPoly> {
    let mut tower = vec![UniPoly::one()];
    for k in 0..top {
        let next = third_order_operator(&tower[k], spec).scale(&rat(-1, 4)).integral();
        tower.push(next);
    }
    tower
}

/// The `p^N` equation as a linear system `A·c = b` in the slice constants
/// `c₀..c_{N−1}` (with `c_N = 1`): `Σₖ cₖ T(Rₖ) = −T(R_N)`, one row per power
/// of `z`.
pub fn constant_system(spec: &PotentialSpec, n: usize) -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let tower = slice_tower(spec, n);
    let images: Vec<UniPoly> = tower.iter().map(|r| third_order_operator(r, spec)).collect();
    let rows = images
        .iter()
        .filter_map(UniPoly::degree)
        .max()
        .map_or(1, |d| d + 1);
    let a = (0..rows)
        .map(|l| images[..n].iter().map(|t| t.coeff(l)).collect())
        .collect();
    let b = (0..rows).map(|l| -images[n].coeff(l)).collect();
    (a, b)
}

/// Assembles `P` from the slice constants and reads `Q` off the equation.
///
/// Fails if the equation leaves a `z`-dependent remainder or the final
/// residual is nonzero.
pub fn solution_from_constants(
    spec: &PotentialSpec,
    n: usize,
    constants: &[Rational],
) -> Result<SolutionForm, Failure> {
    assert_eq!(constants.len(), n, "one constant per slice below the top");
    let tower = slice_tower(spec, n);
    let c = |j: usize| -> Rational {
        if j == n {
            Rational::one()
        } else {
            constants[j].clone()
        }
    };
    let rows = (0..=n)
        .map(|slice| {
            (0..=n - slice).fold(UniPoly::zero(), |acc, k| {
                &acc + &tower[k].scale(&c(slice + k))
            })
        })
        .collect();
    let p = BiPoly::new(rows);

    let remainder = residual_without_q(&p, spec);
    for (power, row) in remainder.rows().iter().enumerate() {
        if row.degree().unwrap_or(0) > 0 {
            return Err(Failure::ZDependentRemainder { power });
        }
    }
    let q = remainder.z_constant_part().scale(&rat(-1, 4));
    if !build_residual(&p, &q, spec).is_zero() {
        return Err(Failure::NonzeroResidual);
    }
    let lead = p.coeff(n, 0);
    let sign = if lead.is_negative() { -1 } else { 1 };
    Ok(SolutionForm {
        n,
        p,
        q,
        // G ~ P_{N,0} pᴺ / (2√(−p^{2N+1})) as p → −∞
        sigma: if n % 2 == 0 { sign } else { -sign },
    })
}

/// Runs the triangular sweep for one ansatz `(M₀, N)`.
pub fn solve_for_degrees(spec: &PotentialSpec, m0: usize, n: usize) -> Result<SolutionForm, SolveError> {
    if spec.is_constant() {
        return Err(SolveError::InadmissibleInput(
            "constant potential: the ansatz is underdetermined, use solve()".into(),
        ));
    }
    if n == 0 {
        return Err(SolveError::InadmissibleInput("N must be at least 1".into()));
    }
    let fail = |failure| SolveError::NoSolutionAtThisN { m0, n, failure };

    let (a, b) = constant_system(spec, n);
    let constants = solve_linear_exact(&a, &b).map_err(|e| fail(Failure::Linear(e)))?;

    // deg_z P₀ is fixed by the tower; check it against the ansatz before
    // extracting Q
    let tower = slice_tower(spec, n);
    let p0 = (0..=n).fold(UniPoly::zero(), |acc, k| {
        let c = if k == n { Rational::one() } else { constants[k].clone() };
        &acc + &tower[k].scale(&c)
    });
    if p0.degree() != Some(m0) {
        return Err(fail(Failure::DegreeMismatch {
            expected: m0,
            found: p0.degree(),
        }));
    }
    solution_from_constants(spec, n, &constants).map_err(fail)
}

/// `P = 1`, `Q = u₀ − p`.
fn constant_solution(spec: &PotentialSpec) -> SolutionForm {
    let u0 = spec.u().coeff(0);
    SolutionForm {
        n: 0,
        p: BiPoly::from_z(UniPoly::one()),
        q: UniPoly::new(vec![u0, -Rational::one()]),
        sigma: 1,
    }
}

/// Tries every `M₀` candidate (ascending) and `N` from `N_min` upwards,
/// returning the first exactly verified solution.
pub fn solve(spec: &PotentialSpec, opts: SolveOptions) -> Result<SolutionForm, SolveError> {
    let cls = match classify::admissible(spec, opts.m0_max)? {
        Admissibility::ConstantPotential => {
            let sol = constant_solution(spec);
            debug_assert!(sol.is_exact_solution(spec));
            return Ok(sol);
        }
        Admissibility::Regular(c) => c,
    };
    let mut trace = Vec::new();
    for &m0 in &cls.m0_candidates {
        let lo = classify::n_min(m0, cls.k)?;
        let hi = opts.n_max.unwrap_or(lo + 3);
        for n in lo..=hi {
            match solve_for_degrees(spec, m0, n) {
                Ok(sol) => return Ok(sol),
                Err(SolveError::NoSolutionAtThisN { m0, n, failure }) => {
                    trace.push(Attempt { m0, n, failure })
                }
                Err(e) => return Err(e),
            }
        }
    }
    Err(SolveError::NotFound { trace })
}

/// Serialised solution. `P[n]` lists the `z` coefficients of the `pⁿ` slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDocument {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<String>>,
    #[serde(rename = "Q")]
    pub q: Vec<String>,
    pub sigma: i8,
    pub spec_hash: String,
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Rational(#[from] ParseRationalError),
    #[error("inconsistent solution document: {0}")]
    Shape(String),
}

pub fn emit_solution(sol: &SolutionForm, spec: &PotentialSpec) -> SolutionDocument {
    SolutionDocument {
        n: sol.n,
        m: sol.m(),
        p: (0..=sol.n)
            .map(|i| {
                let row = sol.p.row(i);
                if row.is_zero() {
                    vec!["0".to_string()]
                } else {
                    row.coeffs().iter().map(format_rational).collect()
                }
            })
            .collect(),
        q: sol.q.coeffs().iter().map(format_rational).collect(),
        sigma: sol.sigma,
        spec_hash: spec.hash(),
    }
}

/// Structural parse only; the residual is not checked here.
pub fn parse_solution(doc: &SolutionDocument) -> Result<SolutionForm, DocumentError> {
    if doc.p.len() != doc.n + 1 {
        return Err(DocumentError::Shape(format!(
            "N = {} but P has {} slices",
            doc.n,
            doc.p.len()
        )));
    }
    if doc.m.len() != doc.n + 1 {
        return Err(DocumentError::Shape("M must have N + 1 entries".into()));
    }
    for (i, (row, &mi)) in doc.p.iter().zip(&doc.m).enumerate() {
        if row.len() != mi + 1 {
            return Err(DocumentError::Shape(format!(
                "slice {i} lists {} coefficients but M[{i}] = {mi}",
                row.len()
            )));
        }
    }
    if doc.sigma != 1 && doc.sigma != -1 {
        return Err(DocumentError::Shape("sigma must be 1 or -1".into()));
    }
    let parse_row = |xs: &[String]| -> Result<UniPoly, DocumentError> {
        Ok(UniPoly::new(
            xs.iter().map(|s| parse_rational(s)).collect::<Result<_, _>>()?,
        ))
    };
    let p = BiPoly::new(doc.p.iter().map(|r| parse_row(r)).collect::<Result<_, _>>()?);
    let q = parse_row(&doc.q)?;
    Ok(SolutionForm {
        n: doc.n,
        p,
        q,
        sigma: doc.sigma,
    })
}

impl SolutionDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution document serialises")
    }

    pub fn from_json(s: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(s)?)
    }
}

fn latex_rational(r: &Rational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", r.numer(), r.denom())
    }
}

/// Expanded polynomial in `var`, highest power first.
fn latex_poly(poly: &UniPoly, var: &str) -> String {
    let mut out = String::new();
    for (i, c) in poly.coeffs().iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let neg = c.is_negative();
        let mag = c.abs();
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mono = match i {
            0 => String::new(),
            1 => var.to_string(),
            _ => format!("{var}^{{{i}}}"),
        };
        if mag.is_one() && i > 0 {
            out.push_str(&mono);
        } else if i == 0 {
            out.push_str(&latex_rational(&mag));
        } else {
            out.push_str(&format!("{} {mono}", latex_rational(&mag)));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// LaTeX `align*` block with every slice `Pₙ(z)`, `Q(p)` and the resulting
/// `G(p, x)`.
pub fn to_latex(sol: &SolutionForm) -> String {
    let mut s = String::from("\\begin{align*}\n");
    for i in (0..=sol.n).rev() {
        s.push_str(&format!("P_{{{i}}}(z) &= {} \\\\\n", latex_poly(&sol.p.row(i), "z")));
    }
    s.push_str(&format!("Q(p) &= {} \\\\\n", latex_poly(&sol.q, "p")));
    let sign = if sol.sigma < 0 { "-" } else { "" };
    s.push_str(&format!(
        "G(p,x) &= {sign}\\frac{{\\sum_{{n=0}}^{{{}}} p^n P_n(z)}}{{2\\sqrt{{Q(p)}}}}\n",
        sol.n
    ));
    s.push_str("\\end{align*}\n");
    s
}
