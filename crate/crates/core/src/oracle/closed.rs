use crate::classify::PotentialSpec;
use crate::solver::SolutionForm;

use super::roots::real_roots;
use super::OracleError;

/// Spectral parameter used for the asymptotic sign check.
const ASYMPTOTE_P: f64 = -1e6;

/// Floating-point view of a solution, bound to its potential.
///
/// In a gap the closed form is continued through the upper half plane, so
/// the sign of `√Q` flips once per band below `p`: the returned value is
/// `σ·(−1)^j·P/(2√Q)` with `j` the number of bands below `p`.
#[derive(Debug, Clone)]
pub struct ClosedForm<'a> {
    spec: &'a PotentialSpec,
    p_rows: Vec<Vec<f64>>,
    q: Vec<f64>,
    q_roots: Vec<f64>,
    sigma: f64,
}

impl<'a> ClosedForm<'a> {
    pub fn new(sol: &SolutionForm, spec: &'a PotentialSpec) -> Self {
        let q = sol.q().to_f64_coeffs();
        Self {
            spec,
            p_rows: sol.p().rows().iter().map(|r| r.to_f64_coeffs()).collect(),
            q_roots: real_roots(&q),
            q,
            sigma: f64::from(sol.sigma()),
        }
    }

    pub fn spec(&self) -> &'a PotentialSpec {
        self.spec
    }

    /// Real roots of `Q`, ascending.
    pub fn q_roots(&self) -> &[f64] {
        &self.q_roots
    }

    pub fn q_at(&self, p: f64) -> f64 {
        horner(&self.q, p)
    }

    /// `P(p, z)`
    pub fn numerator(&self, p: f64, z: f64) -> f64 {
        self.p_rows.iter().rev().fold(0.0, |acc, row| acc * p + horner(row, z))
    }

    /// Sign in front of `P/(2√Q)` at `p`, including the band parity.
    pub fn branch_sign(&self, p: f64) -> f64 {
        let below = self.q_roots.iter().filter(|&&r| r < p).count();
        if (below / 2) % 2 == 0 {
            self.sigma
        } else {
            -self.sigma
        }
    }

    /// `G` at a point `z` of the algebraic variable.
    pub fn eval_at_z(&self, z: f64, p: f64) -> Result<f64, OracleError> {
        let q = self.q_at(p);
        if !(q > 0.0) {
            return Err(OracleError::Branch { p, q });
        }
        Ok(self.branch_sign(p) * self.numerator(p, z) / (2.0 * q.sqrt()))
    }

    /// `G(p, x)` through the numeric map.
    pub fn eval(&self, x: f64, p: f64) -> Result<f64, OracleError> {
        let z = self.spec.z_at(x).ok_or(OracleError::NoNumericMap)?;
        self.eval_at_z(z, p)
    }

    /// `|2GG″ − G′² − 4(U − p)G² + 1|` with fourth-order central differences
    /// of step `h` in `x`.
    pub fn residual3(&self, x: f64, p: f64, h: f64) -> Result<f64, OracleError> {
        let g = |t: f64| self.eval(t, p);
        let (gm2, gm1, g0, gp1, gp2) = (g(x - 2.0 * h)?, g(x - h)?, g(x)?, g(x + h)?, g(x + 2.0 * h)?);
        let d1 = (gm2 - 8.0 * gm1 + 8.0 * gp1 - gp2) / (12.0 * h);
        let d2 = (-gm2 + 16.0 * gm1 - 30.0 * g0 + 16.0 * gp1 - gp2) / (12.0 * h * h);
        let u = self.spec.potential_at(x).ok_or(OracleError::NoNumericMap)?;
        Ok((2.0 * g0 * d2 - d1 * d1 - 4.0 * (u - p) * g0 * g0 + 1.0).abs())
    }

    /// `G(p, x)·2√(−p)` at a large negative `p`, for each sample `z`.
    pub fn asymptote(&self, zs: &[f64]) -> Result<Vec<f64>, OracleError> {
        let scale = 2.0 * (-ASYMPTOTE_P).sqrt();
        zs.iter()
            .map(|&z| self.eval_at_z(z, ASYMPTOTE_P).map(|g| g * scale))
            .collect()
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// `σ·P(p, z(x))/(2√Q(p))` with the gap branch described on [`ClosedForm`].
pub fn eval_g(sol: &SolutionForm, spec: &PotentialSpec, x: f64, p: f64) -> Result<f64, OracleError> {
    ClosedForm::new(sol, spec).eval(x, p)
}

pub fn residual3_numeric(
    sol: &SolutionForm,
    spec: &PotentialSpec,
    x: f64,
    p: f64,
    h: f64,
) -> Result<f64, OracleError> {
    ClosedForm::new(sol, spec).residual3(x, p, h)
}

/// The sign `σ` for which `G·2√(−p) → +1` as `p → −∞`, checked at
/// `p = −10⁶` over a few points of the `z` range.
pub fn sigma_fix(sol: &SolutionForm, spec: &PotentialSpec) -> Result<i8, OracleError> {
    let unsigned = sol.clone().with_sigma(1);
    let closed = ClosedForm::new(&unsigned, spec);
    let zs = sample_z(spec);
    let values = closed.asymptote(&zs)?;
    let sign = values[0].signum();
    for v in values {
        if (v.abs() - 1.0).abs() > 1e-3 || v.signum() != sign {
            return Err(OracleError::AsymptoteFailure { p: ASYMPTOTE_P, value: v });
        }
    }
    Ok(if sign > 0.0 { 1 } else { -1 })
}

/// Sample points of the algebraic variable: images of a period when there is
/// one, otherwise a few fixed values.
pub(crate) fn sample_z(spec: &PotentialSpec) -> Vec<f64> {
    match (spec.period(), spec.has_numeric_map()) {
        (Some(t), true) => (0..8)
            .filter_map(|i| spec.z_at(t * f64::from(i) / 8.0))
            .collect(),
        _ => vec![0.0, 0.5, 1.0],
    }
}
