//! Real Jacobi elliptic functions and the complete integral of the first kind.
//!
//! Everything is parameterised by `k2 = k²`, never by the modulus `k`.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

const MAX_ITER: usize = 32;
const AGM_TOL: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EllipticError {
    #[error("parameter k2 = {0} is outside the admissible range")]
    Domain(f64),
}

/// Complete elliptic integral K(k) via the arithmetic-geometric mean.
///
/// `0 <= k2 < 1`.
pub fn ellint_k(k2: f64) -> Result<f64, EllipticError> {
    if !(0.0..1.0).contains(&k2) {
        return Err(EllipticError::Domain(k2));
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - k2).sqrt();
    for _ in 0..MAX_ITER {
        if (a - b).abs() <= AGM_TOL * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(FRAC_PI_2 / a)
}

/// Returns `(cn, sn, dn)` of `x` for parameter `k2 ∈ [0, 1]`.
///
/// Uses the descending Landen (AGM) recursion. Arguments are first reduced
/// into one real period `4K`.
pub fn jacobi_cn_sn_dn(x: f64, k2: f64) -> Result<(f64, f64, f64), EllipticError> {
    if !(0.0..=1.0).contains(&k2) {
        return Err(EllipticError::Domain(k2));
    }
    if k2 == 0.0 {
        return Ok((x.cos(), x.sin(), 1.0));
    }
    if k2 == 1.0 {
        let sech = 1.0 / x.cosh();
        return Ok((sech, x.tanh(), sech));
    }
    let period = 4.0 * ellint_k(k2)?;
    let x = x - period * (x / period).round();

    let mut ratios = [0.0_f64; MAX_ITER + 1];
    let mut a = 1.0_f64;
    let mut b = (1.0 - k2).sqrt();
    let mut c = k2.sqrt();
    let mut n = 0;
    while c.abs() > AGM_TOL && n < MAX_ITER {
        let an = 0.5 * (a + b);
        c = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = an;
        n += 1;
        ratios[n] = c / a;
    }

    let mut phi = f64::powi(2.0, n as i32) * a * x;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (ratios[j] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    // cn/cos(φ₁ − φ₀) is 0/0 at odd multiples of K
    let dn = (1.0 - k2 * sn * sn).sqrt();
    Ok((cn, sn, dn))
}

/// A fixed parameter together with its cached quarter period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticParams {
    k2: f64,
    quarter_period: f64,
}

impl EllipticParams {
    pub fn new(k2: f64) -> Result<Self, EllipticError> {
        Ok(Self {
            k2,
            quarter_period: ellint_k(k2)?,
        })
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// K(k).
    pub fn quarter_period(&self) -> f64 {
        self.quarter_period
    }

    pub fn cn_sn_dn(&self, x: f64) -> (f64, f64, f64) {
        // k2 was validated on construction
        jacobi_cn_sn_dn(x, self.k2).expect("validated parameter")
    }
}
