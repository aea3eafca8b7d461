use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::Zero;

use super::rational::Rational;
use super::unipoly::UniPoly;

/// Dense polynomial in `p` and `z` over ℚ.
///
/// Stored as one [`UniPoly`] in `z` per power of `p`: `rows[n]` is the
/// coefficient of `pⁿ`. Trailing zero rows are trimmed after every operation,
/// so `deg_p` and `deg_z` always reflect the table contents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BiPoly {
    rows: Vec<UniPoly>,
}

impl BiPoly {
    pub fn new(mut rows: Vec<UniPoly>) -> Self {
        while rows.last().is_some_and(UniPoly::is_zero) {
            rows.pop();
        }
        Self { rows }
    }

    /// Builds from a table `c[n][l]` of integers (coefficient of `pⁿ z^l`).
    pub fn from_int_table(table: &[&[i64]]) -> Self {
        Self::new(table.iter().map(|r| UniPoly::from_ints(r)).collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// A polynomial in `z` alone.
    pub fn from_z(poly: UniPoly) -> Self {
        Self::new(vec![poly])
    }

    /// A polynomial in `p` alone.
    pub fn from_p(poly: &UniPoly) -> Self {
        Self::new(poly.coeffs().iter().map(|c| UniPoly::constant(c.clone())).collect())
    }

    /// The single variable `p`.
    pub fn p() -> Self {
        Self::new(vec![UniPoly::zero(), UniPoly::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[UniPoly] {
        &self.rows
    }

    /// The `z`-polynomial multiplying `pⁿ`.
    pub fn row(&self, n: usize) -> UniPoly {
        self.rows.get(n).cloned().unwrap_or_default()
    }

    pub fn coeff(&self, n: usize, l: usize) -> Rational {
        self.rows.get(n).map_or_else(Rational::zero, |r| r.coeff(l))
    }

    pub fn deg_p(&self) -> Option<usize> {
        self.rows.len().checked_sub(1)
    }

    pub fn deg_z(&self) -> Option<usize> {
        self.rows.iter().filter_map(UniPoly::degree).max()
    }

    /// Coefficients of `z⁰` as a polynomial in `p`.
    pub fn z_constant_part(&self) -> UniPoly {
        UniPoly::new(self.rows.iter().map(|r| r.coeff(0)).collect())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.rows.iter().map(|r| r.scale(c)).collect())
    }

    pub fn mul_z(&self, poly: &UniPoly) -> Self {
        Self::new(self.rows.iter().map(|r| r * poly).collect())
    }

    pub fn dz(&self) -> Self {
        Self::new(self.rows.iter().map(UniPoly::derivative).collect())
    }

    pub fn dp(&self) -> Self {
        Self::new(
            self.rows
                .iter()
                .enumerate()
                .skip(1)
                .map(|(n, r)| r.scale(&Rational::from_integer(BigInt::from(n))))
                .collect(),
        )
    }

    pub fn eval_f64(&self, p: f64, z: f64) -> f64 {
        self.rows
            .iter()
            .rev()
            .fold(0.0, |acc, r| acc * p + r.eval_f64(z))
    }
}

impl Add for &BiPoly {
    type Output = BiPoly;
    fn add(self, rhs: &BiPoly) -> BiPoly {
        let n = self.rows.len().max(rhs.rows.len());
        BiPoly::new((0..n).map(|i| &self.row(i) + &rhs.row(i)).collect())
    }
}

impl Sub for &BiPoly {
    type Output = BiPoly;
    fn sub(self, rhs: &BiPoly) -> BiPoly {
        let n = self.rows.len().max(rhs.rows.len());
        BiPoly::new((0..n).map(|i| &self.row(i) - &rhs.row(i)).collect())
    }
}

impl Mul for &BiPoly {
    type Output = BiPoly;
    fn mul(self, rhs: &BiPoly) -> BiPoly {
        if self.is_zero() || rhs.is_zero() {
            return BiPoly::zero();
        }
        let mut out = vec![UniPoly::zero(); self.rows.len() + rhs.rows.len() - 1];
        for (i, a) in self.rows.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.rows.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        BiPoly::new(out)
    }
}

impl Neg for &BiPoly {
    type Output = BiPoly;
    fn neg(self) -> BiPoly {
        BiPoly::new(self.rows.iter().map(|r| -r).collect())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for BiPoly {
            type Output = BiPoly;
            fn $m(self, rhs: BiPoly) -> BiPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for BiPoly {
    type Output = BiPoly;
    fn neg(self) -> BiPoly {
        -&self
    }
}
