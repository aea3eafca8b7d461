use num_traits::{Signed, Zero};
use thiserror::Error;

use super::rational::{to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinearSystemError {
    #[error("matrix has {rows} rows but right-hand side has {rhs} entries")]
    DimensionMismatch { rows: usize, rhs: usize },
    #[error("system is consistent but rank {rank} < {unknowns} unknowns")]
    SingularSystem { rank: usize, unknowns: usize },
    #[error("system has no solution (row {row} reduces to 0 = nonzero)")]
    InconsistentSystem { row: usize },
    #[error("back-substitution check failed")]
    VerificationFailed,
}

struct Echelon {
    aug: Vec<Vec<Rational>>,
    pivots: Vec<usize>,
}

/// Forward elimination of `[A | b]` with partial pivoting. The pivot is the
/// nonzero entry of largest floating magnitude; exactness does not depend on
/// that choice.
fn echelon(a: &[Vec<Rational>], b: Option<&[Rational]>, cols: usize) -> Echelon {
    let mut aug: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<Rational> = (0..cols)
                .map(|j| row.get(j).cloned().unwrap_or_else(Rational::zero))
                .collect();
            if let Some(b) = b {
                r.push(b[i].clone());
            }
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        if r == aug.len() {
            break;
        }
        let best = (r..aug.len())
            .filter(|&i| !aug[i][col].is_zero())
            .max_by(|&i, &j| {
                to_f64(&aug[i][col].abs())
                    .partial_cmp(&to_f64(&aug[j][col].abs()))
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        let Some(best) = best else { continue };
        aug.swap(r, best);
        let pivot = aug[r][col].clone();
        for i in r + 1..aug.len() {
            if aug[i][col].is_zero() {
                continue;
            }
            let f = &aug[i][col] / &pivot;
            for j in col..aug[i].len() {
                let delta = &f * &aug[r][j];
                aug[i][j] -= delta;
            }
        }
        pivots.push(col);
        r += 1;
    }
    Echelon { aug, pivots }
}

pub fn rank(a: &[Vec<Rational>]) -> usize {
    let cols = a.iter().map(Vec::len).max().unwrap_or(0);
    echelon(a, None, cols).pivots.len()
}

/// Solves `A·x = b` exactly.
///
/// `A` may be overdetermined as long as the system is consistent. The result
/// is multiplied back through `A` before it is returned.
pub fn solve_linear_exact(
    a: &[Vec<Rational>],
    b: &[Rational],
) -> Result<Vec<Rational>, LinearSystemError> {
    if a.len() != b.len() {
        return Err(LinearSystemError::DimensionMismatch {
            rows: a.len(),
            rhs: b.len(),
        });
    }
    let n = a.iter().map(Vec::len).max().unwrap_or(0);
    let Echelon { aug, pivots } = echelon(a, Some(b), n);

    for (i, row) in aug.iter().enumerate().skip(pivots.len()) {
        if !row[n].is_zero() {
            return Err(LinearSystemError::InconsistentSystem { row: i });
        }
    }
    if pivots.len() < n {
        return Err(LinearSystemError::SingularSystem {
            rank: pivots.len(),
            unknowns: n,
        });
    }

    let mut x = vec![Rational::zero(); n];
    for (r, &col) in pivots.iter().enumerate().rev() {
        let mut acc = aug[r][n].clone();
        for j in col + 1..n {
            acc -= &aug[r][j] * &x[j];
        }
        x[col] = acc / &aug[r][col];
    }

    for (row, rhs) in a.iter().zip(b) {
        let lhs = row
            .iter()
            .zip(&x)
            .fold(Rational::zero(), |acc, (c, v)| acc + c * v);
        if &lhs != rhs {
            return Err(LinearSystemError::VerificationFailed);
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rat;
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| rat(v, 1)).collect())
            .collect()
    }

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| rat(x, 1)).collect()
    }

    #[test]
    fn identity() {
        let a = m(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(solve_linear_exact(&a, &v(&[1, 2, 3])).unwrap(), v(&[1, 2, 3]));
    }

    #[test]
    fn diagonal() {
        let a = m(&[&[2, 0], &[0, 4]]);
        assert_eq!(
            solve_linear_exact(&a, &v(&[1, 1])).unwrap(),
            vec![rat(1, 2), rat(1, 4)]
        );
    }

    #[test]
    fn inconsistent() {
        let a = m(&[&[1, 1], &[2, 2]]);
        assert!(matches!(
            solve_linear_exact(&a, &v(&[1, 3])),
            Err(LinearSystemError::InconsistentSystem { .. })
        ));
    }

    #[test]
    fn singular_consistent() {
        let a = m(&[&[1, 1], &[2, 2]]);
        assert_eq!(
            solve_linear_exact(&a, &v(&[1, 2])),
            Err(LinearSystemError::SingularSystem { rank: 1, unknowns: 2 })
        );
        assert_eq!(rank(&a), 1);
    }

    #[test]
    fn overdetermined_consistent() {
        let a = m(&[&[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(solve_linear_exact(&a, &v(&[2, 3, 5])).unwrap(), v(&[2, 3]));
        assert!(solve_linear_exact(&a, &v(&[2, 3, 6])).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let a = m(&[&[1, 0], &[0, 1]]);
        assert!(matches!(
            solve_linear_exact(&a, &v(&[1])),
            Err(LinearSystemError::DimensionMismatch { .. })
        ));
    }

    fn arb_system() -> impl Strategy<Value = (Vec<Vec<Rational>>, Vec<Rational>)> {
        (1usize..=8).prop_flat_map(|n| {
            (
                prop::collection::vec(prop::collection::vec((-9i64..10, 1i64..5), n), n),
                prop::collection::vec((-20i64..20, 1i64..7), n),
            )
                .prop_map(|(a, x)| {
                    let a: Vec<Vec<Rational>> = a
                        .into_iter()
                        .map(|r| r.into_iter().map(|(p, q)| rat(p, q)).collect())
                        .collect();
                    let x: Vec<Rational> = x.into_iter().map(|(p, q)| rat(p, q)).collect();
                    (a, x)
                })
        })
    }

    proptest! {
        #[test]
        fn recovers_solution((a, x) in arb_system()) {
            let n = x.len();
            prop_assume!(rank(&a) == n);
            let b: Vec<Rational> = a
                .iter()
                .map(|row| row.iter().zip(&x).fold(Rational::zero(), |acc, (c, v)| acc + c * v))
                .collect();
            prop_assert_eq!(solve_linear_exact(&a, &b).unwrap(), x);
        }
    }
}
