//! Dense linear solves over any [`Scalar`].

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves `a x = b` by Gaussian elimination.
///
/// Floats pivot on the largest magnitude; exact scalars take the first
/// nonzero entry.
pub fn solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|r| r.len() == n), "square system");
    for col in 0..n {
        let pivot = if T::EXACT {
            (col..n).find(|&r| !a[r][col].is_zero())
        } else {
            (col..n)
                .filter(|&r| !a[r][col].is_zero())
                .max_by(|&x, &y| {
                    a[x][col]
                        .abs()
                        .partial_cmp(&a[y][col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
        };
        let Some(p) = pivot else {
            return Err(Error::Singular);
        };
        if !T::EXACT && a[p][col].to_f64().abs() < 1e-300 {
            return Err(Error::Singular);
        }
        a.swap(col, p);
        b.swap(col, p);
        let inv = T::one() / a[col][col].clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() * &inv;
            let (upper, lower) = a.split_at_mut(r);
            let pivot_row = &upper[col];
            let row = &mut lower[0];
            for k in col..n {
                if !pivot_row[k].is_zero() {
                    row[k] = row[k].clone() - factor.clone() * &pivot_row[k];
                }
            }
            b[r] = b[r].clone() - factor * &b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for k in r + 1..n {
            if !a[r][k].is_zero() {
                acc = acc - a[r][k].clone() * &x[k];
            }
        }
        x[r] = acc / a[r][r].clone();
    }
    Ok(x)
}

/// `max_i |(a x - b)_i|`.
pub fn residual<T: Scalar>(a: &[Vec<T>], x: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(row, bi)| {
            let ax = row
                .iter()
                .zip(x)
                .fold(T::zero(), |acc, (aij, xj)| acc + &(aij.clone() * xj));
            (ax - bi.clone()).abs()
        })
        .fold(T::zero(), T::max_of)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn solves_small_float_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(a.clone(), vec![3.0, 5.0]).unwrap();
        assert!(residual(&a, &x, &[3.0, 5.0]) < 1e-12);
    }

    #[test]
    fn exact_solution_needs_pivoting() {
        let q = |n, d| Rational::from_ratio(n, d);
        let a = vec![vec![q(0, 1), q(1, 1)], vec![q(1, 2), q(1, 3)]];
        let x = solve(a, vec![q(1, 1), q(1, 1)]).unwrap();
        assert_eq!(x, vec![q(4, 3), q(1, 1)]);
    }

    #[test]
    fn singular_system_is_reported() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(solve(a, vec![1.0, 2.0]), Err(Error::Singular)));
    }
}
