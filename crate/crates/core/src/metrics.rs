//! Total-variation and ratio distances between partial valuations.
//!
//! Both distances only look at indices where *both* valuations are defined
//! and strictly positive; an undefined entry never counts as positive. The
//! supremum over an empty index set is zero.

use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::scalar::Scalar;

/// A finite-domain function whose entries may be undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialValuation<T = f64> {
    values: Vec<Option<T>>,
}

impl<T: Scalar> PartialValuation<T> {
    pub fn new(values: Vec<Option<T>>) -> Self {
        Self { values }
    }

    /// Every entry defined.
    pub fn total(values: Vec<T>) -> Self {
        Self {
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&T> {
        self.values.get(index).and_then(Option::as_ref)
    }

    /// `f(a) > 0`, false when `f(a)` is undefined.
    pub fn is_positive_at(&self, index: usize) -> bool {
        self.get(index).is_some_and(|v| v.is_pos())
    }

    fn jointly_positive<'a>(&'a self, other: &'a Self) -> impl Iterator<Item = (&'a T, &'a T)> {
        let n = self.values.len().max(other.values.len());
        (0..n).filter_map(move |k| match (self.get(k), other.get(k)) {
            (Some(x), Some(y)) if x.is_pos() && y.is_pos() => Some((x, y)),
            _ => None,
        })
    }
}

/// `sup { |f(a) - g(a)| : f(a), g(a) > 0 }`.
pub fn total_variation<T: Scalar>(f: &PartialValuation<T>, g: &PartialValuation<T>) -> T {
    f.jointly_positive(g)
        .map(|(x, y)| (x.clone() - y.clone()).abs())
        .fold(T::zero(), T::max_of)
}

/// `sup { max(f(a)/g(a), g(a)/f(a)) : f(a), g(a) > 0 } - 1`.
pub fn ratio_distance<T: Scalar>(f: &PartialValuation<T>, g: &PartialValuation<T>) -> T {
    let sup = f
        .jointly_positive(g)
        .map(|(x, y)| {
            let r = x.clone() / y.clone();
            let s = y.clone() / x.clone();
            T::max_of(r, s)
        })
        .fold(None, |acc: Option<T>, r| Some(acc.map_or(r.clone(), |a| T::max_of(a, r))));
    match sup {
        Some(s) => s - T::one(),
        None => T::zero(),
    }
}

/// The kernel flattened over `(i, a, j)` triples on a `|S| x max|A| x |S|`
/// grid; entries with `a` outside `A(i)` are undefined.
pub fn kernel_valuation<T: Scalar>(m: &Mdp<T>) -> PartialValuation<T> {
    let n = m.num_states();
    let k = m.max_actions();
    let mut values = vec![None; n * k * n];
    for i in 0..n {
        for a in 0..m.num_actions(i) {
            for j in 0..n {
                values[(i * k + a) * n + j] = Some(m.prob(i, a, j).clone());
            }
        }
    }
    PartialValuation { values }
}

/// Rewards flattened over `(i, a)` on a `|S| x max|A|` grid.
pub fn reward_valuation<T: Scalar>(m: &Mdp<T>) -> PartialValuation<T> {
    let k = m.max_actions();
    let mut values = vec![None; m.num_states() * k];
    for i in 0..m.num_states() {
        for a in 0..m.num_actions(i) {
            values[i * k + a] = Some(m.reward(i, a).clone());
        }
    }
    PartialValuation { values }
}

pub fn kernel_tv<T: Scalar>(m1: &Mdp<T>, m2: &Mdp<T>) -> Result<T> {
    ensure_same_structure(m1, m2)?;
    Ok(total_variation(&kernel_valuation(m1), &kernel_valuation(m2)))
}

pub fn kernel_ratio<T: Scalar>(m1: &Mdp<T>, m2: &Mdp<T>) -> Result<T> {
    ensure_same_structure(m1, m2)?;
    Ok(ratio_distance(&kernel_valuation(m1), &kernel_valuation(m2)))
}

pub fn reward_tv<T: Scalar>(m1: &Mdp<T>, m2: &Mdp<T>) -> Result<T> {
    ensure_same_structure(m1, m2)?;
    Ok(total_variation(&reward_valuation(m1), &reward_valuation(m2)))
}

/// Whether the kernels have identical support on every `(i, a, j)`.
pub fn same_support<T: Scalar>(m1: &Mdp<T>, m2: &Mdp<T>) -> bool {
    m1.same_structure(m2)
        && m1
            .transitions()
            .iter()
            .flatten()
            .flatten()
            .zip(m2.transitions().iter().flatten().flatten())
            .all(|(p, q)| p.is_pos() == q.is_pos())
}

/// Checks `d_rat(P1, P2) * p_min <= d_tv(P1, P2)` for support-equal kernels.
pub fn check_distance_relation<T: Scalar>(m1: &Mdp<T>, m2: &Mdp<T>, p_min: &T) -> Result<bool> {
    ensure_same_structure(m1, m2)?;
    if !same_support(m1, m2) {
        return Err(Error::StructureMismatch("kernel supports differ".into()));
    }
    let lhs = kernel_ratio(m1, m2)? * p_min;
    let rhs = kernel_tv(m1, m2)?;
    Ok(lhs <= rhs + T::tolerance())
}

/// Grid search over two-point valuations for `(f, g, h)` with
/// `d_rat(f, h) > d_rat(f, g) + d_rat(g, h)`.
pub fn find_ratio_triangle_violation() -> Option<[PartialValuation<crate::Rational>; 3]> {
    use crate::Rational;
    let grid: Vec<Rational> = (1..=4).map(|k| Rational::from_ratio(k, 4)).collect();
    let points: Vec<PartialValuation<Rational>> = grid
        .iter()
        .flat_map(|x| grid.iter().map(move |y| PartialValuation::total(vec![x.clone(), y.clone()])))
        .collect();
    for f in &points {
        for g in &points {
            for h in &points {
                let direct = ratio_distance(f, h);
                let detour = ratio_distance(f, g) + ratio_distance(g, h);
                if direct > detour {
                    return Some([f.clone(), g.clone(), h.clone()]);
                }
            }
        }
    }
    None
}

fn ensure_same_structure<T: Scalar>(m1: &Mdp<T>, m2: &Mdp<T>) -> Result<()> {
    if m1.same_structure(m2) {
        Ok(())
    } else {
        Err(Error::StructureMismatch(format!(
            "{} vs {} states or differing action sets",
            m1.num_states(),
            m2.num_states()
        )))
    }
}
