//! Hitting probabilities as quotients of polynomials in the transition
//! entries, enumerated over functional graphs of the non-target states.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::SupportGraph;
use crate::linalg;
use crate::mdp::{induce_chain, MarkovChain, Mdp, StateId, StationaryPolicy};
use crate::scalar::Scalar;
use crate::solvers::check_discount;

/// Maximum number of maps the enumeration will visit.
pub const FW_TERM_GUARD: u128 = 10_000_000;

const CHUNK: u128 = 4096;

/// A quotient kept as its two nonnegative parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalValue<T = f64> {
    pub numerator: T,
    pub denominator: T,
}

impl<T: Scalar> RationalValue<T> {
    pub fn value(&self) -> T {
        self.numerator.clone() / self.denominator.clone()
    }
}

impl<T: Scalar> fmt::Display for RationalValue<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.numerator, self.denominator)
    }
}

/// One map `f: S \ Q -> S` together with its derived flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningMapTerm<T = f64> {
    /// Domain states in increasing order.
    pub domain: Vec<StateId>,
    /// `f(domain[k])`.
    pub image: Vec<StateId>,
    /// The functional graph has no cycle.
    pub acyclic: bool,
    /// `Π δ(ℓ, f(ℓ))`.
    pub weight: T,
    exits: Vec<Option<StateId>>,
    path_from: Vec<Vec<StateId>>,
}

impl<T: Scalar> SpanningMapTerm<T> {
    /// Whether the `f`-path from `i` visits `j`.
    pub fn visits(&self, i: StateId, j: StateId) -> bool {
        if i == j {
            return true;
        }
        match self.domain.binary_search(&i) {
            Ok(k) => self.path_from[k].contains(&j),
            Err(_) => false,
        }
    }

    /// The target state reached from `i`, if the path from `i` is not caught
    /// in a cycle.
    pub fn exit_from(&self, i: StateId) -> Option<StateId> {
        self.domain.binary_search(&i).ok().and_then(|k| self.exits[k])
    }
}

/// Every map over the row supports, in mixed-radix order. Maps with a
/// zero-weight edge are skipped since they contribute nothing.
pub fn spanning_map_terms<T: Scalar>(c: &MarkovChain<T>, targets: &[StateId]) -> Result<Vec<SpanningMapTerm<T>>> {
    let layout = Layout::new(c, targets)?;
    let total = layout.count()?;
    let mut out = Vec::with_capacity(total as usize);
    let mut digits = vec![0usize; layout.domain.len()];
    for _ in 0..total {
        let image = layout.image(&digits);
        let (exits, path_from) = layout.trace_paths(&image);
        out.push(SpanningMapTerm {
            domain: layout.domain.clone(),
            acyclic: exits.iter().all(Option::is_some),
            weight: layout.weight(c, &image),
            image,
            exits,
            path_from,
        });
        layout.increment(&mut digits);
    }
    Ok(out)
}

/// Exit distribution from one start state, with one numerator per target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingDistribution<T = f64> {
    pub targets: Vec<StateId>,
    pub numerators: Vec<T>,
    pub denominator: T,
    pub terms: u128,
}

impl<T: Scalar> HittingDistribution<T> {
    pub fn probability(&self, k: StateId) -> Option<RationalValue<T>> {
        let idx = self.targets.iter().position(|&t| t == k)?;
        Some(RationalValue {
            numerator: self.numerators[idx].clone(),
            denominator: self.denominator.clone(),
        })
    }
}

struct Layout {
    n: usize,
    in_target: Vec<bool>,
    domain: Vec<StateId>,
    position: Vec<usize>,
    choices: Vec<Vec<StateId>>,
}

impl Layout {
    fn new<T: Scalar>(c: &MarkovChain<T>, targets: &[StateId]) -> Result<Self> {
        let n = c.num_states();
        let mut in_target = vec![false; n];
        for &q in targets {
            if q >= n {
                return Err(Error::UnknownState(q));
            }
            in_target[q] = true;
        }
        if !in_target.iter().any(|&x| x) {
            return Err(invalid("targets", "empty target set"));
        }
        let domain: Vec<StateId> = (0..n).filter(|&s| !in_target[s]).collect();
        let mut position = vec![usize::MAX; n];
        for (k, &s) in domain.iter().enumerate() {
            position[s] = k;
        }
        let adj = c.adjacency();
        let choices = domain.iter().map(|&s| adj[s].clone()).collect();
        let g = SupportGraph::from_successors(adj);
        for &s in &domain {
            let reach = g.reachable_from(s);
            if !(0..n).any(|q| in_target[q] && reach[q]) {
                return Err(Error::Precondition(format!("state {s} cannot reach the target set")));
            }
        }
        Ok(Self {
            n,
            in_target,
            domain,
            position,
            choices,
        })
    }

    fn count(&self) -> Result<u128> {
        let mut total: u128 = 1;
        for ch in &self.choices {
            total = total.saturating_mul(ch.len() as u128);
            if total > FW_TERM_GUARD {
                return Err(Error::GuardExceeded {
                    terms: self.choices.iter().fold(1u128, |acc, ch| acc.saturating_mul(ch.len() as u128)),
                    guard: FW_TERM_GUARD,
                });
            }
        }
        Ok(total)
    }

    fn digits_of(&self, mut index: u128) -> Vec<usize> {
        self.choices
            .iter()
            .map(|ch| {
                let radix = ch.len() as u128;
                let d = (index % radix) as usize;
                index /= radix;
                d
            })
            .collect()
    }

    fn increment(&self, digits: &mut [usize]) {
        for (d, ch) in digits.iter_mut().zip(&self.choices) {
            *d += 1;
            if *d < ch.len() {
                return;
            }
            *d = 0;
        }
    }

    fn image(&self, digits: &[usize]) -> Vec<StateId> {
        digits.iter().zip(&self.choices).map(|(&d, ch)| ch[d]).collect()
    }

    fn weight<T: Scalar>(&self, c: &MarkovChain<T>, image: &[StateId]) -> T {
        self.domain
            .iter()
            .zip(image)
            .fold(T::one(), |acc, (&s, &t)| acc * c.prob(s, t))
    }

    /// Target reached from each domain state (`None` on a cycle) and the
    /// states visited along the way.
    fn trace_paths(&self, image: &[StateId]) -> (Vec<Option<StateId>>, Vec<Vec<StateId>>) {
        let m = self.domain.len();
        let exits = self.exits(image);
        let paths = (0..m)
            .map(|k| {
                let mut seen = vec![false; self.n];
                let mut path = Vec::new();
                let mut cur = self.domain[k];
                while !seen[cur] {
                    seen[cur] = true;
                    path.push(cur);
                    if self.in_target[cur] {
                        break;
                    }
                    cur = image[self.position[cur]];
                }
                path
            })
            .collect();
        (exits, paths)
    }

    fn exits(&self, image: &[StateId]) -> Vec<Option<StateId>> {
        const UNSEEN: u8 = 0;
        const ACTIVE: u8 = 1;
        const DONE: u8 = 2;
        let m = self.domain.len();
        let mut state = vec![UNSEEN; m];
        let mut exit: Vec<Option<StateId>> = vec![None; m];
        let mut stack = Vec::new();
        for start in 0..m {
            if state[start] == DONE {
                continue;
            }
            let mut k = start;
            let result = loop {
                if state[k] == DONE {
                    break exit[k];
                }
                if state[k] == ACTIVE {
                    break None;
                }
                state[k] = ACTIVE;
                stack.push(k);
                let next = image[k];
                if self.in_target[next] {
                    break Some(next);
                }
                k = self.position[next];
            };
            for v in stack.drain(..) {
                state[v] = DONE;
                exit[v] = result;
            }
        }
        exit
    }
}

/// Exit distribution from `j` into `targets`, enumerated over maps.
///
/// The denominator sums the weights of acyclic maps; the numerator for `k`
/// keeps those acyclic maps whose path from `j` ends at `k`.
pub fn fw_hitting_distribution<T: Scalar>(
    c: &MarkovChain<T>,
    targets: &[StateId],
    j: StateId,
) -> Result<HittingDistribution<T>> {
    let layout = Layout::new(c, targets)?;
    if j >= layout.n {
        return Err(Error::UnknownState(j));
    }
    if layout.in_target[j] {
        return Err(Error::Precondition(format!("start state {j} lies in the target set")));
    }
    let total = layout.count()?;
    let sorted_targets: Vec<StateId> = (0..layout.n).filter(|&s| layout.in_target[s]).collect();
    let mut target_slot = vec![usize::MAX; layout.n];
    for (k, &t) in sorted_targets.iter().enumerate() {
        target_slot[t] = k;
    }
    let j_pos = layout.position[j];
    let chunks = total.div_ceil(CHUNK);
    let partials: Vec<(Vec<T>, T)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut digits = layout.digits_of(start);
            let mut nums = vec![T::zero(); sorted_targets.len()];
            let mut den = T::zero();
            for _ in start..end {
                let image = layout.image(&digits);
                let exits = layout.exits(&image);
                if exits.iter().all(Option::is_some) {
                    let w = layout.weight(c, &image);
                    debug_assert!(!w.is_neg(), "negative term");
                    let k = exits[j_pos].expect("acyclic");
                    let slot = target_slot[k];
                    nums[slot] = nums[slot].clone() + &w;
                    den = den + &w;
                }
                layout.increment(&mut digits);
            }
            (nums, den)
        })
        .collect();
    let mut numerators = vec![T::zero(); sorted_targets.len()];
    let mut denominator = T::zero();
    for (nums, den) in partials {
        for (acc, x) in numerators.iter_mut().zip(&nums) {
            *acc = acc.clone() + x;
        }
        denominator = denominator + &den;
    }
    Ok(HittingDistribution {
        targets: sorted_targets,
        numerators,
        denominator,
        terms: total,
    })
}

/// `Pr_j(X_{τ(Q)} = k)` as a quotient of map-weight sums.
pub fn fw_hitting_probability<T: Scalar>(
    c: &MarkovChain<T>,
    targets: &[StateId],
    j: StateId,
    k: StateId,
) -> Result<RationalValue<T>> {
    if !targets.contains(&k) {
        return Err(Error::Precondition(format!("state {k} is not a target")));
    }
    let dist = fw_hitting_distribution(c, targets, j)?;
    Ok(dist.probability(k).expect("k is a target"))
}

/// Exit distributions into `targets` from every state by a linear solve.
///
/// Row `s` is the distribution over `targets` (in the given order); target
/// states exit immediately.
pub fn hitting_probabilities<T: Scalar>(c: &MarkovChain<T>, targets: &[StateId]) -> Result<Vec<Vec<T>>> {
    let layout = Layout::new(c, targets)?;
    let m = layout.domain.len();
    let a: Vec<Vec<T>> = layout
        .domain
        .iter()
        .map(|&s| {
            layout
                .domain
                .iter()
                .map(|&t| {
                    let p = c.prob(s, t).clone();
                    if s == t {
                        T::one() - p
                    } else {
                        -p
                    }
                })
                .collect()
        })
        .collect();
    let mut out = vec![vec![T::zero(); targets.len()]; layout.n];
    for (col, &k) in targets.iter().enumerate() {
        let b: Vec<T> = layout.domain.iter().map(|&s| c.prob(s, k).clone()).collect();
        let h = if m == 0 { Vec::new() } else { linalg::solve(a.clone(), b)? };
        for (&s, v) in layout.domain.iter().zip(h) {
            out[s][col] = v;
        }
        out[k][col] = T::one();
    }
    Ok(out)
}

/// Adds an absorbing copy `n + k` of every state `k`: from `k` move to the
/// copy with probability `1 - α`, otherwise step as `δ(k, ·)` scaled by `α`.
pub fn duplicate_chain<T: Scalar>(c: &MarkovChain<T>, alpha: &T) -> Result<MarkovChain<T>> {
    check_discount(alpha)?;
    let n = c.num_states();
    let mut rows = vec![vec![T::zero(); 2 * n]; 2 * n];
    for k in 0..n {
        for l in 0..n {
            rows[k][l] = alpha.clone() * c.prob(k, l);
        }
        rows[k][n + k] = T::one() - alpha.clone();
        rows[n + k][n + k] = T::one();
    }
    let mut reward = c.reward().to_vec();
    reward.extend(std::iter::repeat_n(T::zero(), n));
    MarkovChain::new(rows, reward)
}

/// `(1 - α) v_i^α(π)` as one quotient: the occupancies all come from the
/// same exit distribution of the duplicated chain and share a denominator.
pub fn fw_discounted_value<T: Scalar>(
    m: &Mdp<T>,
    pi: &StationaryPolicy<T>,
    alpha: &T,
    i: StateId,
) -> Result<RationalValue<T>> {
    m.check_state(i)?;
    let c = induce_chain(m, pi)?;
    let n = c.num_states();
    let dup = duplicate_chain(&c, alpha)?;
    let copies: Vec<StateId> = (n..2 * n).collect();
    let dist = fw_hitting_distribution(&dup, &copies, i)?;
    let numerator = (0..n).fold(T::zero(), |acc, j| acc + &(c.reward()[j].clone() * &dist.numerators[j]));
    Ok(RationalValue {
        numerator,
        denominator: dist.denominator,
    })
}

/// A multivariate polynomial as a map from exponent vectors to coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T = f64> {
    num_vars: usize,
    terms: BTreeMap<Vec<u32>, T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(num_vars: usize, terms: impl IntoIterator<Item = (Vec<u32>, T)>) -> Result<Self> {
        let mut p = Self::zero(num_vars);
        for (exps, coeff) in terms {
            p.add_term(exps, coeff)?;
        }
        Ok(p)
    }

    pub fn add_term(&mut self, exps: Vec<u32>, coeff: T) -> Result<()> {
        if exps.len() != self.num_vars {
            return Err(invalid("exponents", format!("{} entries for {} variables", exps.len(), self.num_vars)));
        }
        let entry = self.terms.entry(exps).or_insert_with(T::zero);
        *entry = entry.clone() + &coeff;
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &T)> {
        self.terms.iter().filter(|(_, c)| !c.is_zero())
    }

    pub fn num_terms(&self) -> usize {
        self.terms().count()
    }

    /// Largest total degree over nonzero monomials.
    pub fn degree(&self) -> u32 {
        self.terms().map(|(e, _)| e.iter().sum()).max().unwrap_or(0)
    }

    /// Largest number of distinct variables in one monomial.
    pub fn max_support(&self) -> usize {
        self.terms()
            .map(|(e, _)| e.iter().filter(|&&x| x > 0).count())
            .max()
            .unwrap_or(0)
    }

    pub fn has_nonnegative_coefficients(&self) -> bool {
        self.terms.values().all(|c| !c.is_neg())
    }

    pub fn evaluate(&self, point: &[T]) -> T {
        assert_eq!(point.len(), self.num_vars, "point dimension");
        self.terms().fold(T::zero(), |acc, (exps, coeff)| {
            let mono = exps
                .iter()
                .zip(point)
                .fold(coeff.clone(), |m, (&e, x)| m * &x.powi(e));
            acc + &mono
        })
    }
}

/// Symbolic numerator and denominator over the chain's positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicHitting<T = f64> {
    /// Variable `v` stands for `δ(edges[v].0, edges[v].1)`.
    pub edges: Vec<(StateId, StateId)>,
    pub numerators: Vec<Polynomial<T>>,
    pub denominator: Polynomial<T>,
    pub targets: Vec<StateId>,
}

impl<T: Scalar> SymbolicHitting<T> {
    /// The chain's entries in variable order.
    pub fn point(&self, c: &MarkovChain<T>) -> Vec<T> {
        self.edges.iter().map(|&(s, t)| c.prob(s, t).clone()).collect()
    }
}

/// The map-sum polynomials of [`fw_hitting_distribution`] in symbolic form.
pub fn fw_symbolic<T: Scalar>(c: &MarkovChain<T>, targets: &[StateId], j: StateId) -> Result<SymbolicHitting<T>> {
    let terms = spanning_map_terms(c, targets)?;
    let adj = c.adjacency();
    let edges: Vec<(StateId, StateId)> = adj
        .iter()
        .enumerate()
        .flat_map(|(s, succ)| succ.iter().map(move |&t| (s, t)))
        .collect();
    let var_of: BTreeMap<(StateId, StateId), usize> = edges.iter().enumerate().map(|(v, &e)| (e, v)).collect();
    let mut sorted_targets: Vec<StateId> = targets.to_vec();
    sorted_targets.sort_unstable();
    sorted_targets.dedup();
    if sorted_targets.contains(&j) {
        return Err(Error::Precondition(format!("start state {j} lies in the target set")));
    }
    let nv = edges.len();
    let mut numerators = vec![Polynomial::zero(nv); sorted_targets.len()];
    let mut denominator = Polynomial::zero(nv);
    for term in terms.iter().filter(|t| t.acyclic) {
        let mut exps = vec![0u32; nv];
        for (&s, &t) in term.domain.iter().zip(&term.image) {
            exps[var_of[&(s, t)]] += 1;
        }
        let k = term.exit_from(j).expect("acyclic");
        let slot = sorted_targets.binary_search(&k).expect("target");
        numerators[slot].add_term(exps.clone(), T::one())?;
        denominator.add_term(exps, T::one())?;
    }
    Ok(SymbolicHitting {
        edges,
        numerators,
        denominator,
        targets: sorted_targets,
    })
}

/// Degree statistics of the occupancy polynomials of the duplicated chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeAudit {
    pub max_degree: u32,
    pub max_support: usize,
    /// `2 |S|`.
    pub bound: u32,
    pub holds: bool,
}

pub fn fw_degree_audit<T: Scalar>(c: &MarkovChain<T>, alpha: &T, i: StateId) -> Result<DegreeAudit> {
    let n = c.num_states();
    let dup = duplicate_chain(c, alpha)?;
    let copies: Vec<StateId> = (n..2 * n).collect();
    let sym = fw_symbolic(&dup, &copies, i)?;
    let polys = sym.numerators.iter().chain(std::iter::once(&sym.denominator));
    let max_degree = polys.clone().map(Polynomial::degree).max().unwrap_or(0);
    let max_support = polys.map(Polynomial::max_support).max().unwrap_or(0);
    let bound = 2 * n as u32;
    Ok(DegreeAudit {
        max_degree,
        max_support,
        bound,
        holds: max_degree <= bound && max_support <= bound as usize,
    })
}

fn le_tol<T: Scalar>(x: &T, y: &T) -> bool {
    if T::EXACT {
        return x <= y;
    }
    let scale = T::max_of(T::one(), y.abs());
    *x <= y.clone() + &(T::tolerance() * &scale)
}

/// Checks `(1+ε)^{-d} f(b) ≤ f(a) ≤ (1+ε)^d f(b)` in cross-multiplied form
/// for a polynomial `f` of degree `d` with nonnegative coefficients.
pub fn check_poly_ratio_bound<T: Scalar>(poly: &Polynomial<T>, a: &[T], b: &[T], eps: &T) -> Result<bool> {
    if !poly.has_nonnegative_coefficients() {
        return Err(Error::Precondition("negative coefficient".into()));
    }
    if eps.is_neg() {
        return Err(invalid("eps", format!("{eps} is negative")));
    }
    if a.len() != poly.num_vars() || b.len() != poly.num_vars() {
        return Err(invalid("point", "dimension does not match the polynomial"));
    }
    let scale = T::one() + eps;
    for (x, y) in a.iter().zip(b) {
        if x.is_neg() || y.is_neg() {
            return Err(Error::Precondition("negative coordinate".into()));
        }
        let ok = le_tol(y, &(scale.clone() * x)) && le_tol(x, &(scale.clone() * y));
        if !ok {
            return Err(Error::Precondition(format!("coordinate ratio {x}/{y} outside [1/(1+ε), 1+ε]")));
        }
    }
    let factor = scale.powi(poly.degree());
    let fa = poly.evaluate(a);
    let fb = poly.evaluate(b);
    Ok(le_tol(&fb, &(factor.clone() * &fa)) && le_tol(&fa, &(factor * &fb)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::discounted_occupancy;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn rat_chain(rows: &[&[(i64, i64)]]) -> MarkovChain<Rational> {
        MarkovChain::from_transitions(rows.iter().map(|r| r.iter().map(|&(n, d)| q(n, d)).collect()).collect()).unwrap()
    }

    #[test]
    fn two_state_example() {
        let c = MarkovChain::from_transitions(vec![vec![0.3, 0.7], vec![0.0, 1.0]]).unwrap();
        let v = fw_hitting_probability(&c, &[1], 0, 1).unwrap();
        assert!((v.numerator - 0.7).abs() < 1e-15);
        assert!((v.denominator - 0.7).abs() < 1e-15);
        assert!((v.value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_edge_into_target() {
        let c = MarkovChain::from_transitions(vec![vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(fw_hitting_probability(&c, &[1], 0, 1).unwrap().value(), 1.0);
    }

    #[test]
    fn cyclic_maps_excluded_from_numerator() {
        // State 1 is a self-loop half the time; the map sending it to itself
        // has a cycle and must not count.
        let c = rat_chain(&[
            &[(0, 1), (0, 1), (1, 1)],
            &[(0, 1), (1, 2), (1, 2)],
            &[(0, 1), (0, 1), (1, 1)],
        ]);
        let v = fw_hitting_probability(&c, &[2], 0, 2).unwrap();
        assert_eq!(v.value(), q(1, 1));
    }

    #[test]
    fn matches_linear_solve_exactly() {
        let c = rat_chain(&[
            &[(1, 4), (1, 4), (1, 4), (1, 4)],
            &[(1, 3), (0, 1), (1, 3), (1, 3)],
            &[(1, 2), (1, 6), (1, 6), (1, 6)],
            &[(0, 1), (1, 5), (2, 5), (2, 5)],
        ]);
        let targets = [2, 3];
        let lin = hitting_probabilities(&c, &targets).unwrap();
        for j in [0, 1] {
            let dist = fw_hitting_distribution(&c, &targets, j).unwrap();
            for (col, &k) in targets.iter().enumerate() {
                assert_eq!(dist.probability(k).unwrap().value(), lin[j][col]);
            }
        }
    }

    #[test]
    fn unreachable_target_is_rejected() {
        let c = MarkovChain::from_transitions(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(fw_hitting_probability(&c, &[1], 0, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn guard_stops_large_enumerations() {
        let n = 12;
        let c = MarkovChain::from_transitions(vec![vec![1.0 / n as f64; n]; n]).unwrap();
        assert!(matches!(
            fw_hitting_probability(&c, &[0], 1, 0),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn duplicate_of_single_state() {
        let c = MarkovChain::from_transitions(vec![vec![q(1, 1)]]).unwrap();
        let d = duplicate_chain(&c, &q(1, 2)).unwrap();
        assert_eq!(d.num_states(), 2);
        assert_eq!(*d.prob(0, 1), q(1, 2));
        assert_eq!(*d.prob(0, 0), q(1, 2));
        assert_eq!(*d.prob(1, 1), q(1, 1));
    }

    #[test]
    fn duplicate_exit_matches_occupancy() {
        let c = rat_chain(&[&[(1, 3), (2, 3), (0, 1)], &[(0, 1), (1, 2), (1, 2)], &[(1, 1), (0, 1), (0, 1)]]);
        let alpha = q(2, 3);
        let d = duplicate_chain(&c, &alpha).unwrap();
        for i in 0..3 {
            let dist = fw_hitting_distribution(&d, &[3, 4, 5], i).unwrap();
            for j in 0..3 {
                let mt = discounted_occupancy(&c, i, j, &alpha).unwrap();
                assert_eq!(dist.probability(3 + j).unwrap().value(), mt);
            }
        }
    }

    #[test]
    fn discounted_value_of_constant_reward() {
        let m = Mdp::new(vec![vec![vec![q(1, 1)]]], vec![vec![q(1, 1)]]).unwrap();
        let pi = StationaryPolicy::uniform(&m.structure()).unwrap();
        for alpha in [q(1, 2), q(9, 10)] {
            assert_eq!(fw_discounted_value(&m, &pi, &alpha, 0).unwrap().value(), q(1, 1));
        }
    }

    #[test]
    fn symbolic_form_matches_numeric() {
        let c = rat_chain(&[&[(1, 2), (1, 2), (0, 1)], &[(1, 3), (1, 3), (1, 3)], &[(0, 1), (0, 1), (1, 1)]]);
        let sym = fw_symbolic(&c, &[2], 0).unwrap();
        let pt = sym.point(&c);
        let num = fw_hitting_distribution(&c, &[2], 0).unwrap();
        assert_eq!(sym.denominator.evaluate(&pt), num.denominator);
        assert_eq!(sym.numerators[0].evaluate(&pt), num.numerators[0]);
        assert!(sym.denominator.degree() <= 2);
    }

    #[test]
    fn monomial_boundary_is_tight() {
        let d = 5;
        let p = Polynomial::from_terms(1, [(vec![d], q(1, 1))]).unwrap();
        let eps = q(1, 10);
        assert!(check_poly_ratio_bound(&p, &[q(11, 10)], &[q(1, 1)], &eps).unwrap());
        let fa = p.evaluate(&[q(11, 10)]);
        assert_eq!(fa, (q(1, 1) + &eps).powi(d));
    }

    #[test]
    fn ratio_bound_rejects_bad_inputs() {
        let p = Polynomial::from_terms(1, [(vec![1], -1.0)]).unwrap();
        assert!(check_poly_ratio_bound(&p, &[1.0], &[1.0], &0.1).is_err());
        let p = Polynomial::from_terms(1, [(vec![1], 1.0)]).unwrap();
        assert!(check_poly_ratio_bound(&p, &[2.0], &[1.0], &0.1).is_err());
        assert!(check_poly_ratio_bound(&p, &[0.0], &[0.0], &0.1).unwrap());
    }

    #[test]
    fn spanning_terms_flag_cycles() {
        let c = MarkovChain::from_transitions(vec![vec![0.3, 0.7], vec![0.0, 1.0]]).unwrap();
        let terms = spanning_map_terms(&c, &[1]).unwrap();
        assert_eq!(terms.len(), 2);
        assert!(!terms[0].acyclic);
        assert!(terms[1].acyclic && terms[1].visits(0, 1));
    }
}
