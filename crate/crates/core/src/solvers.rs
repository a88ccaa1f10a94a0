//! Discounted and limit-average evaluation and optimization.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{self, SupportGraph};
use crate::linalg;
use crate::mdp::{induce_chain, ActionId, ActionStructure, MarkovChain, Mdp, StateId, StationaryPolicy};
use crate::scalar::Scalar;

/// Above this size float systems are solved iteratively.
pub const DIRECT_SOLVE_LIMIT: usize = 512;

/// State-action values defined on exactly the valid pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable<T = f64> {
    values: Vec<Vec<T>>,
}

impl<T: Scalar> QTable<T> {
    pub fn filled(structure: &ActionStructure, value: T) -> Self {
        Self {
            values: structure.0.iter().map(|&k| vec![value.clone(); k]).collect(),
        }
    }

    pub fn zeros(structure: &ActionStructure) -> Self {
        Self::filled(structure, T::zero())
    }

    pub fn from_rows(values: Vec<Vec<T>>) -> Self {
        Self { values }
    }

    pub fn get(&self, i: StateId, a: ActionId) -> &T {
        &self.values[i][a]
    }

    pub fn set(&mut self, i: StateId, a: ActionId, v: T) {
        self.values[i][a] = v;
    }

    pub fn row(&self, i: StateId) -> &[T] {
        &self.values[i]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn num_states(&self) -> usize {
        self.values.len()
    }

    pub fn structure(&self) -> ActionStructure {
        ActionStructure(self.values.iter().map(Vec::len).collect())
    }

    /// `max_b Q(i, b)`.
    pub fn max_at(&self, i: StateId) -> T {
        let row = &self.values[i];
        row.iter().skip(1).fold(row[0].clone(), |acc, v| T::max_of(acc, v.clone()))
    }

    /// Lowest-index maximizer of row `i`.
    pub fn argmax_at(&self, i: StateId) -> ActionId {
        argmax_lowest(&self.values[i])
    }

    /// `max |Q(i,a) - Q'(i,a)|` through `f64`.
    pub fn sup_distance<U: Scalar>(&self, other: &QTable<U>) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(x, y)| (x.to_f64() - y.to_f64()).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> QTable<f64> {
        QTable {
            values: self
                .values
                .iter()
                .map(|r| r.iter().map(Scalar::to_f64).collect())
                .collect(),
        }
    }
}

/// Lowest index attaining the maximum.
pub fn argmax_lowest<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (k, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountedSolution {
    pub alpha: f64,
    pub values: Vec<f64>,
    pub q_values: QTable<f64>,
    /// Greedy action per state (lowest index on ties).
    pub greedy: Vec<ActionId>,
    /// Sup-norm Bellman residual of the returned values.
    pub residual: f64,
    pub iterations: usize,
}

impl DiscountedSolution {
    pub fn greedy_policy(&self) -> StationaryPolicy<f64> {
        StationaryPolicy::deterministic(&self.q_values.structure(), &self.greedy)
            .expect("greedy choices are valid")
    }
}

/// Per recurrent class of the chosen policy: states and stationary weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentClass {
    pub states: Vec<StateId>,
    pub stationary: Vec<f64>,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageSolution {
    pub gain: Vec<f64>,
    /// Deterministic unichain optimal policy.
    pub policy: Vec<ActionId>,
    pub bias: Vec<f64>,
    pub classes: Vec<RecurrentClass>,
    pub iterations: usize,
}

impl AverageSolution {
    pub fn optimal_gain(&self) -> f64 {
        self.gain.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn check_discount<T: Scalar>(alpha: &T) -> Result<()> {
    if alpha.is_pos() && *alpha < T::one() {
        Ok(())
    } else {
        Err(invalid("alpha", format!("{alpha} not in (0, 1)")))
    }
}

/// Discounted values `v^α` of `pi` from every state.
pub fn evaluate_discounted_all<T: Scalar>(
    m: &Mdp<T>,
    pi: &StationaryPolicy<T>,
    alpha: &T,
) -> Result<Vec<T>> {
    check_discount(alpha)?;
    let c = induce_chain(m, pi)?;
    chain_discounted_values(&c, alpha)
}

/// `v_i^α(π)`, the expected total discounted reward from `i`.
pub fn evaluate_discounted<T: Scalar>(
    m: &Mdp<T>,
    pi: &StationaryPolicy<T>,
    alpha: &T,
    i: StateId,
) -> Result<T> {
    m.check_state(i)?;
    Ok(evaluate_discounted_all(m, pi, alpha)?.swap_remove(i))
}

/// Solves `v = r + α P v` on a chain.
pub fn chain_discounted_values<T: Scalar>(c: &MarkovChain<T>, alpha: &T) -> Result<Vec<T>> {
    check_discount(alpha)?;
    solve_resolvent(c, alpha, c.reward().to_vec())
}

/// Solves `(I - α P) y = b`.
fn solve_resolvent<T: Scalar>(c: &MarkovChain<T>, alpha: &T, b: Vec<T>) -> Result<Vec<T>> {
    let n = c.num_states();
    if !T::EXACT && n > DIRECT_SOLVE_LIMIT {
        return Ok(iterate_resolvent(c, alpha.to_f64(), &b));
    }
    let a = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| {
                    let p = alpha.clone() * c.prob(k, l);
                    if k == l {
                        T::one() - p
                    } else {
                        -p
                    }
                })
                .collect()
        })
        .collect();
    linalg::solve(a, b)
}

fn iterate_resolvent<T: Scalar>(c: &MarkovChain<T>, alpha: f64, b: &[T]) -> Vec<T> {
    let n = c.num_states();
    let adj = c.adjacency();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|k| adj[k].iter().map(|&l| (l, c.prob(k, l).to_f64())).collect())
        .collect();
    let b: Vec<f64> = b.iter().map(Scalar::to_f64).collect();
    let mut y = b.clone();
    loop {
        let next: Vec<f64> = (0..n)
            .map(|k| b[k] + alpha * rows[k].iter().map(|&(l, p)| p * y[l]).sum::<f64>())
            .collect();
        let diff = next
            .iter()
            .zip(&y)
            .map(|(x, z)| (x - z).abs())
            .fold(0.0, f64::max);
        y = next;
        if diff <= 1e-10 * (1.0 - alpha) {
            break;
        }
    }
    y.into_iter().map(T::from_f64).collect()
}

/// `MT^α_{i,j}`: normalized expected discounted time spent in `j` from `i`.
pub fn discounted_occupancy<T: Scalar>(
    c: &MarkovChain<T>,
    i: StateId,
    j: StateId,
    alpha: &T,
) -> Result<T> {
    Ok(occupancy_column(c, j, alpha)?.swap_remove(i))
}

/// `(MT^α_{k,j})_k` from the system `y_k = (1-α) 1{k=j} + α Σ_l δ(k,l) y_l`.
pub fn occupancy_column<T: Scalar>(c: &MarkovChain<T>, j: StateId, alpha: &T) -> Result<Vec<T>> {
    check_discount(alpha)?;
    let n = c.num_states();
    if j >= n {
        return Err(Error::UnknownState(j));
    }
    let mut b = vec![T::zero(); n];
    b[j] = T::one() - alpha.clone();
    solve_resolvent(c, alpha, b)
}

/// Optimal discounted values by value iteration.
///
/// Iterates until the sup-norm step is at most `tol (1-α) / (2α)`, which
/// bounds the distance to `V*` by `tol`; `Q*` is then read off the values.
pub fn optimal_discounted(m: &Mdp<f64>, alpha: f64, tol: f64) -> Result<DiscountedSolution> {
    check_discount(&alpha)?;
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("{tol} must be positive")));
    }
    let n = m.num_states();
    let threshold = tol * (1.0 - alpha) / (2.0 * alpha);
    let mut v = vec![0.0; n];
    let mut iterations = 0;
    loop {
        let next: Vec<f64> = (0..n)
            .map(|i| {
                (0..m.num_actions(i))
                    .map(|a| backup(m, &v, alpha, i, a))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        iterations += 1;
        let step = sup_diff(&next, &v);
        v = next;
        if step <= threshold {
            break;
        }
    }
    let mut q_values = q_from_values(m, &v, alpha);
    let mut greedy: Vec<ActionId> = (0..n).map(|i| q_values.argmax_at(i)).collect();
    let mut values: Vec<f64> = (0..n).map(|i| q_values.max_at(i)).collect();
    let mut residual = sup_diff(&values, &v);
    // Exact values of the greedy policy replace the iterate when they are
    // at least as self-consistent.
    if n <= DIRECT_SOLVE_LIMIT {
        let pi = StationaryPolicy::deterministic(&m.structure(), &greedy)?;
        let exact = evaluate_discounted_all(m, &pi, &alpha)?;
        let q_exact = q_from_values(m, &exact, alpha);
        let improved: Vec<f64> = (0..n).map(|i| q_exact.max_at(i)).collect();
        let exact_residual = sup_diff(&improved, &exact);
        if exact_residual <= residual {
            greedy = (0..n).map(|i| q_exact.argmax_at(i)).collect();
            values = exact;
            q_values = q_exact;
            residual = exact_residual;
        }
    }
    Ok(DiscountedSolution {
        alpha,
        values,
        q_values,
        greedy,
        residual,
        iterations,
    })
}

/// `Q(i,a) = r_i(a) + α Σ_j p_ij(a) V(j)`.
pub fn q_from_values(m: &Mdp<f64>, v: &[f64], alpha: f64) -> QTable<f64> {
    QTable::from_rows(
        (0..m.num_states())
            .map(|i| (0..m.num_actions(i)).map(|a| backup(m, v, alpha, i, a)).collect())
            .collect(),
    )
}

fn backup(m: &Mdp<f64>, v: &[f64], alpha: f64, i: StateId, a: ActionId) -> f64 {
    m.reward(i, a) + alpha * m.row(i, a).iter().zip(v).map(|(p, x)| p * x).sum::<f64>()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Stationary distribution of a closed class of `c`.
pub fn stationary_on_class<T: Scalar>(c: &MarkovChain<T>, class: &[StateId]) -> Result<Vec<T>> {
    let k = class.len();
    // μ (I - P_C) = 0 transposed, last equation replaced by Σ μ = 1.
    let mut a: Vec<Vec<T>> = (0..k)
        .map(|row| {
            (0..k)
                .map(|col| {
                    let p = c.prob(class[col], class[row]).clone();
                    if row == col {
                        T::one() - p
                    } else {
                        -p
                    }
                })
                .collect()
        })
        .collect();
    a[k - 1] = vec![T::one(); k];
    let mut b = vec![T::zero(); k];
    b[k - 1] = T::one();
    linalg::solve(a, b)
}

/// Long-run average reward `φ_i(π)` of a policy that is unichain from `i`.
pub fn evaluate_average<T: Scalar>(m: &Mdp<T>, pi: &StationaryPolicy<T>, i: StateId) -> Result<T> {
    m.check_state(i)?;
    let c = induce_chain(m, pi)?;
    chain_average(&c, i)
}

/// Average reward of a chain from `i`; refuses multichain starts.
pub fn chain_average<T: Scalar>(c: &MarkovChain<T>, i: StateId) -> Result<T> {
    let g = SupportGraph::from_successors(c.adjacency());
    let classes = graph::maximal_nontrivial_sccs(&g, i)?;
    if classes.len() != 1 {
        return Err(Error::NotUnichain(i));
    }
    let class = &classes[0];
    let mu = stationary_on_class(c, class)?;
    Ok(class
        .iter()
        .zip(&mu)
        .fold(T::zero(), |acc, (&s, w)| acc + &(w.clone() * &c.reward()[s])))
}

/// `(α, (1-α) v_i^α)` for each discount in `alphas`.
pub fn mertens_neyman_sweep<T: Scalar>(
    m: &Mdp<T>,
    pi: &StationaryPolicy<T>,
    i: StateId,
    alphas: &[T],
) -> Result<Vec<(T, T)>> {
    if alphas.is_empty() {
        return Err(invalid("alphas", "empty sweep"));
    }
    for w in alphas.windows(2) {
        if w[0] >= w[1] {
            return Err(invalid("alphas", "must be strictly increasing"));
        }
    }
    alphas
        .iter()
        .map(|alpha| {
            let v = evaluate_discounted(m, pi, alpha, i)?;
            Ok((alpha.clone(), (T::one() - alpha.clone()) * v))
        })
        .collect()
}

/// Optimal gain and a deterministic unichain optimal policy of a
/// communicating model, by gain/bias policy iteration.
pub fn optimal_average(m: &Mdp<f64>) -> Result<AverageSolution> {
    if !graph::is_communicating(m) {
        return Err(Error::NotCommunicating);
    }
    let n = m.num_states();
    let tol = 1e-10 * (1.0 + m.reward_sup_norm());
    let mut policy = vec![0; n];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (gain, bias) = gain_bias(m, &policy)?;
        let mut changed = false;
        // gain improvement
        let mut best_gain_actions: Vec<Vec<ActionId>> = Vec::with_capacity(n);
        for i in 0..n {
            let scores: Vec<f64> = (0..m.num_actions(i)).map(|a| expect(m.row(i, a), &gain)).collect();
            let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ties: Vec<ActionId> = (0..scores.len()).filter(|&a| scores[a] >= best - tol).collect();
            if scores[policy[i]] < best - tol {
                policy[i] = ties[0];
                changed = true;
            }
            best_gain_actions.push(ties);
        }
        if changed {
            continue;
        }
        // bias improvement among gain-optimal actions
        for i in 0..n {
            let score = |a: ActionId| m.reward(i, a) + expect(m.row(i, a), &bias);
            let best = best_gain_actions[i]
                .iter()
                .map(|&a| score(a))
                .fold(f64::NEG_INFINITY, f64::max);
            if score(policy[i]) < best - tol {
                policy[i] = *best_gain_actions[i]
                    .iter()
                    .find(|&&a| score(a) >= best - tol)
                    .expect("maximizer");
                changed = true;
            }
        }
        if !changed {
            break;
        }
        if iterations > 10_000 {
            return Err(Error::Precondition("policy iteration did not terminate".into()));
        }
    }
    let (gain, _) = gain_bias(m, &policy)?;
    let policy = make_unichain(m, &policy, &gain, tol)?;
    let pi = StationaryPolicy::deterministic(&m.structure(), &policy)?;
    let chain = induce_chain(m, &pi)?;
    let (gain, bias) = gain_bias(m, &policy)?;
    let classes = closed_classes(&chain)
        .into_iter()
        .map(|states| {
            let stationary = stationary_on_class(&chain, &states)?;
            let g = states
                .iter()
                .zip(&stationary)
                .map(|(&s, w)| w * chain.reward()[s])
                .sum();
            Ok(RecurrentClass {
                states,
                stationary,
                gain: g,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AverageSolution {
        gain,
        policy,
        bias,
        classes,
        iterations,
    })
}

fn expect(row: &[f64], v: &[f64]) -> f64 {
    row.iter().zip(v).map(|(p, x)| p * x).sum()
}

/// Closed (bottom) SCCs of a chain.
pub fn closed_classes<T: Scalar>(c: &MarkovChain<T>) -> Vec<Vec<StateId>> {
    let g = SupportGraph::from_successors(c.adjacency());
    let comps = g.sccs();
    let mut comp_of = vec![0; c.num_states()];
    for (k, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = k;
        }
    }
    let mut out: Vec<Vec<StateId>> = comps
        .iter()
        .enumerate()
        .filter(|(k, comp)| comp.iter().all(|&v| g.successors(v).iter().all(|&w| comp_of[w] == *k)))
        .map(|(_, comp)| comp.clone())
        .collect();
    out.sort();
    out
}

/// Gain and bias of a deterministic policy (multichain allowed). The bias is
/// pinned to zero at the smallest state of each closed class.
fn gain_bias(m: &Mdp<f64>, policy: &[ActionId]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = m.num_states();
    let pi = StationaryPolicy::deterministic(&m.structure(), policy)?;
    let c = induce_chain(m, &pi)?;
    let r = c.reward();
    let classes = closed_classes(&c);
    let mut in_class = vec![false; n];
    let mut gain = vec![0.0; n];
    let mut bias = vec![0.0; n];
    for class in &classes {
        let mu = stationary_on_class(&c, class)?;
        let g: f64 = class.iter().zip(&mu).map(|(&s, w)| w * r[s]).sum();
        let k = class.len();
        let mut a = vec![vec![0.0; k]; k];
        let mut b = vec![0.0; k];
        for (row, &s) in class.iter().enumerate() {
            gain[s] = g;
            in_class[s] = true;
            if row == 0 {
                a[0][0] = 1.0;
                continue;
            }
            for (col, &t) in class.iter().enumerate() {
                a[row][col] = -c.prob(s, t);
            }
            a[row][row] += 1.0;
            b[row] = r[s] - g;
        }
        let h = linalg::solve(a, b)?;
        for (&s, hv) in class.iter().zip(h) {
            bias[s] = hv;
        }
    }
    let transient: Vec<StateId> = (0..n).filter(|&s| !in_class[s]).collect();
    if !transient.is_empty() {
        let k = transient.len();
        let system = |rhs: &dyn Fn(StateId) -> f64| -> Result<Vec<f64>> {
            let mut a = vec![vec![0.0; k]; k];
            let mut b = vec![0.0; k];
            for (row, &s) in transient.iter().enumerate() {
                for (col, &t) in transient.iter().enumerate() {
                    a[row][col] = -c.prob(s, t);
                }
                a[row][row] += 1.0;
                b[row] = rhs(s);
            }
            linalg::solve(a, b)
        };
        let g_t = system(&|s| {
            (0..n)
                .filter(|&t| in_class[t])
                .map(|t| c.prob(s, t) * gain[t])
                .sum()
        })?;
        for (&s, g) in transient.iter().zip(&g_t) {
            gain[s] = *g;
        }
        let h_t = system(&|s| {
            r[s] - gain[s]
                + (0..n)
                    .filter(|&t| in_class[t])
                    .map(|t| c.prob(s, t) * bias[t])
                    .sum::<f64>()
        })?;
        for (&s, h) in transient.iter().zip(h_t) {
            bias[s] = h;
        }
    }
    Ok((gain, bias))
}

/// Keeps one optimal closed class and routes every other state into it.
fn make_unichain(m: &Mdp<f64>, policy: &[ActionId], gain: &[f64], tol: f64) -> Result<Vec<ActionId>> {
    let n = m.num_states();
    let pi = StationaryPolicy::deterministic(&m.structure(), policy)?;
    let c = induce_chain(m, &pi)?;
    let best = gain.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let target = closed_classes(&c)
        .into_iter()
        .find(|class| gain[class[0]] >= best - tol * 1e3)
        .ok_or_else(|| Error::Precondition("no optimal closed class".into()))?;
    let mut layer = vec![usize::MAX; n];
    for &s in &target {
        layer[s] = 0;
    }
    let mut out = policy.to_vec();
    let mut frontier = target.clone();
    let mut depth = 0;
    while !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for s in 0..n {
            if layer[s] != usize::MAX {
                continue;
            }
            let choice = (0..m.num_actions(s)).find(|&a| {
                m.row(s, a)
                    .iter()
                    .enumerate()
                    .any(|(t, p)| *p > 0.0 && layer[t] < depth)
            });
            if let Some(a) = choice {
                out[s] = a;
                next.push(s);
            }
        }
        for &s in &next {
            layer[s] = depth;
        }
        frontier = next;
    }
    if layer.contains(&usize::MAX) {
        return Err(Error::NotCommunicating);
    }
    Ok(out)
}
