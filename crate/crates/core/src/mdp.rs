//! Tabular MDPs, stationary policies and the Markov chains they induce.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::scalar::Scalar;

/// Dense 0-based state index.
pub type StateId = usize;
/// Dense 0-based index into the action list `A(i)` of a state.
pub type ActionId = usize;

/// A finite MDP `(S, A, P, r)` with per-state action lists.
///
/// Transitions are stored densely as `transitions[i][a][j]`; rewards as
/// `rewards[i][a]`. States and actions carry display names.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp<T = f64> {
    state_names: Vec<String>,
    action_names: Vec<Vec<String>>,
    transitions: Vec<Vec<Vec<T>>>,
    rewards: Vec<Vec<T>>,
}

/// One violated well-formedness condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyActions { state: StateId },
    RowSum { state: StateId, action: ActionId, sum: f64 },
    NegativeProbability { state: StateId, action: ActionId, target: StateId },
    ProbabilityAboveOne { state: StateId, action: ActionId, target: StateId },
    RowLength { state: StateId, action: ActionId, len: usize },
    MissingReward { state: StateId, action: ActionId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyActions { state } => write!(f, "state {state} has no actions"),
            Violation::RowSum { state, action, sum } => {
                write!(f, "row ({state}, {action}) sums to {sum}")
            }
            Violation::NegativeProbability { state, action, target } => {
                write!(f, "p({state}, {action}, {target}) is negative")
            }
            Violation::ProbabilityAboveOne { state, action, target } => {
                write!(f, "p({state}, {action}, {target}) exceeds one")
            }
            Violation::RowLength { state, action, len } => {
                write!(f, "row ({state}, {action}) has {len} entries")
            }
            Violation::MissingReward { state, action } => {
                write!(f, "reward ({state}, {action}) is undefined")
            }
        }
    }
}

/// Result of [`Mdp::validate`]; empty iff the model is well formed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl<T: Scalar> Mdp<T> {
    /// Builds a model and rejects it unless [`Mdp::validate`] is clean.
    pub fn new(transitions: Vec<Vec<Vec<T>>>, rewards: Vec<Vec<T>>) -> Result<Self> {
        let m = Self::from_parts_unchecked(transitions, rewards);
        let report = m.validate();
        if let Some(v) = report.violations.first() {
            return Err(Error::InvalidModel(format!(
                "{v} ({} violation(s))",
                report.violations.len()
            )));
        }
        Ok(m)
    }

    /// Builds a model without checking stochasticity.
    pub fn from_parts_unchecked(transitions: Vec<Vec<Vec<T>>>, rewards: Vec<Vec<T>>) -> Self {
        let n = transitions.len();
        let state_names = (0..n).map(|i| format!("s{i}")).collect();
        let action_names = transitions
            .iter()
            .map(|row| (0..row.len()).map(|a| format!("a{a}")).collect())
            .collect();
        Self {
            state_names,
            action_names,
            transitions,
            rewards,
        }
    }

    pub fn with_names(mut self, states: Vec<String>, actions: Vec<Vec<String>>) -> Result<Self> {
        if states.len() != self.num_states()
            || actions.len() != self.num_states()
            || actions
                .iter()
                .zip(&self.transitions)
                .any(|(names, rows)| names.len() != rows.len())
        {
            return Err(Error::InvalidModel("name table does not match model shape".into()));
        }
        self.state_names = states;
        self.action_names = actions;
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn num_actions(&self, i: StateId) -> usize {
        self.transitions[i].len()
    }

    pub fn max_actions(&self) -> usize {
        self.transitions.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Number of `(i, a)` pairs.
    pub fn num_pairs(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    pub fn structure(&self) -> ActionStructure {
        ActionStructure(self.transitions.iter().map(Vec::len).collect())
    }

    pub fn prob(&self, i: StateId, a: ActionId, j: StateId) -> &T {
        &self.transitions[i][a][j]
    }

    pub fn row(&self, i: StateId, a: ActionId) -> &[T] {
        &self.transitions[i][a]
    }

    pub fn reward(&self, i: StateId, a: ActionId) -> &T {
        &self.rewards[i][a]
    }

    pub fn transitions(&self) -> &[Vec<Vec<T>>] {
        &self.transitions
    }

    pub fn rewards(&self) -> &[Vec<T>] {
        &self.rewards
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn action_names(&self) -> &[Vec<String>] {
        &self.action_names
    }

    pub fn state_name(&self, i: StateId) -> &str {
        &self.state_names[i]
    }

    /// Replaces the reward table; shape must match.
    pub fn with_rewards(&self, rewards: Vec<Vec<T>>) -> Result<Self> {
        if rewards.len() != self.num_states()
            || rewards
                .iter()
                .enumerate()
                .any(|(i, r)| r.len() != self.num_actions(i))
        {
            return Err(Error::StructureMismatch("reward table shape".into()));
        }
        Ok(Self {
            rewards,
            ..self.clone()
        })
    }

    /// Replaces the transition kernel; shape must match.
    pub fn with_transitions(&self, transitions: Vec<Vec<Vec<T>>>) -> Result<Self> {
        let m = Self {
            transitions,
            ..self.clone()
        };
        if !m.same_structure(self) {
            return Err(Error::StructureMismatch("transition kernel shape".into()));
        }
        Ok(m)
    }

    /// `max |r_i(a)|`.
    pub fn reward_sup_norm(&self) -> T {
        self.rewards
            .iter()
            .flatten()
            .map(|r| r.abs())
            .fold(T::zero(), T::max_of)
    }

    /// Smallest nonzero transition probability.
    pub fn min_positive_prob(&self) -> Option<T> {
        self.transitions
            .iter()
            .flatten()
            .flatten()
            .filter(|p| p.is_pos())
            .cloned()
            .fold(None, |acc, p| match acc {
                Some(q) if q <= p => Some(q),
                _ => Some(p),
            })
    }

    pub fn same_structure<U: Scalar>(&self, other: &Mdp<U>) -> bool {
        self.num_states() == other.num_states()
            && (0..self.num_states()).all(|i| {
                self.num_actions(i) == other.num_actions(i)
                    && self.transitions[i]
                        .iter()
                        .zip(&other.transitions[i])
                        .all(|(r1, r2)| r1.len() == r2.len())
            })
    }

    /// Lists every violated invariant of the model.
    pub fn validate(&self) -> ValidationReport {
        let n = self.num_states();
        let mut violations = Vec::new();
        for (i, rows) in self.transitions.iter().enumerate() {
            if rows.is_empty() {
                violations.push(Violation::EmptyActions { state: i });
            }
            let rewards = self.rewards.get(i);
            for (a, row) in rows.iter().enumerate() {
                if rewards.and_then(|r| r.get(a)).is_none() {
                    violations.push(Violation::MissingReward { state: i, action: a });
                }
                if row.len() != n {
                    violations.push(Violation::RowLength {
                        state: i,
                        action: a,
                        len: row.len(),
                    });
                    continue;
                }
                let mut sum = T::zero();
                for (j, p) in row.iter().enumerate() {
                    if p.is_neg() {
                        violations.push(Violation::NegativeProbability {
                            state: i,
                            action: a,
                            target: j,
                        });
                    }
                    if *p > T::one() {
                        violations.push(Violation::ProbabilityAboveOne {
                            state: i,
                            action: a,
                            target: j,
                        });
                    }
                    sum = sum + p;
                }
                if !sum.approx_eq(&T::one()) {
                    violations.push(Violation::RowSum {
                        state: i,
                        action: a,
                        sum: sum.to_f64(),
                    });
                }
            }
        }
        ValidationReport { violations }
    }

    pub fn check_state(&self, i: StateId) -> Result<()> {
        if i < self.num_states() {
            Ok(())
        } else {
            Err(Error::UnknownState(i))
        }
    }

    /// Converts every entry to another scalar type.
    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Mdp<U> {
        Mdp {
            state_names: self.state_names.clone(),
            action_names: self.action_names.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|rows| rows.iter().map(|row| row.iter().map(&f).collect()).collect())
                .collect(),
            rewards: self
                .rewards
                .iter()
                .map(|r| r.iter().map(&f).collect())
                .collect(),
        }
    }

    pub fn to_f64(&self) -> Mdp<f64> {
        self.map_scalar(|x| x.to_f64())
    }

    /// All deterministic stationary policies in mixed-radix order.
    pub fn deterministic_policies(&self) -> DeterministicPolicies {
        DeterministicPolicies::new(self.structure())
    }
}

impl Mdp<f64> {
    /// Rational model reading each entry's shortest decimal form exactly,
    /// so `0.1` becomes `1/10`.
    pub fn to_rational(&self) -> Mdp<crate::Rational> {
        self.map_scalar(|x| {
            crate::Rational::parse_decimal(&format!("{x:?}")).unwrap_or_else(|| crate::Rational::from_f64(*x))
        })
    }
}

/// Per-state action counts `|A(i)|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionStructure(pub Vec<usize>);

impl ActionStructure {
    pub fn num_states(&self) -> usize {
        self.0.len()
    }

    pub fn num_actions(&self, i: StateId) -> usize {
        self.0[i]
    }

    pub fn max_actions(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn num_pairs(&self) -> usize {
        self.0.iter().sum()
    }

    /// Number of deterministic stationary policies, saturating.
    pub fn policy_count(&self) -> u128 {
        self.0
            .iter()
            .fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
    }
}

/// A stationary policy `π`: a distribution over `A(i)` for each state.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPolicy<T = f64> {
    weights: Vec<Vec<T>>,
}

impl<T: Scalar> StationaryPolicy<T> {
    pub fn new(weights: Vec<Vec<T>>) -> Result<Self> {
        for (i, w) in weights.iter().enumerate() {
            if w.iter().any(|x| x.is_neg()) {
                return Err(Error::InvalidPolicy(format!("negative weight at state {i}")));
            }
            let sum = w.iter().fold(T::zero(), |acc, x| acc + x);
            if !sum.approx_eq(&T::one()) {
                return Err(Error::InvalidPolicy(format!(
                    "weights at state {i} sum to {sum}"
                )));
            }
        }
        Ok(Self { weights })
    }

    /// The 0/1 policy playing `choices[i]` in state `i`.
    pub fn deterministic(structure: &ActionStructure, choices: &[ActionId]) -> Result<Self> {
        if choices.len() != structure.num_states() {
            return Err(Error::InvalidPolicy(format!(
                "{} choices for {} states",
                choices.len(),
                structure.num_states()
            )));
        }
        let mut weights = Vec::with_capacity(choices.len());
        for (i, &c) in choices.iter().enumerate() {
            let k = structure.num_actions(i);
            if c >= k {
                return Err(Error::InvalidPolicy(format!(
                    "action {c} not available in state {i} (|A(i)| = {k})"
                )));
            }
            weights.push((0..k).map(|a| if a == c { T::one() } else { T::zero() }).collect());
        }
        Ok(Self { weights })
    }

    /// `1/|A(i)|` on every available action.
    pub fn uniform(structure: &ActionStructure) -> Result<Self> {
        let mut weights = Vec::with_capacity(structure.num_states());
        for i in 0..structure.num_states() {
            let k = structure.num_actions(i);
            if k == 0 {
                return Err(Error::InvalidModel(format!("state {i} has no actions")));
            }
            let w = T::one() / T::from_ratio(k as i64, 1);
            weights.push(vec![w; k]);
        }
        Ok(Self { weights })
    }

    pub fn weight(&self, i: StateId, a: ActionId) -> &T {
        &self.weights[i][a]
    }

    pub fn weights(&self) -> &[Vec<T>] {
        &self.weights
    }

    pub fn num_states(&self) -> usize {
        self.weights.len()
    }

    /// The chosen action of every state when the policy is deterministic.
    pub fn as_deterministic(&self) -> Option<Vec<ActionId>> {
        self.weights
            .iter()
            .map(|w| {
                let mut chosen = None;
                for (a, x) in w.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    if x.is_one() && chosen.is_none() {
                        chosen = Some(a);
                    } else {
                        return None;
                    }
                }
                chosen
            })
            .collect()
    }

    /// Compact text form, `"0,1,1"` for deterministic policies.
    pub fn encode(&self) -> String {
        match self.as_deterministic() {
            Some(choices) => choices
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(","),
            None => self
                .weights
                .iter()
                .map(|w| {
                    w.iter()
                        .map(|x| format!("{:.6}", x.to_f64()))
                        .collect::<Vec<_>>()
                        .join(":")
                })
                .collect::<Vec<_>>()
                .join(","),
        }
    }

    pub(crate) fn check_against<U: Scalar>(&self, m: &Mdp<U>) -> Result<()> {
        if self.weights.len() != m.num_states() {
            return Err(Error::InvalidPolicy(format!(
                "policy covers {} states, model has {}",
                self.weights.len(),
                m.num_states()
            )));
        }
        for (i, w) in self.weights.iter().enumerate() {
            if w.len() != m.num_actions(i) {
                return Err(Error::InvalidPolicy(format!(
                    "policy has {} actions at state {i}, model has {}",
                    w.len(),
                    m.num_actions(i)
                )));
            }
        }
        Ok(())
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> StationaryPolicy<U> {
        StationaryPolicy {
            weights: self
                .weights
                .iter()
                .map(|w| w.iter().map(&f).collect())
                .collect(),
        }
    }
}

/// Iterator over deterministic policies as choice vectors.
#[derive(Debug, Clone)]
pub struct DeterministicPolicies {
    structure: ActionStructure,
    next: Option<Vec<ActionId>>,
}

impl DeterministicPolicies {
    fn new(structure: ActionStructure) -> Self {
        let next = if structure.0.iter().all(|&k| k > 0) {
            Some(vec![0; structure.num_states()])
        } else {
            None
        };
        Self { structure, next }
    }
}

impl Iterator for DeterministicPolicies {
    type Item = Vec<ActionId>;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for (i, digit) in succ.iter_mut().enumerate() {
            *digit += 1;
            if *digit < self.structure.num_actions(i) {
                self.next = Some(succ);
                return Some(current);
            }
            *digit = 0;
        }
        Some(current)
    }
}

/// A finite Markov chain with a per-state expected one-step reward.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain<T = f64> {
    transition: Vec<Vec<T>>,
    reward: Vec<T>,
}

impl<T: Scalar> MarkovChain<T> {
    pub fn new(transition: Vec<Vec<T>>, reward: Vec<T>) -> Result<Self> {
        let n = transition.len();
        if reward.len() != n {
            return Err(Error::InvalidModel("reward vector length".into()));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidModel(format!("row {i} has {} entries", row.len())));
            }
            if row.iter().any(|p| p.is_neg()) {
                return Err(Error::InvalidModel(format!("row {i} has a negative entry")));
            }
            let sum = row.iter().fold(T::zero(), |acc, p| acc + p);
            if !sum.approx_eq(&T::one()) {
                return Err(Error::InvalidModel(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { transition, reward })
    }

    /// Chain with zero rewards.
    pub fn from_transitions(transition: Vec<Vec<T>>) -> Result<Self> {
        let n = transition.len();
        Self::new(transition, vec![T::zero(); n])
    }

    pub fn num_states(&self) -> usize {
        self.transition.len()
    }

    pub fn prob(&self, i: StateId, j: StateId) -> &T {
        &self.transition[i][j]
    }

    pub fn row(&self, i: StateId) -> &[T] {
        &self.transition[i]
    }

    pub fn transition(&self) -> &[Vec<T>] {
        &self.transition
    }

    pub fn reward(&self) -> &[T] {
        &self.reward
    }

    /// Successor lists of the positive-probability graph.
    pub fn adjacency(&self) -> Vec<Vec<StateId>> {
        self.transition
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, p)| p.is_pos())
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect()
    }

    pub fn to_f64(&self) -> MarkovChain<f64> {
        MarkovChain {
            transition: self
                .transition
                .iter()
                .map(|r| r.iter().map(Scalar::to_f64).collect())
                .collect(),
            reward: self.reward.iter().map(Scalar::to_f64).collect(),
        }
    }

    /// Distribution after `steps` transitions from `i`.
    pub fn distribution_after(&self, i: StateId, steps: usize) -> Vec<T> {
        let n = self.num_states();
        let mut dist = vec![T::zero(); n];
        dist[i] = T::one();
        for _ in 0..steps {
            let mut next = vec![T::zero(); n];
            for (k, mass) in dist.iter().enumerate() {
                if mass.is_zero() {
                    continue;
                }
                for (j, p) in self.transition[k].iter().enumerate() {
                    if !p.is_zero() {
                        next[j] = next[j].clone() + &(mass.clone() * p);
                    }
                }
            }
            dist = next;
        }
        dist
    }
}

/// The chain induced by following `pi` in `m`.
///
/// `δ(i,j) = Σ_a π_ia p_ij(a)` and the state reward is `Σ_a π_ia r_i(a)`.
pub fn induce_chain<T: Scalar>(m: &Mdp<T>, pi: &StationaryPolicy<T>) -> Result<MarkovChain<T>> {
    pi.check_against(m)?;
    let n = m.num_states();
    let mut transition = vec![vec![T::zero(); n]; n];
    let mut reward = vec![T::zero(); n];
    for i in 0..n {
        for a in 0..m.num_actions(i) {
            let w = pi.weight(i, a);
            if w.is_zero() {
                continue;
            }
            reward[i] = reward[i].clone() + &(w.clone() * m.reward(i, a));
            for (j, p) in m.row(i, a).iter().enumerate() {
                if !p.is_zero() {
                    transition[i][j] = transition[i][j].clone() + &(w.clone() * p);
                }
            }
        }
    }
    Ok(MarkovChain { transition, reward })
}

/// One simulated transition `(X_t, Y_t, r_t, X_{t+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: StateId,
    pub action: ActionId,
    pub reward: f64,
    pub next: StateId,
}

/// A recorded run together with the seed that produced it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: StateId,
    pub seed: u64,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn new(start: StateId, seed: u64) -> Self {
        Self {
            start,
            seed,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    /// Checks chaining and that every reward matches `m`.
    pub fn check_consistent<T: Scalar>(&self, m: &Mdp<T>) -> Result<()> {
        let mut expected = self.start;
        for (t, s) in self.steps.iter().enumerate() {
            if s.state != expected {
                return Err(Error::Precondition(format!(
                    "record {t} starts at {} but the previous record ended at {expected}",
                    s.state
                )));
            }
            if s.state >= m.num_states() || s.action >= m.num_actions(s.state) {
                return Err(Error::Precondition(format!("record {t} leaves the model")));
            }
            if (m.reward(s.state, s.action).to_f64() - s.reward).abs() > 1e-12 {
                return Err(Error::Precondition(format!("record {t} has a foreign reward")));
            }
            expected = s.next;
        }
        Ok(())
    }
}

/// Known lower bound on positive transition probabilities and reward bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorKnowledge {
    pub p_min: f64,
    pub reward_bound: f64,
}

impl PriorKnowledge {
    pub fn new(p_min: f64, reward_bound: f64) -> Result<Self> {
        if !(p_min > 0.0 && p_min <= 1.0) {
            return Err(crate::error::invalid("p_min", format!("{p_min} not in (0, 1]")));
        }
        if !(reward_bound >= 0.0) {
            return Err(crate::error::invalid("reward_bound", format!("{reward_bound} < 0")));
        }
        Ok(Self {
            p_min,
            reward_bound,
        })
    }

    /// Whether `m` honours both bounds.
    pub fn admits<T: Scalar>(&self, m: &Mdp<T>) -> bool {
        let probs_ok = m
            .transitions()
            .iter()
            .flatten()
            .flatten()
            .all(|p| p.is_zero() || p.to_f64() >= self.p_min - 1e-12);
        let rewards_ok = m
            .rewards()
            .iter()
            .flatten()
            .all(|r| r.to_f64().abs() <= self.reward_bound + 1e-12);
        probs_ok && rewards_ok
    }
}

/// Draws an action from `π(i, ·)` and a successor from `p_i·(a)`.
pub fn sample_step<T: Scalar>(
    m: &Mdp<T>,
    pi: &StationaryPolicy<T>,
    i: StateId,
    rng: &mut SimRng,
) -> Step {
    let action = rng.categorical(&pi.weights()[i]);
    sample_transition(m, i, action, rng)
}

/// Successor of `(i, a)` drawn from the kernel.
pub fn sample_transition<T: Scalar>(m: &Mdp<T>, i: StateId, a: ActionId, rng: &mut SimRng) -> Step {
    let next = rng.categorical(m.row(i, a));
    Step {
        state: i,
        action: a,
        reward: m.reward(i, a).to_f64(),
        next,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn two_state() -> Mdp {
        Mdp::new(
            vec![
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![0.5, 0.5]],
            ],
            vec![vec![0.0, 1.0], vec![2.0]],
        )
        .unwrap()
    }

    #[test]
    fn well_formed_model_has_empty_report() {
        assert!(two_state().validate().is_empty());
    }

    #[test]
    fn row_sum_violation_names_the_pair() {
        let m = Mdp::from_parts_unchecked(
            vec![vec![vec![0.9, 0.0]], vec![vec![0.0, 1.0]]],
            vec![vec![0.0], vec![0.0]],
        );
        let report = m.validate();
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(
            report.violations[0],
            Violation::RowSum { state: 0, action: 0, .. }
        ));
    }

    #[test]
    fn empty_action_set_is_reported() {
        let m: Mdp = Mdp::from_parts_unchecked(vec![vec![]], vec![vec![]]);
        assert_eq!(
            m.validate().violations,
            vec![Violation::EmptyActions { state: 0 }]
        );
        assert!(Mdp::<f64>::new(vec![vec![]], vec![vec![]]).is_err());
    }

    #[test]
    fn exact_mode_has_zero_tolerance() {
        let third = Rational::from_ratio(1, 3);
        let almost = Rational::from_ratio(333_333_333, 1_000_000_000);
        let m = Mdp::from_parts_unchecked(
            vec![vec![vec![third.clone(), third, almost]]; 3],
            vec![vec![Rational::from_ratio(0, 1)]; 3],
        );
        assert_eq!(m.validate().violations.len(), 3);
    }

    #[test]
    fn deterministic_policy_selects_rows() {
        let m = two_state();
        let pi = StationaryPolicy::deterministic(&m.structure(), &[1, 0]).unwrap();
        let c = induce_chain(&m, &pi).unwrap();
        assert_eq!(c.row(0), m.row(0, 1));
        assert_eq!(c.row(1), m.row(1, 0));
        assert_eq!(c.reward(), &[1.0, 2.0]);
    }

    #[test]
    fn uniform_policy_mixes_rows() {
        let m = two_state();
        let pi = StationaryPolicy::uniform(&m.structure()).unwrap();
        let c = induce_chain(&m, &pi).unwrap();
        assert_eq!(c.row(0), &[0.5, 0.5]);
        assert_eq!(c.reward()[0], 0.5);
    }

    #[test]
    fn policy_with_foreign_action_is_rejected() {
        let m = two_state();
        assert!(StationaryPolicy::<f64>::deterministic(&m.structure(), &[0, 1]).is_err());
        let pi = StationaryPolicy::new(vec![vec![1.0, 0.0, 0.0], vec![1.0]]).unwrap();
        assert!(induce_chain(&m, &pi).is_err());
    }

    #[test]
    fn deterministic_policies_enumerate_mixed_radix() {
        let m = two_state();
        let all: Vec<_> = m.deterministic_policies().collect();
        assert_eq!(all, vec![vec![0, 0], vec![1, 0]]);
        assert_eq!(m.structure().policy_count(), 2);
    }

    #[test]
    fn deterministic_step_ignores_seed() {
        let m = two_state();
        let pi = StationaryPolicy::deterministic(&m.structure(), &[1, 0]).unwrap();
        for seed in 0..20 {
            let mut rng = SimRng::new(seed);
            let s = sample_step(&m, &pi, 0, &mut rng);
            assert_eq!((s.action, s.next, s.reward), (1, 1, 1.0));
        }
    }

    #[test]
    fn fixed_seed_reproduces_step() {
        let m = two_state();
        let pi = StationaryPolicy::uniform(&m.structure()).unwrap();
        let a = sample_step(&m, &pi, 1, &mut SimRng::new(42));
        let b = sample_step(&m, &pi, 1, &mut SimRng::new(42));
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_frequencies_follow_row() {
        let m = Mdp::new(vec![vec![vec![0.3, 0.7]], vec![vec![1.0, 0.0]]], vec![vec![0.0], vec![0.0]])
            .unwrap();
        let pi = StationaryPolicy::uniform(&m.structure()).unwrap();
        let mut rng = SimRng::new(3);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_step(&m, &pi, 0, &mut rng).next == 0)
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.3).abs() < 0.01, "{freq}");
    }

    #[test]
    fn trajectory_consistency_detects_breaks() {
        let m = two_state();
        let mut t = Trajectory::new(0, 1);
        t.push(Step { state: 0, action: 1, reward: 1.0, next: 1 });
        t.push(Step { state: 1, action: 0, reward: 2.0, next: 0 });
        assert!(t.check_consistent(&m).is_ok());
        t.push(Step { state: 1, action: 0, reward: 2.0, next: 0 });
        assert!(t.check_consistent(&m).is_err());
    }
}
