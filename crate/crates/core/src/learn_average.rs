//! Model-based learning of limit-average optimal behaviour: uniform
//! exploration, empirical models, sample budgets, mixing constants and the
//! episodic explore/exploit loop.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::is_communicating;
use crate::mdp::{
    sample_transition, ActionId, ActionStructure, MarkovChain, Mdp, PriorKnowledge, StateId, StationaryPolicy, Step,
    Trajectory,
};
use crate::rng::SimRng;
use crate::scalar::{Rational, Scalar};
use crate::solvers::optimal_average;

/// The uniform exploration policy `ρ`.
pub fn exploration_policy(structure: &ActionStructure) -> Result<StationaryPolicy<f64>> {
    StationaryPolicy::uniform(structure)
}

/// Counts and first-seen rewards per state-action pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalModel {
    pub structure: ActionStructure,
    pub visits: Vec<Vec<u64>>,
    /// `N(i, a, j)`.
    pub transitions: Vec<Vec<Vec<u64>>>,
    pub rewards: Vec<Vec<Option<f64>>>,
}

impl EmpiricalModel {
    pub fn new(structure: &ActionStructure) -> Self {
        let n = structure.num_states();
        Self {
            structure: structure.clone(),
            visits: structure.0.iter().map(|&k| vec![0; k]).collect(),
            transitions: structure.0.iter().map(|&k| vec![vec![0; n]; k]).collect(),
            rewards: structure.0.iter().map(|&k| vec![None; k]).collect(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.structure.num_states()
    }

    pub fn record(&mut self, step: &Step) -> Result<()> {
        let (i, a) = (step.state, step.action);
        if i >= self.num_states() || a >= self.structure.num_actions(i) || step.next >= self.num_states() {
            return Err(Error::Precondition(format!("step ({i}, {a}) -> {} leaves the structure", step.next)));
        }
        match self.rewards[i][a] {
            Some(first) if first != step.reward => {
                return Err(Error::InconsistentReward {
                    state: i,
                    action: a,
                    first,
                    second: step.reward,
                })
            }
            Some(_) => {}
            None => self.rewards[i][a] = Some(step.reward),
        }
        self.visits[i][a] += 1;
        self.transitions[i][a][step.next] += 1;
        Ok(())
    }

    /// `P̂(i, a, ·)`, absent before the first visit.
    pub fn estimate(&self, i: StateId, a: ActionId) -> Option<Vec<f64>> {
        let n = self.visits[i][a];
        (n > 0).then(|| self.transitions[i][a].iter().map(|&c| c as f64 / n as f64).collect())
    }

    pub fn total_visits(&self) -> u64 {
        self.visits.iter().flatten().sum()
    }

    pub fn min_visits(&self) -> u64 {
        self.visits.iter().flatten().copied().min().unwrap_or(0)
    }

    /// A model from the estimates: entries below `threshold` are dropped and
    /// the rest renormalized; an unvisited pair becomes a self-loop paying
    /// `unvisited_reward`.
    pub fn to_mdp(&self, threshold: f64, unvisited_reward: f64) -> Result<Mdp<f64>> {
        let n = self.num_states();
        let mut transitions = Vec::with_capacity(n);
        let mut rewards = Vec::with_capacity(n);
        for i in 0..n {
            let mut rows = Vec::new();
            let mut rs = Vec::new();
            for a in 0..self.structure.num_actions(i) {
                match self.estimate(i, a) {
                    Some(est) => {
                        let kept: Vec<f64> = est.iter().map(|&p| if p >= threshold { p } else { 0.0 }).collect();
                        let total: f64 = kept.iter().sum();
                        let row = if total > 0.0 { kept.iter().map(|p| p / total).collect() } else { est };
                        rows.push(row);
                        rs.push(self.rewards[i][a].expect("visited pair has a reward"));
                    }
                    None => {
                        let mut row = vec![0.0; n];
                        row[i] = 1.0;
                        rows.push(row);
                        rs.push(unvisited_reward);
                    }
                }
            }
            transitions.push(rows);
            rewards.push(rs);
        }
        Mdp::new(transitions, rewards)
    }
}

pub fn estimate_model(t: &Trajectory, structure: &ActionStructure) -> Result<EmpiricalModel> {
    let mut model = EmpiricalModel::new(structure);
    for step in &t.steps {
        model.record(step)?;
    }
    Ok(model)
}

/// `|S|` and `max_i |A(i)|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSizes {
    pub states: usize,
    pub actions: usize,
}

impl ModelSizes {
    pub fn of(structure: &ActionStructure) -> Self {
        Self {
            states: structure.num_states(),
            actions: structure.max_actions(),
        }
    }
}

/// The quantities behind [`exploration_budget`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetBreakdown {
    /// Per-entry accuracy `ε p_min / (16|S|)`; it is below `p_min / 2`, so
    /// the ratio error stays within `ε' / (p_min - ε') ≤ ε / (8|S|)`.
    pub accuracy: f64,
    /// Visits per pair, before rounding.
    pub visits_needed: f64,
    /// Per-step visit rate lower bound `p_min^{|S|} / (|S| max|A|)`.
    pub rate: f64,
    /// Expected visits demanded of the binomial lower bound.
    pub mean_needed: f64,
    pub steps: u128,
}

/// Steps of `ρ` after which, with probability at least `1 - δ`, the
/// thresholded estimate has the true support, ratio distance at most
/// `ε / (8|S|)` and exact rewards.
///
/// Hoeffding fixes the visits `m` per pair for accuracy `ε'` on every entry
/// (failure share `δ/2`); every block of `|S|` steps hits a fixed pair with
/// probability at least `|S| q`, so the visit count dominates a binomial whose
/// mean `μ ≥ max(2m, 8 ln(2|S||A|/δ))` keeps the lower Chernoff tail within
/// the other `δ/2`. The step count is `|S|` times a power of two.
pub fn exploration_budget_breakdown(
    sizes: ModelSizes,
    prior: &PriorKnowledge,
    eps: f64,
    delta: f64,
) -> Result<BudgetBreakdown> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("{eps} not in (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} not in (0, 1)")));
    }
    if !(prior.p_min > 0.0) {
        return Err(invalid("p_min", "must be positive"));
    }
    if sizes.states == 0 || sizes.actions == 0 {
        return Err(invalid("sizes", "empty model"));
    }
    let s = sizes.states as f64;
    let a = sizes.actions as f64;
    let accuracy = eps * prior.p_min / (16.0 * s);
    let visits_needed = (4.0 * s * s * a / delta).ln() / (2.0 * accuracy * accuracy);
    let rate = prior.p_min.powi(sizes.states as i32) / (s * a);
    let mean_needed = (2.0 * visits_needed).max(8.0 * (2.0 * s * a / delta).ln());
    let blocks = mean_needed / (rate * s);
    if !blocks.is_finite() || blocks >= 2f64.powi(120) {
        return Err(Error::Overflow("exploration budget"));
    }
    let mut pow: u128 = 1;
    while (pow as f64) < blocks {
        pow <<= 1;
    }
    Ok(BudgetBreakdown {
        accuracy,
        visits_needed,
        rate,
        mean_needed,
        steps: pow * sizes.states as u128,
    })
}

pub fn exploration_budget(sizes: ModelSizes, prior: &PriorKnowledge, eps: f64, delta: f64) -> Result<u128> {
    Ok(exploration_budget_breakdown(sizes, prior, eps, delta)?.steps)
}

/// Largest integer that is not a nonnegative combination of `set`, or `-1`
/// when every nonnegative integer is.
pub fn frobenius_number(set: &[u64]) -> Result<i64> {
    if set.is_empty() {
        return Err(invalid("set", "empty"));
    }
    if set.contains(&0) {
        return Err(invalid("set", "entries must be positive"));
    }
    let g = set.iter().fold(0u64, |acc, &x| acc.gcd(&x));
    if g != 1 {
        return Err(invalid("set", format!("gcd is {g}")));
    }
    let base = *set.iter().min().expect("nonempty") as usize;
    // Smallest representable value in each residue class modulo `base`.
    let mut best = vec![u64::MAX; base];
    best[0] = 0;
    let mut done = vec![false; base];
    for _ in 0..base {
        let Some(r) = (0..base).filter(|&r| !done[r] && best[r] != u64::MAX).min_by_key(|&r| best[r]) else {
            break;
        };
        done[r] = true;
        for &x in set {
            let next = (r + x as usize) % base;
            let cand = best[r] + x;
            if cand < best[next] {
                best[next] = cand;
            }
        }
    }
    let worst = *best.iter().max().expect("nonempty");
    Ok(worst as i64 - base as i64)
}

/// Mixing time `t` and coefficient `λ = p_min^t` such that every entry of
/// `P^t` is at least `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoeblinCertificate {
    pub t: u64,
    pub lambda: f64,
}

impl DoeblinCertificate {
    fn from_t(t: u64, p_min: f64) -> Result<Self> {
        if !(p_min > 0.0 && p_min <= 1.0) {
            return Err(invalid("p_min", format!("{p_min} not in (0, 1]")));
        }
        let t = t.max(1);
        Ok(Self {
            t,
            lambda: p_min.powi(t as i32),
        })
    }

    /// Whether `P^t(i, j) ≥ λ` for all `i, j`, up to float slack.
    pub fn holds_on<T: Scalar>(&self, c: &MarkovChain<T>) -> bool {
        let c = c.to_f64();
        (0..c.num_states()).all(|i| {
            c.distribution_after(i, self.t as usize)
                .iter()
                .all(|&p| p >= self.lambda * (1.0 - 1e-12))
        })
    }
}

/// `t = g(lengths) + 1` (at least 1) from the cycle lengths of a regular
/// chain.
pub fn doeblin_certificate(cycle_lengths: &[u64], p_min: f64) -> Result<DoeblinCertificate> {
    let g = frobenius_number(cycle_lengths).map_err(|_| Error::NotRegular(format!("cycle lengths {cycle_lengths:?}")))?;
    DoeblinCertificate::from_t((g + 1).max(1) as u64, p_min)
}

/// `t = (|S| - 1)|S| + 1` for a chain known only by its size.
pub fn doeblin_certificate_conservative(num_states: usize, p_min: f64) -> Result<DoeblinCertificate> {
    if num_states == 0 {
        return Err(invalid("num_states", "empty chain"));
    }
    let n = num_states as u64;
    DoeblinCertificate::from_t((n - 1) * n + 1, p_min)
}

/// Smallest `t` with `P^t > 0` entrywise, with `λ = p_min^t`.
pub fn doeblin_certificate_for_chain<T: Scalar>(c: &MarkovChain<T>, p_min: f64) -> Result<DoeblinCertificate> {
    let t = primitivity_exponent(c)
        .ok_or_else(|| Error::NotRegular("chain is reducible or periodic".into()))?;
    DoeblinCertificate::from_t(t, p_min)
}

/// Smallest `t` with every entry of `P^t` positive; a primitive chain
/// reaches it by `(n-1)^2 + 1`.
pub fn primitivity_exponent<T: Scalar>(c: &MarkovChain<T>) -> Option<u64> {
    let n = c.num_states();
    let adj = c.adjacency();
    let mut reach: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            let mut r = vec![false; n];
            for &j in &adj[i] {
                r[j] = true;
            }
            r
        })
        .collect();
    let limit = ((n - 1) * (n - 1) + 1) as u64;
    for t in 1..=limit {
        if reach.iter().all(|r| r.iter().all(|&x| x)) {
            return Some(t);
        }
        reach = reach
            .iter()
            .map(|r| {
                let mut next = vec![false; n];
                for (k, _) in r.iter().enumerate().filter(|(_, &x)| x) {
                    for &j in &adj[k] {
                        next[j] = true;
                    }
                }
                next
            })
            .collect();
    }
    None
}

/// Lengths `k ≤ |S|` of closed walks in the support graph.
pub fn cycle_lengths<T: Scalar>(c: &MarkovChain<T>) -> Vec<u64> {
    let n = c.num_states();
    let adj = c.adjacency();
    let mut out = Vec::new();
    let mut reach: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
    for k in 1..=n {
        reach = reach
            .iter()
            .map(|r| {
                let mut next = vec![false; n];
                for (s, _) in r.iter().enumerate().filter(|(_, &x)| x) {
                    for &j in &adj[s] {
                        next[j] = true;
                    }
                }
                next
            })
            .collect();
        if (0..n).any(|i| reach[i][i]) {
            out.push(k as u64);
        }
    }
    out
}

/// Constants of the tail bound
/// `Pr(Σ_{t≤T} r_t/W < E[Σ_{t≤T} r_t/W] - Tε) ≤ a exp(-T b ε²)` for
/// `T ≥ K0`, valid for every unichain chain on `|S|` states with smallest
/// positive entry at least `p_min`.
///
/// From the conservative certificate `(t, λ)`: a Hoeffding bound for
/// uniformly ergodic chains gives `a = 1`, `b = λ² / (8 t²)` once `T`
/// absorbs the `2t/λ` drift of the start and the stationary-mean shift,
/// which `K0 = ⌈8t / (λ ε²)⌉` covers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracolConstants {
    pub k0: u64,
    pub a_coef: f64,
    pub b_coef: f64,
    pub eps: f64,
    pub certificate: DoeblinCertificate,
}

impl TracolConstants {
    pub fn tail_bound(&self, horizon: u64) -> f64 {
        (self.a_coef * (-(horizon as f64) * self.b_coef * self.eps * self.eps).exp()).min(1.0)
    }
}

pub fn tracol_constants(num_states: usize, p_min: f64, eps: f64) -> Result<TracolConstants> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("{eps} not in (0, 1)")));
    }
    let cert = doeblin_certificate_conservative(num_states, p_min)?;
    let t = cert.t as f64;
    let k0 = (8.0 * t / (cert.lambda * eps * eps)).ceil();
    if !(k0 < u64::MAX as f64) {
        return Err(Error::Overflow("K0"));
    }
    Ok(TracolConstants {
        k0: k0 as u64,
        a_coef: 1.0,
        b_coef: cert.lambda * cert.lambda / (8.0 * t * t),
        eps,
        certificate: cert,
    })
}

/// Smallest `K1 ≥ 1` with `a exp(-T b ε²) ≤ 2^{-T}` for all `T ≥ K1`, if
/// one exists; it does exactly when `b ε² > ln 2`.
pub fn k1_threshold(constants: &TracolConstants, eps: f64) -> Option<u64> {
    let rate = constants.b_coef * eps * eps - std::f64::consts::LN_2;
    if rate <= 0.0 {
        return None;
    }
    let need = constants.a_coef.ln() / rate;
    Some(need.ceil().max(1.0) as u64)
}

/// `max(K1, 2 - log₂(-ln(1 - ε)))`, the episode index after which the
/// per-episode success probabilities multiply to at least `1 - ε`.
pub fn episode_threshold(k1: Option<u64>, eps: f64) -> Option<f64> {
    let k1 = k1? as f64;
    Some(k1.max(2.0 - (-(1.0 - eps).ln()).log2()))
}

const PROD_EXP_BITS: u64 = 160;

/// Checks `Π_{t≥T} (1 - 2^{-t}) ≥ exp(-2^{2-T})` with fixed-point lower
/// bounds on the product and a Taylor upper bound on the exponential.
pub fn prod_exp_holds(horizon: u32) -> Result<bool> {
    if horizon == 0 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    let one = BigUint::one() << PROD_EXP_BITS;
    let last = horizon as u64 + PROD_EXP_BITS + 8;
    let mut p = one.clone();
    let shrink = |p: &BigUint, t: u64| -> BigUint {
        let denom = BigUint::one() << t;
        let cut = (p + &denom - BigUint::one()) >> t;
        p - cut
    };
    for t in horizon as u64..=last {
        p = shrink(&p, t);
    }
    // The omitted factors multiply to at least 1 - 2^{-last}.
    p = shrink(&p, last);
    let lower = Rational::new(BigInt::from(p), BigInt::from(one));
    let x = Rational::new(BigInt::one() << 2u32, BigInt::one() << horizon);
    // Alternating partial sum ending on an even power bounds e^{-x} above.
    let mut term = Rational::one();
    let mut upper = Rational::one();
    for k in 1..=40u32 {
        term = -term * &x / Rational::from_integer(BigInt::from(k));
        upper += &term;
    }
    Ok(lower >= upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    /// Episodes count from 1.
    pub index: u32,
    /// `ε_i = 2^{-i}`.
    pub eps: f64,
    /// First step of the episode is `start + 1`.
    pub start: u128,
    pub exploration: u128,
    pub exploitation: u128,
}

impl Episode {
    pub fn end(&self) -> u128 {
        self.start + self.exploration + self.exploitation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSchedule {
    pub reward_bound: f64,
    pub episodes: Vec<Episode>,
}

impl EpisodeSchedule {
    /// `S_N`, the number of steps before episode `N` (so `S_1 = 0`).
    pub fn boundary(&self, n: usize) -> Option<u128> {
        if n == 0 {
            return None;
        }
        if n == self.episodes.len() + 1 {
            return self.episodes.last().map(Episode::end);
        }
        self.episodes.get(n - 1).map(|e| e.start)
    }

    pub fn total_steps(&self) -> u128 {
        self.episodes.last().map_or(0, Episode::end)
    }

    /// Exploitation lengths from the given exploration lengths, amortizing
    /// the worst-case exploration deficit to `ε_i / 2` and, when supplied,
    /// covering per-episode minimums.
    pub fn amortized(exploration: &[u128], reward_bound: f64, minimums: &[u128]) -> Result<Self> {
        if exploration.is_empty() {
            return Err(invalid("episodes", "at least one episode"));
        }
        if !(reward_bound >= 0.0) {
            return Err(invalid("reward_bound", format!("{reward_bound} < 0")));
        }
        let w = Rational::parse_decimal(&format!("{reward_bound:?}")).expect("finite");
        let mut episodes = Vec::with_capacity(exploration.len());
        let mut start: u128 = 0;
        let mut prev_l = 0u128;
        let mut prev_o = 0u128;
        for (k, &l) in exploration.iter().enumerate() {
            let index = k as u32 + 1;
            let l = l.max(prev_l + 1);
            let before = start.checked_add(l).ok_or(Error::Overflow("S_i + L_i"))?;
            let factor = w.clone() * Rational::from_integer(BigInt::one() << (index + 1)) - Rational::one();
            let amort = (factor * Rational::from_integer(BigInt::from(before))).ceil().to_integer();
            let amort = if amort.is_negative() {
                0
            } else {
                amort.to_u128().ok_or(Error::Overflow("O_i"))?
            };
            let min = minimums.get(k).copied().unwrap_or(0);
            let o = amort.max(min).max(prev_o + 1);
            episodes.push(Episode {
                index,
                eps: 0.5f64.powi(index as i32),
                start,
                exploration: l,
                exploitation: o,
            });
            start = before.checked_add(o).ok_or(Error::Overflow("S_{i+1}"))?;
            prev_l = l;
            prev_o = o;
        }
        Ok(Self {
            reward_bound,
            episodes,
        })
    }

    /// Desk-scale schedule with `L_i = base · 4^i`.
    pub fn geometric(base: u128, episodes: u32, reward_bound: f64) -> Result<Self> {
        let lengths = (1..=episodes)
            .map(|i| base.checked_mul(4u128.checked_pow(i)?))
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::Overflow("L_i"))?;
        Self::amortized(&lengths, reward_bound, &[])
    }
}


/// The schedule with `L_i` from [`exploration_budget`] at `(ε_i, ε_i/2)`
/// and `O_i` the larger of `K0(ε_i)` and the amortizing length.
pub fn episode_schedule(prior: &PriorKnowledge, sizes: ModelSizes, episodes: u32) -> Result<EpisodeSchedule> {
    if episodes == 0 {
        return Err(invalid("episodes", "at least one episode"));
    }
    let mut lengths = Vec::new();
    let mut minimums = Vec::new();
    for i in 1..=episodes {
        let eps = 0.5f64.powi(i as i32);
        lengths.push(exploration_budget(sizes, prior, eps, eps / 2.0)?);
        minimums.push(tracol_constants(sizes.states, prior.p_min, eps)?.k0 as u128);
    }
    EpisodeSchedule::amortized(&lengths, prior.reward_bound, &minimums)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub start: StateId,
    /// Running averages are kept every `stride` steps and at every episode
    /// boundary.
    pub stride: u64,
    pub record_trajectory: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            start: 0,
            stride: 1000,
            record_trajectory: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSnapshot {
    pub index: u32,
    pub start: u64,
    /// The estimate was not communicating; the episode explored throughout.
    pub fallback: bool,
    pub policy: Option<Vec<ActionId>>,
    pub estimated_gain: Option<f64>,
    pub model: EmpiricalModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreExploitRun {
    pub seed: u64,
    pub steps: u64,
    pub total_reward: f64,
    /// `(T, (1/T) Σ_{t≤T} r_t)`.
    pub averages: Vec<(u64, f64)>,
    pub snapshots: Vec<EpisodeSnapshot>,
    pub trajectory: Option<Trajectory>,
}

impl ExploreExploitRun {
    pub fn final_average(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_reward / self.steps as f64
        }
    }

    /// Running average recorded at step `t`.
    pub fn average_at(&self, t: u64) -> Option<f64> {
        self.averages
            .binary_search_by_key(&t, |&(s, _)| s)
            .ok()
            .map(|k| self.averages[k].1)
    }
}

/// Plays `total_steps` steps of the episodic explore/exploit policy in `env`.
///
/// Each episode explores with `ρ`, then follows an optimal unichain policy
/// of the model estimated from all exploration data so far, with support
/// thresholded at `p_min / 2`. Unvisited pairs are modelled as self-loops
/// paying `-W`.
pub fn run_explore_exploit(
    env: &Mdp<f64>,
    prior: &PriorKnowledge,
    schedule: &EpisodeSchedule,
    total_steps: u64,
    rng: &mut SimRng,
    opts: &RunOptions,
) -> Result<ExploreExploitRun> {
    env.check_state(opts.start)?;
    if opts.stride == 0 {
        return Err(invalid("stride", "must be positive"));
    }
    let structure = env.structure();
    let rho = exploration_policy(&structure)?;
    let mut model = EmpiricalModel::new(&structure);
    let mut state = opts.start;
    let mut t: u64 = 0;
    let mut total = 0.0;
    let mut averages = Vec::new();
    let mut snapshots = Vec::new();
    let mut trajectory = opts.record_trajectory.then(|| Trajectory::new(opts.start, rng.seed()));
    let mut take = |step: Step, t: &mut u64, total: &mut f64, averages: &mut Vec<(u64, f64)>| {
        *t += 1;
        *total += step.reward;
        if (*t).is_multiple_of(opts.stride) {
            averages.push((*t, *total / *t as f64));
        }
        if let Some(tr) = trajectory.as_mut() {
            tr.push(step);
        }
    };
    let mark = |t: u64, total: f64, averages: &mut Vec<(u64, f64)>| {
        if t > 0 && averages.last().is_none_or(|&(s, _)| s != t) {
            averages.push((t, total / t as f64));
        }
    };
    for ep in &schedule.episodes {
        if t >= total_steps {
            break;
        }
        let start = t;
        let explore_end = (ep.start + ep.exploration).min(total_steps as u128) as u64;
        while t < explore_end {
            let step = crate::mdp::sample_step(env, &rho, state, rng);
            model.record(&step)?;
            state = step.next;
            take(step, &mut t, &mut total, &mut averages);
        }
        let estimate = model.to_mdp(prior.p_min / 2.0, -prior.reward_bound)?;
        let solution = if is_communicating(&estimate) {
            optimal_average(&estimate).ok()
        } else {
            None
        };
        if solution.is_none() {
            log::warn!("episode {}: estimate not communicating, exploring", ep.index);
        }
        let end = ep.end().min(total_steps as u128) as u64;
        while t < end {
            let step = match &solution {
                Some(sol) => sample_transition(env, state, sol.policy[state], rng),
                None => {
                    let s = crate::mdp::sample_step(env, &rho, state, rng);
                    model.record(&s)?;
                    s
                }
            };
            state = step.next;
            take(step, &mut t, &mut total, &mut averages);
        }
        mark(t, total, &mut averages);
        snapshots.push(EpisodeSnapshot {
            index: ep.index,
            start,
            fallback: solution.is_none(),
            policy: solution.as_ref().map(|s| s.policy.clone()),
            estimated_gain: solution.as_ref().map(|s| s.optimal_gain()),
            model: model.clone(),
        });
    }
    Ok(ExploreExploitRun {
        seed: rng.seed(),
        steps: t,
        total_reward: total,
        averages,
        snapshots,
        trajectory,
    })
}

/// Monte-Carlo frequency of `Σ_{t≤T} r_t/W < E[Σ_{t≤T} r_t/W] - Tε` on a
/// chain started at `start`, against the tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailAudit {
    pub horizon: u64,
    pub runs: u64,
    pub violations: u64,
    pub rate: f64,
    pub bound: f64,
    /// `sqrt(bound (1 - bound) / runs)`.
    pub sigma: f64,
    pub holds: bool,
}

pub fn tail_audit(
    c: &MarkovChain<f64>,
    start: StateId,
    constants: &TracolConstants,
    reward_bound: f64,
    horizon: u64,
    runs: u64,
    seed: u64,
) -> Result<TailAudit> {
    let n = c.num_states();
    if start >= n {
        return Err(Error::UnknownState(start));
    }
    if !(reward_bound > 0.0) {
        return Err(invalid("reward_bound", "must be positive"));
    }
    let r: Vec<f64> = c.reward().iter().map(|x| x / reward_bound).collect();
    let mut dist = vec![0.0; n];
    dist[start] = 1.0;
    let mut expected = 0.0;
    for _ in 0..horizon {
        expected += dist.iter().zip(&r).map(|(p, x)| p * x).sum::<f64>();
        let mut next = vec![0.0; n];
        for (k, p) in dist.iter().enumerate() {
            for (j, q) in c.row(k).iter().enumerate() {
                next[j] += p * q;
            }
        }
        dist = next;
    }
    let threshold = expected - horizon as f64 * constants.eps;
    let root = SimRng::new(seed);
    let violations = (0..runs)
        .into_par_iter()
        .filter(|&k| {
            let mut rng = root.split(k);
            let mut s = start;
            let mut sum = 0.0;
            for _ in 0..horizon {
                sum += r[s];
                s = rng.categorical(c.row(s));
            }
            sum < threshold
        })
        .count() as u64;
    let bound = constants.tail_bound(horizon);
    let rate = violations as f64 / runs as f64;
    let sigma = (bound * (1.0 - bound) / runs as f64).sqrt();
    Ok(TailAudit {
        horizon,
        runs,
        violations,
        rate,
        bound,
        sigma,
        holds: rate <= bound + 3.0 * sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_frobenius(set: &[u64]) -> i64 {
        let limit = set.iter().product::<u64>() * 2 + 2;
        let mut rep = vec![false; limit as usize];
        rep[0] = true;
        for v in 1..limit as usize {
            rep[v] = set.iter().any(|&x| v >= x as usize && rep[v - x as usize]);
        }
        (0..limit as usize).rev().find(|&v| !rep[v]).map_or(-1, |v| v as i64)
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_number(&[1]).unwrap(), -1);
        assert_eq!(frobenius_number(&[2, 3]).unwrap(), 1);
        assert_eq!(frobenius_number(&[3, 5]).unwrap(), 7);
        for set in [[4u64, 7, 9], [5, 6, 13], [6, 10, 15]] {
            assert_eq!(frobenius_number(&set).unwrap(), brute_frobenius(&set));
        }
        assert!(frobenius_number(&[2, 4]).is_err());
        assert!(frobenius_number(&[]).is_err());
    }

    #[test]
    fn certificate_examples() {
        let c = doeblin_certificate(&[1], 0.3).unwrap();
        assert_eq!((c.t, c.lambda), (1, 0.3));
        let c = doeblin_certificate(&[2, 3], 0.5).unwrap();
        assert_eq!((c.t, c.lambda), (2, 0.25));
        assert!(doeblin_certificate(&[2, 4], 0.5).is_err());
    }

    #[test]
    fn chain_certificate_satisfies_doeblin() {
        let c = MarkovChain::from_transitions(vec![
            vec![0.0, 0.5, 0.5],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let cert = doeblin_certificate_for_chain(&c, 0.5).unwrap();
        assert!(cert.holds_on(&c));
        assert_eq!(cycle_lengths(&c), vec![2, 3]);
        let cons = doeblin_certificate_conservative(3, 0.5).unwrap();
        assert_eq!(cons.t, 7);
        assert!(cons.holds_on(&c));
    }

    #[test]
    fn periodic_chain_has_no_certificate() {
        let c = MarkovChain::from_transitions(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(doeblin_certificate_for_chain(&c, 1.0).is_err());
    }

    #[test]
    fn uniform_exploration_weights() {
        let pi = exploration_policy(&ActionStructure(vec![1, 4])).unwrap();
        assert_eq!(pi.weights()[0], vec![1.0]);
        assert_eq!(pi.weights()[1], vec![0.25; 4]);
    }

    #[test]
    fn counting_estimates() {
        let s = ActionStructure(vec![1, 1]);
        let mut t = Trajectory::new(0, 0);
        for k in 0..10 {
            let next = if k < 7 { 1 } else { 0 };
            t.push(Step { state: 0, action: 0, reward: 0.5, next });
        }
        let m = estimate_model(&t, &s).unwrap();
        assert_eq!(m.estimate(0, 0).unwrap(), vec![0.3, 0.7]);
        assert_eq!(m.estimate(1, 0), None);
        let empty = estimate_model(&Trajectory::new(0, 0), &s).unwrap();
        assert_eq!(empty.total_visits(), 0);
    }

    #[test]
    fn inconsistent_rewards_are_reported() {
        let s = ActionStructure(vec![1]);
        let mut t = Trajectory::new(0, 0);
        t.push(Step { state: 0, action: 0, reward: 1.0, next: 0 });
        t.push(Step { state: 0, action: 0, reward: 2.0, next: 0 });
        assert!(matches!(estimate_model(&t, &s), Err(Error::InconsistentReward { .. })));
    }

    #[test]
    fn budget_quadruples_when_eps_halves() {
        let prior = PriorKnowledge::new(0.5, 1.0).unwrap();
        let sizes = ModelSizes { states: 2, actions: 2 };
        for eps in [0.5, 0.25, 0.1] {
            let n1 = exploration_budget(sizes, &prior, eps, 0.5).unwrap();
            let n2 = exploration_budget(sizes, &prior, eps / 2.0, 0.5).unwrap();
            assert!(n2 >= 4 * n1);
            assert_eq!(n1 % 2, 0);
        }
    }

    #[test]
    fn tracol_examples() {
        for eps in [0.5, 0.25, 0.1] {
            let c = tracol_constants(3, 0.5, eps).unwrap();
            assert!(c.a_coef * (-(c.k0 as f64) * c.b_coef * eps * eps).exp() <= 1.0);
            let half = tracol_constants(3, 0.5, eps / 2.0).unwrap();
            assert!(half.k0 >= 4 * c.k0);
        }
    }

    #[test]
    fn prod_exp_small_cases() {
        for t in [1, 2, 5, 30, 60] {
            assert!(prod_exp_holds(t).unwrap());
        }
    }

    #[test]
    fn schedule_is_increasing_and_amortized() {
        let s = EpisodeSchedule::geometric(2, 5, 1.0).unwrap();
        let mut prev = (0, 0);
        for e in &s.episodes {
            assert!(e.exploration > prev.0 && e.exploitation > prev.1);
            prev = (e.exploration, e.exploitation);
            let lhs = (e.start + e.exploration) as f64;
            assert!(lhs / e.end() as f64 <= e.eps / 2.0 + 1e-15);
        }
        assert_eq!(s.boundary(1), Some(0));
    }

    #[test]
    fn single_action_env_tracks_chain_average() {
        let env = Mdp::new(
            vec![vec![vec![0.5, 0.5]], vec![vec![0.25, 0.75]]],
            vec![vec![1.0], vec![0.0]],
        )
        .unwrap();
        let prior = PriorKnowledge::new(0.25, 1.0).unwrap();
        let sched = EpisodeSchedule::geometric(1, 3, 1.0).unwrap();
        let total = sched.total_steps() as u64;
        let run = run_explore_exploit(&env, &prior, &sched, total, &mut SimRng::new(5), &RunOptions::default()).unwrap();
        // stationary distribution (1/3, 2/3)
        assert!((run.final_average() - 1.0 / 3.0).abs() < 0.02);
        assert!(run.averages.iter().all(|&(_, a)| a.abs() <= 1.0));
    }
}
