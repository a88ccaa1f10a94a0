//! Tabular Q-learning and its action-replay process.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mdp::{sample_transition, ActionId, ActionStructure, Mdp, StateId, Step, Trajectory};
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::solvers::{argmax_lowest, check_discount, optimal_discounted, QTable};

/// Step sizes `γ_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearningRateSchedule {
    /// `1 / (n + 1)` on the `n`-th visit of the updated pair.
    Harmonic,
    /// `(t + 1)^{-ω}` at global step `t`, `ω ∈ (1/2, 1]`.
    Polynomial { omega: f64 },
    Constant { gamma: f64 },
}

impl LearningRateSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Harmonic => Ok(()),
            Self::Polynomial { omega } if omega > 0.5 && omega <= 1.0 => Ok(()),
            Self::Polynomial { omega } => Err(invalid("omega", format!("{omega} not in (0.5, 1]"))),
            Self::Constant { gamma } if (0.0..1.0).contains(&gamma) => Ok(()),
            Self::Constant { gamma } => Err(invalid("gamma", format!("{gamma} not in [0, 1)"))),
        }
    }

    /// `γ` for global step `t ≥ 1` that is the `visit`-th visit (from 1) of
    /// its pair.
    pub fn gamma(&self, t: u64, visit: u64) -> f64 {
        match *self {
            Self::Harmonic => 1.0 / (visit as f64 + 1.0),
            Self::Polynomial { omega } => (t as f64 + 1.0).powf(-omega),
            Self::Constant { gamma } => gamma,
        }
    }

    /// The same step size in `T`: harmonic and constant rates exactly,
    /// polynomial rates as the binary value of the float.
    pub fn gamma_as<T: Scalar>(&self, t: u64, visit: u64) -> T {
        match *self {
            Self::Harmonic => T::from_ratio(1, visit as i64 + 1),
            Self::Constant { gamma } => T::parse_decimal(&format!("{gamma:?}")).unwrap_or_else(|| T::from_f64(gamma)),
            Self::Polynomial { .. } => T::from_f64(self.gamma(t, visit)),
        }
    }
}

/// `γ_t` for every step of a trajectory.
pub fn trajectory_gammas<T: Scalar>(
    traj: &Trajectory,
    structure: &ActionStructure,
    schedule: &LearningRateSchedule,
) -> Result<Vec<T>> {
    let mut visits: Vec<Vec<u64>> = structure.0.iter().map(|&k| vec![0; k]).collect();
    traj.steps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            if s.state >= structure.num_states() || s.action >= structure.num_actions(s.state) {
                return Err(Error::Precondition(format!("step {} leaves the structure", k + 1)));
            }
            visits[s.state][s.action] += 1;
            Ok(schedule.gamma_as(k as u64 + 1, visits[s.state][s.action]))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExplorationMode {
    Greedy,
    /// Uniform action with probability `min(1, c / t)`.
    EpsilonGreedy { c: f64 },
}

impl ExplorationMode {
    pub fn default_for(structure: &ActionStructure) -> Self {
        Self::EpsilonGreedy {
            c: 10.0 * (structure.num_states() * structure.max_actions()) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLearningState<T = f64> {
    pub q: QTable<T>,
    pub visits: Vec<Vec<u64>>,
    /// Updates applied so far; the table is `Q^(t+1)`.
    pub t: u64,
}

impl<T: Scalar> QLearningState<T> {
    pub fn new(q1: QTable<T>) -> Self {
        let visits = q1.rows().iter().map(|r| vec![0; r.len()]).collect();
        Self { q: q1, visits, t: 0 }
    }
}

/// `Q(i,a) ← (1-γ) Q(i,a) + γ (r + α max_b Q(j,b))`.
///
/// `γ = 1` is accepted and replaces the entry by the sample target.
pub fn q_update<T: Scalar>(state: &mut QLearningState<T>, step: &Step, gamma: &T, alpha: &T) -> Result<()> {
    if gamma.is_neg() || *gamma > T::one() {
        return Err(invalid("gamma", format!("{gamma} not in [0, 1]")));
    }
    check_discount(alpha)?;
    let n = state.q.num_states();
    if step.state >= n || step.next >= n || step.action >= state.q.row(step.state).len() {
        return Err(Error::Precondition("transition outside the table".into()));
    }
    let target = T::from_f64(step.reward) + &(alpha.clone() * &state.q.max_at(step.next));
    let old = state.q.get(step.state, step.action).clone();
    let new = (T::one() - gamma.clone()) * &old + &(gamma.clone() * &target);
    state.q.set(step.state, step.action, new);
    state.visits[step.state][step.action] += 1;
    state.t += 1;
    Ok(())
}

/// Lowest-index maximizer of `Q(i, ·)`.
pub fn greedy_action<T: Scalar>(q: &QTable<T>, i: StateId) -> ActionId {
    argmax_lowest(q.row(i))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QRunOptions {
    pub start: StateId,
    /// Initial table; zeros when absent.
    pub q1: Option<QTable<f64>>,
    pub record_trajectory: bool,
}

impl Default for QRunOptions {
    fn default() -> Self {
        Self {
            start: 0,
            q1: None,
            record_trajectory: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSnapshot {
    /// Updates applied; the table is `Q^(step+1)`.
    pub step: u64,
    pub q: QTable<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLearningRun {
    pub seed: u64,
    pub alpha: f64,
    pub schedule: LearningRateSchedule,
    pub mode: ExplorationMode,
    pub q1: QTable<f64>,
    /// At steps `1, 2, 4, ...` and the last step.
    pub snapshots: Vec<QSnapshot>,
    pub state: QLearningState<f64>,
    pub gammas: Option<Vec<f64>>,
    pub trajectory: Option<Trajectory>,
}

/// Runs `steps` online updates in `env`.
pub fn run_q_learning(
    env: &Mdp<f64>,
    alpha: f64,
    schedule: &LearningRateSchedule,
    mode: &ExplorationMode,
    steps: u64,
    rng: &mut SimRng,
    opts: &QRunOptions,
) -> Result<QLearningRun> {
    if steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    check_discount(&alpha)?;
    schedule.validate()?;
    env.check_state(opts.start)?;
    let structure = env.structure();
    let q1 = match &opts.q1 {
        Some(q) if q.structure() == structure => q.clone(),
        Some(_) => return Err(Error::StructureMismatch("initial table".into())),
        None => QTable::zeros(&structure),
    };
    let mut st = QLearningState::new(q1.clone());
    let mut trajectory = opts.record_trajectory.then(|| Trajectory::new(opts.start, rng.seed()));
    let mut gammas = opts.record_trajectory.then(Vec::new);
    let mut snapshots = Vec::new();
    let mut next_checkpoint = 1u64;
    let mut x = opts.start;
    for t in 1..=steps {
        let explore = match *mode {
            ExplorationMode::Greedy => false,
            ExplorationMode::EpsilonGreedy { c } => rng.uniform() < (c / t as f64).min(1.0),
        };
        let a = if explore {
            rng.below(env.num_actions(x))
        } else {
            greedy_action(&st.q, x)
        };
        let step = sample_transition(env, x, a, rng);
        let gamma = schedule.gamma(t, st.visits[x][a] + 1);
        q_update(&mut st, &step, &gamma, &alpha)?;
        if let Some(tr) = trajectory.as_mut() {
            tr.push(step);
        }
        if let Some(g) = gammas.as_mut() {
            g.push(gamma);
        }
        if t == next_checkpoint || t == steps {
            snapshots.push(QSnapshot { step: t, q: st.q.clone() });
            if t == next_checkpoint {
                next_checkpoint *= 2;
            }
        }
        x = step.next;
    }
    Ok(QLearningRun {
        seed: rng.seed(),
        alpha,
        schedule: *schedule,
        mode: *mode,
        q1,
        snapshots,
        state: st,
        gammas,
        trajectory,
    })
}

/// Recomputes `Q^(t)` for `t = 1..=len+1` by applying the updates of a
/// recorded trajectory.
pub fn replay_q_learning<T: Scalar>(traj: &Trajectory, gammas: &[T], q1: &QTable<T>, alpha: &T) -> Result<Vec<QTable<T>>> {
    if gammas.len() != traj.len() {
        return Err(invalid("gammas", "one rate per step"));
    }
    let mut st = QLearningState::new(q1.clone());
    let mut out = Vec::with_capacity(traj.len() + 1);
    out.push(st.q.clone());
    for (step, g) in traj.steps.iter().zip(gammas) {
        q_update(&mut st, step, g, alpha)?;
        out.push(st.q.clone());
    }
    Ok(out)
}

/// One recorded use of a pair: the step time, successor, rate and reward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Occurrence<T = f64> {
    pub time: usize,
    pub next: StateId,
    pub gamma: T,
    pub reward: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ArpTarget {
    Level { state: StateId, level: usize },
    Bottom,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArpEdge<T = f64> {
    pub target: ArpTarget,
    pub weight: T,
    pub reward: T,
}

/// The action-replay process up to level `top`.
///
/// State `⟨i, t⟩` with action `a` replays the occurrences `t_1 < … < t_k < t`
/// of `(i, a)`: it moves to `⟨X_{t_ℓ+1}, t_ℓ⟩` with weight
/// `γ_{t_ℓ} Π_{m>ℓ} (1 - γ_{t_m})` collecting the recorded reward, and to `⊥`
/// with weight `Π_m (1 - γ_{t_m})` collecting `Q^(1)(i, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArpModel<T = f64> {
    top: usize,
    q1: QTable<T>,
    occurrences: Vec<Vec<Vec<Occurrence<T>>>>,
}

impl<T: Scalar> ArpModel<T> {
    /// Builds from parts, checking that occurrence times increase and stay
    /// below `top`.
    pub fn from_parts(top: usize, q1: QTable<T>, occurrences: Vec<Vec<Vec<Occurrence<T>>>>) -> Result<Self> {
        let arp = Self { top, q1, occurrences };
        arp.validate()?;
        Ok(arp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.occurrences.len() != self.q1.num_states() {
            return Err(Error::Precondition("occurrence table shape".into()));
        }
        for (i, per_action) in self.occurrences.iter().enumerate() {
            if per_action.len() != self.q1.row(i).len() {
                return Err(Error::Precondition("occurrence table shape".into()));
            }
            for occ in per_action {
                for w in occ.windows(2) {
                    if w[0].time >= w[1].time {
                        return Err(Error::Precondition("occurrence times must increase".into()));
                    }
                }
                if occ.iter().any(|o| o.time == 0 || o.time >= self.top || o.next >= self.occurrences.len()) {
                    return Err(Error::Precondition("occurrence outside the levels".into()));
                }
            }
        }
        Ok(())
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn num_states(&self) -> usize {
        self.q1.num_states()
    }

    pub fn q1(&self) -> &QTable<T> {
        &self.q1
    }

    /// Occurrences of `(i, a)` at times before `level`.
    pub fn occurrences_before(&self, i: StateId, a: ActionId, level: usize) -> &[Occurrence<T>] {
        let occ = &self.occurrences[i][a];
        let k = occ.partition_point(|o| o.time < level);
        &occ[..k]
    }

    /// Outgoing edges of `(⟨i, level⟩, a)`, latest occurrence first, `⊥` last.
    pub fn edges(&self, i: StateId, level: usize, a: ActionId) -> Vec<ArpEdge<T>> {
        let occ = self.occurrences_before(i, a, level);
        let mut out = Vec::with_capacity(occ.len() + 1);
        let mut survive = T::one();
        for o in occ.iter().rev() {
            out.push(ArpEdge {
                target: ArpTarget::Level {
                    state: o.next,
                    level: o.time,
                },
                weight: o.gamma.clone() * &survive,
                reward: o.reward.clone(),
            });
            survive = survive * &(T::one() - o.gamma.clone());
        }
        out.push(ArpEdge {
            target: ArpTarget::Bottom,
            weight: survive,
            reward: self.q1.get(i, a).clone(),
        });
        out
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.top {
            return Err(invalid("level", format!("{level} not in 1..={}", self.top)));
        }
        Ok(())
    }
}

/// The replay process of a trajectory up to level `n ≤ len + 1`.
pub fn build_arp<T: Scalar>(
    traj: &Trajectory,
    schedule: &LearningRateSchedule,
    q1: &QTable<T>,
    n: usize,
) -> Result<ArpModel<T>> {
    let gammas = trajectory_gammas(traj, &q1.structure(), schedule)?;
    build_arp_with_gammas(traj, &gammas, q1, n)
}

/// As [`build_arp`] with the rates given per step.
pub fn build_arp_with_gammas<T: Scalar>(traj: &Trajectory, gammas: &[T], q1: &QTable<T>, n: usize) -> Result<ArpModel<T>> {
    if gammas.len() != traj.len() {
        return Err(invalid("gammas", "one rate per step"));
    }
    if n == 0 || n > traj.len() + 1 {
        return Err(invalid("level", format!("{n} not in 1..={}", traj.len() + 1)));
    }
    let mut occurrences: Vec<Vec<Vec<Occurrence<T>>>> = q1.rows().iter().map(|r| vec![Vec::new(); r.len()]).collect();
    for (k, (s, g)) in traj.steps.iter().zip(gammas).enumerate().take(n - 1) {
        if s.state >= occurrences.len() || s.action >= occurrences[s.state].len() {
            return Err(Error::Precondition(format!("step {} leaves the table", k + 1)));
        }
        occurrences[s.state][s.action].push(Occurrence {
            time: k + 1,
            next: s.next,
            gamma: g.clone(),
            reward: T::from_f64(s.reward),
        });
    }
    ArpModel::from_parts(n, q1.clone(), occurrences)
}

/// `Q*_ARP(⟨·, t⟩, ·)` for `t = 1..=top` (index `t - 1`), by one pass up
/// the levels since every edge lowers the level or ends in `⊥`.
pub fn solve_arp<T: Scalar>(arp: &ArpModel<T>, alpha: &T) -> Result<Vec<QTable<T>>> {
    check_discount(alpha)?;
    arp.validate()?;
    let n = arp.num_states();
    let mut levels: Vec<QTable<T>> = Vec::with_capacity(arp.top);
    let mut values: Vec<Vec<T>> = Vec::with_capacity(arp.top);
    for level in 1..=arp.top {
        let rows = (0..n)
            .map(|i| {
                (0..arp.q1.row(i).len())
                    .map(|a| {
                        // Same edge set as one level down unless (i, a) occurred at `level - 1`.
                        if level > 1
                            && arp.occurrences_before(i, a, level).len() == arp.occurrences_before(i, a, level - 1).len()
                        {
                            return levels[level - 2].get(i, a).clone();
                        }
                        arp.edges(i, level, a).into_iter().fold(T::zero(), |acc, e| {
                            let cont = match e.target {
                                ArpTarget::Bottom => e.reward,
                                ArpTarget::Level { state, level: l } => {
                                    e.reward + &(alpha.clone() * &values[l - 1][state])
                                }
                            };
                            acc + &(e.weight * &cont)
                        })
                    })
                    .collect::<Vec<T>>()
            })
            .collect::<Vec<_>>();
        let q = QTable::from_rows(rows);
        values.push((0..n).map(|i| q.max_at(i)).collect());
        levels.push(q);
    }
    Ok(levels)
}

/// `P̂_t` and `r̂_t`: level-marginal kernel and reward of `⟨·, t⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArpProjection<T = f64> {
    pub level: usize,
    /// `(i, a, j)`; each row sums to one minus its `⊥` mass.
    pub kernel: Vec<Vec<Vec<T>>>,
    /// Recorded reward once the pair has occurred, otherwise `Q^(1)(i, a)`.
    pub rewards: Vec<Vec<T>>,
    pub seen: Vec<Vec<bool>>,
    pub bottom: Vec<Vec<T>>,
}

pub fn arp_projection<T: Scalar>(arp: &ArpModel<T>, t: usize) -> Result<ArpProjection<T>> {
    arp.check_level(t)?;
    let n = arp.num_states();
    let mut kernel = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    let mut seen = Vec::with_capacity(n);
    let mut bottom = Vec::with_capacity(n);
    for i in 0..n {
        let k = arp.q1.row(i).len();
        let mut krows = Vec::with_capacity(k);
        let mut rrow = Vec::with_capacity(k);
        let mut srow = Vec::with_capacity(k);
        let mut brow = Vec::with_capacity(k);
        for a in 0..k {
            let mut row = vec![T::zero(); n];
            let mut reward = arp.q1.get(i, a).clone();
            let mut any = false;
            let mut bot = T::zero();
            for e in arp.edges(i, t, a) {
                match e.target {
                    ArpTarget::Level { state, .. } => {
                        row[state] = row[state].clone() + &e.weight;
                        reward = e.reward;
                        any = true;
                    }
                    ArpTarget::Bottom => bot = e.weight,
                }
            }
            krows.push(row);
            rrow.push(reward);
            srow.push(any);
            brow.push(bot);
        }
        kernel.push(krows);
        rewards.push(rrow);
        seen.push(srow);
        bottom.push(brow);
    }
    Ok(ArpProjection {
        level: t,
        kernel,
        rewards,
        seen,
        bottom,
    })
}

impl ArpProjection<f64> {
    /// `d_rat` and `d_tv` of the kernel against `env` over jointly positive
    /// entries, and `d_tv` of rewards over seen pairs.
    pub fn distances(&self, env: &Mdp<f64>) -> (f64, f64, f64) {
        let mut ratio: f64 = 0.0;
        let mut tv: f64 = 0.0;
        let mut rtv: f64 = 0.0;
        for i in 0..env.num_states() {
            for a in 0..env.num_actions(i) {
                for (p, q) in self.kernel[i][a].iter().zip(env.row(i, a)) {
                    if *p > 0.0 && *q > 0.0 {
                        ratio = ratio.max((p / q).max(q / p) - 1.0);
                        tv = tv.max((p - q).abs());
                    }
                }
                if self.seen[i][a] {
                    rtv = rtv.max((self.rewards[i][a] - env.reward(i, a)).abs());
                }
            }
        }
        (ratio, tv, rtv)
    }
}

/// Action choice in the replay process for [`nodrop_probability`].
pub enum ArpPolicy<'a> {
    /// Maximize the hitting probability at every node.
    WorstCase,
    Fixed(&'a dyn Fn(StateId, usize) -> ActionId),
}

/// Probability that the replay process started at `⟨i, start_level⟩`
/// reaches a level `≤ m` within `ell` steps (`⊥` never does).
pub fn nodrop_probability<T: Scalar>(
    arp: &ArpModel<T>,
    m: usize,
    ell: usize,
    start_state: StateId,
    start_level: usize,
    policy: &ArpPolicy<'_>,
) -> Result<T> {
    arp.check_level(start_level)?;
    if m >= start_level {
        return Err(invalid("m", format!("{m} must be below the start level {start_level}")));
    }
    if start_state >= arp.num_states() {
        return Err(Error::UnknownState(start_state));
    }
    let n = arp.num_states();
    // prob[level][state] with `k` steps left, levels 1..=start_level.
    let mut prob: Vec<Vec<T>> = (0..=start_level)
        .map(|l| vec![if l >= 1 && l <= m { T::one() } else { T::zero() }; n])
        .collect();
    for _ in 0..ell {
        let mut next = prob.clone();
        for level in (m + 1)..=start_level {
            for i in 0..n {
                let value = |a: ActionId| {
                    arp.edges(i, level, a).into_iter().fold(T::zero(), |acc, e| match e.target {
                        ArpTarget::Bottom => acc,
                        ArpTarget::Level { state, level: l } => acc + &(e.weight * &prob[l][state]),
                    })
                };
                next[level][i] = match policy {
                    ArpPolicy::WorstCase => (0..arp.q1.row(i).len())
                        .map(value)
                        .fold(T::zero(), T::max_of),
                    ArpPolicy::Fixed(f) => value(f(i, level)),
                };
            }
        }
        prob = next;
    }
    Ok(prob[start_level][start_state].clone())
}

/// Smallest `T` with `W α^T / (1 - α) ≤ η`.
pub fn cutoff_horizon(reward_bound: f64, alpha: f64, eta: f64) -> Result<u64> {
    check_discount(&alpha)?;
    if !(eta > 0.0) || !(reward_bound >= 0.0) {
        return Err(invalid("eta", "must be positive with a nonnegative reward bound"));
    }
    let x = eta * (1.0 - alpha) / reward_bound;
    if x >= 1.0 {
        return Ok(0);
    }
    Ok((x.ln() / alpha.ln()).ceil() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QhatPoint {
    pub t: usize,
    /// `max |Q̂_t - Q*|`.
    pub qhat_distance: f64,
    /// `max |Q^(t) - Q*|`.
    pub q_distance: f64,
    pub kernel_ratio: f64,
    pub max_bottom_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QhatReport {
    pub alpha: f64,
    pub eps: f64,
    pub cutoff_horizon: u64,
    pub points: Vec<QhatPoint>,
    /// The last `Q^(t)` distance is within `eps`.
    pub final_within_eps: bool,
}

/// Distances of `Q̂_t` (optimal values of the projected model, `⊥` mass
/// sent to a zero-reward absorbing sink) and `Q^(t)` to `Q*` at each time in
/// `times`.
pub fn check_qhat_convergence(
    env: &Mdp<f64>,
    traj: &Trajectory,
    schedule: &LearningRateSchedule,
    q1: &QTable<f64>,
    alpha: f64,
    eps: f64,
    times: &[usize],
) -> Result<QhatReport> {
    let structure = env.structure();
    let gammas: Vec<f64> = trajectory_gammas(traj, &structure, schedule)?;
    let top = times.iter().copied().max().unwrap_or(1).max(1);
    let arp = build_arp_with_gammas(traj, &gammas, q1, top)?;
    let tables = replay_q_learning(traj, &gammas, q1, &alpha)?;
    let star = optimal_discounted(env, alpha, 1e-11)?.q_values;
    let n = env.num_states();
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        let proj = arp_projection(&arp, t)?;
        let mut transitions = Vec::with_capacity(n + 1);
        let mut rewards = Vec::with_capacity(n + 1);
        for i in 0..n {
            let mut rows = Vec::new();
            for a in 0..env.num_actions(i) {
                let mut row = proj.kernel[i][a].clone();
                row.push(proj.bottom[i][a]);
                rows.push(row);
            }
            transitions.push(rows);
            rewards.push(proj.rewards[i].clone());
        }
        let mut sink = vec![0.0; n + 1];
        sink[n] = 1.0;
        transitions.push(vec![sink]);
        rewards.push(vec![0.0]);
        let model = Mdp::from_parts_unchecked(transitions, rewards);
        let qhat = optimal_discounted(&model, alpha, 1e-11)?.q_values;
        let qhat = QTable::from_rows(qhat.rows()[..n].to_vec());
        let (kernel_ratio, _, _) = proj.distances(env);
        points.push(QhatPoint {
            t,
            qhat_distance: qhat.sup_distance(&star),
            q_distance: tables[t - 1].sup_distance(&star),
            kernel_ratio,
            max_bottom_mass: proj.bottom.iter().flatten().copied().fold(0.0, f64::max),
        });
    }
    let final_within_eps = points.last().is_some_and(|p| p.q_distance <= eps);
    Ok(QhatReport {
        alpha,
        eps,
        cutoff_horizon: cutoff_horizon(env.reward_sup_norm(), alpha, eps)?,
        points,
        final_within_eps,
    })
}
