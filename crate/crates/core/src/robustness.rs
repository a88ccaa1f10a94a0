//! Support-preserving perturbations and audits of the value-gap bounds.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{is_unichain_from, support_graph};
use crate::metrics::{kernel_ratio, reward_tv, same_support};
use crate::mdp::{Mdp, StateId, StationaryPolicy};
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::solvers::{evaluate_average, evaluate_discounted};

/// Comparison slack for solver residuals.
pub const FLOAT_SLACK: f64 = 1e-9;

/// Cap on the number of deterministic policies an audit enumerates.
pub const POLICY_GUARD: u128 = 1_000_000;

const MAX_ROW_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBudget {
    pub eps: f64,
    /// `ε / (8 |S|)`, the allowed ratio distance between kernels.
    pub ratio: f64,
    /// `ε / 2`, the allowed total variation between rewards.
    pub tv: f64,
}

impl PerturbationBudget {
    pub fn new(eps: f64, num_states: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid("eps", format!("{eps} not in (0, 1)")));
        }
        if num_states == 0 {
            return Err(invalid("num_states", "empty state space"));
        }
        Ok(Self {
            eps,
            ratio: eps / (8.0 * num_states as f64),
            tv: eps / 2.0,
        })
    }
}

/// Whether every reward lies in `[0, 1]`.
pub fn rewards_in_unit_interval(m: &Mdp<f64>) -> bool {
    m.rewards().iter().flatten().all(|r| (0.0..=1.0).contains(r))
}

/// Draws a model within the budgets of `eps` that keeps the structure and
/// kernel support of `m`. Rewards in `[0, 1]` stay in `[0, 1]`.
pub fn perturb_model(m: &Mdp<f64>, eps: f64, rng: &mut SimRng) -> Result<Mdp<f64>> {
    let budget = PerturbationBudget::new(eps, m.num_states())?;
    let unit = rewards_in_unit_interval(m);
    let transitions = m
        .transitions()
        .iter()
        .map(|rows| rows.iter().map(|row| perturb_row(row, budget.ratio, rng)).collect())
        .collect();
    let rewards = m
        .rewards()
        .iter()
        .map(|rs| {
            rs.iter()
                .map(|&r| {
                    let noise = (2.0 * rng.uniform() - 1.0) * budget.tv;
                    let mut out = r + noise;
                    if unit {
                        out = out.clamp(0.0, 1.0);
                    }
                    if r > 0.0 {
                        out = out.max(r / 2.0);
                    }
                    out
                })
                .collect()
        })
        .collect();
    Mdp::new(transitions, rewards)
}

fn row_ratio(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x / y).max(y / x))
        .fold(1.0, f64::max)
        - 1.0
}

fn perturb_row(row: &[f64], ratio_budget: f64, rng: &mut SimRng) -> Vec<f64> {
    if row.iter().filter(|p| **p > 0.0).count() < 2 {
        return row.to_vec();
    }
    let mut beta = ratio_budget / 2.0;
    for attempt in 0..MAX_ROW_ATTEMPTS {
        if attempt > 0 && attempt % 8 == 0 {
            beta /= 2.0;
        }
        let lo = 1.0 / (1.0 + beta);
        let hi = 1.0 + beta;
        let scaled: Vec<f64> = row
            .iter()
            .map(|&p| if p > 0.0 { p * (lo + (hi - lo) * rng.uniform()) } else { 0.0 })
            .collect();
        let total: f64 = scaled.iter().sum();
        let out: Vec<f64> = scaled.iter().map(|x| x / total).collect();
        if row_ratio(row, &out) <= ratio_budget {
            return out;
        }
    }
    row.to_vec()
}

/// Outcome of checking the three hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    /// Equal support graphs.
    pub a1: bool,
    /// Kernel ratio distance within `ε / (8 |S|)`.
    pub a2: bool,
    /// Reward total variation within `ε / 2`.
    pub a3: bool,
}

impl AssumptionCheck {
    pub fn all(&self) -> bool {
        self.a1 && self.a2 && self.a3
    }
}

/// A1 per supplied policy (or kernel-support equality when `policies` is
/// empty), A2 and A3 against the budgets of `eps`.
pub fn assumptions_hold<T: Scalar>(
    m1: &Mdp<T>,
    m2: &Mdp<T>,
    eps: &T,
    policies: &[StationaryPolicy<T>],
) -> Result<AssumptionCheck> {
    if !m1.same_structure(m2) {
        return Err(Error::StructureMismatch("models differ in states or actions".into()));
    }
    let a1 = if policies.is_empty() {
        same_support(m1, m2)
    } else {
        let mut ok = true;
        for pi in policies {
            ok &= support_graph(m1, pi)?.edges() == support_graph(m2, pi)?.edges();
        }
        ok
    };
    let n = T::from_ratio(m1.num_states() as i64, 1);
    let ratio_budget = eps.clone() / (T::from_ratio(8, 1) * &n);
    let tv_budget = eps.clone() / T::from_ratio(2, 1);
    let a2 = kernel_ratio(m1, m2)? <= ratio_budget + &T::tolerance();
    let a3 = reward_tv(m1, m2)? <= tv_budget + &T::tolerance();
    Ok(AssumptionCheck { a1, a2, a3 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Discounted,
    Average,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub policy: String,
    pub v1: f64,
    pub v2: f64,
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub criterion: Criterion,
    pub alpha: Option<f64>,
    pub eps: f64,
    pub start: StateId,
    /// Rewards of the first model lie in `[0, 1]`, so the bound is `ε`.
    pub unit_rewards: bool,
    pub assumptions: AssumptionCheck,
    pub entries: Vec<PolicyEntry>,
    pub worst_gap: f64,
    /// Policies skipped because they are not unichain from the start.
    pub skipped: usize,
}

impl RobustnessReport {
    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.holds)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per policy.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.entries {
            w.serialize(e).map_err(|err| Error::Io(std::io::Error::other(err)))?;
        }
        let bytes = w.into_inner().map_err(|err| Error::Io(std::io::Error::other(err.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    /// Random stochastic policies added to the deterministic ones.
    pub stochastic_samples: usize,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            stochastic_samples: 100,
            seed: 0,
        }
    }
}

/// `ε/2 + ε/2 ||r1||_∞`, or `ε` when the rewards lie in `[0, 1]`.
pub fn gap_bound(m1: &Mdp<f64>, eps: f64) -> f64 {
    if rewards_in_unit_interval(m1) {
        eps
    } else {
        eps / 2.0 + eps / 2.0 * m1.reward_sup_norm()
    }
}

fn audit_policies(m: &Mdp<f64>, opts: &AuditOptions) -> Result<Vec<StationaryPolicy<f64>>> {
    let structure = m.structure();
    let count = structure.policy_count();
    if count > POLICY_GUARD {
        return Err(Error::GuardExceeded {
            terms: count,
            guard: POLICY_GUARD,
        });
    }
    let mut out: Vec<StationaryPolicy<f64>> = m
        .deterministic_policies()
        .map(|choices| StationaryPolicy::deterministic(&structure, &choices))
        .collect::<Result<_>>()?;
    let root = SimRng::new(opts.seed);
    for k in 0..opts.stochastic_samples {
        let mut rng = root.split(k as u64);
        out.push(dirichlet_policy(m, &mut rng)?);
    }
    Ok(out)
}

/// A policy drawn uniformly from the product of simplices.
pub fn dirichlet_policy(m: &Mdp<f64>, rng: &mut SimRng) -> Result<StationaryPolicy<f64>> {
    let weights = (0..m.num_states())
        .map(|i| {
            let draws: Vec<f64> = (0..m.num_actions(i)).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = draws.iter().sum();
            draws.into_iter().map(|x| x / total).collect()
        })
        .collect();
    StationaryPolicy::new(weights)
}

fn require_assumptions(m1: &Mdp<f64>, m2: &Mdp<f64>, eps: f64) -> Result<AssumptionCheck> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("{eps} not in (0, 1)")));
    }
    let check = assumptions_hold(m1, m2, &eps, &[])?;
    if !check.all() {
        return Err(Error::AssumptionFailed(format!(
            "A1 {} A2 {} A3 {}",
            check.a1, check.a2, check.a3
        )));
    }
    Ok(check)
}

fn finish(
    criterion: Criterion,
    alpha: Option<f64>,
    eps: f64,
    start: StateId,
    m1: &Mdp<f64>,
    assumptions: AssumptionCheck,
    entries: Vec<PolicyEntry>,
    skipped: usize,
) -> RobustnessReport {
    let worst_gap = entries.iter().map(|e| e.gap).fold(0.0, f64::max);
    RobustnessReport {
        criterion,
        alpha,
        eps,
        start,
        unit_rewards: rewards_in_unit_interval(m1),
        assumptions,
        entries,
        worst_gap,
        skipped,
    }
}

fn entry(pi: &StationaryPolicy<f64>, v1: f64, v2: f64, gap: f64, bound: f64) -> PolicyEntry {
    PolicyEntry {
        policy: pi.encode(),
        v1,
        v2,
        gap,
        bound,
        holds: gap <= bound + FLOAT_SLACK,
    }
}

/// Audits `(1-α) |v1 - v2| ≤ bound` over all deterministic policies and a
/// sample of stochastic ones.
pub fn check_discounted_robustness(
    m1: &Mdp<f64>,
    m2: &Mdp<f64>,
    alpha: f64,
    eps: f64,
    i: StateId,
) -> Result<RobustnessReport> {
    check_discounted_robustness_with(m1, m2, alpha, eps, i, &AuditOptions::default())
}

pub fn check_discounted_robustness_with(
    m1: &Mdp<f64>,
    m2: &Mdp<f64>,
    alpha: f64,
    eps: f64,
    i: StateId,
    opts: &AuditOptions,
) -> Result<RobustnessReport> {
    let assumptions = require_assumptions(m1, m2, eps)?;
    m1.check_state(i)?;
    let bound = gap_bound(m1, eps);
    let policies = audit_policies(m1, opts)?;
    let entries = policies
        .par_iter()
        .map(|pi| {
            let v1 = evaluate_discounted(m1, pi, &alpha, i)?;
            let v2 = evaluate_discounted(m2, pi, &alpha, i)?;
            Ok(entry(pi, v1, v2, (1.0 - alpha) * (v1 - v2).abs(), bound))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(Criterion::Discounted, Some(alpha), eps, i, m1, assumptions, entries, 0))
}

/// Audits `|φ1 - φ2| ≤ bound` over the audited policies that are unichain
/// from `i`.
pub fn check_average_robustness(m1: &Mdp<f64>, m2: &Mdp<f64>, eps: f64, i: StateId) -> Result<RobustnessReport> {
    check_average_robustness_with(m1, m2, eps, i, &AuditOptions::default())
}

pub fn check_average_robustness_with(
    m1: &Mdp<f64>,
    m2: &Mdp<f64>,
    eps: f64,
    i: StateId,
    opts: &AuditOptions,
) -> Result<RobustnessReport> {
    let assumptions = require_assumptions(m1, m2, eps)?;
    m1.check_state(i)?;
    let bound = gap_bound(m1, eps);
    let policies = audit_policies(m1, opts)?;
    let results = policies
        .par_iter()
        .map(|pi| {
            if !is_unichain_from(&support_graph(m1, pi)?, i)? {
                return Ok(None);
            }
            let v1 = evaluate_average(m1, pi, i)?;
            let v2 = evaluate_average(m2, pi, i)?;
            Ok(Some(entry(pi, v1, v2, (v1 - v2).abs(), bound)))
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let entries = results.into_iter().flatten().collect();
    Ok(finish(Criterion::Average, None, eps, i, m1, assumptions, entries, skipped))
}

/// Rewards shifted to `r - ρ`.
pub fn shift_rewards<T: Scalar>(m: &Mdp<T>, rho: &T) -> Mdp<T> {
    let rewards = m
        .rewards()
        .iter()
        .map(|rs| rs.iter().map(|r| r.clone() - rho.clone()).collect())
        .collect();
    m.with_rewards(rewards).expect("same shape")
}

/// Sandwich `(1+δ)^{-2|S|} ≤ w1/w2 ≤ (1+δ)^{2|S|}` for the shifted values
/// `w` of the first model's rewards, with `δ = d_rat(P1, P2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WRatioCheck<T = f64> {
    pub w1: T,
    pub w2: T,
    pub delta: T,
    pub factor: T,
    pub holds: bool,
}

pub fn check_w_ratio<T: Scalar>(
    m1: &Mdp<T>,
    m2: &Mdp<T>,
    pi: &StationaryPolicy<T>,
    alpha: &T,
    i: StateId,
) -> Result<WRatioCheck<T>> {
    if !m1.same_structure(m2) {
        return Err(Error::StructureMismatch("models differ in states or actions".into()));
    }
    if support_graph(m1, pi)?.edges() != support_graph(m2, pi)?.edges() {
        return Err(Error::AssumptionFailed("support graphs differ".into()));
    }
    let rho = -m1.reward_sup_norm();
    let w_model1 = shift_rewards(m1, &rho);
    let w_model2 = shift_rewards(&m2.with_rewards(m1.rewards().to_vec())?, &rho);
    let w1 = evaluate_discounted(&w_model1, pi, alpha, i)?;
    let w2 = evaluate_discounted(&w_model2, pi, alpha, i)?;
    let delta = kernel_ratio(m1, m2)?;
    let factor = (T::one() + &delta).powi(2 * m1.num_states() as u32);
    let slack = |x: &T| {
        if T::EXACT {
            T::zero()
        } else {
            T::tolerance() * &T::max_of(T::one(), x.abs())
        }
    };
    let upper = factor.clone() * &w2;
    let lower = factor.clone() * &w1;
    let holds = w1 <= upper.clone() + &slack(&upper) && w2 <= lower.clone() + &slack(&lower);
    Ok(WRatioCheck {
        w1,
        w2,
        delta,
        factor,
        holds,
    })
}

pub fn check_w_ratio_bound<T: Scalar>(
    m1: &Mdp<T>,
    m2: &Mdp<T>,
    pi: &StationaryPolicy<T>,
    alpha: &T,
    i: StateId,
) -> Result<bool> {
    Ok(check_w_ratio(m1, m2, pi, alpha, i)?.holds)
}

/// The chain `(1+δ)^{2|S|} - 1`, `2|S| δ` and `ε/4` for one audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialCheck {
    pub delta: f64,
    pub excess: f64,
    pub linear: f64,
    pub quarter_eps: f64,
    /// `excess ≤ linear`; false for every `δ > 0`.
    pub middle_step: bool,
    /// `excess ≤ ε/4`.
    pub end_to_end: bool,
}

pub fn binomial_chain_check(delta: f64, num_states: usize, eps: f64) -> BinomialCheck {
    let n = 2 * num_states as i32;
    let excess = (1.0 + delta).powi(n) - 1.0;
    let linear = n as f64 * delta;
    BinomialCheck {
        delta,
        excess,
        linear,
        quarter_eps: eps / 4.0,
        middle_step: excess <= linear + FLOAT_SLACK * 1e-3,
        end_to_end: excess <= eps / 4.0,
    }
}
