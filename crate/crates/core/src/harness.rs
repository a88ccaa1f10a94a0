//! Experiment configuration, dispatch and persistence.
//!
//! A [`RunRecord`] holds everything a run computes and nothing that depends
//! on the clock, so equal configurations give byte-identical records.
//! Wall-clock time goes to a separate timing file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::{generate_model, GeneratorSpec};
use crate::graph::{is_communicating, is_unichain_from, support_graph};
use crate::learn_average::{episode_schedule, run_explore_exploit, EpisodeSchedule, ModelSizes, RunOptions};
use crate::learn_q::{
    build_arp_with_gammas, check_qhat_convergence, replay_q_learning, run_q_learning, solve_arp, trajectory_gammas,
    ExplorationMode, LearningRateSchedule, QRunOptions,
};
use crate::mdp::{ActionId, Mdp, PriorKnowledge, StateId, StationaryPolicy};
use crate::model_file::{load_model, ModelFile};
use crate::rational_forms::fw_discounted_value;
use crate::rng::SimRng;
use crate::robustness::{
    check_average_robustness_with, check_discounted_robustness_with, perturb_model, rewards_in_unit_interval,
    AuditOptions,
};
use crate::scalar::{Rational, Scalar};
use crate::solvers::{
    evaluate_average, evaluate_discounted_all, mertens_neyman_sweep, occupancy_column,
    optimal_average, optimal_discounted, QTable,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "PKMDP_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "pkmdp-out";
/// Largest step count a single run accepts.
pub const STEP_LIMIT: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Solve,
    Evaluate,
    PerturbAudit,
    LearnAvg,
    LearnQ,
    VerifyRational,
    ArpCheck,
    GenModel,
}

impl ExperimentKind {
    pub fn is_learning(self) -> bool {
        matches!(self, Self::LearnAvg | Self::LearnQ | Self::ArpCheck | Self::PerturbAudit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Path(PathBuf),
    Generate(GeneratorSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum AuditCriterion {
    Discounted,
    /// Discounted with rewards in `[0, 1]` and bound `ε`.
    Corollary,
    Average,
}

/// Parameters not used by a kind are ignored.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<StateId>,
    /// Deterministic policy as one action per state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Vec<ActionId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<AuditCriterion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stochastic_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<LearningRateSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exploration: Option<ExplorationMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episodes: Option<u32>,
    /// Exploration length of episode 1 is `4 · base`; absent means the
    /// budget-derived schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for independent trials and policies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

fn config_error(field: impl Into<String>, detail: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        detail: detail.into(),
    }
}

fn require<T: Copy>(value: Option<T>, field: &str) -> Result<T> {
    value.ok_or_else(|| config_error(field, "required for this kind"))
}

fn check_unit_open(x: f64, field: &str) -> Result<f64> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(config_error(field, format!("{x} not in (0, 1)")))
    }
}

fn exact(x: f64) -> Rational {
    Rational::parse_decimal(&format!("{x:?}")).unwrap_or_else(|| Rational::from_f64(x))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_error(format!("line {} column {}", e.line(), e.column()), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        require(self.kind, "kind")
    }

    /// Field-level checks that need no model.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        if self.model.is_none() {
            return Err(config_error("model", "a model path or generator is required"));
        }
        if let Some(ModelSource::Path(p)) = &self.model {
            if !p.exists() {
                return Err(config_error("model.path", format!("{} does not exist", p.display())));
            }
        }
        if let Some(ModelSource::Generate(spec)) = &self.model {
            spec.validate().map_err(|e| config_error("model.generate", e.to_string()))?;
        }
        if kind.is_learning() && self.seed.is_none() {
            return Err(config_error("seed", "learning and audit kinds need an explicit seed"));
        }
        if let Some(a) = self.alpha {
            check_unit_open(a, "alpha")?;
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return Err(config_error("eps", format!("{e} must be positive")));
            }
        }
        if let Some(d) = self.delta {
            check_unit_open(d, "delta")?;
        }
        if let Some(s) = self.steps {
            if s == 0 || s > STEP_LIMIT {
                return Err(config_error("steps", format!("{s} not in 1..={STEP_LIMIT}")));
            }
        }
        if let Some(s) = &self.schedule {
            s.validate().map_err(|e| config_error("schedule", e.to_string()))?;
        }
        if self.jobs == Some(0) {
            return Err(config_error("jobs", "must be positive"));
        }
        if self.stride == Some(0) {
            return Err(config_error("stride", "must be positive"));
        }
        match kind {
            ExperimentKind::Evaluate | ExperimentKind::VerifyRational => {
                require(self.alpha, "alpha")?;
            }
            ExperimentKind::PerturbAudit => {
                let eps = require(self.eps, "eps")?;
                check_unit_open(eps, "eps")?;
                if self.criterion != Some(AuditCriterion::Average) {
                    require(self.alpha, "alpha")?;
                }
            }
            ExperimentKind::LearnQ | ExperimentKind::ArpCheck => {
                require(self.alpha, "alpha")?;
            }
            ExperimentKind::LearnAvg => {
                if self.episodes == Some(0) {
                    return Err(config_error("episodes", "must be positive"));
                }
            }
            ExperimentKind::Solve | ExperimentKind::GenModel => {}
        }
        Ok(())
    }

    /// The model for trial `trial`; generated models take seed `seed + trial`.
    pub fn load_model<T: Scalar>(&self, trial: u64) -> Result<Mdp<T>> {
        match &self.model {
            Some(ModelSource::Path(p)) => load_model(p),
            Some(ModelSource::Generate(spec)) => {
                let mut spec = spec.clone();
                spec.seed = spec.seed.wrapping_add(trial);
                generate_model(&spec)
            }
            None => Err(config_error("model", "a model path or generator is required")),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    fn start(&self) -> StateId {
        self.start.unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct AuditSummary {
    pub trial: u64,
    pub policies: usize,
    pub skipped: usize,
    pub worst_gap: f64,
    pub bound: f64,
    pub all_hold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct EpisodeSummary {
    pub index: u32,
    pub start: u64,
    pub fallback: bool,
    pub policy: Option<Vec<ActionId>>,
    pub estimated_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct IdentityEntry {
    pub policy: Vec<ActionId>,
    pub state: StateId,
    /// `(1-α) v` from the linear solve, as an exact fraction.
    pub direct: String,
    pub spanning_maps: String,
    pub equal: bool,
    pub occupancy_sum_is_one: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct QhatRow {
    pub t: usize,
    pub qhat_distance: f64,
    pub q_distance: f64,
    pub kernel_ratio: f64,
    pub max_bottom_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Solve {
        alpha: Option<f64>,
        values: Vec<f64>,
        policy: Vec<ActionId>,
        q_values: Option<Vec<Vec<f64>>>,
        gain: Option<f64>,
    },
    Evaluate {
        alpha: f64,
        policy: Vec<ActionId>,
        values: Vec<f64>,
        exact_values: Option<Vec<String>>,
        /// Limit-average value from `start` when the policy is unichain there.
        average: Option<f64>,
    },
    PerturbAudit {
        criterion: AuditCriterion,
        alpha: Option<f64>,
        eps: f64,
        trials: Vec<AuditSummary>,
        all_hold: bool,
    },
    LearnAvg {
        steps: u64,
        optimal_gain: f64,
        final_average: f64,
        boundaries: Vec<u64>,
        episodes: Vec<EpisodeSummary>,
    },
    LearnQ {
        alpha: f64,
        steps: u64,
        final_distance: f64,
        final_q: Vec<Vec<f64>>,
        optimal_q: Vec<Vec<f64>>,
    },
    VerifyRational {
        alpha: String,
        entries: Vec<IdentityEntry>,
        all_equal: bool,
    },
    ArpCheck {
        alpha: f64,
        steps: u64,
        levels: usize,
        max_float_deviation: f64,
        exact_match: bool,
        cutoff_horizon: u64,
        qhat: Vec<QhatRow>,
    },
    GenModel {
        communicating: bool,
        model: ModelFile,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub payload: Payload,
    /// Named `(x, y)` curves.
    pub series: BTreeMap<String, Vec<[f64; 2]>>,
    pub verdict: Option<Verdict>,
}

impl RunRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn passed(&self) -> bool {
        self.verdict.as_ref().is_none_or(|v| v.passed)
    }
}

/// JSON schema every record validates against.
pub fn record_schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(RunRecord)).expect("schema serializes")
}

pub fn config_schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(ExperimentConfig)).expect("schema serializes")
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    /// File name to contents, written next to the record.
    pub side_files: BTreeMap<String, String>,
    pub elapsed: Duration,
}

struct Parts {
    payload: Payload,
    series: BTreeMap<String, Vec<[f64; 2]>>,
    verdict: Option<Verdict>,
    side_files: BTreeMap<String, String>,
}

impl Parts {
    fn new(payload: Payload) -> Self {
        Self {
            payload,
            series: BTreeMap::new(),
            verdict: None,
            side_files: BTreeMap::new(),
        }
    }
}

/// Validates `config`, runs its pipeline and returns the record with its
/// side files.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let clock = Instant::now();
    let parts = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| config_error("jobs", e.to_string()))?
            .install(|| dispatch(config)),
        None => dispatch(config),
    }?;
    let mut side_files = parts.side_files;
    for (name, points) in &parts.series {
        side_files.insert(format!("{name}.csv"), series_csv(points));
    }
    Ok(RunOutcome {
        record: RunRecord {
            tool: "pkmdp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            // Where a record is written is not part of what it reproduces.
            config: ExperimentConfig {
                output_dir: None,
                ..config.clone()
            },
            payload: parts.payload,
            series: parts.series,
            verdict: parts.verdict,
        },
        side_files,
        elapsed: clock.elapsed(),
    })
}

/// Writes `record.json`, `timing.json` and the side files into `dir`.
pub fn write_outcome(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("record.json"), outcome.record.to_json()? + "\n")?;
    let timing = serde_json::json!({ "wall_clock_seconds": outcome.elapsed.as_secs_f64() });
    std::fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
    for (name, contents) in &outcome.side_files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn dispatch(config: &ExperimentConfig) -> Result<Parts> {
    match config.kind()? {
        ExperimentKind::Solve => run_solve(config),
        ExperimentKind::Evaluate => run_evaluate(config),
        ExperimentKind::PerturbAudit => run_perturb_audit(config),
        ExperimentKind::LearnAvg => run_learn_avg(config),
        ExperimentKind::LearnQ => run_learn_q(config),
        ExperimentKind::VerifyRational => run_verify_rational(config),
        ExperimentKind::ArpCheck => run_arp_check(config),
        ExperimentKind::GenModel => run_gen_model(config),
    }
}

fn policy_for<T: Scalar>(config: &ExperimentConfig, m: &Mdp<T>) -> Result<(Vec<ActionId>, StationaryPolicy<T>)> {
    let choices = config.policy.clone().unwrap_or_else(|| vec![0; m.num_states()]);
    let pi = StationaryPolicy::deterministic(&m.structure(), &choices).map_err(|e| config_error("policy", e.to_string()))?;
    Ok((choices, pi))
}

fn check_start<T: Scalar>(config: &ExperimentConfig, m: &Mdp<T>) -> Result<StateId> {
    let start = config.start();
    if start >= m.num_states() {
        return Err(config_error("start", format!("state {start} not in the model")));
    }
    Ok(start)
}

fn run_solve(config: &ExperimentConfig) -> Result<Parts> {
    let m: Mdp = config.load_model(0)?;
    let payload = match config.alpha {
        Some(alpha) => {
            let sol = optimal_discounted(&m, alpha, 1e-12)?;
            Payload::Solve {
                alpha: Some(alpha),
                values: sol.values,
                policy: sol.greedy,
                q_values: Some(sol.q_values.rows().to_vec()),
                gain: None,
            }
        }
        None => {
            let sol = optimal_average(&m)?;
            Payload::Solve {
                alpha: None,
                gain: Some(sol.optimal_gain()),
                values: sol.gain,
                policy: sol.policy,
                q_values: None,
            }
        }
    };
    Ok(Parts::new(payload))
}

fn run_evaluate(config: &ExperimentConfig) -> Result<Parts> {
    let alpha = require(config.alpha, "alpha")?;
    let m: Mdp = config.load_model(0)?;
    let start = check_start(config, &m)?;
    let (choices, pi) = policy_for(config, &m)?;
    let values = evaluate_discounted_all(&m, &pi, &alpha)?;
    let exact_values = if config.exact == Some(true) {
        let mq: Mdp<Rational> = config.load_model(0)?;
        let (_, piq) = policy_for(config, &mq)?;
        let v = evaluate_discounted_all(&mq, &piq, &exact(alpha))?;
        Some(v.iter().map(Scalar::to_exact_string).collect())
    } else {
        None
    };
    let unichain = is_unichain_from(&support_graph(&m, &pi)?, start)?;
    let average = if unichain {
        Some(evaluate_average(&m, &pi, start)?)
    } else {
        None
    };
    let mut parts = Parts::new(Payload::Evaluate {
        alpha,
        policy: choices,
        values,
        exact_values,
        average,
    });
    let alphas: Vec<f64> = (1..=6).map(|k| 1.0 - 10f64.powi(-k)).collect();
    let sweep = mertens_neyman_sweep(&m, &pi, start, &alphas)?;
    parts
        .series
        .insert("mertens-neyman".into(), sweep.into_iter().map(|(a, v)| [a, v]).collect());
    Ok(parts)
}

fn run_perturb_audit(config: &ExperimentConfig) -> Result<Parts> {
    let eps = require(config.eps, "eps")?;
    let seed = require(config.seed, "seed")?;
    let criterion = config.criterion.unwrap_or(AuditCriterion::Discounted);
    let trials = config.trials.unwrap_or(1) as u64;
    let samples = config.stochastic_samples.unwrap_or(100);
    let root = SimRng::new(seed);
    let results = (0..trials)
        .into_par_iter()
        .map(|k| {
            let m1: Mdp = config.load_model(k)?;
            let start = check_start(config, &m1)?;
            if criterion == AuditCriterion::Corollary && !rewards_in_unit_interval(&m1) {
                return Err(config_error("criterion", "corollary audit needs rewards in [0, 1]"));
            }
            let mut rng = root.split(k);
            let m2 = perturb_model(&m1, eps, &mut rng)?;
            let opts = AuditOptions {
                stochastic_samples: samples,
                seed: seed.wrapping_add(k),
            };
            let report = match criterion {
                AuditCriterion::Average => check_average_robustness_with(&m1, &m2, eps, start, &opts)?,
                _ => check_discounted_robustness_with(&m1, &m2, require(config.alpha, "alpha")?, eps, start, &opts)?,
            };
            Ok((k, report))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("trial,policy,v1,v2,gap,bound,holds\n");
    let mut summaries = Vec::with_capacity(results.len());
    for (k, report) in &results {
        for e in &report.entries {
            csv.push_str(&format!("{k},{},{:?},{:?},{:?},{:?},{}\n", e.policy, e.v1, e.v2, e.gap, e.bound, e.holds));
        }
        summaries.push(AuditSummary {
            trial: *k,
            policies: report.entries.len(),
            skipped: report.skipped,
            worst_gap: report.worst_gap,
            bound: report.entries.first().map_or(0.0, |e| e.bound),
            all_hold: report.all_hold(),
        });
    }
    let all_hold = summaries.iter().all(|s| s.all_hold);
    let violations: usize = results
        .iter()
        .map(|(_, r)| r.entries.iter().filter(|e| !e.holds).count())
        .sum();
    let mut parts = Parts::new(Payload::PerturbAudit {
        criterion,
        alpha: config.alpha.filter(|_| criterion != AuditCriterion::Average),
        eps,
        trials: summaries,
        all_hold,
    });
    parts.verdict = Some(Verdict {
        passed: all_hold,
        detail: format!("{violations} violation(s) over {trials} trial(s)"),
    });
    parts.side_files.insert("audit.csv".into(), csv);
    Ok(parts)
}

fn run_learn_avg(config: &ExperimentConfig) -> Result<Parts> {
    let seed = require(config.seed, "seed")?;
    let env: Mdp = config.load_model(0)?;
    let start = check_start(config, &env)?;
    let p_min = config.p_min.or_else(|| env.min_positive_prob()).unwrap_or(1.0);
    let w = config.reward_bound.unwrap_or_else(|| env.reward_sup_norm());
    let prior = PriorKnowledge::new(p_min, w).map_err(|e| config_error("p_min", e.to_string()))?;
    if !prior.admits(&env) {
        return Err(config_error("p_min", "the model violates the prior bounds"));
    }
    let episodes = config.episodes.unwrap_or(3);
    let schedule = match config.base {
        Some(base) => EpisodeSchedule::geometric(base as u128, episodes, w)?,
        None => episode_schedule(&prior, ModelSizes::of(&env.structure()), episodes)?,
    };
    let total = schedule.total_steps();
    let steps = match config.steps {
        Some(s) if s as u128 > total => {
            return Err(config_error("steps", format!("{s} exceeds the {total} scheduled steps")))
        }
        Some(s) => s,
        None if total <= STEP_LIMIT as u128 => total as u64,
        None => {
            return Err(config_error(
                "steps",
                format!("the schedule needs {total} steps; set steps or base"),
            ))
        }
    };
    let stride = config.stride.unwrap_or(1000);
    let opts = RunOptions {
        start,
        stride,
        record_trajectory: false,
    };
    let run = run_explore_exploit(&env, &prior, &schedule, steps, &mut SimRng::new(seed), &opts)?;
    let optimal_gain = optimal_average(&env)?.optimal_gain();
    let curve: Vec<[f64; 2]> = run
        .averages
        .iter()
        .filter(|(t, _)| t % stride == 0)
        .map(|&(t, a)| [t as f64, a])
        .collect();
    let boundaries = (1..=schedule.episodes.len() + 1)
        .filter_map(|n| schedule.boundary(n))
        .map(|b| b.min(u64::MAX as u128) as u64)
        .collect();
    let final_average = run.final_average();
    let mut parts = Parts::new(Payload::LearnAvg {
        steps: run.steps,
        optimal_gain,
        final_average,
        boundaries,
        episodes: run
            .snapshots
            .iter()
            .map(|s| EpisodeSummary {
                index: s.index,
                start: s.start,
                fallback: s.fallback,
                policy: s.policy.clone(),
                estimated_gain: s.estimated_gain,
            })
            .collect(),
    });
    if let Some(eps) = config.eps {
        parts.verdict = Some(Verdict {
            passed: final_average >= optimal_gain - eps,
            detail: format!("final average {final_average} against optimal gain {optimal_gain} - {eps}"),
        });
    }
    parts.series.insert("running-average".into(), curve);
    Ok(parts)
}

fn q_run(config: &ExperimentConfig, env: &Mdp, default_steps: u64, record: bool) -> Result<crate::learn_q::QLearningRun> {
    let alpha = require(config.alpha, "alpha")?;
    let seed = require(config.seed, "seed")?;
    let start = check_start(config, env)?;
    let schedule = config.schedule.unwrap_or(LearningRateSchedule::Harmonic);
    let mode = config
        .exploration
        .unwrap_or_else(|| ExplorationMode::default_for(&env.structure()));
    let opts = QRunOptions {
        start,
        q1: None,
        record_trajectory: record,
    };
    run_q_learning(env, alpha, &schedule, &mode, config.steps.unwrap_or(default_steps), &mut SimRng::new(seed), &opts)
}

fn run_learn_q(config: &ExperimentConfig) -> Result<Parts> {
    let env: Mdp = config.load_model(0)?;
    let alpha = require(config.alpha, "alpha")?;
    let record = config.trajectory == Some(true);
    let run = q_run(config, &env, 100_000, record)?;
    let star = optimal_discounted(&env, alpha, 1e-12)?.q_values;
    let curve: Vec<[f64; 2]> = run
        .snapshots
        .iter()
        .map(|s| [s.step as f64, s.q.sup_distance(&star)])
        .collect();
    let final_distance = run.state.q.sup_distance(&star);
    let mut parts = Parts::new(Payload::LearnQ {
        alpha,
        steps: run.state.t,
        final_distance,
        final_q: run.state.q.rows().to_vec(),
        optimal_q: star.rows().to_vec(),
    });
    if let (Some(traj), Some(gammas)) = (&run.trajectory, &run.gammas) {
        let mut lines = String::new();
        for (k, (s, g)) in traj.steps.iter().zip(gammas).enumerate() {
            let row = serde_json::json!({
                "t": k + 1, "state": s.state, "action": s.action,
                "reward": s.reward, "next": s.next, "gamma": g,
            });
            lines.push_str(&row.to_string());
            lines.push('\n');
        }
        parts.side_files.insert("trajectory.jsonl".into(), lines);
    }
    if let Some(eps) = config.eps {
        parts.verdict = Some(Verdict {
            passed: final_distance <= eps,
            detail: format!("sup distance {final_distance} against {eps}"),
        });
    }
    parts.series.insert("q-distance".into(), curve);
    Ok(parts)
}

/// Policies checked by `verify-rational`: the configured one, else all
/// deterministic policies up to this many.
const VERIFY_POLICY_LIMIT: u128 = 64;

fn run_verify_rational(config: &ExperimentConfig) -> Result<Parts> {
    let alpha = exact(require(config.alpha, "alpha")?);
    let m: Mdp<Rational> = config.load_model(0)?;
    let structure = m.structure();
    let policies: Vec<Vec<ActionId>> = match &config.policy {
        Some(p) => vec![p.clone()],
        None if structure.policy_count() <= VERIFY_POLICY_LIMIT => m.deterministic_policies().collect(),
        None => return Err(config_error("policy", "too many deterministic policies; name one")),
    };
    let one = Rational::from_ratio(1, 1);
    let mut entries = Vec::new();
    for choices in policies {
        let pi = StationaryPolicy::deterministic(&structure, &choices).map_err(|e| config_error("policy", e.to_string()))?;
        let values = evaluate_discounted_all(&m, &pi, &alpha)?;
        let chain = crate::mdp::induce_chain(&m, &pi)?;
        let columns = (0..m.num_states())
            .map(|j| occupancy_column(&chain, j, &alpha))
            .collect::<Result<Vec<_>>>()?;
        for (i, v) in values.iter().enumerate() {
            let direct = (one.clone() - alpha.clone()) * v;
            let fw = fw_discounted_value(&m, &pi, &alpha, i)?.value();
            let row_sum = columns.iter().fold(Rational::from_ratio(0, 1), |acc, col| acc + &col[i]);
            entries.push(IdentityEntry {
                policy: choices.clone(),
                state: i,
                equal: direct == fw,
                direct: direct.to_exact_string(),
                spanning_maps: fw.to_exact_string(),
                occupancy_sum_is_one: row_sum == one,
            });
        }
    }
    let all_equal = entries.iter().all(|e| e.equal && e.occupancy_sum_is_one);
    let mut parts = Parts::new(Payload::VerifyRational {
        alpha: alpha.to_exact_string(),
        entries,
        all_equal,
    });
    parts.verdict = Some(Verdict {
        passed: all_equal,
        detail: "exact agreement of linear-solve and spanning-map values".into(),
    });
    Ok(parts)
}

fn run_arp_check(config: &ExperimentConfig) -> Result<Parts> {
    let env: Mdp = config.load_model(0)?;
    let alpha = require(config.alpha, "alpha")?;
    let run = q_run(config, &env, 200, true)?;
    let traj = run.trajectory.as_ref().expect("trajectory recorded");
    let schedule = run.schedule;
    let structure = env.structure();
    let top = traj.len() + 1;

    let gammas = run.gammas.clone().expect("rates recorded");
    let q1 = QTable::zeros(&structure);
    let online = replay_q_learning(traj, &gammas, &q1, &alpha)?;
    let levels = solve_arp(&build_arp_with_gammas(traj, &gammas, &q1, top)?, &alpha)?;
    let max_float_deviation = online
        .iter()
        .zip(&levels)
        .map(|(a, b)| a.sup_distance(b))
        .fold(0.0, f64::max);

    let alpha_q = exact(alpha);
    let gammas_q = trajectory_gammas::<Rational>(traj, &structure, &schedule)?;
    let q1_q = QTable::<Rational>::zeros(&structure);
    let online_q = replay_q_learning(traj, &gammas_q, &q1_q, &alpha_q)?;
    let levels_q = solve_arp(&build_arp_with_gammas(traj, &gammas_q, &q1_q, top)?, &alpha_q)?;
    let exact_match = online_q == levels_q;

    let mut times: Vec<usize> = std::iter::successors(Some(1usize), |t| Some(t * 2)).take_while(|&t| t < top).collect();
    times.push(top);
    let eps = config.eps.unwrap_or(0.05);
    let report = check_qhat_convergence(&env, traj, &schedule, &q1, alpha, eps, &times)?;
    let qhat: Vec<QhatRow> = report
        .points
        .iter()
        .map(|p| QhatRow {
            t: p.t,
            qhat_distance: p.qhat_distance,
            q_distance: p.q_distance,
            kernel_ratio: p.kernel_ratio,
            max_bottom_mass: p.max_bottom_mass,
        })
        .collect();
    let mut parts = Parts::new(Payload::ArpCheck {
        alpha,
        steps: traj.len() as u64,
        levels: top,
        max_float_deviation,
        exact_match,
        cutoff_horizon: report.cutoff_horizon,
        qhat: qhat.clone(),
    });
    parts.series.insert(
        "arp-kernel-ratio".into(),
        qhat.iter().map(|r| [r.t as f64, r.kernel_ratio]).collect(),
    );
    parts.series.insert(
        "qhat-distance".into(),
        qhat.iter().map(|r| [r.t as f64, r.qhat_distance]).collect(),
    );
    parts.verdict = Some(Verdict {
        passed: exact_match && max_float_deviation <= 1e-12,
        detail: format!("float deviation {max_float_deviation:e}, exact match {exact_match}"),
    });
    Ok(parts)
}

fn run_gen_model(config: &ExperimentConfig) -> Result<Parts> {
    let m: Mdp<Rational> = config.load_model(0)?;
    let file = ModelFile::from_mdp(&m);
    let mut parts = Parts::new(Payload::GenModel {
        communicating: is_communicating(&m),
        model: file,
    });
    parts
        .side_files
        .insert("model.json".into(), crate::model_file::model_to_json(&m)? + "\n");
    Ok(parts)
}

fn series_csv(points: &[[f64; 2]]) -> String {
    let mut out = String::from("x,y\n");
    for [x, y] in points {
        out.push_str(&format!("{x:?},{y:?}\n"));
    }
    out
}

/// Two-column CSV of one named series of `record`.
pub fn emit_plot_data(record: &RunRecord, series: &str) -> Result<String> {
    match record.series.get(series) {
        Some(points) if !series.is_empty() => Ok(series_csv(points)),
        _ => {
            let names: Vec<&str> = record.series.keys().map(String::as_str).collect();
            Err(config_error(
                "series",
                format!("unknown series `{series}`; available: {}", names.join(", ")),
            ))
        }
    }
}
