//! Acceptance criteria 1-16, one PASS/FAIL line each.
//!
//! Criteria 11 and 13 are known to be out of reach (see README); for them the
//! target checks that the failure is the predicted one, so an unexpected
//! pass is reported as a failure of the analysis.

use std::process::ExitCode;
use std::time::Instant;

use pkmdp::generate::{generate_model, GeneratorSpec};
use pkmdp::graph::{is_unichain_from, support_graph};
use pkmdp::harness::{self, AuditCriterion, ExperimentConfig, ExperimentKind, ModelSource, Payload, RunRecord};
use pkmdp::learn_average::{
    k1_threshold, prod_exp_holds, run_explore_exploit, tail_audit, tracol_constants, EpisodeSchedule, RunOptions,
};
use pkmdp::learn_q::{
    build_arp_with_gammas, replay_q_learning, run_q_learning, solve_arp, trajectory_gammas, ExplorationMode,
    LearningRateSchedule, QRunOptions,
};
use pkmdp::metrics::{check_distance_relation, find_ratio_triangle_violation, ratio_distance, total_variation, PartialValuation};
use pkmdp::rational_forms::{
    check_poly_ratio_bound, duplicate_chain, fw_discounted_value, fw_hitting_probability, hitting_probabilities,
    Polynomial,
};
use pkmdp::solvers::{evaluate_average, evaluate_discounted, evaluate_discounted_all, occupancy_column, optimal_average, optimal_discounted};
use pkmdp::{MarkovChain, Mdp, PriorKnowledge, QTable, Rational, Scalar, SimRng, StationaryPolicy};
use rayon::prelude::*;

type Q = Rational;

fn q(n: i64, d: i64) -> Q {
    Q::from_ratio(n, d)
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Random chain with rational rows of 1 to 3 successors.
fn random_chain(rng: &mut SimRng, n: usize) -> MarkovChain<Q> {
    let rows = (0..n)
        .map(|_| {
            let k = 1 + rng.below(n.min(3));
            let mut weights = vec![0i64; n];
            for _ in 0..k {
                weights[rng.below(n)] += 1 + rng.below(4) as i64;
            }
            let total: i64 = weights.iter().sum();
            weights.iter().map(|&w| q(w, total)).collect()
        })
        .collect();
    MarkovChain::from_transitions(rows).unwrap()
}

fn random_policy(rng: &mut SimRng, m: &Mdp<Q>) -> StationaryPolicy<Q> {
    let weights = (0..m.num_states())
        .map(|i| {
            let w: Vec<i64> = (0..m.num_actions(i)).map(|_| rng.below(4) as i64).collect();
            let w = if w.iter().all(|&x| x == 0) { vec![1; w.len()] } else { w };
            let total: i64 = w.iter().sum();
            w.iter().map(|&x| q(x, total)).collect()
        })
        .collect();
    StationaryPolicy::new(weights).unwrap()
}

fn spec(states: usize, actions: usize, p_min: f64, out_degree: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec::new(states, actions, p_min, out_degree, seed)
}

fn criterion_1() -> Outcome {
    let mut rng = SimRng::new(1);
    let mut instances = 0;
    let mut mismatches = 0;
    let hand = [
        MarkovChain::from_transitions(vec![vec![q(3, 10), q(7, 10)], vec![q(0, 1), q(1, 1)]]).unwrap(),
        MarkovChain::from_transitions(vec![
            vec![q(0, 1), q(1, 1), q(0, 1)],
            vec![q(1, 2), q(0, 1), q(1, 2)],
            vec![q(0, 1), q(0, 1), q(1, 1)],
        ])
        .unwrap(),
    ];
    let mut cases: Vec<(MarkovChain<Q>, Vec<usize>)> = hand.into_iter().map(|c| {
        let last = c.num_states() - 1;
        (c, vec![last])
    }).collect();
    while cases.len() < 202 {
        let n = 2 + rng.below(4);
        let c = random_chain(&mut rng, n);
        let mut targets = vec![rng.below(n)];
        if rng.below(2) == 1 {
            let t = rng.below(n);
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        if hitting_probabilities(&c, &targets).is_ok() {
            cases.push((c, targets));
        }
    }
    for (c, targets) in &cases {
        let direct = hitting_probabilities(c, targets).unwrap();
        instances += 1;
        for j in (0..c.num_states()).filter(|j| !targets.contains(j)) {
            for (col, &k) in targets.iter().enumerate() {
                let fw = fw_hitting_probability(c, targets, j, k).unwrap().value();
                if fw != direct[j][col] {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{instances} chains, {mismatches} mismatches"))
}

fn criterion_2() -> Outcome {
    let mut rng = SimRng::new(2);
    let mut instances = 0;
    let mut mismatches = 0;
    for alpha in [q(1, 2), q(3, 4)] {
        for seed in 0..30 {
            let n = 1 + (seed as usize % 3);
            let mut s = spec(n, 2, 0.25, 2, seed);
            s.reward_min = -1.0;
            let m: Mdp<Q> = generate_model(&s).unwrap();
            let pi = random_policy(&mut rng, &m);
            let v = evaluate_discounted_all(&m, &pi, &alpha).unwrap();
            for (i, vi) in v.iter().enumerate() {
                let lhs = (q(1, 1) - alpha.clone()) * vi;
                if lhs != fw_discounted_value(&m, &pi, &alpha, i).unwrap().value() {
                    mismatches += 1;
                }
            }
            instances += 1;
        }
    }
    outcome(mismatches == 0, format!("{instances} (model, policy) pairs, {mismatches} mismatches"))
}

fn criterion_3() -> Outcome {
    let mut rng = SimRng::new(3);
    let mut exact_bad = 0;
    let mut float_worst: f64 = 0.0;
    let mut dup_bad = 0;
    let mut chains = 0;
    for _ in 0..60 {
        let n = 1 + rng.below(4);
        let c = random_chain(&mut rng, n);
        let alpha = q(1 + rng.below(9) as i64, 10);
        let columns: Vec<Vec<Q>> = (0..n).map(|j| occupancy_column(&c, j, &alpha).unwrap()).collect();
        let cf = c.to_f64();
        let af = alpha.to_f64();
        let columns_f: Vec<Vec<f64>> = (0..n).map(|j| occupancy_column(&cf, j, &af).unwrap()).collect();
        let dup = duplicate_chain(&c, &alpha).unwrap();
        let copies: Vec<usize> = (n..2 * n).collect();
        let exit = hitting_probabilities(&dup, &copies).unwrap();
        for i in 0..n {
            let sum = columns.iter().fold(q(0, 1), |acc, col| acc + &col[i]);
            if sum != q(1, 1) {
                exact_bad += 1;
            }
            let sum_f: f64 = columns_f.iter().map(|col| col[i]).sum();
            float_worst = float_worst.max((sum_f - 1.0).abs());
            for j in 0..n {
                let fw = fw_hitting_probability(&dup, &copies, i, n + j).unwrap().value();
                if exit[i][j] != columns[j][i] || fw != columns[j][i] {
                    dup_bad += 1;
                }
            }
        }
        chains += 1;
    }
    outcome(
        exact_bad == 0 && float_worst <= 1e-9 && dup_bad == 0,
        format!("{chains} chains: {exact_bad} exact row sums off, float error {float_worst:.1e}, {dup_bad} copy-hitting mismatches"),
    )
}

fn audit(criterion: AuditCriterion, alpha: Option<f64>, eps: f64, trials: usize, reward: (f64, f64), seed: u64) -> (usize, usize, usize) {
    let mut g = spec(4, 2, 0.1, 3, seed);
    g.reward_min = reward.0;
    g.reward_max = reward.1;
    let config = ExperimentConfig {
        kind: Some(ExperimentKind::PerturbAudit),
        model: Some(ModelSource::Generate(g)),
        seed: Some(seed),
        alpha,
        eps: Some(eps),
        criterion: Some(criterion),
        trials: Some(trials),
        stochastic_samples: Some(100),
        ..Default::default()
    };
    let record = harness::run(&config).unwrap().record;
    match record.payload {
        Payload::PerturbAudit { trials, .. } => {
            let policies = trials.iter().map(|t| t.policies).sum();
            let bad = trials.iter().filter(|t| !t.all_hold).count();
            let skipped = trials.iter().map(|t| t.skipped).sum();
            (policies, bad, skipped)
        }
        _ => unreachable!(),
    }
}

fn robustness_criterion(criterion: AuditCriterion, reward: (f64, f64)) -> Outcome {
    let mut policies = 0;
    let mut bad = 0;
    let mut skipped = 0;
    let mut seed = 1000;
    let alphas: &[Option<f64>] = match criterion {
        AuditCriterion::Average => &[None, None],
        _ => &[Some(0.5), Some(0.9)],
    };
    for &alpha in alphas {
        for eps in [0.1, 0.5] {
            let (p, b, s) = audit(criterion, alpha, eps, 50, reward, seed);
            policies += p;
            bad += b;
            skipped += s;
            seed += 50;
        }
    }
    outcome(
        bad == 0,
        format!("200 pairs, {policies} policy checks ({skipped} non-unichain skipped), {bad} pairs with a violation"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = SimRng::new(7);
    let alpha = 1.0 - 1e-6;
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    let mut seed = 0;
    while pairs < 20 {
        seed += 1;
        let m: Mdp = generate_model(&spec(5, 2, 0.1, 2, seed)).unwrap();
        let choices: Vec<usize> = (0..5).map(|_| rng.below(2)).collect();
        let pi = StationaryPolicy::deterministic(&m.structure(), &choices).unwrap();
        if !is_unichain_from(&support_graph(&m, &pi).unwrap(), 0).unwrap() {
            continue;
        }
        let phi = evaluate_average(&m, &pi, 0).unwrap();
        let v = evaluate_discounted(&m, &pi, &alpha, 0).unwrap();
        worst = worst.max(((1.0 - alpha) * v - phi).abs());
        pairs += 1;
    }
    outcome(worst <= 1e-4, format!("{pairs} unichain pairs, worst |(1-a)v - phi| = {worst:.2e}"))
}

fn criterion_8() -> Outcome {
    let mut rng = SimRng::new(8);
    let mut violations = 0;
    let mut degrees = [0usize; 7];
    for _ in 0..500 {
        let vars = 1 + rng.below(4);
        let mut poly = Polynomial::<Q>::zero(vars);
        for _ in 0..1 + rng.below(5) {
            let mut exps = vec![0u32; vars];
            let total = rng.below(7);
            for _ in 0..total {
                exps[rng.below(vars)] += 1;
            }
            poly.add_term(exps, q(rng.below(8) as i64, 1 + rng.below(5) as i64)).unwrap();
        }
        degrees[poly.degree() as usize] += 1;
        let eps = q(1 + rng.below(10) as i64, 10);
        let a: Vec<Q> = (0..vars).map(|_| q(1 + rng.below(20) as i64, 1 + rng.below(10) as i64)).collect();
        // b = a * s with s spread over [1/(1+eps), 1+eps].
        let b: Vec<Q> = a
            .iter()
            .map(|x| {
                let u = q(rng.below(11) as i64, 10);
                let up = q(1, 1) + &eps;
                let low = q(1, 1) / up.clone();
                let s = low.clone() + &(u * &(up - low));
                x.clone() * &s
            })
            .collect();
        if !check_poly_ratio_bound(&poly, &a, &b, &eps).unwrap() {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("500 polynomials (degrees {degrees:?}), {violations} violations"))
}

fn criterion_9() -> Outcome {
    let mut rng = SimRng::new(9);
    let mut violations = 0;
    for k in 0..1000 {
        let m1: Mdp = generate_model(&spec(3 + k % 3, 2, 0.05, 3, k as u64)).unwrap();
        let transitions = m1
            .transitions()
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|row| {
                        let w: Vec<f64> = row.iter().map(|&p| if p > 0.0 { 0.05 + rng.uniform() } else { 0.0 }).collect();
                        let t: f64 = w.iter().sum();
                        w.iter().map(|x| x / t).collect()
                    })
                    .collect()
            })
            .collect();
        let m2 = Mdp::new(transitions, m1.rewards().to_vec()).unwrap();
        let p_min = m1.min_positive_prob().unwrap().min(m2.min_positive_prob().unwrap());
        if !check_distance_relation(&m1, &m2, &p_min).unwrap() {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("1000 kernel pairs, {violations} violations"))
}

fn q_env() -> Mdp {
    generate_model(&spec(3, 2, 0.1, 3, 11)).unwrap()
}

fn criterion_10() -> Outcome {
    let m = q_env();
    let structure = m.structure();
    let mut float_worst: f64 = 0.0;
    let mut exact_bad = 0;
    let mut runs = 0;
    for schedule in [LearningRateSchedule::Harmonic, LearningRateSchedule::Polynomial { omega: 0.7 }] {
        for seed in 0..20 {
            let run = run_q_learning(
                &m,
                0.9,
                &schedule,
                &ExplorationMode::default_for(&structure),
                200,
                &mut SimRng::new(seed),
                &QRunOptions::default(),
            )
            .unwrap();
            let traj = run.trajectory.as_ref().unwrap();
            let gammas = run.gammas.as_ref().unwrap();
            let q1 = QTable::zeros(&structure);
            let online = replay_q_learning(traj, gammas, &q1, &0.9).unwrap();
            assert_eq!(online.last().unwrap(), &run.state.q);
            let levels = solve_arp(&build_arp_with_gammas(traj, gammas, &q1, 201).unwrap(), &0.9).unwrap();
            for (a, b) in online.iter().zip(&levels) {
                float_worst = float_worst.max(a.sup_distance(b));
            }
            let gq = trajectory_gammas::<Q>(traj, &structure, &schedule).unwrap();
            let q1q = QTable::<Q>::zeros(&structure);
            let alpha = q(9, 10);
            let online_q = replay_q_learning(traj, &gq, &q1q, &alpha).unwrap();
            let levels_q = solve_arp(&build_arp_with_gammas(traj, &gq, &q1q, 201).unwrap(), &alpha).unwrap();
            if online_q != levels_q {
                exact_bad += 1;
            }
            runs += 1;
        }
    }
    outcome(
        float_worst <= 1e-12 && exact_bad == 0,
        format!("{runs} trajectories x 201 levels: float deviation {float_worst:.1e}, {exact_bad} exact mismatches"),
    )
}

fn criterion_11() -> Outcome {
    let m = q_env();
    let star = optimal_discounted(&m, 0.9, 1e-12).unwrap().q_values;
    let mode = ExplorationMode::default_for(&m.structure());
    let opts = QRunOptions {
        record_trajectory: false,
        ..QRunOptions::default()
    };
    let distances: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let run = run_q_learning(&m, 0.9, &LearningRateSchedule::Harmonic, &mode, 1_000_000, &mut SimRng::new(seed), &opts)
                .unwrap();
            run.state.q.sup_distance(&star)
        })
        .collect();
    let good = distances.iter().filter(|&&d| d <= 0.05).count();
    let best = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = distances.iter().copied().fold(0.0, f64::max);
    outcome(
        good >= 18,
        format!("{good}/20 seeds within 0.05 (distances {best:.3}..{worst:.3})"),
    )
}

fn two_state_env() -> Mdp {
    Mdp::new(
        vec![
            vec![vec![0.75, 0.25], vec![0.25, 0.75]],
            vec![vec![0.25, 0.75], vec![0.75, 0.25]],
        ],
        vec![vec![0.0, 0.0], vec![1.0, 0.5]],
    )
    .unwrap()
}

fn explore_exploit(env: &Mdp, base: u128, episodes: u32, seeds: u64, p_min: f64) -> (f64, Vec<f64>) {
    let phi = optimal_average(env).unwrap().optimal_gain();
    let prior = PriorKnowledge::new(p_min, 1.0).unwrap();
    let schedule = EpisodeSchedule::geometric(base, episodes, 1.0).unwrap();
    let total = schedule.total_steps() as u64;
    let opts = RunOptions {
        stride: 1 << 20,
        ..RunOptions::default()
    };
    let finals = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            run_explore_exploit(env, &prior, &schedule, total, &mut SimRng::new(seed), &opts)
                .unwrap()
                .final_average()
        })
        .collect();
    (phi, finals)
}

fn criterion_12() -> Outcome {
    let (phi2, finals2) = explore_exploit(&two_state_env(), 2, 5, 20, 0.25);
    let good2 = finals2.iter().filter(|&&a| a >= phi2 - 0.05).count();
    let env4: Mdp = generate_model(&spec(4, 2, 0.2, 2, 12)).unwrap();
    // The run ends at S_5, the start of episode 5.
    let (phi4, finals4) = explore_exploit(&env4, 4, 4, 50, 0.2);
    let good4 = finals4.iter().filter(|&&a| a >= phi4 - 0.125).count();
    outcome(
        good2 >= 18 && good4 >= 45,
        format!("2-state: {good2}/20 within 0.05 of {phi2:.3}; 4-state: {good4}/50 within 0.125 of {phi4:.3} at S_5"),
    )
}

/// `(prod-exp ok, K1 found per eps)`.
fn criterion_13() -> (bool, Vec<Option<u64>>) {
    let prod = (1..=60).all(|t| prod_exp_holds(t).unwrap());
    let k1 = [0.5, 0.25, 0.1]
        .iter()
        .map(|&eps| k1_threshold(&tracol_constants(3, 0.5, eps).unwrap(), eps))
        .collect();
    (prod, k1)
}

fn criterion_14() -> Outcome {
    let c = MarkovChain::new(
        vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]],
        vec![1.0, 0.0, 0.5],
    )
    .unwrap();
    let eps = 0.8;
    let consts = tracol_constants(3, 0.5, eps).unwrap();
    let audit = tail_audit(&c, 0, &consts, 1.0, 2 * consts.k0, 10_000, 14).unwrap();
    outcome(
        audit.holds,
        format!(
            "T = {}, rate {:.4} against bound {:.4} + 3 sigma {:.4}",
            audit.horizon,
            audit.rate,
            audit.bound,
            3.0 * audit.sigma
        ),
    )
}

fn criterion_15() -> Outcome {
    let mut rng = SimRng::new(15);
    let mut violations = 0;
    let point = |rng: &mut SimRng| PartialValuation::total((0..4).map(|_| q(1 + rng.below(100) as i64, 100)).collect::<Vec<Q>>());
    for _ in 0..10_000 {
        let (f, g, h) = (point(&mut rng), point(&mut rng), point(&mut rng));
        let zero = q(0, 1);
        let fg = total_variation(&f, &g);
        let ok = total_variation(&f, &f) == zero
            && fg == total_variation(&g, &f)
            && (f == g || fg > zero)
            && total_variation(&f, &h) <= fg + &total_variation(&g, &h);
        if !ok {
            violations += 1;
        }
    }
    let counterexample = find_ratio_triangle_violation().map(|[f, g, h]| {
        let direct = ratio_distance(&f, &h);
        let detour = ratio_distance(&f, &g) + ratio_distance(&g, &h);
        (direct.clone() > detour.clone(), direct, detour)
    });
    let found = matches!(counterexample, Some((true, _, _)));
    let detail = match &counterexample {
        Some((_, d, s)) => format!("ratio triangle counterexample {d} > {s}"),
        None => "no ratio counterexample".into(),
    };
    outcome(violations == 0 && found, format!("10^4 triples, {violations} metric violations; {detail}"))
}

fn criterion_16() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let m: Mdp<Q> = generate_model(&spec(3, 2, 0.25, 2, 16)).unwrap();
    pkmdp::model_file::save_model(&m, &model).unwrap();
    let base = |kind| ExperimentConfig {
        kind: Some(kind),
        model: Some(ModelSource::Path(model.clone())),
        seed: Some(16),
        alpha: Some(0.9),
        ..Default::default()
    };
    let configs = vec![
        base(ExperimentKind::Solve),
        ExperimentConfig { exact: Some(true), ..base(ExperimentKind::Evaluate) },
        ExperimentConfig {
            eps: Some(0.2),
            trials: Some(3),
            stochastic_samples: Some(10),
            model: Some(ModelSource::Generate(spec(4, 2, 0.1, 3, 5))),
            ..base(ExperimentKind::PerturbAudit)
        },
        ExperimentConfig {
            base: Some(2),
            episodes: Some(3),
            stride: Some(100),
            ..base(ExperimentKind::LearnAvg)
        },
        ExperimentConfig { steps: Some(5000), trajectory: Some(true), ..base(ExperimentKind::LearnQ) },
        ExperimentConfig { alpha: Some(0.5), ..base(ExperimentKind::VerifyRational) },
        ExperimentConfig { steps: Some(100), ..base(ExperimentKind::ArpCheck) },
        ExperimentConfig {
            model: Some(ModelSource::Generate(spec(5, 2, 0.1, 3, 3))),
            ..base(ExperimentKind::GenModel)
        },
    ];
    let schema = harness::record_schema();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let mut differing = Vec::new();
    let mut invalid = Vec::new();
    for c in &configs {
        let a = harness::run(c).unwrap();
        let b = harness::run(c).unwrap();
        let (ja, jb) = (a.record.to_json().unwrap(), b.record.to_json().unwrap());
        let kind = format!("{:?}", c.kind.unwrap());
        if ja != jb || a.side_files != b.side_files {
            differing.push(kind.clone());
        }
        let value: serde_json::Value = serde_json::from_str(&ja).unwrap();
        let round = RunRecord::from_json(&ja).unwrap().to_json().unwrap();
        if !validator.is_valid(&value) || round != ja {
            invalid.push(kind);
        }
    }
    outcome(
        differing.is_empty() && invalid.is_empty(),
        format!("{} kinds; differing {differing:?}; schema or round-trip failures {invalid:?}", configs.len()),
    )
}

fn main() -> ExitCode {
    let mut unexpected = Vec::new();
    let mut failed = Vec::new();
    let mut report = |n: u32, o: Outcome, expected_fail: bool, clock: Instant| {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {n:>2}: {verdict}  {} [{:.1}s]", o.detail, clock.elapsed().as_secs_f64());
        if !o.passed {
            failed.push(n);
        }
        if o.passed == expected_fail {
            unexpected.push(n);
        }
    };
    macro_rules! run {
        ($n:expr, $f:expr) => {{
            let clock = Instant::now();
            report($n, $f, false, clock);
        }};
    }
    run!(1, criterion_1());
    run!(2, criterion_2());
    run!(3, criterion_3());
    run!(4, robustness_criterion(AuditCriterion::Discounted, (-2.0, 3.0)));
    run!(5, robustness_criterion(AuditCriterion::Corollary, (0.0, 1.0)));
    run!(6, robustness_criterion(AuditCriterion::Average, (-2.0, 3.0)));
    run!(7, criterion_7());
    run!(8, criterion_8());
    run!(9, criterion_9());
    run!(10, criterion_10());
    {
        // Harmonic rates at discount 0.9 shrink the error roughly like
        // n^-(1-0.9); 10^6 steps cannot reach 0.05.
        let clock = Instant::now();
        report(11, criterion_11(), true, clock);
    }
    run!(12, criterion_12());
    {
        // K1 needs b eps^2 > ln 2, faster than any valid tail bound decays.
        let clock = Instant::now();
        let (prod, k1) = criterion_13();
        let o = outcome(
            prod && k1.iter().all(Option::is_some),
            format!("prod-exp holds on T in 1..=60: {prod}; K1 for eps 0.5, 0.25, 0.1: {k1:?}"),
        );
        // Expected to fail only through K1; a prod-exp failure is unexpected.
        let expected_fail = prod && k1.iter().all(Option::is_none);
        report(13, o, expected_fail, clock);
    }
    run!(14, criterion_14());
    run!(15, criterion_15());
    run!(16, criterion_16());
    println!(
        "{} of 16 criteria pass; failing: {failed:?}; outcomes differing from the analysis: {unexpected:?}",
        16 - failed.len()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
