//! Random communicating models on a grid of `1/units`.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mdp::Mdp;
use crate::rng::SimRng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub states: usize,
    pub actions: usize,
    /// Lower bound on every nonzero transition probability.
    pub p_min: f64,
    /// Support size of every row, capped at `states`.
    pub out_degree: usize,
    #[serde(default)]
    pub reward_min: f64,
    #[serde(default = "one")]
    pub reward_max: f64,
    /// Probabilities and rewards are multiples of `1/units`.
    #[serde(default = "default_units")]
    pub units: u32,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_units() -> u32 {
    840
}

impl GeneratorSpec {
    pub fn new(states: usize, actions: usize, p_min: f64, out_degree: usize, seed: u64) -> Self {
        Self {
            states,
            actions,
            p_min,
            out_degree,
            reward_min: 0.0,
            reward_max: 1.0,
            units: default_units(),
            seed,
        }
    }

    fn min_units(&self) -> u64 {
        (self.p_min * self.units as f64 - 1e-9).ceil().max(1.0) as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.states == 0 || self.actions == 0 || self.out_degree == 0 {
            return Err(invalid("states/actions/out_degree", "must be positive"));
        }
        if !(self.p_min > 0.0 && self.p_min <= 1.0) {
            return Err(invalid("p_min", format!("{} not in (0, 1]", self.p_min)));
        }
        if self.units == 0 {
            return Err(invalid("units", "must be positive"));
        }
        if !(self.reward_min <= self.reward_max) || !self.reward_min.is_finite() || !self.reward_max.is_finite() {
            return Err(invalid("reward_min", "reward range is empty"));
        }
        let d = self.out_degree.min(self.states) as u64;
        if d * self.min_units() > self.units as u64 {
            return Err(Error::Precondition(format!(
                "{d} successors of probability at least {} do not fit in one row",
                self.p_min
            )));
        }
        Ok(())
    }
}

fn permutation(n: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        p.swap(k, rng.below(k + 1));
    }
    p
}

/// A random model in which one action per state follows a random
/// Hamiltonian cycle, so every state reaches every other.
pub fn generate_model<T: Scalar>(spec: &GeneratorSpec) -> Result<Mdp<T>> {
    spec.validate()?;
    let mut rng = SimRng::new(spec.seed);
    let n = spec.states;
    let d = spec.out_degree.min(n);
    let units = spec.units as u64;
    let base = spec.min_units();
    let cycle = permutation(n, &mut rng);
    let mut successor = vec![0; n];
    for k in 0..n {
        successor[cycle[k]] = cycle[(k + 1) % n];
    }
    let lo = (spec.reward_min * units as f64).ceil() as i64;
    let hi = (spec.reward_max * units as f64).floor() as i64;
    if lo > hi {
        return Err(invalid("reward_min", "no grid point in the reward range"));
    }
    let mut transitions = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    for i in 0..n {
        let cycle_action = rng.below(spec.actions);
        let mut rows = Vec::with_capacity(spec.actions);
        let mut rrow = Vec::with_capacity(spec.actions);
        for a in 0..spec.actions {
            let mut support = Vec::with_capacity(d);
            if a == cycle_action {
                support.push(successor[i]);
            }
            for j in permutation(n, &mut rng) {
                if support.len() == d {
                    break;
                }
                if !support.contains(&j) {
                    support.push(j);
                }
            }
            let mut counts = vec![0u64; n];
            for &j in &support {
                counts[j] = base;
            }
            for _ in 0..units - base * d as u64 {
                counts[support[rng.below(d)]] += 1;
            }
            rows.push(counts.iter().map(|&c| T::from_ratio(c as i64, units as i64)).collect());
            let r = lo + rng.below((hi - lo) as usize + 1) as i64;
            rrow.push(T::from_ratio(r, units as i64));
        }
        transitions.push(rows);
        rewards.push(rrow);
    }
    Mdp::new(transitions, rewards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::is_communicating;
    use crate::mdp::PriorKnowledge;
    use crate::Rational;

    #[test]
    fn out_degree_one_is_deterministic() {
        let m: Mdp = generate_model(&GeneratorSpec::new(5, 2, 1.0, 1, 3)).unwrap();
        assert!(m.transitions().iter().flatten().flatten().all(|&p| p == 0.0 || p == 1.0));
        assert!(is_communicating(&m));
    }

    #[test]
    fn generated_models_communicate() {
        for seed in 0..100 {
            let spec = GeneratorSpec::new(6, 2, 0.1, 3, seed);
            let m: Mdp<Rational> = generate_model(&spec).unwrap();
            assert!(m.validate().is_empty());
            assert!(is_communicating(&m));
            assert!(PriorKnowledge::new(0.1, 1.0).unwrap().admits(&m));
        }
    }

    #[test]
    fn exact_and_float_agree() {
        let spec = GeneratorSpec::new(4, 3, 1.0 / 3.0, 3, 9);
        let a: Mdp = generate_model(&spec).unwrap();
        let b: Mdp<Rational> = generate_model(&spec).unwrap();
        assert_eq!(a, b.to_f64());
    }

    #[test]
    fn infeasible_spec() {
        assert!(generate_model::<f64>(&GeneratorSpec::new(4, 2, 0.4, 3, 0)).is_err());
    }
}
