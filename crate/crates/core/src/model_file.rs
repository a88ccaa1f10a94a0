//! JSON model files.
//!
//! Entries are JSON numbers or strings such as `"1/3"`; strings keep exact
//! values exact when loaded as rationals.

use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum Entry {
    Number(f64),
    Text(String),
}

impl Entry {
    fn parse<T: Scalar>(&self) -> Option<T> {
        match self {
            Entry::Number(x) if x.is_finite() => T::parse_decimal(&format!("{x:?}")),
            Entry::Number(_) => None,
            Entry::Text(s) => T::parse_decimal(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<Vec<String>>>,
    /// `transitions[i][a][j]`.
    pub transitions: Vec<Vec<Vec<Entry>>>,
    /// `rewards[i][a]`.
    pub rewards: Vec<Vec<Entry>>,
}

impl ModelFile {
    pub fn from_mdp<T: Scalar>(m: &Mdp<T>) -> Self {
        let text = |x: &T| {
            if T::EXACT {
                Entry::Text(x.to_exact_string())
            } else {
                Entry::Number(x.to_f64())
            }
        };
        Self {
            states: Some(m.state_names().to_vec()),
            actions: Some(m.action_names().to_vec()),
            transitions: m
                .transitions()
                .iter()
                .map(|rows| rows.iter().map(|row| row.iter().map(text).collect()).collect())
                .collect(),
            rewards: m.rewards().iter().map(|r| r.iter().map(text).collect()).collect(),
        }
    }

    pub fn to_mdp<T: Scalar>(&self) -> Result<Mdp<T>> {
        let bad = |what: String| Error::ModelFile(format!("unparsable entry at {what}"));
        let mut transitions = Vec::with_capacity(self.transitions.len());
        for (i, rows) in self.transitions.iter().enumerate() {
            let mut out = Vec::with_capacity(rows.len());
            for (a, row) in rows.iter().enumerate() {
                let parsed = row
                    .iter()
                    .enumerate()
                    .map(|(j, e)| e.parse::<T>().ok_or_else(|| bad(format!("transitions[{i}][{a}][{j}]"))))
                    .collect::<Result<Vec<T>>>()?;
                out.push(parsed);
            }
            transitions.push(out);
        }
        let rewards = self
            .rewards
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(a, e)| e.parse::<T>().ok_or_else(|| bad(format!("rewards[{i}][{a}]"))))
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rewards.len() != transitions.len()
            || rewards.iter().zip(&transitions).any(|(r, t)| r.len() != t.len())
        {
            return Err(Error::ModelFile("rewards do not match the transition table".into()));
        }
        let m = Mdp::new(transitions, rewards)?;
        match (&self.states, &self.actions) {
            (None, None) => Ok(m),
            (s, a) => {
                let states = s.clone().unwrap_or_else(|| m.state_names().to_vec());
                let actions = a.clone().unwrap_or_else(|| m.action_names().to_vec());
                m.with_names(states, actions)
            }
        }
    }
}

pub fn parse_model<T: Scalar>(json: &str) -> Result<Mdp<T>> {
    let file: ModelFile = serde_json::from_str(json)?;
    file.to_mdp()
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<Mdp<T>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ModelFile(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

pub fn model_to_json<T: Scalar>(m: &Mdp<T>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFile::from_mdp(m))?)
}

pub fn save_model<T: Scalar>(m: &Mdp<T>, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(m)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    const CHAIN: &str = r#"{
        "transitions": [[["1/3", "2/3"]], [[1, 0], [0.5, "0.5"]]],
        "rewards": [[0.1], ["1/7", -2]]
    }"#;

    #[test]
    fn exact_entries_survive() {
        let m: Mdp<Rational> = parse_model(CHAIN).unwrap();
        assert_eq!(*m.prob(0, 0, 0), Rational::from_ratio(1, 3));
        assert_eq!(*m.reward(0, 0), Rational::from_ratio(1, 10));
        let again: Mdp<Rational> = parse_model(&model_to_json(&m).unwrap()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn float_round_trip() {
        let m: Mdp = parse_model(CHAIN).unwrap();
        let again: Mdp = parse_model(&model_to_json(&m).unwrap()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn rejects_bad_rows() {
        let bad = r#"{"transitions": [[["1/3", "1/3"]]], "rewards": [[0]]}"#;
        assert!(matches!(parse_model::<f64>(bad), Err(Error::InvalidModel(_))));
        let bad = r#"{"transitions": [[["x", 1]]], "rewards": [[0]]}"#;
        assert!(matches!(parse_model::<f64>(bad), Err(Error::ModelFile(_))));
        let bad = r#"{"transitions": [[[1]]], "rewards": [[0]], "extra": 1}"#;
        assert!(matches!(parse_model::<f64>(bad), Err(Error::Json(_))));
    }
}
