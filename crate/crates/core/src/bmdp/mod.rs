//! Binary Markov decision processes.
//!
//! A [`TabularBmdp`] is a finite MDP in which every state can move to at most
//! two distinct successors, taken over all of its actions. Those successors
//! are the *siblings* following the state; a state with a single successor
//! has both sibling slots equal.
//!
//! Exact chain analysis lives in [`chain`], trajectory generation for any
//! process exposing siblings (tabular or continuous) in [`process`].

pub mod chain;
pub mod process;

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::{LabError, LabRng, Result};

pub use chain::{
    compound_chain, derived_sibling_chain, exact_value, stationary_distribution, CompoundChain,
    DerivedChain, MarkovChain, StationaryDistribution,
};
pub use process::{
    step, trajectory, ActionRule, Expansion, PairStep, SiblingEnv, SiblingStep, Trajectory,
};

/// Row-sum tolerance for transition distributions.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Transition distribution of one action available in a state.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionRow {
    /// Global action id (index into [`TabularBmdp::action_names`]).
    pub action: usize,
    /// `probs[j]` is p(i, a, j).
    pub probs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabularBmdp {
    pub name: String,
    pub state_names: Vec<String>,
    pub action_names: Vec<String>,
    /// Available actions per state, in the order policies index them.
    pub rows: Vec<Vec<ActionRow>>,
    /// `rewards[i][j]` is g(i, j).
    pub rewards: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    NoActions { state: usize },
    Shape { state: usize, detail: String },
    Probability { state: usize, action: usize, next: usize, p: f64 },
    RowSum { state: usize, action: usize, sum: f64 },
    TooManySuccessors { state: usize, successors: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoActions { state } => write!(f, "state {state} has no actions"),
            Violation::Shape { state, detail } => write!(f, "state {state}: {detail}"),
            Violation::Probability { state, action, next, p } => {
                write!(f, "p({state}, {action}, {next}) = {p} is not a probability")
            }
            Violation::RowSum { state, action, sum } => {
                write!(f, "row ({state}, {action}) sums to {sum}")
            }
            Violation::TooManySuccessors { state, successors } => {
                write!(f, "state {state} has successors {successors:?}; at most two allowed")
            }
        }
    }
}

/// Outcome of [`TabularBmdp::validate`]; empty means the system is a valid BMDP.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl TabularBmdp {
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn state_name(&self, state: usize) -> &str {
        self.state_names.get(state).map(String::as_str).unwrap_or("?")
    }

    pub fn state_by_name(&self, name: &str) -> Option<usize> {
        self.state_names.iter().position(|s| s == name)
    }

    pub fn action_by_name(&self, name: &str) -> Option<usize> {
        self.action_names.iter().position(|s| s == name)
    }

    fn check_state(&self, state: usize) -> Result<()> {
        if state < self.n_states() {
            Ok(())
        } else {
            Err(LabError::StateOutOfRange { state, n: self.n_states() })
        }
    }

    /// The row for a global action id in `state`.
    pub fn row(&self, state: usize, action: usize) -> Result<&ActionRow> {
        self.check_state(state)?;
        self.rows[state]
            .iter()
            .find(|r| r.action == action)
            .ok_or(LabError::InvalidAction { state, action })
    }

    /// Check row sums, probability ranges and the two-successor property.
    pub fn validate(&self) -> ValidationReport {
        let n = self.n_states();
        let mut violations = Vec::new();
        if self.rewards.len() != n || self.rewards.iter().any(|r| r.len() != n) {
            violations.push(Violation::Shape { state: 0, detail: "reward table is not n x n".into() });
        }
        for (i, rows) in self.rows.iter().enumerate() {
            if rows.is_empty() {
                violations.push(Violation::NoActions { state: i });
                continue;
            }
            let mut support = Vec::new();
            for row in rows {
                if row.probs.len() != n {
                    violations.push(Violation::Shape {
                        state: i,
                        detail: format!("action {} row has length {}", row.action, row.probs.len()),
                    });
                    continue;
                }
                for (j, &p) in row.probs.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        violations.push(Violation::Probability { state: i, action: row.action, next: j, p });
                    }
                    if p > 0.0 && !support.contains(&j) {
                        support.push(j);
                    }
                }
                let sum: f64 = row.probs.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    violations.push(Violation::RowSum { state: i, action: row.action, sum });
                }
            }
            if support.len() > 2 {
                support.sort_unstable();
                violations.push(Violation::TooManySuccessors { state: i, successors: support });
            }
        }
        ValidationReport { violations }
    }

    /// The sibling states following `state`, ascending; equal when only one
    /// successor is possible.
    pub fn successor_support(&self, state: usize) -> Result<(usize, usize)> {
        self.check_state(state)?;
        let mut support = [0usize; 2];
        let mut count = 0;
        for j in 0..self.n_states() {
            if self.rows[state].iter().any(|r| r.probs.get(j).is_some_and(|&p| p > 0.0)) {
                if count < 2 {
                    support[count] = j;
                }
                count += 1;
            }
        }
        match count {
            1 => Ok((support[0], support[0])),
            2 => Ok((support[0], support[1])),
            0 => Err(LabError::InvalidPolicy(format!("state {state} has no successor"))),
            count => Err(LabError::NotBinary { state, count }),
        }
    }

    /// Sample a successor of `state` under `action` from a uniform draw `u`
    /// in [0, 1), by inverse CDF over successors in ascending index order.
    ///
    /// Returns `(next, sibling, reward)`.
    pub fn step_with_draw(&self, state: usize, action: usize, u: f64) -> Result<(usize, usize, f64)> {
        let row = self.row(state, action)?;
        let (lo, hi) = self.successor_support(state)?;
        let next = if u < row.probs[lo] || lo == hi { lo } else { hi };
        let sibling = if next == lo { hi } else { lo };
        Ok((next, sibling, self.rewards[state][next]))
    }

    /// One sampled transition under a global action id.
    pub fn step(&self, state: usize, action: usize, rng: &mut LabRng) -> Result<(usize, usize, f64)> {
        // validate the action before consuming randomness
        self.row(state, action)?;
        let u: f64 = rng.gen();
        self.step_with_draw(state, action, u)
    }

    /// Largest |g(i, j)| over the table.
    pub fn reward_bound(&self) -> f64 {
        self.rewards.iter().flatten().fold(0.0_f64, |m, g| m.max(g.abs()))
    }

    /// Copy with every reward multiplied by `factor`.
    pub fn with_scaled_rewards(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for g in out.rewards.iter_mut().flatten() {
            *g *= factor;
        }
        out
    }
}

/// A stationary policy over a [`TabularBmdp`].
///
/// Greedy policies derived from value approximations resolve to
/// [`Policy::Fixed`] via [`crate::approx::greedy_policy`]; the learners'
/// behaviour specifications in [`crate::learners::Behavior`] also cover
/// greedy policies that follow live weights.
#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    /// Global action id per state.
    Fixed(Vec<usize>),
    /// Action probabilities per state, aligned with `TabularBmdp::rows[state]`.
    Stochastic(Vec<Vec<f64>>),
}

impl Policy {
    /// Take `action` in every state that offers it, otherwise the state's
    /// first action.
    pub fn always(bmdp: &TabularBmdp, action: usize) -> Self {
        Policy::Fixed(
            bmdp.rows
                .iter()
                .map(|rows| {
                    if rows.iter().any(|r| r.action == action) {
                        action
                    } else {
                        rows.first().map(|r| r.action).unwrap_or(action)
                    }
                })
                .collect(),
        )
    }

    /// Uniform choice among available actions.
    pub fn uniform(bmdp: &TabularBmdp) -> Self {
        Policy::Stochastic(
            bmdp.rows.iter().map(|rows| vec![1.0 / rows.len() as f64; rows.len()]).collect(),
        )
    }

    pub fn validate(&self, bmdp: &TabularBmdp) -> Result<()> {
        let n = bmdp.n_states();
        match self {
            Policy::Fixed(actions) => {
                if actions.len() != n {
                    return Err(LabError::DimensionMismatch { expected: n, got: actions.len() });
                }
                for (i, &a) in actions.iter().enumerate() {
                    bmdp.row(i, a)?;
                }
            }
            Policy::Stochastic(dists) => {
                if dists.len() != n {
                    return Err(LabError::DimensionMismatch { expected: n, got: dists.len() });
                }
                for (i, d) in dists.iter().enumerate() {
                    if d.len() != bmdp.rows[i].len() {
                        return Err(LabError::DimensionMismatch { expected: bmdp.rows[i].len(), got: d.len() });
                    }
                    let sum: f64 = d.iter().sum();
                    if d.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > ROW_SUM_TOL {
                        return Err(LabError::InvalidPolicy(format!(
                            "state {i} action distribution {d:?} is not a distribution"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Action probabilities in `state`, aligned with `bmdp.rows[state]`.
    pub fn action_probs(&self, bmdp: &TabularBmdp, state: usize) -> Result<Vec<f64>> {
        bmdp.check_state(state)?;
        let rows = &bmdp.rows[state];
        match self {
            Policy::Fixed(actions) => {
                let a = *actions.get(state).ok_or(LabError::StateOutOfRange { state, n: actions.len() })?;
                let pos = rows
                    .iter()
                    .position(|r| r.action == a)
                    .ok_or(LabError::InvalidAction { state, action: a })?;
                let mut probs = vec![0.0; rows.len()];
                probs[pos] = 1.0;
                Ok(probs)
            }
            Policy::Stochastic(dists) => {
                dists.get(state).cloned().ok_or(LabError::StateOutOfRange { state, n: dists.len() })
            }
        }
    }

    /// Pick the index (into the state's action list) of the action to take.
    /// Only stochastic states consume a draw.
    pub fn choose_index(&self, state: usize, actions: &[usize], rng: &mut LabRng) -> Result<usize> {
        match self {
            Policy::Fixed(fixed) => {
                let a = *fixed.get(state).ok_or(LabError::StateOutOfRange { state, n: fixed.len() })?;
                actions.iter().position(|&x| x == a).ok_or(LabError::InvalidAction { state, action: a })
            }
            Policy::Stochastic(dists) => {
                let d = dists.get(state).ok_or(LabError::StateOutOfRange { state, n: dists.len() })?;
                if d.len() != actions.len() {
                    return Err(LabError::DimensionMismatch { expected: actions.len(), got: d.len() });
                }
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (k, &p) in d.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Ok(k);
                    }
                }
                // rounding left u above the final cumulative sum
                Ok(d.iter().rposition(|&p| p > 0.0).unwrap_or(0))
            }
        }
    }

    /// Probability the policy moves from `i` to `j`.
    pub fn transition_prob(&self, bmdp: &TabularBmdp, i: usize, j: usize) -> Result<f64> {
        let probs = self.action_probs(bmdp, i)?;
        Ok(bmdp.rows[i].iter().zip(&probs).map(|(r, &q)| q * r.probs[j]).sum())
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    /// Two states A, B; actions a1, a2; a1 -> (0.8, 0.2), a2 -> (0.2, 0.8);
    /// reward only on B -> B.
    pub fn two_state() -> TabularBmdp {
        let rows = |_: usize| {
            vec![
                ActionRow { action: 0, probs: vec![0.8, 0.2] },
                ActionRow { action: 1, probs: vec![0.2, 0.8] },
            ]
        };
        TabularBmdp {
            name: "two-state".into(),
            state_names: vec!["A".into(), "B".into()],
            action_names: vec!["a1".into(), "a2".into()],
            rows: (0..2).map(rows).collect(),
            rewards: vec![vec![0.0, 0.0], vec![0.0, 1.0]],
        }
    }
}
