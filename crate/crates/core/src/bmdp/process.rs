//! Trajectories that expose the sibling of every realized successor.
//!
//! Both the tabular systems and the continuous acrobot implement
//! [`SiblingEnv`]: given a state, the environment reports its two candidate
//! successors, the probability that each action lands on the first of them,
//! and the reward attached to each. Sampling and action selection then work
//! the same way for every environment.

use rand::Rng;
use serde::Serialize;
use smallvec::SmallVec;

use super::TabularBmdp;
use crate::{LabError, LabRng, Result};

/// The decision offered in one state.
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion<S> {
    /// Sibling successors; both equal when only one successor is possible.
    pub candidates: [S; 2],
    /// Action identifiers in the order rules index them.
    pub actions: SmallVec<[usize; 2]>,
    /// Per action: probability of landing on `candidates[0]`.
    pub first_prob: SmallVec<[f64; 2]>,
    /// Reward for moving to each candidate.
    pub rewards: [f64; 2],
}

impl<S: Clone> Expansion<S> {
    /// Inverse-CDF sample of the successor under action index `a`.
    /// Returns `(next, sibling, reward)`.
    pub fn sample_with_draw(&self, a: usize, u: f64) -> (S, S, f64) {
        let k = if u < self.first_prob[a] { 0 } else { 1 };
        (self.candidates[k].clone(), self.candidates[1 - k].clone(), self.rewards[k])
    }

    pub fn is_deterministic(&self, a: usize) -> bool {
        let p = self.first_prob[a];
        p == 0.0 || p == 1.0
    }
}

/// A process in which every state offers at most two successors.
pub trait SiblingEnv {
    type State: Clone + PartialEq + std::fmt::Debug;

    fn name(&self) -> &str;

    fn start_state(&self) -> Self::State;

    fn expand(&self, state: &Self::State) -> Result<Expansion<Self::State>>;

    /// Index of a tabular state; `None` for continuous processes.
    fn state_index(&self, _state: &Self::State) -> Option<usize> {
        None
    }

    /// Upper bound on |g|, used to truncate rollouts.
    fn reward_bound(&self) -> f64;
}

impl SiblingEnv for TabularBmdp {
    type State = usize;

    fn name(&self) -> &str {
        &self.name
    }

    fn start_state(&self) -> usize {
        0
    }

    fn expand(&self, &state: &usize) -> Result<Expansion<usize>> {
        let (lo, hi) = self.successor_support(state)?;
        let rows = &self.rows[state];
        Ok(Expansion {
            candidates: [lo, hi],
            actions: rows.iter().map(|r| r.action).collect(),
            first_prob: rows.iter().map(|r| if lo == hi { 1.0 } else { r.probs[lo] }).collect(),
            rewards: [self.rewards[state][lo], self.rewards[state][hi]],
        })
    }

    fn state_index(&self, &state: &usize) -> Option<usize> {
        Some(state)
    }

    fn reward_bound(&self) -> f64 {
        TabularBmdp::reward_bound(self)
    }
}

/// Chooses an action index (into [`Expansion::actions`]) in a state.
pub trait ActionRule<S> {
    fn choose(&self, state: &S, expansion: &Expansion<S>, rng: &mut LabRng) -> Result<usize>;
}

impl ActionRule<usize> for super::Policy {
    fn choose(&self, state: &usize, expansion: &Expansion<usize>, rng: &mut LabRng) -> Result<usize> {
        self.choose_index(*state, &expansion.actions, rng)
    }
}

/// One realized transition together with the siblings at both ends.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiblingStep<S> {
    pub t: u64,
    pub state: S,
    pub sibling: S,
    pub action: usize,
    pub reward: f64,
    pub next_state: S,
    pub next_sibling: S,
}

/// Two independent lock-step transitions, as consumed by differential
/// training.
#[derive(Clone, Debug, PartialEq)]
pub struct PairStep<S> {
    pub state: S,
    pub next_state: S,
    pub reward: f64,
    pub other: S,
    pub other_next: S,
    pub other_reward: f64,
}

/// Take action index `action` in `state`. Returns `(next, sibling, reward)`.
pub fn step<E: SiblingEnv>(
    env: &E,
    state: &E::State,
    action: usize,
    rng: &mut LabRng,
) -> Result<(E::State, E::State, f64)> {
    let exp = env.expand(state)?;
    sample_action(&exp, action, rng)
}

pub(crate) fn sample_action<S: Clone>(exp: &Expansion<S>, action: usize, rng: &mut LabRng) -> Result<(S, S, f64)> {
    if action >= exp.actions.len() {
        return Err(LabError::InvalidAction { state: usize::MAX, action });
    }
    // deterministic actions leave the generator untouched
    let u = if exp.is_deterministic(action) { 0.5 } else { rng.gen() };
    Ok(exp.sample_with_draw(action, u))
}

/// Lazy stream of [`SiblingStep`]s from `start`.
///
/// Step 0 uses the start state as its own sibling, since it follows no
/// decision.
pub fn trajectory<'a, E, R>(
    env: &'a E,
    rule: &'a R,
    start: E::State,
    length: u64,
    rng: &'a mut LabRng,
) -> Trajectory<'a, E, R>
where
    E: SiblingEnv,
    R: ActionRule<E::State>,
{
    Trajectory { env, rule, rng, sibling: start.clone(), state: start, t: 0, length, failed: false }
}

pub struct Trajectory<'a, E: SiblingEnv, R> {
    env: &'a E,
    rule: &'a R,
    rng: &'a mut LabRng,
    state: E::State,
    sibling: E::State,
    t: u64,
    length: u64,
    failed: bool,
}

impl<E, R> Iterator for Trajectory<'_, E, R>
where
    E: SiblingEnv,
    R: ActionRule<E::State>,
{
    type Item = Result<SiblingStep<E::State>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.t >= self.length || self.failed {
            return None;
        }
        let result = (|| {
            let exp = self.env.expand(&self.state)?;
            let action = self.rule.choose(&self.state, &exp, self.rng)?;
            let (next, next_sib, reward) = sample_action(&exp, action, self.rng)?;
            Ok(SiblingStep {
                t: self.t,
                state: self.state.clone(),
                sibling: self.sibling.clone(),
                action: exp.actions[action],
                reward,
                next_state: next,
                next_sibling: next_sib,
            })
        })();
        match result {
            Ok(step) => {
                self.state = step.next_state.clone();
                self.sibling = step.next_sibling.clone();
                self.t += 1;
                Some(Ok(step))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bmdp::testing::two_state;
    use crate::bmdp::Policy;
    use crate::seeded_rng;

    #[test]
    fn empty_trajectory() {
        let m = two_state();
        let policy = Policy::always(&m, 1);
        let mut rng = seeded_rng(0);
        assert_eq!(trajectory(&m, &policy, 0, 0, &mut rng).count(), 0);
    }

    #[test]
    fn first_step_sibling_is_start() {
        let m = two_state();
        let policy = Policy::always(&m, 1);
        let mut rng = seeded_rng(0);
        let first = trajectory(&m, &policy, 1, 1, &mut rng).next().unwrap().unwrap();
        assert_eq!(first.state, 1);
        assert_eq!(first.sibling, 1);
        assert_eq!(first.action, 1);
    }

    #[test]
    fn steps_chain_together() {
        let m = two_state();
        let policy = Policy::uniform(&m);
        let mut rng = seeded_rng(9);
        let steps: Vec<_> = trajectory(&m, &policy, 0, 50, &mut rng).map(Result::unwrap).collect();
        for w in steps.windows(2) {
            assert_eq!(w[0].next_state, w[1].state);
            assert_eq!(w[0].next_sibling, w[1].sibling);
            assert_ne!(w[1].state, w[1].sibling);
            assert_eq!(w[0].reward, m.rewards[w[0].state][w[0].next_state]);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let m = two_state();
        let policy = Policy::uniform(&m);
        let run = |seed| {
            let mut rng = seeded_rng(seed);
            trajectory(&m, &policy, 0, 200, &mut rng).map(Result::unwrap).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn invalid_action_index() {
        let m = two_state();
        let mut rng = seeded_rng(0);
        assert!(step(&m, &0, 2, &mut rng).is_err());
    }
}
