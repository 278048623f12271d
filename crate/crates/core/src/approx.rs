//! Linear value approximation and greedy one-step lookahead.

use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::bmdp::{ActionRule, Expansion, Policy, SiblingEnv, TabularBmdp};
use crate::linalg::{dot, matrix_rank};
use crate::{LabError, LabRng, Result};

/// Maps a state to a fixed-length real feature vector.
pub trait FeatureMap<S: ?Sized> {
    fn dim(&self) -> usize;

    /// Write φ(state) into `out`, which has length [`FeatureMap::dim`].
    fn features_into(&self, state: &S, out: &mut [f64]);

    fn features(&self, state: &S) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.features_into(state, &mut out);
        out
    }
}

impl<S: ?Sized, F: FeatureMap<S> + ?Sized> FeatureMap<S> for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn features_into(&self, state: &S, out: &mut [f64]) {
        (**self).features_into(state, out)
    }
}

/// Φ with one row per state: `rows[i][k]` = φ_k(i).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(LabError::DimensionMismatch { expected: d, got: bad.len() });
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(LabError::config("features", "non-finite feature value"));
        }
        Ok(FeatureMatrix { rows })
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }

    /// Apply `a·φ + c` to every entry.
    pub fn affine(&self, a: f64, c: f64) -> Self {
        FeatureMatrix { rows: self.rows.iter().map(|r| r.iter().map(|v| a * v + c).collect()).collect() }
    }
}

impl FeatureMap<usize> for FeatureMatrix {
    fn dim(&self) -> usize {
        self.rows.first().map(Vec::len).unwrap_or(0)
    }

    fn features_into(&self, &state: &usize, out: &mut [f64]) {
        out.copy_from_slice(&self.rows[state]);
    }
}

/// J̃(state, w) = w · φ(state).
pub fn value<S: ?Sized, F: FeatureMap<S> + ?Sized>(w: &[f64], state: &S, phi: &F) -> Result<f64> {
    if w.len() != phi.dim() {
        return Err(LabError::DimensionMismatch { expected: phi.dim(), got: w.len() });
    }
    Ok(dot(w, &phi.features(state)))
}

/// All approximate values of a tabular feature matrix.
pub fn values(w: &[f64], phi: &FeatureMatrix) -> Result<Vec<f64>> {
    (0..phi.n_states()).map(|i| value(w, &i, phi)).collect()
}

/// True iff Φ has full column rank (pivot tolerance 1e-10).
pub fn full_rank_check(phi: &FeatureMatrix) -> bool {
    let d = phi.dim();
    d > 0 && matrix_rank(phi.rows(), 1e-10) == d
}

/// How greedy lookahead ranks actions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyMode {
    /// Rank the two candidate successors by J̃ and pick the action most
    /// likely to reach the better one.
    #[default]
    SuccessorPreference,
    /// argmax_a Σ_j p(i,a,j)[g(i,j) + αJ̃(j)].
    ExpectedBackup,
}

/// Action index chosen by greedy lookahead given the candidates' values.
/// Ties go to the lowest index.
pub fn greedy_choice<S>(exp: &Expansion<S>, candidate_values: [f64; 2], mode: GreedyMode, alpha: f64) -> usize {
    let score = |a: usize| -> f64 {
        let p = exp.first_prob[a];
        match mode {
            GreedyMode::SuccessorPreference => {
                if candidate_values[0] > candidate_values[1] {
                    p
                } else if candidate_values[1] > candidate_values[0] {
                    1.0 - p
                } else {
                    0.0
                }
            }
            GreedyMode::ExpectedBackup => {
                p * (exp.rewards[0] + alpha * candidate_values[0])
                    + (1.0 - p) * (exp.rewards[1] + alpha * candidate_values[1])
            }
        }
    };
    let mut best = 0;
    let mut best_score = score(0);
    for a in 1..exp.first_prob.len() {
        let s = score(a);
        if s > best_score {
            best = a;
            best_score = s;
        }
    }
    best
}

/// Greedy lookahead with respect to a weight vector.
pub struct Greedy<'a, F> {
    pub weights: &'a [f64],
    pub features: &'a F,
    pub mode: GreedyMode,
    pub alpha: f64,
}

impl<S, F: FeatureMap<S>> ActionRule<S> for Greedy<'_, F> {
    fn choose(&self, _state: &S, exp: &Expansion<S>, _rng: &mut LabRng) -> Result<usize> {
        let d = self.features.dim();
        if self.weights.len() != d {
            return Err(LabError::DimensionMismatch { expected: d, got: self.weights.len() });
        }
        let mut buf: SmallVec<[f64; 8]> = smallvec![0.0; d];
        self.features.features_into(&exp.candidates[0], &mut buf);
        let v0 = dot(self.weights, &buf);
        self.features.features_into(&exp.candidates[1], &mut buf);
        let v1 = dot(self.weights, &buf);
        Ok(greedy_choice(exp, [v0, v1], self.mode, self.alpha))
    }
}

/// Freeze the greedy lookahead policy of `w` into a fixed tabular policy.
pub fn greedy_policy(
    bmdp: &TabularBmdp,
    w: &[f64],
    phi: &FeatureMatrix,
    mode: GreedyMode,
    alpha: f64,
) -> Result<Policy> {
    if phi.n_states() != bmdp.n_states() {
        return Err(LabError::DimensionMismatch { expected: bmdp.n_states(), got: phi.n_states() });
    }
    let rule = Greedy { weights: w, features: phi, mode, alpha };
    // greedy rules never draw from the generator
    let mut rng = crate::seeded_rng(0);
    let mut actions = Vec::with_capacity(bmdp.n_states());
    for i in 0..bmdp.n_states() {
        let exp = bmdp.expand(&i)?;
        let k = rule.choose(&i, &exp, &mut rng)?;
        actions.push(exp.actions[k]);
    }
    Ok(Policy::Fixed(actions))
}

/// A differentiable value function J̃(x, w), the hook nonlinear STD uses.
pub trait DifferentiableValue<S: ?Sized> {
    fn dim(&self) -> usize;

    fn value(&self, w: &[f64], state: &S) -> f64;

    /// Write ∇_w J̃(state, w) into `out`.
    fn gradient_into(&self, w: &[f64], state: &S, out: &mut [f64]);

    /// J̃(a, w) - J̃(b, w).
    fn value_difference(&self, w: &[f64], a: &S, b: &S) -> f64 {
        self.value(w, a) - self.value(w, b)
    }
}

/// The linear value function of a feature map; its gradient is φ.
pub struct LinearValue<F>(pub F);

impl<S: ?Sized, F: FeatureMap<S>> DifferentiableValue<S> for LinearValue<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, w: &[f64], state: &S) -> f64 {
        dot(w, &self.0.features(state))
    }

    fn gradient_into(&self, _w: &[f64], state: &S, out: &mut [f64]) {
        self.0.features_into(state, out);
    }

    // w · (φ(a) - φ(b)), matching the linear STD update bit for bit
    fn value_difference(&self, w: &[f64], a: &S, b: &S) -> f64 {
        let fa = self.0.features(a);
        let fb = self.0.features(b);
        let diff: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x - y).collect();
        dot(w, &diff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bmdp::testing::two_state;

    fn two_state_phi() -> FeatureMatrix {
        FeatureMatrix::new(vec![vec![2.0], vec![1.0]]).unwrap()
    }

    #[test]
    fn values_at_td_fixed_point() {
        let v = values(&[0.88], &two_state_phi()).unwrap();
        assert!((v[0] - 1.76).abs() < 1e-15 && (v[1] - 0.88).abs() < 1e-15);
        assert_eq!(values(&[0.0], &two_state_phi()).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn three_state_hand_dot_product() {
        let phi = FeatureMatrix::new(vec![
            vec![12.0 / 18.0, 6.0 / 18.0],
            vec![6.0 / 18.0, 12.0 / 18.0],
            vec![1.0 / 18.0, 1.0 / 18.0],
        ])
        .unwrap();
        let v = values(&[18.0, 18.0], &phi).unwrap();
        assert!((v[0] - 18.0).abs() < 1e-12 && (v[1] - 18.0).abs() < 1e-12 && (v[2] - 2.0).abs() < 1e-12);
        assert!(full_rank_check(&phi));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(value(&[1.0, 2.0], &0, &two_state_phi()), Err(LabError::DimensionMismatch { .. })));
    }

    #[test]
    fn rank_checks() {
        assert!(full_rank_check(&two_state_phi()));
        let dup = FeatureMatrix::new(vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![0.5, 0.5]]).unwrap();
        assert!(!full_rank_check(&dup));
    }

    #[test]
    fn two_state_greedy_sign_rule() {
        let m = two_state();
        let phi = two_state_phi();
        let g = |w: f64| greedy_policy(&m, &[w], &phi, GreedyMode::SuccessorPreference, 0.5).unwrap();
        assert_eq!(g(-1.0), Policy::Fixed(vec![1, 1]));
        assert_eq!(g(1.0), Policy::Fixed(vec![0, 0]));
        // constant values: lowest index everywhere
        assert_eq!(g(0.0), Policy::Fixed(vec![0, 0]));
    }

    #[test]
    fn expected_backup_mode_counts_rewards() {
        let m = two_state();
        let phi = two_state_phi();
        // with w = 0 only the immediate reward on B -> B matters
        let p = greedy_policy(&m, &[0.0], &phi, GreedyMode::ExpectedBackup, 0.5).unwrap();
        assert_eq!(p, Policy::Fixed(vec![0, 1]));
    }
}
