//! Ground truth for the learners: least-squares limits, the sibling error
//! functionals, bound and sign diagnostics, and Monte-Carlo rollouts.
//!
//! Every limit here is a weighted least-squares problem over some
//! distribution of (row, target) pairs:
//!
//! | learner (λ = 1) | rows          | targets        | weights        |
//! |-----------------|---------------|----------------|----------------|
//! | TD              | φ(i)          | J(i)           | π(i)           |
//! | STD             | φ(i) − φ(i′)  | J(i)           | π(i, i′)       |
//! | DT              | φ(x) − φ(x̂)   | J(x) − J(x̂)    | π(x) π(x̂)      |

use serde::Serialize;

use crate::approx::{value, FeatureMap, FeatureMatrix};
use crate::bmdp::process::sample_action;
use crate::bmdp::{exact_value, stationary_distribution, ActionRule, Policy, SiblingEnv, StationaryDistribution, TabularBmdp};
use crate::envs::TabularEnv;
use crate::linalg::{dot, weighted_least_squares};
use crate::{LabError, LabRng, Result};

/// Σ_k weights[k] · (rows[k]·w − targets[k])².
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeastSquares {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LeastSquares {
    fn push(&mut self, row: Vec<f64>, target: f64, weight: f64) {
        self.rows.push(row);
        self.targets.push(target);
        self.weights.push(weight);
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map(Vec::len).unwrap_or(0)
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        self.terms().map(|(r, b, p)| p * (dot(r, w) - b).powi(2)).sum()
    }

    /// value(w) − value(c), factored so that rounding error shrinks with
    /// |w − c| instead of with the objective's size.
    pub fn difference(&self, w: &[f64], c: &[f64]) -> f64 {
        self.terms()
            .map(|(r, b, p)| {
                let (rw, rc) = (dot(r, w), dot(r, c));
                p * (rw - rc) * (rw + rc - 2.0 * b)
            })
            .sum()
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; w.len()];
        for (r, b, p) in self.terms() {
            let e = 2.0 * p * (dot(r, w) - b);
            for (gk, rk) in g.iter_mut().zip(r) {
                *gk += e * rk;
            }
        }
        g
    }

    /// Normal-equations minimizer.
    pub fn minimize(&self) -> Result<Vec<f64>> {
        weighted_least_squares(&self.rows, &self.targets, &self.weights)
    }

    /// Derivative-free minimizer for one-dimensional problems: a wide
    /// golden-section search, then a narrow one on [`Self::difference`].
    pub fn brute_force_minimize(&self) -> Result<f64> {
        if self.dim() != 1 {
            return Err(LabError::Unsupported(format!("brute-force search over {} dimensions", self.dim())));
        }
        let scale = 1.0 + self.targets.iter().map(|t| t.abs()).fold(0.0, f64::max);
        let reach = 1e6 * scale;
        let coarse = golden_section_minimize(|w| self.value(&[w]), -reach, reach, 1e-9 * scale);
        let fine =
            golden_section_minimize(|w| self.difference(&[w], &[coarse]), coarse - 1e-3 * scale, coarse + 1e-3 * scale, 1e-15);
        Ok(fine)
    }

    fn terms(&self) -> impl Iterator<Item = (&Vec<f64>, f64, f64)> {
        self.rows.iter().zip(&self.targets).zip(&self.weights).map(|((r, &b), &p)| (r, b, p))
    }
}

/// Golden-section search for the minimum of a unimodal `f` on [lo, hi].
pub fn golden_section_minimize(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
        if x1 >= x2 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// argmin_w Σᵢ D(i)·(w·φ(i) − J(i))².
pub fn weighted_ls_weight(phi: &FeatureMatrix, target: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    if target.len() != phi.n_states() || d.len() != phi.n_states() {
        return Err(LabError::DimensionMismatch { expected: phi.n_states(), got: target.len().min(d.len()) });
    }
    weighted_least_squares(phi.rows(), target, d)
}

/// η(i, j) = π(i, j) / (π(i, j) + π(j, i)).
pub fn eta(dist: &StationaryDistribution, i: usize, j: usize) -> Result<f64> {
    let (a, b) = (dist.pair(i, j), dist.pair(j, i));
    if a + b <= 0.0 {
        return Err(LabError::UndefinedPair(i, j));
    }
    Ok(a / (a + b))
}

/// Exact quantities of one tabular environment under one policy.
#[derive(Clone, Debug)]
pub struct PolicyAnalysis<'a> {
    pub env: &'a TabularEnv,
    pub policy: Policy,
    pub alpha: f64,
    pub dist: StationaryDistribution,
    pub values: Vec<f64>,
}

impl<'a> PolicyAnalysis<'a> {
    pub fn new(env: &'a TabularEnv, policy: &Policy, alpha: f64) -> Result<Self> {
        if env.features.n_states() != env.bmdp.n_states() {
            return Err(LabError::DimensionMismatch { expected: env.bmdp.n_states(), got: env.features.n_states() });
        }
        let dist = stationary_distribution(&env.bmdp, policy)?;
        let values = exact_value(&env.bmdp, policy, alpha)?;
        Ok(PolicyAnalysis { env, policy: policy.clone(), alpha, dist, values })
    }

    fn diff_row(&self, i: usize, j: usize) -> Vec<f64> {
        let (a, b) = (self.env.features.row(i), self.env.features.row(j));
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    /// Unordered sibling pairs {i, j}, i ≠ j, with mass, as (i, j) with i < j.
    pub fn sibling_pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .dist
            .pair_pi
            .iter()
            .filter(|(&(i, j), &m)| i != j && m > 0.0)
            .map(|(&(i, j), _)| (i.min(j), i.max(j)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Σ π(i, j)[J̃(i) − J̃(j) − J(i)]², singleton pairs included.
    pub fn e_objective(&self) -> LeastSquares {
        let mut ls = LeastSquares { rows: vec![], targets: vec![], weights: vec![] };
        for (&(i, j), &m) in &self.dist.pair_pi {
            ls.push(self.diff_row(i, j), self.values[i], m);
        }
        ls
    }

    /// Sum over ordered sibling pairs i ≠ j weighted by π(i, j) + π(j, i);
    /// `true_differences` picks the targets J(i) − J(j) over the η-weighted
    /// ones.
    fn pair_objective(&self, true_differences: bool) -> Result<LeastSquares> {
        let mut ls = LeastSquares { rows: vec![], targets: vec![], weights: vec![] };
        for (a, b) in self.sibling_pairs() {
            for (i, j) in [(a, b), (b, a)] {
                let target = if true_differences {
                    self.values[i] - self.values[j]
                } else {
                    eta(&self.dist, i, j)? * self.values[i] - eta(&self.dist, j, i)? * self.values[j]
                };
                ls.push(self.diff_row(i, j), target, self.dist.pair(i, j) + self.dist.pair(j, i));
            }
        }
        Ok(ls)
    }

    pub fn e1_objective(&self) -> Result<LeastSquares> {
        self.pair_objective(false)
    }

    pub fn e2_objective(&self) -> Result<LeastSquares> {
        self.pair_objective(true)
    }

    /// Over all ordered state pairs under the product distribution π(x)π(x̂).
    pub fn dt_objective(&self) -> LeastSquares {
        let mut ls = LeastSquares { rows: vec![], targets: vec![], weights: vec![] };
        let pi = &self.dist.pi;
        for x in 0..pi.len() {
            for y in 0..pi.len() {
                if pi[x] > 0.0 && pi[y] > 0.0 {
                    ls.push(self.diff_row(x, y), self.values[x] - self.values[y], pi[x] * pi[y]);
                }
            }
        }
        ls
    }

    pub fn td_objective(&self) -> LeastSquares {
        LeastSquares {
            rows: self.env.features.rows().to_vec(),
            targets: self.values.clone(),
            weights: self.dist.pi.clone(),
        }
    }

    /// The right-hand side of the decomposition: ½ Σ over ordered sibling
    /// pairs of (π(i,j)+π(j,i))[Δ − (η(i,j)J(i) − η(j,i)J(j))]² + K(i,j),
    /// plus the singleton pairs, which do not depend on w.
    pub fn decomposed_e(&self, w: &[f64]) -> Result<f64> {
        let mut total = 0.5 * self.e1_objective()?.value(w);
        for (a, b) in self.sibling_pairs() {
            let (pab, pba) = (self.dist.pair(a, b), self.dist.pair(b, a));
            let (ja, jb) = (self.values[a], self.values[b]);
            let target = (pab * ja - pba * jb) / (pab + pba);
            // K for each ordering; the pair appears twice
            let k = pab * ja * ja + pba * jb * jb - (pab + pba) * target * target;
            total += k;
        }
        for (&(i, j), &m) in &self.dist.pair_pi {
            if i == j {
                total += m * self.values[i] * self.values[i];
            }
        }
        Ok(total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub env: String,
    pub policy: String,
    pub weights: Vec<f64>,
    pub e: f64,
    pub e1: f64,
    pub e2: f64,
    pub e_dt: f64,
}

pub fn describe_policy(bmdp: &TabularBmdp, policy: &Policy) -> String {
    match policy {
        Policy::Fixed(actions) => actions
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                format!("{}:{}", bmdp.state_name(i), bmdp.action_names.get(a).map(String::as_str).unwrap_or("?"))
            })
            .collect::<Vec<_>>()
            .join(","),
        Policy::Stochastic(_) => "stochastic".into(),
    }
}

pub fn error_functionals(env: &TabularEnv, policy: &Policy, alpha: f64, w: &[f64]) -> Result<ErrorReport> {
    let an = PolicyAnalysis::new(env, policy, alpha)?;
    an.error_report(w)
}

impl PolicyAnalysis<'_> {
    pub fn error_report(&self, w: &[f64]) -> Result<ErrorReport> {
        if w.len() != self.env.features.dim() {
            return Err(LabError::DimensionMismatch { expected: self.env.features.dim(), got: w.len() });
        }
        let report = ErrorReport {
            env: self.env.bmdp.name.clone(),
            policy: describe_policy(&self.env.bmdp, &self.policy),
            weights: w.to_vec(),
            e: self.e_objective().value(w),
            e1: self.e1_objective()?.value(w),
            e2: self.e2_objective()?.value(w),
            e_dt: self.dt_objective().value(w),
        };
        if [report.e, report.e1, report.e2, report.e_dt].iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite);
        }
        Ok(report)
    }
}

/// TD(1) limit: π-weighted least squares on the exact values.
pub fn td_limit_ls(env: &TabularEnv, policy: &Policy, alpha: f64) -> Result<Vec<f64>> {
    let an = PolicyAnalysis::new(env, policy, alpha)?;
    weighted_ls_weight(&env.features, &an.values, &an.dist.pi)
}

/// STD(1) limit: argmin E(w).
pub fn std_limit_ls(env: &TabularEnv, policy: &Policy, alpha: f64) -> Result<Vec<f64>> {
    let an = PolicyAnalysis::new(env, policy, alpha)?;
    an.e_objective().minimize().map_err(|e| match e {
        LabError::RankDeficient(m) => LabError::RankDeficient(format!("sibling-difference features: {m}")),
        other => other,
    })
}

/// DT(1) limit: argmin E_DT(w).
pub fn dt_limit_ls(env: &TabularEnv, policy: &Policy, alpha: f64) -> Result<Vec<f64>> {
    PolicyAnalysis::new(env, policy, alpha)?.dt_objective().minimize()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub e_observed: f64,
    pub e_inf: f64,
    pub factor: f64,
    pub bound: f64,
    pub tolerance: f64,
    /// bound + tolerance − e_observed; non-negative on a pass.
    pub margin: f64,
    pub pass: bool,
}

/// E(w_observed) ≤ ((1 − αλ)/(1 − α))·inf_w E(w) + tolerance.
pub fn theorem1_bound_check(
    env: &TabularEnv,
    policy: &Policy,
    alpha: f64,
    lambda: f64,
    w_observed: &[f64],
    tolerance: f64,
) -> Result<BoundCheck> {
    let an = PolicyAnalysis::new(env, policy, alpha)?;
    let objective = an.e_objective();
    let w_inf = objective.minimize()?;
    let e_inf = objective.value(&w_inf);
    let e_observed = objective.value(w_observed);
    let factor = (1.0 - alpha * lambda) / (1.0 - alpha);
    let bound = factor * e_inf;
    let margin = bound + tolerance - e_observed;
    Ok(BoundCheck { e_observed, e_inf, factor, bound, tolerance, margin, pass: margin >= 0.0 })
}

/// One sibling pair, oriented so that J(i) ≥ J(j) (ties: the policy reaches
/// `i` at least as often).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignCondition {
    pub i: usize,
    pub j: usize,
    pub eta_ij: f64,
    pub eta_ji: f64,
    pub value_i: f64,
    pub value_j: f64,
    /// η(i,j) J(i) − η(j,i) J(j)
    pub target: f64,
    /// The policy reaches the better state more often.
    pub prefers_i: bool,
    /// (η(i,j)/η(j,i))·J(i) > J(j), evaluated without dividing.
    pub condition_holds: bool,
    pub target_sign_correct: bool,
}

pub fn sign_condition_check(env: &TabularEnv, policy: &Policy, alpha: f64) -> Result<Vec<SignCondition>> {
    let an = PolicyAnalysis::new(env, policy, alpha)?;
    an.sibling_pairs()
        .into_iter()
        .map(|(a, b)| {
            let (va, vb) = (an.values[a], an.values[b]);
            let (i, j) = if va > vb || (va == vb && eta(&an.dist, a, b)? >= 0.5) { (a, b) } else { (b, a) };
            let (eta_ij, eta_ji) = (eta(&an.dist, i, j)?, eta(&an.dist, j, i)?);
            let (vi, vj) = (an.values[i], an.values[j]);
            let target = eta_ij * vi - eta_ji * vj;
            let truth = vi - vj;
            Ok(SignCondition {
                i,
                j,
                eta_ij,
                eta_ji,
                value_i: vi,
                value_j: vj,
                target,
                prefers_i: eta_ij > eta_ji,
                condition_holds: eta_ij * vi > eta_ji * vj,
                target_sign_correct: target.signum() == truth.signum() || (truth == 0.0 && target == 0.0),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RolloutEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    pub horizon: u64,
}

/// Smallest T with α^T·g_max/(1 − α) < ε.
pub fn rollout_horizon(alpha: f64, g_max: f64, epsilon: f64) -> u64 {
    let mut t = 0;
    let mut tail = g_max / (1.0 - alpha);
    while tail >= epsilon {
        tail *= alpha;
        t += 1;
    }
    t
}

/// Mean of `n` truncated discounted returns from `state`.
pub fn rollout_estimate<E, R>(
    env: &E,
    rule: &R,
    state: &E::State,
    n: usize,
    alpha: f64,
    epsilon: f64,
    rng: &mut LabRng,
) -> Result<RolloutEstimate>
where
    E: SiblingEnv,
    R: ActionRule<E::State>,
{
    if !(epsilon > 0.0) || !(0.0..1.0).contains(&alpha) || n == 0 {
        return Err(LabError::config("rollout", "need epsilon > 0, alpha in [0, 1) and n >= 1"));
    }
    let horizon = rollout_horizon(alpha, env.reward_bound(), epsilon);
    let mut returns = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = state.clone();
        let mut total = 0.0;
        let mut discount = 1.0;
        for _ in 0..horizon {
            let exp = env.expand(&x)?;
            let a = rule.choose(&x, &exp, rng)?;
            let (next, _, reward) = sample_action(&exp, a, rng)?;
            total += discount * reward;
            discount *= alpha;
            x = next;
        }
        returns.push(total);
    }
    let mean = returns.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(RolloutEstimate { mean, std_error, n, horizon })
}

/// (1/|states|) Σₓ [J̃(x, w) − Ĵ(x)]² with Ĵ from rollouts.
#[allow(clippy::too_many_arguments)]
pub fn rollout_error_metric<E, R, F>(
    env: &E,
    rule: &R,
    phi: &F,
    w: &[f64],
    states: &[E::State],
    n: usize,
    alpha: f64,
    epsilon: f64,
    rng: &mut LabRng,
) -> Result<f64>
where
    E: SiblingEnv,
    R: ActionRule<E::State>,
    F: FeatureMap<E::State>,
{
    if states.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for x in states {
        let est = rollout_estimate(env, rule, x, n, alpha, epsilon, rng)?;
        total += (value(w, x, phi)? - est.mean).powi(2);
    }
    Ok(total / states.len() as f64)
}

/// J(A), J(B) of the two-state system under the optimal policy.
pub fn two_state_closed_form(alpha: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(LabError::config("alpha", format!("{alpha} outside [0, 1)")));
    }
    let jb = (0.8 - 0.16 * alpha) / (1.0 - alpha);
    Ok((jb - 0.8, jb))
}

/// STD(1) limit on the three-state counterexample under its optimal policy.
pub fn counterexample_std_limit(alpha: f64) -> f64 {
    0.9 + 0.72 * alpha * alpha / (1.0 - alpha * alpha)
}

/// DT(1) limit on the three-state counterexample under its optimal policy.
pub fn counterexample_dt_limit(alpha: f64) -> f64 {
    (-0.405 + 0.495 * alpha / (1.0 + alpha)) / 0.695
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{greedy_policy, GreedyMode};
    use crate::envs::{dt_counterexample, three_state, two_state};
    use crate::seeded_rng;

    #[test]
    fn two_state_td_limit() {
        let env = two_state();
        let w = td_limit_ls(&env, &env.optimal, 0.5).unwrap();
        assert!((w[0] - 0.88).abs() < 1e-12);
        let w = weighted_ls_weight(&env.features, &[0.64, 1.44], &[0.2, 0.8]).unwrap();
        assert!((w[0] - 0.88).abs() < 1e-12);
    }

    #[test]
    fn representable_target_recovered() {
        let env = three_state();
        let target: Vec<f64> = env.features.rows().iter().map(|r| dot(r, &[3.0, -2.0])).collect();
        let w = weighted_ls_weight(&env.features, &target, &[0.2, 0.3, 0.5]).unwrap();
        assert!((w[0] - 3.0).abs() < 1e-10 && (w[1] + 2.0).abs() < 1e-10);
    }

    #[test]
    fn two_state_eta() {
        let env = two_state();
        let dist = stationary_distribution(&env.bmdp, &env.optimal).unwrap();
        assert!((eta(&dist, 0, 1).unwrap() - 0.2).abs() < 1e-12);
        assert!((eta(&dist, 1, 0).unwrap() - 0.8).abs() < 1e-12);
        let dist = stationary_distribution(&env.bmdp, &Policy::Fixed(vec![0, 1])).unwrap();
        assert!(matches!(eta(&dist, 5, 6), Err(LabError::UndefinedPair(5, 6))));
    }

    #[test]
    fn two_state_std_limit() {
        let env = two_state();
        let w = std_limit_ls(&env, &env.optimal, 0.5).unwrap();
        assert!((w[0] + 1.024).abs() < 1e-12);
        let an = PolicyAnalysis::new(&env, &env.optimal, 0.5).unwrap();
        assert!(an.e_objective().gradient(&w)[0].abs() < 1e-9);
        // E(w) = 0.2(w − 0.64)² + 0.8(−w − 1.44)²
        let e = |w: f64| 0.2 * (w - 0.64).powi(2) + 0.8 * (-w - 1.44).powi(2);
        for w in [-2.0, 0.0, 0.88] {
            assert!((an.e_objective().value(&[w]) - e(w)).abs() < 1e-12);
        }
        let frozen = greedy_policy(&env.bmdp, &[1.0], &env.features, GreedyMode::SuccessorPreference, 0.5).unwrap();
        let w = std_limit_ls(&env, &frozen, 0.5).unwrap();
        assert!((w[0] + 0.016).abs() < 1e-12);
    }

    #[test]
    fn perfect_fit_zeroes_e1() {
        let env = two_state();
        let an = PolicyAnalysis::new(&env, &env.optimal, 0.5).unwrap();
        let e1 = an.e1_objective().unwrap();
        // Δ(A,B) = w must equal 0.2·0.64 − 0.8·1.44
        let w = 0.2 * 0.64 - 0.8 * 1.44;
        assert!(e1.value(&[w]).abs() < 1e-24);
    }

    #[test]
    fn e_is_half_e1_plus_constant() {
        for env in [two_state(), three_state(), dt_counterexample(0.5)] {
            let an = PolicyAnalysis::new(&env, &env.optimal, env.alpha).unwrap();
            let d = env.features.dim();
            for k in 0..5 {
                let w: Vec<f64> = (0..d).map(|c| (k as f64 - 2.0) * 1.7 + c as f64).collect();
                let direct = an.e_objective().value(&w);
                assert!((direct - an.decomposed_e(&w).unwrap()).abs() < 1e-9 * (1.0 + direct));
            }
        }
    }

    #[test]
    fn coincident_siblings_rank_deficient() {
        let mut env = dt_counterexample(0.5);
        // only singleton pairs remain when B always lands on A
        env.bmdp.rows[1][0].probs = vec![1.0, 0.0, 0.0];
        env.bmdp.rows[1][1].probs = vec![1.0, 0.0, 0.0];
        assert!(matches!(std_limit_ls(&env, &env.optimal, 0.5), Err(LabError::RankDeficient(_))));
    }

    #[test]
    fn counterexample_limits() {
        for alpha in [0.0, 0.3, 0.5, 0.9, 0.99] {
            let env = dt_counterexample(alpha);
            let s = std_limit_ls(&env, &env.optimal, alpha).unwrap()[0];
            assert!((s - counterexample_std_limit(alpha)).abs() < 1e-9, "alpha {alpha}: {s}");
            let d = dt_limit_ls(&env, &env.optimal, alpha).unwrap()[0];
            assert!((d - counterexample_dt_limit(alpha)).abs() < 1e-9, "alpha {alpha}: {d}");
            assert!(d < 0.0 && s > 0.0);
        }
        assert!((counterexample_std_limit(0.5) - 1.14).abs() < 1e-12);
    }

    #[test]
    fn golden_section_matches_normal_equations() {
        for alpha in [0.3, 0.5, 0.9] {
            let env = dt_counterexample(alpha);
            let an = PolicyAnalysis::new(&env, &env.optimal, alpha).unwrap();
            for ls in [an.e_objective(), an.dt_objective(), an.td_objective()] {
                let exact = ls.minimize().unwrap()[0];
                let brute = ls.brute_force_minimize().unwrap();
                assert!((exact - brute).abs() < 1e-8, "{exact} vs {brute}");
            }
        }
        let three = three_state();
        let an = PolicyAnalysis::new(&three, &three.optimal, 0.95).unwrap();
        assert!(an.e_objective().brute_force_minimize().is_err());
    }

    #[test]
    fn golden_section_on_parabola() {
        let x = golden_section_minimize(|x| (x - 1.25).powi(2), -10.0, 10.0, 1e-12);
        assert!((x - 1.25).abs() < 1e-9);
    }

    #[test]
    fn bound_check_at_infimum() {
        let env = two_state();
        let w = std_limit_ls(&env, &env.optimal, 0.5).unwrap();
        let check = theorem1_bound_check(&env, &env.optimal, 0.5, 1.0, &w, 0.0).unwrap();
        assert_eq!(check.factor, 1.0);
        assert!(check.pass && check.margin.abs() < 1e-9);
        let check = theorem1_bound_check(&env, &env.optimal, 0.5, 1.0, &[0.88], 1e-6).unwrap();
        assert!(!check.pass);
        let check = theorem1_bound_check(&env, &env.optimal, 0.5, 0.0, &[-0.9], 0.0).unwrap();
        assert_eq!(check.factor, 2.0);
    }

    #[test]
    fn sign_conditions() {
        let env = two_state();
        // optimal policy prefers B and J(B) > J(A)
        let report = sign_condition_check(&env, &env.optimal, 0.5).unwrap();
        assert_eq!(report.len(), 1);
        let c = &report[0];
        assert_eq!((c.i, c.j), (1, 0));
        assert!(c.prefers_i && c.condition_holds && c.target_sign_correct);

        // a coin toss targets half the true difference
        let uniform = Policy::uniform(&env.bmdp);
        let c = &sign_condition_check(&env, &uniform, 0.5).unwrap()[0];
        assert!((c.eta_ij - 0.5).abs() < 1e-12);
        assert!((c.target - 0.5 * (c.value_i - c.value_j)).abs() < 1e-12);
        assert!(c.target_sign_correct);

        // a strong preference for the slightly worse state flips the target
        let mut env = two_state();
        env.bmdp.rewards = vec![vec![1.0, 1.0], vec![1.0, 2.0]];
        let c = &sign_condition_check(&env, &Policy::always(&env.bmdp, 0), 0.5).unwrap()[0];
        assert_eq!((c.i, c.j), (1, 0));
        assert!((c.value_i - 2.24).abs() < 1e-12 && (c.value_j - 2.04).abs() < 1e-12);
        assert!(!c.prefers_i && !c.condition_holds && !c.target_sign_correct);
    }

    #[test]
    fn rollouts_match_exact_values() {
        let env = three_state();
        let exact = exact_value(&env.bmdp, &env.optimal, env.alpha).unwrap();
        let mut rng = seeded_rng(11);
        for (i, v) in exact.iter().enumerate() {
            let est = rollout_estimate(&env.bmdp, &env.optimal, &i, 1000, env.alpha, 1e-4, &mut rng).unwrap();
            assert!((est.mean - v).abs() < 3.0 * est.std_error, "{i}: {est:?} vs {v}");
        }
        let quiet = env.bmdp.with_scaled_rewards(0.0);
        let est = rollout_estimate(&quiet, &env.optimal, &0, 50, env.alpha, 1e-4, &mut rng).unwrap();
        assert_eq!((est.mean, est.std_error, est.horizon), (0.0, 0.0, 0));
    }

    #[test]
    fn horizon_respects_tail() {
        let t = rollout_horizon(0.95, 4.0, 1e-4);
        assert!(0.95f64.powi(t as i32) * 4.0 / 0.05 < 1e-4);
        assert!(0.95f64.powi(t as i32 - 1) * 4.0 / 0.05 >= 1e-4);
    }

    #[test]
    fn closed_form_two_state() {
        let (a, b) = two_state_closed_form(0.5).unwrap();
        assert!((a - 0.64).abs() < 1e-12 && (b - 1.44).abs() < 1e-12);
        assert_eq!(two_state_closed_form(0.0).unwrap(), (0.0, 0.8));
        assert!(two_state_closed_form(1.0).is_err());
    }
}
