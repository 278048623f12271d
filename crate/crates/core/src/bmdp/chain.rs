//! Exact analysis of the Markov chains induced by fixed policies.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{ActionRow, Policy, TabularBmdp};
use crate::linalg::solve_checked;
use crate::{LabError, Result};

/// Residual bound on πP = π and on the Bellman equation.
pub const CHAIN_RESIDUAL_TOL: f64 = 1e-10;

/// A finite chain with per-transition rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    /// Row-stochastic `p[i][j]`.
    pub p: Vec<Vec<f64>>,
    /// `g[i][j]`, the reward for moving from i to j.
    pub g: Vec<Vec<f64>>,
}

impl MarkovChain {
    pub fn n_states(&self) -> usize {
        self.p.len()
    }

    /// Expected one-step reward from each state.
    pub fn expected_reward(&self) -> Vec<f64> {
        self.p
            .iter()
            .zip(&self.g)
            .map(|(pr, gr)| pr.iter().zip(gr).map(|(p, g)| p * g).sum())
            .collect()
    }

    /// Recurrent classes, each sorted, plus the transient states.
    pub fn classes(&self) -> (Vec<Vec<usize>>, Vec<usize>) {
        let n = self.n_states();
        let reach: Vec<Vec<bool>> = (0..n).map(|s| self.reachable_from(s)).collect();
        let mut assigned = vec![false; n];
        let mut recurrent = Vec::new();
        let mut transient = Vec::new();
        for i in 0..n {
            if assigned[i] {
                continue;
            }
            let closed = (0..n).all(|j| !reach[i][j] || reach[j][i]);
            if closed {
                let class: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
                for &j in &class {
                    assigned[j] = true;
                }
                recurrent.push(class);
            } else {
                assigned[i] = true;
                transient.push(i);
            }
        }
        (recurrent, transient)
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let n = self.n_states();
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for (j, &p) in self.p[i].iter().enumerate() {
                if p > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// The unique stationary distribution.
    ///
    /// For periodic chains this is the time-average (Cesàro) distribution.
    /// Transient states get zero mass; more than one recurrent class is an
    /// error.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let n = self.n_states();
        if n == 0 {
            return Err(LabError::Reducible("empty chain".into()));
        }
        let (recurrent, transient) = self.classes();
        if recurrent.len() != 1 {
            return Err(LabError::Reducible(format!(
                "recurrent classes {recurrent:?}, transient states {transient:?}"
            )));
        }
        // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate().take(n - 1) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.p[j][i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        a[n - 1] = vec![1.0; n];
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let mut pi = solve_checked(&a, &b)?;
        for &t in &transient {
            pi[t] = 0.0;
        }
        for v in pi.iter_mut() {
            if v.abs() < 1e-300 {
                *v = 0.0;
            }
        }
        let residual = self.stationary_residual(&pi);
        if residual > CHAIN_RESIDUAL_TOL {
            return Err(LabError::Solve(format!("stationary residual {residual:e}")));
        }
        Ok(pi)
    }

    /// max_j |(πP)_j - π_j|
    pub fn stationary_residual(&self, pi: &[f64]) -> f64 {
        let n = self.n_states();
        (0..n)
            .map(|j| {
                let flow: f64 = (0..n).map(|i| pi[i] * self.p[i][j]).sum();
                (flow - pi[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Discounted value J = (I - αP)^{-1} r̄.
    pub fn value(&self, alpha: f64) -> Result<Vec<f64>> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(LabError::config("alpha", format!("discount {alpha} outside [0, 1)")));
        }
        let n = self.n_states();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| f64::from(u8::from(i == j)) - alpha * self.p[i][j]).collect())
            .collect();
        let j = solve_checked(&a, &self.expected_reward())?;
        let residual = self.bellman_residual(&j, alpha);
        if residual > CHAIN_RESIDUAL_TOL * (1.0 + j.iter().fold(0.0_f64, |m, v| m.max(v.abs()))) {
            return Err(LabError::Solve(format!("Bellman residual {residual:e}")));
        }
        Ok(j)
    }

    /// max_i |J(i) - Σ_j p(i,j)[g(i,j) + αJ(j)]|
    pub fn bellman_residual(&self, values: &[f64], alpha: f64) -> f64 {
        (0..self.n_states())
            .map(|i| {
                let backup: f64 = self.p[i]
                    .iter()
                    .zip(&self.g[i])
                    .zip(values)
                    .map(|((p, g), v)| p * (g + alpha * v))
                    .sum();
                (values[i] - backup).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl TabularBmdp {
    /// The chain induced by `policy`.
    pub fn chain(&self, policy: &Policy) -> Result<MarkovChain> {
        policy.validate(self)?;
        let n = self.n_states();
        let mut p = vec![vec![0.0; n]; n];
        for (i, row) in p.iter_mut().enumerate() {
            let probs = policy.action_probs(self, i)?;
            for (r, q) in self.rows[i].iter().zip(probs) {
                for (j, v) in row.iter_mut().enumerate() {
                    *v += q * r.probs[j];
                }
            }
        }
        Ok(MarkovChain { p, g: self.rewards.clone() })
    }
}

/// Stationary state distribution plus the distribution over
/// (state, sibling) pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    /// Ordered pairs `(i, i')`: in state i with i' as its sibling.
    pub pair_pi: BTreeMap<(usize, usize), f64>,
}

impl StationaryDistribution {
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.pair_pi.get(&(i, j)).copied().unwrap_or(0.0)
    }
}

pub fn stationary_distribution(bmdp: &TabularBmdp, policy: &Policy) -> Result<StationaryDistribution> {
    let chain = bmdp.chain(policy)?;
    let pi = chain.stationary()?;
    let mut pair_pi = BTreeMap::new();
    for (j, &mass) in pi.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let (lo, hi) = bmdp.successor_support(j)?;
        for (i, sib) in [(lo, hi), (hi, lo)] {
            let p = chain.p[j][i];
            if p > 0.0 {
                *pair_pi.entry((i, sib)).or_insert(0.0) += mass * p;
            }
            if lo == hi {
                break;
            }
        }
    }
    Ok(StationaryDistribution { pi, pair_pi })
}

pub fn exact_value(bmdp: &TabularBmdp, policy: &Policy, alpha: f64) -> Result<Vec<f64>> {
    bmdp.chain(policy)?.value(alpha)
}

/// The chain over (state, sibling) pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedChain {
    /// `pairs[k]` is the (state, sibling) label of derived state k.
    pub pairs: Vec<(usize, usize)>,
    /// Single-action BMDP over the pairs.
    pub bmdp: TabularBmdp,
}

impl DerivedChain {
    pub fn index_of(&self, pair: (usize, usize)) -> Option<usize> {
        self.pairs.iter().position(|&p| p == pair)
    }

    pub fn policy(&self) -> Policy {
        Policy::Fixed(vec![0; self.pairs.len()])
    }
}

/// Build the sibling-pair chain: states are the pairs with stationary mass,
/// and (i, i') moves to (j, j') with probability p(i, j) when {j, j'} is
/// the sibling set following i.
pub fn derived_sibling_chain(bmdp: &TabularBmdp, policy: &Policy) -> Result<DerivedChain> {
    let dist = stationary_distribution(bmdp, policy)?;
    let chain = bmdp.chain(policy)?;
    let pairs: Vec<(usize, usize)> =
        dist.pair_pi.iter().filter(|(_, &m)| m > 0.0).map(|(&k, _)| k).collect();
    let m = pairs.len();
    let index: BTreeMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let mut rows = Vec::with_capacity(m);
    for &(i, _) in &pairs {
        let (lo, hi) = bmdp.successor_support(i)?;
        let mut probs = vec![0.0; m];
        for (j, sib) in [(lo, hi), (hi, lo)] {
            let p = chain.p[i][j];
            if p > 0.0 {
                let target = *index.get(&(j, sib)).ok_or_else(|| {
                    LabError::Reducible(format!("pair ({j}, {sib}) reached without stationary mass"))
                })?;
                probs[target] = p;
            }
            if lo == hi {
                break;
            }
        }
        rows.push(vec![ActionRow { action: 0, probs }]);
    }
    // the reward of (i, i') -> (j, j') is g(i, j)
    let rewards = pairs
        .iter()
        .map(|&(i, _)| pairs.iter().map(|&(j, _)| bmdp.rewards[i][j]).collect())
        .collect();
    let names = pairs
        .iter()
        .map(|&(i, s)| format!("({},{})", bmdp.state_name(i), bmdp.state_name(s)))
        .collect();
    Ok(DerivedChain {
        pairs,
        bmdp: TabularBmdp {
            name: format!("{}-sibling-pairs", bmdp.name),
            state_names: names,
            action_names: vec!["follow".into()],
            rows,
            rewards,
        },
    })
}

/// Two independent copies of a policy's chain run in lock-step.
#[derive(Clone, Debug, PartialEq)]
pub struct CompoundChain {
    pub n_base: usize,
    /// State (x, x̂) has index `x * n_base + x̂`; g is g(x,y) - g(x̂,ŷ).
    pub chain: MarkovChain,
}

impl CompoundChain {
    pub fn index(&self, x: usize, x_hat: usize) -> usize {
        x * self.n_base + x_hat
    }

    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.n_base, k % self.n_base)
    }
}

pub fn compound_chain(bmdp: &TabularBmdp, policy: &Policy) -> Result<CompoundChain> {
    let base = bmdp.chain(policy)?;
    let n = base.n_states();
    let m = n * n;
    let mut p = vec![vec![0.0; m]; m];
    let mut g = vec![vec![0.0; m]; m];
    for x in 0..n {
        for xh in 0..n {
            let from = x * n + xh;
            for y in 0..n {
                for yh in 0..n {
                    let to = y * n + yh;
                    p[from][to] = base.p[x][y] * base.p[xh][yh];
                    g[from][to] = base.g[x][y] - base.g[xh][yh];
                }
            }
        }
    }
    Ok(CompoundChain { n_base: n, chain: MarkovChain { p, g } })
}
