//! Random small BMDPs and the invariant checks shared by the property suite
//! and the acceptance run.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use sibling_td::approx::{DifferentiableValue, FeatureMap, FeatureMatrix, LinearValue};
use sibling_td::bmdp::{
    derived_sibling_chain, stationary_distribution, trajectory, ActionRow, Policy, SiblingStep, TabularBmdp,
};
use sibling_td::envs::TabularEnv;
use sibling_td::learners::{LearnerConfig, LearnerState, StepSchedule, Variant};
use sibling_td::oracle::{eta, PolicyAnalysis};
use sibling_td::{seeded_rng, LabRng};

pub type Check = Result<(), String>;

/// A random BMDP with features, discount and a policy under which every
/// state is recurrent.
#[derive(Clone, Debug)]
pub struct Case {
    pub env: TabularEnv,
    pub policy: Policy,
    pub seed: u64,
}

fn random_probability(rng: &mut LabRng) -> f64 {
    match rng.gen_range(0..6) {
        0 => 1.0,
        1 => 0.0,
        _ => rng.gen_range(0.05..0.95),
    }
}

fn try_case(rng: &mut LabRng, max_states: usize) -> Option<(TabularEnv, Policy)> {
    let n = rng.gen_range(2..=max_states);
    let n_actions = 2;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut targets: Vec<usize> = (0..n).collect();
        targets.shuffle(rng);
        let (lo, hi) = (targets[0].min(targets[1]), targets[0].max(targets[1]));
        let single = rng.gen_bool(0.15);
        let k = if single { 1 } else { rng.gen_range(1..=n_actions) };
        let mut actions: Vec<usize> = (0..n_actions).collect();
        actions.shuffle(rng);
        actions.truncate(k);
        actions.sort_unstable();
        let state_rows = actions
            .into_iter()
            .map(|a| {
                let mut probs = vec![0.0; n];
                if single {
                    probs[lo] = 1.0;
                } else {
                    let p = random_probability(rng);
                    probs[lo] = p;
                    probs[hi] += 1.0 - p;
                }
                ActionRow { action: a, probs }
            })
            .collect::<Vec<_>>();
        rows.push(state_rows);
    }
    let rewards = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let bmdp = TabularBmdp {
        name: "random".into(),
        state_names: (0..n).map(|i| format!("s{i}")).collect(),
        action_names: (0..n_actions).map(|a| format!("a{a}")).collect(),
        rows,
        rewards,
    };
    assert!(bmdp.validate().is_valid(), "generator produced an invalid BMDP");
    let d = rng.gen_range(1..=3);
    let features =
        FeatureMatrix::new((0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect()).ok()?;
    let policy = if rng.gen_bool(0.5) {
        Policy::Fixed(bmdp.rows.iter().map(|r| r[rng.gen_range(0..r.len())].action).collect())
    } else {
        Policy::Stochastic(
            bmdp.rows
                .iter()
                .map(|r| {
                    let raw: Vec<f64> = r.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
                    let s: f64 = raw.iter().sum();
                    raw.iter().map(|x| x / s).collect()
                })
                .collect(),
        )
    };
    let alpha = rng.gen_range(0.0..0.95);
    let dist = stationary_distribution(&bmdp, &policy).ok()?;
    if dist.pi.iter().any(|&p| p <= 1e-9) {
        return None;
    }
    Some((TabularEnv { bmdp, features, alpha, optimal: policy.clone() }, policy))
}

/// Deterministic in `seed`; resamples until the chain is irreducible.
pub fn random_case(seed: u64, max_states: usize) -> Case {
    let mut rng = seeded_rng(seed);
    loop {
        if let Some((env, policy)) = try_case(&mut rng, max_states) {
            return Case { env, policy, seed };
        }
    }
}

pub fn random_weights(case: &Case, salt: u64) -> Vec<f64> {
    let mut rng = seeded_rng(case.seed ^ salt.rotate_left(17));
    (0..case.env.features.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

/// π and the pair distribution are distributions, and summing the pair
/// distribution over siblings recovers π.
pub fn check_distributions(case: &Case) -> Check {
    let dist = stationary_distribution(&case.env.bmdp, &case.policy).map_err(|e| e.to_string())?;
    let n = case.env.bmdp.n_states();
    let total: f64 = dist.pi.iter().sum();
    if !close(total, 1.0, 1e-12) || dist.pi.iter().any(|&p| p < 0.0) {
        return Err(format!("π = {:?} does not sum to 1", dist.pi));
    }
    let pair_total: f64 = dist.pair_pi.values().sum();
    if !close(pair_total, 1.0, 1e-12) {
        return Err(format!("pair masses sum to {pair_total}"));
    }
    for i in 0..n {
        let marginal: f64 = (0..n).map(|j| dist.pair(i, j)).sum();
        if !close(marginal, dist.pi[i], 1e-12) {
            return Err(format!("Σ_j π({i}, j) = {marginal} but π({i}) = {}", dist.pi[i]));
        }
    }
    let residual = case.env.bmdp.chain(&case.policy).map_err(|e| e.to_string())?.stationary_residual(&dist.pi);
    if residual > 1e-12 {
        return Err(format!("πP − π residual {residual:e}"));
    }
    Ok(())
}

/// E(w) equals ½E1(w) plus the w-free terms.
pub fn check_decomposition(case: &Case, w: &[f64]) -> Check {
    let an = PolicyAnalysis::new(&case.env, &case.policy, case.env.alpha).map_err(|e| e.to_string())?;
    let e = an.e_objective().value(w);
    let rhs = an.decomposed_e(w).map_err(|e| e.to_string())?;
    if !close(e, rhs, 1e-9) {
        return Err(format!("E = {e}, decomposition gives {rhs}"));
    }
    // E - ½E1 is constant in w
    let e1 = an.e1_objective().map_err(|e| e.to_string())?;
    let zero = vec![0.0; w.len()];
    let c_w = e - 0.5 * e1.value(w);
    let c_0 = an.e_objective().value(&zero) - 0.5 * e1.value(&zero);
    if !close(c_w, c_0, 1e-9) {
        return Err(format!("E − ½E1 varies with w: {c_w} vs {c_0}"));
    }
    Ok(())
}

/// η(i, j) + η(j, i) = 1 on every sibling pair, each in [0, 1].
pub fn check_eta(case: &Case) -> Check {
    let an = PolicyAnalysis::new(&case.env, &case.policy, case.env.alpha).map_err(|e| e.to_string())?;
    for (i, j) in an.sibling_pairs() {
        let (a, b) = (eta(&an.dist, i, j).map_err(|e| e.to_string())?, eta(&an.dist, j, i).map_err(|e| e.to_string())?);
        if !(0.0..=1.0).contains(&a) || !close(a + b, 1.0, 1e-12) {
            return Err(format!("η({i},{j}) = {a}, η({j},{i}) = {b}"));
        }
    }
    Ok(())
}

fn diff(phi: &FeatureMatrix, a: usize, b: usize) -> Vec<f64> {
    phi.row(a).iter().zip(phi.row(b)).map(|(x, y)| x - y).collect()
}

/// Each learner's trace follows z ← αλz + (its feature vector at the next
/// state), and the weights move by γ d z_old.
pub fn check_trace_recurrence(case: &Case, lambda: f64, steps: u64) -> Check {
    let phi = &case.env.features;
    let alpha = case.env.alpha;
    let rate = 0.01;
    for variant in [Variant::Td, Variant::Std] {
        let cfg = LearnerConfig { lambda, alpha, schedule: StepSchedule::Constant { rate }, variant };
        let w0 = random_weights(case, 3);
        let mut learner = LearnerState::new(w0);
        let mut rng = seeded_rng(case.seed.wrapping_add(1));
        for step in trajectory(&case.env.bmdp, &case.policy, 0, steps, &mut rng) {
            let step = step.map_err(|e| e.to_string())?;
            let (z_old, w_old) = (learner.z.clone(), learner.w.clone());
            let d = match variant {
                Variant::Td => learner.td_step(&step, &cfg, phi),
                _ => learner.std_step(&step, &cfg, phi),
            }
            .map_err(|e| e.to_string())?;
            let next = match variant {
                Variant::Td => phi.row(step.next_state).to_vec(),
                _ => diff(phi, step.next_state, step.next_sibling),
            };
            for k in 0..next.len() {
                let z_want = alpha * lambda * z_old[k] + next[k];
                let w_want = w_old[k] + rate * d * z_old[k];
                if !close(learner.z[k], z_want, 1e-12) || !close(learner.w[k], w_want, 1e-12) {
                    return Err(format!(
                        "{variant:?} step {}: z {} vs {z_want}, w {} vs {w_want}",
                        step.t, learner.z[k], learner.w[k]
                    ));
                }
            }
        }
    }
    Ok(())
}

/// A smooth nonlinear value used to exercise the gradient hook.
pub struct SoftValue<'a>(pub &'a FeatureMatrix);

impl DifferentiableValue<usize> for SoftValue<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, w: &[f64], state: &usize) -> f64 {
        let s: f64 = w.iter().zip(self.0.row(*state)).map(|(a, b)| a * b).sum();
        s.tanh() + 0.1 * s * s
    }

    fn gradient_into(&self, w: &[f64], state: &usize, out: &mut [f64]) {
        let row = self.0.row(*state);
        let s: f64 = w.iter().zip(row).map(|(a, b)| a * b).sum();
        let outer = 1.0 - s.tanh().powi(2) + 0.2 * s;
        for (o, f) in out.iter_mut().zip(row) {
            *o = outer * f;
        }
    }
}

fn fd_matches(analytic: &[f64], f: impl Fn(&[f64]) -> f64, w: &[f64]) -> Check {
    for k in 0..w.len() {
        let h = 1e-6 * (1.0 + w[k].abs());
        let (mut up, mut down) = (w.to_vec(), w.to_vec());
        up[k] += h;
        down[k] -= h;
        let fd = (f(&up) - f(&down)) / (2.0 * h);
        if (analytic[k] - fd).abs() > 1e-5 * analytic[k].abs().max(1.0) {
            return Err(format!("component {k}: analytic {} vs finite difference {fd}", analytic[k]));
        }
    }
    Ok(())
}

/// Value-function gradients and least-squares objective gradients against
/// central differences.
pub fn check_gradients(case: &Case, w: &[f64]) -> Check {
    let phi = &case.env.features;
    let linear = LinearValue(phi);
    let soft = SoftValue(phi);
    for state in 0..case.env.bmdp.n_states() {
        let mut g = vec![0.0; w.len()];
        linear.gradient_into(w, &state, &mut g);
        fd_matches(&g, |x| linear.value(x, &state), w)?;
        soft.gradient_into(w, &state, &mut g);
        fd_matches(&g, |x| soft.value(x, &state), w)?;
    }
    let an = PolicyAnalysis::new(&case.env, &case.policy, case.env.alpha).map_err(|e| e.to_string())?;
    for ls in [an.e_objective(), an.td_objective(), an.dt_objective()] {
        fd_matches(&ls.gradient(w), |x| ls.value(x), w)?;
    }
    Ok(())
}

/// STD on the system against TD on its pair chain, over one shared
/// trajectory. Weights must agree bit for bit after every step, and every
/// realized pair transition must be an edge of the derived chain with the
/// base transition probability.
pub fn check_equivalence(case: &Case, lambda: f64, steps: u64) -> Check {
    let bmdp = &case.env.bmdp;
    let phi = &case.env.features;
    let derived = derived_sibling_chain(bmdp, &case.policy).map_err(|e| e.to_string())?;
    let chain = bmdp.chain(&case.policy).map_err(|e| e.to_string())?;
    let derived_phi = FeatureMatrix::new(derived.pairs.iter().map(|&(i, j)| diff(phi, i, j)).collect())
        .map_err(|e| e.to_string())?;
    let schedule = StepSchedule::Harmonic { a: 1.0, b: 10.0 };
    let std_cfg = LearnerConfig { lambda, alpha: case.env.alpha, schedule, variant: Variant::Std };
    let td_cfg = LearnerConfig { variant: Variant::Td, ..std_cfg };
    let w0 = random_weights(case, 7);
    let mut std_learner = LearnerState::new(w0.clone());
    let mut td_learner: Option<LearnerState> = None;
    let mut rng = seeded_rng(case.seed.wrapping_mul(31).wrapping_add(5));
    for step in trajectory(bmdp, &case.policy, 0, steps, &mut rng) {
        let step = step.map_err(|e| e.to_string())?;
        std_learner.std_step(&step, &std_cfg, phi).map_err(|e| e.to_string())?;
        let to = derived
            .index_of((step.next_state, step.next_sibling))
            .ok_or_else(|| format!("pair ({}, {}) missing from the derived chain", step.next_state, step.next_sibling))?;
        match td_learner.as_mut() {
            None => {
                // the first STD step starts from a zero trace, so it leaves w
                // alone and sets z to the next pair's features: exactly TD's
                // starting trace on the derived chain
                let mut td = LearnerState::with_trace(w0.clone(), derived_phi.row(to).to_vec())
                    .map_err(|e| e.to_string())?;
                td.t = 1;
                if td.w != std_learner.w || td.z != std_learner.z {
                    return Err("first step diverged".into());
                }
                td_learner = Some(td);
            }
            Some(td) => {
                let from = derived.index_of((step.state, step.sibling)).ok_or("source pair missing")?;
                let p = derived.bmdp.rows[from][0].probs[to];
                if p != chain.p[step.state][step.next_state] {
                    return Err(format!("derived edge {from}->{to} has probability {p}"));
                }
                let pair_step = SiblingStep {
                    t: step.t,
                    state: from,
                    sibling: from,
                    action: 0,
                    reward: step.reward,
                    next_state: to,
                    next_sibling: to,
                };
                td.td_step(&pair_step, &td_cfg, &derived_phi).map_err(|e| e.to_string())?;
                if td.w.iter().zip(&std_learner.w).any(|(a, b)| a.to_bits() != b.to_bits()) {
                    return Err(format!("step {}: STD w = {:?}, derived TD w = {:?}", step.t, std_learner.w, td.w));
                }
            }
        }
    }
    Ok(())
}
