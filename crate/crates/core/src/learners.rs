//! TD(λ), STD(λ) and DT(λ) learners plus the run driver.
//!
//! All three share one update shape. With value term V (a state value for
//! TD, a sibling difference for STD, a lock-step difference for DT):
//!
//! ```text
//! d_t     = reward + α V(next) - V(current)
//! w_{t+1} = w_t + γ_t d_t z_t
//! z_{t+1} = αλ z_t + ∂V(next)
//! ```
//!
//! The weight update always uses the trace from before this step's trace
//! update. STD starts from z_0 = 0; TD and DT start from the features of the
//! start state (or start pair).

use std::mem;

use serde::{Deserialize, Serialize};

use crate::approx::{DifferentiableValue, FeatureMap, Greedy, GreedyMode};
use crate::bmdp::process::sample_action;
use crate::bmdp::{ActionRule, Expansion, PairStep, Policy, SiblingEnv, SiblingStep};
use crate::linalg::{dot, norm};
use crate::{seeded_rng, LabError, LabRng, Result};

/// Step sizes γ_t.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant { rate: f64 },
    /// γ_t = a / (b + t)
    Harmonic { a: f64, b: f64 },
}

impl StepSchedule {
    pub fn gamma(&self, t: u64) -> f64 {
        match *self {
            StepSchedule::Constant { rate } => rate,
            StepSchedule::Harmonic { a, b } => a / (b + t as f64),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::Constant { rate } => rate.is_finite() && rate > 0.0,
            StepSchedule::Harmonic { a, b } => a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(LabError::config("schedule", format!("{self:?} must have positive finite parameters")))
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    Td,
    Std,
    /// STD driven through the gradient hook (linear value functions only in
    /// the run driver).
    StdNonlinear,
    /// STD with the reward term doubled.
    StdScaled,
    Dt,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Td => "td",
            Variant::Std => "std",
            Variant::StdNonlinear => "std-nonlinear",
            Variant::StdScaled => "std-scaled",
            Variant::Dt => "dt",
        }
    }

    pub fn is_std(self) -> bool {
        matches!(self, Variant::Std | Variant::StdNonlinear | Variant::StdScaled)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnerConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub schedule: StepSchedule,
    pub variant: Variant,
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(LabError::config("lambda", format!("{} outside [0, 1]", self.lambda)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(LabError::config("alpha", format!("{} outside [0, 1)", self.alpha)));
        }
        self.schedule.validate()
    }
}

/// Weights, eligibility trace and step counter.
#[derive(Clone, Debug, Default)]
pub struct LearnerState {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub t: u64,
    scratch: Vec<f64>,
}

impl PartialEq for LearnerState {
    fn eq(&self, other: &Self) -> bool {
        self.w == other.w && self.z == other.z && self.t == other.t
    }
}

impl LearnerState {
    /// Weights `w` with a zero trace.
    pub fn new(w: Vec<f64>) -> Self {
        let z = vec![0.0; w.len()];
        LearnerState { w, z, t: 0, scratch: Vec::new() }
    }

    pub fn with_trace(w: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if z.len() != w.len() {
            return Err(LabError::DimensionMismatch { expected: w.len(), got: z.len() });
        }
        Ok(LearnerState { w, z, t: 0, scratch: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.w.len() || self.z.len() != self.w.len() {
            Err(LabError::DimensionMismatch { expected: self.w.len(), got: d })
        } else {
            Ok(())
        }
    }

    /// w += γ d z, then z = αλ z + trace_features, then t += 1.
    fn apply(&mut self, d: f64, cfg: &LearnerConfig, trace_features: &[f64]) {
        let gamma = cfg.schedule.gamma(self.t);
        let decay = cfg.alpha * cfg.lambda;
        for (w, z) in self.w.iter_mut().zip(&self.z) {
            *w += gamma * d * z;
        }
        for (z, f) in self.z.iter_mut().zip(trace_features) {
            *z = decay * *z + f;
        }
        self.t += 1;
    }

    fn take_scratch(&mut self, len: usize) -> Vec<f64> {
        let mut buf = mem::take(&mut self.scratch);
        buf.clear();
        buf.resize(len, 0.0);
        buf
    }

    /// Classic TD(λ) on the realized states; siblings are ignored.
    pub fn td_step<S, F: FeatureMap<S> + ?Sized>(
        &mut self,
        step: &SiblingStep<S>,
        cfg: &LearnerConfig,
        phi: &F,
    ) -> Result<f64> {
        let d_len = phi.dim();
        self.check_dim(d_len)?;
        let mut buf = self.take_scratch(2 * d_len);
        let (cur, next) = buf.split_at_mut(d_len);
        phi.features_into(&step.state, cur);
        phi.features_into(&step.next_state, next);
        let d = step.reward + cfg.alpha * dot(&self.w, next) - dot(&self.w, cur);
        self.apply(d, cfg, next);
        self.scratch = buf;
        Ok(d)
    }

    /// STD(λ): TD on sibling feature differences.
    pub fn std_step<S, F: FeatureMap<S> + ?Sized>(
        &mut self,
        step: &SiblingStep<S>,
        cfg: &LearnerConfig,
        phi: &F,
    ) -> Result<f64> {
        self.sibling_step(step, step.reward, cfg, phi)
    }

    /// STD(λ) with the reward term doubled, which removes the factor of
    /// one half in the sibling-difference targets.
    pub fn std_step_scaled<S, F: FeatureMap<S> + ?Sized>(
        &mut self,
        step: &SiblingStep<S>,
        cfg: &LearnerConfig,
        phi: &F,
    ) -> Result<f64> {
        self.sibling_step(step, 2.0 * step.reward, cfg, phi)
    }

    fn sibling_step<S, F: FeatureMap<S> + ?Sized>(
        &mut self,
        step: &SiblingStep<S>,
        reward_term: f64,
        cfg: &LearnerConfig,
        phi: &F,
    ) -> Result<f64> {
        let d_len = phi.dim();
        self.check_dim(d_len)?;
        let mut buf = self.take_scratch(4 * d_len);
        let (cur, rest) = buf.split_at_mut(d_len);
        let (cur_sib, rest) = rest.split_at_mut(d_len);
        let (next, next_sib) = rest.split_at_mut(d_len);
        phi.features_into(&step.state, cur);
        phi.features_into(&step.sibling, cur_sib);
        phi.features_into(&step.next_state, next);
        phi.features_into(&step.next_sibling, next_sib);
        difference_in_place(cur, cur_sib);
        difference_in_place(next, next_sib);
        let d = reward_term + cfg.alpha * dot(&self.w, next) - dot(&self.w, cur);
        self.apply(d, cfg, next);
        self.scratch = buf;
        Ok(d)
    }

    /// STD(λ) for a differentiable value function: the trace accumulates
    /// gradient differences ∇J̃(x_{t+1}) - ∇J̃(x'_{t+1}).
    pub fn std_step_nonlinear<S, V: DifferentiableValue<S> + ?Sized>(
        &mut self,
        step: &SiblingStep<S>,
        cfg: &LearnerConfig,
        value_fn: &V,
    ) -> Result<f64> {
        let d_len = value_fn.dim();
        self.check_dim(d_len)?;
        let next_diff = value_fn.value_difference(&self.w, &step.next_state, &step.next_sibling);
        let cur_diff = value_fn.value_difference(&self.w, &step.state, &step.sibling);
        let d = step.reward + cfg.alpha * next_diff - cur_diff;
        let mut buf = self.take_scratch(2 * d_len);
        let (grad, grad_sib) = buf.split_at_mut(d_len);
        // gradients at w_t, before the weight update
        value_fn.gradient_into(&self.w, &step.next_state, grad);
        value_fn.gradient_into(&self.w, &step.next_sibling, grad_sib);
        difference_in_place(grad, grad_sib);
        self.apply(d, cfg, grad);
        self.scratch = buf;
        Ok(d)
    }

    /// DT(λ): TD on the compound state (x, x̂) with G̃ = J̃(x) - J̃(x̂).
    pub fn dt_step<S, F: FeatureMap<S> + ?Sized>(
        &mut self,
        step: &PairStep<S>,
        cfg: &LearnerConfig,
        phi: &F,
    ) -> Result<f64> {
        let d_len = phi.dim();
        self.check_dim(d_len)?;
        let mut buf = self.take_scratch(4 * d_len);
        let (cur, rest) = buf.split_at_mut(d_len);
        let (cur_other, rest) = rest.split_at_mut(d_len);
        let (next, next_other) = rest.split_at_mut(d_len);
        phi.features_into(&step.state, cur);
        phi.features_into(&step.other, cur_other);
        phi.features_into(&step.next_state, next);
        phi.features_into(&step.other_next, next_other);
        difference_in_place(cur, cur_other);
        difference_in_place(next, next_other);
        let d = (step.reward - step.other_reward) + cfg.alpha * dot(&self.w, next) - dot(&self.w, cur);
        self.apply(d, cfg, next);
        self.scratch = buf;
        Ok(d)
    }
}

fn difference_in_place(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x -= y;
    }
}

/// Features of a (state, sibling) pair: φ(i) - φ(i').
///
/// TD(λ) over these features on the pair chain is STD(λ) on the base chain.
pub struct PairFeatures<F>(pub F);

impl<S, F: FeatureMap<S>> FeatureMap<(S, S)> for PairFeatures<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn features_into(&self, pair: &(S, S), out: &mut [f64]) {
        self.0.features_into(&pair.0, out);
        let mut other = vec![0.0; out.len()];
        self.0.features_into(&pair.1, &mut other);
        difference_in_place(out, &other);
    }
}

/// The policy the learner observes.
#[derive(Clone, Debug, PartialEq)]
pub enum Behavior {
    /// A fixed tabular policy.
    Fixed(Policy),
    /// Greedy lookahead on a weight snapshot taken before the run.
    GreedyFrozen { weights: Vec<f64>, mode: GreedyMode },
    /// Greedy lookahead on the learner's current weights.
    GreedyOnline { mode: GreedyMode },
}

impl Behavior {
    #[allow(clippy::too_many_arguments)]
    pub fn choose<E, F>(
        &self,
        env: &E,
        phi: &F,
        live_w: &[f64],
        alpha: f64,
        state: &E::State,
        exp: &Expansion<E::State>,
        rng: &mut LabRng,
    ) -> Result<usize>
    where
        E: SiblingEnv,
        F: FeatureMap<E::State>,
    {
        match self {
            Behavior::Fixed(policy) => {
                let i = env.state_index(state).ok_or_else(|| {
                    LabError::Unsupported(format!("fixed tabular policy on continuous environment {}", env.name()))
                })?;
                policy.choose_index(i, &exp.actions, rng)
            }
            Behavior::GreedyFrozen { weights, mode } => {
                Greedy { weights, features: phi, mode: *mode, alpha }.choose(state, exp, rng)
            }
            Behavior::GreedyOnline { mode } => {
                Greedy { weights: live_w, features: phi, mode: *mode, alpha }.choose(state, exp, rng)
            }
        }
    }
}

pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec<S> {
    pub cfg: LearnerConfig,
    pub behavior: Behavior,
    pub initial_weights: Vec<f64>,
    pub steps: u64,
    pub seed: u64,
    /// Record weights every this many steps (0 records only the endpoints).
    pub log_every: u64,
    /// Defaults to the environment's start state.
    pub start: Option<S>,
    pub divergence_bound: f64,
    /// DT only: number of lock-step pairs sharing the weights, pair r having
    /// its second copy advanced r steps before learning starts. More than one
    /// lets periodic chains visit every phase combination.
    pub dt_phase_offsets: usize,
}

impl<S> RunSpec<S> {
    pub fn new(cfg: LearnerConfig, behavior: Behavior, initial_weights: Vec<f64>, steps: u64, seed: u64) -> Self {
        RunSpec {
            cfg,
            behavior,
            initial_weights,
            steps,
            seed,
            log_every: 0,
            start: None,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
            dt_phase_offsets: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogPoint {
    pub t: u64,
    pub w: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RunOutput<S> {
    pub log: Vec<LogPoint>,
    pub final_state: LearnerState,
    pub final_env_state: S,
}

/// Run one learner over a single trajectory (two lock-step trajectories per
/// phase offset for DT). Deterministic given the seed.
pub fn run_learner<E, F>(env: &E, phi: &F, spec: &RunSpec<E::State>) -> Result<RunOutput<E::State>>
where
    E: SiblingEnv,
    F: FeatureMap<E::State>,
{
    spec.cfg.validate()?;
    if spec.initial_weights.len() != phi.dim() {
        return Err(LabError::DimensionMismatch { expected: phi.dim(), got: spec.initial_weights.len() });
    }
    if let Behavior::GreedyFrozen { weights, .. } = &spec.behavior {
        if weights.len() != phi.dim() {
            return Err(LabError::DimensionMismatch { expected: phi.dim(), got: weights.len() });
        }
    }
    if spec.cfg.variant == Variant::Dt {
        return run_dt(env, phi, spec);
    }
    let mut rng = seeded_rng(spec.seed);
    let start = spec.start.clone().unwrap_or_else(|| env.start_state());
    let mut learner = LearnerState::new(spec.initial_weights.clone());
    if spec.cfg.variant == Variant::Td {
        learner.z = phi.features(&start);
    }
    let linear = crate::approx::LinearValue(phi);
    let mut log = Logger::new(spec, &learner.w);
    let mut state = start.clone();
    let mut sibling = start;
    for t in 0..spec.steps {
        let exp = env.expand(&state)?;
        let a = spec.behavior.choose(env, phi, &learner.w, spec.cfg.alpha, &state, &exp, &mut rng)?;
        let (next, next_sib, reward) = sample_action(&exp, a, &mut rng)?;
        let step = SiblingStep {
            t,
            state,
            sibling,
            action: exp.actions[a],
            reward,
            next_state: next,
            next_sibling: next_sib,
        };
        match spec.cfg.variant {
            Variant::Td => learner.td_step(&step, &spec.cfg, phi)?,
            Variant::Std => learner.std_step(&step, &spec.cfg, phi)?,
            Variant::StdScaled => learner.std_step_scaled(&step, &spec.cfg, phi)?,
            Variant::StdNonlinear => learner.std_step_nonlinear(&step, &spec.cfg, &linear)?,
            Variant::Dt => unreachable!("handled by run_dt"),
        };
        guard(&learner, spec)?;
        log.record(t + 1, &learner.w);
        state = step.next_state;
        sibling = step.next_sibling;
    }
    Ok(RunOutput { log: log.finish(learner.t, &learner.w), final_state: learner, final_env_state: state })
}

fn run_dt<E, F>(env: &E, phi: &F, spec: &RunSpec<E::State>) -> Result<RunOutput<E::State>>
where
    E: SiblingEnv,
    F: FeatureMap<E::State>,
{
    let mut rng = seeded_rng(spec.seed);
    let start = spec.start.clone().unwrap_or_else(|| env.start_state());
    let replicas = spec.dt_phase_offsets.max(1);
    let mut learner = LearnerState::new(spec.initial_weights.clone());
    // (x, x̂, trace) per lock-step pair
    let mut pairs = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let mut other = start.clone();
        for _ in 0..r {
            let exp = env.expand(&other)?;
            let a = spec.behavior.choose(env, phi, &learner.w, spec.cfg.alpha, &other, &exp, &mut rng)?;
            other = sample_action(&exp, a, &mut rng)?.0;
        }
        let mut z = phi.features(&start);
        difference_in_place(&mut z, &phi.features(&other));
        pairs.push((start.clone(), other, z));
    }
    let mut log = Logger::new(spec, &learner.w);
    for t in 0..spec.steps {
        let (x, x_hat, z) = &mut pairs[(t % replicas as u64) as usize];
        let (next, reward) = advance(env, phi, spec, &learner.w, x, &mut rng)?;
        let (other_next, other_reward) = advance(env, phi, spec, &learner.w, x_hat, &mut rng)?;
        let step = PairStep {
            state: mem::replace(x, next.clone()),
            next_state: next,
            reward,
            other: mem::replace(x_hat, other_next.clone()),
            other_next,
            other_reward,
        };
        mem::swap(&mut learner.z, z);
        learner.dt_step(&step, &spec.cfg, phi)?;
        mem::swap(&mut learner.z, z);
        guard(&learner, spec)?;
        log.record(t + 1, &learner.w);
    }
    let final_env_state = pairs[0].0.clone();
    learner.z = pairs.swap_remove(0).2;
    Ok(RunOutput { log: log.finish(learner.t, &learner.w), final_state: learner, final_env_state })
}

fn advance<E, F>(
    env: &E,
    phi: &F,
    spec: &RunSpec<E::State>,
    live_w: &[f64],
    state: &E::State,
    rng: &mut LabRng,
) -> Result<(E::State, f64)>
where
    E: SiblingEnv,
    F: FeatureMap<E::State>,
{
    let exp = env.expand(state)?;
    let a = spec.behavior.choose(env, phi, live_w, spec.cfg.alpha, state, &exp, rng)?;
    let (next, _, reward) = sample_action(&exp, a, rng)?;
    Ok((next, reward))
}

fn guard<S>(learner: &LearnerState, spec: &RunSpec<S>) -> Result<()> {
    let n = norm(&learner.w);
    if !n.is_finite() || n > spec.divergence_bound {
        return Err(LabError::Diverged { step: learner.t, norm: n, bound: spec.divergence_bound });
    }
    Ok(())
}

struct Logger {
    every: u64,
    points: Vec<LogPoint>,
}

impl Logger {
    fn new<S>(spec: &RunSpec<S>, w: &[f64]) -> Self {
        Logger { every: spec.log_every, points: vec![LogPoint { t: 0, w: w.to_vec() }] }
    }

    fn record(&mut self, t: u64, w: &[f64]) {
        if self.every > 0 && t % self.every == 0 {
            self.points.push(LogPoint { t, w: w.to_vec() });
        }
    }

    fn finish(mut self, t: u64, w: &[f64]) -> Vec<LogPoint> {
        if self.points.last().map(|p| p.t) != Some(t) {
            self.points.push(LogPoint { t, w: w.to_vec() });
        }
        self.points
    }
}
