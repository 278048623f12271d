//! Experiment configuration files (TOML).
//!
//! ```toml
//! env = "two-state"
//! learner = "std"
//! lambda = 1.0
//! initial_weights = [0.88]
//! steps = 200000
//! seed = 3
//! log_every = 50
//!
//! [schedule]
//! kind = "harmonic"
//! a = 1.5
//! b = 100.0
//!
//! [behavior]
//! kind = "greedy-online"
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::approx::{greedy_policy, GreedyMode};
use crate::bmdp::Policy;
use crate::envs::{self, EnvOverrides, Environment};
use crate::learners::{Behavior, LearnerConfig, RunSpec, StepSchedule, Variant, DEFAULT_DIVERGENCE_BOUND};
use crate::{LabError, Result};

/// The policy a run observes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BehaviorSpec {
    /// The environment's reference policy (the hand-coded policy on the
    /// acrobot).
    #[default]
    Optimal,
    /// Uniform over each state's actions.
    Uniform,
    /// One action name per state.
    Fixed { actions: Vec<String> },
    GreedyFrozen {
        weights: Vec<f64>,
        #[serde(default)]
        mode: GreedyMode,
    },
    GreedyOnline {
        #[serde(default)]
        mode: GreedyMode,
    },
}

/// Weights whose greedy lookahead is the acrobot's hand-coded policy:
/// maximise |θ̇₁ + θ̇₂| at the next decision.
pub const ACROBOT_HANDCODED_WEIGHTS: [f64; 1] = [-1.0];

fn default_lambda() -> f64 {
    1.0
}

fn default_bound() -> f64 {
    DEFAULT_DIVERGENCE_BOUND
}

fn default_offsets() -> usize {
    1
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: String,
    #[serde(default)]
    pub learner: Variant,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub initial_weights: Vec<f64>,
    pub steps: u64,
    #[serde(default)]
    pub seed: u64,
    /// 0 logs only the first and last step.
    #[serde(default)]
    pub log_every: u64,
    /// Add E, E1 and E2 columns (tabular environments).
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default = "default_bound")]
    pub divergence_bound: f64,
    /// DT only; see [`RunSpec::dt_phase_offsets`].
    #[serde(default = "default_offsets")]
    pub dt_phase_offsets: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub schedule: StepSchedule,
    #[serde(default)]
    pub behavior: BehaviorSpec,
    #[serde(default, skip_serializing_if = "is_default")]
    pub overrides: EnvOverrides,
}

impl ExperimentConfig {
    /// A config with defaults for everything but the essentials.
    pub fn new(env: &str, learner: Variant, schedule: StepSchedule, initial_weights: Vec<f64>, steps: u64) -> Self {
        ExperimentConfig {
            env: env.into(),
            overrides: EnvOverrides::default(),
            learner,
            lambda: 1.0,
            initial_weights,
            steps,
            seed: 0,
            log_every: 0,
            diagnostics: false,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
            dt_phase_offsets: 1,
            output_dir: None,
            schedule,
            behavior: BehaviorSpec::Optimal,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::config("config", e.message().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            LabError::Config { field, message } => {
                LabError::Config { field, message: format!("{}: {message}", path.display()) }
            }
            other => other,
        })
    }

    /// Check every name and range and build the objects a run needs.
    pub fn resolve(&self) -> Result<Resolved> {
        let env = envs::build(&self.env, &self.overrides)?;
        let cfg = LearnerConfig { lambda: self.lambda, alpha: env.alpha(), schedule: self.schedule, variant: self.learner };
        cfg.validate()?;
        let d = env.feature_dim();
        if self.initial_weights.len() != d {
            return Err(LabError::config(
                "initial_weights",
                format!("{} has {d} features, got {} weights", self.env, self.initial_weights.len()),
            ));
        }
        if self.initial_weights.iter().any(|w| !w.is_finite()) {
            return Err(LabError::config("initial_weights", "weights must be finite"));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(LabError::config("divergence_bound", "must be positive"));
        }
        if self.dt_phase_offsets == 0 {
            return Err(LabError::config("dt_phase_offsets", "must be at least 1"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(LabError::config("seed", "must fit in a signed 64-bit integer"));
        }
        let behavior = self.behavior_for(&env)?;
        Ok(Resolved { env, cfg, behavior })
    }

    fn behavior_for(&self, env: &Environment) -> Result<Behavior> {
        let d = env.feature_dim();
        let tabular = env.as_tabular();
        let need_tabular = |what: &str| {
            LabError::config("behavior.kind", format!("{what} needs a tabular environment, not {}", env.name()))
        };
        Ok(match &self.behavior {
            BehaviorSpec::Optimal => match tabular {
                Some(t) => Behavior::Fixed(t.optimal.clone()),
                None => Behavior::GreedyFrozen {
                    weights: ACROBOT_HANDCODED_WEIGHTS.to_vec(),
                    mode: GreedyMode::SuccessorPreference,
                },
            },
            BehaviorSpec::Uniform => Behavior::Fixed(Policy::uniform(&tabular.ok_or_else(|| need_tabular("uniform"))?.bmdp)),
            BehaviorSpec::Fixed { actions } => {
                let t = tabular.ok_or_else(|| need_tabular("fixed"))?;
                if actions.len() != t.bmdp.n_states() {
                    return Err(LabError::config(
                        "behavior.actions",
                        format!("need one action per state ({}), got {}", t.bmdp.n_states(), actions.len()),
                    ));
                }
                let mut ids = Vec::with_capacity(actions.len());
                for (i, name) in actions.iter().enumerate() {
                    let id = t
                        .bmdp
                        .action_by_name(name)
                        .ok_or_else(|| LabError::config(format!("behavior.actions[{i}]"), format!("unknown action {name:?}")))?;
                    ids.push(id);
                }
                let policy = Policy::Fixed(ids);
                policy
                    .validate(&t.bmdp)
                    .map_err(|e| LabError::config("behavior.actions", e.to_string()))?;
                Behavior::Fixed(policy)
            }
            BehaviorSpec::GreedyFrozen { weights, mode } => {
                if weights.len() != d {
                    return Err(LabError::config("behavior.weights", format!("expected {d} weights, got {}", weights.len())));
                }
                Behavior::GreedyFrozen { weights: weights.clone(), mode: *mode }
            }
            BehaviorSpec::GreedyOnline { mode } => Behavior::GreedyOnline { mode: *mode },
        })
    }
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub env: Environment,
    pub cfg: LearnerConfig,
    pub behavior: Behavior,
}

impl Resolved {
    pub fn run_spec<S>(&self, config: &ExperimentConfig) -> RunSpec<S> {
        let mut spec =
            RunSpec::new(self.cfg, self.behavior.clone(), config.initial_weights.clone(), config.steps, config.seed);
        spec.log_every = config.log_every;
        spec.divergence_bound = config.divergence_bound;
        spec.dt_phase_offsets = config.dt_phase_offsets;
        spec
    }

    /// The tabular policy in force when the learner holds weights `w`.
    pub fn observed_policy(&self, w: &[f64]) -> Option<Result<Policy>> {
        let t = self.env.as_tabular()?;
        Some(match &self.behavior {
            Behavior::Fixed(p) => Ok(p.clone()),
            Behavior::GreedyFrozen { weights, mode } => greedy_policy(&t.bmdp, weights, &t.features, *mode, t.alpha),
            Behavior::GreedyOnline { mode } => greedy_policy(&t.bmdp, w, &t.features, *mode, t.alpha),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
env = "two-state"
learner = "std"
initial_weights = [0.88]
steps = 1000
seed = 3
log_every = 50

[schedule]
kind = "harmonic"
a = 1.5
b = 100.0

[behavior]
kind = "greedy-online"
"#;

    #[test]
    fn parses_and_resolves() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.learner, Variant::Std);
        assert_eq!(c.lambda, 1.0);
        assert_eq!(c.behavior, BehaviorSpec::GreedyOnline { mode: GreedyMode::SuccessorPreference });
        let r = c.resolve().unwrap();
        assert_eq!(r.cfg.alpha, 0.5);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SAMPLE.replace("seed = 3", "sede = 3");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(LabError::Config { .. })));
        let bad = SAMPLE.replace("kind = \"greedy-online\"", "kind = \"greedy-online\"\nweights = [1.0]");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn resolution_errors_name_the_field() {
        let field_of = |c: ExperimentConfig| match c.resolve() {
            Err(LabError::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        };
        let base = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(field_of(ExperimentConfig { env: "four-state".into(), ..base.clone() }), "env");
        assert_eq!(field_of(ExperimentConfig { initial_weights: vec![1.0, 2.0], ..base.clone() }), "initial_weights");
        assert_eq!(field_of(ExperimentConfig { lambda: 1.5, ..base.clone() }), "lambda");
        let fixed = BehaviorSpec::Fixed { actions: vec!["a2".into(), "a9".into()] };
        assert_eq!(field_of(ExperimentConfig { behavior: fixed, ..base.clone() }), "behavior.actions[1]");
        let acro = ExperimentConfig { env: "acrobot".into(), behavior: BehaviorSpec::Uniform, ..base.clone() };
        assert_eq!(field_of(acro), "behavior.kind");
        let sched = StepSchedule::Constant { rate: -1.0 };
        assert_eq!(field_of(ExperimentConfig { schedule: sched, ..base }), "schedule");
    }

    #[test]
    fn fixed_actions_by_name() {
        let mut c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        c.behavior = BehaviorSpec::Fixed { actions: vec!["a1".into(), "a2".into()] };
        let r = c.resolve().unwrap();
        assert_eq!(r.behavior, Behavior::Fixed(Policy::Fixed(vec![0, 1])));
    }
}
