//! Built-in systems, each bundled with its feature map and canonical
//! parameters.
//!
//! | name                | states | features | default α |
//! |---------------------|--------|----------|-----------|
//! | `two-state`         | 2      | 1        | 0.5       |
//! | `three-state`       | 3      | 2        | 0.95      |
//! | `dt-counterexample` | 3      | 1        | 0.5       |
//! | `acrobot`           | ℝ⁴     | 1        | 0.95      |

pub mod acrobot;
mod tabular;

use serde::{Deserialize, Serialize};

pub use acrobot::{AcrobotEnv, AcrobotFeature, AcrobotParams, AcrobotState};
pub use tabular::{dt_counterexample, three_state, two_state, TabularEnv};

use crate::{LabError, Result};

pub const ENV_NAMES: [&str; 4] = ["two-state", "three-state", "dt-counterexample", "acrobot"];

/// Parameter overrides accepted by [`build`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Acrobot damping constant k.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    /// Acrobot integrator substep in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substep: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum Environment {
    Tabular(TabularEnv),
    Acrobot(AcrobotEnv),
}

impl Environment {
    pub fn name(&self) -> &str {
        match self {
            Environment::Tabular(t) => &t.bmdp.name,
            Environment::Acrobot(_) => "acrobot",
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Environment::Tabular(t) => t.alpha,
            Environment::Acrobot(a) => a.alpha,
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            Environment::Tabular(t) => crate::approx::FeatureMap::dim(&t.features),
            Environment::Acrobot(_) => 1,
        }
    }

    pub fn as_tabular(&self) -> Option<&TabularEnv> {
        match self {
            Environment::Tabular(t) => Some(t),
            Environment::Acrobot(_) => None,
        }
    }
}

/// Look up a built-in environment by name and apply overrides.
pub fn build(name: &str, overrides: &EnvOverrides) -> Result<Environment> {
    let reject = |field: &str| {
        Err(LabError::config(format!("overrides.{field}"), format!("not a parameter of `{name}`")))
    };
    let mut env = match name {
        "two-state" => Environment::Tabular(two_state()),
        "three-state" => Environment::Tabular(three_state()),
        "dt-counterexample" => Environment::Tabular(dt_counterexample(0.5)),
        "acrobot" => Environment::Acrobot(AcrobotEnv::default()),
        other => {
            return Err(LabError::config("env", format!("unknown environment `{other}`; known: {ENV_NAMES:?}")))
        }
    };
    if let Some(alpha) = overrides.alpha {
        if !(0.0..1.0).contains(&alpha) {
            return Err(LabError::config("overrides.alpha", format!("{alpha} outside [0, 1)")));
        }
        match &mut env {
            Environment::Tabular(t) => t.alpha = alpha,
            Environment::Acrobot(a) => a.alpha = alpha,
        }
    }
    match &mut env {
        Environment::Acrobot(a) => {
            if let Some(k) = overrides.damping {
                a.params.damping = k;
            }
            if let Some(h) = overrides.substep {
                a.params.substep = h;
            }
            a.params.validate()?;
        }
        Environment::Tabular(_) => {
            if overrides.damping.is_some() {
                return reject("damping");
            }
            if overrides.substep.is_some() {
                return reject("substep");
            }
        }
    }
    Ok(env)
}
