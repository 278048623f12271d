//! Damped two-link acrobot, run continuously from the hanging rest position.
//!
//! Angles: θ₁ is measured from the downward vertical, θ₂ relative to link 1,
//! so hanging at rest is the all-zero state. Torque acts at the second joint
//! only. Both accelerations receive a damping term −sign(θ̇)·k·θ̇², and
//! velocities are clamped to [−4π, 4π] after every integrator substep.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use smallvec::smallvec;

use crate::approx::FeatureMap;
use crate::bmdp::{Expansion, SiblingEnv};
use crate::{LabError, Result};

pub const MAX_VELOCITY: f64 = 4.0 * PI;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AcrobotState {
    pub theta1: f64,
    pub theta2: f64,
    pub dtheta1: f64,
    pub dtheta2: f64,
}

impl AcrobotState {
    pub const REST: AcrobotState = AcrobotState { theta1: 0.0, theta2: 0.0, dtheta1: 0.0, dtheta2: 0.0 };

    fn is_finite(&self) -> bool {
        self.theta1.is_finite() && self.theta2.is_finite() && self.dtheta1.is_finite() && self.dtheta2.is_finite()
    }

    pub fn mirrored(&self) -> Self {
        AcrobotState { theta1: -self.theta1, theta2: -self.theta2, dtheta1: -self.dtheta1, dtheta2: -self.dtheta2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcrobotParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub lc1: f64,
    pub lc2: f64,
    pub i1: f64,
    pub i2: f64,
    pub gravity: f64,
    /// Damping constant k.
    pub damping: f64,
    /// Seconds between action choices.
    pub action_interval: f64,
    /// RK4 step in seconds; must divide `action_interval`.
    pub substep: f64,
    /// Torques for action 0 and action 1.
    pub torques: [f64; 2],
}

impl Default for AcrobotParams {
    fn default() -> Self {
        AcrobotParams {
            m1: 1.0,
            m2: 1.0,
            l1: 1.0,
            l2: 1.0,
            lc1: 0.5,
            lc2: 0.5,
            i1: 1.0,
            i2: 1.0,
            gravity: 9.8,
            damping: 0.05,
            action_interval: 0.1,
            substep: 0.01,
            torques: [1.0, -1.0],
        }
    }
}

impl AcrobotParams {
    pub fn substeps(&self) -> usize {
        (self.action_interval / self.substep).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let physical = [self.m1, self.m2, self.l1, self.l2, self.lc1, self.lc2, self.i1, self.i2, self.gravity];
        if physical.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(LabError::config("acrobot", "physical constants must be positive"));
        }
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(LabError::config("overrides.damping", "damping must be non-negative"));
        }
        let n = self.substeps();
        if !(self.substep > 0.0) || n == 0 || (n as f64 * self.substep - self.action_interval).abs() > 1e-9 {
            return Err(LabError::config(
                "overrides.substep",
                format!("{} does not divide the action interval {}", self.substep, self.action_interval),
            ));
        }
        Ok(())
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Angular accelerations (θ̈₁, θ̈₂).
pub fn acrobot_derivs(s: &AcrobotState, torque: f64, p: &AcrobotParams) -> (f64, f64) {
    let (t1, t2, dt1, dt2) = (s.theta1, s.theta2, s.dtheta1, s.dtheta2);
    let d1 = p.m1 * p.lc1 * p.lc1
        + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * t2.cos())
        + p.i1
        + p.i2;
    let d2 = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * t2.cos()) + p.i2;
    let phi2 = p.m2 * p.lc2 * p.gravity * (t1 + t2).sin();
    let phi1 = -p.m2 * p.l1 * p.lc2 * dt2 * dt2 * t2.sin()
        - 2.0 * p.m2 * p.l1 * p.lc2 * dt2 * dt1 * t2.sin()
        + (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity * t1.sin()
        + phi2;
    let ddt2 = (torque + d2 / d1 * phi1 - p.m2 * p.l1 * p.lc2 * dt1 * dt1 * t2.sin() - phi2)
        / (p.m2 * p.lc2 * p.lc2 + p.i2 - d2 * d2 / d1);
    let ddt1 = -(d2 * ddt2 + phi1) / d1;
    (
        ddt1 - sign(dt1) * p.damping * dt1 * dt1,
        ddt2 - sign(dt2) * p.damping * dt2 * dt2,
    )
}

fn derivative(s: &AcrobotState, torque: f64, p: &AcrobotParams) -> [f64; 4] {
    let (a1, a2) = acrobot_derivs(s, torque, p);
    [s.dtheta1, s.dtheta2, a1, a2]
}

fn offset(s: &AcrobotState, k: &[f64; 4], h: f64) -> AcrobotState {
    AcrobotState {
        theta1: s.theta1 + h * k[0],
        theta2: s.theta2 + h * k[1],
        dtheta1: s.dtheta1 + h * k[2],
        dtheta2: s.dtheta2 + h * k[3],
    }
}

fn rk4(s: &AcrobotState, torque: f64, p: &AcrobotParams, h: f64) -> AcrobotState {
    let k1 = derivative(s, torque, p);
    let k2 = derivative(&offset(s, &k1, h / 2.0), torque, p);
    let k3 = derivative(&offset(s, &k2, h / 2.0), torque, p);
    let k4 = derivative(&offset(s, &k3, h), torque, p);
    let mut k = [0.0; 4];
    for i in 0..4 {
        k[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    offset(s, &k, h)
}

fn wrap_angle(x: f64) -> f64 {
    x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor()
}

/// Integrate `duration` seconds at constant torque without clamping or
/// wrapping. Used for integrator checks.
pub fn integrate_free(s: &AcrobotState, torque: f64, p: &AcrobotParams, duration: f64) -> AcrobotState {
    let n = (duration / p.substep).round() as usize;
    (0..n).fold(*s, |acc, _| rk4(&acc, torque, p, p.substep))
}

/// One action interval: RK4 substeps with velocity clamping after each,
/// angles wrapped to [−π, π) at the end.
pub fn acrobot_step(s: &AcrobotState, torque: f64, p: &AcrobotParams) -> Result<AcrobotState> {
    let mut cur = *s;
    for _ in 0..p.substeps() {
        cur = rk4(&cur, torque, p, p.substep);
        cur.dtheta1 = cur.dtheta1.clamp(-MAX_VELOCITY, MAX_VELOCITY);
        cur.dtheta2 = cur.dtheta2.clamp(-MAX_VELOCITY, MAX_VELOCITY);
    }
    if !cur.is_finite() {
        return Err(LabError::NonFinite);
    }
    cur.theta1 = wrap_angle(cur.theta1);
    cur.theta2 = wrap_angle(cur.theta2);
    Ok(cur)
}

/// Height of the tip above its lowest possible position, in [0, 4].
pub fn acrobot_reward(s: &AcrobotState) -> f64 {
    2.0 - s.theta1.cos() - (s.theta1 + s.theta2).cos()
}

/// The hand-coded evaluation |θ̇₁ + θ̇₂|.
pub fn acrobot_handcoded_eval(s: &AcrobotState) -> f64 {
    (s.dtheta1 + s.dtheta2).abs()
}

/// The single feature 1 − |θ̇₁ + θ̇₂| / 8π, in [0, 1].
pub fn acrobot_feature(s: &AcrobotState) -> f64 {
    1.0 - acrobot_handcoded_eval(s) / (8.0 * PI)
}

/// Successors under the two torques, in action order.
pub fn acrobot_siblings(s: &AcrobotState, p: &AcrobotParams) -> Result<(AcrobotState, AcrobotState)> {
    Ok((acrobot_step(s, p.torques[0], p)?, acrobot_step(s, p.torques[1], p)?))
}

/// Total mechanical energy, potential measured from the hanging position.
pub fn acrobot_energy(s: &AcrobotState, p: &AcrobotParams) -> f64 {
    let (t1, t2, dt1, dt2) = (s.theta1, s.theta2, s.dtheta1, s.dtheta2);
    let d1 = p.m1 * p.lc1 * p.lc1
        + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * t2.cos())
        + p.i1
        + p.i2;
    let d2 = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * t2.cos()) + p.i2;
    let d22 = p.m2 * p.lc2 * p.lc2 + p.i2;
    let kinetic = 0.5 * (d1 * dt1 * dt1 + 2.0 * d2 * dt1 * dt2 + d22 * dt2 * dt2);
    let y1 = p.lc1 * (1.0 - t1.cos());
    let y2 = p.l1 * (1.0 - t1.cos()) + p.lc2 * (1.0 - (t1 + t2).cos());
    kinetic + p.gravity * (p.m1 * y1 + p.m2 * y2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcrobotEnv {
    pub params: AcrobotParams,
    pub alpha: f64,
}

impl Default for AcrobotEnv {
    fn default() -> Self {
        AcrobotEnv { params: AcrobotParams::default(), alpha: 0.95 }
    }
}

impl SiblingEnv for AcrobotEnv {
    type State = AcrobotState;

    fn name(&self) -> &str {
        "acrobot"
    }

    fn start_state(&self) -> AcrobotState {
        AcrobotState::REST
    }

    fn expand(&self, s: &AcrobotState) -> Result<Expansion<AcrobotState>> {
        let (plus, minus) = acrobot_siblings(s, &self.params)?;
        Ok(Expansion {
            rewards: [acrobot_reward(&plus), acrobot_reward(&minus)],
            candidates: [plus, minus],
            actions: smallvec![0, 1],
            first_prob: smallvec![1.0, 0.0],
        })
    }

    fn reward_bound(&self) -> f64 {
        4.0
    }
}

/// [`acrobot_feature`] as a one-dimensional feature map.
#[derive(Clone, Copy, Debug, Default)]
pub struct AcrobotFeature;

impl FeatureMap<AcrobotState> for AcrobotFeature {
    fn dim(&self) -> usize {
        1
    }

    fn features_into(&self, s: &AcrobotState, out: &mut [f64]) {
        out[0] = acrobot_feature(s);
    }
}
