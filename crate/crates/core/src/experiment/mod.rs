//! Experiment harness: configured runs, figure presets, oracle reports and
//! side-by-side comparisons. Each run writes a CSV trace and, last, a JSON
//! manifest into its own directory.

pub mod config;
pub mod output;
pub mod presets;

use std::collections::BTreeMap;
use std::path::Path;

use chrono::Utc;
use serde::Serialize;

pub use config::{BehaviorSpec, ExperimentConfig, Resolved, ACROBOT_HANDCODED_WEIGHTS};
pub use output::{Check, OracleComparison, RunManifest, RunStatus};
pub use presets::{reproduce, Preset, ReproduceSummary, FIGURES};

use crate::approx::{greedy_policy, Greedy, GreedyMode};
use crate::bmdp::Policy;
use crate::envs::{self, AcrobotFeature, EnvOverrides, Environment, ENV_NAMES};
use crate::learners::{run_learner, LogPoint, Variant};
use crate::oracle::{
    describe_policy, dt_limit_ls, rollout_estimate, sign_condition_check, std_limit_ls, td_limit_ls,
    theorem1_bound_check, two_state_closed_form, counterexample_dt_limit, counterexample_std_limit, BoundCheck,
    ErrorReport, PolicyAnalysis, RolloutEstimate, SignCondition,
};
use crate::{seeded_rng, LabError, Result};

/// Slack added to the error bound check.
pub const BOUND_TOLERANCE: f64 = 1e-6;

/// Command-line overrides applied on top of a config.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub log_every: Option<u64>,
}

impl RunOverrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(every) = self.log_every {
            config.log_every = every;
        }
    }
}

/// Run the learner and return its weight log.
pub fn execute(resolved: &Resolved, config: &ExperimentConfig) -> Result<Vec<LogPoint>> {
    match &resolved.env {
        Environment::Tabular(t) => Ok(run_learner(&t.bmdp, &t.features, &resolved.run_spec(config))?.log),
        Environment::Acrobot(a) => Ok(run_learner(a, &AcrobotFeature, &resolved.run_spec(config))?.log),
    }
}

/// Least-squares limit of the configured learner under the policy observed
/// at `w`.
pub fn oracle_comparison(resolved: &Resolved, w: &[f64]) -> Option<OracleComparison> {
    let t = resolved.env.as_tabular()?;
    let lambda = resolved.cfg.lambda;
    let policy = match resolved.observed_policy(w)? {
        Ok(p) => p,
        Err(e) => {
            return Some(OracleComparison {
                policy: "unresolved".into(),
                limit: None,
                delta: None,
                lambda,
                errors: None,
                bound: None,
                note: Some(e.to_string()),
            })
        }
    };
    let variant = resolved.cfg.variant;
    let limit = match variant {
        Variant::Td => td_limit_ls(t, &policy, t.alpha),
        Variant::Std | Variant::StdNonlinear => std_limit_ls(t, &policy, t.alpha),
        Variant::StdScaled => {
            let mut doubled = t.clone();
            doubled.bmdp = t.bmdp.with_scaled_rewards(2.0);
            std_limit_ls(&doubled, &policy, t.alpha)
        }
        Variant::Dt => dt_limit_ls(t, &policy, t.alpha),
    };
    let (limit, note) = match limit {
        Ok(l) => (Some(l), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let delta = limit.as_ref().map(|l| w.iter().zip(l).map(|(a, b)| a - b).collect());
    let errors = PolicyAnalysis::new(t, &policy, t.alpha).and_then(|a| a.error_report(w)).ok();
    let bound = matches!(variant, Variant::Std | Variant::StdNonlinear)
        .then(|| theorem1_bound_check(t, &policy, t.alpha, lambda, w, BOUND_TOLERANCE).ok())
        .flatten();
    Some(OracleComparison { policy: describe_policy(&t.bmdp, &policy), limit, delta, lambda, errors, bound, note })
}

/// Run one configuration into `dir`: trace first, manifest last.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path) -> Result<RunManifest> {
    let resolved = config.resolve()?;
    let started = Utc::now();
    let (trace_path, manifest_path) = output::run_paths(dir)?;
    let (status, message, log) = match execute(&resolved, config) {
        Ok(log) => (RunStatus::Completed, None, log),
        Err(e @ LabError::Diverged { .. }) => {
            (RunStatus::Diverged, Some(e.to_string()), vec![LogPoint { t: 0, w: config.initial_weights.clone() }])
        }
        Err(e @ LabError::NonFinite) => {
            (RunStatus::Failed, Some(e.to_string()), vec![LogPoint { t: 0, w: config.initial_weights.clone() }])
        }
        Err(e) => return Err(e),
    };
    output::write_trace(&trace_path, &resolved, config.diagnostics, &log)?;
    let last = log.last().expect("log holds the initial point");
    let oracle = (status == RunStatus::Completed).then(|| oracle_comparison(&resolved, &last.w)).flatten();
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        seed: config.seed,
        started,
        finished: Utc::now(),
        status,
        message,
        steps_completed: last.t,
        final_weights: last.w.clone(),
        region: output::region_label(&resolved.env, &last.w),
        files: vec![output::TRACE_FILE.into()],
        oracle,
        checks: vec![],
    };
    output::write_json(&manifest_path, &manifest)?;
    Ok(manifest)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub label: String,
    pub learner: String,
    pub seed: u64,
    pub status: RunStatus,
    pub final_weights: Vec<f64>,
    pub region: String,
    pub e: Option<f64>,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub oracle_limit: Option<Vec<f64>>,
    pub oracle_delta: Option<Vec<f64>>,
}

fn join(v: &Option<Vec<f64>>) -> String {
    v.as_ref().map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")).unwrap_or_default()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Run every config on every seed, each in `out/<label>-seed<k>`, and
/// write `compare.csv` and `compare.json` to `out`.
pub fn compare(configs: &[(String, ExperimentConfig)], seeds: &[u64], out: &Path) -> Result<Vec<CompareRow>> {
    if configs.len() < 2 {
        return Err(LabError::config("compare", "need at least two configs"));
    }
    for (_, c) in configs {
        c.resolve()?;
    }
    std::fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for (k, (label, base)) in configs.iter().enumerate() {
        let seed_list: Vec<u64> = if seeds.is_empty() { vec![base.seed] } else { seeds.to_vec() };
        for &seed in &seed_list {
            let mut c = base.clone();
            c.seed = seed;
            let m = run_experiment(&c, &out.join(format!("{k:02}-{label}-seed{seed}")))?;
            let errors = m.oracle.as_ref().and_then(|o| o.errors.clone());
            rows.push(CompareRow {
                label: label.clone(),
                learner: c.learner.label().into(),
                seed,
                status: m.status.clone(),
                final_weights: m.final_weights.clone(),
                region: m.region.clone(),
                e: errors.as_ref().map(|r| r.e),
                e1: errors.as_ref().map(|r| r.e1),
                e2: errors.as_ref().map(|r| r.e2),
                oracle_limit: m.oracle.as_ref().and_then(|o| o.limit.clone()),
                oracle_delta: m.oracle.as_ref().and_then(|o| o.delta.clone()),
            });
        }
    }
    let mut csv = csv::Writer::from_path(out.join("compare.csv"))?;
    csv.write_record(["label", "learner", "seed", "status", "final_w", "region", "E", "E1", "E2", "oracle_w", "delta"])?;
    for r in &rows {
        csv.write_record([
            r.label.clone(),
            r.learner.clone(),
            r.seed.to_string(),
            format!("{:?}", r.status).to_lowercase(),
            join(&Some(r.final_weights.clone())),
            r.region.clone(),
            opt(r.e),
            opt(r.e1),
            opt(r.e2),
            join(&r.oracle_limit),
            join(&r.oracle_delta),
        ])?;
    }
    csv.flush()?;
    output::write_json(&out.join("compare.json"), &rows)?;
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvInfo {
    pub name: &'static str,
    pub states: String,
    pub actions: usize,
    pub features: usize,
    pub alpha: f64,
}

pub fn list_envs() -> Vec<EnvInfo> {
    ENV_NAMES
        .iter()
        .map(|&name| {
            let env = envs::build(name, &EnvOverrides::default()).expect("built-in environment");
            let (states, actions) = match &env {
                Environment::Tabular(t) => (t.bmdp.n_states().to_string(), t.bmdp.action_names.len()),
                Environment::Acrobot(_) => ("continuous (4)".into(), 2),
            };
            EnvInfo { name, states, actions, features: env.feature_dim(), alpha: env.alpha() }
        })
        .collect()
}

/// Inputs of an oracle report.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRequest {
    pub env: String,
    /// `optimal`, `uniform`, `greedy:<w,...>`, action names `a1,a2,...`;
    /// on the acrobot also `handcoded` or `converse`.
    pub policy: String,
    pub alpha: Option<f64>,
    pub lambda: f64,
    pub w: Option<Vec<f64>>,
    pub reward_scale: f64,
    pub rollouts: usize,
    pub seed: u64,
}

impl Default for OracleRequest {
    fn default() -> Self {
        OracleRequest {
            env: "two-state".into(),
            policy: "optimal".into(),
            alpha: None,
            lambda: 1.0,
            w: None,
            reward_scale: 1.0,
            rollouts: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Limit {
    pub weights: Option<Vec<f64>>,
    pub error: Option<String>,
}

impl From<Result<Vec<f64>>> for Limit {
    fn from(r: Result<Vec<f64>>) -> Self {
        match r {
            Ok(w) => Limit { weights: Some(w), error: None },
            Err(e) => Limit { weights: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairMass {
    pub state: String,
    pub sibling: String,
    pub mass: f64,
    pub eta: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub env: String,
    pub policy: String,
    pub alpha: f64,
    pub lambda: f64,
    pub reward_scale: f64,
    pub exact_values: Option<BTreeMap<String, f64>>,
    pub stationary: Option<BTreeMap<String, f64>>,
    pub pairs: Option<Vec<PairMass>>,
    pub td_limit: Option<Limit>,
    pub std_limit: Option<Limit>,
    pub dt_limit: Option<Limit>,
    /// Closed forms where the environment has them.
    pub closed_form: Option<BTreeMap<String, f64>>,
    pub sign_conditions: Option<Vec<SignCondition>>,
    pub errors: Option<ErrorReport>,
    pub bound: Option<BoundCheck>,
    pub rollout: Option<RolloutEstimate>,
}

fn parse_tabular_policy(t: &envs::TabularEnv, spec: &str) -> Result<Policy> {
    let bad = |m: String| LabError::config("policy", m);
    match spec {
        "optimal" => Ok(t.optimal.clone()),
        "uniform" => Ok(Policy::uniform(&t.bmdp)),
        s if s.starts_with("greedy:") => {
            let w = parse_weights(&s["greedy:".len()..]).map_err(|e| bad(e.to_string()))?;
            greedy_policy(&t.bmdp, &w, &t.features, GreedyMode::SuccessorPreference, t.alpha)
                .map_err(|e| bad(e.to_string()))
        }
        s => {
            let names: Vec<&str> = s.split(',').map(str::trim).collect();
            if names.len() != t.bmdp.n_states() {
                return Err(bad(format!("expected {} action names, got {:?}", t.bmdp.n_states(), s)));
            }
            let ids = names
                .iter()
                .map(|n| t.bmdp.action_by_name(n).ok_or_else(|| bad(format!("unknown action {n:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let p = Policy::Fixed(ids);
            p.validate(&t.bmdp).map_err(|e| bad(e.to_string()))?;
            Ok(p)
        }
    }
}

/// Parse `1.5,-2` into weights.
pub fn parse_weights(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| LabError::config("w", format!("{x:?}: {e}"))))
        .collect()
}

pub fn oracle_report(req: &OracleRequest) -> Result<OracleReport> {
    let overrides = EnvOverrides { alpha: req.alpha, ..Default::default() };
    let env = envs::build(&req.env, &overrides)?;
    if !(0.0..=1.0).contains(&req.lambda) {
        return Err(LabError::config("lambda", format!("{} outside [0, 1]", req.lambda)));
    }
    if !req.reward_scale.is_finite() {
        return Err(LabError::config("reward_scale", "must be finite"));
    }
    let mut report = OracleReport {
        env: req.env.clone(),
        policy: req.policy.clone(),
        alpha: env.alpha(),
        lambda: req.lambda,
        reward_scale: req.reward_scale,
        exact_values: None,
        stationary: None,
        pairs: None,
        td_limit: None,
        std_limit: None,
        dt_limit: None,
        closed_form: None,
        sign_conditions: None,
        errors: None,
        bound: None,
        rollout: None,
    };
    match env {
        Environment::Tabular(mut t) => {
            t.bmdp = t.bmdp.with_scaled_rewards(req.reward_scale);
            let policy = parse_tabular_policy(&t, &req.policy)?;
            let alpha = t.alpha;
            let an = PolicyAnalysis::new(&t, &policy, alpha)?;
            let name = |i: usize| t.bmdp.state_name(i).to_string();
            report.policy = describe_policy(&t.bmdp, &policy);
            report.exact_values = Some(an.values.iter().enumerate().map(|(i, &v)| (name(i), v)).collect());
            report.stationary = Some(an.dist.pi.iter().enumerate().map(|(i, &v)| (name(i), v)).collect());
            report.pairs = Some(
                an.dist
                    .pair_pi
                    .iter()
                    .map(|(&(i, j), &mass)| PairMass {
                        state: name(i),
                        sibling: name(j),
                        mass,
                        eta: crate::oracle::eta(&an.dist, i, j).ok(),
                    })
                    .collect(),
            );
            report.td_limit = Some(td_limit_ls(&t, &policy, alpha).into());
            report.std_limit = Some(std_limit_ls(&t, &policy, alpha).into());
            report.dt_limit = Some(dt_limit_ls(&t, &policy, alpha).into());
            report.sign_conditions = sign_condition_check(&t, &policy, alpha).ok();
            let optimal = t.is_optimal(&policy) && req.reward_scale == 1.0;
            report.closed_form = match req.env.as_str() {
                "two-state" if optimal => {
                    let (a, b) = two_state_closed_form(alpha)?;
                    Some(BTreeMap::from([("J(A)".to_string(), a), ("J(B)".to_string(), b)]))
                }
                "dt-counterexample" if optimal => Some(BTreeMap::from([
                    ("std_limit".to_string(), counterexample_std_limit(alpha)),
                    ("dt_limit".to_string(), counterexample_dt_limit(alpha)),
                ])),
                _ => None,
            };
            if let Some(w) = &req.w {
                report.errors = Some(an.error_report(w)?);
                report.bound = Some(theorem1_bound_check(&t, &policy, alpha, req.lambda, w, BOUND_TOLERANCE)?);
            }
        }
        Environment::Acrobot(a) => {
            let weights: Vec<f64> = match req.policy.as_str() {
                "handcoded" | "optimal" => ACROBOT_HANDCODED_WEIGHTS.to_vec(),
                "converse" => ACROBOT_HANDCODED_WEIGHTS.iter().map(|w| -w).collect(),
                s if s.starts_with("greedy:") => parse_weights(&s["greedy:".len()..])?,
                other => {
                    return Err(LabError::config(
                        "policy",
                        format!("acrobot policies are handcoded, converse or greedy:<w>; got {other:?}"),
                    ))
                }
            };
            if weights.len() != 1 {
                return Err(LabError::config("policy", "acrobot has one feature"));
            }
            let rule = Greedy { weights: &weights, features: &AcrobotFeature, mode: GreedyMode::SuccessorPreference, alpha: a.alpha };
            let mut rng = seeded_rng(req.seed);
            let start = crate::bmdp::SiblingEnv::start_state(&a);
            let mut est = rollout_estimate(&a, &rule, &start, req.rollouts.max(1), a.alpha, 1e-4, &mut rng)?;
            est.mean *= req.reward_scale;
            est.std_error *= req.reward_scale.abs();
            report.rollout = Some(est);
        }
    }
    Ok(report)
}
