//! CSV traces and JSON manifests.
//!
//! Trace columns, in order:
//!
//! | column        | present                               |
//! |---------------|---------------------------------------|
//! | `step`        | always                                |
//! | `w_1` … `w_d` | always                                |
//! | `J_<state>`   | tabular environments, one per state   |
//! | `region`      | always                                |
//! | `E`, `E1`, `E2` | tabular environments with diagnostics |
//!
//! `region` names the greedy policy of the logged weights: `optimal` or
//! `suboptimal` on tabular systems (`mixed` when ties leave it ambiguous),
//! `handcoded`, `converse` or `indifferent` on the acrobot.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Serialize;

use super::config::{ExperimentConfig, Resolved};
use crate::approx::{greedy_policy, values, GreedyMode};
use crate::envs::Environment;
use crate::learners::LogPoint;
use crate::oracle::{BoundCheck, ErrorReport, PolicyAnalysis};
use crate::Result;

pub const TRACE_FILE: &str = "trace.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Greedy-policy label of weights `w`.
pub fn region_label(env: &Environment, w: &[f64]) -> String {
    match env {
        Environment::Tabular(t) => {
            match greedy_policy(&t.bmdp, w, &t.features, GreedyMode::SuccessorPreference, t.alpha) {
                Ok(p) if t.is_optimal(&p) => "optimal".into(),
                Ok(_) => "suboptimal".into(),
                Err(_) => "mixed".into(),
            }
        }
        Environment::Acrobot(_) => {
            if w[0] < 0.0 {
                "handcoded".into()
            } else if w[0] > 0.0 {
                "converse".into()
            } else {
                "indifferent".into()
            }
        }
    }
}

fn header(resolved: &Resolved, diagnostics: bool) -> Vec<String> {
    let d = resolved.env.feature_dim();
    let mut cols = vec!["step".to_string()];
    cols.extend((1..=d).map(|k| format!("w_{k}")));
    if let Some(t) = resolved.env.as_tabular() {
        cols.extend(t.bmdp.state_names.iter().map(|n| format!("J_{n}")));
    }
    cols.push("region".into());
    if diagnostics && resolved.env.as_tabular().is_some() {
        cols.extend(["E", "E1", "E2"].map(String::from));
    }
    cols
}

/// E, E1, E2 under the policy observed at weights `w`.
pub fn diagnostics_at(resolved: &Resolved, w: &[f64]) -> Option<ErrorReport> {
    let t = resolved.env.as_tabular()?;
    let policy = resolved.observed_policy(w)?.ok()?;
    PolicyAnalysis::new(t, &policy, t.alpha).ok()?.error_report(w).ok()
}

pub fn write_trace(path: &Path, resolved: &Resolved, diagnostics: bool, log: &[LogPoint]) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(header(resolved, diagnostics))?;
    let tabular = resolved.env.as_tabular();
    for point in log {
        let mut row = vec![point.t.to_string()];
        row.extend(point.w.iter().map(|v| v.to_string()));
        if let Some(t) = tabular {
            row.extend(values(&point.w, &t.features)?.iter().map(|v| v.to_string()));
        }
        row.push(region_label(&resolved.env, &point.w));
        if diagnostics && tabular.is_some() {
            match diagnostics_at(resolved, &point.w) {
                Some(r) => row.extend([r.e, r.e1, r.e2].map(|v| v.to_string())),
                None => row.extend(["", "", ""].map(String::from)),
            }
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Diverged,
    Failed,
}

/// Learner endpoint against the matching least-squares limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleComparison {
    pub policy: String,
    pub limit: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
    /// The limit assumes λ = 1; other λ are compared anyway.
    pub lambda: f64,
    pub errors: Option<ErrorReport>,
    pub bound: Option<BoundCheck>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub status: RunStatus,
    pub message: Option<String>,
    pub steps_completed: u64,
    pub final_weights: Vec<f64>,
    pub region: String,
    pub files: Vec<String>,
    pub oracle: Option<OracleComparison>,
    pub checks: Vec<Check>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.status == RunStatus::Completed && self.checks.iter().all(|c| c.pass)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Create `dir` and return the paths of its trace and manifest.
pub fn run_paths(dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    Ok((dir.join(TRACE_FILE), dir.join(MANIFEST_FILE)))
}
