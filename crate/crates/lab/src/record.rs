//! Per-run measurement records.

use ibwave_core::solvers::ModelKind;
use serde::{Deserialize, Serialize};

use crate::config::{DataCase, StudyKind};

/// One snapshot of one run. Decoupling-only columns are empty in residual runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub index: usize,
    pub study: StudyKind,
    pub family: ModelKind,
    pub case: DataCase,
    pub epsilon: f64,
    pub delta: f64,
    pub s: f64,
    pub t: f64,
    pub r_norm: Option<f64>,
    pub r_t_norm: Option<f64>,
    pub rho_t_norm: Option<f64>,
    pub e_s: Option<f64>,
    pub quadratic_part: Option<f64>,
    pub epsilon_terms: Option<f64>,
    pub f_plus: f64,
    pub f_minus: f64,
    pub f_tilde: f64,
    pub interaction: f64,
    pub u_linf: Option<f64>,
    pub w_plus_linf: f64,
    pub w_minus_linf: f64,
    pub r_linf: Option<f64>,
    pub r_mean: Option<f64>,
    /// `||r||_{H^s} <= 1` at every snapshot up to this one.
    pub in_window: Option<bool>,
}

/// Scalars derived from a run's rows.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub sup_f_plus: f64,
    pub sup_f_minus: f64,
    pub sup_f_tilde: f64,
    pub terminal_error: Option<f64>,
    /// `max_t ||r(t)|| / bound(t)` with the family's decoupling bound.
    pub c_hat: Option<f64>,
    pub rt0_norm: Option<f64>,
    /// `max |rho_t(0) - initial_rho_t|` where the closed form applies.
    pub rho_t0_consistency: Option<f64>,
    pub energy_rate_constant: Option<f64>,
    pub energy_rate_error: Option<String>,
    pub pd_checked: Option<usize>,
    pub pd_violations: Option<usize>,
    pub max_abs_r_mean: Option<f64>,
    pub validity_window: Option<f64>,
    pub uniform_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub config_hash: String,
    pub study: StudyKind,
    pub family: ModelKind,
    pub case: DataCase,
    pub epsilon: f64,
    pub delta: f64,
    pub s: f64,
    pub status: RunStatus,
    pub rows: Vec<SnapshotRow>,
    pub summary: RunSummary,
    pub provenance: Provenance,
}

impl RunRecord {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}
