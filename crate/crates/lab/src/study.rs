//! Sweep orchestration: one independent run per (family, case, s, sweep point).

use std::time::{SystemTime, UNIX_EPOCH};

use ibwave_core::analysis::{
    energy, energy_rate_check, error_state, initial_rho_t, residual_tilde, split_initial_data,
    uniform_bound_monitor, validity_window, EnergySample, EnergyValue, ErrorState,
};
use ibwave_core::solvers::{
    ib_solve_with_velocity, model_solve, model_time_derivative, stability_bound, Equation, IBState,
    ModelFamily, ModelKind, Scheme, StepControl, WaveState,
};
use ibwave_core::spectral::{linf_norm, sobolev_norm, spectral_derivative};
use ibwave_core::{Field, PeriodicGrid, PhysParams};
use rayon::prelude::*;

use crate::config::{DataCase, ExperimentConfig, StudyKind, SweepPoint};
use crate::error::{LabError, Result};
use crate::record::{Provenance, RunRecord, RunStatus, RunSummary, SnapshotRow};

/// One unit of work.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSpec {
    pub index: usize,
    pub family: ModelKind,
    pub case: DataCase,
    pub s: f64,
    pub point: SweepPoint,
}

/// Runs in emission order: family, then case, then `s`, then sweep point.
pub fn enumerate_runs(cfg: &ExperimentConfig) -> Vec<RunSpec> {
    let mut out = Vec::new();
    for &family in &cfg.study.families {
        for &case in &cfg.study.cases {
            for &s in &cfg.study.sobolev_indices {
                for point in cfg.sweep_points() {
                    out.push(RunSpec {
                        index: out.len(),
                        family,
                        case,
                        s,
                        point,
                    });
                }
            }
        }
    }
    out
}

/// Decoupling bound of the family at time `t`: `(eps + delta^2) + (eps + delta^4) t`
/// for CH and BBM, `eps (1 + t)` for KdV.
pub fn decoupling_bound(kind: ModelKind, epsilon: f64, delta: f64, t: f64) -> f64 {
    match kind {
        ModelKind::Ch | ModelKind::Bbm => (epsilon + delta * delta) + (epsilon + delta.powi(4)) * t,
        ModelKind::Kdv => epsilon * (1.0 + t),
    }
}

/// Initial data of a case on the configured grid: `(u0, v0)`.
pub fn initial_data(cfg: &ExperimentConfig, grid: &PeriodicGrid, case: DataCase) -> (Field, Field) {
    let u0 = Field::from_fn(grid, |x| cfg.profile.u0.eval(x));
    let v0 = match case {
        DataCase::General => Field::from_fn(grid, |x| cfg.profile.v0.eval(x)),
        DataCase::Unidirectional | DataCase::Prepared => -&u0,
    };
    (u0, v0)
}

pub fn grid(cfg: &ExperimentConfig) -> Result<PeriodicGrid> {
    Ok(PeriodicGrid::new(cfg.grid.half_length, cfg.grid.n_points)?)
}

/// Shared IB and model step controls. The step is the largest one under
/// every stability bound (and `time.dt`) that divides the snapshot interval.
pub fn step_controls(
    cfg: &ExperimentConfig,
    grid: &PeriodicGrid,
    params: &PhysParams,
    kind: ModelKind,
) -> Result<(StepControl, StepControl)> {
    let scheme = match (kind, cfg.time.kdv_scheme) {
        (ModelKind::Kdv, Some(s)) => s,
        _ => kind.default_scheme(),
    };
    let eq = Equation::Model(kind);
    let mut bound = stability_bound(eq, scheme, grid, params)?.min(stability_bound(
        Equation::Ib,
        Scheme::Rk4,
        grid,
        params,
    )?);
    if let Some(dt) = cfg.time.dt {
        bound = bound.min(dt);
    }
    let interval = cfg.time.snapshot_interval;
    let stride = (interval / bound - 1e-9).ceil().max(1.0) as usize;
    let dt = interval / stride as f64;
    let t_end = cfg.time.t_end;
    let ib = StepControl::new(Equation::Ib, grid, params, dt, Scheme::Rk4, t_end, stride)?;
    let model = StepControl::new(eq, grid, params, dt, scheme, t_end, stride)?;
    Ok((ib, model))
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Run every spec of the study on a pool of `workers` threads; records come
/// back in spec order regardless of completion order.
pub fn run_study(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let specs = enumerate_runs(cfg);
    let hash = cfg.hash();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LabError::Pool(e.to_string()))?;
    Ok(pool.install(|| {
        specs
            .par_iter()
            .map(|spec| run_one(cfg, spec, &hash))
            .collect()
    }))
}

pub fn run_decoupling_study(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<RunRecord>> {
    if cfg.study.kind != StudyKind::Decouple {
        return Err(LabError::Config("not a decoupling study".into()));
    }
    run_study(cfg, workers)
}

pub fn run_residual_study(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<RunRecord>> {
    if cfg.study.kind != StudyKind::Residual {
        return Err(LabError::Config("not a residual study".into()));
    }
    run_study(cfg, workers)
}

/// A single run; failures become flagged records.
pub fn run_one(cfg: &ExperimentConfig, spec: &RunSpec, hash: &str) -> RunRecord {
    let started = unix_now();
    let outcome = match cfg.study.kind {
        StudyKind::Decouple => decoupling_run(cfg, spec),
        StudyKind::Residual => residual_run(cfg, spec),
    };
    let (status, rows, summary) = match outcome {
        Ok((rows, summary)) => (RunStatus::Completed, rows, summary),
        Err(e) => (
            RunStatus::Failed {
                reason: e.to_string(),
            },
            Vec::new(),
            RunSummary::default(),
        ),
    };
    RunRecord {
        index: spec.index,
        config_hash: hash.to_string(),
        study: cfg.study.kind,
        family: spec.family,
        case: spec.case,
        epsilon: spec.point.epsilon,
        delta: spec.point.delta,
        s: spec.s,
        status,
        rows,
        summary,
        provenance: Provenance {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: started,
            finished_unix: unix_now(),
        },
    }
}

/// Model trajectories from the split halves of `(u0, v0)`.
fn solve_pair(
    w0p: &Field,
    w0m: &Field,
    params: PhysParams,
    kind: ModelKind,
    ctrl: &StepControl,
) -> Result<(Vec<WaveState>, Vec<WaveState>)> {
    let wp = model_solve(w0p, params, ModelFamily::right(kind), ctrl)?;
    let wm = model_solve(w0m, params, ModelFamily::left(kind), ctrl)?;
    Ok((wp, wm))
}

fn base_row(cfg: &ExperimentConfig, spec: &RunSpec, wp: &WaveState, wm: &WaveState) -> SnapshotRow {
    SnapshotRow {
        index: spec.index,
        study: cfg.study.kind,
        family: spec.family,
        case: spec.case,
        epsilon: spec.point.epsilon,
        delta: spec.point.delta,
        s: spec.s,
        t: wp.t,
        r_norm: None,
        r_t_norm: None,
        rho_t_norm: None,
        e_s: None,
        quadratic_part: None,
        epsilon_terms: None,
        f_plus: 0.0,
        f_minus: 0.0,
        f_tilde: 0.0,
        interaction: 0.0,
        u_linf: None,
        w_plus_linf: linf_norm(&wp.w),
        w_minus_linf: linf_norm(&wm.w),
        r_linf: None,
        r_mean: None,
        in_window: None,
    }
}

fn residual_run(cfg: &ExperimentConfig, spec: &RunSpec) -> Result<(Vec<SnapshotRow>, RunSummary)> {
    let grid = grid(cfg)?;
    let params = cfg.params(spec.point, spec.s)?;
    let (u0, v0) = initial_data(cfg, &grid, spec.case);
    let (w0p, w0m) = split_initial_data(&u0, &v0)?;
    let (_, ctrl) = step_controls(cfg, &grid, &params, spec.family)?;
    let (wp, wm) = solve_pair(&w0p, &w0m, params, spec.family, &ctrl)?;
    let mut rows = Vec::with_capacity(wp.len());
    let mut summary = RunSummary::default();
    for (a, b) in wp.iter().zip(&wm) {
        let rep = residual_tilde(a, b)?.row()?;
        summary.sup_f_plus = summary.sup_f_plus.max(rep.f_plus);
        summary.sup_f_minus = summary.sup_f_minus.max(rep.f_minus);
        summary.sup_f_tilde = summary.sup_f_tilde.max(rep.f_tilde);
        rows.push(SnapshotRow {
            f_plus: rep.f_plus,
            f_minus: rep.f_minus,
            f_tilde: rep.f_tilde,
            interaction: rep.interaction,
            ..base_row(cfg, spec, a, b)
        });
    }
    summary.uniform_bound = uniform_bound_monitor(&wp, 1)?.max(uniform_bound_monitor(&wm, 1)?);
    Ok((rows, summary))
}

/// `E_s^2 >= (||rho_t||^2 + delta^2 ||r_t||^2 + ||r||^2) / 4`, with a
/// round-off allowance relative to the quadratic part.
fn positive_definite(e: &EnergyValue) -> bool {
    e.squared() >= 0.5 * e.quadratic_part * (1.0 - 1e-12)
}

fn decoupling_run(
    cfg: &ExperimentConfig,
    spec: &RunSpec,
) -> Result<(Vec<SnapshotRow>, RunSummary)> {
    let grid = grid(cfg)?;
    let params = cfg.params(spec.point, spec.s)?;
    let kind = spec.family;
    let (u0, v0) = initial_data(cfg, &grid, spec.case);
    let (w0p, w0m) = split_initial_data(&u0, &v0)?;
    let (ib_ctrl, ctrl) = step_controls(cfg, &grid, &params, kind)?;
    let (wp, wm) = solve_pair(&w0p, &w0m, params, kind, &ctrl)?;
    let u1 = match spec.case {
        DataCase::General | DataCase::Unidirectional => spectral_derivative(&v0, 1)?,
        DataCase::Prepared => &model_time_derivative(&wp[0])? + &model_time_derivative(&wm[0])?,
    };
    let ib: Vec<IBState> = ib_solve_with_velocity(&u0, &u1, params, &ib_ctrl)?;
    if ib.len() != wp.len() {
        return Err(LabError::Config(format!(
            "IB and model trajectories have {} and {} snapshots",
            ib.len(),
            wp.len()
        )));
    }

    let s = params.sobolev_index;
    let mut rows = Vec::with_capacity(ib.len());
    let mut states: Vec<ErrorState> = Vec::with_capacity(ib.len());
    let mut samples: Vec<EnergySample> = Vec::with_capacity(ib.len());
    let mut energy_error = None;
    let mut summary = RunSummary::default();
    let (mut pd_checked, mut pd_violations) = (0usize, 0usize);
    let mut c_hat = 0.0_f64;
    let mut max_mean = 0.0_f64;
    let mut in_window = true;
    for ((u, a), b) in ib.iter().zip(&wp).zip(&wm) {
        let es = error_state(u, a, b)?;
        let rep = residual_tilde(a, b)?;
        let res_row = rep.row()?;
        let w_tilde = &a.w + &b.w;
        let r_norm = es.r_norm()?;
        in_window &= r_norm <= 1.0;
        let e = energy(&es, &w_tilde);
        if in_window && params.in_regime() {
            pd_checked += 1;
            if !matches!(&e, Ok(v) if positive_definite(v)) {
                pd_violations += 1;
            }
        }
        match &e {
            Ok(v) => samples.push(EnergySample::new(&es, v, &rep)),
            Err(err) => {
                energy_error.get_or_insert_with(|| format!("t={}: {err}", es.t));
            }
        }
        c_hat = c_hat.max(r_norm / decoupling_bound(kind, params.epsilon, params.delta, es.t));
        max_mean = max_mean.max(es.r.mean().abs());
        summary.sup_f_plus = summary.sup_f_plus.max(res_row.f_plus);
        summary.sup_f_minus = summary.sup_f_minus.max(res_row.f_minus);
        summary.sup_f_tilde = summary.sup_f_tilde.max(res_row.f_tilde);
        let ev = e.as_ref().ok();
        rows.push(SnapshotRow {
            r_norm: Some(r_norm),
            r_t_norm: Some(sobolev_norm(&es.r_t, s)?),
            rho_t_norm: Some(sobolev_norm(&es.rho_t, s)?),
            e_s: ev.map(|v| v.e_s),
            quadratic_part: ev.map(|v| v.quadratic_part),
            epsilon_terms: ev.map(|v| v.epsilon_terms),
            f_plus: res_row.f_plus,
            f_minus: res_row.f_minus,
            f_tilde: res_row.f_tilde,
            interaction: res_row.interaction,
            u_linf: Some(linf_norm(&u.u)),
            r_linf: Some(linf_norm(&es.r)),
            r_mean: Some(es.r.mean()),
            in_window: Some(in_window),
            ..base_row(cfg, spec, a, b)
        });
        states.push(es);
    }

    let first = &states[0];
    summary.terminal_error = rows.last().and_then(|r| r.r_norm);
    summary.c_hat = Some(c_hat);
    summary.rt0_norm = Some(sobolev_norm(&first.r_t, s)?);
    // the closed form holds for the CH pair with u_t(0) = v0_x
    if kind == ModelKind::Ch && spec.case != DataCase::Prepared {
        let direct = initial_rho_t(&u0, &v0, &params)?;
        summary.rho_t0_consistency = Some(first.rho_t.max_abs_diff(&direct)?);
    }
    match energy_error {
        Some(msg) => summary.energy_rate_error = Some(msg),
        None => match energy_rate_check(&samples) {
            Ok(rep) => summary.energy_rate_constant = Some(rep.constant),
            Err(err) => summary.energy_rate_error = Some(err.to_string()),
        },
    }
    summary.pd_checked = Some(pd_checked);
    summary.pd_violations = Some(pd_violations);
    summary.max_abs_r_mean = Some(max_mean);
    summary.validity_window = Some(validity_window(&states));
    summary.uniform_bound = uniform_bound_monitor(&wp, 1)?.max(uniform_bound_monitor(&wm, 1)?);
    Ok((rows, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: StudyKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::benchmark(kind);
        cfg.grid.half_length = 32.0;
        cfg.grid.n_points = 256;
        cfg.sweep.deltas = vec![0.2, 0.4];
        cfg.time.t_end = 1.0;
        cfg.time.snapshot_interval = 0.25;
        cfg
    }

    #[test]
    fn runs_are_enumerated_in_order() {
        let mut cfg = small(StudyKind::Decouple);
        cfg.study.cases = vec![DataCase::General, DataCase::Prepared];
        let specs = enumerate_runs(&cfg);
        assert_eq!(specs.len(), 3 * 2 * 2);
        assert!(specs.iter().enumerate().all(|(i, s)| s.index == i));
        assert_eq!(specs[0].family, ModelKind::Ch);
        assert_eq!(specs[2].case, DataCase::Prepared);
        assert_eq!(specs[1].point.delta, 0.4);
    }

    #[test]
    fn step_controls_divide_the_snapshot_interval() {
        let cfg = small(StudyKind::Decouple);
        let g = grid(&cfg).unwrap();
        let p = PhysParams::new(0.04, 0.2, 2.0).unwrap();
        for kind in ModelKind::ALL {
            let (ib, m) = step_controls(&cfg, &g, &p, kind).unwrap();
            assert_eq!(ib.dt(), m.dt());
            assert_eq!(ib.snapshot_stride(), m.snapshot_stride());
            assert_eq!(ib.steps(), 4 * ib.snapshot_stride());
        }
    }

    #[test]
    fn decoupling_runs_fill_every_column() {
        let cfg = small(StudyKind::Decouple);
        let recs = run_decoupling_study(&cfg, 2).unwrap();
        assert_eq!(recs.len(), 6);
        for r in &recs {
            assert!(r.completed(), "{:?}", r.status);
            assert_eq!(r.rows.len(), 5);
            assert!(r.rows.windows(2).all(|w| w[0].t < w[1].t));
            assert!(r
                .rows
                .iter()
                .all(|row| row.r_norm.is_some() && row.e_s.is_some()));
            assert!(r.summary.terminal_error.unwrap() > 0.0);
            assert!(r.summary.max_abs_r_mean.unwrap() < 1e-9);
            assert_eq!(r.summary.pd_violations, Some(0));
        }
        assert!(recs[0].summary.rho_t0_consistency.unwrap() < 1e-9);
        assert!(recs[2].summary.rho_t0_consistency.is_none());
        assert!(run_residual_study(&cfg, 1).is_err());
    }

    #[test]
    fn blow_up_becomes_a_failed_record() {
        let mut cfg = small(StudyKind::Decouple);
        cfg.study.families = vec![ModelKind::Ch];
        cfg.profile.u0.amplitude = 1e7;
        let recs = run_study(&cfg, 1).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs
            .iter()
            .all(|r| matches!(r.status, RunStatus::Failed { .. }) && r.rows.is_empty()));
    }

    #[test]
    fn empty_sweep_gives_no_records() {
        let mut cfg = small(StudyKind::Residual);
        cfg.sweep.deltas.clear();
        assert!(run_residual_study(&cfg, 1).unwrap().is_empty());
    }
}
