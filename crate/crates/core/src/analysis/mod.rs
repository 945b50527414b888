//! From solver output to the decoupling estimates: initial-data splitting,
//! the error fields `r`, `rho`, the residuals `F` and `F~`, the energy
//! functional and its rate inequality, and the uniform-bound monitor.
//!
//! The error of the decoupled approximation is `r = u - w+ - w-` and `rho`
//! is its mean-zero antiderivative, so `r = rho_x`. Time derivatives always
//! come from the equations (IB velocity, model right-hand sides), never from
//! differences of snapshots.

mod residual;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::solvers::{model_time_derivative, IBState, WaveState};
use crate::spectral::{
    antiderivative, apply_helmholtz_inverse, sobolev_inner, sobolev_norm, spectral_derivative,
    Field,
};

pub use residual::{
    defining_residual, residual_model, residual_tilde, ResidualNorms, ResidualReport, ResidualRow,
};

/// Split `(u0, v0)` into right- and left-moving data
/// `w+ = (u0 - v0)/2`, `w- = (u0 + v0)/2`.
///
/// `w-` is nudged by a few ulps where needed so that `w+ + w-` reproduces
/// `u0` bit for bit. That is always achieved where `|v0| <= |u0|`. Where
/// `|v0|` dominates, both halves are of size `|v0|/2` and their sum may
/// only be representable within one ulp of that size.
pub fn split_initial_data(u0: &Field, v0: &Field) -> Result<(Field, Field)> {
    u0.same_grid(v0)?;
    let (plus, minus): (Vec<f64>, Vec<f64>) = u0
        .values()
        .iter()
        .zip(v0.values())
        .map(|(&u, &v)| split_point(u, v))
        .unzip();
    Ok((Field::new(u0.grid(), plus)?, Field::new(u0.grid(), minus)?))
}

/// `(p, m)` near `((u - v)/2, (u + v)/2)` with `p + m == u` when reachable.
fn split_point(u: f64, v: f64) -> (f64, f64) {
    let p0 = 0.5 * (u - v);
    // a tie in `p + m` can make every `m` miss; moving `p` by an ulp breaks it
    for p in [p0, p0.next_up(), p0.next_down()] {
        let mut m = u - p;
        for _ in 0..8 {
            let s = p + m;
            if s == u {
                return (p, m);
            }
            m = if s < u { m.next_up() } else { m.next_down() };
        }
    }
    (p0, u - p0)
}

/// `rho_t(x, 0)` for the CH pair:
///
/// ```text
/// Q { -(delta^2/2) v0_xx - (eps/2) u0 v0 - (3/8) eps delta^2 (u0_x v0_x - (u0 v0)_xx) }
/// ```
///
/// with `Q = (1 - 5/4 delta^2 D_x^2)^{-1}`, returned in the mean-zero gauge
/// used for `rho`. The initial `r_t` is its derivative.
pub fn initial_rho_t(u0: &Field, v0: &Field, params: &PhysParams) -> Result<Field> {
    u0.same_grid(v0)?;
    u0.check_finite()?;
    v0.check_finite()?;
    let (eps, d2) = (params.epsilon, params.delta * params.delta);
    let uv = u0 * v0;
    let ux = spectral_derivative(u0, 1)?;
    let vx = spectral_derivative(v0, 1)?;
    let vxx = spectral_derivative(v0, 2)?;
    let uv_xx = spectral_derivative(&uv, 2)?;
    let bracket = &(&(&vxx * (-0.5 * d2)) - &(&uv * (0.5 * eps)))
        - &(&(&(&ux * &vx) - &uv_xx) * (0.375 * eps * d2));
    let q = apply_helmholtz_inverse(&bracket, params.delta, 1.25)?;
    let mean = q.mean();
    Ok(q.map(|v| v - mean))
}

/// Error fields of the decoupled approximation at one time.
#[derive(Clone, Debug)]
pub struct ErrorState {
    pub r: Field,
    pub rho: Field,
    pub r_t: Field,
    pub rho_t: Field,
    pub t: f64,
    pub params: PhysParams,
}

impl ErrorState {
    /// The identically zero error state on the grid of `like`.
    pub fn zero(like: &Field, t: f64, params: PhysParams) -> Self {
        let z = Field::zeros(like.grid());
        Self {
            r: z.clone(),
            rho: z.clone(),
            r_t: z.clone(),
            rho_t: z,
            t,
            params,
        }
    }

    pub fn r_norm(&self) -> Result<f64> {
        sobolev_norm(&self.r, self.params.sobolev_index)
    }
}

/// `r = u - w+ - w-`, `r_t = u_t - w+_t - w-_t` and their antiderivatives.
///
/// Fails with [`Error::NonzeroMean`] if mass conservation has degraded so far
/// that `r` no longer has a periodic antiderivative.
pub fn error_state(ib: &IBState, wp: &WaveState, wm: &WaveState) -> Result<ErrorState> {
    residual::check_pair(wp, wm)?;
    ib.u.same_grid(&wp.w)?;
    if !residual::times_match(ib.t, wp.t) {
        return Err(Error::TimeMismatch(ib.t, wp.t));
    }
    if ib.params.epsilon != wp.params.epsilon || ib.params.delta != wp.params.delta {
        return Err(Error::InvalidArgument(
            "IB and model states carry different (epsilon, delta)".into(),
        ));
    }
    ib.u.check_finite()?;
    ib.p.check_finite()?;
    let wpt = model_time_derivative(wp)?;
    let wmt = model_time_derivative(wm)?;
    let r = &ib.u - &(&wp.w + &wm.w);
    let r_t = &(&ib.p - &wpt) - &wmt;
    Ok(ErrorState {
        rho: antiderivative(&r)?,
        rho_t: antiderivative(&r_t)?,
        r,
        r_t,
        t: ib.t,
        params: ib.params,
    })
}

/// Value of the energy functional, split into its quadratic and `eps` parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub e_s: f64,
    /// `(||rho_t||^2 + delta^2 ||r_t||^2 + ||r||^2) / 2` in `H^s`.
    pub quadratic_part: f64,
    /// `eps <L^s(w~ r), L^s r> + eps/2 <L^s r^2, L^s r>`.
    pub epsilon_terms: f64,
}

impl EnergyValue {
    pub fn squared(&self) -> f64 {
        self.quadratic_part + self.epsilon_terms
    }
}

/// One serialized energy row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub family: String,
    pub epsilon: f64,
    pub delta: f64,
    pub s: f64,
    pub t: f64,
    pub e_s: f64,
    pub quadratic_part: f64,
    pub epsilon_terms: f64,
}

impl EnergyRow {
    pub fn new(family: impl Into<String>, es: &ErrorState, e: &EnergyValue) -> Self {
        Self {
            family: family.into(),
            epsilon: es.params.epsilon,
            delta: es.params.delta,
            s: es.params.sobolev_index,
            t: es.t,
            e_s: e.e_s,
            quadratic_part: e.quadratic_part,
            epsilon_terms: e.epsilon_terms,
        }
    }
}

/// Energy of an error state, with `w_tilde = w+ + w-`:
///
/// ```text
/// E_s^2 = (||rho_t||^2 + delta^2 ||r_t||^2 + ||r||^2)/2
///       + eps <L^s(w~ r), L^s r> + eps/2 <L^s r^2, L^s r>
/// ```
///
/// A negative `E_s^2` is reported as [`Error::NegativeEnergy`].
pub fn energy(es: &ErrorState, w_tilde: &Field) -> Result<EnergyValue> {
    es.r.same_grid(w_tilde)?;
    let s = es.params.sobolev_index;
    let eps = es.params.epsilon;
    let d2 = es.params.delta * es.params.delta;
    let sq = |f: &Field| sobolev_norm(f, s).map(|n| n * n);
    let quadratic_part = 0.5 * (sq(&es.rho_t)? + d2 * sq(&es.r_t)? + sq(&es.r)?);
    let epsilon_terms = if eps == 0.0 {
        0.0
    } else {
        let wr = w_tilde * &es.r;
        let r2 = &es.r * &es.r;
        eps * sobolev_inner(&wr, &es.r, s)? + 0.5 * eps * sobolev_inner(&r2, &es.r, s)?
    };
    let e2 = quadratic_part + epsilon_terms;
    if !e2.is_finite() {
        return Err(Error::InvalidArgument("energy is not finite".into()));
    }
    if e2 < 0.0 {
        return Err(Error::NegativeEnergy(e2));
    }
    Ok(EnergyValue {
        e_s: e2.sqrt(),
        quadratic_part,
        epsilon_terms,
    })
}

/// The inputs of the energy-rate inequality at one snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub e_s: f64,
    pub f_tilde_norm: f64,
    pub epsilon: f64,
}

impl EnergySample {
    pub fn new(es: &ErrorState, e: &EnergyValue, report: &ResidualReport) -> Self {
        Self {
            t: es.t,
            e_s: e.e_s,
            f_tilde_norm: report.norms.tilde,
            epsilon: es.params.epsilon,
        }
    }
}

/// Result of checking `dE_s/dt <= C (eps E_s + sup ||F~||)` along a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRateReport {
    pub times: Vec<f64>,
    pub derivative: Vec<f64>,
    /// `(dE_s/dt) / (eps E_s + sup ||F~||)` per snapshot.
    pub ratios: Vec<f64>,
    /// Largest ratio: the empirical constant `C` of the run.
    pub constant: f64,
    /// Max of `||F~||` over the stored snapshots.
    pub sup_f_tilde: f64,
}

pub const MIN_RATE_SNAPSHOTS: usize = 5;

/// Empirical constant of the energy inequality.
///
/// `dE_s/dt` uses centered differences inside and second-order one-sided
/// differences at both ends; snapshots must be uniformly spaced.
pub fn energy_rate_check(samples: &[EnergySample]) -> Result<EnergyRateReport> {
    let n = samples.len();
    if n < MIN_RATE_SNAPSHOTS {
        return Err(Error::TooFewSnapshots {
            needed: MIN_RATE_SNAPSHOTS,
            got: n,
        });
    }
    let h = (samples[n - 1].t - samples[0].t) / (n - 1) as f64;
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument(
            "snapshot times must increase".into(),
        ));
    }
    for (i, s) in samples.iter().enumerate() {
        if (s.t - (samples[0].t + i as f64 * h)).abs() > 1e-6 * h {
            return Err(Error::InvalidArgument(
                "energy rate check needs uniformly spaced snapshots".into(),
            ));
        }
    }
    let e: Vec<f64> = samples.iter().map(|s| s.e_s).collect();
    let derivative: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * e[0] + 4.0 * e[1] - e[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * e[n - 1] - 4.0 * e[n - 2] + e[n - 3]) / (2.0 * h)
            } else {
                (e[i + 1] - e[i - 1]) / (2.0 * h)
            }
        })
        .collect();
    let sup_f_tilde = samples.iter().map(|s| s.f_tilde_norm).fold(0.0, f64::max);
    let ratios: Vec<f64> = samples
        .iter()
        .zip(&derivative)
        .map(|(s, &de)| {
            let denom = s.epsilon * s.e_s + sup_f_tilde;
            if de <= 0.0 {
                0.0
            } else if denom > 0.0 {
                de / denom
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let constant = ratios.iter().copied().fold(0.0, f64::max);
    Ok(EnergyRateReport {
        times: samples.iter().map(|s| s.t).collect(),
        derivative,
        ratios,
        constant,
        sup_f_tilde,
    })
}

/// `sup_t ||w||_{H^{s+k}} + ||w_t||_{H^{s+k-1}}` over a model trajectory.
pub fn uniform_bound_monitor(traj: &[WaveState], k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("uniform bound needs k >= 1".into()));
    }
    let mut sup = 0.0_f64;
    for state in traj {
        let s = state.params.sobolev_index + k as f64;
        let wt = model_time_derivative(state)?;
        sup = sup.max(sobolev_norm(&state.w, s)? + sobolev_norm(&wt, s - 1.0)?);
    }
    Ok(sup)
}

/// First snapshot time at which `||r||_{H^s} > 1`; the final time if none.
/// Non-finite norms count as exits.
pub fn validity_window(traj: &[ErrorState]) -> f64 {
    for es in traj {
        match es.r_norm() {
            Ok(n) if n <= 1.0 => {}
            _ => return es.t,
        }
    }
    traj.last().map_or(0.0, |es| es.t)
}
