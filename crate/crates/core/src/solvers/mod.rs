//! Method-of-lines integration of the improved Boussinesq (IB) equation
//!
//! ```text
//! u_tt - u_xx - delta^2 u_xxtt - eps (u^2)_xx = 0
//! ```
//!
//! and of the six unidirectional models (CH, BBM, KdV, each right- and
//! left-moving). All right-hand sides are written in divergence form so the
//! spatial mean of every solution is conserved to round-off.

mod ib;
mod model;
pub mod snapshot;
mod stepping;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::spectral::{linf_norm, Field, PeriodicGrid};

pub use ib::{ib_rhs, ib_solve, ib_solve_with_velocity, linear_ib_frequency};
pub use model::{
    linear_phase_speed, model_rhs, model_second_time_derivative, model_solve, model_time_derivative,
};

/// Default surrogate for the `limsup ||u||_inf = infinity` blow-up criterion.
pub const DEFAULT_BLOWUP_CAP: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ch,
    Bbm,
    Kdv,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Ch, ModelKind::Bbm, ModelKind::Kdv];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ch => "ch",
            ModelKind::Bbm => "bbm",
            ModelKind::Kdv => "kdv",
        }
    }

    pub fn default_scheme(self) -> Scheme {
        match self {
            ModelKind::Kdv => Scheme::IfRk4,
            ModelKind::Ch | ModelKind::Bbm => Scheme::Rk4,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ch" => Ok(ModelKind::Ch),
            "bbm" => Ok(ModelKind::Bbm),
            "kdv" => Ok(ModelKind::Kdv),
            other => Err(Error::InvalidArgument(format!(
                "unknown model family '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    /// `+1` for right-moving, `-1` for left-moving waves.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Right => 1.0,
            Direction::Left => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction::Right => Direction::Left,
            Direction::Left => Direction::Right,
        }
    }
}

/// One of the six unidirectional model equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelFamily {
    pub kind: ModelKind,
    pub direction: Direction,
}

impl ModelFamily {
    pub fn new(kind: ModelKind, direction: Direction) -> Self {
        Self { kind, direction }
    }

    pub fn right(kind: ModelKind) -> Self {
        Self::new(kind, Direction::Right)
    }

    pub fn left(kind: ModelKind) -> Self {
        Self::new(kind, Direction::Left)
    }

    pub fn all() -> impl Iterator<Item = ModelFamily> {
        ModelKind::ALL.into_iter().flat_map(|k| {
            [Direction::Right, Direction::Left]
                .into_iter()
                .map(move |d| ModelFamily::new(k, d))
        })
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.direction {
            Direction::Right => '+',
            Direction::Left => '-',
        };
        write!(f, "{}{}", self.kind, d)
    }
}

/// Snapshot of a unidirectional model solution.
#[derive(Clone, Debug)]
pub struct WaveState {
    pub w: Field,
    pub t: f64,
    pub params: PhysParams,
    pub family: ModelFamily,
}

/// Snapshot of an IB solution: displacement `u` and velocity `p = u_t`.
#[derive(Clone, Debug)]
pub struct IBState {
    pub u: Field,
    pub p: Field,
    pub t: f64,
    pub params: PhysParams,
}

/// Equation whose stability bound a [`StepControl`] is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Ib,
    Model(ModelKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Classical explicit four-stage Runge-Kutta.
    Rk4,
    /// Lawson integrating-factor RK4: exact linear propagation per mode.
    IfRk4,
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rk4" => Ok(Scheme::Rk4),
            "ifrk4" => Ok(Scheme::IfRk4),
            other => Err(Error::InvalidArgument(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Largest admissible step for `scheme` applied to `equation`.
///
/// RK4 on IB/CH/BBM: `min(dx/2, delta/4)`. Integrating-factor RK4 on the
/// models: `dx/2`. Plain RK4 on KdV is limited by the cubic symbol.
pub fn stability_bound(
    equation: Equation,
    scheme: Scheme,
    grid: &PeriodicGrid,
    params: &PhysParams,
) -> Result<f64> {
    let half_dx = 0.5 * grid.dx();
    let delta_cap = if params.delta > 0.0 {
        0.25 * params.delta
    } else {
        f64::INFINITY
    };
    match (equation, scheme) {
        (Equation::Ib, Scheme::IfRk4) => Err(Error::UnsupportedScheme(
            "integrating-factor stepping is only implemented for the first-order models".into(),
        )),
        (Equation::Ib, Scheme::Rk4)
        | (Equation::Model(ModelKind::Ch | ModelKind::Bbm), Scheme::Rk4) => {
            Ok(half_dx.min(delta_cap))
        }
        (Equation::Model(ModelKind::Kdv), Scheme::Rk4) => {
            let k = grid.max_wavenumber();
            let omega = k * (1.0 + 0.5 * params.delta * params.delta * k * k);
            Ok(half_dx.min(2.5 / omega))
        }
        (Equation::Model(ModelKind::Ch | ModelKind::Bbm), Scheme::IfRk4) => {
            Ok(half_dx.min(delta_cap))
        }
        (Equation::Model(ModelKind::Kdv), Scheme::IfRk4) => Ok(half_dx),
    }
}

/// Fixed-step integration settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    dt: f64,
    scheme: Scheme,
    t_end: f64,
    snapshot_stride: usize,
}

impl StepControl {
    /// Validated against the stability bound of `equation` on `grid`.
    pub fn new(
        equation: Equation,
        grid: &PeriodicGrid,
        params: &PhysParams,
        dt: f64,
        scheme: Scheme,
        t_end: f64,
        snapshot_stride: usize,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_end must be positive, got {t_end}"
            )));
        }
        if snapshot_stride == 0 {
            return Err(Error::InvalidArgument(
                "snapshot stride must be positive".into(),
            ));
        }
        let ctrl = Self {
            dt,
            scheme,
            t_end,
            snapshot_stride,
        };
        ctrl.check(equation, grid, params)?;
        Ok(ctrl)
    }

    /// Default scheme for `equation` with `dt` at its stability bound.
    pub fn default_for(
        equation: Equation,
        grid: &PeriodicGrid,
        params: &PhysParams,
        t_end: f64,
        snapshot_stride: usize,
    ) -> Result<Self> {
        let scheme = match equation {
            Equation::Ib => Scheme::Rk4,
            Equation::Model(kind) => kind.default_scheme(),
        };
        let dt = stability_bound(equation, scheme, grid, params)?;
        Self::new(equation, grid, params, dt, scheme, t_end, snapshot_stride)
    }

    pub fn check(
        &self,
        equation: Equation,
        grid: &PeriodicGrid,
        params: &PhysParams,
    ) -> Result<()> {
        let bound = stability_bound(equation, self.scheme, grid, params)?;
        // relative slack so a dt computed as bound/n * n passes
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt: self.dt, bound });
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn snapshot_stride(&self) -> usize {
        self.snapshot_stride
    }

    /// Number of steps; the effective step `t_end / steps` never exceeds `dt`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        self.t_end / self.steps() as f64
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }
}

/// True iff `f` has a non-finite sample or `||f||_inf > cap`.
pub fn blowup_check(f: &Field, cap: f64) -> bool {
    let m = linf_norm(f);
    !m.is_finite() || m > cap || !f.is_finite()
}
