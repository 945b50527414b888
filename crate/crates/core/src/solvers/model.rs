//! Right-hand sides of the unidirectional models.
//!
//! With `sigma = +1` (right) or `-1` (left) every model reads
//!
//! ```text
//! w_t = -sigma * M D_x g(w)
//! ```
//!
//! | family | M                             | g(w)                                                        |
//! |--------|-------------------------------|-------------------------------------------------------------|
//! | CH     | (1 - 5/4 delta^2 D_x^2)^{-1}  | w + eps/2 w^2 - 3/4 delta^2 w_xx - 3/4 eps delta^2 (w_x^2/2 + w w_xx) |
//! | BBM    | (1 - 5/4 delta^2 D_x^2)^{-1}  | w + eps/2 w^2 - 3/4 delta^2 w_xx                            |
//! | KdV    | 1                             | w + eps/2 w^2 + 1/2 delta^2 w_xx                            |
//!
//! The CH cubic term uses `2 w_x w_xx + w w_xxx = D_x(w_x^2/2 + w w_xx)`.

use num_complex::Complex64;

use super::stepping::{ifrk4_step, rk4_step, Propagators};
use super::DEFAULT_BLOWUP_CAP;
use super::{blowup_check, Equation, ModelFamily, ModelKind, Scheme, StepControl, WaveState};
use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::spectral::{linf_norm, Field, PeriodicGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Spectral form of one model equation on one grid.
struct ModelOperator {
    grid: PeriodicGrid,
    params: PhysParams,
    family: ModelFamily,
}

impl ModelOperator {
    fn new(grid: &PeriodicGrid, params: PhysParams, family: ModelFamily) -> Self {
        Self {
            grid: grid.clone(),
            params,
            family,
        }
    }

    fn sigma(&self) -> f64 {
        self.family.direction.sign()
    }

    /// Symbol of `M` at wavenumber `xi`.
    fn regularizer(&self, xi: f64) -> f64 {
        match self.family.kind {
            ModelKind::Ch | ModelKind::Bbm => {
                1.0 / (1.0 + 1.25 * self.params.delta * self.params.delta * xi * xi)
            }
            ModelKind::Kdv => 1.0,
        }
    }

    /// Coefficient `c` of the linear dispersive term `c * delta^2 * w_xx` in `g`.
    fn dispersion_coeff(&self) -> f64 {
        match self.family.kind {
            ModelKind::Ch | ModelKind::Bbm => -0.75,
            ModelKind::Kdv => 0.5,
        }
    }

    /// Linear symbol `lambda(xi)`: `w_hat_t = lambda w_hat + nonlinear`.
    fn linear_symbol(&self) -> Vec<Complex64> {
        let d2 = self.params.delta * self.params.delta;
        let c = self.dispersion_coeff();
        let nyq = self.grid.n_points() / 2;
        self.grid
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(k, &xi)| {
                if k == nyq {
                    return ZERO;
                }
                let g = 1.0 - c * d2 * xi * xi;
                Complex64::new(0.0, -self.sigma() * self.regularizer(xi) * xi * g)
            })
            .collect()
    }

    /// `-sigma * M * i xi` applied to a spectrum, Nyquist zeroed.
    fn close(&self, mut spec: Vec<Complex64>) -> Vec<Complex64> {
        let nyq = self.grid.n_points() / 2;
        let sigma = self.sigma();
        for (k, (c, &xi)) in spec.iter_mut().zip(self.grid.wavenumbers()).enumerate() {
            *c = if k == nyq {
                ZERO
            } else {
                *c * Complex64::new(0.0, -sigma * self.regularizer(xi) * xi)
            };
        }
        spec
    }

    fn derivative(&self, spec: &[Complex64], order: u32) -> Vec<f64> {
        let mut s = spec.to_vec();
        self.grid.differentiate_spectrum(&mut s, order);
        self.grid.inverse(s)
    }

    /// Dealiased spectrum of the nonlinear part of `g(w)`.
    fn nonlinear_flux(&self, w: &[f64], w_hat: &[Complex64]) -> Vec<Complex64> {
        let eps = self.params.epsilon;
        let d2 = self.params.delta * self.params.delta;
        let flux: Vec<f64> = match self.family.kind {
            ModelKind::Ch => {
                let wx = self.derivative(w_hat, 1);
                let wxx = self.derivative(w_hat, 2);
                (0..w.len())
                    .map(|j| {
                        0.5 * eps * w[j] * w[j]
                            - 0.75 * eps * d2 * (0.5 * wx[j] * wx[j] + w[j] * wxx[j])
                    })
                    .collect()
            }
            ModelKind::Bbm | ModelKind::Kdv => w.iter().map(|&v| 0.5 * eps * v * v).collect(),
        };
        let mut spec = self.grid.forward(&flux);
        self.grid.truncate_spectrum(&mut spec);
        spec
    }

    /// Nonlinear part of the right-hand side, in Fourier space.
    fn nonlinear_spectrum(&self, w_hat: &[Complex64]) -> Vec<Complex64> {
        let w = self.grid.inverse(w_hat.to_vec());
        self.close(self.nonlinear_flux(&w, w_hat))
    }

    fn rhs_values(&self, w: &[f64]) -> Vec<f64> {
        let w_hat = self.grid.forward(w);
        let flux = self.nonlinear_flux(w, &w_hat);
        let lambda = self.linear_symbol();
        let nonlinear = self.close(flux);
        let spec = lambda
            .iter()
            .zip(&w_hat)
            .zip(&nonlinear)
            .map(|((l, w), n)| l * w + n)
            .collect();
        self.grid.inverse(spec)
    }

    /// Directional derivative of the right-hand side at `w` along `v`.
    fn rhs_jvp(&self, w: &[f64], v: &[f64]) -> Vec<f64> {
        let eps = self.params.epsilon;
        let d2 = self.params.delta * self.params.delta;
        let v_hat = self.grid.forward(v);
        let lambda = self.linear_symbol();
        let flux: Vec<f64> = match self.family.kind {
            ModelKind::Ch => {
                let w_hat = self.grid.forward(w);
                let wx = self.derivative(&w_hat, 1);
                let wxx = self.derivative(&w_hat, 2);
                let vx = self.derivative(&v_hat, 1);
                let vxx = self.derivative(&v_hat, 2);
                (0..w.len())
                    .map(|j| {
                        eps * w[j] * v[j]
                            - 0.75 * eps * d2 * (wx[j] * vx[j] + v[j] * wxx[j] + w[j] * vxx[j])
                    })
                    .collect()
            }
            ModelKind::Bbm | ModelKind::Kdv => w.iter().zip(v).map(|(a, b)| eps * a * b).collect(),
        };
        let mut flux_hat = self.grid.forward(&flux);
        self.grid.truncate_spectrum(&mut flux_hat);
        let nonlinear = self.close(flux_hat);
        let spec = lambda
            .iter()
            .zip(&v_hat)
            .zip(&nonlinear)
            .map(|((l, v), n)| l * v + n)
            .collect();
        self.grid.inverse(spec)
    }
}

/// `w_t` of a model state, evaluated exactly from the equation.
pub fn model_rhs(state: &WaveState) -> Result<Field> {
    state.w.check_finite()?;
    let op = ModelOperator::new(state.w.grid(), state.params, state.family);
    Ok(Field::from_raw(
        state.w.grid(),
        op.rhs_values(state.w.values()),
    ))
}

/// Public alias of [`model_rhs`]: the exact-in-model time derivative `w_t`.
pub fn model_time_derivative(state: &WaveState) -> Result<Field> {
    model_rhs(state)
}

/// `w_tt`, obtained by differentiating the equation in time: the Jacobian of
/// the right-hand side applied to `w_t`.
pub fn model_second_time_derivative(state: &WaveState) -> Result<Field> {
    let wt = model_rhs(state)?;
    let op = ModelOperator::new(state.w.grid(), state.params, state.family);
    Ok(Field::from_raw(
        state.w.grid(),
        op.rhs_jvp(state.w.values(), wt.values()),
    ))
}

/// Phase speed `omega / k` of the linearized model at wavenumber `k`.
pub fn linear_phase_speed(family: ModelFamily, delta: f64, k: f64) -> f64 {
    let d2k2 = delta * delta * k * k;
    let c = match family.kind {
        ModelKind::Ch | ModelKind::Bbm => (1.0 + 0.75 * d2k2) / (1.0 + 1.25 * d2k2),
        ModelKind::Kdv => 1.0 - 0.5 * d2k2,
    };
    family.direction.sign() * c
}

fn check_blowup(w: &[f64], grid: &PeriodicGrid, t: f64) -> Result<()> {
    let f = Field::from_raw(grid, w.to_vec());
    if blowup_check(&f, DEFAULT_BLOWUP_CAP) {
        return Err(Error::BlowUp {
            time: t,
            linf: linf_norm(&f),
        });
    }
    Ok(())
}

/// Integrate a model from `w0` to `ctrl.t_end()`, keeping every
/// `snapshot_stride`-th step plus the initial and final states.
///
/// Aborts with [`Error::BlowUp`] once the solution leaves the finite regime.
pub fn model_solve(
    w0: &Field,
    params: PhysParams,
    family: ModelFamily,
    ctrl: &StepControl,
) -> Result<Vec<WaveState>> {
    w0.check_finite()?;
    let grid = w0.grid();
    ctrl.check(Equation::Model(family.kind), grid, &params)?;
    let op = ModelOperator::new(grid, params, family);
    let steps = ctrl.steps();
    let dt = ctrl.effective_dt();
    let stride = ctrl.snapshot_stride();
    let snap = |w: Vec<f64>, t: f64| WaveState {
        w: Field::from_raw(grid, w),
        t,
        params,
        family,
    };

    let mut out = vec![snap(w0.values().to_vec(), 0.0)];
    match ctrl.scheme() {
        Scheme::Rk4 => {
            let mut w = w0.values().to_vec();
            for step in 1..=steps {
                w = rk4_step(&w, dt, |y| Ok(op.rhs_values(y)))?;
                let t = step as f64 * dt;
                check_blowup(&w, grid, t)?;
                if step % stride == 0 || step == steps {
                    out.push(snap(w.clone(), t));
                }
            }
        }
        Scheme::IfRk4 => {
            let prop = Propagators::new(&op.linear_symbol(), dt);
            let mut w_hat = grid.forward(w0.values());
            for step in 1..=steps {
                w_hat = ifrk4_step(&w_hat, dt, &prop, |y| Ok(op.nonlinear_spectrum(y)))?;
                let t = step as f64 * dt;
                let at_snapshot = step % stride == 0 || step == steps;
                let w = grid.inverse(w_hat.clone());
                check_blowup(&w, grid, t)?;
                if at_snapshot {
                    out.push(snap(w, t));
                }
            }
        }
    }
    Ok(out)
}
