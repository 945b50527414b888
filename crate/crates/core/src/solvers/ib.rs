use super::stepping::rk4_step;
use super::{blowup_check, Equation, IBState, StepControl, DEFAULT_BLOWUP_CAP};
use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::spectral::{linf_norm, spectral_derivative, Field, PeriodicGrid};

/// `u_tt = (1 - delta^2 D_x^2)^{-1} D_x^2 (u + eps u^2)` on raw samples.
fn acceleration(grid: &PeriodicGrid, params: &PhysParams, u: &[f64]) -> Vec<f64> {
    let eps = params.epsilon;
    let d2 = params.delta * params.delta;
    let mut quad = grid.forward(&u.iter().map(|v| v * v).collect::<Vec<_>>());
    grid.truncate_spectrum(&mut quad);
    let lin = grid.forward(u);
    let spec = lin
        .iter()
        .zip(&quad)
        .zip(grid.wavenumbers())
        .map(|((a, b), &xi)| {
            let xi2 = xi * xi;
            -(a + eps * b) * (xi2 / (1.0 + d2 * xi2))
        })
        .collect();
    grid.inverse(spec)
}

/// `(u_t, u_tt)` for an IB state.
pub fn ib_rhs(state: &IBState) -> Result<(Field, Field)> {
    state.u.check_finite()?;
    state.p.check_finite()?;
    state.u.same_grid(&state.p)?;
    let grid = state.u.grid();
    let acc = acceleration(grid, &state.params, state.u.values());
    Ok((state.p.clone(), Field::from_raw(grid, acc)))
}

/// Linear IB frequency `omega(k) = k / sqrt(1 + delta^2 k^2)`.
pub fn linear_ib_frequency(delta: f64, k: f64) -> f64 {
    k / (1.0 + delta * delta * k * k).sqrt()
}

/// Solve the IB Cauchy problem with `u(0) = u0`, `u_t(0) = D_x v0`.
pub fn ib_solve(
    u0: &Field,
    v0: &Field,
    params: PhysParams,
    ctrl: &StepControl,
) -> Result<Vec<IBState>> {
    u0.same_grid(v0)?;
    let u1 = spectral_derivative(v0, 1)?;
    ib_solve_with_velocity(u0, &u1, params, ctrl)
}

/// Solve the IB Cauchy problem with an explicit initial velocity `u_t(0) = u1`.
pub fn ib_solve_with_velocity(
    u0: &Field,
    u1: &Field,
    params: PhysParams,
    ctrl: &StepControl,
) -> Result<Vec<IBState>> {
    u0.same_grid(u1)?;
    u0.check_finite()?;
    u1.check_finite()?;
    let grid = u0.grid();
    ctrl.check(Equation::Ib, grid, &params)?;
    let n = grid.n_points();
    let steps = ctrl.steps();
    let dt = ctrl.effective_dt();
    let stride = ctrl.snapshot_stride();

    let snap = |y: &[f64], t: f64| IBState {
        u: Field::from_raw(grid, y[..n].to_vec()),
        p: Field::from_raw(grid, y[n..].to_vec()),
        t,
        params,
    };
    let mut y: Vec<f64> = u0.values().iter().chain(u1.values()).copied().collect();
    let mut out = vec![snap(&y, 0.0)];
    for step in 1..=steps {
        y = rk4_step(&y, dt, |y| {
            let mut dy = y[n..].to_vec();
            dy.extend(acceleration(grid, &params, &y[..n]));
            Ok(dy)
        })?;
        let t = step as f64 * dt;
        let u = Field::from_raw(grid, y[..n].to_vec());
        if blowup_check(&u, DEFAULT_BLOWUP_CAP) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                time: t,
                linf: linf_norm(&u),
            });
        }
        if step % stride == 0 || step == steps {
            out.push(snap(&y, t));
        }
    }
    Ok(out)
}
