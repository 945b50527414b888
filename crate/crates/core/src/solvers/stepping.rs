use num_complex::Complex64;

use crate::error::Result;

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

/// One classical RK4 step for the autonomous system `y' = f(y)`.
pub(crate) fn rk4_step<F>(y: &[f64], dt: f64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(y)?;
    let k2 = f(&axpy(y, 0.5 * dt, &k1))?;
    let k3 = f(&axpy(y, 0.5 * dt, &k2))?;
    let k4 = f(&axpy(y, dt, &k3))?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, y)| y + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Per-mode exponentials `exp(lambda dt / 2)` and `exp(lambda dt)`.
pub(crate) struct Propagators {
    pub half: Vec<Complex64>,
    pub full: Vec<Complex64>,
}

impl Propagators {
    pub fn new(symbol: &[Complex64], dt: f64) -> Self {
        Self {
            half: symbol.iter().map(|l| (l * (0.5 * dt)).exp()).collect(),
            full: symbol.iter().map(|l| (l * dt).exp()).collect(),
        }
    }
}

/// One Lawson integrating-factor RK4 step for `y' = L y + N(y)` with `L`
/// diagonal in Fourier space.
pub(crate) fn ifrk4_step<F>(
    y: &[Complex64],
    dt: f64,
    prop: &Propagators,
    nonlinear: F,
) -> Result<Vec<Complex64>>
where
    F: Fn(&[Complex64]) -> Result<Vec<Complex64>>,
{
    let n = y.len();
    let e2 = &prop.half;
    let e = &prop.full;
    let k1 = nonlinear(y)?;
    let a: Vec<Complex64> = (0..n).map(|i| e2[i] * (y[i] + 0.5 * dt * k1[i])).collect();
    let k2 = nonlinear(&a)?;
    let b: Vec<Complex64> = (0..n).map(|i| e2[i] * y[i] + 0.5 * dt * k2[i]).collect();
    let k3 = nonlinear(&b)?;
    let c: Vec<Complex64> = (0..n).map(|i| e[i] * y[i] + dt * e2[i] * k3[i]).collect();
    let k4 = nonlinear(&c)?;
    Ok((0..n)
        .map(|i| e[i] * y[i] + dt / 6.0 * (e[i] * k1[i] + 2.0 * e2[i] * (k2[i] + k3[i]) + k4[i]))
        .collect())
}
