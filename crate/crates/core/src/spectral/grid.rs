use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct GridInner {
    half_length: f64,
    n_points: usize,
    dx: f64,
    wavenumbers: Vec<f64>,
    dealias_mask: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid on `[-L, L)` with `N` points and its discrete
/// Fourier machinery. Cloning is cheap; clones share the FFT plans.
#[derive(Clone)]
pub struct PeriodicGrid {
    inner: Arc<GridInner>,
}

impl PeriodicGrid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(half_length: f64, n_points: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive and finite, got {half_length}"
            )));
        }
        if n_points < Self::MIN_POINTS || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "point count must be even and at least {}, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        let n = n_points as i64;
        let wavenumbers = (0..n)
            .map(|k| {
                let m = if k < n / 2 { k } else { k - n };
                std::f64::consts::PI * m as f64 / half_length
            })
            .collect();
        let dealias_mask = (0..n)
            .map(|k| {
                let m = if k < n / 2 { k } else { k - n };
                3 * m.abs() < n
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        Ok(Self {
            inner: Arc::new(GridInner {
                half_length,
                n_points,
                dx: 2.0 * half_length / n_points as f64,
                wavenumbers,
                dealias_mask,
                forward,
                inverse,
            }),
        })
    }

    pub fn half_length(&self) -> f64 {
        self.inner.half_length
    }

    pub fn n_points(&self) -> usize {
        self.inner.n_points
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    /// Domain length `2L`.
    pub fn period(&self) -> f64 {
        2.0 * self.inner.half_length
    }

    /// Wavenumbers `pi k / L` in standard DFT ordering.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Largest resolved wavenumber `pi / dx`.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI / self.inner.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.inner.half_length + j as f64 * self.inner.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.inner.n_points).map(|j| self.x(j)).collect()
    }

    /// Index of the Nyquist mode in DFT ordering.
    pub(crate) fn nyquist_index(&self) -> usize {
        self.inner.n_points / 2
    }

    /// Modes retained by the 2/3 rule: `3|k| < N`.
    pub(crate) fn dealias_mask(&self) -> &[bool] {
        &self.inner.dealias_mask
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.inner.n_points);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT (normalized by `1/N`), keeping the real part.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        debug_assert_eq!(spectrum.len(), self.inner.n_points);
        self.inner.inverse.process(&mut spectrum);
        let scale = 1.0 / self.inner.n_points as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Multiply a spectrum in place by `(i xi)^order`. The Nyquist mode is
    /// zeroed for odd orders so real fields stay real.
    pub(crate) fn differentiate_spectrum(&self, spectrum: &mut [Complex64], order: u32) {
        if order == 0 {
            return;
        }
        let factor = Complex64::i().powu(order);
        for (c, &xi) in spectrum.iter_mut().zip(self.wavenumbers()) {
            *c *= factor * xi.powi(order as i32);
        }
        if order % 2 == 1 {
            spectrum[self.nyquist_index()] = Complex64::new(0.0, 0.0);
        }
    }

    pub(crate) fn truncate_spectrum(&self, spectrum: &mut [Complex64]) {
        for (c, &keep) in spectrum.iter_mut().zip(self.dealias_mask()) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Weight turning `sum |f_k|^2` into the trapezoidal L2 norm squared.
    pub(crate) fn parseval_weight(&self) -> f64 {
        let n = self.inner.n_points as f64;
        self.period() / (n * n)
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n_points == other.inner.n_points
                && self.inner.half_length.to_bits() == other.inner.half_length.to_bits())
    }
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("half_length", &self.inner.half_length)
            .field("n_points", &self.inner.n_points)
            .field("dx", &self.inner.dx)
            .finish()
    }
}
