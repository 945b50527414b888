use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::PeriodicGrid;
use crate::error::{Error, Result};

/// Real function sampled on a periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &PeriodicGrid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.n_points()])
    }

    /// Sample `f(x)` at every grid point.
    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(grid, (0..grid.n_points()).map(|j| f(grid.x(j))).collect())
    }

    pub fn from_spectrum(grid: &PeriodicGrid, spectrum: Vec<Complex64>) -> Self {
        Self::from_raw(grid, grid.inverse(spectrum))
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.forward(&self.values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Fails with [`Error::BlownUpField`] on the first NaN or infinity.
    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::BlownUpField { index }),
            None => Ok(()),
        }
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.same_grid(other)?;
        Ok(Self::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + c * b)
    }

    /// Pointwise product truncated by the 2/3 rule.
    pub fn product(&self, other: &Field) -> Result<Field> {
        let raw = self.zip_with(other, |a, b| a * b)?;
        Ok(super::dealias(&raw))
    }

    /// The field `x -> f(-x)`. On `[-L, L)` sample `j` maps to `N - j`.
    pub fn reflect(&self) -> Field {
        let n = self.values.len();
        Self::from_raw(
            &self.grid,
            (0..n).map(|j| self.values[(n - j) % n]).collect(),
        )
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

fn binary(a: &Field, b: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
    a.zip_with(b, f)
        .expect("arithmetic on fields from different grids")
}

/// Panics if the grids differ; use [`Field::zip_with`] for a fallible version.
impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        binary(self, rhs, |a, b| a + b)
    }
}

/// Panics if the grids differ.
impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        binary(self, rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.map(|v| v * rhs)
    }
}

/// Raw pointwise product, no dealiasing. Panics if the grids differ.
impl Mul for &Field {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        binary(self, rhs, |a, b| a * b)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|v| -v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_maps_x_to_minus_x() {
        let g = PeriodicGrid::new(4.0, 16).unwrap();
        let f = Field::from_fn(&g, |x| x + 0.1 * x * x);
        let r = f.reflect();
        for j in 1..16 {
            let x = g.x(j);
            assert!((r.values()[j] - (-x + 0.1 * x * x)).abs() < 1e-14);
        }
        // x = -L is its own image modulo the period
        assert_eq!(r.values()[0], f.values()[0]);
        assert_eq!(r.reflect(), f);
    }

    #[test]
    fn mismatched_grids_refuse_to_combine() {
        let a = Field::zeros(&PeriodicGrid::new(1.0, 8).unwrap());
        let b = Field::zeros(&PeriodicGrid::new(2.0, 8).unwrap());
        assert!(matches!(
            a.zip_with(&b, |x, y| x + y),
            Err(Error::GridMismatch)
        ));
        assert!(matches!(a.product(&b), Err(Error::GridMismatch)));
    }

    #[test]
    fn finiteness_check_reports_index() {
        let g = PeriodicGrid::new(1.0, 8).unwrap();
        let mut v = vec![0.0; 8];
        v[5] = f64::NAN;
        let f = Field::new(&g, v).unwrap();
        assert!(matches!(
            f.check_finite(),
            Err(Error::BlownUpField { index: 5 })
        ));
        assert!(Field::new(&g, vec![0.0; 7]).is_err());
    }
}
