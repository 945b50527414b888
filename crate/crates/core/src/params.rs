use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonlinearity `epsilon`, dispersion `delta` and Sobolev index `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub epsilon: f64,
    pub delta: f64,
    pub sobolev_index: f64,
}

impl PhysParams {
    pub const DEFAULT_SOBOLEV_INDEX: f64 = 2.0;

    /// Parameters in the validated long-wave regime `0 < eps <= delta <= 1`, `s > 1/2`.
    pub fn new(epsilon: f64, delta: f64, sobolev_index: f64) -> Result<Self> {
        let p = Self::unchecked(epsilon, delta, sobolev_index)?;
        if !(epsilon > 0.0 && epsilon <= delta && delta <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "need 0 < epsilon <= delta <= 1, got epsilon={epsilon}, delta={delta}"
            )));
        }
        if sobolev_index <= 0.5 {
            return Err(Error::InvalidParams(format!(
                "Sobolev index must exceed 1/2, got {sobolev_index}"
            )));
        }
        Ok(p)
    }

    /// Parameters outside the asymptotic regime (linear limit `epsilon = 0`,
    /// large amplitudes, ...). Only non-negativity and finiteness are enforced.
    pub fn unchecked(epsilon: f64, delta: f64, sobolev_index: f64) -> Result<Self> {
        if !(epsilon.is_finite() && delta.is_finite() && sobolev_index.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if epsilon < 0.0 || delta < 0.0 {
            return Err(Error::InvalidParams(format!(
                "epsilon and delta must be non-negative, got epsilon={epsilon}, delta={delta}"
            )));
        }
        Ok(Self {
            epsilon,
            delta,
            sobolev_index,
        })
    }

    pub fn in_regime(&self) -> bool {
        self.epsilon > 0.0
            && self.epsilon <= self.delta
            && self.delta <= 1.0
            && self.sobolev_index > 0.5
    }

    pub fn with_sobolev_index(self, s: f64) -> Self {
        Self {
            sobolev_index: s,
            ..self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_is_enforced() {
        assert!(PhysParams::new(0.01, 0.1, 2.0).is_ok());
        assert!(PhysParams::new(0.2, 0.1, 2.0).is_err());
        assert!(PhysParams::new(0.0, 0.1, 2.0).is_err());
        assert!(PhysParams::new(0.5, 1.5, 2.0).is_err());
        assert!(PhysParams::new(0.01, 0.1, 0.5).is_err());
        assert!(PhysParams::unchecked(0.0, 0.1, 2.0).unwrap().epsilon == 0.0);
        assert!(PhysParams::unchecked(-1.0, 0.1, 2.0).is_err());
        assert!(PhysParams::unchecked(f64::NAN, 0.1, 2.0).is_err());
    }
}
