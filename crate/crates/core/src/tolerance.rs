//! Numeric tolerances used throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance configuration shared by all operations.
///
/// `eps_equal` decides matrix/point identity, `eps_geom` decides
/// coplanarity and containment, and `eps_eig` decides eigenvalue modulus
/// and rank questions. Identity must be at least as strict as geometry.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub eps_equal: f64,
    pub eps_geom: f64,
    pub eps_eig: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eps_equal: 1e-9,
            eps_geom: 1e-7,
            eps_eig: 1e-6,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_equal > 0.0 && self.eps_geom > 0.0 && self.eps_eig > 0.0) {
            return Err(Error::InvalidArgument(
                "tolerances must be strictly positive".into(),
            ));
        }
        if self.eps_equal > self.eps_geom {
            return Err(Error::InvalidArgument(
                "eps_equal must not exceed eps_geom".into(),
            ));
        }
        Ok(())
    }

    /// Override the geometric tolerance, keeping the ordering invariant.
    pub fn with_eps_geom(mut self, eps: f64) -> Self {
        self.eps_geom = eps;
        self.eps_equal = self.eps_equal.min(eps);
        self
    }
}
