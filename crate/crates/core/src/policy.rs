//! Per-grid-state power allocations.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fading::{classify, SecrecyRegion};
use crate::quadrature::StateGrid;

/// Common (`mu0`) and confidential (`mu1`) power at every grid point,
/// normalized to the noise power at the main receiver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerPolicy {
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
}

impl PowerPolicy {
    pub fn zeros(len: usize) -> Self {
        Self {
            mu0: vec![0.0; len],
            mu1: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.mu0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu0.is_empty()
    }

    /// Checks sizes, signs and that no confidential power is spent where
    /// `z_M <= gamma * z_E`.
    pub fn validate(&self, grid: &StateGrid) -> Result<()> {
        if self.mu0.len() != grid.len() || self.mu1.len() != grid.len() {
            return Err(invalid("policy", "one (mu0, mu1) pair per grid point"));
        }
        for (p, (&a, &b)) in grid.points().iter().zip(self.mu0.iter().zip(&self.mu1)) {
            if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
                return Err(invalid("policy", format!("({a}, {b}) at {:?}", p.z)));
            }
            if b != 0.0 && classify(p.z, grid.gamma()) == SecrecyRegion::Insecure {
                return Err(invalid(
                    "policy",
                    format!("mu1 = {b} in insecure state {:?}", p.z),
                ));
            }
        }
        Ok(())
    }

    /// E[mu0 + mu1] over the grid.
    pub fn average_power(&self, grid: &StateGrid) -> Result<f64> {
        let total: Vec<f64> = self.mu0.iter().zip(&self.mu1).map(|(a, b)| a + b).collect();
        grid.expect_values(&total)
    }
}
