use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::TAU;
use crate::spectral::SpectralPlan;

/// Uniform periodic grid `θ_j = 2πj/n`, `j = 0..n`.
///
/// Cloning is cheap: the spectral plan is shared.
#[derive(Debug, Clone)]
pub struct ThetaGrid {
    n: usize,
    plan: Arc<SpectralPlan>,
}

impl PartialEq for ThetaGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl ThetaGrid {
    pub const MIN_NODES: usize = 16;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_NODES || n % 2 != 0 {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Self { n, plan: Arc::new(SpectralPlan::new(n)) })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Index of the node at `θ_j + π`.
    #[inline]
    pub fn antipode(&self, j: usize) -> usize {
        (j + self.n / 2) % self.n
    }

    pub(crate) fn plan(&self) -> &SpectralPlan {
        &self.plan
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: len });
        }
        Ok(())
    }

    /// Spectral derivative of order 1 or 2.
    pub fn derivative(&self, values: &[f64], order: u8) -> Result<Vec<f64>> {
        self.check_len(values.len())?;
        if order != 1 && order != 2 {
            return Err(Error::InvalidOrder(order));
        }
        Ok(self.plan.derivative(values, order))
    }

    /// Trapezoid rule over one period: `Δθ · Σ_j f_j`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        self.spacing() * values.iter().sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd() {
        assert!(matches!(ThetaGrid::new(14), Err(Error::InvalidGrid(14))));
        assert!(ThetaGrid::new(17).is_err());
        assert!(ThetaGrid::new(18).is_ok());
    }

    #[test]
    fn antipode_wraps() {
        let g = ThetaGrid::new(16).unwrap();
        assert_eq!(g.antipode(0), 8);
        assert_eq!(g.antipode(12), 4);
    }
}
