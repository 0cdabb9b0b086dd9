use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The problem/algorithm parameters: mutation strength `chi`, probability
/// `rho` of drawing the left-heavy function, left-part fraction `ell`, and the
/// string length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub chi: f64,
    pub rho: f64,
    pub ell: f64,
    pub n: usize,
}

impl Params {
    pub fn new(chi: f64, rho: f64, ell: f64, n: usize) -> Result<Self> {
        let p = Params { chi, rho, ell, n };
        p.validate()?;
        Ok(p)
    }

    /// `rho = ell = 1/2`.
    pub fn symmetric(chi: f64, n: usize) -> Result<Self> {
        Self::new(chi, 0.5, 0.5, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi.is_finite() && self.chi > 0.0) {
            return Err(Error::InvalidParams(format!("chi must be positive, got {}", self.chi)));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParams(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if !(0.0..=1.0).contains(&self.ell) {
            return Err(Error::InvalidParams(format!("ell must lie in [0, 1], got {}", self.ell)));
        }
        if self.n < 2 {
            return Err(Error::InvalidParams(format!("n must be at least 2, got {}", self.n)));
        }
        Ok(())
    }

    /// Length of the left part, `floor(ell * n)`.
    ///
    /// A relative slack of 1e-12 absorbs binary representation error, so that
    /// decimal inputs such as `ell = 0.29, n = 100` split at 29 and not 28.
    pub fn left_len(&self) -> usize {
        let x = self.ell * self.n as f64;
        ((x + x.abs() * 1e-12).floor() as usize).min(self.n)
    }

    pub fn right_len(&self) -> usize {
        self.n - self.left_len()
    }

    /// Per-bit flip probability `chi / n`.
    pub fn rate(&self) -> f64 {
        self.chi / self.n as f64
    }

    pub fn with_chi(&self, chi: f64) -> Self {
        Params { chi, ..*self }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Params { n, ..*self }
    }

    /// The same process seen with left and right part exchanged.
    pub fn mirrored(&self) -> Self {
        Params {
            rho: 1.0 - self.rho,
            ell: 1.0 - self.ell,
            ..*self
        }
    }

    /// The mutation operator needs `chi / n < 1`.
    pub fn check_rate(&self) -> Result<()> {
        if self.chi >= self.n as f64 {
            return Err(Error::MutationRate { chi: self.chi, n: self.n });
        }
        Ok(())
    }
}
