//! Matérn-3/2 covariance over scalar time inputs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GpError;

pub(crate) const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Hyperparameters of a single-output Matérn-3/2 GP.
///
/// `sigma_f` is the kernel amplitude (signal standard deviation), `length_scale`
/// is in seconds and `sigma_n` is the standard deviation of the additive
/// observation noise. Amplitude and noise carry the units of the channel they
/// model (meters for position, m/s for velocity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub sigma_f: f64,
    pub length_scale: f64,
    pub sigma_n: f64,
}

impl KernelParams {
    pub fn new(sigma_f: f64, length_scale: f64, sigma_n: f64) -> Result<Self, GpError> {
        let p = Self {
            sigma_f,
            length_scale,
            sigma_n,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if !(self.sigma_f.is_finite() && self.length_scale.is_finite() && self.sigma_n.is_finite())
        {
            return Err(GpError::InvalidArgument(format!(
                "kernel parameters must be finite: {self:?}"
            )));
        }
        if self.sigma_f <= 0.0 || self.length_scale <= 0.0 || self.sigma_n < 0.0 {
            return Err(GpError::InvalidArgument(format!(
                "need sigma_f > 0, length_scale > 0, sigma_n >= 0: {self:?}"
            )));
        }
        Ok(())
    }

    /// Prior variance `k(x, x)`.
    pub fn signal_variance(&self) -> f64 {
        self.sigma_f * self.sigma_f
    }

    pub fn noise_variance(&self) -> f64 {
        self.sigma_n * self.sigma_n
    }

    /// Covariance at separation `d` (seconds).
    #[inline]
    pub fn covariance(&self, d: f64) -> f64 {
        let r = SQRT_3 * d.abs() / self.length_scale;
        self.signal_variance() * (1.0 + r) * (-r).exp()
    }

    /// Same noise level, amplitude and length scale given in log space.
    pub(crate) fn from_log(log_sigma_f: f64, log_length_scale: f64, sigma_n: f64) -> Self {
        Self {
            sigma_f: log_sigma_f.exp(),
            length_scale: log_length_scale.exp(),
            sigma_n,
        }
    }

    pub(crate) fn to_log(self) -> [f64; 2] {
        [self.sigma_f.ln(), self.length_scale.ln()]
    }
}

/// Matérn-3/2 covariance between two timestamps.
pub fn matern32(xi: f64, xj: f64, p: &KernelParams) -> Result<f64, GpError> {
    if !xi.is_finite() || !xj.is_finite() {
        return Err(GpError::InvalidArgument(format!(
            "non-finite kernel input ({xi}, {xj})"
        )));
    }
    p.validate()?;
    Ok(p.covariance(xi - xj))
}

/// Noise-free Gram matrix `K(X, X)`.
pub fn gram(x: &[f64], p: &KernelParams) -> DMatrix<f64> {
    let m = x.len();
    let mut k = DMatrix::zeros(m, m);
    for j in 0..m {
        k[(j, j)] = p.signal_variance();
        for i in (j + 1)..m {
            let v = p.covariance(x[i] - x[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Random access to the entries of a symmetric matrix, so the hierarchical
/// backend can sample off-diagonal blocks without materializing them.
pub(crate) trait Entries {
    fn dim(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> f64;
}

impl Entries for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self[(i, j)]
    }
}

pub(crate) struct KernelEntries<'a> {
    pub x: &'a [f64],
    pub p: KernelParams,
}

impl Entries for KernelEntries<'_> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.p.covariance(self.x[i] - self.x[j])
    }
}
