//! Fitted single-output GP channels: posterior mean, variance and
//! log marginal likelihood.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;

use super::factor::{factor_entries, Backend, Factorization};
use super::kernel::{KernelEntries, KernelParams};
use super::GpError;

/// Observed `(timestamp, value)` pairs with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    inputs: Vec<f64>,
    outputs: Vec<f64>,
}

impl TrainingSet {
    pub fn new(inputs: Vec<f64>, outputs: Vec<f64>) -> Result<Self, GpError> {
        validate_inputs(&inputs)?;
        if inputs.len() != outputs.len() {
            return Err(GpError::InvalidArgument(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        if outputs.iter().any(|y| !y.is_finite()) {
            return Err(GpError::InvalidArgument("non-finite output".into()));
        }
        Ok(Self { inputs, outputs })
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

pub(crate) fn validate_inputs(inputs: &[f64]) -> Result<(), GpError> {
    if inputs.is_empty() {
        return Err(GpError::InvalidArgument("empty training set".into()));
    }
    if inputs.iter().any(|x| !x.is_finite()) {
        return Err(GpError::InvalidArgument("non-finite input".into()));
    }
    if let Some(w) = inputs.windows(2).find(|w| w[1] <= w[0]) {
        return Err(GpError::InvalidArgument(format!(
            "inputs must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// A trained channel. Immutable once built; the factorization is shared
/// between channels that were fitted on the same inputs and parameters.
#[derive(Debug, Clone)]
pub struct FittedChannel {
    params: KernelParams,
    data: TrainingSet,
    factor: Arc<Factorization>,
    alpha: DVector<f64>,
}

impl FittedChannel {
    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn data(&self) -> &TrainingSet {
        &self.data
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factor
    }

    /// `(K + σ_n² I)⁻¹ y`.
    pub fn alpha_weights(&self) -> &DVector<f64> {
        &self.alpha
    }

    fn cross_cov(&self, x_star: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.data.len(),
            self.data.inputs.iter().map(|x| self.params.covariance(x_star - x)),
        )
    }

    pub fn posterior_mean(&self, x_star: f64) -> Result<f64, GpError> {
        check_query(x_star)?;
        Ok(self.cross_cov(x_star).dot(&self.alpha))
    }

    /// Posterior variance of the latent function, clamped to `[0, σ_f²]`.
    pub fn posterior_var(&self, x_star: f64) -> Result<f64, GpError> {
        check_query(x_star)?;
        let ks = self.cross_cov(x_star);
        Ok(self.var_from_cross(&ks))
    }

    /// Mean and variance with a single cross-covariance evaluation.
    pub fn posterior(&self, x_star: f64) -> Result<(f64, f64), GpError> {
        check_query(x_star)?;
        let ks = self.cross_cov(x_star);
        Ok((ks.dot(&self.alpha), self.var_from_cross(&ks)))
    }

    fn var_from_cross(&self, ks: &DVector<f64>) -> f64 {
        let v = self.factor.solve(ks);
        let var = self.params.signal_variance() - ks.dot(&v);
        var.clamp(0.0, self.params.signal_variance())
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        let y = DVector::from_column_slice(&self.data.outputs);
        log_likelihood_terms(y.dot(&self.alpha), self.factor.logdet(), self.data.len())
    }
}

fn check_query(x_star: f64) -> Result<(), GpError> {
    if x_star.is_finite() {
        Ok(())
    } else {
        Err(GpError::InvalidArgument(format!("non-finite query {x_star}")))
    }
}

pub(crate) fn log_likelihood_terms(y_alpha: f64, logdet: f64, m: usize) -> f64 {
    -0.5 * y_alpha - 0.5 * logdet - 0.5 * m as f64 * (2.0 * PI).ln()
}

/// Factors the Gram matrix of `data` and caches the α-weights.
pub fn fit(data: TrainingSet, p: KernelParams, backend: Backend) -> Result<FittedChannel, GpError> {
    p.validate()?;
    let factor = Arc::new(factor_for(data.inputs(), &p, backend)?);
    Ok(channel_with(data, p, factor))
}

/// Fits several output channels observed at the same inputs with one shared
/// factorization.
pub fn fit_shared(
    inputs: &[f64],
    outputs: &[&[f64]],
    p: KernelParams,
    backend: Backend,
) -> Result<Vec<FittedChannel>, GpError> {
    p.validate()?;
    let sets = outputs
        .iter()
        .map(|y| TrainingSet::new(inputs.to_vec(), y.to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    let factor = Arc::new(factor_for(inputs, &p, backend)?);
    Ok(sets
        .into_iter()
        .map(|s| channel_with(s, p, Arc::clone(&factor)))
        .collect())
}

pub(crate) fn factor_for(
    inputs: &[f64],
    p: &KernelParams,
    backend: Backend,
) -> Result<Factorization, GpError> {
    let src = KernelEntries { x: inputs, p: *p };
    factor_entries(&src, p.noise_variance(), backend)
}

fn channel_with(data: TrainingSet, params: KernelParams, factor: Arc<Factorization>) -> FittedChannel {
    let y = DVector::from_column_slice(data.outputs());
    let alpha = factor.solve(&y);
    FittedChannel {
        params,
        data,
        factor,
        alpha,
    }
}
