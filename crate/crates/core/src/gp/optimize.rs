//! Hyperparameter fitting by maximizing the log marginal likelihood.
//!
//! Amplitude and length scale are optimized in log space inside a box; the
//! noise level stays fixed. Several output channels observed at the same
//! inputs can share one parameter set, in which case their likelihoods are
//! summed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::channel::{factor_for, log_likelihood_terms, validate_inputs, TrainingSet};
use super::factor::Backend;
use super::kernel::{KernelParams, SQRT_3};
use super::lbfgsb::{minimize, LbfgsbSettings, Termination};
use super::GpError;

/// Central-difference step in log-parameter space.
pub const FD_STEP: f64 = 1e-5;

/// Closed box for each optimized hyperparameter (natural units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub sigma_f: (f64, f64),
    pub length_scale: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            sigma_f: (1e-3, 1e3),
            length_scale: (1e-3, 1e3),
        }
    }
}

impl Bounds {
    fn validate(&self) -> Result<(), GpError> {
        for (lo, hi) in [self.sigma_f, self.length_scale] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(GpError::InvalidArgument(format!("invalid bounds {self:?}")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &KernelParams) -> bool {
        (self.sigma_f.0..=self.sigma_f.1).contains(&p.sigma_f)
            && (self.length_scale.0..=self.length_scale.1).contains(&p.length_scale)
    }

    fn log_box(&self) -> ([f64; 2], [f64; 2]) {
        (
            [self.sigma_f.0.ln(), self.length_scale.0.ln()],
            [self.sigma_f.1.ln(), self.length_scale.1.ln()],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradientMode {
    Analytic,
    CentralDifference,
    /// Analytic for the dense backend, central differences for the
    /// hierarchical one (which never forms the inverse).
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub lbfgsb: LbfgsbSettings,
    pub gradient: GradientMode,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            lbfgsb: LbfgsbSettings::default(),
            gradient: GradientMode::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub params: KernelParams,
    /// Summed log marginal likelihood at `params`.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Set when the optimizer stopped without meeting a convergence test;
    /// `params` is then the best point found.
    pub warning: Option<String>,
    /// Log-likelihood after every accepted iterate, starting at the initial point.
    pub trace: Vec<f64>,
}

/// Summed log marginal likelihood of several channels sharing inputs and
/// hyperparameters, and its gradient with respect to `(ln σ_f, ln l)`.
#[derive(Debug, Clone)]
pub struct JointObjective<'a> {
    inputs: &'a [f64],
    outputs: Vec<DVector<f64>>,
    sigma_n: f64,
    backend: Backend,
}

impl<'a> JointObjective<'a> {
    pub fn new(
        inputs: &'a [f64],
        outputs: &[&[f64]],
        sigma_n: f64,
        backend: Backend,
    ) -> Result<Self, GpError> {
        validate_inputs(inputs)?;
        if outputs.is_empty() {
            return Err(GpError::InvalidArgument("no output channels".into()));
        }
        if let Some(y) = outputs.iter().find(|y| y.len() != inputs.len()) {
            return Err(GpError::InvalidArgument(format!(
                "channel length {} does not match {} inputs",
                y.len(),
                inputs.len()
            )));
        }
        if outputs.iter().flat_map(|y| y.iter()).any(|v| !v.is_finite()) {
            return Err(GpError::InvalidArgument("non-finite output".into()));
        }
        Ok(Self {
            inputs,
            outputs: outputs.iter().map(|y| DVector::from_column_slice(y)).collect(),
            sigma_n,
            backend,
        })
    }

    pub fn log_likelihood(&self, p: &KernelParams) -> Result<f64, GpError> {
        let f = factor_for(self.inputs, p, self.backend)?;
        let m = self.inputs.len();
        Ok(self
            .outputs
            .iter()
            .map(|y| log_likelihood_terms(y.dot(&f.solve(y)), f.logdet(), m))
            .sum())
    }

    /// Value and gradient with respect to `(ln σ_f, ln l)` at `p`.
    pub fn value_and_gradient(
        &self,
        p: &KernelParams,
        mode: GradientMode,
    ) -> Result<(f64, [f64; 2]), GpError> {
        let analytic = match mode {
            GradientMode::Analytic => true,
            GradientMode::CentralDifference => false,
            GradientMode::Auto => matches!(self.backend, Backend::Dense),
        };
        if analytic {
            self.analytic(p)
        } else {
            let value = self.log_likelihood(p)?;
            let base = p.to_log();
            let mut grad = [0.0; 2];
            for (k, g) in grad.iter_mut().enumerate() {
                let mut hi = base;
                let mut lo = base;
                hi[k] += FD_STEP;
                lo[k] -= FD_STEP;
                let f_hi = self.log_likelihood(&KernelParams::from_log(hi[0], hi[1], self.sigma_n))?;
                let f_lo = self.log_likelihood(&KernelParams::from_log(lo[0], lo[1], self.sigma_n))?;
                *g = (f_hi - f_lo) / (2.0 * FD_STEP);
            }
            Ok((value, grad))
        }
    }

    /// `∂LL/∂θ = ½ tr((Σ_c α_c α_cᵀ − C K⁻¹) ∂K/∂θ)` using the explicit inverse.
    fn analytic(&self, p: &KernelParams) -> Result<(f64, [f64; 2]), GpError> {
        let f = factor_for(self.inputs, p, self.backend)?;
        let m = self.inputs.len();
        let channels = self.outputs.len() as f64;
        let k_inv = f.inverse();
        let mut weight = k_inv * -channels;
        let mut value = 0.0;
        for y in &self.outputs {
            let alpha = f.solve(y);
            value += log_likelihood_terms(y.dot(&alpha), f.logdet(), m);
            weight.ger(1.0, &alpha, &alpha, 1.0);
        }
        let mut grad = [0.0; 2];
        let sf2 = p.signal_variance();
        for j in 0..m {
            for i in 0..m {
                let r = SQRT_3 * (self.inputs[i] - self.inputs[j]).abs() / p.length_scale;
                let e = (-r).exp();
                // ∂k/∂ln σ_f = 2k, ∂k/∂ln l = σ_f² r² e^{-r}
                let w = weight[(i, j)];
                grad[0] += w * 2.0 * sf2 * (1.0 + r) * e;
                grad[1] += w * sf2 * r * r * e;
            }
        }
        Ok((value, [0.5 * grad[0], 0.5 * grad[1]]))
    }
}

/// Optimizes `{σ_f, l}` of a single channel.
pub fn optimize_hyperparams(
    data: &TrainingSet,
    init: KernelParams,
    bounds: Bounds,
    backend: Backend,
) -> Result<OptimizeOutcome, GpError> {
    optimize_joint(
        data.inputs(),
        &[data.outputs()],
        init,
        bounds,
        backend,
        &OptimizerSettings::default(),
    )
}

/// Optimizes one shared `{σ_f, l}` for all `outputs`, maximizing the summed
/// log marginal likelihood.
pub fn optimize_joint(
    inputs: &[f64],
    outputs: &[&[f64]],
    init: KernelParams,
    bounds: Bounds,
    backend: Backend,
    settings: &OptimizerSettings,
) -> Result<OptimizeOutcome, GpError> {
    init.validate()?;
    bounds.validate()?;
    if !bounds.contains(&init) {
        return Err(GpError::InvalidArgument(format!(
            "initial parameters {init:?} outside bounds {bounds:?}"
        )));
    }
    let objective = JointObjective::new(inputs, outputs, init.sigma_n, backend)?;
    // Surface a failure at the starting point instead of hiding it.
    objective.log_likelihood(&init)?;

    let sigma_n = init.sigma_n;
    let (lower, upper) = bounds.log_box();
    let min = minimize(
        |theta| {
            let p = KernelParams::from_log(theta[0], theta[1], sigma_n);
            objective
                .value_and_gradient(&p, settings.gradient)
                .ok()
                .map(|(v, g)| (-v, vec![-g[0], -g[1]]))
        },
        &init.to_log(),
        &lower,
        &upper,
        &settings.lbfgsb,
    )
    .ok_or(GpError::NumericalFailure { jitter: f64::NAN })?;

    let mut params = KernelParams::from_log(min.x[0], min.x[1], sigma_n);
    // exp(ln x) can land an ulp outside the box.
    params.sigma_f = params.sigma_f.clamp(bounds.sigma_f.0, bounds.sigma_f.1);
    params.length_scale = params.length_scale.clamp(bounds.length_scale.0, bounds.length_scale.1);
    let warning = match min.termination {
        Termination::MaxIterations => Some(format!(
            "hyperparameter search hit the iteration cap ({})",
            min.iterations
        )),
        Termination::LineSearchFailed => Some("line search made no progress".to_string()),
        _ => None,
    };
    if let Some(w) = &warning {
        log::debug!("{w}");
    }
    Ok(OptimizeOutcome {
        params,
        log_likelihood: -min.f,
        iterations: min.iterations,
        evaluations: min.evaluations,
        converged: warning.is_none(),
        warning,
        trace: min.trace.iter().map(|f| -f).collect(),
    })
}

/// Brute-force companion used by diagnostics: log-likelihood over a
/// log-spaced grid of `(σ_f, l)`, row-major in `σ_f`.
pub fn likelihood_grid(
    data: &TrainingSet,
    sigma_n: f64,
    sigma_f: (f64, f64),
    length_scale: (f64, f64),
    n: usize,
    backend: Backend,
) -> Result<DMatrix<f64>, GpError> {
    let objective = JointObjective::new(data.inputs(), &[data.outputs()], sigma_n, backend)?;
    let axis = |(lo, hi): (f64, f64), i: usize| {
        let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
        (lo.ln() + t * (hi.ln() - lo.ln())).exp()
    };
    let mut grid = DMatrix::from_element(n, n, f64::NEG_INFINITY);
    for i in 0..n {
        for j in 0..n {
            let p = KernelParams::new(axis(sigma_f, i), axis(length_scale, j), sigma_n)?;
            if let Ok(v) = objective.log_likelihood(&p) {
                grid[(i, j)] = v;
            }
        }
    }
    Ok(grid)
}
