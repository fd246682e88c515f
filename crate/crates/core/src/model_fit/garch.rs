//! GARCH(1,1) with constant mean, fitted by Gaussian quasi-maximum likelihood.
//!
//! ```text
//! r_t = μ + a_t,   a_t = σ_t ε_t,   σ_t² = α0 + α1 a_{t-1}² + β1 σ_{t-1}²
//! ```
//!
//! The recursion starts from the sample variance of `a_t`. Optimisation runs
//! Nelder-Mead over `(μ, log α0, logit(α1 + β1), logit(α1 / (α1 + β1)))`,
//! which keeps every candidate covariance-stationary.

use crate::optim::nelder_mead;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const MIN_SERIES_LEN: usize = 50;
const MAX_ITER: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub mu: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

impl GarchParams {
    pub fn persistence(&self) -> f64 {
        self.alpha1 + self.beta1
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.persistence())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub params: GarchParams,
    pub mean_included: bool,
    pub variances: Vec<f64>,
    pub shocks: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub loglik: f64,
}

/// Percentage log-returns `100 (log p_t - log p_{t-1})`.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::invalid("prices", "need at least two prices"));
    }
    if let Some(i) = prices.iter().position(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::invalid(
            "prices",
            format!("price {} at row {} is not positive and finite", prices[i], i + 1),
        ));
    }
    Ok(prices.windows(2).map(|w| 100.0 * (w[1].ln() - w[0].ln())).collect())
}

/// Conditional variances for residuals `a`, starting at their sample variance.
pub fn conditional_variances(params: &GarchParams, residuals: &[f64]) -> Vec<f64> {
    let n = residuals.len();
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let start = residuals.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut var = start;
    out.push(var);
    for a in &residuals[..n - 1] {
        var = params.alpha0 + params.alpha1 * a * a + params.beta1 * var;
        out.push(var);
    }
    out
}

/// Gaussian quasi-log-likelihood of `returns` under `params`.
pub fn quasi_loglik(params: &GarchParams, returns: &[f64]) -> f64 {
    let residuals: Vec<f64> = returns.iter().map(|r| r - params.mu).collect();
    let variances = conditional_variances(params, &residuals);
    -0.5 * residuals
        .iter()
        .zip(&variances)
        .map(|(a, v)| (2.0 * PI).ln() + v.ln() + a * a / v)
        .sum::<f64>()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn decode(x: &[f64], mean_included: bool) -> GarchParams {
    let persistence = logistic(x[2]);
    let share = logistic(x[3]);
    GarchParams {
        mu: if mean_included { x[0] } else { 0.0 },
        alpha0: x[1].exp(),
        alpha1: persistence * share,
        beta1: persistence * (1.0 - share),
    }
}

/// Fits GARCH(1,1) to a return series and extracts standardized shocks.
///
/// Non-convergence is reported through [`GarchFit::converged`], not as an
/// error. With `mean_included == false`, `μ` is fixed at zero.
pub fn fit_garch11(returns: &[f64], mean_included: bool) -> Result<GarchFit> {
    if returns.len() < MIN_SERIES_LEN {
        return Err(Error::invalid(
            "returns",
            format!("need at least {MIN_SERIES_LEN} observations, got {}", returns.len()),
        ));
    }
    if let Some(i) = returns.iter().position(|r| !r.is_finite()) {
        return Err(Error::invalid("returns", format!("non-finite value at row {}", i + 1)));
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::invalid("returns", "series has zero variance"));
    }
    let objective = |x: &[f64]| {
        let p = decode(x, mean_included);
        if !(p.persistence() < 1.0) || !(p.alpha0 > 0.0) {
            return f64::INFINITY;
        }
        -quasi_loglik(&p, returns)
    };
    let start = [
        if mean_included { mean } else { 0.0 },
        (0.1 * var).ln(),
        logit(0.9),
        logit(0.1),
    ];
    let step = [0.1 * var.sqrt(), 0.5, 1.0, 1.0];
    let mut best = nelder_mead(objective, &start, &step, 1e-12, 1e-7, MAX_ITER);
    let mut iterations = best.iterations;
    // Restarting from the optimum guards against a collapsed simplex.
    for _ in 0..2 {
        let again = nelder_mead(
            objective,
            &best.x,
            &[0.05 * var.sqrt(), 0.2, 0.3, 0.3],
            1e-12,
            1e-7,
            MAX_ITER,
        );
        iterations += again.iterations;
        let improved = again.value < best.value - 1e-9 * best.value.abs();
        if again.value <= best.value {
            best = again;
        }
        if !improved {
            break;
        }
    }
    if !best.value.is_finite() {
        return Err(Error::Numerical(
            "GARCH quasi-likelihood is not finite at any candidate".into(),
        ));
    }
    let params = decode(&best.x, mean_included);
    let residuals: Vec<f64> = returns.iter().map(|r| r - params.mu).collect();
    let variances = conditional_variances(&params, &residuals);
    let shocks = residuals.iter().zip(&variances).map(|(a, v)| a / v.sqrt()).collect();
    Ok(GarchFit {
        params,
        mean_included,
        variances,
        shocks,
        converged: best.converged,
        iterations,
        loglik: -best.value,
    })
}

/// Generates returns from GARCH(1,1) driven by the given unit-variance
/// shocks, starting at the unconditional variance.
pub fn simulate_garch11(params: &GarchParams, shocks: &[f64]) -> Vec<f64> {
    let mut var = params.unconditional_variance();
    let mut out = Vec::with_capacity(shocks.len());
    for &e in shocks {
        let a = var.sqrt() * e;
        out.push(params.mu + a);
        var = params.alpha0 + params.alpha1 * a * a + params.beta1 * var;
    }
    out
}
