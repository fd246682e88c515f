//! Estimators for the marginal filter and the dependence models.
//!
//! * [`garch`]: GARCH(1,1) quasi-maximum likelihood per return series.
//! * [`elliptical`]: Gaussian and Student copulas via Kendall's τ inversion,
//!   with the Student degrees of freedom from the pseudo-likelihood.
//! * [`mixture`]: multivariate normal mixtures fitted by EM on raw shocks.

pub mod elliptical;
pub mod garch;
pub mod mixture;

pub use elliptical::{fit_gaussian_copula, fit_student_copula, kendall_tau, StudentFitOptions};
pub use garch::{fit_garch11, log_returns, GarchFit, GarchParams};
pub use mixture::{fit_gaussian_mixture, fit_gaussian_mixture_runs, EmRun, MixtureOptions};

use crate::copula::CopulaSpec;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Estimator used, with every option needed to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum FitMethod {
    /// Correlations `sin(π τ / 2)` from pairwise Kendall τ, eigenvalues
    /// clipped at `eigen_floor` when the result is not positive definite.
    TauInversion { eigen_floor: f64 },
    /// τ-inversion for the correlation, golden-section maximisation of the
    /// pseudo-log-likelihood over `log ν` for the degrees of freedom.
    PseudoLikelihood {
        eigen_floor: f64,
        nu_lower: f64,
        nu_upper: f64,
        log_nu_tol: f64,
    },
    /// Multi-start expectation-maximisation.
    Em {
        components: usize,
        starts: usize,
        seed: u64,
        max_iter: usize,
        rel_tol: f64,
        variance_floor: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    /// Final objective: pseudo-log-likelihood or log-likelihood; 0 for
    /// τ-inversion, which optimises nothing.
    pub objective: f64,
    /// Set when the estimate needs attention (bound hit, projection applied).
    pub flags: Vec<String>,
}

/// A fitted dependence model ready for simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCopula {
    pub spec: CopulaSpec,
    pub method: FitMethod,
    pub diagnostics: FitDiagnostics,
}

impl FittedCopula {
    /// Wraps a spec that was not estimated (fixed reference models).
    pub fn fixed(spec: CopulaSpec) -> Self {
        FittedCopula {
            spec,
            method: FitMethod::TauInversion { eigen_floor: 0.0 },
            diagnostics: FitDiagnostics {
                iterations: 0,
                objective: 0.0,
                flags: vec!["not estimated".into()],
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !self.diagnostics.objective.is_finite() {
            return Err(Error::invalid("diagnostics", "objective is not finite"));
        }
        Ok(())
    }
}
