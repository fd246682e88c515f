//! Extremal coefficients and the Tsallis sandwich bounds.

use crate::copula::{CopulaSpec, CorrelationMatrix};
use crate::entropy_index::{
    cell_distribution_exact, index_curve, index_tsallis, tsallis_normalizer, IndexKind, IndexSource, Threshold,
    ThresholdGrid,
};
use crate::pseudo_obs::PseudoSample;
use crate::special::bivariate_t_cdf;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSource {
    ClosedFormGumbel,
    ClosedFormStudent,
    ExactDiagonal,
    EmpiricalDiagonal,
}

/// Scaling of `1 - ρ_ij` in the Student formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudentArgument {
    /// `sqrt((ν+1)(1-ρ))`.
    Printed,
    /// `sqrt((ν+1)(1-ρ)/(1+ρ))`.
    #[default]
    EllipticalExtremes,
}

/// Correlation of the bivariate t attached to component `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudentDispersion {
    /// `ρ` with row and column `j` removed.
    #[default]
    Submatrix,
    /// Partial correlation of the other two components given `j`.
    PartialCorrelation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalCoefficient {
    pub theta: f64,
    pub dim: usize,
    pub source: ThetaSource,
    /// Delta-method standard error, empirical estimates only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub student_convention: Option<(StudentArgument, StudentDispersion)>,
}

impl ExtremalCoefficient {
    fn closed(theta: f64, dim: usize, source: ThetaSource) -> Self {
        ExtremalCoefficient {
            theta,
            dim,
            source,
            std_error: None,
            student_convention: None,
        }
    }
}

/// `θ = J^{1/ξ}`.
pub fn theta_gumbel(xi: f64, dim: usize) -> Result<ExtremalCoefficient> {
    CopulaSpec::Gumbel { xi, dim }.validate()?;
    Ok(ExtremalCoefficient::closed(
        (dim as f64).powf(1.0 / xi),
        dim,
        ThetaSource::ClosedFormGumbel,
    ))
}

/// Trivariate Student copula:
/// `θ = Σ_j T_{2,ν+1,R_j}(x_ij, x_kj)` with `x_ij` set by `argument` and
/// `R_j` by `dispersion`.
pub fn theta_student(
    nu: f64,
    rho: &CorrelationMatrix,
    argument: StudentArgument,
    dispersion: StudentDispersion,
) -> Result<ExtremalCoefficient> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::invalid(
            "nu",
            format!("degrees of freedom {nu} must be positive and finite"),
        ));
    }
    if rho.dim() != 3 {
        return Err(Error::invalid(
            "rho",
            format!("closed form is for 3 components, got {}", rho.dim()),
        ));
    }
    let arg = |r: f64| match argument {
        StudentArgument::Printed => ((nu + 1.0) * (1.0 - r)).sqrt(),
        StudentArgument::EllipticalExtremes => ((nu + 1.0) * (1.0 - r) / (1.0 + r)).sqrt(),
    };
    let mut theta = 0.0;
    for j in 0..3 {
        let (i, k) = match j {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (rij, rkj, rik) = (rho.get(i, j), rho.get(k, j), rho.get(i, k));
        let r = match dispersion {
            StudentDispersion::Submatrix => rik,
            StudentDispersion::PartialCorrelation => (rik - rij * rkj) / ((1.0 - rij * rij) * (1.0 - rkj * rkj)).sqrt(),
        };
        if !(r.abs() < 1.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "dispersion for component {} has correlation {r}",
                j + 1
            )));
        }
        theta += bivariate_t_cdf(arg(rij), arg(rkj), r, nu + 1.0);
    }
    if !theta.is_finite() {
        return Err(Error::Numerical("Student extremal coefficient is not finite".into()));
    }
    Ok(ExtremalCoefficient {
        theta: theta.clamp(1.0, 3.0),
        dim: 3,
        source: ThetaSource::ClosedFormStudent,
        std_error: None,
        student_convention: Some((argument, dispersion)),
    })
}

/// Where the diagonal `C(b, …, b)` comes from.
#[derive(Debug, Clone, Copy)]
pub enum DiagonalSource<'a> {
    Sample(&'a PseudoSample),
    Exact(&'a CopulaSpec),
}

/// `θ̂(b) = ln C(b, …, b) / ln b`, clamped to `[1, J]`.
///
/// For a sample the standard error is `sqrt(p(1-p)/n) / (p |ln b|)` with
/// `p` the fraction of rows at or below `b` in every component.
pub fn theta_empirical(source: DiagonalSource<'_>, b: Threshold) -> Result<ExtremalCoefficient> {
    let lb = b.value().ln();
    let (p, dim, std_error, src) = match source {
        DiagonalSource::Sample(sample) => {
            let below = sample
                .values()
                .row_iter()
                .filter(|r| r.iter().all(|&u| u <= b.value()))
                .count();
            let n = sample.n() as f64;
            let p = below as f64 / n;
            let se = (p * (1.0 - p) / n).sqrt() / (p * lb.abs());
            (p, sample.dim(), Some(se), ThetaSource::EmpiricalDiagonal)
        }
        DiagonalSource::Exact(copula) => {
            let p = copula.cdf(&vec![b.value(); copula.dim()])?;
            (p, copula.dim(), None, ThetaSource::ExactDiagonal)
        }
    };
    if !(p > 0.0) {
        return Err(Error::Numerical(format!(
            "no mass on the diagonal at b = {}; lower b or increase n",
            b.value()
        )));
    }
    let theta = if p >= 1.0 { 1.0 } else { p.ln() / lb };
    Ok(ExtremalCoefficient {
        theta: theta.clamp(1.0, dim as f64),
        dim,
        source: src,
        std_error,
        student_convention: None,
    })
}

/// θ for families whose diagonal is exactly `b^θ`.
pub fn theta_exact(copula: &CopulaSpec) -> Result<f64> {
    copula.validate()?;
    match copula {
        CopulaSpec::Independence { dim } => Ok(*dim as f64),
        CopulaSpec::Comonotone { .. } => Ok(1.0),
        CopulaSpec::Gumbel { xi, dim } => Ok(theta_gumbel(*xi, *dim)?.theta),
        other => Err(Error::Unsupported {
            operation: "sandwich bounds",
            family: other.family(),
        }),
    }
}

/// `g1`, `g2` and exact `T_b^α` along a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsCurve {
    pub grid: ThresholdGrid,
    pub alpha: f64,
    pub theta: f64,
    pub dim: usize,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub t: Vec<f64>,
    /// Largest `b` at which the denominator `(1-b^α) - (1-b)^α` is not
    /// positive, 0 when it is positive on all of `(0, 1)`.
    pub b0: f64,
}

/// Scans `(0, 1)` for the last point where the Tsallis normaliser is not positive.
pub fn crossover_b0(alpha: f64) -> f64 {
    const STEPS: usize = 100_000;
    (1..STEPS)
        .map(|i| i as f64 / STEPS as f64)
        .filter(|&b| !(tsallis_normalizer(b, alpha) > 0.0))
        .fold(0.0, f64::max)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("{alpha} must be finite and > 1")));
    }
    Ok(())
}

pub fn g_bounds(b: f64, alpha: f64, theta: f64, dim: usize) -> (f64, f64) {
    let den = tsallis_normalizer(b, alpha);
    let diag = (theta * alpha * b.ln()).exp();
    let tail = ((1u64 << dim) - 1) as f64 * (alpha * (-b).ln_1p()).exp();
    ((-(diag + tail - 1.0)) / den, -(theta * alpha * b.ln()).exp_m1() / den)
}

pub fn sandwich_bounds(copula: &CopulaSpec, grid: &ThresholdGrid, alpha: f64) -> Result<BoundsCurve> {
    check_alpha(alpha)?;
    let theta = theta_exact(copula)?;
    let dim = copula.dim();
    let rows = grid
        .thresholds()
        .par_iter()
        .map(|&b| {
            let t = index_tsallis(&cell_distribution_exact(copula, b, dim)?, b, alpha)?;
            let (g1, g2) = g_bounds(b.value(), alpha, theta, dim);
            Ok((g1, g2, t))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsCurve {
        grid: grid.clone(),
        alpha,
        theta,
        dim,
        g1: rows.iter().map(|r| r.0).collect(),
        g2: rows.iter().map(|r| r.1).collect(),
        t: rows.iter().map(|r| r.2).collect(),
        b0: crossover_b0(alpha),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub b: f64,
    pub alpha: f64,
    /// Exact Shannon index at `b`.
    pub s: f64,
    pub t: f64,
    pub g1: f64,
    pub g2: f64,
    pub theta: f64,
}

/// Sandwich bounds for several `α`, flattened α-major.
pub fn convergence_report(copula: &CopulaSpec, alphas: &[f64], grid: &ThresholdGrid) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::with_capacity(alphas.len() * grid.len());
    let components: Vec<usize> = (1..=copula.dim()).collect();
    let shannon = index_curve(IndexSource::Exact(copula), grid, &components, IndexKind::Shannon)?;
    for &alpha in alphas {
        let c = sandwich_bounds(copula, grid, alpha)?;
        for (i, b) in grid.values().into_iter().enumerate() {
            rows.push(ReportRow {
                b,
                alpha,
                s: shannon.values[i],
                t: c.t[i],
                g1: c.g1[i],
                g2: c.g2[i],
                theta: c.theta,
            });
        }
    }
    Ok(rows)
}
