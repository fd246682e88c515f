//! Model families, seeded samplers and closed-form CDFs.
//!
//! Sampling is split into fixed-size chunks, each with its own derived seed,
//! so a batch is bit-identical for a given `(spec, n, seed)` whatever the
//! size of the rayon pool.

use crate::matrix::{cholesky, Table};
use crate::pseudo_obs::{to_pseudo_observations, PseudoSample, RawSample, TieRule};
use crate::rng::{derive_seed, rng_from_seed, ChaCha8Rng, CHUNK_ROWS};
use crate::special::{clamp_open_unit, normal_cdf, t_cdf};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::{ChiSquared, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Symmetric positive-definite matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CorrelationMatrix(DMatrix<f64>);

impl CorrelationMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let k = m.nrows();
        if k < 2 || m.ncols() != k {
            return Err(Error::invalid(
                "correlation",
                format!("expected a square matrix of size >= 2, got {}x{}", k, m.ncols()),
            ));
        }
        for i in 0..k {
            if m[(i, i)] != 1.0 {
                return Err(Error::invalid(
                    "correlation",
                    format!("diagonal entry {} is {}", i + 1, m[(i, i)]),
                ));
            }
            for j in 0..k {
                let v = m[(i, j)];
                if !v.is_finite() || v.abs() > 1.0 {
                    return Err(Error::invalid(
                        "correlation",
                        format!("entry ({}, {}) = {v}", i + 1, j + 1),
                    ));
                }
                if (v - m[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid("correlation", "matrix is not symmetric"));
                }
            }
        }
        cholesky(&m, "correlation matrix")?;
        Ok(CorrelationMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("correlation", "rows of unequal length"));
        }
        Self::new(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::new(DMatrix::identity(k, k))
    }

    pub fn equicorrelated(k: usize, r: f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { r }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    fn lower_factor(&self) -> DMatrix<f64> {
        cholesky(&self.0, "correlation matrix")
            .expect("validated at construction")
            .l()
    }
}

impl TryFrom<Vec<Vec<f64>>> for CorrelationMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<CorrelationMatrix> for Vec<Vec<f64>> {
    fn from(c: CorrelationMatrix) -> Self {
        (0..c.dim())
            .map(|i| (0..c.dim()).map(|j| c.get(i, j)).collect())
            .collect()
    }
}

/// The dependence models handled by the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CopulaSpec {
    Independence {
        dim: usize,
    },
    Comonotone {
        dim: usize,
    },
    Gaussian {
        rho: CorrelationMatrix,
    },
    Student {
        nu: f64,
        rho: CorrelationMatrix,
    },
    Gumbel {
        xi: f64,
        dim: usize,
    },
    /// A density model for raw-scale vectors rather than a copula; its
    /// samples are rank-transformed before indices are computed.
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covariances: Vec<Vec<Vec<f64>>>,
    },
}

/// Scale of simulated values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSpace {
    Uniform,
    Raw,
}

impl CopulaSpec {
    pub fn dim(&self) -> usize {
        match self {
            CopulaSpec::Independence { dim } | CopulaSpec::Comonotone { dim } | CopulaSpec::Gumbel { dim, .. } => *dim,
            CopulaSpec::Gaussian { rho } | CopulaSpec::Student { rho, .. } => rho.dim(),
            CopulaSpec::GaussianMixture { means, .. } => means.first().map_or(0, Vec::len),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            CopulaSpec::Independence { .. } => "independence",
            CopulaSpec::Comonotone { .. } => "comonotone",
            CopulaSpec::Gaussian { .. } => "gaussian",
            CopulaSpec::Student { .. } => "student",
            CopulaSpec::Gumbel { .. } => "gumbel",
            CopulaSpec::GaussianMixture { .. } => "gaussian_mixture",
        }
    }

    /// Families whose law is invariant under coordinate permutations.
    pub fn is_exchangeable(&self) -> bool {
        matches!(
            self,
            CopulaSpec::Independence { .. } | CopulaSpec::Comonotone { .. } | CopulaSpec::Gumbel { .. }
        )
    }

    pub fn space(&self) -> SampleSpace {
        match self {
            CopulaSpec::GaussianMixture { .. } => SampleSpace::Raw,
            _ => SampleSpace::Uniform,
        }
    }

    /// Checks every family invariant; deserialised specs must pass this.
    pub fn validate(&self) -> Result<()> {
        match self {
            CopulaSpec::Independence { dim } | CopulaSpec::Comonotone { dim } => check_dim(*dim),
            CopulaSpec::Gumbel { xi, dim } => {
                check_dim(*dim)?;
                if !(*xi >= 1.0) || !xi.is_finite() {
                    return Err(Error::invalid(
                        "xi",
                        format!("Gumbel parameter {xi} must be finite and >= 1"),
                    ));
                }
                Ok(())
            }
            CopulaSpec::Gaussian { .. } => Ok(()),
            CopulaSpec::Student { nu, .. } => {
                if !(*nu > 2.0) || !nu.is_finite() {
                    return Err(Error::invalid(
                        "nu",
                        format!("degrees of freedom {nu} must be finite and > 2"),
                    ));
                }
                Ok(())
            }
            CopulaSpec::GaussianMixture {
                weights,
                means,
                covariances,
            } => validate_mixture(weights, means, covariances),
        }
    }

    /// Exact copula CDF; only families with a closed form are supported.
    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(Error::invalid(
                "point",
                format!("{} coordinates for a {}-dimensional copula", u.len(), self.dim()),
            ));
        }
        if let Some(v) = u.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid("point", format!("coordinate {v} outside [0, 1]")));
        }
        match self {
            CopulaSpec::Independence { .. } => Ok(u.iter().product()),
            CopulaSpec::Comonotone { .. } => Ok(u.iter().copied().fold(1.0, f64::min)),
            CopulaSpec::Gumbel { xi, .. } => {
                if u.contains(&0.0) {
                    return Ok(0.0);
                }
                let s: f64 = u.iter().map(|&x| (-x.ln()).powf(*xi)).sum();
                Ok((-s.powf(1.0 / xi)).exp())
            }
            other => Err(Error::Unsupported {
                operation: "cdf",
                family: other.family(),
            }),
        }
    }

    /// Draws `n` iid rows. Deterministic in `(self, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SimBatch> {
        if n == 0 {
            return Err(Error::invalid("n", "sample size must be at least 1"));
        }
        self.validate()?;
        let sampler = RowSampler::new(self)?;
        let dim = self.dim();
        let chunks = n.div_ceil(CHUNK_ROWS);
        let parts: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let rows = CHUNK_ROWS.min(n - c * CHUNK_ROWS);
                let mut rng = rng_from_seed(derive_seed(seed, c as u64));
                let mut out = vec![0.0; rows * dim];
                for row in out.chunks_exact_mut(dim) {
                    sampler.fill(&mut rng, row);
                }
                out
            })
            .collect();
        let data = parts.concat();
        Ok(SimBatch {
            values: Table::from_row_major(n, dim, data)?,
            seed,
            spec: self.clone(),
            space: self.space(),
        })
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::invalid("dim", format!("dimension {dim} must be at least 2")));
    }
    Ok(())
}

fn validate_mixture(weights: &[f64], means: &[Vec<f64>], covariances: &[Vec<Vec<f64>>]) -> Result<()> {
    let k = weights.len();
    if k == 0 || means.len() != k || covariances.len() != k {
        return Err(Error::invalid(
            "mixture",
            "weights, means and covariances must have the same non-zero length",
        ));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("mixture", "weights must be non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("mixture", format!("weights sum to {total}, not 1")));
    }
    let dim = means[0].len();
    check_dim(dim)?;
    for (c, (m, s)) in means.iter().zip(covariances).enumerate() {
        if m.len() != dim || m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "mixture",
                format!("mean {} has wrong length or non-finite entries", c + 1),
            ));
        }
        if s.len() != dim || s.iter().any(|r| r.len() != dim || r.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid(
                "mixture",
                format!("covariance {} is not a finite {dim}x{dim} matrix", c + 1),
            ));
        }
        let mat = DMatrix::from_fn(dim, dim, |i, j| s[i][j]);
        if (&mat - mat.transpose()).amax() > 1e-9 * mat.amax().max(1.0) {
            return Err(Error::invalid(
                "mixture",
                format!("covariance {} is not symmetric", c + 1),
            ));
        }
        cholesky(&mat, &format!("mixture covariance {}", c + 1))?;
    }
    Ok(())
}

/// Precomputed per-family state for drawing single rows.
enum RowSampler {
    Independence,
    Comonotone,
    Gaussian {
        lower: DMatrix<f64>,
    },
    Student {
        nu: f64,
        lower: DMatrix<f64>,
        chi2: ChiSquared<f64>,
    },
    Gumbel {
        alpha: f64,
    },
    Mixture {
        cumulative: Vec<f64>,
        means: Vec<DVector<f64>>,
        lowers: Vec<DMatrix<f64>>,
    },
}

impl RowSampler {
    fn new(spec: &CopulaSpec) -> Result<Self> {
        Ok(match spec {
            CopulaSpec::Independence { .. } => RowSampler::Independence,
            CopulaSpec::Comonotone { .. } => RowSampler::Comonotone,
            CopulaSpec::Gaussian { rho } => RowSampler::Gaussian {
                lower: rho.lower_factor(),
            },
            CopulaSpec::Student { nu, rho } => RowSampler::Student {
                nu: *nu,
                lower: rho.lower_factor(),
                chi2: ChiSquared::new(*nu).map_err(|e| Error::invalid("nu", e.to_string()))?,
            },
            CopulaSpec::Gumbel { xi, .. } => RowSampler::Gumbel { alpha: 1.0 / xi },
            CopulaSpec::GaussianMixture {
                weights,
                means,
                covariances,
            } => {
                let mut acc = 0.0;
                let cumulative = weights
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
                let dim = means[0].len();
                let lowers = covariances
                    .iter()
                    .map(|s| cholesky(&DMatrix::from_fn(dim, dim, |i, j| s[i][j]), "mixture covariance").map(|c| c.l()))
                    .collect::<Result<Vec<_>>>()?;
                RowSampler::Mixture {
                    cumulative,
                    means: means.iter().map(|m| DVector::from_column_slice(m)).collect(),
                    lowers,
                }
            }
        })
    }

    fn correlated_normals(rng: &mut ChaCha8Rng, lower: &DMatrix<f64>, out: &mut [f64]) {
        let z: Vec<f64> = (0..out.len()).map(|_| rng.sample(StandardNormal)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..=i).map(|j| lower[(i, j)] * z[j]).sum();
        }
    }

    fn fill(&self, rng: &mut ChaCha8Rng, row: &mut [f64]) {
        match self {
            RowSampler::Independence => {
                for u in row.iter_mut() {
                    *u = Open01.sample(rng);
                }
            }
            RowSampler::Comonotone => {
                let u: f64 = Open01.sample(rng);
                row.fill(u);
            }
            RowSampler::Gaussian { lower } => {
                Self::correlated_normals(rng, lower, row);
                for x in row.iter_mut() {
                    *x = clamp_open_unit(normal_cdf(*x));
                }
            }
            RowSampler::Student { nu, lower, chi2 } => {
                let w: f64 = chi2.sample(rng);
                let scale = (nu / w).sqrt();
                Self::correlated_normals(rng, lower, row);
                for x in row.iter_mut() {
                    *x = clamp_open_unit(t_cdf(*x * scale, *nu));
                }
            }
            RowSampler::Gumbel { alpha } => {
                // Marshall-Olkin frailty: V positive stable with Laplace
                // transform exp(-s^alpha) (Kanter's representation), then
                // U_j = exp(-(E_j / V)^alpha).
                let log_v = if *alpha >= 1.0 {
                    0.0
                } else {
                    let w: f64 = PI * Distribution::<f64>::sample(&Open01, rng);
                    let e: f64 = Exp1.sample(rng);
                    (alpha * w).sin().ln() - (w.sin().ln()) / alpha
                        + (1.0 - alpha) / alpha * (((1.0 - alpha) * w).sin().ln() - e.ln())
                };
                for u in row.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *u = clamp_open_unit((-(alpha * (e.ln() - log_v)).exp()).exp());
                }
            }
            RowSampler::Mixture {
                cumulative,
                means,
                lowers,
            } => {
                let pick: f64 = rng.random();
                let k = cumulative
                    .iter()
                    .position(|&c| pick < c)
                    .unwrap_or(cumulative.len() - 1);
                Self::correlated_normals(rng, &lowers[k], row);
                for (x, m) in row.iter_mut().zip(means[k].iter()) {
                    *x += m;
                }
            }
        }
    }
}

/// Simulated rows together with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SimBatch {
    pub values: Table,
    pub seed: u64,
    pub spec: CopulaSpec,
    pub space: SampleSpace,
}

impl SimBatch {
    /// Copula-scale view: uniform batches are wrapped as-is (or re-ranked if
    /// `rerank`), raw batches are always rank-transformed.
    pub fn to_pseudo_sample(&self, rerank: bool) -> Result<PseudoSample> {
        match (self.space, rerank) {
            (SampleSpace::Uniform, false) => PseudoSample::new(self.values.clone()),
            _ => to_pseudo_observations(&RawSample::unnamed(self.values.clone())?, TieRule::Average),
        }
    }
}

/// Parameter sets whose extremal coefficient equals 2 in three dimensions.
pub mod presets {
    use super::*;

    /// Gumbel dependence `ξ = log 3 / log 2`, so that `3^(1/ξ) = 2`.
    pub fn gumbel_theta_two() -> CopulaSpec {
        CopulaSpec::Gumbel {
            xi: 3f64.ln() / 2f64.ln(),
            dim: 3,
        }
    }

    pub const STUDENT_THETA_TWO_NU: f64 = 2.76733;

    pub fn student_theta_two_rho() -> CorrelationMatrix {
        CorrelationMatrix::from_rows(&[
            vec![1.0, 0.767, 0.759],
            vec![0.767, 1.0, 0.624],
            vec![0.759, 0.624, 1.0],
        ])
        .expect("valid constant matrix")
    }

    pub fn student_theta_two() -> CopulaSpec {
        CopulaSpec::Student {
            nu: STUDENT_THETA_TWO_NU,
            rho: student_theta_two_rho(),
        }
    }
}
