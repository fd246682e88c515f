//! Gaussian and Student copulas from pseudo-observations.

use super::{FitDiagnostics, FitMethod, FittedCopula};
use crate::copula::{CopulaSpec, CorrelationMatrix};
use crate::matrix::{cholesky, clip_to_correlation, min_eigenvalue};
use crate::optim::golden_section;
use crate::pseudo_obs::PseudoSample;
use crate::special::{ln_gamma, t_ln_pdf, t_quantile};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::f64::consts::PI;

pub const EIGEN_FLOOR: f64 = 1e-8;
const ROWS_PER_TASK: usize = 4096;

/// Kendall's τ-b in `O(n log n)` (Knight's algorithm).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::invalid("kendall_tau", "need two series of equal length >= 2"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |t: u64| t * t.saturating_sub(1) / 2;
    let total = pairs(n as u64);
    let (mut tied_x, mut tied_xy) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                tied_xy += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            tied_x += pairs(run_x);
            tied_xy += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tied_x += pairs(run_x);
    tied_xy += pairs(run_xy);

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let swaps = merge_count(&mut ys);

    let mut tied_y = 0u64;
    let mut run_y = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            tied_y += pairs(run_y);
            run_y = 1;
        }
    }
    tied_y += pairs(run_y);

    let numerator = total as f64 - tied_x as f64 - tied_y as f64 + tied_xy as f64 - 2.0 * swaps as f64;
    let denom = ((total - tied_x) as f64 * (total - tied_y) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::invalid("kendall_tau", "a series is constant"));
    }
    Ok(numerator / denom)
}

/// Sorts in place and returns the number of strictly inverted pairs.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            merged.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

/// Pairwise `sin(π τ / 2)` before any projection.
pub fn tau_inversion_matrix(sample: &PseudoSample) -> Result<DMatrix<f64>> {
    let k = sample.dim();
    if k < 2 {
        return Err(Error::invalid("sample", "need at least 2 columns"));
    }
    let cols: Vec<Vec<f64>> = (0..k).map(|j| sample.values().column(j)).collect();
    let mut m = DMatrix::identity(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let tau = kendall_tau(&cols[i], &cols[j])?;
            let r = (PI * tau / 2.0).sin();
            m[(i, j)] = r;
            m[(j, i)] = r;
        }
    }
    Ok(m)
}

fn project(raw: DMatrix<f64>, flags: &mut Vec<String>) -> Result<CorrelationMatrix> {
    let mut m = raw;
    if min_eigenvalue(&m) < EIGEN_FLOOR || cholesky(&m, "correlation").is_err() {
        m = clip_to_correlation(&m, EIGEN_FLOOR);
        flags.push(format!(
            "correlation projected to positive definite (eigenvalue floor {EIGEN_FLOOR:e})"
        ));
    }
    CorrelationMatrix::new(m)
}

/// Gaussian copula by Kendall τ inversion.
pub fn fit_gaussian_copula(sample: &PseudoSample) -> Result<FittedCopula> {
    let mut flags = Vec::new();
    let rho = project(tau_inversion_matrix(sample)?, &mut flags)?;
    Ok(FittedCopula {
        spec: CopulaSpec::Gaussian { rho },
        method: FitMethod::TauInversion {
            eigen_floor: EIGEN_FLOOR,
        },
        diagnostics: FitDiagnostics {
            iterations: 0,
            objective: 0.0,
            flags,
        },
    })
}

/// Student-copula pseudo-log-likelihood: the multivariate t log-density at
/// the t-quantiles of `u`, minus the univariate t log-densities.
pub fn student_pseudo_loglik(sample: &PseudoSample, nu: f64, rho: &CorrelationMatrix) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::invalid("nu", format!("{nu} must be positive")));
    }
    let d = sample.dim();
    if rho.dim() != d {
        return Err(Error::invalid("rho", "dimension does not match the sample"));
    }
    let chol = cholesky(rho.matrix(), "correlation")?;
    let lower = chol.l();
    let log_det: f64 = 2.0 * (0..d).map(|i| lower[(i, i)].ln()).sum::<f64>();
    let df = d as f64;
    let constant = ln_gamma(0.5 * (nu + df)) - ln_gamma(0.5 * nu) - 0.5 * df * (nu * PI).ln() - 0.5 * log_det;
    let data = sample.values().as_slice();
    let partial: Vec<f64> = data
        .par_chunks(ROWS_PER_TASK * d)
        .map(|chunk| {
            let mut acc = 0.0;
            for row in chunk.chunks_exact(d) {
                let x = DVector::from_iterator(d, row.iter().map(|&u| t_quantile(u, nu)));
                let z = lower.solve_lower_triangular(&x).expect("non-singular factor");
                let q = z.norm_squared();
                let joint = constant - 0.5 * (nu + df) * (q / nu).ln_1p();
                let margins: f64 = x.iter().map(|&xi| t_ln_pdf(xi, nu)).sum();
                acc += joint - margins;
            }
            acc
        })
        .collect();
    Ok(partial.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentFitOptions {
    pub nu_lower: f64,
    pub nu_upper: f64,
    pub log_nu_tol: f64,
}

impl Default for StudentFitOptions {
    fn default() -> Self {
        StudentFitOptions {
            nu_lower: 2.01,
            nu_upper: 100.0,
            log_nu_tol: 1e-4,
        }
    }
}

/// Student copula: correlation by τ inversion, degrees of freedom by
/// golden-section search of the pseudo-likelihood over `log ν`.
///
/// An optimum within two tolerances of either bound is flagged.
pub fn fit_student_copula(sample: &PseudoSample, options: StudentFitOptions) -> Result<FittedCopula> {
    let StudentFitOptions {
        nu_lower,
        nu_upper,
        log_nu_tol,
    } = options;
    if !(nu_lower > 2.0 && nu_upper > nu_lower && nu_upper.is_finite()) {
        return Err(Error::invalid(
            "nu bounds",
            format!("({nu_lower}, {nu_upper}) must satisfy 2 < lower < upper"),
        ));
    }
    let mut flags = Vec::new();
    let rho = project(tau_inversion_matrix(sample)?, &mut flags)?;
    let mut failure = None;
    let (lo, hi) = (nu_lower.ln(), nu_upper.ln());
    let (log_nu, neg_ll, iterations) = golden_section(
        |log_nu| match student_pseudo_loglik(sample, log_nu.exp(), &rho) {
            Ok(v) if v.is_finite() => -v,
            Ok(_) => f64::INFINITY,
            Err(e) => {
                failure = Some(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        log_nu_tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let nu = log_nu.exp();
    if log_nu - lo < 2.0 * log_nu_tol {
        flags.push(format!("nu at lower bound {nu_lower}"));
    }
    if hi - log_nu < 2.0 * log_nu_tol {
        flags.push(format!("nu at upper bound {nu_upper}"));
    }
    Ok(FittedCopula {
        spec: CopulaSpec::Student { nu, rho },
        method: FitMethod::PseudoLikelihood {
            eigen_floor: EIGEN_FLOOR,
            nu_lower,
            nu_upper,
            log_nu_tol,
        },
        diagnostics: FitDiagnostics {
            iterations,
            objective: -neg_ll,
            flags,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Table;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_force_tau_b(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut s, mut tx, mut ty) = (0i64, 0i64, 0i64);
        let mut pairs = 0i64;
        for i in 0..n {
            for j in (i + 1)..n {
                pairs += 1;
                let dx = (x[i] - x[j]).signum() as i64 * (x[i] != x[j]) as i64;
                let dy = (y[i] - y[j]).signum() as i64 * (y[i] != y[j]) as i64;
                s += dx * dy;
                tx += (dx == 0) as i64;
                ty += (dy == 0) as i64;
            }
        }
        s as f64 / (((pairs - tx) * (pairs - ty)) as f64).sqrt()
    }

    proptest! {
        #[test]
        fn knight_matches_brute_force(
            pts in prop::collection::vec((0i32..12, 0i32..12), 3..60)
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1 as f64).collect();
            let fast = kendall_tau(&x, &y);
            let constant = x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]);
            if constant {
                prop_assert!(fast.is_err());
            } else {
                prop_assert!((fast.unwrap() - brute_force_tau_b(&x, &y)).abs() < 1e-12);
            }
        }
    }

    fn pseudo(rows: Vec<Vec<f64>>) -> PseudoSample {
        PseudoSample::new(Table::from_rows(&rows).unwrap()).unwrap()
    }

    #[test]
    fn comonotone_pairs_invert_exactly_then_project() {
        let s = pseudo((1..200).map(|i| vec![i as f64 / 200.0; 3]).collect());
        let raw = tau_inversion_matrix(&s).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((raw[(i, j)] - (PI / 2.0).sin()).abs() < 1e-12);
            }
        }
        let fit = fit_gaussian_copula(&s).unwrap();
        let CopulaSpec::Gaussian { rho } = &fit.spec else {
            panic!()
        };
        assert!(cholesky(rho.matrix(), "fit").is_ok());
        assert!(rho.get(0, 1) <= 1.0 - 1e-8 + 1e-15 && rho.get(0, 1) > 0.999);
        assert_eq!(fit.diagnostics.flags.len(), 1);
    }

    #[test]
    fn antitone_pair_gives_minus_one() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| -v * v).collect();
        assert!((kendall_tau(&x, &y).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn independent_columns_have_small_correlation() {
        let mut rng = rng_from_seed(12);
        let s = pseudo(
            (0..10_000)
                .map(|_| vec![rng.random_range(0.001..0.999), rng.random_range(0.001..0.999)])
                .collect(),
        );
        let fit = fit_gaussian_copula(&s).unwrap();
        let CopulaSpec::Gaussian { rho } = &fit.spec else {
            panic!()
        };
        assert!(rho.get(0, 1).abs() < 0.05);
        assert!(fit.diagnostics.flags.is_empty());
    }

    #[test]
    fn student_rejects_bad_bounds() {
        let s = pseudo(vec![vec![0.2, 0.3], vec![0.5, 0.6], vec![0.8, 0.7]]);
        let bad = StudentFitOptions {
            nu_lower: 1.5,
            ..Default::default()
        };
        assert!(fit_student_copula(&s, bad).is_err());
    }
}
