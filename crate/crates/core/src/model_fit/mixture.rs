//! Multivariate normal mixtures by multi-start EM.

use super::{FitDiagnostics, FitMethod, FittedCopula};
use crate::copula::CopulaSpec;
use crate::pseudo_obs::RawSample;
use crate::rng::{derive_seed, rng_from_seed, ChaCha8Rng};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const LLOYD_STEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureOptions {
    pub components: usize,
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the log-likelihood gain falls below `rel_tol * |ℓ|`.
    pub rel_tol: f64,
    /// Eigenvalue floor relative to each column's variance.
    pub variance_floor: f64,
}

impl MixtureOptions {
    pub fn new(components: usize, starts: usize, seed: u64) -> Self {
        MixtureOptions {
            components,
            starts,
            seed,
            max_iter: 1000,
            rel_tol: 1e-10,
            variance_floor: 1e-6,
        }
    }
}

/// Parameters of one mixture, covariances row-major.
#[derive(Debug, Clone, PartialEq)]
struct Params {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covs: Vec<Vec<f64>>,
}

/// The outcome of a single EM start.
#[derive(Debug, Clone, PartialEq)]
pub struct EmRun {
    pub start: usize,
    /// Log-likelihood at the start of every iteration, then at the final parameters.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    /// Why the run was abandoned, if it was.
    pub collapsed: Option<String>,
    params: Params,
}

impl EmRun {
    pub fn loglik(&self) -> f64 {
        self.loglik_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

struct Component {
    log_norm: f64,
    lower: Vec<f64>,
}

/// Lower Cholesky factor of a row-major `d x d` matrix.
fn cholesky_flat(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

fn prepare(params: &Params, d: usize) -> Option<Vec<Component>> {
    params
        .covs
        .iter()
        .zip(&params.weights)
        .map(|(cov, &w)| {
            let lower = cholesky_flat(cov, d)?;
            let half_log_det: f64 = (0..d).map(|i| lower[i * d + i].ln()).sum();
            Some(Component {
                log_norm: w.ln() - 0.5 * d as f64 * (2.0 * PI).ln() - half_log_det,
                lower,
            })
        })
        .collect()
}

/// Log-likelihood and, when `resp` is given, the responsibilities.
fn e_step(data: &[f64], d: usize, params: &Params, comps: &[Component], mut resp: Option<&mut [f64]>) -> f64 {
    let k = comps.len();
    let mut z = vec![0.0; d];
    let mut logs = vec![0.0; k];
    let mut total = 0.0;
    for (i, row) in data.chunks_exact(d).enumerate() {
        for (c, comp) in comps.iter().enumerate() {
            let mean = &params.means[c];
            let mut q = 0.0;
            for a in 0..d {
                let mut s = row[a] - mean[a];
                for b in 0..a {
                    s -= comp.lower[a * d + b] * z[b];
                }
                z[a] = s / comp.lower[a * d + a];
                q += z[a] * z[a];
            }
            logs[c] = comp.log_norm - 0.5 * q;
        }
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
        let lse = top + sum.ln();
        total += lse;
        if let Some(r) = resp.as_deref_mut() {
            for c in 0..k {
                r[i * k + c] = (logs[c] - lse).exp();
            }
        }
    }
    total
}

/// Raises eigenvalues of the variance-standardised covariance to `floor`.
fn floor_covariance(cov: &mut [f64], d: usize, scale: &[f64], floor: f64) {
    let m = DMatrix::from_fn(d, d, |i, j| cov[i * d + j] / (scale[i] * scale[j]));
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.min() >= floor {
        return;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    for i in 0..d {
        for j in 0..d {
            cov[i * d + j] = 0.5 * (rebuilt[(i, j)] + rebuilt[(j, i)]) * scale[i] * scale[j];
        }
    }
}

fn m_step(data: &[f64], d: usize, resp: &[f64], k: usize, scale: &[f64], floor: f64) -> Result<Params> {
    let n = data.len() / d;
    let mut mass = vec![0.0; k];
    let mut means = vec![vec![0.0; d]; k];
    for (i, row) in data.chunks_exact(d).enumerate() {
        for c in 0..k {
            let r = resp[i * k + c];
            mass[c] += r;
            for a in 0..d {
                means[c][a] += r * row[a];
            }
        }
    }
    for c in 0..k {
        if !(mass[c] > d as f64) {
            return Err(Error::Numerical(format!("component {} lost its support", c + 1)));
        }
        means[c].iter_mut().for_each(|m| *m /= mass[c]);
    }
    let mut covs = vec![vec![0.0; d * d]; k];
    let mut diff = vec![0.0; d];
    for (i, row) in data.chunks_exact(d).enumerate() {
        for c in 0..k {
            let r = resp[i * k + c];
            for a in 0..d {
                diff[a] = row[a] - means[c][a];
            }
            let cov = &mut covs[c];
            for a in 0..d {
                for b in 0..=a {
                    cov[a * d + b] += r * diff[a] * diff[b];
                }
            }
        }
    }
    for c in 0..k {
        let cov = &mut covs[c];
        for a in 0..d {
            for b in 0..=a {
                let v = cov[a * d + b] / mass[c];
                cov[a * d + b] = v;
                cov[b * d + a] = v;
            }
        }
        floor_covariance(cov, d, scale, floor);
    }
    let total: f64 = mass.iter().sum();
    let weights = mass.iter().map(|m| m / total).collect::<Vec<_>>();
    let _ = n;
    Ok(Params { weights, means, covs })
}

/// k-means++ seeding followed by a few Lloyd steps; returns hard labels.
fn kmeans_labels(data: &[f64], d: usize, k: usize, scale: &[f64], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = data.len() / d;
    let dist = |a: &[f64], b: &[f64]| -> f64 { (0..d).map(|j| ((a[j] - b[j]) / scale[j]).powi(2)).sum() };
    let row = |i: usize| &data[i * d..(i + 1) * d];
    let mut centers: Vec<Vec<f64>> = vec![row(rng.random_range(0..n)).to_vec()];
    let mut nearest: Vec<f64> = (0..n).map(|i| dist(row(i), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            nearest
                .iter()
                .position(|&w| {
                    acc += w;
                    acc > target
                })
                .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centers.push(row(pick).to_vec());
        let c = centers.last().unwrap();
        for i in 0..n {
            nearest[i] = nearest[i].min(dist(row(i), c));
        }
    }
    let mut labels = vec![0; n];
    for step in 0..=LLOYD_STEPS {
        for i in 0..n {
            let mut best = (f64::INFINITY, 0);
            for (c, center) in centers.iter().enumerate() {
                let v = dist(row(i), center);
                if v < best.0 {
                    best = (v, c);
                }
            }
            labels[i] = best.1;
        }
        if step == LLOYD_STEPS {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..d {
                sums[labels[i]][j] += data[i * d + j];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    labels
}

fn run_em(data: &[f64], d: usize, options: &MixtureOptions, scale: &[f64], start: usize) -> EmRun {
    let k = options.components;
    let n = data.len() / d;
    let mut rng = rng_from_seed(derive_seed(options.seed, start as u64));
    let labels = kmeans_labels(data, d, k, scale, &mut rng);
    let mut resp = vec![0.0; n * k];
    for (i, &l) in labels.iter().enumerate() {
        resp[i * k + l] = 1.0;
    }
    let mut run = EmRun {
        start,
        loglik_trace: Vec::new(),
        converged: false,
        collapsed: None,
        params: Params {
            weights: vec![],
            means: vec![],
            covs: vec![],
        },
    };
    let mut params = match m_step(data, d, &resp, k, scale, options.variance_floor) {
        Ok(p) => p,
        Err(e) => {
            run.collapsed = Some(format!("initialisation: {e}"));
            return run;
        }
    };
    for _ in 0..options.max_iter {
        let Some(comps) = prepare(&params, d) else {
            run.collapsed = Some("covariance lost positive definiteness".into());
            return run;
        };
        let ll = e_step(data, d, &params, &comps, Some(&mut resp));
        if !ll.is_finite() {
            run.collapsed = Some("log-likelihood is not finite".into());
            return run;
        }
        if let Some(&prev) = run.loglik_trace.last() {
            if ll - prev <= options.rel_tol * prev.abs() {
                run.loglik_trace.push(ll);
                run.converged = true;
                run.params = params;
                return run;
            }
        }
        run.loglik_trace.push(ll);
        params = match m_step(data, d, &resp, k, scale, options.variance_floor) {
            Ok(p) => p,
            Err(e) => {
                run.collapsed = Some(e.to_string());
                return run;
            }
        };
    }
    match prepare(&params, d) {
        Some(comps) => run.loglik_trace.push(e_step(data, d, &params, &comps, None)),
        None => run.collapsed = Some("covariance lost positive definiteness".into()),
    }
    run.params = params;
    run
}

fn check(raw: &RawSample, options: &MixtureOptions) -> Result<()> {
    let (n, d, k) = (raw.n(), raw.dim(), options.components);
    if k == 0 {
        return Err(Error::invalid("components", "need at least one component"));
    }
    if options.starts == 0 {
        return Err(Error::invalid("starts", "need at least one start"));
    }
    if n <= 10 * k * d {
        return Err(Error::invalid(
            "n",
            format!(
                "{n} rows is too few for {k} components in dimension {d}; need more than {}",
                10 * k * d
            ),
        ));
    }
    if !(options.variance_floor > 0.0 && options.rel_tol >= 0.0) || options.max_iter == 0 {
        return Err(Error::invalid(
            "mixture options",
            "variance_floor must be positive, rel_tol non-negative, max_iter at least 1",
        ));
    }
    Ok(())
}

fn column_scale(raw: &RawSample) -> Result<Vec<f64>> {
    (0..raw.dim())
        .map(|j| {
            let col = raw.values().column(j);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            if var > 0.0 {
                Ok(var.sqrt())
            } else {
                Err(Error::ConstantColumn { column: j + 1 })
            }
        })
        .collect()
}

/// Runs every start and returns them in start order.
pub fn fit_gaussian_mixture_runs(raw: &RawSample, options: MixtureOptions) -> Result<Vec<EmRun>> {
    check(raw, &options)?;
    let scale = column_scale(raw)?;
    let d = raw.dim();
    let data = raw.values().as_slice();
    Ok((0..options.starts)
        .into_par_iter()
        .map(|s| run_em(data, d, &options, &scale, s))
        .collect())
}

/// Best start by final log-likelihood; components ordered by descending weight.
pub fn fit_gaussian_mixture(raw: &RawSample, options: MixtureOptions) -> Result<FittedCopula> {
    let runs = fit_gaussian_mixture_runs(raw, options)?;
    let best = runs
        .iter()
        .filter(|r| r.collapsed.is_none())
        .fold(None::<&EmRun>, |acc, r| match acc {
            Some(a) if a.loglik() >= r.loglik() => Some(a),
            _ => Some(r),
        })
        .ok_or_else(|| {
            Error::Numerical(format!(
                "all {} EM starts collapsed; try a larger variance floor than {:e}",
                options.starts, options.variance_floor
            ))
        })?;
    let d = raw.dim();
    let p = &best.params;
    let mut order: Vec<usize> = (0..p.weights.len()).collect();
    order.sort_by(|&a, &b| p.weights[b].total_cmp(&p.weights[a]).then(a.cmp(&b)));
    let weights: Vec<f64> = order.iter().map(|&c| p.weights[c]).collect();
    let total: f64 = weights.iter().sum();
    let mut flags = Vec::new();
    if !best.converged {
        flags.push(format!("EM did not converge within {} iterations", options.max_iter));
    }
    let collapsed = runs.iter().filter(|r| r.collapsed.is_some()).count();
    if collapsed > 0 {
        flags.push(format!("{collapsed} of {} starts collapsed", options.starts));
    }
    let spec = CopulaSpec::GaussianMixture {
        weights: weights.iter().map(|w| w / total).collect(),
        means: order.iter().map(|&c| p.means[c].clone()).collect(),
        covariances: order
            .iter()
            .map(|&c| p.covs[c].chunks(d).map(<[f64]>::to_vec).collect())
            .collect(),
    };
    spec.validate()?;
    Ok(FittedCopula {
        spec,
        method: FitMethod::Em {
            components: options.components,
            starts: options.starts,
            seed: options.seed,
            max_iter: options.max_iter,
            rel_tol: options.rel_tol,
            variance_floor: options.variance_floor,
        },
        diagnostics: FitDiagnostics {
            iterations: best.loglik_trace.len(),
            objective: best.loglik(),
            flags,
        },
    })
}
