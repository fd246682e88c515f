//! Pointwise Monte Carlo envelopes of Shannon index curves.
//!
//! Replicate `r` is drawn with seed `derive_seed(base_seed, r)`, so adding
//! replicates never changes earlier ones, and bands are reduced in
//! replicate order, so they do not depend on the worker count.

use crate::copula::SampleSpace;
use crate::entropy_index::{index_curve, IndexCurve, IndexKind, IndexSource, ThresholdGrid};
use crate::model_fit::FittedCopula;
use crate::pseudo_obs::validate_components;
use crate::rng::derive_seed;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeOptions {
    pub sample_size: usize,
    pub replicates: usize,
    pub level: f64,
    pub base_seed: u64,
    /// Rank-transform uniform-scale replicates too. Raw-scale (mixture)
    /// replicates are always ranked.
    pub rerank_copula: bool,
}

impl EnvelopeOptions {
    pub fn new(sample_size: usize, replicates: usize, level: f64, base_seed: u64) -> Self {
        EnvelopeOptions {
            sample_size,
            replicates,
            level,
            base_seed,
            rerank_copula: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::invalid(
                "replicates",
                format!("{} must be at least 2", self.replicates),
            ));
        }
        if self.sample_size < 2 {
            return Err(Error::invalid("n", format!("{} must be at least 2", self.sample_size)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid("level", format!("{} must lie in (0, 1)", self.level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBand {
    pub grid: ThresholdGrid,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
    pub replicates: usize,
    pub sample_size: usize,
    pub base_seed: u64,
    pub components: Vec<usize>,
    pub model: FittedCopula,
}

impl EnvelopeBand {
    pub fn width(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }
}

/// Quantile of sorted data by linear interpolation of order statistics
/// (`h = (n - 1) p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Index curves of every replicate, `[replicate][subset]`.
pub fn replicate_curves(
    model: &FittedCopula,
    subsets: &[Vec<usize>],
    grid: &ThresholdGrid,
    options: &EnvelopeOptions,
) -> Result<Vec<Vec<IndexCurve>>> {
    options.validate()?;
    model.spec.validate()?;
    if subsets.is_empty() {
        return Err(Error::invalid("subsets", "need at least one component subset"));
    }
    for s in subsets {
        validate_components(s, model.spec.dim())?;
    }
    let rerank = options.rerank_copula || model.spec.space() == SampleSpace::Raw;
    (0..options.replicates)
        .into_par_iter()
        .map(|r| {
            let batch = model
                .spec
                .sample(options.sample_size, derive_seed(options.base_seed, r as u64))?;
            let sample = batch.to_pseudo_sample(rerank)?;
            subsets
                .iter()
                .map(|s| index_curve(IndexSource::Sample(&sample), grid, s, IndexKind::Shannon))
                .collect()
        })
        .collect()
}

/// One band per subset, all built from the same replicates.
pub fn envelopes(
    model: &FittedCopula,
    subsets: &[Vec<usize>],
    grid: &ThresholdGrid,
    options: &EnvelopeOptions,
) -> Result<Vec<EnvelopeBand>> {
    let curves = replicate_curves(model, subsets, grid, options)?;
    let (lo_p, hi_p) = ((1.0 - options.level) / 2.0, 1.0 - (1.0 - options.level) / 2.0);
    Ok(subsets
        .iter()
        .enumerate()
        .map(|(s, comps)| {
            let (mut lower, mut upper) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
            for i in 0..grid.len() {
                let mut column: Vec<f64> = curves.iter().map(|rep| rep[s].values[i]).collect();
                column.sort_by(f64::total_cmp);
                lower.push(quantile(&column, lo_p));
                upper.push(quantile(&column, hi_p));
            }
            EnvelopeBand {
                grid: grid.clone(),
                lower,
                upper,
                level: options.level,
                replicates: options.replicates,
                sample_size: options.sample_size,
                base_seed: options.base_seed,
                components: comps.clone(),
                model: model.clone(),
            }
        })
        .collect())
}

pub fn envelope(
    model: &FittedCopula,
    components: &[usize],
    grid: &ThresholdGrid,
    options: &EnvelopeOptions,
) -> Result<EnvelopeBand> {
    Ok(envelopes(model, &[components.to_vec()], grid, options)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandPosition {
    /// Index under the band: stronger dependence than the model.
    Below,
    Inside,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceReport {
    pub components: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub positions: Vec<BandPosition>,
    pub below: usize,
    pub inside: usize,
    pub above: usize,
}

/// Classifies the curve against the closed band at every threshold.
pub fn band_exceedance_report(curve: &IndexCurve, band: &EnvelopeBand) -> Result<ExceedanceReport> {
    if curve.grid != band.grid {
        return Err(Error::invalid("grid", "curve and band use different threshold grids"));
    }
    let positions: Vec<BandPosition> = curve
        .values
        .iter()
        .zip(band.lower.iter().zip(&band.upper))
        .map(|(&v, (&lo, &hi))| {
            if v < lo {
                BandPosition::Below
            } else if v > hi {
                BandPosition::Above
            } else {
                BandPosition::Inside
            }
        })
        .collect();
    let count = |p| positions.iter().filter(|&&x| x == p).count();
    Ok(ExceedanceReport {
        components: curve.components.clone(),
        thresholds: curve.grid.values(),
        below: count(BandPosition::Below),
        inside: count(BandPosition::Inside),
        above: count(BandPosition::Above),
        positions,
    })
}
