//! Exceedance indicators, their joint cell distribution, and the normalised
//! entropy indices.
//!
//! For a threshold `b` each selected component contributes the indicator
//! `U_k > b`. The `2^K` joint patterns form a discrete distribution whose
//! Shannon entropy, divided by the entropy of a single indicator, is the
//! index `S_b`: 1 under total dependence and `K` under independence. The
//! Tsallis variant `T_b^α` is normalised the same way with the comonotone
//! Tsallis entropy.
//!
//! Cell probabilities are stored densely, indexed by the bit pattern in
//! which bit `k` is set when component `k` exceeds the threshold.

use crate::copula::CopulaSpec;
use crate::pseudo_obs::{validate_components, PseudoSample};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Upper bound on the number of components analysed jointly.
pub const MAX_COMPONENTS: usize = 20;

/// Largest negative rounding residue tolerated in inclusion-exclusion sums.
const CELL_ROUNDING: f64 = 1e-12;

/// A threshold percentile `b` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(b: f64) -> Result<Self> {
        if b > 0.0 && b < 1.0 {
            Ok(Threshold(b))
        } else {
            Err(Error::invalid("threshold", format!("{b} is not in (0, 1)")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Entropy of a single indicator, `-(b log b + (1-b) log(1-b))`.
    pub fn indicator_entropy(self) -> f64 {
        let b = self.0;
        -(b * b.ln() + (1.0 - b) * (-b).ln_1p())
    }
}

impl TryFrom<f64> for Threshold {
    type Error = Error;
    fn try_from(b: f64) -> Result<Self> {
        Threshold::new(b)
    }
}

impl From<Threshold> for f64 {
    fn from(t: Threshold) -> f64 {
        t.0
    }
}

/// Strictly increasing thresholds in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThresholdGrid(Vec<Threshold>);

impl ThresholdGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("grid", "no thresholds"));
        }
        let thresholds = values.iter().map(|&b| Threshold::new(b)).collect::<Result<Vec<_>>>()?;
        if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "grid",
                format!("thresholds must be strictly increasing ({} then {})", w[0], w[1]),
            ));
        }
        Ok(ThresholdGrid(thresholds))
    }

    /// `start, start + step, …` up to and including `stop` (within rounding).
    ///
    /// Points are rounded to twelve decimals so that `.850:.995:.005` yields
    /// exactly the printed values.
    pub fn from_range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::invalid("grid", format!("step {step} must be positive")));
        }
        if !(stop >= start) {
            return Err(Error::invalid("grid", format!("stop {stop} is below start {start}")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(Error::invalid("grid", "more than 10^6 thresholds"));
        }
        let values = (0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect();
        Self::new(values)
    }

    /// The thresholds `.850, .855, …, .995`.
    pub fn upper_tail() -> Self {
        Self::from_range(0.85, 0.995, 0.005).expect("valid constant grid")
    }

    pub fn thresholds(&self) -> &[Threshold] {
        &self.0
    }

    pub fn values(&self) -> Vec<f64> {
        self.0.iter().map(|t| t.0).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ThresholdGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ThresholdGrid::new(v)
    }
}

impl From<ThresholdGrid> for Vec<f64> {
    fn from(g: ThresholdGrid) -> Vec<f64> {
        g.values()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellSource {
    Empirical { n: usize },
    Exact,
}

/// Joint distribution of the `K` exceedance indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDistribution {
    dim: usize,
    probs: Vec<f64>,
    source: CellSource,
}

impl CellDistribution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Probabilities indexed by exceedance bit pattern.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn source(&self) -> CellSource {
        self.source
    }

    /// Probability of the pattern given as one flag per component.
    pub fn prob_of(&self, exceeds: &[bool]) -> f64 {
        assert_eq!(exceeds.len(), self.dim);
        let mask = exceeds
            .iter()
            .enumerate()
            .fold(0usize, |m, (k, &e)| m | ((e as usize) << k));
        self.probs[mask]
    }

    /// Probability that no component exceeds the threshold.
    pub fn all_below(&self) -> f64 {
        self.probs[0]
    }
}

fn check_dim(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid(
            "components",
            format!("need at least 2 components, got {k}"),
        ));
    }
    if k > MAX_COMPONENTS {
        return Err(Error::invalid(
            "components",
            format!("{k} components exceed the limit of {MAX_COMPONENTS} (2^{MAX_COMPONENTS} cells)"),
        ));
    }
    Ok(())
}

/// Counts exceedance patterns row by row. Bit `k` is set when `u_tk > b`.
pub fn cell_distribution_empirical(sample: &PseudoSample, b: Threshold) -> Result<CellDistribution> {
    let k = sample.dim();
    check_dim(k)?;
    let mut counts = vec![0u64; 1 << k];
    for row in sample.values().row_iter() {
        let mask = row
            .iter()
            .enumerate()
            .fold(0usize, |m, (j, &u)| m | (((u > b.0) as usize) << j));
        counts[mask] += 1;
    }
    let n = sample.n();
    let probs = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(CellDistribution {
        dim: k,
        probs,
        source: CellSource::Empirical { n },
    })
}

/// Exact cell probabilities of the first `k` components of `copula`.
///
/// The probability that exactly the components in `A` stay at or below `b`
/// is `Σ_{B ⊇ A} (-1)^{|B∖A|} C(b on B, 1 elsewhere)`, evaluated with a
/// superset Möbius transform in `O(k 2^k)` copula evaluations.
pub fn cell_distribution_exact(copula: &CopulaSpec, b: Threshold, k: usize) -> Result<CellDistribution> {
    check_dim(k)?;
    if k > copula.dim() {
        return Err(Error::invalid(
            "components",
            format!("{k} components requested from a {}-dimensional copula", copula.dim()),
        ));
    }
    let full = (1usize << k) - 1;
    let mut point = vec![1.0; copula.dim()];
    // diag[B] = C(b on B, 1 elsewhere), B the set of components held at b.
    let mut diag = Vec::with_capacity(1 << k);
    for mask in 0..=full {
        for (j, p) in point.iter_mut().enumerate().take(k) {
            *p = if mask >> j & 1 == 1 { b.0 } else { 1.0 };
        }
        diag.push(copula.cdf(&point)?);
    }
    for bit in 0..k {
        for mask in 0..=full {
            if mask >> bit & 1 == 0 {
                diag[mask] -= diag[mask | (1 << bit)];
            }
        }
    }
    // diag[A] is now the probability that exactly A stays below b.
    let mut probs = vec![0.0; 1 << k];
    for (exceed, p) in probs.iter_mut().enumerate() {
        let v = diag[!exceed & full];
        if v < -CELL_ROUNDING || !v.is_finite() {
            return Err(Error::Numerical(format!("cell probability {v} for pattern {exceed:b}")));
        }
        *p = v.max(0.0);
    }
    Ok(CellDistribution {
        dim: k,
        probs,
        source: CellSource::Exact,
    })
}

/// Shannon entropy in nats; empty cells contribute nothing.
pub fn shannon_entropy(cells: &CellDistribution) -> f64 {
    -cells
        .probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() || alpha == 1.0 {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} must be positive, finite and not 1"),
        ));
    }
    Ok(())
}

/// `1 - Σ p^α`, accumulated as `Σ p (1 - p^(α-1))` to avoid cancellation
/// when `α` is close to one.
fn one_minus_power_sum(cells: &CellDistribution, alpha: f64) -> f64 {
    cells
        .probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * ((alpha - 1.0) * p.ln()).exp_m1())
        .sum()
}

/// Tsallis entropy `(1 - Σ p^α) / (α - 1)`.
pub fn tsallis_entropy(cells: &CellDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(one_minus_power_sum(cells, alpha) / (alpha - 1.0))
}

/// Probability that component `k` stays at or below the threshold.
pub fn marginal_below(cells: &CellDistribution, k: usize) -> f64 {
    cells
        .probs
        .iter()
        .enumerate()
        .filter(|(m, _)| m >> k & 1 == 0)
        .map(|(_, p)| p)
        .sum()
}

/// Mean over components of `f(P(U_k <= b))`. Exact cells use `b` itself.
fn marginal_mean(cells: &CellDistribution, b: Threshold, f: impl Fn(f64) -> f64) -> Result<f64> {
    let v = match cells.source {
        CellSource::Exact => f(b.0),
        CellSource::Empirical { .. } => {
            (0..cells.dim).map(|k| f(marginal_below(cells, k))).sum::<f64>() / cells.dim as f64
        }
    };
    if !(v > 0.0) {
        return Err(Error::invalid(
            "threshold",
            format!(
                "no observation exceeds b = {} in some component; lower b or add data",
                b.0
            ),
        ));
    }
    Ok(v)
}

fn binary_entropy(q: f64) -> f64 {
    -[q, 1.0 - q]
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// `S_b`: Shannon entropy over the single-indicator entropy.
///
/// Exact cells are normalised by `-(b ln b + (1-b) ln(1-b))`. Sample cells
/// use the mean indicator entropy of the observed marginal exceedance
/// rates, which keeps `1 <= S_b <= K` for every sample.
pub fn index_shannon(cells: &CellDistribution, b: Threshold) -> Result<f64> {
    Ok(shannon_entropy(cells) / marginal_mean(cells, b, binary_entropy)?)
}

/// Comonotone Tsallis normaliser `(1 - b^α) - (1 - b)^α`, which is positive
/// for every `α > 1` and `b` in `(0, 1)`.
pub fn tsallis_normalizer(b: f64, alpha: f64) -> f64 {
    -(alpha * b.ln()).exp_m1() - (alpha * (-b).ln_1p()).exp()
}

/// `T_b^α = (1 - Σ p^α) / ((1 - b^α) - (1 - b)^α)` for `α > 1`; sample
/// cells are normalised from their marginals as in [`index_shannon`].
pub fn index_tsallis(cells: &CellDistribution, b: Threshold, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha <= 1.0 {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} must exceed 1; S_b is the α → 1 limit"),
        ));
    }
    Ok(one_minus_power_sum(cells, alpha) / marginal_mean(cells, b, |q| tsallis_normalizer(q, alpha))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum IndexKind {
    Shannon,
    Tsallis { alpha: f64 },
}

impl IndexKind {
    pub fn evaluate(self, cells: &CellDistribution, b: Threshold) -> Result<f64> {
        match self {
            IndexKind::Shannon => index_shannon(cells, b),
            IndexKind::Tsallis { alpha } => index_tsallis(cells, b, alpha),
        }
    }

    /// Column label used in curve files.
    pub fn label(self) -> String {
        match self {
            IndexKind::Shannon => "S_b".to_string(),
            IndexKind::Tsallis { alpha } => format!("T_b_alpha_{alpha}"),
        }
    }
}

/// Where cell probabilities come from when tracing a curve.
#[derive(Debug, Clone, Copy)]
pub enum IndexSource<'a> {
    Sample(&'a PseudoSample),
    Exact(&'a CopulaSpec),
}

impl IndexSource<'_> {
    fn dim(&self) -> usize {
        match self {
            IndexSource::Sample(s) => s.dim(),
            IndexSource::Exact(c) => c.dim(),
        }
    }
}

/// Index values along a threshold grid for one component subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexCurve {
    pub grid: ThresholdGrid,
    pub values: Vec<f64>,
    pub kind: IndexKind,
    /// 1-based component indices.
    pub components: Vec<usize>,
}

/// Evaluates one index per threshold on the selected 1-based components.
pub fn index_curve(
    source: IndexSource<'_>,
    grid: &ThresholdGrid,
    components: &[usize],
    kind: IndexKind,
) -> Result<IndexCurve> {
    let zero_based = validate_components(components, source.dim())?;
    let values = match source {
        IndexSource::Sample(sample) => {
            let sub = if zero_based.len() == sample.dim() {
                sample.clone()
            } else {
                PseudoSample::new(sample.values().select_columns(&zero_based))?
            };
            grid.thresholds()
                .par_iter()
                .map(|&b| kind.evaluate(&cell_distribution_empirical(&sub, b)?, b))
                .collect::<Result<Vec<f64>>>()?
        }
        IndexSource::Exact(copula) => {
            let contiguous = zero_based.iter().enumerate().all(|(i, &c)| i == c);
            if !contiguous && !copula.is_exchangeable() {
                return Err(Error::invalid(
                    "components",
                    "exact mode supports leading components only for this family",
                ));
            }
            grid.thresholds()
                .par_iter()
                .map(|&b| kind.evaluate(&cell_distribution_exact(copula, b, zero_based.len())?, b))
                .collect::<Result<Vec<f64>>>()?
        }
    };
    Ok(IndexCurve {
        grid: grid.clone(),
        values,
        kind,
        components: components.to_vec(),
    })
}
