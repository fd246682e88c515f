//! Rank transform of raw samples into pseudo-observations.
//!
//! Entry `(t, j)` becomes `rank(x_tj) / (n + 1)` within column `j`, so every
//! pseudo-observation lies strictly inside `(0, 1)`.

use crate::matrix::Table;
use crate::rng::rng_from_seed;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// An `n × J` sample on the original measurement scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    values: Table,
    column_names: Vec<String>,
}

impl RawSample {
    /// Validates `n >= 2`, `J >= 2` and finiteness of every entry.
    pub fn new(values: Table, column_names: Vec<String>) -> Result<Self> {
        if values.rows() < 2 {
            return Err(Error::invalid(
                "sample",
                format!("need at least 2 rows, got {}", values.rows()),
            ));
        }
        if values.cols() < 2 {
            return Err(Error::invalid(
                "sample",
                format!("need at least 2 columns, got {}", values.cols()),
            ));
        }
        if column_names.len() != values.cols() {
            return Err(Error::invalid(
                "column_names",
                format!("{} names for {} columns", column_names.len(), values.cols()),
            ));
        }
        for (i, row) in values.row_iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: j + 1,
                });
            }
        }
        Ok(RawSample { values, column_names })
    }

    /// Builds a sample with generated names `x1, x2, …`.
    pub fn unnamed(values: Table) -> Result<Self> {
        let names = (1..=values.cols()).map(|j| format!("x{j}")).collect();
        Self::new(values, names)
    }

    pub fn values(&self) -> &Table {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }
}

/// How tied raw values share ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "seed")]
pub enum TieRule {
    #[default]
    Average,
    Min,
    Max,
    /// Ties broken by a seeded random permutation.
    Random(u64),
}

/// An `n × J` sample of pseudo-observations, every entry in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSample {
    values: Table,
}

impl PseudoSample {
    /// Wraps copula-scale data after checking the open-interval invariant.
    pub fn new(values: Table) -> Result<Self> {
        if values.rows() < 1 || values.cols() < 1 {
            return Err(Error::invalid("pseudo sample", "empty table"));
        }
        for (i, row) in values.row_iter().enumerate() {
            if let Some(j) = row.iter().position(|&u| !(u > 0.0 && u < 1.0)) {
                return Err(Error::invalid(
                    "pseudo sample",
                    format!("entry at row {}, column {} is {}, outside (0, 1)", i + 1, j + 1, row[j]),
                ));
            }
        }
        Ok(PseudoSample { values })
    }

    pub fn values(&self) -> &Table {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }
}

fn column_ranks(col: &[f64], tie_rule: TieRule, column: usize) -> Vec<f64> {
    let n = col.len();
    let mut order: Vec<usize> = (0..n).collect();
    match tie_rule {
        TieRule::Random(seed) => {
            let mut rng = rng_from_seed(crate::rng::derive_seed(seed, column as u64));
            let keys: Vec<u64> = (0..n).map(|_| rng.random()).collect();
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(keys[a].cmp(&keys[b])));
        }
        _ => order.sort_by(|&a, &b| col[a].total_cmp(&col[b])),
    }
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        if !matches!(tie_rule, TieRule::Random(_)) {
            while end < n && col[order[end]] == col[order[start]] {
                end += 1;
            }
        }
        // 1-based ranks of the tie block are start+1 ..= end
        let r = match tie_rule {
            TieRule::Average => (start + 1 + end) as f64 / 2.0,
            TieRule::Min => (start + 1) as f64,
            TieRule::Max => end as f64,
            TieRule::Random(_) => (start + 1) as f64,
        };
        for &idx in &order[start..end] {
            ranks[idx] = r;
        }
        start = end;
    }
    ranks
}

/// Replaces every column by its ranks divided by `n + 1`.
///
/// Constant columns are rejected.
pub fn to_pseudo_observations(raw: &RawSample, tie_rule: TieRule) -> Result<PseudoSample> {
    let n = raw.n();
    let denom = (n + 1) as f64;
    let mut columns = Vec::with_capacity(raw.dim());
    for j in 0..raw.dim() {
        let col = raw.values().column(j);
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::ConstantColumn { column: j + 1 });
        }
        let ranks = column_ranks(&col, tie_rule, j);
        columns.push(ranks.into_iter().map(|r| r / denom).collect::<Vec<f64>>());
    }
    PseudoSample::new(Table::from_columns(&columns)?)
}

/// Keeps the columns named by 1-based, strictly increasing `indices`.
pub fn select_components(sample: &PseudoSample, indices: &[usize]) -> Result<PseudoSample> {
    let zero_based = validate_components(indices, sample.dim())?;
    Ok(PseudoSample {
        values: sample.values().select_columns(&zero_based),
    })
}

/// Checks a 1-based component list and returns the 0-based equivalent.
pub fn validate_components(indices: &[usize], dim: usize) -> Result<Vec<usize>> {
    if indices.len() < 2 {
        return Err(Error::invalid("components", "select at least 2 components"));
    }
    for w in indices.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid(
                "components",
                format!("indices must be distinct and strictly increasing, got {indices:?}"),
            ));
        }
    }
    if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > dim) {
        return Err(Error::invalid("components", format!("index {bad} outside 1..={dim}")));
    }
    Ok(indices.iter().map(|i| i - 1).collect())
}
