//! Text formats: input panels, grid and subset specs, curve and band CSV,
//! fitted-model JSON.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! value read back is bit-identical to the one written.

use crate::entropy_index::{IndexCurve, ThresholdGrid};
use crate::envelope::{EnvelopeBand, ExceedanceReport};
use crate::matrix::Table;
use crate::model_fit::FittedCopula;
use crate::pseudo_obs::RawSample;
use crate::{Error, Result};
use std::fmt::Write;

/// A numeric panel read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub names: Vec<String>,
    /// First-column labels when that column was detected as a date index.
    pub index: Option<Vec<String>>,
    pub values: Table,
}

impl Panel {
    pub fn into_raw_sample(self) -> Result<RawSample> {
        RawSample::new(self.values, self.names)
    }
}

fn parse_number(s: &str, line: usize, column: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
        line,
        reason: format!("column {column}: {s:?} is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            reason: format!("column {column}: non-finite value {s:?}"),
        });
    }
    Ok(v)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    let reason = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    };
    Error::Parse { line, reason }
}

/// Reads a CSV panel with a header row. A first column whose header is
/// `date`/`time`/empty, or whose first value is not numeric, is kept as a
/// label index and excluded from the numbers.
pub fn parse_panel(text: &str, delimiter: u8) -> Result<Panel> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    let records = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_error)?;
    if header.iter().all(String::is_empty) || records.is_empty() {
        return Err(Error::Parse {
            line: 1,
            reason: "no data rows".into(),
        });
    }
    let first = header[0].to_ascii_lowercase();
    let has_index = matches!(first.as_str(), "" | "date" | "time" | "datetime" | "timestamp")
        || records[0].get(0).is_some_and(|v| v.trim().parse::<f64>().is_err());
    let skip = has_index as usize;
    let names: Vec<String> = header[skip..].to_vec();
    if names.is_empty() {
        return Err(Error::Parse {
            line: 1,
            reason: "no numeric columns".into(),
        });
    }
    let mut data = Vec::with_capacity(records.len() * names.len());
    let mut index = Vec::new();
    for (r, rec) in records.iter().enumerate() {
        let line = rec.position().map_or(r + 2, |p| p.line() as usize);
        if has_index {
            index.push(rec.get(0).unwrap_or_default().to_string());
        }
        for (j, field) in rec.iter().skip(skip).enumerate() {
            data.push(parse_number(field, line, &names[j])?);
        }
    }
    Ok(Panel {
        values: Table::from_row_major(records.len(), names.len(), data)?,
        names,
        index: has_index.then_some(index),
    })
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| Error::invalid(what, format!("{t:?} is not a number")))
        })
        .collect()
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid_spec(s: &str) -> Result<ThresholdGrid> {
    let s = s.trim();
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => ThresholdGrid::new(parse_list(s, "grid")?),
        3 => {
            let v = parse_list(&parts.join(","), "grid")?;
            ThresholdGrid::from_range(v[0], v[1], v[2])
        }
        _ => Err(Error::invalid(
            "grid",
            format!("{s:?} is neither start:stop:step nor a comma list"),
        )),
    }
}

/// Comma-separated `α` values, each finite and above 1.
pub fn parse_alpha_list(s: &str) -> Result<Vec<f64>> {
    let v = parse_list(s, "alpha")?;
    if let Some(a) = v.iter().find(|a| !(**a > 1.0) || !a.is_finite()) {
        return Err(Error::invalid("alpha", format!("{a} must be finite and > 1")));
    }
    Ok(v)
}

/// `(1,2), (1,2,3), …, (1,…,J)`.
pub fn leading_subsets(dim: usize) -> Vec<Vec<usize>> {
    (2..=dim).map(|k| (1..=k).collect()).collect()
}

/// Slash-separated 1-based subsets such as `1,2/1,2,3`; empty or
/// `leading` gives [`leading_subsets`].
pub fn parse_subsets(s: &str, dim: usize) -> Result<Vec<Vec<usize>>> {
    let s = s.trim();
    if s.is_empty() || s == "leading" {
        return Ok(leading_subsets(dim));
    }
    s.split('/')
        .map(|part| {
            let idx = part
                .split(',')
                .map(|t| {
                    let t = t.trim();
                    t.parse::<usize>()
                        .map_err(|_| Error::invalid("subsets", format!("{t:?} is not a component index")))
                })
                .collect::<Result<Vec<usize>>>()?;
            crate::pseudo_obs::validate_components(&idx, dim)?;
            Ok(idx)
        })
        .collect()
}

/// File-name stem for a subset, e.g. `1-2-3`.
pub fn subset_tag(components: &[usize]) -> String {
    components.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

/// Curves sharing a grid, one column per curve after `b`.
pub fn write_curves_csv(curves: &[IndexCurve]) -> Result<String> {
    let Some(first) = curves.first() else {
        return Err(Error::invalid("curves", "nothing to write"));
    };
    if curves
        .iter()
        .any(|c| c.grid != first.grid || c.values.len() != first.grid.len())
    {
        return Err(Error::invalid("curves", "curves must share one grid"));
    }
    let mut out = String::from("b");
    for c in curves {
        out.push(',');
        out.push_str(&c.kind.label());
    }
    out.push('\n');
    for (i, b) in first.grid.values().iter().enumerate() {
        write!(out, "{b}").unwrap();
        for c in curves {
            write!(out, ",{}", c.values[i]).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// A curve file read back: the grid and one value column per label.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub grid: ThresholdGrid,
    pub labels: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

pub fn parse_curves_csv(text: &str) -> Result<CurveTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some("b") || header.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            reason: "header must be b followed by at least one index column".into(),
        });
    }
    let labels = header[1..].to_vec();
    let mut b = Vec::new();
    let mut columns = vec![Vec::new(); labels.len()];
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = r + 2;
        b.push(parse_number(&rec[0], line, "b")?);
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(parse_number(&rec[j + 1], line, &labels[j])?);
        }
    }
    if b.is_empty() {
        return Err(Error::Parse {
            line: 2,
            reason: "no data rows".into(),
        });
    }
    Ok(CurveTable {
        grid: ThresholdGrid::new(b)?,
        labels,
        columns,
    })
}

/// `b,lower,upper`, plus `data,position` when a report is supplied.
pub fn write_band_csv(band: &EnvelopeBand, data: Option<(&IndexCurve, &ExceedanceReport)>) -> String {
    let mut out = String::from(if data.is_some() {
        "b,lower,upper,data,position\n"
    } else {
        "b,lower,upper\n"
    });
    for (i, b) in band.grid.values().iter().enumerate() {
        write!(out, "{b},{},{}", band.lower[i], band.upper[i]).unwrap();
        if let Some((curve, report)) = data {
            let pos = serde_json::to_value(report.positions[i]).unwrap();
            write!(out, ",{},{}", curve.values[i], pos.as_str().unwrap()).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn encode_model_json(model: &FittedCopula) -> String {
    serde_json::to_string_pretty(model).expect("models serialise") + "\n"
}

/// Decodes and validates a fitted model.
pub fn decode_model_json(text: &str) -> Result<FittedCopula> {
    let model: FittedCopula = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        reason: e.to_string(),
    })?;
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{presets, CopulaSpec};
    use crate::entropy_index::IndexKind;

    #[test]
    fn panel_with_date_index() {
        let p = parse_panel("Date,A,B\n2020-01-01,1.5,2\n2020-01-02, 3 ,4e1\n", b',').unwrap();
        assert_eq!(p.names, vec!["A", "B"]);
        assert_eq!(p.index.as_ref().unwrap()[1], "2020-01-02");
        assert_eq!(p.values.row(1), &[3.0, 40.0]);
    }

    #[test]
    fn panel_without_index_and_custom_delimiter() {
        let p = parse_panel("x;y\n1;2\n3;4\n", b';').unwrap();
        assert!(p.index.is_none());
        assert_eq!(p.values.cols(), 2);
    }

    #[test]
    fn panel_errors() {
        for (text, needle) in [
            ("", "no data rows"),
            ("a,b\n", "no data rows"),
            ("a,b\n1,2\n3\n", "expected 2 fields"),
            ("a,b\n1,2\n3,x\n", "not a number"),
            ("a,b\n1,2\n3,inf\n", "non-finite"),
        ] {
            let e = parse_panel(text, b',').unwrap_err().to_string();
            assert!(e.contains(needle), "{text:?}: {e}");
        }
        let e = parse_panel("a,b\n1,2\n3,x\n", b',').unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
    }

    #[test]
    fn grid_specs() {
        let g = parse_grid_spec(".850:.995:.005").unwrap();
        assert_eq!(g.len(), 30);
        assert_eq!(g.values()[29], 0.995);
        assert_eq!(parse_grid_spec(".8,.9,.95").unwrap().len(), 3);
        assert!(parse_grid_spec(".9,.8").is_err());
        assert!(parse_grid_spec("1:2").is_err());
        assert!(parse_grid_spec("a:b:c").is_err());
    }

    #[test]
    fn subsets() {
        assert_eq!(
            parse_subsets("", 4).unwrap(),
            vec![vec![1, 2], vec![1, 2, 3], vec![1, 2, 3, 4]]
        );
        assert_eq!(parse_subsets("2,4/1,3", 4).unwrap(), vec![vec![2, 4], vec![1, 3]]);
        assert!(parse_subsets("1,5", 4).is_err());
        assert!(parse_subsets("1", 4).is_err());
        assert!(parse_subsets("2,1", 4).is_err());
        assert_eq!(subset_tag(&[1, 2, 3]), "1-2-3");
    }

    #[test]
    fn curve_round_trip() {
        let grid = ThresholdGrid::upper_tail();
        let s = IndexCurve {
            grid: grid.clone(),
            values: (0..30).map(|i| 1.0 + (i as f64).sqrt() / 7.0).collect(),
            kind: IndexKind::Shannon,
            components: vec![1, 2],
        };
        let t = IndexCurve {
            values: s.values.iter().map(|v| v / 3.0).collect(),
            kind: IndexKind::Tsallis { alpha: 1.5 },
            ..s.clone()
        };
        let text = write_curves_csv(&[s.clone(), t.clone()]).unwrap();
        let back = parse_curves_csv(&text).unwrap();
        assert_eq!(back.labels, vec!["S_b", "T_b_alpha_1.5"]);
        assert_eq!(back.grid, grid);
        assert_eq!(back.columns[0], s.values);
        assert_eq!(back.columns[1], t.values);
    }

    #[test]
    fn model_json_round_trip_and_validation() {
        for spec in [
            presets::student_theta_two(),
            presets::gumbel_theta_two(),
            CopulaSpec::Independence { dim: 4 },
        ] {
            let m = FittedCopula::fixed(spec);
            assert_eq!(decode_model_json(&encode_model_json(&m)).unwrap(), m);
        }
        let bad = encode_model_json(&FittedCopula::fixed(CopulaSpec::Gumbel { xi: 2.0, dim: 3 })).replace("2.0", "0.5");
        assert!(decode_model_json(&bad).is_err());
        assert!(decode_model_json("{").is_err());
    }
}
