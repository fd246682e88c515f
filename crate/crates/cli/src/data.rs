//! Input loading, preprocessing and file output shared by the commands.

use crate::args::{InputArgs, InputKind};
use crate::{CliError, CliResult};
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use tailindex::io::{parse_panel, Panel};
use tailindex::matrix::Table;
use tailindex::model_fit::{fit_garch11, log_returns, GarchParams};
use tailindex::{RawSample, TieRule};

pub fn parse_ties(s: &str) -> CliResult<TieRule> {
    match s {
        "average" => Ok(TieRule::Average),
        "min" => Ok(TieRule::Min),
        "max" => Ok(TieRule::Max),
        _ => match s.strip_prefix("random:").map(str::parse) {
            Some(Ok(seed)) => Ok(TieRule::Random(seed)),
            _ => Err(CliError::usage(
                "ties",
                format!("{s:?}; expected average, min, max or random:SEED"),
            )),
        },
    }
}

/// Reads the panel and keeps the requested columns, in the order given.
pub fn load_panel(input: &InputArgs) -> CliResult<Panel> {
    let text = fs::read_to_string(&input.input).map_err(|source| CliError::Io {
        path: input.input.clone(),
        source,
    })?;
    if !input.delimiter.is_ascii() {
        return Err(CliError::usage("delimiter", "must be a single ASCII character"));
    }
    let panel = parse_panel(&text, input.delimiter as u8)?;
    let Some(columns) = &input.columns else {
        return Ok(panel);
    };
    let picks = columns
        .iter()
        .map(|c| {
            let c = c.trim();
            match c.parse::<usize>() {
                Ok(i) if i >= 1 && i <= panel.names.len() => Ok(i - 1),
                Ok(i) => Err(CliError::usage(
                    "columns",
                    format!("position {i} outside 1..={}", panel.names.len()),
                )),
                Err(_) => panel
                    .names
                    .iter()
                    .position(|n| n == c)
                    .ok_or_else(|| CliError::usage("columns", format!("no column named {c:?}"))),
            }
        })
        .collect::<CliResult<Vec<usize>>>()?;
    Ok(Panel {
        names: picks.iter().map(|&i| panel.names[i].clone()).collect(),
        values: panel.values.select_columns(&picks),
        index: panel.index,
    })
}

#[derive(Debug, Serialize)]
pub struct GarchSummary {
    pub column: String,
    pub params: GarchParams,
    pub persistence: f64,
    pub converged: bool,
    pub iterations: usize,
    pub loglik: f64,
}

pub struct Prepared {
    pub raw: RawSample,
    pub garch: Vec<GarchSummary>,
    pub warnings: Vec<String>,
}

/// Prices to percentage log-returns, then optionally GARCH shocks.
pub fn prepare(panel: Panel, kind: InputKind, garch: bool, mean_included: bool) -> CliResult<Prepared> {
    let names = panel.names.clone();
    let mut columns: Vec<Vec<f64>> = (0..panel.values.cols()).map(|j| panel.values.column(j)).collect();
    if kind == InputKind::Prices {
        columns = columns
            .iter()
            .map(|c| log_returns(c))
            .collect::<tailindex::Result<_>>()?;
    }
    let mut summaries = Vec::new();
    let mut warnings = Vec::new();
    if garch {
        let fits = columns
            .par_iter()
            .map(|c| fit_garch11(c, mean_included))
            .collect::<tailindex::Result<Vec<_>>>()?;
        for (name, fit) in names.iter().zip(&fits) {
            if !fit.converged {
                warnings.push(format!(
                    "GARCH fit for column {name} did not converge; its shocks are used as they are"
                ));
            }
            summaries.push(GarchSummary {
                column: name.clone(),
                params: fit.params,
                persistence: fit.params.persistence(),
                converged: fit.converged,
                iterations: fit.iterations,
                loglik: fit.loglik,
            });
        }
        columns = fits.into_iter().map(|f| f.shocks).collect();
    }
    let raw = RawSample::new(Table::from_columns(&columns)?, names)?;
    Ok(Prepared {
        raw,
        garch: summaries,
        warnings,
    })
}

pub struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Output {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).expect("serialisable") + "\n";
        self.write(name, &text)
    }

    pub fn finish(self) -> Vec<PathBuf> {
        self.written
    }
}

/// Table with a header row, values in shortest round-trip form.
pub fn table_csv(header: &[String], table: &Table) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in table.row_iter() {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
