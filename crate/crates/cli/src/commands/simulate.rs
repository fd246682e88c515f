use crate::args::{Family, SimulateArgs};
use crate::data::{table_csv, Output};
use crate::{CliError, CliResult};
use std::fs;
use std::path::{Path, PathBuf};
use tailindex::copula::SampleSpace;
use tailindex::io::decode_model_json;
use tailindex::{CopulaSpec, CorrelationMatrix};

/// Full matrix from its upper triangle listed row by row.
pub fn correlation_from_upper(values: &[f64]) -> CliResult<CorrelationMatrix> {
    let mut k = 2;
    while k * (k - 1) / 2 < values.len() {
        k += 1;
    }
    if k * (k - 1) / 2 != values.len() {
        return Err(CliError::usage(
            "rho",
            format!("{} values is not an upper triangle", values.len()),
        ));
    }
    let mut rows = vec![vec![1.0; k]; k];
    let mut it = values.iter();
    for i in 0..k {
        for j in (i + 1)..k {
            let v = *it.next().unwrap();
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    Ok(CorrelationMatrix::from_rows(&rows)?)
}

fn require<T: Copy>(v: Option<T>, field: &'static str, family: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::usage(field, format!("required for the {family} family")))
}

fn spec_from_args(args: &SimulateArgs) -> CliResult<CopulaSpec> {
    if let Some(path) = &args.model {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        return Ok(decode_model_json(&text)?.spec);
    }
    let family = args
        .family
        .ok_or_else(|| CliError::usage("family", "give --family or --model"))?;
    let rho = || -> CliResult<CorrelationMatrix> {
        correlation_from_upper(
            args.rho
                .as_deref()
                .ok_or_else(|| CliError::usage("rho", "required for elliptical families"))?,
        )
    };
    let spec = match family {
        Family::Independence => CopulaSpec::Independence {
            dim: require(args.dim, "dim", "independence")?,
        },
        Family::Comonotone => CopulaSpec::Comonotone {
            dim: require(args.dim, "dim", "comonotone")?,
        },
        Family::Gumbel => CopulaSpec::Gumbel {
            xi: require(args.xi, "xi", "gumbel")?,
            dim: require(args.dim, "dim", "gumbel")?,
        },
        Family::Gaussian => CopulaSpec::Gaussian { rho: rho()? },
        Family::Student => CopulaSpec::Student {
            nu: require(args.nu, "nu", "student")?,
            rho: rho()?,
        },
    };
    spec.validate()?;
    Ok(spec)
}

pub fn run(args: &SimulateArgs, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let spec = spec_from_args(args)?;
    let batch = spec.sample(args.n, args.seed)?;
    let prefix = if batch.space == SampleSpace::Uniform { "U" } else { "X" };
    let header: Vec<String> = (1..=spec.dim()).map(|j| format!("{prefix}{j}")).collect();
    let mut out = Output::new(out_dir)?;
    out.write(&args.output, &table_csv(&header, &batch.values))?;
    Ok(out.finish())
}
