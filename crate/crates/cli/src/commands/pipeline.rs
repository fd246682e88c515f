use crate::args::PipelineArgs;
use crate::commands::fit::{fit_model, FitSettings};
use crate::commands::index::curves_file;
use crate::data::{load_panel, parse_ties, prepare, table_csv, GarchSummary, Output};
use crate::{CliError, CliResult};
use serde::Serialize;
use std::path::{Path, PathBuf};
use tailindex::entropy_index::{index_curve, IndexSource};
use tailindex::envelope::{band_exceedance_report, envelopes, ExceedanceReport};
use tailindex::io::{encode_model_json, parse_grid_spec, parse_subsets, subset_tag, write_band_csv};
use tailindex::pseudo_obs::to_pseudo_observations;
use tailindex::rng::derive_seed;
use tailindex::{EnvelopeOptions, IndexKind};

#[derive(Serialize)]
struct ModelReport {
    model: &'static str,
    flags: Vec<String>,
    subsets: Vec<ExceedanceReport>,
}

#[derive(Serialize)]
struct Report<'a> {
    observations: usize,
    columns: &'a [String],
    garch: &'a [GarchSummary],
    warnings: &'a [String],
    simulated_rows: usize,
    replicates: usize,
    level: f64,
    seed: u64,
    models: Vec<ModelReport>,
}

pub fn run(args: &PipelineArgs, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let grid = parse_grid_spec(&args.grid)?;
    let ties = parse_ties(&args.input.ties)?;
    let mut models = args.models.clone();
    models.sort();
    models.dedup();
    if models.is_empty() {
        return Err(CliError::usage("models", "select at least one model"));
    }
    let prepared = prepare(
        load_panel(&args.input)?,
        args.input_kind,
        !args.no_garch,
        !args.zero_mean,
    )?;
    for w in &prepared.warnings {
        eprintln!("warning: {w}");
    }
    let raw = &prepared.raw;
    let subsets = parse_subsets(&args.subsets, raw.dim())?;
    let sample = to_pseudo_observations(raw, ties)?;
    let mut options = EnvelopeOptions::new(args.n.unwrap_or(raw.n()), args.replicates, args.level, args.seed);
    options.rerank_copula = args.rerank_copula;

    let mut out = Output::new(out_dir)?;
    if !args.no_garch {
        out.write("shocks.csv", &table_csv(raw.column_names(), raw.values()))?;
    }
    let data_curves = subsets
        .iter()
        .map(|s| index_curve(IndexSource::Sample(&sample), &grid, s, IndexKind::Shannon))
        .collect::<tailindex::Result<Vec<_>>>()?;
    for s in &subsets {
        out.write(
            &format!("data_curve_{}.csv", subset_tag(s)),
            &curves_file(&sample, &grid, s, &[IndexKind::Shannon])?,
        )?;
    }

    let settings = FitSettings {
        mixture_components: args.mixture_components,
        mixture_starts: args.mixture_starts,
        seed: derive_seed(args.seed, u64::MAX),
    };
    let mut reports = Vec::new();
    for model in models {
        let fit = fit_model(model, raw, &sample, &settings)?;
        out.write(&format!("model_{}.json", model.as_str()), &encode_model_json(&fit))?;
        let bands = envelopes(&fit, &subsets, &grid, &options)?;
        let mut per_subset = Vec::new();
        for (band, curve) in bands.iter().zip(&data_curves) {
            let report = band_exceedance_report(curve, band)?;
            out.write(
                &format!("band_{}_{}.csv", model.as_str(), subset_tag(&band.components)),
                &write_band_csv(band, Some((curve, &report))),
            )?;
            per_subset.push(report);
        }
        reports.push(ModelReport {
            model: model.as_str(),
            flags: fit.diagnostics.flags.clone(),
            subsets: per_subset,
        });
    }
    out.write_json(
        "report.json",
        &Report {
            observations: raw.n(),
            columns: raw.column_names(),
            garch: &prepared.garch,
            warnings: &prepared.warnings,
            simulated_rows: options.sample_size,
            replicates: options.replicates,
            level: options.level,
            seed: args.seed,
            models: reports,
        },
    )?;
    Ok(out.finish())
}
