use crate::args::IndexArgs;
use crate::data::{load_panel, parse_ties, Output};
use crate::CliResult;
use std::path::{Path, PathBuf};
use tailindex::entropy_index::{index_curve, IndexSource};
use tailindex::io::{parse_alpha_list, parse_grid_spec, parse_subsets, subset_tag, write_curves_csv};
use tailindex::pseudo_obs::to_pseudo_observations;
use tailindex::{IndexKind, PseudoSample, ThresholdGrid};

pub fn index_kinds(alpha: Option<&str>) -> CliResult<Vec<IndexKind>> {
    let mut kinds = vec![IndexKind::Shannon];
    if let Some(a) = alpha {
        kinds.extend(
            parse_alpha_list(a)?
                .into_iter()
                .map(|alpha| IndexKind::Tsallis { alpha }),
        );
    }
    Ok(kinds)
}

pub fn curves_file(
    sample: &PseudoSample,
    grid: &ThresholdGrid,
    subset: &[usize],
    kinds: &[IndexKind],
) -> CliResult<String> {
    let curves = kinds
        .iter()
        .map(|&k| index_curve(IndexSource::Sample(sample), grid, subset, k))
        .collect::<tailindex::Result<Vec<_>>>()?;
    Ok(write_curves_csv(&curves)?)
}

pub fn run(args: &IndexArgs, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let grid = parse_grid_spec(&args.grid)?;
    let kinds = index_kinds(args.alpha.as_deref())?;
    let ties = parse_ties(&args.input.ties)?;
    let raw = load_panel(&args.input)?.into_raw_sample()?;
    let subsets = parse_subsets(&args.subsets, raw.dim())?;
    let sample = to_pseudo_observations(&raw, ties)?;
    let mut out = Output::new(out_dir)?;
    for s in &subsets {
        out.write(
            &format!("index_curve_{}.csv", subset_tag(s)),
            &curves_file(&sample, &grid, s, &kinds)?,
        )?;
    }
    Ok(out.finish())
}
