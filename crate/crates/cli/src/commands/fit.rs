use crate::args::{FitArgs, ModelName};
use crate::data::{load_panel, parse_ties, prepare, Output};
use crate::CliResult;
use std::path::{Path, PathBuf};
use tailindex::io::encode_model_json;
use tailindex::model_fit::{
    fit_gaussian_copula, fit_gaussian_mixture, fit_student_copula, MixtureOptions, StudentFitOptions,
};
use tailindex::pseudo_obs::to_pseudo_observations;
use tailindex::{FittedCopula, PseudoSample, RawSample};

pub struct FitSettings {
    pub mixture_components: usize,
    pub mixture_starts: usize,
    pub seed: u64,
}

/// Copulas are fitted to the pseudo-observations, the mixture to `raw`.
pub fn fit_model(model: ModelName, raw: &RawSample, sample: &PseudoSample, s: &FitSettings) -> CliResult<FittedCopula> {
    Ok(match model {
        ModelName::Gaussian => fit_gaussian_copula(sample)?,
        ModelName::Student => fit_student_copula(sample, StudentFitOptions::default())?,
        ModelName::Mixture => {
            fit_gaussian_mixture(raw, MixtureOptions::new(s.mixture_components, s.mixture_starts, s.seed))?
        }
    })
}

pub fn run(args: &FitArgs, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let ties = parse_ties(&args.input.ties)?;
    let prepared = prepare(load_panel(&args.input)?, args.input_kind, args.garch, !args.zero_mean)?;
    for w in &prepared.warnings {
        eprintln!("warning: {w}");
    }
    let sample = to_pseudo_observations(&prepared.raw, ties)?;
    let settings = FitSettings {
        mixture_components: args.mixture_components,
        mixture_starts: args.mixture_starts,
        seed: args.seed,
    };
    let fit = fit_model(args.model, &prepared.raw, &sample, &settings)?;
    let mut out = Output::new(out_dir)?;
    out.write(&format!("model_{}.json", args.model.as_str()), &encode_model_json(&fit))?;
    if args.garch {
        out.write_json("garch.json", &prepared.garch)?;
    }
    Ok(out.finish())
}
