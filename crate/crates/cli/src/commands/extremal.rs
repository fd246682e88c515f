use crate::args::{ExtremalArgs, Preset};
use crate::commands::simulate::correlation_from_upper;
use crate::data::Output;
use crate::{CliError, CliResult};
use serde::Serialize;
use std::fmt::Write;
use std::path::{Path, PathBuf};
use tailindex::copula::presets;
use tailindex::entropy_index::{index_curve, IndexSource};
use tailindex::extremal::{
    convergence_report, crossover_b0, theta_empirical, theta_gumbel, theta_student, DiagonalSource,
};
use tailindex::io::{parse_alpha_list, parse_grid_spec, write_curves_csv};
use tailindex::rng::derive_seed;
use tailindex::{CopulaSpec, ExtremalCoefficient, IndexKind, StudentArgument, StudentDispersion};

#[derive(Serialize)]
struct StudentTheta {
    argument: StudentArgument,
    dispersion: StudentDispersion,
    theta: f64,
    /// The convention used by default.
    validated: bool,
}

#[derive(Serialize)]
struct FamilyResult {
    family: &'static str,
    model: CopulaSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<ExtremalCoefficient>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    student_conventions: Vec<StudentTheta>,
    /// Diagonal estimate from the simulated sample at the highest threshold.
    empirical: ExtremalCoefficient,
    simulated_rows: usize,
    seed: u64,
    curve_file: String,
}

fn families(args: &ExtremalArgs) -> CliResult<Vec<CopulaSpec>> {
    let mut specs = Vec::new();
    if args.preset == Some(Preset::AppendixB) {
        specs.push(presets::gumbel_theta_two());
        specs.push(presets::student_theta_two());
    }
    if let Some(xi) = args.gumbel_xi {
        let spec = CopulaSpec::Gumbel { xi, dim: args.j };
        spec.validate()?;
        specs.push(spec);
    }
    match (args.student_nu, &args.student_rho) {
        (Some(nu), Some(rho)) => {
            let spec = CopulaSpec::Student {
                nu,
                rho: correlation_from_upper(rho)?,
            };
            spec.validate()?;
            specs.push(spec);
        }
        (None, None) => {}
        _ => return Err(CliError::usage("student", "--student-nu and --student-rho go together")),
    }
    if specs.is_empty() {
        return Err(CliError::usage(
            "model",
            "give --preset, --gumbel-xi or --student-nu with --student-rho",
        ));
    }
    Ok(specs)
}

pub fn run(args: &ExtremalArgs, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let grid = parse_grid_spec(&args.grid)?;
    let alphas = parse_alpha_list(&args.alpha)?;
    let specs = families(args)?;
    let top = *grid.thresholds().last().expect("grid is never empty");
    let mut out = Output::new(out_dir)?;
    let mut results = Vec::new();
    let mut report = String::from("family,b,alpha,S,T,g1,g2,theta,b0\n");
    for (i, spec) in specs.iter().enumerate() {
        let family = spec.family();
        let seed = derive_seed(args.seed, i as u64);
        let sample = spec.sample(args.n, seed)?.to_pseudo_sample(false)?;
        let components: Vec<usize> = (1..=spec.dim()).collect();
        let curve = index_curve(IndexSource::Sample(&sample), &grid, &components, IndexKind::Shannon)?;
        let curve_file = format!("curve_{}_{}.csv", i + 1, family);
        out.write(&curve_file, &write_curves_csv(&[curve])?)?;
        let empirical = theta_empirical(DiagonalSource::Sample(&sample), top)?;
        let (theta, student_conventions) = match spec {
            CopulaSpec::Gumbel { xi, dim } => {
                for row in convergence_report(spec, &alphas, &grid)? {
                    writeln!(
                        report,
                        "{family},{},{},{},{},{},{},{},{}",
                        row.b,
                        row.alpha,
                        row.s,
                        row.t,
                        row.g1,
                        row.g2,
                        row.theta,
                        crossover_b0(row.alpha)
                    )
                    .unwrap();
                }
                (Some(theta_gumbel(*xi, *dim)?), Vec::new())
            }
            CopulaSpec::Student { nu, rho } if rho.dim() == 3 => {
                let mut all = Vec::new();
                for argument in [StudentArgument::EllipticalExtremes, StudentArgument::Printed] {
                    for dispersion in [StudentDispersion::Submatrix, StudentDispersion::PartialCorrelation] {
                        all.push(StudentTheta {
                            argument,
                            dispersion,
                            theta: theta_student(*nu, rho, argument, dispersion)?.theta,
                            validated: argument == StudentArgument::default()
                                && dispersion == StudentDispersion::default(),
                        });
                    }
                }
                let chosen = theta_student(*nu, rho, StudentArgument::default(), StudentDispersion::default())?;
                (Some(chosen), all)
            }
            _ => (None, Vec::new()),
        };
        results.push(FamilyResult {
            family,
            model: spec.clone(),
            theta,
            student_conventions,
            empirical,
            simulated_rows: args.n,
            seed,
            curve_file,
        });
    }
    out.write("convergence_report.csv", &report)?;
    out.write_json("theta.json", &results)?;
    Ok(out.finish())
}
