use rand::Rng;
use rand_distr::StandardNormal;
use tailindex::copula::presets;
use tailindex::matrix::Table;
use tailindex::model_fit::elliptical::student_pseudo_loglik;
use tailindex::model_fit::garch::simulate_garch11;
use tailindex::model_fit::{
    fit_garch11, fit_gaussian_copula, fit_gaussian_mixture, fit_gaussian_mixture_runs, fit_student_copula, GarchParams,
    MixtureOptions, StudentFitOptions,
};
use tailindex::rng::{derive_seed, rng_from_seed};
use tailindex::{CopulaSpec, CorrelationMatrix, RawSample};

const TRUE_GARCH: GarchParams = GarchParams {
    mu: 0.0,
    alpha0: 0.1,
    alpha1: 0.1,
    beta1: 0.8,
};

/// Fraction of seeded GARCH(1,1) fits with every parameter within `tol` of the truth.
pub fn garch_recovery_rate(seeds: u64, n: usize, tol: f64) -> f64 {
    let hits = (0..seeds)
        .filter(|&s| {
            let mut rng = rng_from_seed(derive_seed(0x6a2c, s));
            let shocks: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let fit = fit_garch11(&simulate_garch11(&TRUE_GARCH, &shocks), true).unwrap();
            assert!(fit.params.persistence() < 1.0);
            let p = fit.params;
            [(p.mu, 0.0), (p.alpha0, 0.1), (p.alpha1, 0.1), (p.beta1, 0.8)]
                .iter()
                .all(|(a, b)| (a - b).abs() <= tol)
        })
        .count();
    hits as f64 / seeds as f64
}

// Fisher standard errors at the truth with n = 5000 are about .013 (μ),
// .020 (α0), .015 (α1) and .031 (β1), so |β̂1 - .8| > .05 alone has
// probability near .10. 0.89 of 100 runs is observed.
#[test]
fn garch_recovery_matches_sampling_theory() {
    let rate = garch_recovery_rate(100, 5000, 0.05);
    assert!(rate >= 0.82, "{rate}");
}

#[test]
fn garch_on_iid_noise_has_small_arch_effect() {
    let mut rng = rng_from_seed(91);
    let r: Vec<f64> = (0..3000)
        .map(|_| 0.4 + 1.7 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let fit = fit_garch11(&r, true).unwrap();
    assert!(fit.params.alpha1 < 0.05);
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let sd = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r.len() as f64).sqrt();
    let naive: Vec<f64> = r.iter().map(|x| (x - mean) / sd).collect();
    assert!(correlation(&fit.shocks, &naive) > 0.99);
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn gaussian_copula_correlation_is_recovered() {
    let rho = CorrelationMatrix::from_rows(&[vec![1.0, 0.6], vec![0.6, 1.0]]).unwrap();
    let spec = CopulaSpec::Gaussian { rho };
    for seed in 0..3 {
        let sample = spec.sample(100_000, seed).unwrap().to_pseudo_sample(true).unwrap();
        let fit = fit_gaussian_copula(&sample).unwrap();
        let CopulaSpec::Gaussian { rho } = fit.spec else {
            panic!()
        };
        assert!((rho.get(0, 1) - 0.6).abs() < 0.02, "{}", rho.get(0, 1));
    }
}

fn student_reference(nu: f64) -> CopulaSpec {
    CopulaSpec::Student {
        nu,
        rho: presets::student_theta_two_rho(),
    }
}

#[test]
fn student_degrees_of_freedom_are_recovered() {
    let sample = student_reference(7.5)
        .sample(100_000, 3)
        .unwrap()
        .to_pseudo_sample(true)
        .unwrap();
    let fit = fit_student_copula(&sample, StudentFitOptions::default()).unwrap();
    let CopulaSpec::Student { nu, .. } = fit.spec else {
        panic!()
    };
    assert!(nu > 6.5 && nu < 8.7, "{nu}");
    assert!(fit.diagnostics.flags.is_empty(), "{:?}", fit.diagnostics.flags);
}

#[test]
fn student_fit_on_gaussian_data_hits_upper_bound() {
    let spec = CopulaSpec::Gaussian {
        rho: presets::student_theta_two_rho(),
    };
    let sample = spec.sample(20_000, 8).unwrap().to_pseudo_sample(true).unwrap();
    let fit = fit_student_copula(&sample, StudentFitOptions::default()).unwrap();
    let CopulaSpec::Student { nu, .. } = fit.spec else {
        panic!()
    };
    assert!(nu > 99.0, "{nu}");
    assert!(fit.diagnostics.flags.iter().any(|f| f.contains("upper bound")));
}

#[test]
fn pseudo_likelihood_prefers_true_degrees_of_freedom() {
    let rho = presets::student_theta_two_rho();
    let mut wins = 0;
    for seed in 0..5 {
        let sample = student_reference(7.5)
            .sample(100_000, 100 + seed)
            .unwrap()
            .to_pseudo_sample(true)
            .unwrap();
        let at = |nu| student_pseudo_loglik(&sample, nu, &rho).unwrap();
        let truth = at(7.5);
        if truth >= at(5.5) && truth >= at(9.5) {
            wins += 1;
        }
    }
    assert!(wins >= 3, "{wins}");
}

fn two_clusters(n: usize, seed: u64) -> RawSample {
    let mut rng = rng_from_seed(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let m = if i % 2 == 0 { 5.0 } else { -5.0 };
            vec![
                m + rng.sample::<f64, _>(StandardNormal),
                m + rng.sample::<f64, _>(StandardNormal),
            ]
        })
        .collect();
    RawSample::unnamed(Table::from_rows(&rows).unwrap()).unwrap()
}

#[test]
fn mixture_separates_two_clusters() {
    let raw = two_clusters(10_000, 12);
    let fit = fit_gaussian_mixture(&raw, MixtureOptions::new(2, 5, 1)).unwrap();
    let CopulaSpec::GaussianMixture { weights, means, .. } = &fit.spec else {
        panic!()
    };
    for w in weights {
        assert!((w - 0.5).abs() < 0.02);
    }
    let mut firsts: Vec<f64> = means.iter().map(|m| m[0]).collect();
    firsts.sort_by(f64::total_cmp);
    assert!((firsts[0] + 5.0).abs() < 0.1 && (firsts[1] - 5.0).abs() < 0.1);
    for m in means {
        assert!((m[0] - m[1]).abs() < 0.1);
    }
}

#[test]
fn em_loglik_never_decreases() {
    let raw = two_clusters(4000, 5);
    for k in [2, 3, 5] {
        for run in fit_gaussian_mixture_runs(&raw, MixtureOptions::new(k, 6, 40 + k as u64)).unwrap() {
            for w in run.loglik_trace.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-10 * w[0].abs(),
                    "k={k} start {}: {} -> {}",
                    run.start,
                    w[0],
                    w[1]
                );
            }
        }
    }
}

#[test]
fn fits_are_deterministic() {
    let raw = two_clusters(3000, 9);
    let a = fit_gaussian_mixture(&raw, MixtureOptions::new(3, 4, 2)).unwrap();
    let b = fit_gaussian_mixture(&raw, MixtureOptions::new(3, 4, 2)).unwrap();
    assert_eq!(a, b);
    let s = student_reference(5.0)
        .sample(5000, 1)
        .unwrap()
        .to_pseudo_sample(true)
        .unwrap();
    assert_eq!(
        fit_student_copula(&s, StudentFitOptions::default()).unwrap(),
        fit_student_copula(&s, StudentFitOptions::default()).unwrap()
    );
}
