use proptest::prelude::*;
use tailindex::copula::presets;
use tailindex::entropy_index::{
    cell_distribution_empirical, cell_distribution_exact, index_curve, index_shannon, index_tsallis, IndexSource,
};
use tailindex::envelope::envelopes;
use tailindex::extremal::{crossover_b0, sandwich_bounds, theta_empirical, DiagonalSource};
use tailindex::matrix::Table;
use tailindex::pseudo_obs::to_pseudo_observations;
use tailindex::{
    CopulaSpec, CorrelationMatrix, EnvelopeOptions, FittedCopula, IndexKind, RawSample, Threshold, ThresholdGrid,
    TieRule,
};

fn pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn raw_from_rows(rows: &[Vec<f64>]) -> RawSample {
    RawSample::unnamed(Table::from_rows(rows).unwrap()).unwrap()
}

fn panel() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..5, 8usize..80).prop_flat_map(|(k, n)| {
        prop::collection::vec(prop::collection::vec(-50i32..50, k), n).prop_map(|rows| {
            rows.into_iter()
                .map(|r| r.into_iter().map(f64::from).collect())
                .collect()
        })
    })
}

fn non_constant(rows: &[Vec<f64>]) -> bool {
    (0..rows[0].len()).all(|j| rows.iter().any(|r| r[j] != rows[0][j]))
}

fn b_strategy() -> impl Strategy<Value = f64> {
    0.05f64..0.97
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shannon_index_is_between_one_and_k(rows in panel(), b in b_strategy()) {
        prop_assume!(non_constant(&rows));
        let s = to_pseudo_observations(&raw_from_rows(&rows), TieRule::Average).unwrap();
        let b = Threshold::new(b).unwrap();
        let cells = cell_distribution_empirical(&s, b).unwrap();
        let n = s.n() as f64;
        prop_assert!((cells.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for p in cells.probs() {
            prop_assert!(((p * n) - (p * n).round()).abs() < 1e-9);
        }
        if let Ok(v) = index_shannon(&cells, b) {
            let k = s.dim() as f64;
            prop_assert!(v >= 1.0 - 1e-9 && v <= k + 1e-9, "S = {v}");
        }
    }

    #[test]
    fn indices_are_rank_invariant(rows in panel(), b in b_strategy()) {
        prop_assume!(non_constant(&rows));
        let mapped: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(j, &x)| match j % 3 {
                0 => (x / 10.0).exp(),
                1 => x * x * x + 7.0 * x,
                _ => (x / 30.0).atan() * 4.0 - 1.0,
            }).collect())
            .collect();
        let grid = ThresholdGrid::new(vec![b]).unwrap();
        let comps: Vec<usize> = (1..=rows[0].len()).collect();
        let a = to_pseudo_observations(&raw_from_rows(&rows), TieRule::Average).unwrap();
        let m = to_pseudo_observations(&raw_from_rows(&mapped), TieRule::Average).unwrap();
        prop_assert_eq!(a.values(), m.values());
        for kind in [IndexKind::Shannon, IndexKind::Tsallis { alpha: 2.0 }] {
            let x = index_curve(IndexSource::Sample(&a), &grid, &comps, kind);
            let y = index_curve(IndexSource::Sample(&m), &grid, &comps, kind);
            match (x, y) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x.values[0].to_bits(), y.values[0].to_bits()),
                (x, y) => prop_assert_eq!(x.is_err(), y.is_err()),
            }
        }
    }

    #[test]
    fn indices_ignore_row_and_column_order(rows in panel(), b in b_strategy(), shift in 0usize..1000) {
        prop_assume!(non_constant(&rows));
        let n = rows.len();
        let k = rows[0].len();
        let permuted_rows: Vec<Vec<f64>> = (0..n).map(|i| rows[(i * 7 + shift) % n].clone()).collect();
        prop_assume!({
            let mut seen = vec![false; n];
            (0..n).all(|i| !std::mem::replace(&mut seen[(i * 7 + shift) % n], true))
        });
        let permuted_cols: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().rev().copied().collect()).collect();
        let s0 = to_pseudo_observations(&raw_from_rows(&rows), TieRule::Average).unwrap();
        let s1 = to_pseudo_observations(&raw_from_rows(&permuted_rows), TieRule::Average).unwrap();
        let s2 = to_pseudo_observations(&raw_from_rows(&permuted_cols), TieRule::Average).unwrap();
        let b = Threshold::new(b).unwrap();
        let v: Vec<_> = [&s0, &s1, &s2].iter().map(|s| index_shannon(&cell_distribution_empirical(s, b).unwrap(), b).ok()).collect();
        match (v[0], v[1], v[2]) {
            (Some(a), Some(x), Some(y)) => {
                prop_assert!((a - x).abs() < 1e-12 && (a - y).abs() < 1e-12, "{a} {x} {y} k={k}");
            }
            _ => prop_assert!(v.iter().all(Option::is_none)),
        }
    }

    #[test]
    fn exact_gumbel_diagonal_gives_constant_theta(xi in 1.0f64..8.0, dim in 2usize..6, b in 0.01f64..0.9999) {
        let g = CopulaSpec::Gumbel { xi, dim };
        let th = theta_empirical(DiagonalSource::Exact(&g), Threshold::new(b).unwrap()).unwrap().theta;
        prop_assert!((th - (dim as f64).powf(1.0 / xi)).abs() < 1e-12);
        prop_assert!((1.0..=dim as f64).contains(&th));
    }

    #[test]
    fn exact_cells_sum_to_one(xi in 1.0f64..6.0, k in 2usize..7, b in 0.01f64..0.999) {
        let cells = cell_distribution_exact(&CopulaSpec::Gumbel { xi, dim: k }, Threshold::new(b).unwrap(), k).unwrap();
        prop_assert!((cells.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(cells.probs().iter().all(|p| (0.0..=1.0).contains(p)));
    }
}

#[test]
fn tsallis_approaches_shannon_linearly() {
    let b = Threshold::new(0.9).unwrap();
    for spec in [CopulaSpec::Independence { dim: 3 }, presets::gumbel_theta_two()] {
        let cells = cell_distribution_exact(&spec, b, 3).unwrap();
        let s = index_shannon(&cells, b).unwrap();
        let c = (index_tsallis(&cells, b, 1.0 + 1e-3).unwrap() - s).abs() / 1e-3 * 1.5;
        for delta in [1e-4, 1e-5, 1e-6] {
            assert!(
                (index_tsallis(&cells, b, 1.0 + delta).unwrap() - s).abs() <= c * delta,
                "{}",
                spec.family()
            );
        }
    }
}

#[test]
fn sandwich_holds_above_crossover() {
    for alpha in [1.5, 2.0, 4.0] {
        let b0 = crossover_b0(alpha);
        assert_eq!(b0, 0.0);
        let lo = b0 + 0.01;
        let grid = ThresholdGrid::new((0..50).map(|i| lo + (0.9999 - lo) * i as f64 / 49.0).collect()).unwrap();
        for theta in [1.2f64, 2.0, 2.8] {
            let xi = 3f64.ln() / theta.ln();
            let c = sandwich_bounds(&CopulaSpec::Gumbel { xi, dim: 3 }, &grid, alpha).unwrap();
            for i in 0..50 {
                assert!(
                    c.g1[i] <= c.t[i] + 1e-12 && c.t[i] <= c.g2[i] + 1e-12,
                    "alpha {alpha} theta {theta} b {}",
                    grid.values()[i]
                );
            }
        }
    }
}

#[test]
fn ev_index_is_closer_to_theta_at_high_threshold() {
    let grid = ThresholdGrid::new(vec![0.8, 0.995]).unwrap();
    for theta in [1.2f64, 2.0, 2.8] {
        let g = CopulaSpec::Gumbel {
            xi: 3f64.ln() / theta.ln(),
            dim: 3,
        };
        for alpha in [1.5, 2.0, 4.0] {
            let t = sandwich_bounds(&g, &grid, alpha).unwrap().t;
            assert!(
                (t[1] - theta).abs() < (t[0] - theta).abs(),
                "theta {theta} alpha {alpha}: {t:?}"
            );
        }
        let s = index_curve(IndexSource::Exact(&g), &grid, &[1, 2, 3], IndexKind::Shannon)
            .unwrap()
            .values;
        assert!((s[1] - theta).abs() < (s[0] - theta).abs());
    }
}

#[test]
fn sampling_is_identical_across_thread_counts() {
    let rho = CorrelationMatrix::equicorrelated(4, 0.4).unwrap();
    let specs = [
        CopulaSpec::Student {
            nu: 4.0,
            rho: rho.clone(),
        },
        CopulaSpec::Gaussian { rho },
        presets::gumbel_theta_two(),
        CopulaSpec::GaussianMixture {
            weights: vec![0.7, 0.3],
            means: vec![vec![0.0, 0.0], vec![2.0, -1.0]],
            covariances: vec![
                vec![vec![1.0, 0.3], vec![0.3, 1.0]],
                vec![vec![0.5, 0.0], vec![0.0, 2.0]],
            ],
        },
    ];
    for spec in specs {
        let one = pool(1, || spec.sample(40_000, 17).unwrap());
        let four = pool(4, || spec.sample(40_000, 17).unwrap());
        assert_eq!(one.values, four.values, "{}", spec.family());
    }
}

#[test]
fn envelopes_are_deterministic_and_nested() {
    let model = FittedCopula::fixed(CopulaSpec::Gaussian {
        rho: CorrelationMatrix::equicorrelated(3, 0.5).unwrap(),
    });
    let grid = ThresholdGrid::new(vec![0.85, 0.9, 0.95, 0.99]).unwrap();
    let subsets = vec![vec![1, 2], vec![1, 2, 3]];
    let o95 = EnvelopeOptions::new(1500, 120, 0.95, 2024);
    let o99 = EnvelopeOptions { level: 0.99, ..o95 };
    let a = pool(1, || envelopes(&model, &subsets, &grid, &o95).unwrap());
    let b = pool(3, || envelopes(&model, &subsets, &grid, &o95).unwrap());
    assert_eq!(a, b);
    let wide = envelopes(&model, &subsets, &grid, &o99).unwrap();
    for (narrow, wide) in a.iter().zip(&wide) {
        for i in 0..grid.len() {
            assert!(narrow.lower[i] <= narrow.upper[i]);
            assert!(wide.lower[i] <= narrow.lower[i] && narrow.upper[i] <= wide.upper[i]);
        }
    }
}

#[test]
fn adding_replicates_keeps_earlier_ones() {
    let model = FittedCopula::fixed(CopulaSpec::Independence { dim: 2 });
    let grid = ThresholdGrid::new(vec![0.9]).unwrap();
    let short =
        tailindex::envelope::replicate_curves(&model, &[vec![1, 2]], &grid, &EnvelopeOptions::new(300, 10, 0.9, 5))
            .unwrap();
    let long =
        tailindex::envelope::replicate_curves(&model, &[vec![1, 2]], &grid, &EnvelopeOptions::new(300, 25, 0.9, 5))
            .unwrap();
    assert_eq!(short[..], long[..10]);
}
