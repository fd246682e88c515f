//! Univariate normal and Student-t distribution functions, adaptive
//! quadrature and the bivariate Student-t CDF.

use libm::erfc;
use statrs::function::beta::{beta_reg, inv_beta_reg};
use statrs::function::erf::erfc_inv;
pub use statrs::function::gamma::ln_gamma;
use std::f64::consts::{PI, SQRT_2};

/// Largest double strictly below one.
pub const ONE_MINUS_EPS: f64 = 1.0 - f64::EPSILON / 2.0;

/// Clamps a probability into the open unit interval.
#[inline]
pub fn clamp_open_unit(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, ONE_MINUS_EPS)
}

#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    // One Halley step against the full-precision CDF.
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

#[inline]
pub fn normal_ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

/// Student-t CDF with `nu` degrees of freedom.
///
/// Near the origin the complementary incomplete-beta form is used so that
/// the absolute error stays at the level of the regularised beta function.
pub fn t_cdf(x: f64, nu: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if nu.is_infinite() {
        return normal_cdf(x);
    }
    let x2 = x * x;
    if x2 < nu {
        let half = 0.5 * beta_reg(0.5, 0.5 * nu, x2 / (nu + x2));
        if x < 0.0 {
            0.5 - half
        } else {
            0.5 + half
        }
    } else {
        let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + x2));
        if x < 0.0 {
            tail
        } else {
            1.0 - tail
        }
    }
}

pub fn t_ln_pdf(x: f64, nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln() - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()
}

#[inline]
pub fn t_pdf(x: f64, nu: f64) -> f64 {
    t_ln_pdf(x, nu).exp()
}

/// Student-t quantile: incomplete-beta inversion polished by Newton steps.
pub fn t_quantile(p: f64, nu: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        return -t_quantile(1.0 - p, nu);
    }
    let y = inv_beta_reg(0.5 * nu, 0.5, 2.0 * p);
    let mut x = -(nu * (1.0 - y) / y).sqrt();
    if !x.is_finite() {
        return x;
    }
    for _ in 0..3 {
        let dens = t_pdf(x, nu);
        if dens <= 0.0 || !dens.is_finite() {
            break;
        }
        let step = (t_cdf(x, nu) - p) / dens;
        let next = x - step;
        if !next.is_finite() || next >= 0.0 {
            break;
        }
        x = next;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = K15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for (i, &node) in GK_NODES[..7].iter().enumerate() {
        let dx = h * node;
        let pair = f(c - dx) + f(c + dx);
        kronrod += K15_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Result of [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate falls below `abs_tol` or `max_intervals` is reached.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, max_intervals: usize) -> Quadrature {
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= abs_tol || parts.len() >= max_intervals {
            break;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    // Summation in interval order so the value does not depend on split history.
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    Quadrature {
        value: parts.iter().map(|p| p.2).sum(),
        error: parts.iter().map(|p| p.3).sum(),
        intervals: parts.len(),
    }
}

/// Bivariate Student-t CDF `P(X <= x, Y <= y)` with `nu` degrees of freedom
/// and dispersion `[[1, r], [r, 1]]`.
///
/// Integrates the marginal density of `X` against the conditional CDF of `Y`,
/// which is Student-t with `nu + 1` degrees of freedom, location `r s` and
/// squared scale `(1 - r²)(nu + s²) / (nu + 1)`.
pub fn bivariate_t_cdf(x: f64, y: f64, r: f64, nu: f64) -> f64 {
    assert!(nu > 0.0, "degrees of freedom must be positive");
    assert!((-1.0..=1.0).contains(&r), "correlation out of range");
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return t_cdf(y, nu);
    }
    if y == f64::INFINITY {
        return t_cdf(x, nu);
    }
    if r == 1.0 {
        return t_cdf(x.min(y), nu);
    }
    if r == -1.0 {
        return (t_cdf(x, nu) + t_cdf(y, nu) - 1.0).max(0.0);
    }
    let one_minus_r2 = 1.0 - r * r;
    let cond = |s: f64| {
        let scale = ((one_minus_r2 * (nu + s * s)) / (nu + 1.0)).sqrt();
        t_cdf((y - r * s) / scale, nu + 1.0)
    };
    // s = x - w / (1 - w) maps [0, 1) onto (-inf, x].
    let integrand = |w: f64| {
        if w >= 1.0 {
            return 0.0;
        }
        let span = w / (1.0 - w);
        let s = x - span;
        let jac = 1.0 / ((1.0 - w) * (1.0 - w));
        let v = t_pdf(s, nu) * cond(s) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let q = integrate(integrand, 0.0, 1.0, 1e-11, 400);
    q.value.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_cdf_reference_values() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(1.959_963_984_540_054), 0.975, epsilon = 1e-13);
        assert_abs_diff_eq!(normal_cdf(-3.0), 0.001_349_898_031_630_094_6, epsilon = 1e-15);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-10, 0.001, 0.2, 0.5, 0.8, 0.999, 1.0 - 1e-10] {
            assert_abs_diff_eq!(normal_cdf(normal_quantile(p)), p, epsilon = 1e-14);
        }
    }

    #[test]
    fn t_cdf_reference_values() {
        // t_1 is Cauchy: F(x) = 1/2 + atan(x)/pi
        for &x in &[-50.0, -3.0, -1e-9, 0.0, 0.3, 2.5, 1e4] {
            let cauchy = 0.5 + f64::atan(x) / PI;
            assert_abs_diff_eq!(t_cdf(x, 1.0), cauchy, epsilon = 1e-13);
        }
        // t_2: F(x) = 1/2 + x / (2 sqrt(2 + x^2))
        for &x in &[-20.0f64, -1.0, 1e-12, 0.7, 4.0] {
            let exact = 0.5 + x / (2.0 * (2.0 + x * x).sqrt());
            assert_abs_diff_eq!(t_cdf(x, 2.0), exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn t_cdf_large_dof_is_normal() {
        for &x in &[-2.0, -0.5, 0.0, 1.0, 3.0] {
            assert_abs_diff_eq!(t_cdf(x, 1e8), normal_cdf(x), epsilon = 1e-7);
        }
    }

    #[test]
    fn t_quantile_inverts_cdf() {
        for &nu in &[2.01, 2.76733, 4.0, 7.5, 30.0] {
            for &p in &[1e-8, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
                let x = t_quantile(p, nu);
                assert_abs_diff_eq!(t_cdf(x, nu), p, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn t_pdf_integrates_to_one() {
        let q = integrate(
            |w| {
                if w <= -1.0 || w >= 1.0 {
                    return 0.0;
                }
                let s = w / (1.0 - w * w);
                t_pdf(s, 3.0) * (1.0 + w * w) / ((1.0 - w * w) * (1.0 - w * w))
            },
            -1.0,
            1.0,
            1e-12,
            200,
        );
        assert_abs_diff_eq!(q.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn quadrature_polynomial_is_exact() {
        let q = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14, 10);
        assert_abs_diff_eq!(q.value, 64.0 / 6.0 - 4.0, epsilon = 1e-12);
    }

    #[test]
    fn bivariate_t_orthant_matches_arcsine_law() {
        // P(X<0, Y<0) = 1/4 + asin(r) / (2 pi) for every centred elliptical law.
        for &nu in &[1.5, 3.76733, 8.0] {
            for &r in &[-0.8, -0.2, 0.0, 0.5, 0.767, 0.95] {
                let want = 0.25 + f64::asin(r) / (2.0 * PI);
                assert_abs_diff_eq!(bivariate_t_cdf(0.0, 0.0, r, nu), want, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn bivariate_t_matches_double_integral_of_density() {
        // Reference values from 30-digit two-dimensional integration of the
        // joint density, independent of the conditional-CDF route.
        let cases = [
            (1.1, 0.7, 0.624, 3.76733, 0.679_829_118_409_699),
            (0.9, 1.6, 0.767, 3.76733, 0.770_348_318_861_377_1),
            (-0.5, 2.0, -0.3, 5.0, 0.289_293_012_961_429_5),
        ];
        for (x, y, r, nu, want) in cases {
            assert_abs_diff_eq!(bivariate_t_cdf(x, y, r, nu), want, epsilon = 1e-8);
        }
    }

    #[test]
    fn bivariate_t_symmetry_and_limits() {
        let a = bivariate_t_cdf(0.4, 1.3, 0.6, 3.5);
        let b = bivariate_t_cdf(1.3, 0.4, 0.6, 3.5);
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        assert_abs_diff_eq!(
            bivariate_t_cdf(f64::INFINITY, f64::INFINITY, 0.3, 3.0),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(bivariate_t_cdf(60.0, 60.0, 0.3, 3.0), 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(
            bivariate_t_cdf(1.0, f64::INFINITY, 0.3, 3.0),
            t_cdf(1.0, 3.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn bivariate_t_large_dof_uncorrelated_is_product_of_normals() {
        for &(x, y) in &[(0.5, -0.3), (1.2, 2.0), (-1.0, -1.5)] {
            let want = normal_cdf(x) * normal_cdf(y);
            assert_abs_diff_eq!(bivariate_t_cdf(x, y, 0.0, 1e6), want, epsilon = 1e-4);
        }
    }
}
