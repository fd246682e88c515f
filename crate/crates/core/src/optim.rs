//! Derivative-free minimisers.

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex minimisation with standard coefficients.
///
/// Stops when the spread of function values across the simplex falls below
/// `f_tol` (relative to the best value, floored at one) and the simplex
/// diameter falls below `x_tol`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: &[f64],
    f_tol: f64,
    x_tol: f64,
    max_iter: usize,
) -> Minimum {
    let dim = start.len();
    let eval = |f: &mut F, x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for i in 0..dim {
        let mut p = start.to_vec();
        p[i] += step[i];
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(&mut f, p)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[dim] - values[0]).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= f_tol * values[0].abs().max(1.0) && diameter <= x_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|p| p[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let reflected = along(1.0);
        let fr = eval(&mut f, &reflected);
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = eval(&mut f, &expanded);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[dim] {
            let c = along(0.5);
            let v = eval(&mut f, &c);
            (c, v)
        } else {
            let c = along(-0.5);
            let v = eval(&mut f, &c);
            (c, v)
        };
        if fc < values[dim].min(fr) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=dim {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(p, b)| b + 0.5 * (p - b))
                .collect();
            values[i] = eval(&mut f, &shrunk);
            simplex[i] = shrunk;
        }
    }
    let best = (0..=dim).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64, usize) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    let mut iterations = 0;
    while hi - lo > tol {
        iterations += 1;
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    if fa <= fb {
        (a, fa, iterations)
    } else {
        (b, fb, iterations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let m = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.5, 0.5],
            1e-14,
            1e-9,
            10_000,
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn golden_quadratic() {
        let (x, v, _) = golden_section(|x| (x - 0.3).powi(2) + 2.0, -1.0, 4.0, 1e-8);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn golden_boundary_minimum() {
        let (x, _, _) = golden_section(|x| x, 1.0, 2.0, 1e-6);
        assert!(x - 1.0 < 1e-6);
    }
}
