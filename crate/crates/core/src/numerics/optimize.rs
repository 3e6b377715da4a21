//! Derivative-free minimizers used by the variance-component fits.

/// Outcome of a minimization.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
) -> Minimum {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (hi - lo).abs() > x_tol && iterations < max_iter {
        iterations += 1;
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let (x, value) = if fc < fd { (c, fc) } else { (d, fd) };
    Minimum { x: vec![x], value, iterations, converged: (hi - lo).abs() <= x_tol }
}

/// Newton iterations on a one-dimensional objective with central-difference
/// derivatives. Steps that raise the objective beyond `noise` are refused.
pub fn newton_polish<F: FnMut(f64) -> f64>(
    mut f: F,
    start: Minimum,
    step: f64,
    max_iter: usize,
    noise: f64,
) -> Minimum {
    let mut x = start.x[0];
    let mut fx = start.value;
    let mut iterations = start.iterations;
    for _ in 0..max_iter {
        let fp = f(x + step);
        let fm = f(x - step);
        let g = (fp - fm) / (2.0 * step);
        let h = (fp - 2.0 * fx + fm) / (step * step);
        if !(h > 0.0) || !g.is_finite() {
            break;
        }
        let delta = -g / h;
        if delta.abs() > 1.0 {
            break;
        }
        let x_new = x + delta;
        let f_new = f(x_new);
        iterations += 1;
        if f_new > fx + noise {
            break;
        }
        x = x_new;
        fx = f_new;
        if delta.abs() < 1e-12 {
            break;
        }
    }
    Minimum { x: vec![x], value: fx, iterations, converged: start.converged }
}

/// Nelder–Mead simplex minimizer.
///
/// Stops when the spread of simplex values falls below
/// `rel_tol × (|f_best| + rel_tol)` or after `max_iter` iterations.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    initial_step: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Minimum {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[n] - values[0]).abs();
        if spread <= rel_tol * (values[0].abs() + rel_tol) {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(&c, &w)| c + t * (w - c)).collect() };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let (contracted, fc) = if fr < values[n] {
                let c = along(-0.5);
                let fc = f(&c);
                (c, fc)
            } else {
                let c = along(0.5);
                let fc = f(&c);
                (c, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                // shrink toward the best vertex
                for i in 1..=n {
                    let best = simplex[0].clone();
                    for (x, b) in simplex[i].iter_mut().zip(&best) {
                        *x = b + 0.5 * (*x - b);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    Minimum { x: simplex[0].clone(), value: values[0], iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_then_newton_finds_parabola_minimum() {
        let f = |x: f64| (x - 1.3).powi(2) + 0.5;
        let m = golden_section(f, -5.0, 5.0, 1e-6, 200);
        let m = newton_polish(f, m, 1e-4, 5, 0.0);
        assert!((m.x[0] - 1.3).abs() < 1e-9);
        assert!(m.converged);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |v: &[f64]| (1.0 - v[0]).powi(2) + 100.0 * (v[1] - v[0] * v[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], 0.5, 1e-14, 5000);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn nelder_mead_reports_iteration_cap() {
        let f = |v: &[f64]| (1.0 - v[0]).powi(2) + 100.0 * (v[1] - v[0] * v[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], 0.5, 1e-14, 5);
        assert!(!m.converged);
        assert_eq!(m.iterations, 5);
    }
}
