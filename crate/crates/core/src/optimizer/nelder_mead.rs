//! Bounded Nelder–Mead on the unit cube.

/// Outcome of one simplex run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... or when the simplex diameter does.
    pub x_tol: f64,
    pub max_evals: usize,
    /// Edge of the initial simplex, in unit-cube coordinates.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { f_tol: 1e-10, x_tol: 1e-9, max_evals: 600, initial_step: 0.05 }
    }
}

fn clip(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimizes `f` over `[0, 1]^n` starting from `x0`. Trial points are
/// clipped into the cube. Non-finite values count as `+∞`.
pub fn minimize<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clip(&mut start);
    simplex.push(start.clone());
    for i in 0..n {
        let mut v = start.clone();
        v[i] = if v[i] + opts.initial_step <= 1.0 { v[i] + opts.initial_step } else { v[i] - opts.initial_step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.is_finite() && (spread <= opts.f_tol || diameter <= opts.x_tol) {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect();
            clip(&mut p);
            p
        };

        let xr = along(-alpha);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(-alpha * gamma);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let p: Vec<f64> = (0..n).map(|j| simplex[0][j] + sigma * (simplex[i][j] - simplex[0][j])).collect();
            values[i] = eval(&p);
            simplex[i] = p;
        }
    }
    Minimum { x: simplex[0].clone(), f: values[0], evals: evals.get(), converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 4.0 * (x[1] - 0.7).powi(2) + 1.0;
        let m = minimize(f, &[0.9, 0.1], &NelderMeadOptions { f_tol: 1e-14, ..Default::default() });
        assert!(m.converged);
        assert!((m.x[0] - 0.3).abs() < 1e-5 && (m.x[1] - 0.7).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| -x[0] + (x[1] - 0.5).powi(2);
        let m = minimize(f, &[0.5, 0.5], &NelderMeadOptions::default());
        assert!(m.x.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!((m.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reports_non_convergence() {
        let f = |x: &[f64]| (10.0 * x[0]).sin() + (13.0 * x[1]).cos();
        let m = minimize(f, &[0.5, 0.5], &NelderMeadOptions { max_evals: 5, ..Default::default() });
        assert!(!m.converged);
    }
}
