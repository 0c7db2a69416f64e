//! Nelder-Mead downhill simplex minimization.

/// Stopping rule and initial simplex size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Stop once the largest vertex-to-vertex distance falls below this.
    pub diameter_tol: f64,
    pub max_iterations: usize,
    /// Offset added to each coordinate of the start to build the simplex.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            diameter_tol: 1e-8,
            max_iterations: 2000,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn eval(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut widest: f64 = 0.0;
    for (i, a) in simplex.iter().enumerate() {
        for b in &simplex[i + 1..] {
            let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
            widest = widest.max(d2.sqrt());
        }
    }
    widest
}

fn toward(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimizes `f` from `x0` with the standard coefficients (reflection 1,
/// expansion 2, contraction 1/2, shrink 1/2). NaN objective values count
/// as +∞. The search is fully deterministic.
pub fn minimize(f: impl Fn(&[f64]) -> f64, x0: &[f64], options: SimplexOptions) -> SimplexResult {
    let n = x0.len();
    if n == 0 {
        return SimplexResult {
            x: Vec::new(),
            value: eval(&f, x0),
            iterations: 0,
            converged: true,
        };
    }
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += options.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(&f, v)).collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if diameter(&simplex) < options.diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflected = toward(&centroid, &worst, -1.0);
        let fr = eval(&f, &reflected);

        if fr < values[0] {
            let expanded = toward(&centroid, &worst, -2.0);
            let fe = eval(&f, &expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (candidate, fc) = if fr < values[n] {
            let c = toward(&centroid, &reflected, 0.5);
            let v = eval(&f, &c);
            (c, v)
        } else {
            let c = toward(&centroid, &worst, 0.5);
            let v = eval(&f, &c);
            (c, v)
        };
        if fc < values[n].min(fr) {
            simplex[n] = candidate;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            simplex[i] = toward(&best, &simplex[i], 0.5);
            values[i] = eval(&f, &simplex[i]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    SimplexResult {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}
