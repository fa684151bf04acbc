//! Bounded Nelder–Mead.
//!
//! Trial points are clamped into the box. Convergence is declared when every
//! vertex lies within `tolerance·scale_i` of the best one along each axis.

#[derive(Debug, Clone)]
pub struct Options {
    pub max_iterations: usize,
    /// Relative to each parameter's scale.
    pub tolerance: f64,
    /// Initial simplex edge, relative to each parameter's scale.
    pub initial_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-6,
            initial_step: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct Bounds<'a> {
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

impl Bounds<'_> {
    fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(self.lower).zip(self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn scale(&self, i: usize) -> f64 {
        (self.upper[i] - self.lower[i]).abs().max(f64::EPSILON)
    }
}

pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, start: &[f64], bounds: &Bounds<'_>, opts: &Options) -> Minimum {
    let n = start.len();
    let mut x0 = start.to_vec();
    bounds.clamp(&mut x0);
    if n == 0 {
        let value = f(&x0);
        return Minimum {
            x: x0,
            value,
            iterations: 0,
            converged: true,
        };
    }

    let mut simplex: Vec<Vec<f64>> = vec![x0.clone()];
    for i in 0..n {
        let mut v = x0.clone();
        let step = opts.initial_step * bounds.scale(i);
        // step away from the nearer bound so the vertex stays distinct
        v[i] = if v[i] + step <= bounds.upper[i] { v[i] + step } else { v[i] - step };
        bounds.clamp(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter_ok = simplex[1..]
            .iter()
            .all(|v| (0..n).all(|i| (v[i] - simplex[0][i]).abs() <= opts.tolerance * bounds.scale(i)));
        if diameter_ok {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n).map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..n).map(|i| centroid[i] + t * (simplex[n][i] - centroid[i])).collect();
            bounds.clamp(&mut p);
            p
        };

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
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let p = along(-0.5);
            let fp = f(&p);
            (p, fp)
        } else {
            let p = along(0.5);
            let fp = f(&p);
            (p, fp)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        // shrink towards the best vertex
        for k in 1..=n {
            let mut p: Vec<f64> = (0..n).map(|i| simplex[0][i] + 0.5 * (simplex[k][i] - simplex[0][i])).collect();
            bounds.clamp(&mut p);
            values[k] = f(&p);
            simplex[k] = p;
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("non-empty simplex");
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}
