//! Small dense optimizers used by reconstruction and discord searches.

/// Derivative-free simplex minimizer.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub initial_step: f64,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { initial_step: 0.05, f_tol: 1e-12, x_tol: 1e-10, max_iter: 2000 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, start: &[f64]) -> Minimum {
        let n = start.len();
        let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
        for i in 0..n {
            let mut p = start.to_vec();
            p[i] += self.initial_step;
            simplex.push(p);
        }
        let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
        let mut iterations = 0;
        while iterations < self.max_iter {
            iterations += 1;
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&k| simplex[k].clone()).collect();
            values = order.iter().map(|&k| values[k]).collect();

            let spread = values[n] - values[0];
            let diameter = simplex[1..]
                .iter()
                .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread.abs() <= self.f_tol && diameter <= self.x_tol.max(self.f_tol) {
                break;
            }
            if diameter <= self.x_tol {
                break;
            }

            let centroid: Vec<f64> =
                (0..n).map(|d| simplex[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (w - c)).collect()
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
                let v = f(&p);
                (p, v)
            } else {
                let p = along(0.5);
                let v = f(&p);
                (p, v)
            };
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
                continue;
            }
            let best = simplex[0].clone();
            for k in 1..=n {
                simplex[k] = simplex[k].iter().zip(&best).map(|(x, b)| b + 0.5 * (x - b)).collect();
                values[k] = f(&simplex[k]);
            }
        }
        let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        Minimum { x: simplex[best].clone(), value: values[best], iterations }
    }
}

/// Outcome of a quasi-Newton ascent.
#[derive(Debug, Clone)]
pub struct Ascent {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub last_gain: f64,
}

/// BFGS maximizer with a backtracking Armijo line search; every accepted step
/// increases the objective.
#[derive(Debug, Clone, Copy)]
pub struct Bfgs {
    pub gain_tol: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for Bfgs {
    fn default() -> Self {
        Self { gain_tol: 1e-10, grad_tol: 1e-9, max_iter: 5000 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Bfgs {
    /// `f` returns the objective and writes the gradient into its second argument.
    pub fn maximize<F: FnMut(&[f64], &mut [f64]) -> f64>(&self, mut f: F, start: &[f64]) -> Ascent {
        let n = start.len();
        let mut x = start.to_vec();
        let mut g = vec![0.0; n];
        let mut value = f(&x, &mut g);
        // inverse Hessian approximation of the negated objective
        let mut h = identity(n);
        let mut last_gain = f64::INFINITY;
        let mut small_steps = 0;
        let mut x_new = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        for iter in 1..=self.max_iter {
            let grad_norm = dot(&g, &g).sqrt();
            if grad_norm < self.grad_tol {
                return Ascent { x, value, iterations: iter - 1, converged: true, last_gain };
            }
            let mut dir: Vec<f64> = (0..n).map(|i| dot(&h[i], &g)).collect();
            let mut slope = dot(&dir, &g);
            if !(slope > 0.0) {
                h = identity(n);
                dir.clone_from(&g);
                slope = dot(&g, &g);
            }
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                for i in 0..n {
                    x_new[i] = x[i] + step * dir[i];
                }
                let v = f(&x_new, &mut g_new);
                if v.is_finite() && v >= value + 1e-4 * step * slope {
                    accepted = Some(v);
                    break;
                }
                step *= 0.5;
            }
            let Some(v_new) = accepted else {
                if h != identity(n) {
                    h = identity(n);
                    continue;
                }
                return Ascent { x, value, iterations: iter, converged: true, last_gain: 0.0 };
            };
            last_gain = v_new - value;
            let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
            // gradient of the minimized function is -g
            let y: Vec<f64> = (0..n).map(|i| g[i] - g_new[i]).collect();
            let sy = dot(&s, &y);
            if sy > 1e-300 {
                let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], &y)).collect();
                let yhy = dot(&y, &hy);
                let rho = 1.0 / sy;
                for i in 0..n {
                    for j in 0..n {
                        h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                    }
                }
            }
            x.clone_from(&x_new);
            g.clone_from(&g_new);
            value = v_new;
            if last_gain < self.gain_tol {
                small_steps += 1;
                if small_steps >= 3 {
                    return Ascent { x, value, iterations: iter, converged: true, last_gain };
                }
            } else {
                small_steps = 0;
            }
        }
        Ascent { x, value, iterations: self.max_iter, converged: false, last_gain }
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// Type-7 (linear interpolation) sample quantile of sorted data, `q ∈ [0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
