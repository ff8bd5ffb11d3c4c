//! Box-constrained Nelder-Mead minimization.
//!
//! Trial vertices are projected onto the box, so the simplex never leaves
//! the feasible region. Non-finite objective values are treated as `+∞`.

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_iter: usize,
    /// Stop once `f_worst - f_best <= f_tol * (|f_best| + f_tol)`.
    pub f_tol: f64,
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_iter: 200, f_tol: 1e-10, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(
        &self,
        mut f: F,
        x0: &[f64],
        lower: &[f64],
        upper: &[f64],
    ) -> Minimum {
        let n = x0.len();
        let mut evaluations = 0;
        let mut eval = |x: &[f64]| {
            evaluations += 1;
            let v = f(x);
            if v.is_finite() { v } else { f64::INFINITY }
        };

        let mut start = x0.to_vec();
        project(&mut start, lower, upper);
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let f0 = eval(&start);
        simplex.push((start.clone(), f0));
        for i in 0..n {
            let mut v = start.clone();
            let width = upper[i] - lower[i];
            let step = self.initial_step * if width.is_finite() && width > 0.0 { width } else { 1.0 };
            // step away from the nearer bound so the vertex stays distinct
            v[i] = if v[i] + step <= upper[i] { v[i] + step } else { v[i] - step };
            project(&mut v, lower, upper);
            let fv = eval(&v);
            simplex.push((v, fv));
        }

        for _ in 0..self.max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[n].1;
            if worst - best <= self.f_tol * (best.abs() + self.f_tol) {
                break;
            }
            let mut centroid = vec![0.0; n];
            for (v, _) in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect();
                project(&mut p, lower, upper);
                p
            };

            let xr = along(-1.0);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst {
                let xc = along(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < fr.min(worst) {
                simplex[n] = (xc, fc);
                continue;
            }
            // shrink toward the best vertex
            let best_x = simplex[0].0.clone();
            for (v, fv) in simplex.iter_mut().skip(1) {
                for (x, b) in v.iter_mut().zip(&best_x) {
                    *x = b + 0.5 * (*x - b);
                }
                *fv = eval(v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, f) = simplex.swap_remove(0);
        Minimum { x, f, evaluations }
    }
}
