//! L2-regularized logistic regression fitted with L-BFGS.
//!
//! The objective is `sum_i [log(1 + e^z_i) - y_i z_i] + (l2 / 2) |w|^2` with
//! `z_i = w . x_i + b`; the intercept is not penalized.

use std::collections::VecDeque;

use super::sigmoid;

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Objective value and gradient at `params = [w_0 .. w_{p-1}, b]`.
pub fn objective(params: &[f64], rows: &[Vec<f64>], y: &[f64], l2: f64) -> (f64, Vec<f64>) {
    let p = params.len() - 1;
    let (w, b) = (&params[..p], params[p]);
    let mut value = 0.0;
    let mut grad = vec![0.0; p + 1];
    for (x, &t) in rows.iter().zip(y) {
        let z = b + x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        value += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for (g, xi) in grad[..p].iter_mut().zip(x) {
            *g += r * xi;
        }
        grad[p] += r;
    }
    for (g, wi) in grad[..p].iter_mut().zip(w) {
        *g += l2 * wi;
        value += 0.5 * l2 * wi * wi;
    }
    (value, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub struct FitResult {
    pub params: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Minimizes the objective until the gradient norm drops to `tol` or
/// `max_iter` iterations pass.
pub fn fit(rows: &[Vec<f64>], y: &[f64], l2: f64, tol: f64, max_iter: usize) -> FitResult {
    const HISTORY: usize = 10;
    let dim = rows.first().map_or(0, Vec::len) + 1;
    let mut x = vec![0.0; dim];
    let (mut f, mut g) = objective(&x, rows, y, l2);
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;

    while iterations < max_iter && norm(&g) > tol {
        iterations += 1;
        // two-loop recursion for the search direction
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, yv, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(yv).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = match memory.back() {
            Some((s, yv, _)) => dot(s, yv) / dot(yv, yv),
            None => 1.0 / norm(&g).max(1.0),
        };
        q.iter_mut().for_each(|qi| *qi *= gamma);
        for ((s, yv, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(yv, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - beta) * si);
        }
        let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            memory.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        // backtracking Armijo line search
        let mut step = 1.0;
        let (next_x, next_f, next_g) = loop {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (cf, cg) = objective(&cand, rows, y, l2);
            if cf <= f + 1e-4 * step * slope {
                break (cand, cf, cg);
            }
            step *= 0.5;
            if step < 1e-20 {
                return FitResult {
                    grad_norm: norm(&g),
                    params: x,
                    iterations,
                };
            }
        };
        let s: Vec<f64> = next_x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = next_g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if memory.len() == HISTORY {
                memory.pop_front();
            }
            memory.push_back((s, yv, 1.0 / sy));
        }
        x = next_x;
        f = next_f;
        g = next_g;
    }
    FitResult {
        grad_norm: norm(&g),
        params: x,
        iterations,
    }
}
