//! Limited-memory BFGS with backtracking Armijo line search.
//!
//! Accepted iterates never increase the objective. An optional projection is
//! applied after every accepted step; it must leave the objective unchanged.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsParams {
    pub max_iters: usize,
    /// Stop when the scaled max-norm of the gradient falls below this.
    pub grad_tol: f64,
    pub history: usize,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    /// Step shrink factor per backtracking trial.
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        Self { max_iters: 5000, grad_tol: 1e-8, history: 20, armijo: 1e-4, backtrack: 0.5, max_backtracks: 40 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Objective after the start and after every accepted step.
    pub history: Vec<f64>,
    pub converged: bool,
    pub line_search_failed: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Minimizes `f`, which returns the value and writes the gradient into its
/// second argument. `grad_scale` converts the raw gradient max-norm into the
/// quantity compared against `grad_tol`.
pub fn lbfgs<F, P>(mut f: F, x0: Vec<f64>, params: &LbfgsParams, grad_scale: f64, mut project: P) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    P: FnMut(&mut [f64]),
{
    let n = x0.len();
    let mut x = x0;
    project(&mut x);
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let norm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs())) * grad_scale;
    let mut gn = norm(&g);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(params.history);
    let mut iterations = 0;
    let mut history = vec![fx];
    let mut line_search_failed = false;
    let mut dir = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut alpha = vec![0.0; params.history];

    while iterations < params.max_iters && gn > params.grad_tol && fx.is_finite() {
        // two-loop recursion
        dir.iter_mut().zip(&g).for_each(|(d, g)| *d = -g);
        for (k, (s, y, rho)) in pairs.iter().enumerate().rev() {
            alpha[k] = rho * dot(s, &dir);
            dir.iter_mut().zip(y).for_each(|(d, y)| *d -= alpha[k] * y);
        }
        let gamma = pairs.back().map_or_else(
            || 1.0 / g.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE),
            |(s, y, _)| dot(s, y) / dot(y, y),
        );
        dir.iter_mut().for_each(|d| *d *= gamma);
        for (k, (s, y, rho)) in pairs.iter().enumerate() {
            let b = rho * dot(y, &dir);
            dir.iter_mut().zip(s).for_each(|(d, s)| *d += (alpha[k] - b) * s);
        }
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 || !slope.is_finite() {
            pairs.clear();
            dir.iter_mut().zip(&g).for_each(|(d, g)| *d = -g);
            slope = dot(&g, &dir);
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..params.max_backtracks {
            x_new.iter_mut().zip(&x).zip(&dir).for_each(|((xn, x), d)| *xn = x + t * d);
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + params.armijo * t * slope {
                accepted = true;
                break;
            }
            t *= params.backtrack;
        }
        if !accepted {
            if pairs.is_empty() {
                line_search_failed = true;
                break;
            }
            pairs.clear();
            continue;
        }
        project(&mut x_new);
        let f_new = f(&x_new, &mut g_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if pairs.len() == params.history {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        // projection preserves the value up to rounding; keep the record monotone
        fx = fx.min(f_new);
        gn = norm(&g);
        iterations += 1;
        history.push(fx);
    }
    LbfgsOutcome { x, value: fx, grad_norm: gn, iterations, history, converged: gn <= params.grad_tol, line_search_failed }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn solves_rosenbrock() {
        let p = LbfgsParams { grad_tol: 1e-10, ..Default::default() };
        let out = lbfgs(rosenbrock, vec![-1.2, 1.0], &p, 1.0, |_| {});
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn accepted_values_never_increase() {
        let p = LbfgsParams { grad_tol: 1e-12, max_iters: 200, ..Default::default() };
        let out = lbfgs(rosenbrock, vec![2.0, -1.0], &p, 1.0, |_| {});
        assert!(out.history.len() == out.iterations + 1);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn quadratic_with_projection() {
        // f = (x0 + x1 - 2)² + (x2 - 1)², invariant under x0 += t, x1 -= t
        let f = |x: &[f64], g: &mut [f64]| {
            let r = x[0] + x[1] - 2.0;
            g[0] = 2.0 * r;
            g[1] = 2.0 * r;
            g[2] = 2.0 * (x[2] - 1.0);
            r * r + (x[2] - 1.0).powi(2)
        };
        let proj = |x: &mut [f64]| {
            let d = 0.5 * (x[0] - x[1]);
            x[0] -= d;
            x[1] += d;
        };
        let out = lbfgs(f, vec![5.0, -3.0, 0.0], &LbfgsParams::default(), 1.0, proj);
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }
}
