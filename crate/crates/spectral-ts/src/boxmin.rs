//! Projected limited-memory quasi-Newton descent on a box.
//!
//! The local optimizer behind every multi-start search in this crate:
//! L-BFGS two-loop directions, gradient projection onto the box, and a
//! backtracking line search with a projected sufficient-decrease test.
//! Accepted steps are monotone non-increasing, so the end value never
//! exceeds the start value.

use crate::error::{Error, Result};
use std::collections::VecDeque;

/// A differentiable scalar field on a box.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes the gradient into `grad` and returns the value.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// Adapter turning a closure `(x, grad) -> value` into an [`Objective`].
pub struct GradFn<F: Fn(&[f64], &mut [f64]) -> f64 + Sync> {
    pub dim: usize,
    pub func: F,
}

impl<F: Fn(&[f64], &mut [f64]) -> f64 + Sync> Objective for GradFn<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut scratch = vec![0.0; self.dim];
        (self.func)(x, &mut scratch)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (self.func)(x, grad)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub max_iters: usize,
    /// Convergence threshold on the infinity norm of the projected gradient.
    pub pg_tol: f64,
    /// Stop when the accepted step is smaller than this in infinity norm.
    pub step_tol: f64,
    /// Number of curvature pairs retained.
    pub memory: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iters: 200,
            pg_tol: 1e-8,
            step_tol: 1e-12,
            memory: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

/// Minimizes `obj` over the box `[lo, hi]` from `start`.
///
/// Terminates when the projected gradient drops below `pg_tol`, the step
/// below `step_tol`, or after `max_iters` iterations. Errors if the
/// objective or gradient is non-finite at the (projected) start; a
/// non-finite value met later is treated as a rejected trial step.
pub fn local_minimize(
    obj: &dyn Objective,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &Options,
) -> Result<Outcome> {
    let d = obj.dim();
    assert_eq!(start.len(), d);
    assert_eq!(lo.len(), d);
    assert_eq!(hi.len(), d);

    let mut x: Vec<f64> = start
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(&v, (&l, &h))| v.clamp(l, h))
        .collect();
    let mut g = vec![0.0; d];
    let mut f = obj.value_grad(&x, &mut g);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective);
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..opts.max_iters {
        if projected_grad_norm(&x, &g, lo, hi) <= opts.pg_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut dir = two_loop_direction(&g, &history);
        if dot(&dir, &g) >= 0.0 {
            // Curvature information inconsistent; restart with steepest descent.
            history.clear();
            dir = g.iter().map(|v| -v).collect();
        }

        match line_search(obj, &x, f, &g, &dir, lo, hi) {
            Some((xn, fn_, gn)) => {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &yv);
                if sy > 1e-10 * norm2(&s) * norm2(&yv) {
                    if history.len() == opts.memory {
                        history.pop_front();
                    }
                    let rho = 1.0 / sy;
                    history.push_back((s.clone(), yv, rho));
                }
                let step = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                x = xn;
                f = fn_;
                g = gn;
                if step <= opts.step_tol {
                    converged = true;
                    break;
                }
            }
            None => {
                if history.is_empty() {
                    // No decrease along steepest descent either: stationary
                    // up to line-search resolution.
                    converged = true;
                    break;
                }
                history.clear();
            }
        }
    }

    if !converged && projected_grad_norm(&x, &g, lo, hi) <= opts.pg_tol {
        converged = true;
    }

    Ok(Outcome {
        x,
        value: f,
        iterations,
        converged,
    })
}

/// Infinity norm of `x - P(x - g)`, zero exactly at a box-stationary point.
fn projected_grad_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((&xi, &gi), (&l, &h))| xi - (xi - gi).clamp(l, h))
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

fn two_loop_direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    if history.is_empty() {
        for v in &mut q {
            *v = -*v;
        }
        return q;
    }
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let (s_last, y_last, _) = history.back().unwrap();
    let gamma = dot(s_last, y_last) / dot(y_last, y_last);
    for v in &mut q {
        *v *= gamma;
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    for v in &mut q {
        *v = -*v;
    }
    q
}

type SearchPoint = (Vec<f64>, f64, Vec<f64>);

fn line_search(
    obj: &dyn Objective,
    x: &[f64],
    f: f64,
    g: &[f64],
    dir: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> Option<SearchPoint> {
    let d = x.len();
    let mut alpha = 1.0;
    for _ in 0..MAX_BACKTRACKS {
        let xn: Vec<f64> = (0..d)
            .map(|i| (x[i] + alpha * dir[i]).clamp(lo[i], hi[i]))
            .collect();
        if xn == x {
            return None;
        }
        // Projected sufficient decrease: compare against the realized step.
        let gs: f64 = (0..d).map(|i| g[i] * (xn[i] - x[i])).sum();
        let mut gn = vec![0.0; d];
        let fn_ = obj.value_grad(&xn, &mut gn);
        if fn_.is_finite()
            && gn.iter().all(|v| v.is_finite())
            && fn_ <= f + ARMIJO_C1 * gs.min(0.0)
            && fn_ <= f
        {
            return Some((xn, fn_, gn));
        }
        alpha *= 0.5;
    }
    None
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(d: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![-1.0; d], vec![1.0; d])
    }

    #[test]
    fn convex_quadratic_reaches_origin() {
        let obj = GradFn {
            dim: 3,
            func: |x: &[f64], grad: &mut [f64]| {
                for (gi, xi) in grad.iter_mut().zip(x) {
                    *gi = 2.0 * xi;
                }
                x.iter().map(|v| v * v).sum()
            },
        };
        let (lo, hi) = unit_box(3);
        let out = local_minimize(&obj, &[0.9, -0.7, 0.4], &lo, &hi, &Options::default()).unwrap();
        assert!(out.converged);
        assert!(out.value <= 1e-6, "value {}", out.value);
        assert!(out.x.iter().all(|v| v.abs() <= 1e-3));
    }

    #[test]
    fn linear_objective_pins_to_corner() {
        let obj = GradFn {
            dim: 2,
            func: |x: &[f64], grad: &mut [f64]| {
                grad.fill(1.0);
                x.iter().sum()
            },
        };
        let (lo, hi) = unit_box(2);
        let out = local_minimize(&obj, &[0.3, -0.2], &lo, &hi, &Options::default()).unwrap();
        assert_eq!(out.x, vec![-1.0, -1.0]);
        assert!(out.converged);
    }

    #[test]
    fn strict_minimum_start_converges_immediately() {
        let obj = GradFn {
            dim: 2,
            func: |x: &[f64], grad: &mut [f64]| {
                for (gi, xi) in grad.iter_mut().zip(x) {
                    *gi = 2.0 * xi;
                }
                x.iter().map(|v| v * v).sum()
            },
        };
        let (lo, hi) = unit_box(2);
        let out = local_minimize(&obj, &[0.0, 0.0], &lo, &hi, &Options::default()).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 2);
        assert_eq!(out.x, vec![0.0, 0.0]);
    }

    #[test]
    fn descent_is_monotone_from_any_start() {
        // Rosenbrock-like valley keeps the line search busy.
        let obj = GradFn {
            dim: 2,
            func: |x: &[f64], grad: &mut [f64]| {
                let (a, b) = (x[0], x[1]);
                grad[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                grad[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
        };
        let (lo, hi) = unit_box(2);
        for start in [[-0.9, 0.9], [0.5, -0.8], [-1.0, -1.0]] {
            let f0 = obj.value(&start);
            let out = local_minimize(&obj, &start, &lo, &hi, &Options::default()).unwrap();
            assert!(out.value <= f0, "end {} above start {}", out.value, f0);
        }
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let obj = GradFn {
            dim: 1,
            func: |_: &[f64], grad: &mut [f64]| {
                grad[0] = f64::NAN;
                f64::NAN
            },
        };
        let out = local_minimize(&obj, &[0.0], &[-1.0], &[1.0], &Options::default());
        assert!(out.is_err());
    }
}
