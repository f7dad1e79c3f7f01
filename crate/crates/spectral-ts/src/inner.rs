//! Multi-start inner-loop optimization of acquisition functions.
//!
//! Start points come from the exploration set (large-magnitude local
//! minima of the prior sample) and the exploitation set (the data
//! points). Each start runs the projected quasi-Newton descent of
//! [`crate::boxmin`] on `[-1, 1]^d`; the best end point wins, with ties
//! broken lexicographically so the result does not depend on start order
//! or scheduling.

use rayon::prelude::*;
use std::time::Instant;

use crate::boxmin::{self, Objective};
use crate::error::{Error, Result};

/// Exploration plus exploitation start points, all in `[-1, 1]^d`.
#[derive(Clone, Debug, Default)]
pub struct StartSet {
    /// Local minima of the prior sample (possibly empty).
    pub exploration: Vec<Vec<f64>>,
    /// Current data points.
    pub exploitation: Vec<Vec<f64>>,
}

impl StartSet {
    pub fn len(&self) -> usize {
        self.exploration.len() + self.exploitation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One local search: where it started, where it ended, and how.
#[derive(Clone, Debug)]
pub struct StartTrace {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub failed: bool,
}

/// Outcome of a multi-start optimization.
#[derive(Clone, Debug)]
pub struct InnerResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub starts_used: usize,
    pub traces: Vec<StartTrace>,
    /// Seconds spent in the local searches.
    pub wall_time: f64,
}

/// Runs [`boxmin::local_minimize`] from every start on `[-1, 1]^d` and
/// returns the best end point. Starts whose objective turns non-finite
/// are recorded as failed and skipped; if every start fails, an error
/// carries the diagnostics.
pub fn optimize_multistart(
    obj: &dyn Objective,
    starts: &[Vec<f64>],
    opts: &boxmin::Options,
) -> Result<InnerResult> {
    if starts.is_empty() {
        return Err(Error::InvalidParam("no start points".into()));
    }
    let d = obj.dim();
    let lo = vec![-1.0; d];
    let hi = vec![1.0; d];
    let t0 = Instant::now();
    let traces: Vec<StartTrace> = starts
        .par_iter()
        .map(|start| match boxmin::local_minimize(obj, start, &lo, &hi, opts) {
            Ok(out) => StartTrace {
                start: start.clone(),
                end: out.x,
                value: out.value,
                iterations: out.iterations,
                converged: out.converged,
                failed: false,
            },
            Err(_) => StartTrace {
                start: start.clone(),
                end: start.clone(),
                value: f64::INFINITY,
                iterations: 0,
                converged: false,
                failed: true,
            },
        })
        .collect();
    let wall_time = t0.elapsed().as_secs_f64();

    let mut best: Option<&StartTrace> = None;
    for t in traces.iter().filter(|t| !t.failed) {
        best = match best {
            None => Some(t),
            Some(b) => {
                // Value first; lexicographic point order breaks exact ties
                // so the argmin is independent of start ordering.
                let better = t.value < b.value
                    || (t.value == b.value && lex_less(&t.end, &b.end));
                Some(if better { t } else { b })
            }
        };
    }
    match best {
        Some(b) => Ok(InnerResult {
            x: b.end.clone(),
            value: b.value,
            starts_used: starts.len(),
            traces: traces.clone(),
            wall_time,
        }),
        None => Err(Error::AllStartsFailed(format!(
            "{} starts, all non-finite",
            starts.len()
        ))),
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Optimizes a Thompson-sampling acquisition from the union of the
/// exploration and exploitation sets.
pub fn optimize_ts(
    obj: &dyn Objective,
    starts: &StartSet,
    opts: &boxmin::Options,
) -> Result<InnerResult> {
    let all: Vec<Vec<f64>> = starts
        .exploration
        .iter()
        .chain(starts.exploitation.iter())
        .cloned()
        .collect();
    optimize_multistart(obj, &all, opts)
}

/// Euclidean distance between a candidate and a reference minimizer.
pub fn distance_to_truth(x: &[f64], x_true: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), x_true.len());
    x.iter()
        .zip(x_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxmin::GradFn;

    fn sphere(d: usize) -> GradFn<impl Fn(&[f64], &mut [f64]) -> f64 + Sync> {
        GradFn {
            dim: d,
            func: |x: &[f64], grad: &mut [f64]| {
                for (g, v) in grad.iter_mut().zip(x) {
                    *g = 2.0 * v;
                }
                x.iter().map(|v| v * v).sum()
            },
        }
    }

    #[test]
    fn multistart_finds_quadratic_minimum() {
        let obj = sphere(2);
        let starts = vec![vec![0.9, 0.9], vec![-0.5, 0.8], vec![0.1, -0.9]];
        let res = optimize_multistart(&obj, &starts, &boxmin::Options::default()).unwrap();
        assert!(res.value <= 1e-10);
        assert_eq!(res.starts_used, 3);
        assert_eq!(res.traces.len(), 3);
    }

    #[test]
    fn every_end_value_at_most_its_start_value() {
        let obj = GradFn {
            dim: 2,
            func: |x: &[f64], grad: &mut [f64]| {
                grad[0] = (3.0 * x[1]).sin() * 3.0 * (3.0 * x[0]).cos();
                grad[1] = (3.0 * x[0]).sin() * 3.0 * (3.0 * x[1]).cos();
                (3.0 * x[0]).sin() * (3.0 * x[1]).sin()
            },
        };
        let starts: Vec<Vec<f64>> = (0..9)
            .map(|i| vec![-0.8 + 0.2 * i as f64, 0.7 - 0.15 * i as f64])
            .collect();
        let res = optimize_multistart(&obj, &starts, &boxmin::Options::default()).unwrap();
        for t in &res.traces {
            assert!(t.value <= obj.value(&t.start) + 1e-12);
        }
    }

    #[test]
    fn result_is_invariant_to_start_ordering() {
        let obj = GradFn {
            dim: 2,
            func: |x: &[f64], grad: &mut [f64]| {
                let v = (4.0 * x[0]).cos() + (4.0 * x[1]).cos();
                grad[0] = -4.0 * (4.0 * x[0]).sin();
                grad[1] = -4.0 * (4.0 * x[1]).sin();
                v
            },
        };
        let starts: Vec<Vec<f64>> = (0..8)
            .map(|i| vec![-0.9 + 0.25 * i as f64, 0.9 - 0.22 * i as f64])
            .collect();
        let a = optimize_multistart(&obj, &starts, &boxmin::Options::default()).unwrap();
        let mut rev = starts.clone();
        rev.reverse();
        let b = optimize_multistart(&obj, &rev, &boxmin::Options::default()).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn empty_exploration_set_still_optimizes() {
        let obj = sphere(2);
        let starts = StartSet {
            exploration: vec![],
            exploitation: vec![vec![0.5, -0.5]],
        };
        let res = optimize_ts(&obj, &starts, &boxmin::Options::default()).unwrap();
        assert!(res.value <= 1e-10);
    }

    #[test]
    fn empty_exploitation_set_equals_exploration_only() {
        let obj = sphere(2);
        let points = vec![vec![0.5, -0.5], vec![-0.9, 0.1]];
        let with_set = optimize_ts(
            &obj,
            &StartSet {
                exploration: points.clone(),
                exploitation: vec![],
            },
            &boxmin::Options::default(),
        )
        .unwrap();
        let direct = optimize_multistart(&obj, &points, &boxmin::Options::default()).unwrap();
        assert_eq!(with_set.x, direct.x);
        assert_eq!(with_set.value.to_bits(), direct.value.to_bits());
    }

    #[test]
    fn descent_from_enumerated_minima_only_improves() {
        // With a zero data adjustment the acquisition IS the prior sample;
        // starting at each enumerated minimum can only descend.
        use crate::critical::select_minima;
        use crate::gp::{fit_posterior, Dataset};
        use crate::kernel::SEKernelParams;
        use crate::rng::{stream, StreamRole};
        use crate::sampling::{PosteriorSample, PriorSample};
        use crate::spectral::build_basis_uniform;
        use std::sync::Arc;

        let params = SEKernelParams::isotropic(2, 0.35, 1.0, 1e-6).unwrap();
        let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).unwrap());
        let gp = Arc::new(
            fit_posterior(
                Dataset::from_normalized(vec![vec![0.0, 0.0]], vec![0.0]).unwrap(),
                params,
            )
            .unwrap(),
        );
        for seed in 0..5u64 {
            let prior =
                PriorSample::draw(basis.clone(), &mut stream(seed, 0, StreamRole::PriorWeights));
            let set = select_minima(&prior, 1000).unwrap();
            if set.minima.is_empty() {
                continue;
            }
            let best_enumerated = set.minima[0].1;
            let ps = PosteriorSample::zero_adjustment(prior, gp.clone());
            let starts = StartSet {
                exploration: set.points(),
                exploitation: gp.dataset().x().to_vec(),
            };
            let res = optimize_ts(&ps, &starts, &boxmin::Options::default()).unwrap();
            assert!(
                res.value <= best_enumerated + 1e-9,
                "seed {seed}: optimized value {} above best enumerated minimum {best_enumerated}",
                res.value
            );
        }
    }

    #[test]
    fn all_failed_starts_error() {
        let obj = GradFn {
            dim: 1,
            func: |_: &[f64], grad: &mut [f64]| {
                grad[0] = f64::NAN;
                f64::NAN
            },
        };
        let res = optimize_multistart(&obj, &[vec![0.0], vec![0.5]], &boxmin::Options::default());
        assert!(matches!(res, Err(Error::AllStartsFailed(_))));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_to_truth(&[0.3], &[0.3]), 0.0);
        assert!((distance_to_truth(&[0.3], &[-0.1]) - 0.4).abs() <= 1e-15);
        // tightening one coordinate toward the truth shrinks the distance
        let d1 = distance_to_truth(&[0.5, 0.5], &[0.0, 0.0]);
        let d2 = distance_to_truth(&[0.25, 0.5], &[0.0, 0.0]);
        assert!(d2 < d1);
    }
}
