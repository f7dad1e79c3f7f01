//! Multivariate critical points of separable samples.
//!
//! Critical points of `f(x) = sigma_f * prod_i f_i(x_i)` are exactly the
//! per-dimension critical points combined coordinate-wise (except where
//! `f = 0`), because the gradient factors and the Hessian at a critical
//! combination is diagonal:
//! `H_ii = prod_{j != i} f_j(x_j) * f_i''(x_i)`.
//!
//! The best local minima are selected without enumerating the product
//! lattice: per-dimension candidates are ordered by `|f_i|` descending
//! and a max-heap keyed by `prod_i |f_i|` pops combinations best-first,
//! classifying each until the cap is filled. Popping in descending `|f|`
//! order makes the result exactly the largest-`|f|` minima.

use std::collections::{BinaryHeap, HashSet};

use crate::error::Result;
use crate::rootfind::{critical_points_1d, CoordKind, CriticalPoint1d};
use crate::sampling::PriorSample;

/// Absolute threshold below which a combination counts as lying on the
/// `f = 0` set and is excluded.
const ZERO_VALUE_TOL: f64 = 1e-12;
/// Relative threshold for a vanishing Hessian diagonal or boundary
/// derivative.
const DEGENERATE_REL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

/// Classifies a combination of univariate critical points.
///
/// Interior coordinates contribute the sign of the Hessian diagonal
/// `prod_{j != i} f_j * f_i''`; boundary coordinates contribute the sign
/// of the inward derivative (`df/dx_i >= 0` at a lower bound,
/// `<= 0` at an upper bound, for a minimum; reversed for a maximum).
/// Any tested quantity within `1e-10 * |f|` of zero, or `|f| <= 1e-12`
/// itself, classifies as degenerate.
pub fn classify_combination(coords: &[&CriticalPoint1d], sigma_f: f64) -> Classification {
    let d = coords.len();
    debug_assert!(d > 0);
    let mut f_unit = 1.0;
    for c in coords {
        f_unit *= c.f;
    }
    let f_total = sigma_f * f_unit;
    if f_total.abs() <= ZERO_VALUE_TOL {
        return Classification::Degenerate;
    }
    let tol = DEGENERATE_REL * f_total.abs();

    // rest_i = sigma_f * prod_{j != i} f_j via prefix/suffix products
    let mut suffix = vec![1.0; d];
    for i in (0..d - 1).rev() {
        suffix[i] = suffix[i + 1] * coords[i + 1].f;
    }
    let mut prefix = 1.0;
    let mut min_compatible = true;
    let mut max_compatible = true;
    for (i, c) in coords.iter().enumerate() {
        let rest = sigma_f * prefix * suffix[i];
        prefix *= c.f;
        match c.kind {
            CoordKind::Interior => {
                let h = rest * c.d2f;
                if h.abs() <= tol {
                    return Classification::Degenerate;
                }
                if h > 0.0 {
                    max_compatible = false;
                } else {
                    min_compatible = false;
                }
            }
            CoordKind::LowerBound | CoordKind::UpperBound => {
                let g = rest * c.df;
                if g.abs() <= tol {
                    return Classification::Degenerate;
                }
                let inward_increase = match c.kind {
                    CoordKind::LowerBound => g > 0.0,
                    _ => g < 0.0,
                };
                if inward_increase {
                    max_compatible = false;
                } else {
                    min_compatible = false;
                }
            }
        }
    }
    match (min_compatible, max_compatible) {
        (true, _) => Classification::Minimum,
        (_, true) => Classification::Maximum,
        _ => Classification::Saddle,
    }
}

/// Univariate critical points per dimension plus the selected
/// multivariate minima.
#[derive(Clone, Debug)]
pub struct CriticalPointSet {
    /// Per-dimension critical points, sorted by position.
    pub per_dim: Vec<Vec<CriticalPoint1d>>,
    /// Selected local minima `(point, f)`, ascending in `f`; all values
    /// negative; at most `m_max` entries.
    pub minima: Vec<(Vec<f64>, f64)>,
    pub m_max: usize,
}

impl CriticalPointSet {
    /// Start points for the exploration set.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.minima.iter().map(|(p, _)| p.clone()).collect()
    }
}

struct HeapEntry {
    key: f64,
    state: Vec<u32>,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.state == other.state
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Max-heap on the product key; state breaks ties deterministically.
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.state.cmp(&self.state))
    }
}

/// Finds the univariate critical points of every factor and selects up to
/// `m_max` local minima with the largest `|f|`, best-first.
pub fn select_minima(sample: &PriorSample, m_max: usize) -> Result<CriticalPointSet> {
    let per_dim: Result<Vec<_>> = (0..sample.dim())
        .map(|i| critical_points_1d(sample, i))
        .collect();
    Ok(select_minima_from(per_dim?, sample.sigma_f(), m_max))
}

/// Heap selection given precomputed per-dimension critical points.
pub fn select_minima_from(
    per_dim: Vec<Vec<CriticalPoint1d>>,
    sigma_f: f64,
    m_max: usize,
) -> CriticalPointSet {
    let d = per_dim.len();
    // Candidate order: |f_i| descending per dimension.
    let order: Vec<Vec<usize>> = per_dim
        .iter()
        .map(|cands| {
            let mut idx: Vec<usize> = (0..cands.len()).collect();
            idx.sort_by(|&a, &b| cands[b].f.abs().total_cmp(&cands[a].f.abs()));
            idx
        })
        .collect();

    let mut minima: Vec<(Vec<f64>, f64)> = Vec::new();
    if per_dim.iter().any(|c| c.is_empty()) || m_max == 0 {
        return CriticalPointSet {
            per_dim,
            minima,
            m_max,
        };
    }

    let key_of = |state: &[u32]| -> f64 {
        let mut k = sigma_f;
        for (i, &s) in state.iter().enumerate() {
            k *= per_dim[i][order[i][s as usize]].f.abs();
        }
        k
    };

    let mut heap = BinaryHeap::new();
    let mut visited: HashSet<Vec<u32>> = HashSet::new();
    let root = vec![0u32; d];
    heap.push(HeapEntry {
        key: key_of(&root),
        state: root.clone(),
    });
    visited.insert(root);

    while let Some(entry) = heap.pop() {
        if minima.len() >= m_max {
            break;
        }
        // All remaining keys are at most this one; a zero product means
        // everything left lies on the excluded f = 0 set.
        if entry.key <= ZERO_VALUE_TOL {
            break;
        }
        let coords: Vec<&CriticalPoint1d> = entry
            .state
            .iter()
            .enumerate()
            .map(|(i, &s)| &per_dim[i][order[i][s as usize]])
            .collect();
        if classify_combination(&coords, sigma_f) == Classification::Minimum {
            let f = sigma_f * coords.iter().map(|c| c.f).product::<f64>();
            if f < 0.0 {
                minima.push((coords.iter().map(|c| c.x).collect(), f));
            }
        }
        for i in 0..d {
            let next = entry.state[i] + 1;
            if (next as usize) < per_dim[i].len() {
                let mut succ = entry.state.clone();
                succ[i] = next;
                if visited.insert(succ.clone()) {
                    heap.push(HeapEntry {
                        key: key_of(&succ),
                        state: succ,
                    });
                }
            }
        }
    }

    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    CriticalPointSet {
        per_dim,
        minima,
        m_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SEKernelParams;
    use crate::rng::{stream, StreamRole};
    use crate::spectral::build_basis_uniform;
    use std::sync::Arc;

    /// Critical points of `t |-> t^2 - 1` on `[-2, 2]`: interior 0 and the
    /// endpoints, with exact derivatives.
    fn parabola_points() -> Vec<CriticalPoint1d> {
        vec![
            CriticalPoint1d {
                x: -2.0,
                f: 3.0,
                df: -4.0,
                d2f: 2.0,
                kind: CoordKind::LowerBound,
            },
            CriticalPoint1d {
                x: 0.0,
                f: -1.0,
                df: 0.0,
                d2f: 2.0,
                kind: CoordKind::Interior,
            },
            CriticalPoint1d {
                x: 2.0,
                f: 3.0,
                df: 4.0,
                d2f: 2.0,
                kind: CoordKind::UpperBound,
            },
        ]
    }

    #[test]
    fn product_parabola_center_is_maximum() {
        // f(x, y) = (x^2 - 1)(y^2 - 1) at (0, 0): value 1, Hessian diag (-2, -2).
        let pts = parabola_points();
        let coords = vec![&pts[1], &pts[1]];
        assert_eq!(classify_combination(&coords, 1.0), Classification::Maximum);
    }

    #[test]
    fn product_parabola_edge_is_minimum() {
        // (2, 0): f = -3; interior y diagonal 3 * 2 > 0; boundary x at the
        // upper bound with df/dx = 4 * (-1) <= 0.
        let pts = parabola_points();
        let coords = vec![&pts[2], &pts[1]];
        assert_eq!(classify_combination(&coords, 1.0), Classification::Minimum);
    }

    #[test]
    fn product_parabola_corner_is_maximum() {
        let pts = parabola_points();
        let coords = vec![&pts[2], &pts[2]];
        assert_eq!(classify_combination(&coords, 1.0), Classification::Maximum);
    }

    #[test]
    fn univariate_interior_minimum() {
        // d = 1, f'' > 0, f < 0
        let p = CriticalPoint1d {
            x: 0.3,
            f: -0.7,
            df: 0.0,
            d2f: 1.9,
            kind: CoordKind::Interior,
        };
        assert_eq!(classify_combination(&[&p], 1.0), Classification::Minimum);
    }

    #[test]
    fn zero_value_is_degenerate() {
        let p = CriticalPoint1d {
            x: 0.0,
            f: 0.0,
            df: 0.0,
            d2f: 2.0,
            kind: CoordKind::Interior,
        };
        let q = CriticalPoint1d {
            x: 0.5,
            f: 1.0,
            df: 0.0,
            d2f: -1.0,
            kind: CoordKind::Interior,
        };
        assert_eq!(
            classify_combination(&[&p, &q], 1.0),
            Classification::Degenerate
        );
    }

    #[test]
    fn mixed_curvature_is_saddle() {
        let a = CriticalPoint1d {
            x: 0.1,
            f: 1.0,
            df: 0.0,
            d2f: 2.0,
            kind: CoordKind::Interior,
        };
        let b = CriticalPoint1d {
            x: -0.2,
            f: 1.0,
            df: 0.0,
            d2f: -2.0,
            kind: CoordKind::Interior,
        };
        assert_eq!(
            classify_combination(&[&a, &b], 1.0),
            Classification::Saddle
        );
    }

    #[test]
    fn parabola_product_minima_set() {
        // Exhaustive truth: minima are (+-2, 0) and (0, +-2), all with f = -3.
        let per_dim = vec![parabola_points(), parabola_points()];
        let set = select_minima_from(per_dim, 1.0, 1000);
        assert_eq!(set.minima.len(), 4);
        for (p, f) in &set.minima {
            assert!((f + 3.0).abs() <= 1e-12, "minimum value {f}");
            let on_edge = (p[0].abs() == 2.0 && p[1] == 0.0) || (p[0] == 0.0 && p[1].abs() == 2.0);
            assert!(on_edge, "unexpected minimum {p:?}");
        }
    }

    #[test]
    fn one_dimensional_selection_matches_direct_scan() {
        let params = SEKernelParams::isotropic(1, 0.3, 1.0, 1e-6).unwrap();
        let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).unwrap());
        for seed in 0..5u64 {
            let sample =
                PriorSample::draw(basis.clone(), &mut stream(seed, 0, StreamRole::PriorWeights));
            let set = select_minima(&sample, 1000).unwrap();
            // Direct scan over the same univariate critical points.
            let mut expect = Vec::new();
            for c in &set.per_dim[0] {
                let is_min = match c.kind {
                    CoordKind::Interior => c.d2f > 0.0,
                    CoordKind::LowerBound => c.df > 0.0,
                    CoordKind::UpperBound => c.df < 0.0,
                };
                if is_min && c.f < 0.0 {
                    expect.push(c.x);
                }
            }
            let got: Vec<f64> = set.minima.iter().map(|(p, _)| p[0]).collect();
            let mut expect_sorted = expect.clone();
            expect_sorted.sort_by(f64::total_cmp);
            let mut got_sorted = got.clone();
            got_sorted.sort_by(f64::total_cmp);
            assert_eq!(expect_sorted.len(), got_sorted.len(), "seed {seed}");
            for (a, b) in expect_sorted.iter().zip(&got_sorted) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    /// Exhaustive enumeration + classification oracle.
    fn enumeration_oracle(
        per_dim: &[Vec<CriticalPoint1d>],
        sigma_f: f64,
        m_max: usize,
    ) -> Vec<(Vec<f64>, f64)> {
        let d = per_dim.len();
        let mut all = Vec::new();
        let mut state = vec![0usize; d];
        'outer: loop {
            let coords: Vec<&CriticalPoint1d> =
                state.iter().enumerate().map(|(i, &s)| &per_dim[i][s]).collect();
            if classify_combination(&coords, sigma_f) == Classification::Minimum {
                let f = sigma_f * coords.iter().map(|c| c.f).product::<f64>();
                if f < 0.0 {
                    all.push((coords.iter().map(|c| c.x).collect::<Vec<f64>>(), f));
                }
            }
            for i in 0..d {
                state[i] += 1;
                if state[i] < per_dim[i].len() {
                    continue 'outer;
                }
                state[i] = 0;
            }
            break;
        }
        all.sort_by(|a, b| a.1.total_cmp(&b.1));
        all.truncate(m_max);
        all
    }

    #[test]
    fn heap_selection_matches_enumeration_oracle() {
        let params = SEKernelParams::isotropic(2, 0.3, 1.0, 1e-6).unwrap();
        let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).unwrap());
        for seed in 0..10u64 {
            let sample =
                PriorSample::draw(basis.clone(), &mut stream(seed, 3, StreamRole::PriorWeights));
            let set = select_minima(&sample, 1000).unwrap();
            let oracle = enumeration_oracle(&set.per_dim, sample.sigma_f(), 1000);
            assert_eq!(set.minima.len(), oracle.len(), "seed {seed}");
            for ((p, f), (po, fo)) in set.minima.iter().zip(&oracle) {
                assert!((f - fo).abs() <= 1e-9 * (1.0 + fo.abs()), "seed {seed}");
                for (a, b) in p.iter().zip(po) {
                    assert!((a - b).abs() <= 1e-9, "seed {seed}: {p:?} vs {po:?}");
                }
            }
        }
    }

    #[test]
    fn truncation_keeps_largest_magnitude_minima() {
        let params = SEKernelParams::isotropic(2, 0.25, 1.0, 1e-6).unwrap();
        let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).unwrap());
        let sample = PriorSample::draw(basis, &mut stream(42, 0, StreamRole::PriorWeights));
        let full = select_minima(&sample, 100_000).unwrap();
        let capped = select_minima(&sample, 5).unwrap();
        assert!(full.minima.len() >= capped.minima.len());
        if full.minima.len() >= 5 {
            assert_eq!(capped.minima.len(), 5);
        }
        for ((p, f), (pf, ff)) in capped.minima.iter().zip(&full.minima) {
            assert_eq!(f, ff);
            assert_eq!(p, pf);
        }
    }

    #[test]
    fn selected_minima_are_empirical_local_minima() {
        let params = SEKernelParams::isotropic(2, 0.4, 1.0, 1e-6).unwrap();
        let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).unwrap());
        let h = 1e-4;
        for seed in 0..5u64 {
            let sample =
                PriorSample::draw(basis.clone(), &mut stream(seed, 7, StreamRole::PriorWeights));
            let set = select_minima(&sample, 1000).unwrap();
            for (p, f) in &set.minima {
                for i in 0..2 {
                    for sign in [-1.0, 1.0] {
                        let mut q = p.clone();
                        q[i] += sign * h;
                        if q[i].abs() > 1.0 {
                            continue; // outward step from a boundary coordinate
                        }
                        assert!(
                            sample.eval(&q) > *f,
                            "seed {seed}: {p:?} not a local minimum in direction {i}, sign {sign}"
                        );
                    }
                }
            }
        }
    }
}
