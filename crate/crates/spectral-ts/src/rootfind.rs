//! Finds *all* real roots of a smooth function on a closed interval.
//!
//! The function is replaced by an adaptive Chebyshev interpolant (the
//! proxy), accepted once the trailing coefficients fall below machine
//! precision relative to the largest one. Roots are the real eigenvalues
//! of the colleague matrix of the (trimmed) Chebyshev series, polished by
//! a few Newton steps on the series. High-degree proxies are split
//! recursively so the eigenproblem stays small; if the eigensolver fails
//! to converge, sign-change bisection on a fine grid takes over.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sampling::PriorSample;

/// Largest single-piece proxy degree before the interval is bisected.
pub const MAX_PROXY_DEGREE: usize = 8192;
const FIRST_DEGREE: usize = 16;
/// Trailing-coefficient acceptance threshold, relative to the largest
/// coefficient.
const TAIL_TOL: f64 = 1e-13;
/// Coefficients below this (relative) are trimmed after acceptance.
const TRIM_TOL: f64 = 1e-14;
/// Largest colleague eigenproblem; higher-degree pieces are subdivided.
const MAX_COLLEAGUE_DEGREE: usize = 64;
const NEWTON_STEPS: usize = 5;
/// Roots closer than this (relative to the interval width) are merged.
const DEDUPE_REL: f64 = 1e-9;
/// Residual acceptance threshold, relative to `1 + max |f|`.
const RESIDUAL_REL: f64 = 1e-9;

/// Chebyshev interpolant of a function on `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct ChebProxy {
    lo: f64,
    hi: f64,
    /// First-kind coefficients on the mapped interval; `coeffs[k]`
    /// multiplies `T_k`.
    coeffs: Vec<f64>,
    /// `max(|c_{n-1}|, |c_n|) / max_k |c_k]` at acceptance.
    tail_bound: f64,
    /// Max `|f|` over the final build grid.
    scale: f64,
}

enum BuildOutcome {
    Resolved(ChebProxy),
    Unresolved,
}

impl ChebProxy {
    /// Adaptive construction: degree doubles from 16 until the trailing
    /// coefficients are negligible, up to [`MAX_PROXY_DEGREE`]. Errors if
    /// the budget is exhausted ([`build_piecewise`] then subdivides) or if
    /// the function returns a non-finite value.
    pub fn build(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<ChebProxy> {
        match Self::try_build(f, lo, hi)? {
            BuildOutcome::Resolved(p) => Ok(p),
            BuildOutcome::Unresolved => Err(Error::ProxyNotResolved {
                degree: MAX_PROXY_DEGREE,
                lo,
                hi,
            }),
        }
    }

    fn try_build(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<BuildOutcome> {
        assert!(lo < hi, "empty interval");
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        // Values at Chebyshev-Lobatto points cos(j pi / n), j = 0..=n,
        // reused across doublings (the degree-n grid is every other point
        // of the degree-2n grid).
        let mut n = FIRST_DEGREE;
        let mut vals = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let z = (std::f64::consts::PI * j as f64 / n as f64).cos();
            let x = mid + half * z;
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { x });
            }
            vals.push(v);
        }
        loop {
            let coeffs = cheb_coeffs(&vals);
            let max_c = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if max_c == 0.0 {
                return Ok(BuildOutcome::Resolved(ChebProxy {
                    lo,
                    hi,
                    coeffs: vec![0.0],
                    tail_bound: 0.0,
                    scale,
                }));
            }
            let tail = coeffs[n - 1].abs().max(coeffs[n].abs()) / max_c;
            if tail <= TAIL_TOL {
                let mut trimmed = coeffs;
                while trimmed.len() > 1
                    && trimmed.last().unwrap().abs() <= TRIM_TOL * max_c
                {
                    trimmed.pop();
                }
                return Ok(BuildOutcome::Resolved(ChebProxy {
                    lo,
                    hi,
                    coeffs: trimmed,
                    tail_bound: tail,
                    scale,
                }));
            }
            if n == MAX_PROXY_DEGREE {
                return Ok(BuildOutcome::Unresolved);
            }
            // Double the grid, reusing existing values at even indices.
            n *= 2;
            let mut next = Vec::with_capacity(n + 1);
            for j in 0..=n {
                if j % 2 == 0 {
                    next.push(vals[j / 2]);
                } else {
                    let z = (std::f64::consts::PI * j as f64 / n as f64).cos();
                    let x = mid + half * z;
                    let v = f(x);
                    if !v.is_finite() {
                        return Err(Error::NonFiniteValue { x });
                    }
                    next.push(v);
                }
            }
            vals = next;
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Max `|f|` observed while building; the scale in residual tests.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    fn unit_from_x(&self, x: f64) -> f64 {
        (2.0 * x - self.lo - self.hi) / (self.hi - self.lo)
    }

    #[inline]
    fn x_from_unit(&self, z: f64) -> f64 {
        0.5 * (self.lo + self.hi) + 0.5 * (self.hi - self.lo) * z
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, self.unit_from_x(x))
    }

    /// Coefficients of the derivative series on the unit interval.
    fn deriv_coeffs_unit(&self) -> Vec<f64> {
        cheb_deriv(&self.coeffs)
    }

    /// All real roots in `[lo, hi]`, sorted and deduplicated.
    ///
    /// Eigenvalues of the colleague matrix, Newton-polished on the series,
    /// kept when inside the interval (within `1e-10`) and the residual is
    /// below `1e-9 * (1 + max |f|)`; tangential roots therefore count.
    pub fn all_roots(&self) -> Vec<f64> {
        let max_c = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if max_c == 0.0 {
            // Identically zero proxy: no isolated roots to report.
            return Vec::new();
        }
        let deriv = self.deriv_coeffs_unit();
        let mut zroots = Vec::new();
        self.roots_on_unit_subinterval(&self.coeffs, -1.0, 1.0, 0, &mut zroots);

        // Newton polish on the full series.
        let residual_tol = RESIDUAL_REL * (1.0 + self.scale);
        let mut polished: Vec<f64> = Vec::with_capacity(zroots.len());
        for &z0 in &zroots {
            let mut z = z0;
            let mut best = (clenshaw(&self.coeffs, z).abs(), z);
            for _ in 0..NEWTON_STEPS {
                let p = clenshaw(&self.coeffs, z);
                let dp = clenshaw(&deriv, z);
                if dp == 0.0 {
                    break;
                }
                z -= p / dp;
                if !z.is_finite() {
                    break;
                }
                z = z.clamp(-1.0 - 1e-6, 1.0 + 1e-6);
                let r = clenshaw(&self.coeffs, z).abs();
                if r < best.0 {
                    best = (r, z);
                }
            }
            let (residual, z) = best;
            let x = self.x_from_unit(z);
            if residual <= residual_tol && x >= self.lo - 1e-10 && x <= self.hi + 1e-10 {
                polished.push(x.clamp(self.lo, self.hi));
            }
        }
        polished.sort_by(f64::total_cmp);
        dedupe_sorted(&mut polished, DEDUPE_REL * (self.hi - self.lo));
        polished
    }

    /// Root candidates (unit coordinates) on `[za, zb]`, subdividing until
    /// the local series degree fits the colleague eigenproblem.
    fn roots_on_unit_subinterval(
        &self,
        global: &[f64],
        za: f64,
        zb: f64,
        depth: usize,
        out: &mut Vec<f64>,
    ) {
        let local = if za == -1.0 && zb == 1.0 {
            Some(self.coeffs.clone())
        } else {
            restrict_series(global, za, zb)
        };
        let usable = local.as_ref().filter(|c| c.len() - 1 <= MAX_COLLEAGUE_DEGREE);
        if let Some(coeffs) = usable {
            let max_c = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if max_c <= 1e-300 {
                return; // numerically zero on this piece
            }
            if let Some(roots) = colleague_roots(coeffs) {
                let mid = 0.5 * (za + zb);
                let half = 0.5 * (zb - za);
                out.extend(roots.iter().map(|zl| mid + half * zl));
                return;
            }
            // Eigensolver failed: bisection fallback on this piece.
            self.bisection_fallback(za, zb, out);
            return;
        }
        if depth >= 40 {
            self.bisection_fallback(za, zb, out);
            return;
        }
        let mid = 0.5 * (za + zb);
        self.roots_on_unit_subinterval(global, za, mid, depth + 1, out);
        self.roots_on_unit_subinterval(global, mid, zb, depth + 1, out);
    }

    /// Sign-change bracketing on a fine grid, bisected to width 1e-12.
    fn bisection_fallback(&self, za: f64, zb: f64, out: &mut Vec<f64>) {
        const GRID: usize = 1024;
        let p = |z: f64| clenshaw(&self.coeffs, z);
        let half_width = 0.5 * (self.hi - self.lo);
        let target = 1e-12 / half_width.max(1e-300); // 1e-12 in x units
        let mut prev_z = za;
        let mut prev_v = p(za);
        for j in 1..=GRID {
            let z = za + (zb - za) * j as f64 / GRID as f64;
            let v = p(z);
            if prev_v == 0.0 {
                out.push(prev_z);
            } else if prev_v.signum() != v.signum() && v != 0.0 {
                let (mut a, mut b) = (prev_z, z);
                let mut fa = prev_v;
                while b - a > target {
                    let m = 0.5 * (a + b);
                    let fm = p(m);
                    if fm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if fa.signum() != fm.signum() {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                out.push(0.5 * (a + b));
            }
            prev_z = z;
            prev_v = v;
        }
        if prev_v == 0.0 {
            out.push(prev_z);
        }
    }
}

/// Builds proxies over `[lo, hi]`, bisecting the interval wherever a
/// single piece cannot reach the tail tolerance at the degree cap.
/// Returns pieces ordered left to right.
pub fn build_piecewise(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Vec<ChebProxy>> {
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        depth: usize,
        out: &mut Vec<ChebProxy>,
    ) -> Result<()> {
        match ChebProxy::try_build(f, lo, hi)? {
            BuildOutcome::Resolved(p) => {
                out.push(p);
                Ok(())
            }
            BuildOutcome::Unresolved => {
                if depth >= 16 {
                    return Err(Error::ProxyNotResolved {
                        degree: MAX_PROXY_DEGREE,
                        lo,
                        hi,
                    });
                }
                let mid = 0.5 * (lo + hi);
                recurse(f, lo, mid, depth + 1, out)?;
                recurse(f, mid, hi, depth + 1, out)
            }
        }
    }
    let mut out = Vec::new();
    recurse(f, lo, hi, 0, &mut out)?;
    Ok(out)
}

/// All roots of `f` on `[lo, hi]` via piecewise proxies.
pub fn all_roots_of(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let pieces = build_piecewise(f, lo, hi)?;
    let mut roots = Vec::new();
    for piece in &pieces {
        roots.extend(piece.all_roots());
    }
    roots.sort_by(f64::total_cmp);
    dedupe_sorted(&mut roots, DEDUPE_REL * (hi - lo));
    Ok(roots)
}

/// Whether a coordinate of a critical point sits in the interior or on a
/// domain face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordKind {
    Interior,
    LowerBound,
    UpperBound,
}

/// A univariate critical point (or domain endpoint) with cached values of
/// the factor and its first two derivatives.
#[derive(Clone, Debug)]
pub struct CriticalPoint1d {
    pub x: f64,
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
    pub kind: CoordKind,
}

/// All critical points of the univariate factor `f_dim` of a prior sample
/// on `[-1, 1]`: the roots of `f_dim'` plus both endpoints, each with
/// cached `(f, f', f'')`, sorted by position.
pub fn critical_points_1d(sample: &PriorSample, dim: usize) -> Result<Vec<CriticalPoint1d>> {
    let deriv = |x: f64| sample.univariate_deriv(dim, x);
    let mut roots = all_roots_of(&deriv, -1.0, 1.0)?;

    // Soundness filter against the true derivative, not the proxy.
    let mut max_abs = 0.0f64;
    for j in 0..=512 {
        let x = -1.0 + 2.0 * j as f64 / 512.0;
        max_abs = max_abs.max(deriv(x).abs());
    }
    let tol = 1e-8 * (1.0 + max_abs);
    roots.retain(|&r| deriv(r).abs() <= tol);

    // Endpoints are handled by the boundary criterion; interior roots
    // colliding with them are dropped.
    let near = DEDUPE_REL * 2.0;
    roots.retain(|&r| (r - 1.0).abs() > near && (r + 1.0).abs() > near);

    let mut out = Vec::with_capacity(roots.len() + 2);
    let mut push = |x: f64, kind: CoordKind| {
        let (f, df, d2f) = sample.univariate_all(dim, x);
        out.push(CriticalPoint1d { x, f, df, d2f, kind });
    };
    push(-1.0, CoordKind::LowerBound);
    for &r in &roots {
        push(r, CoordKind::Interior);
    }
    push(1.0, CoordKind::UpperBound);
    out.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(out)
}

/// Chebyshev coefficients interpolating `values` given at the Lobatto
/// points `cos(j pi / n)`, `j = 0..=n`.
fn cheb_coeffs(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    debug_assert!(n >= 1);
    // cos(k j pi / n) = table[(k * j) mod 2n]
    let table: Vec<f64> = (0..2 * n)
        .map(|m| (std::f64::consts::PI * m as f64 / n as f64).cos())
        .collect();
    let mut coeffs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut acc = 0.5 * values[0] + 0.5 * values[n] * table[(k * n) % (2 * n)];
        for (j, v) in values.iter().enumerate().take(n).skip(1) {
            acc += v * table[(k * j) % (2 * n)];
        }
        coeffs.push(2.0 * acc / n as f64);
    }
    coeffs[0] *= 0.5;
    coeffs[n] *= 0.5;
    coeffs
}

/// Clenshaw evaluation of a first-kind Chebyshev series at `z` in
/// `[-1, 1]`.
fn clenshaw(coeffs: &[f64], z: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b = 2.0 * z * b1 - b2 + c;
        b2 = b1;
        b1 = b;
    }
    z * b1 - b2 + coeffs[0]
}

/// Derivative series of a first-kind Chebyshev series (unit interval).
fn cheb_deriv(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n];
    d[n - 1] = 2.0 * n as f64 * coeffs[n];
    if n >= 2 {
        d[n - 2] = 2.0 * (n as f64 - 1.0) * coeffs[n - 1];
    }
    for k in (0..n.saturating_sub(2)).rev() {
        d[k] = d[k + 2] + 2.0 * (k as f64 + 1.0) * coeffs[k + 1];
    }
    d[0] *= 0.5;
    d
}

/// Re-expands a series on the unit subinterval `[za, zb]`, doubling the
/// local degree until the tail is negligible. `None` if the restriction
/// does not compress below the colleague-degree cap (callers then split
/// further).
fn restrict_series(global: &[f64], za: f64, zb: f64) -> Option<Vec<f64>> {
    let mid = 0.5 * (za + zb);
    let half = 0.5 * (zb - za);
    let mut n = FIRST_DEGREE.min(2 * MAX_COLLEAGUE_DEGREE);
    loop {
        let vals: Vec<f64> = (0..=n)
            .map(|j| {
                let zl = (std::f64::consts::PI * j as f64 / n as f64).cos();
                clenshaw(global, mid + half * zl)
            })
            .collect();
        let coeffs = cheb_coeffs(&vals);
        let max_c = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if max_c == 0.0 {
            return Some(vec![0.0]);
        }
        let tail = coeffs[n - 1].abs().max(coeffs[n].abs()) / max_c;
        if tail <= TAIL_TOL {
            let mut trimmed = coeffs;
            while trimmed.len() > 1 && trimmed.last().unwrap().abs() <= TRIM_TOL * max_c {
                trimmed.pop();
            }
            return Some(trimmed);
        }
        if n >= 2 * MAX_COLLEAGUE_DEGREE {
            return None;
        }
        n *= 2;
    }
}

/// Real eigenvalues of the colleague matrix inside the unit interval.
/// `None` if the Schur iteration fails to converge.
fn colleague_roots(coeffs: &[f64]) -> Option<Vec<f64>> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Some(Vec::new());
    }
    if n == 1 {
        // c0 + c1 z = 0
        let z = -coeffs[0] / coeffs[1];
        return Some(if z.abs() <= 1.0 + 1e-6 { vec![z] } else { Vec::new() });
    }
    let cn = coeffs[n];
    let mut m = DMatrix::zeros(n, n);
    m[(0, 1)] = 1.0;
    for i in 1..n {
        m[(i, i - 1)] = 0.5;
        if i + 1 < n {
            m[(i, i + 1)] = 0.5;
        }
    }
    for j in 0..n {
        m[(n - 1, j)] -= coeffs[j] / (2.0 * cn);
    }
    let schur = m.try_schur(1e-13, 50 * n.max(20))?;
    let eig = schur.complex_eigenvalues();
    let mut roots: Vec<f64> = eig
        .iter()
        .filter(|e| e.im.abs() <= 1e-6 && e.re.abs() <= 1.0 + 1e-6)
        .map(|e| e.re)
        .collect();
    roots.sort_by(f64::total_cmp);
    Some(roots)
}

fn dedupe_sorted(values: &mut Vec<f64>, tol: f64) {
    if values.is_empty() {
        return;
    }
    let mut kept = vec![values[0]];
    for &v in values.iter().skip(1) {
        if v - *kept.last().unwrap() > tol {
            kept.push(v);
        }
    }
    *values = kept;
}
