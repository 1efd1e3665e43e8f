//! Continuous Fréchet distance between polygonal curves.
//!
//! The decision procedure walks the free-space diagram of the two curves
//! cell by cell and propagates the monotonically reachable parts of the cell
//! boundaries (Alt–Godau). Distances are obtained by bisection on the
//! decision procedure between the endpoint lower bound and the discrete
//! Fréchet distance, which is always an upper bound.
//!
//! Arguments are put into a canonical order before any computation, so all
//! functions here are bit-exactly symmetric.

use std::cmp::Ordering;

use crate::curve::PolygonalCurve;
use crate::error::{Error, Result};
use crate::geometry::dist;

/// Slack accepted when a free-space circle is (nearly) tangent to an edge.
pub const TANGENT_GUARD: f64 = 1e-12;

const MAX_BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceQueryOptions {
    /// Relative bisection tolerance.
    pub rel_tol: f64,
    /// Absolute bisection tolerance.
    pub abs_tol: f64,
}

impl Default for DistanceQueryOptions {
    fn default() -> Self {
        DistanceQueryOptions { rel_tol: 1e-9, abs_tol: 1e-12 }
    }
}

impl DistanceQueryOptions {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0) || !(abs_tol >= 0.0) {
            return Err(Error::invalid("rel_tol must be > 0 and abs_tol >= 0"));
        }
        Ok(DistanceQueryOptions { rel_tol, abs_tol })
    }
}

/// A closed sub-interval of `[0, 1]`, or empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const EMPTY: Interval = Interval { lo: 1.0, hi: 0.0 };

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    fn clipped_below(self, lo: f64) -> Interval {
        Interval { lo: self.lo.max(lo), hi: self.hi }
    }
}

/// Borrowed vertex sequence.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Polyline<'a> {
    pub dim: usize,
    pub coords: &'a [f64],
}

impl<'a> Polyline<'a> {
    pub fn new(dim: usize, coords: &'a [f64]) -> Self {
        debug_assert!(dim > 0 && !coords.is_empty() && coords.len() % dim == 0);
        Polyline { dim, coords }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn v(&self, i: usize) -> &'a [f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn canonical_cmp(&self, other: &Polyline<'_>) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            self.coords
                .iter()
                .zip(other.coords)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

impl<'a> From<&'a PolygonalCurve> for Polyline<'a> {
    fn from(c: &'a PolygonalCurve) -> Self {
        Polyline { dim: c.dim(), coords: c.coords() }
    }
}

fn canonical<'a>(a: Polyline<'a>, b: Polyline<'a>) -> (Polyline<'a>, Polyline<'a>) {
    assert_eq!(a.dim, b.dim, "Fréchet distance between curves of different dimension");
    if a.canonical_cmp(&b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

/// Parameters `t ∈ [0,1]` with `‖a + t(b − a) − c‖ ≤ eps`.
pub fn free_interval(c: &[f64], a: &[f64], b: &[f64], eps: f64) -> Interval {
    let eps2 = eps * eps;
    // Same arithmetic as `dist`, so a vertex pair at distance exactly `eps`
    // agrees with the discrete and endpoint bounds.
    let start_free = dist(c, a) <= eps;
    let end_free = dist(c, b) <= eps;
    let mut len2 = 0.0;
    let mut dot = 0.0;
    for ((&ci, &ai), &bi) in c.iter().zip(a).zip(b) {
        let e = bi - ai;
        len2 += e * e;
        dot += (ci - ai) * e;
    }
    if len2 == 0.0 {
        return if start_free { Interval { lo: 0.0, hi: 1.0 } } else { Interval::EMPTY };
    }
    let t0 = dot / len2;
    let h2: f64 = c
        .iter()
        .zip(a)
        .zip(b)
        .map(|((&ci, &ai), &bi)| {
            let f = ai + t0 * (bi - ai) - ci;
            f * f
        })
        .sum();
    let (mut lo, mut hi) = if h2 <= eps2 {
        let half = ((eps2 - h2) / len2).sqrt();
        (t0 - half, t0 + half)
    } else if h2.sqrt() - eps <= TANGENT_GUARD {
        (t0, t0)
    } else {
        (f64::INFINITY, f64::NEG_INFINITY)
    };
    // Endpoint membership is decided exactly; rounding in the quadratic must
    // not disagree with it.
    if start_free {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    if end_free {
        lo = lo.min(1.0);
        hi = hi.max(1.0);
    }
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    if lo > hi {
        Interval::EMPTY
    } else {
        Interval { lo, hi }
    }
}

fn all_within(p: &[f64], q: Polyline<'_>, eps: f64) -> bool {
    (0..q.len()).all(|j| dist(p, q.v(j)) <= eps)
}

/// Streaming reachability over the free-space diagram, one row of cells at a
/// time. Assumes `p`, `q` are already in canonical order.
pub(crate) fn decide_raw(p: Polyline<'_>, q: Polyline<'_>, eps: f64) -> bool {
    if !(eps >= 0.0) {
        return false;
    }
    let (np, nq) = (p.len(), q.len());
    if dist(p.v(0), q.v(0)) > eps || dist(p.v(np - 1), q.v(nq - 1)) > eps {
        return false;
    }
    if np == 1 {
        return all_within(p.v(0), q, eps);
    }
    if nq == 1 {
        return all_within(q.v(0), p, eps);
    }

    // left[j]: reachable part of the left edge of cell (i, j).
    let mut left = vec![Interval::EMPTY; nq - 1];
    left[0] = free_interval(p.v(0), q.v(0), q.v(1), eps);
    for j in 1..nq - 1 {
        if left[j - 1].hi < 1.0 {
            break;
        }
        let f = free_interval(p.v(0), q.v(j), q.v(j + 1), eps);
        if f.lo > 0.0 {
            break;
        }
        left[j] = f;
    }

    let mut bottom0 = Interval::EMPTY;
    let mut top = Interval::EMPTY;
    for i in 0..np - 1 {
        let (pi, pn) = (p.v(i), p.v(i + 1));
        // Reachable part of the bottom edge of cell (i, 0).
        let mut below = if i == 0 {
            free_interval(q.v(0), pi, pn, eps)
        } else if !bottom0.is_empty() && bottom0.hi >= 1.0 {
            let f = free_interval(q.v(0), pi, pn, eps);
            if f.lo <= 0.0 {
                f
            } else {
                Interval::EMPTY
            }
        } else {
            Interval::EMPTY
        };
        bottom0 = below;

        let mut any = false;
        for j in 0..nq - 1 {
            let from_left = left[j];
            let (qj, qn) = (q.v(j), q.v(j + 1));
            let right = if !below.is_empty() {
                free_interval(pn, qj, qn, eps)
            } else if !from_left.is_empty() {
                free_interval(pn, qj, qn, eps).clipped_below(from_left.lo)
            } else {
                Interval::EMPTY
            };
            let up = if !from_left.is_empty() {
                free_interval(qn, pi, pn, eps)
            } else if !below.is_empty() {
                free_interval(qn, pi, pn, eps).clipped_below(below.lo)
            } else {
                Interval::EMPTY
            };
            let right = if right.is_empty() { Interval::EMPTY } else { right };
            let up = if up.is_empty() { Interval::EMPTY } else { up };
            any |= !right.is_empty() || !up.is_empty();
            left[j] = right;
            below = up;
        }
        if !any {
            return false;
        }
        top = below;
    }
    !left[nq - 2].is_empty() || !top.is_empty()
}

/// Whether `d_F(sigma, tau) ≤ eps`. The curves must share a dimension.
pub fn frechet_decide(sigma: &PolygonalCurve, tau: &PolygonalCurve, eps: f64) -> bool {
    let (p, q) = canonical(sigma.into(), tau.into());
    decide_raw(p, q, eps)
}

pub(crate) fn decide_lines(a: Polyline<'_>, b: Polyline<'_>, eps: f64) -> bool {
    let (p, q) = canonical(a, b);
    decide_raw(p, q, eps)
}

/// `max(‖σ(0) − τ(0)‖, ‖σ(1) − τ(1)‖)`, a lower bound on the distance.
pub fn endpoint_lower_bound(sigma: &PolygonalCurve, tau: &PolygonalCurve) -> f64 {
    let (p, q) = canonical(sigma.into(), tau.into());
    endpoint_bound_raw(p, q)
}

fn endpoint_bound_raw(p: Polyline<'_>, q: Polyline<'_>) -> f64 {
    dist(p.v(0), q.v(0)).max(dist(p.v(p.len() - 1), q.v(q.len() - 1)))
}

fn discrete_raw(p: Polyline<'_>, q: Polyline<'_>) -> f64 {
    let nq = q.len();
    let mut prev = vec![0.0; nq];
    let mut cur = vec![0.0; nq];
    prev[0] = dist(p.v(0), q.v(0));
    for j in 1..nq {
        prev[j] = prev[j - 1].max(dist(p.v(0), q.v(j)));
    }
    for i in 1..p.len() {
        cur[0] = prev[0].max(dist(p.v(i), q.v(0)));
        for j in 1..nq {
            let reach = prev[j].min(prev[j - 1]).min(cur[j - 1]);
            cur[j] = reach.max(dist(p.v(i), q.v(j)));
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[nq - 1]
}

/// Discrete Fréchet distance over vertex couplings; an upper bound on the
/// continuous distance.
pub fn discrete_frechet(sigma: &PolygonalCurve, tau: &PolygonalCurve) -> f64 {
    let (p, q) = canonical(sigma.into(), tau.into());
    discrete_raw(p, q)
}

pub(crate) fn distance_lines(a: Polyline<'_>, b: Polyline<'_>, opts: &DistanceQueryOptions) -> f64 {
    let (p, q) = canonical(a, b);
    let lower = endpoint_bound_raw(p, q);
    let hi = discrete_raw(p, q);
    if hi <= lower || decide_raw(p, q, lower) {
        return lower;
    }
    let (mut lo, mut hi) = (lower, hi);
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= opts.abs_tol.max(opts.rel_tol * hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if decide_raw(p, q, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Continuous Fréchet distance, accurate to
/// `max(abs_tol, rel_tol · d_F)`. The returned value never undershoots the
/// smallest radius accepted by [`frechet_decide`]. The curves must share a
/// dimension.
pub fn frechet_distance(sigma: &PolygonalCurve, tau: &PolygonalCurve, opts: &DistanceQueryOptions) -> f64 {
    distance_lines(sigma.into(), tau.into(), opts)
}

/// Full free-space diagram of two curves at a fixed radius.
///
/// `left[i][j]` is the free part of the edge `{i} × [j, j+1]` (vertex `i`
/// of σ against edge `j` of τ) and `bottom[i][j]` the free part of
/// `[i, i+1] × {j}`. The streaming decision procedure never materializes
/// this; it is kept for inspection and as an independent reachability check.
#[derive(Debug, Clone)]
pub struct FreeSpaceDiagram {
    pub eps: f64,
    pub left: Vec<Vec<Interval>>,
    pub bottom: Vec<Vec<Interval>>,
    start_free: bool,
    end_free: bool,
    point_case: Option<bool>,
}

impl FreeSpaceDiagram {
    pub fn new(sigma: &PolygonalCurve, tau: &PolygonalCurve, eps: f64) -> Self {
        assert_eq!(sigma.dim(), tau.dim(), "free space of curves with different dimension");
        let (np, nq) = (sigma.len(), tau.len());
        let start_free = dist(sigma.first(), tau.first()) <= eps;
        let end_free = dist(sigma.last(), tau.last()) <= eps;
        let point_case = if np == 1 {
            Some(all_within(sigma.first(), tau.into(), eps))
        } else if nq == 1 {
            Some(all_within(tau.first(), sigma.into(), eps))
        } else {
            None
        };
        let left = (0..np)
            .map(|i| {
                (0..nq.saturating_sub(1))
                    .map(|j| free_interval(sigma.vertex(i), tau.vertex(j), tau.vertex(j + 1), eps))
                    .collect()
            })
            .collect();
        let bottom = (0..np.saturating_sub(1))
            .map(|i| (0..nq).map(|j| free_interval(tau.vertex(j), sigma.vertex(i), sigma.vertex(i + 1), eps)).collect())
            .collect();
        FreeSpaceDiagram { eps, left, bottom, start_free, end_free, point_case }
    }

    /// Whether the top-right corner is reachable by a monotone path.
    pub fn reachable(&self) -> bool {
        if !(self.start_free && self.end_free) {
            return false;
        }
        if let Some(ok) = self.point_case {
            return ok;
        }
        let np = self.left.len();
        let nq = self.bottom[0].len();
        // Reachable intervals on every edge, filled in cell order.
        let mut rl = vec![vec![Interval::EMPTY; nq - 1]; np];
        let mut rb = vec![vec![Interval::EMPTY; nq]; np - 1];
        for j in 0..nq - 1 {
            let f = self.left[0][j];
            let entered =
                if j == 0 { f.lo <= 0.0 } else { !rl[0][j - 1].is_empty() && rl[0][j - 1].hi >= 1.0 && f.lo <= 0.0 };
            if entered {
                rl[0][j] = f;
            }
        }
        for i in 0..np - 1 {
            let f = self.bottom[i][0];
            let entered =
                if i == 0 { f.lo <= 0.0 } else { !rb[i - 1][0].is_empty() && rb[i - 1][0].hi >= 1.0 && f.lo <= 0.0 };
            if entered {
                rb[i][0] = f;
            }
        }
        for i in 0..np - 1 {
            for j in 0..nq - 1 {
                let (l, b) = (rl[i][j], rb[i][j]);
                let right = self.left[i + 1][j];
                rl[i + 1][j] = if !b.is_empty() {
                    right
                } else if !l.is_empty() {
                    right.clipped_below(l.lo)
                } else {
                    Interval::EMPTY
                };
                let up = self.bottom[i][j + 1];
                rb[i][j + 1] = if !l.is_empty() {
                    up
                } else if !b.is_empty() {
                    up.clipped_below(b.lo)
                } else {
                    Interval::EMPTY
                };
            }
        }
        let a = rl[np - 1][nq - 2];
        let b = rb[np - 2][nq - 1];
        (!a.is_empty() && a.hi >= 1.0) || (!b.is_empty() && b.hi >= 1.0)
    }
}
