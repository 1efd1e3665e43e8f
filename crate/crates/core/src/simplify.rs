//! Approximate minimum-error ℓ-simplification by shortcut graphs.
//!
//! For a radius δ the shortcut graph on the vertices of τ has an edge
//! `(i, j)` when the segment `vᵢvⱼ` is within Fréchet distance δ of the
//! subcurve `τ[i..=j]`. A path from the first to the last vertex with at most
//! ℓ − 1 edges yields a vertex-subsequence simplification of error ≤ δ, and
//! the smallest δ admitting such a path is within a factor 4 of the optimum
//! over all curves of complexity ℓ.

use rayon::prelude::*;

use crate::curve::{normalize_indices, CurveDataset, PolygonalCurve, DEFAULT_COLLINEARITY_TOL};
use crate::error::{Error, Result};
use crate::frechet::{decide_lines, frechet_distance, DistanceQueryOptions, Polyline};
use crate::geometry::dist;

const BISECTION_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplificationResult {
    pub curve: PolygonalCurve,
    /// `d_F(τ, curve)` up to the Fréchet tolerance.
    pub error: f64,
    /// Indices into the input's vertices, or `None` when the result is a
    /// synthesized point (ℓ = 1).
    pub indices: Option<Vec<usize>>,
    /// Set by the ℓ = 1 heuristic, which carries no approximation bound.
    pub heuristic: bool,
}

/// Simplifies `tau` to at most `ell` vertices chosen among its own.
pub fn simplify(tau: &PolygonalCurve, ell: usize) -> Result<SimplificationResult> {
    if ell < 1 {
        return Err(Error::invalid("simplification needs ell >= 1"));
    }
    let m = tau.len();
    if m <= ell {
        return Ok(SimplificationResult {
            curve: tau.clone(),
            error: 0.0,
            indices: Some((0..m).collect()),
            heuristic: false,
        });
    }
    if ell == 1 {
        return Ok(single_point(tau));
    }
    let mut candidates: Vec<f64> = Vec::with_capacity(m * (m - 1) / 2 + 1);
    candidates.push(0.0);
    for i in 0..m {
        for j in i + 1..m {
            candidates.push(dist(tau.vertex(i), tau.vertex(j)));
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // A smaller budget can land on a path of smaller true error than a larger
    // one, so the error is made non-increasing in ell by keeping the best
    // budget; ties keep the smaller budget.
    let mut best = shortcut_simplify(tau, &candidates, 2);
    for budget in 3..=ell {
        let r = shortcut_simplify(tau, &candidates, budget);
        if r.error < best.error {
            best = r;
        }
    }
    Ok(best)
}

/// Binary search over `candidates`, then bisection, for the smallest radius
/// admitting a shortcut path with at most `ell` vertices.
fn shortcut_simplify(tau: &PolygonalCurve, candidates: &[f64], ell: usize) -> SimplificationResult {
    // The largest pairwise distance always admits the single shortcut v₁v_m.
    let (mut lo_idx, mut hi_idx) = (0usize, candidates.len() - 1);
    let mut best =
        shortcut_path(tau, candidates[hi_idx], ell).expect("the diameter of the vertex set admits a one-edge shortcut");
    if let Some(p) = shortcut_path(tau, candidates[0], ell) {
        best = p;
    } else {
        while hi_idx - lo_idx > 1 {
            let mid = (lo_idx + hi_idx) / 2;
            match shortcut_path(tau, candidates[mid], ell) {
                Some(p) => {
                    best = p;
                    hi_idx = mid;
                }
                None => lo_idx = mid,
            }
        }
        // Critical radii of segment-to-subcurve distances also arise from
        // vertex-line events; bisect the remaining gap.
        let (mut lo, mut hi) = (candidates[lo_idx], candidates[hi_idx]);
        while hi - lo > BISECTION_REL_TOL * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match shortcut_path(tau, mid, ell) {
                Some(p) => {
                    best = p;
                    hi = mid;
                }
                None => lo = mid,
            }
        }
    }
    finish(tau, best)
}

fn finish(tau: &PolygonalCurve, path: Vec<usize>) -> SimplificationResult {
    let picked = tau.pick(&path);
    let keep = normalize_indices(tau.dim(), picked.coords(), DEFAULT_COLLINEARITY_TOL);
    let indices: Vec<usize> = keep.iter().map(|&k| path[k]).collect();
    let curve = tau.pick(&indices);
    let error = frechet_distance(tau, &curve, &DistanceQueryOptions::default());
    SimplificationResult { curve, error, indices: Some(indices), heuristic: false }
}

/// Lexicographically smallest among the fewest-edge paths from the first to
/// the last vertex, if one with at most `ell − 1` edges exists at radius
/// `delta`.
fn shortcut_path(tau: &PolygonalCurve, delta: f64, ell: usize) -> Option<Vec<usize>> {
    let m = tau.len();
    let d = tau.dim();
    let coords = tau.coords();
    let mut segment = vec![0.0; 2 * d];
    let mut edge = |i: usize, j: usize| -> bool {
        if j == i + 1 {
            return true;
        }
        segment[..d].copy_from_slice(tau.vertex(i));
        segment[d..].copy_from_slice(tau.vertex(j));
        decide_lines(Polyline::new(d, &segment), Polyline::new(d, &coords[i * d..(j + 1) * d]), delta)
    };
    // hops[i]: fewest edges from i to the last vertex.
    let mut hops = vec![usize::MAX; m];
    let mut next = vec![usize::MAX; m];
    hops[m - 1] = 0;
    for i in (0..m - 1).rev() {
        for j in i + 1..m {
            if hops[j] != usize::MAX && hops[j] + 1 < hops[i] && edge(i, j) {
                hops[i] = hops[j] + 1;
                next[i] = j;
            }
        }
    }
    if hops[0] > ell - 1 {
        return None;
    }
    // Smallest successor with an optimal continuation gives the
    // lexicographically smallest optimal path; `next` already holds it since
    // candidates were scanned in increasing j with strict improvement.
    let mut path = vec![0];
    let mut i = 0;
    while i != m - 1 {
        i = next[i];
        path.push(i);
    }
    Some(path)
}

/// ℓ = 1: the best of the first vertex, the last vertex and an approximate
/// minimum enclosing ball center of the vertices.
fn single_point(tau: &PolygonalCurve) -> SimplificationResult {
    let radius = |p: &[f64]| tau.vertices().map(|v| dist(p, v)).fold(0.0, f64::max);
    let center = approximate_center(tau);
    let options: [(&[f64], Option<usize>); 3] =
        [(tau.first(), Some(0)), (tau.last(), Some(tau.len() - 1)), (&center, None)];
    let mut best: Option<(f64, usize)> = None;
    for (k, (p, _)) in options.iter().enumerate() {
        let r = radius(p);
        if best.is_none_or(|(b, _)| r < b) {
            best = Some((r, k));
        }
    }
    let (error, k) = best.expect("non-empty options");
    let (p, index) = options[k];
    let curve = PolygonalCurve::from_flat(tau.dim(), p.to_vec()).expect("finite vertex");
    SimplificationResult { curve, error, indices: index.map(|i| vec![i]), heuristic: true }
}

/// Bădoiu–Clarkson iteration towards the minimum enclosing ball center.
fn approximate_center(tau: &PolygonalCurve) -> Vec<f64> {
    let mut c = tau.first().to_vec();
    for t in 1..=1000 {
        let far = tau.vertices().max_by(|a, b| dist(&c, a).total_cmp(&dist(&c, b))).expect("non-empty curve");
        let step = 1.0 / (t as f64 + 1.0);
        for (ci, fi) in c.iter_mut().zip(far) {
            *ci += (fi - *ci) * step;
        }
    }
    c
}

/// Element-wise [`simplify`] in input order.
pub fn simplify_all(t: &CurveDataset, ell: usize) -> Result<Vec<SimplificationResult>> {
    t.curves().par_iter().map(|c| simplify(c, ell)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(v: &[&[f64]]) -> PolygonalCurve {
        PolygonalCurve::from_vertices(&v.iter().map(|c| c.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn short_curves_are_returned_unchanged() {
        let c = curve(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 0.0]]);
        let r = simplify(&c, 3).unwrap();
        assert_eq!(r.curve, c);
        assert_eq!(r.error, 0.0);
    }

    #[test]
    fn single_bump_is_shortcut() {
        let h = 0.3;
        let c = curve(&[&[0.0, 0.0], &[1.0, h], &[2.0, 0.0]]);
        let r = simplify(&c, 2).unwrap();
        assert_eq!(r.indices, Some(vec![0, 2]));
        assert!((r.error - h).abs() <= 1e-8, "error {}", r.error);
    }

    #[test]
    fn zigzag_keeps_endpoints() {
        let c = curve(&[&[0.0], &[1.0], &[0.0], &[1.0]]);
        let r = simplify(&c, 2).unwrap();
        assert_eq!(r.curve.first(), c.first());
        assert_eq!(r.curve.last(), c.last());
        // Best 2-vertex subsequence is 0 → 1 at distance 0.5.
        assert!((r.error - 0.5).abs() <= 1e-8);
    }

    #[test]
    fn single_point_simplification() {
        let c = curve(&[&[0.0], &[4.0], &[2.0]]);
        let r = simplify(&c, 1).unwrap();
        assert_eq!(r.curve.len(), 1);
        assert!((r.error - 2.0).abs() < 1e-2);
        assert!(simplify(&c, 0).is_err());
    }
}
