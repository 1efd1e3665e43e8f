//! Brute-force reference computations for small instances.
//!
//! Nothing here is fast. Each oracle is built on a different principle than
//! the code it checks: dense resampling instead of free-space reachability,
//! subset enumeration instead of shortcut graphs, explicit center-set
//! sampling instead of closed-form sensitivities, and Lipschitz branch and
//! bound instead of grid snapping.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::clustering::CenterSet;
use crate::curve::{CurveDataset, PolygonalCurve};
use crate::frechet::{frechet_distance, DistanceQueryOptions};
use crate::geometry::dist;
use crate::simplify::simplify;
use crate::synthetic::random_curve;

/// Discrete Fréchet distance between the curves resampled so that no edge
/// piece is longer than `step`. Converges to the continuous distance from
/// above; the excess is at most `step`.
pub fn resampled_discrete_frechet(a: &PolygonalCurve, b: &PolygonalCurve, step: f64) -> f64 {
    let pa = resample(a, step);
    let pb = resample(b, step);
    let nb = pb.len();
    let mut prev = vec![0.0; nb];
    let mut cur = vec![0.0; nb];
    prev[0] = dist(&pa[0], &pb[0]);
    for j in 1..nb {
        prev[j] = prev[j - 1].max(dist(&pa[0], &pb[j]));
    }
    for p in pa.iter().skip(1) {
        cur[0] = prev[0].max(dist(p, &pb[0]));
        for j in 1..nb {
            cur[j] = prev[j].min(prev[j - 1]).min(cur[j - 1]).max(dist(p, &pb[j]));
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[nb - 1]
}

fn resample(c: &PolygonalCurve, step: f64) -> Vec<Vec<f64>> {
    let mut out = vec![c.first().to_vec()];
    for i in 0..c.len().saturating_sub(1) {
        let (u, v) = (c.vertex(i), c.vertex(i + 1));
        let pieces = ((dist(u, v) / step).ceil() as usize).max(1);
        for s in 1..=pieces {
            let t = s as f64 / pieces as f64;
            out.push(u.iter().zip(v).map(|(x, y)| x + t * (y - x)).collect());
        }
    }
    out
}

/// Best vertex subsequence of `tau` with 1 to `ell` vertices, by exhaustive
/// enumeration. Returns the indices and their Fréchet distance to `tau`.
pub fn best_subsequence_simplification(tau: &PolygonalCurve, ell: usize) -> (Vec<usize>, f64) {
    let m = tau.len();
    assert!(m <= 20, "exhaustive subsequence search is exponential");
    let opts = DistanceQueryOptions::default();
    let mut best: (Vec<usize>, f64) = (vec![0], f64::INFINITY);
    for mask in 1u32..(1 << m) {
        if mask.count_ones() as usize > ell {
            continue;
        }
        let idx: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let d = frechet_distance(tau, &tau.pick(&idx), &opts);
        if d < best.1 {
            best = (idx, d);
        }
    }
    best
}

fn bounding_box(curves: &[PolygonalCurve]) -> (Vec<f64>, Vec<f64>) {
    let d = curves[0].dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for c in curves {
        for v in c.vertices() {
            for k in 0..d {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
    }
    (lo, hi)
}

fn uniform_curve<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64], ell: usize, margin: f64) -> PolygonalCurve {
    let m = rng.random_range(1..=ell);
    let d = lo.len();
    let coords = (0..m * d)
        .map(|i| {
            let k = i % d;
            let pad = margin * (hi[k] - lo[k]).max(1e-9);
            rng.random_range(lo[k] - pad..=hi[k] + pad)
        })
        .collect();
    PolygonalCurve::from_flat(d, coords).expect("finite coordinates")
}

/// Empirical lower bound on every curve's sensitivity: the largest share
/// `d(τⱼ, C)/cost(T, C)` seen over `draws` center sets of `k` curves with at
/// most `ell` vertices each.
///
/// Centers come from a pool of uniform random curves in the inflated
/// bounding box of `t`, the inputs and their simplifications. Distances to
/// the pool are tabulated once, so a draw costs only lookups.
pub fn sensitivity_lower_bound(t: &CurveDataset, k: usize, ell: usize, draws: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = bounding_box(t.curves());
    let mut pool: Vec<PolygonalCurve> = Vec::new();
    for c in t.curves() {
        if c.len() <= ell {
            pool.push(c.clone());
        }
        if let Ok(s) = simplify(c, ell) {
            pool.push(s.curve);
        }
        for v in c.vertices() {
            pool.push(PolygonalCurve::from_flat(c.dim(), v.to_vec()).expect("finite"));
        }
    }
    for _ in 0..(draws / 50).clamp(200, 2000) {
        pool.push(uniform_curve(&mut rng, &lo, &hi, ell, 0.5));
    }
    let opts = DistanceQueryOptions::default();
    let n = t.len();
    let table: Vec<Vec<f64>> =
        pool.iter().map(|c| t.curves().iter().map(|x| frechet_distance(x, c, &opts)).collect()).collect();
    let mut best = vec![0.0f64; n];
    let mut nearest = vec![0.0; n];
    for _ in 0..draws {
        nearest.iter_mut().for_each(|x| *x = f64::INFINITY);
        for _ in 0..k {
            let row = &table[rng.random_range(0..pool.len())];
            for (x, &d) in nearest.iter_mut().zip(row) {
                *x = x.min(d);
            }
        }
        let total: f64 = nearest.iter().sum();
        if total > 0.0 {
            for (b, &x) in best.iter_mut().zip(&nearest) {
                *b = b.max(x / total);
            }
        }
    }
    best
}

/// Certified bracket on the optimal (1,2)-median cost of one-dimensional
/// curves, where a center is a segment `a → b` (a point when `a = b`).
#[derive(Debug, Clone, PartialEq)]
pub struct MedianBracket {
    pub lower: f64,
    pub upper: f64,
    pub center: (f64, f64),
}

struct Cell {
    lb: f64,
    a: f64,
    b: f64,
    half: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.lb == other.lb
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb)
    }
}

fn segment_cost(curves: &[&PolygonalCurve], a: f64, b: f64) -> f64 {
    let opts = DistanceQueryOptions::default();
    let c = if a == b { PolygonalCurve::from_flat(1, vec![a]) } else { PolygonalCurve::from_flat(1, vec![a, b]) }
        .expect("finite");
    curves.iter().map(|x| frechet_distance(x, &c, &opts)).sum()
}

/// Branch and bound over center endpoints `(a, b)` in the hull of the data.
/// Moving either endpoint by `r` moves each distance by at most `r`, so a
/// square of half-width `r` around `(a, b)` costs at least
/// `cost(a, b) − n·r`. Stops once `upper − lower ≤ rel_gap·upper`.
pub fn one_median_1d(curves: &[&PolygonalCurve], rel_gap: f64) -> MedianBracket {
    assert!(curves.iter().all(|c| c.dim() == 1), "one-dimensional curves only");
    let n = curves.len() as f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in curves {
        for v in c.vertices() {
            lo = lo.min(v[0]);
            hi = hi.max(v[0]);
        }
    }
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (lo + hi);
    let v = segment_cost(curves, mid, mid);
    let mut best = MedianBracket { lower: (v - n * half).max(0.0), upper: v, center: (mid, mid) };
    if half == 0.0 {
        best.lower = v;
        return best;
    }
    let mut heap = BinaryHeap::new();
    heap.push(Cell { lb: best.lower, a: mid, b: mid, half });
    while let Some(cell) = heap.pop() {
        // Pruned cells all had lb ≥ upper·(1 − rel_gap) at pruning time.
        best.lower = cell.lb.min(best.upper * (1.0 - rel_gap)).max(0.0);
        if best.upper - best.lower <= rel_gap * best.upper {
            return best;
        }
        let h = cell.half / 2.0;
        for (da, db) in [(-h, -h), (-h, h), (h, -h), (h, h)] {
            let (a, b) = (cell.a + da, cell.b + db);
            let v = segment_cost(curves, a, b);
            if v < best.upper {
                best.upper = v;
                best.center = (a, b);
            }
            let lb = v - n * h;
            if lb < best.upper * (1.0 - rel_gap) {
                heap.push(Cell { lb, a, b, half: h });
            }
        }
    }
    best.lower = best.upper * (1.0 - rel_gap);
    best
}

/// Lower bound on the optimal (k,2)-median cost of one-dimensional curves:
/// the best split of the inputs into `k` groups, each charged the certified
/// lower bound of its own (1,2)-median.
pub fn kmedian_1d_lower_bound(t: &CurveDataset, k: usize, rel_gap: f64) -> f64 {
    let n = t.len();
    assert!(n <= 12 && k >= 1, "subset enumeration is exponential");
    let full = (1usize << n) - 1;
    let single: Vec<f64> = (0..=full)
        .map(|mask| {
            if mask == 0 {
                return 0.0;
            }
            let group: Vec<&PolygonalCurve> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| t.get(i)).collect();
            one_median_1d(&group, rel_gap).lower
        })
        .collect();
    // best[j][mask]: lowest total for `mask` split into at most j groups.
    let mut best = single.clone();
    for _ in 1..k {
        let mut next = best.clone();
        for mask in 1..=full {
            let mut sub = (mask - 1) & mask;
            while sub > 0 {
                let v = best[sub] + single[mask ^ sub];
                if v < next[mask] {
                    next[mask] = v;
                }
                sub = (sub - 1) & mask;
            }
        }
        best = next;
    }
    best[full]
}

/// Random center sets for coreset error measurements: half perturb
/// simplified input curves, half are uniform in the inflated bounding box.
pub fn random_center_sets(t: &CurveDataset, k: usize, ell: usize, count: usize, seed: u64) -> Vec<CenterSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = bounding_box(t.curves());
    let scale = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max).max(1e-9);
    let simplified: Vec<PolygonalCurve> =
        t.curves().iter().map(|c| simplify(c, ell).map(|s| s.curve).unwrap_or_else(|_| c.clone())).collect();
    (0..count)
        .map(|i| {
            let centers = (0..k)
                .map(|_| {
                    if i % 2 == 0 {
                        let base = &simplified[rng.random_range(0..simplified.len())];
                        let noise = Normal::new(0.0, 0.05 * scale * rng.random_range(0.0..1.0)).expect("valid sigma");
                        let coords = base.coords().iter().map(|x| x + noise.sample(&mut rng)).collect();
                        PolygonalCurve::from_flat(base.dim(), coords).expect("finite")
                    } else {
                        uniform_curve(&mut rng, &lo, &hi, ell, 0.25)
                    }
                })
                .collect();
            CenterSet::new(centers).expect("uniform dimension")
        })
        .collect()
}

/// Random one-dimensional curves of complexity 1 to `max_m`.
pub fn random_1d_dataset(n: usize, max_m: usize, seed: u64) -> CurveDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curves = (0..n)
        .map(|_| {
            let m = rng.random_range(1..=max_m);
            random_curve(&mut rng, 1, m, 5.0)
        })
        .collect();
    CurveDataset::new(curves).expect("non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve1(xs: &[f64]) -> PolygonalCurve {
        PolygonalCurve::from_flat(1, xs.to_vec()).unwrap()
    }

    #[test]
    fn resampled_distance_of_backtracking_curve() {
        let d = resampled_discrete_frechet(&curve1(&[0.0, 1.0]), &curve1(&[0.0, 0.5, 0.0, 1.0]), 1e-3);
        assert!((d - 0.25).abs() <= 1e-3, "{d}");
    }

    #[test]
    fn median_of_points_is_bracketed() {
        let pts = [curve1(&[0.0]), curve1(&[1.0]), curve1(&[10.0])];
        let refs: Vec<&PolygonalCurve> = pts.iter().collect();
        let b = one_median_1d(&refs, 1e-4);
        assert!(b.lower <= 10.0 + 1e-9 && b.upper >= 10.0 - 1e-9);
        assert!(b.upper - b.lower <= 1e-4 * b.upper + 1e-12);
    }

    #[test]
    fn subset_split_of_two_groups() {
        let t = CurveDataset::new(vec![curve1(&[0.0]), curve1(&[0.0]), curve1(&[9.0]), curve1(&[9.0])]).unwrap();
        assert!(kmedian_1d_lower_bound(&t, 2, 1e-3) <= 1e-9);
        assert!(kmedian_1d_lower_bound(&t, 1, 1e-3) > 17.9);
    }
}
