//! (5+ε)-approximate (1,ℓ)-median through coresets, sample ranking and grid
//! candidates.
//!
//! A constant-factor center gives a cost estimate Δ on a coreset built for
//! complexity 2ℓ − 2. Ranking a few input curves against a uniform sample
//! picks a pivot that is close to an optimal median; some curve of at most
//! 2ℓ − 2 vertices inside small balls around the pivot's vertices is then
//! near-optimal, so every tuple of grid points covering those balls is
//! evaluated on the coreset and the cheapest wins.
//!
//! The search over tuples is exhaustive in effect: a tuple is skipped only
//! when a lower bound on its coreset cost exceeds the cost of a tuple already
//! evaluated, so the winner is the first minimizer in enumeration order no
//! matter how work is scheduled.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{one_median_bootstrap, weighted_cost, CenterSet, SharedBound};
use crate::coreset::{build_coreset, CoresetConfig, WeightedCurveSet};
use crate::curve::{normalize_indices, CurveDataset, PolygonalCurve, DEFAULT_COLLINEARITY_TOL};
use crate::error::{Error, Result};
use crate::frechet::{distance_lines, DistanceQueryOptions, Polyline};
use crate::geometry::{dist, dist_point_segment, grid_cover_balls, Ball, GridSpec, Point};
use crate::simplify::simplify;

/// ε′ = ε / 67.
pub const EPSILON_DIVISOR: f64 = 67.0;
pub const DEFAULT_CANDIDATE_CAP: u64 = 10_000_000_000;
pub const DEFAULT_CELL_CAP: u64 = 100_000_000;

// Bounds are exact in real arithmetic; the slack absorbs rounding so that a
// tuple tying with the incumbent is never discarded.
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Median1Config {
    pub epsilon: f64,
    pub delta: f64,
    pub ell: usize,
    pub seed: u64,
    /// Largest admissible |P|^(2ℓ−2).
    pub candidate_cap: u64,
    /// Largest total number of grid cells visited while covering balls.
    pub cell_cap: u64,
    pub coreset_size: Option<usize>,
}

impl Median1Config {
    pub fn new(epsilon: f64, delta: f64, ell: usize, seed: u64) -> Self {
        Median1Config {
            epsilon,
            delta,
            ell,
            seed,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            cell_cap: DEFAULT_CELL_CAP,
            coreset_size: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(Error::invalid(format!("epsilon must be in (0, 1/2], got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must be in (0, 1), got {}", self.delta)));
        }
        if self.ell < 2 {
            return Err(Error::invalid(format!("ell must be >= 2, got {}", self.ell)));
        }
        if self.coreset_size == Some(0) {
            return Err(Error::invalid("coreset size must be >= 1"));
        }
        Ok(())
    }

    pub fn epsilon_prime(&self) -> f64 {
        self.epsilon / EPSILON_DIVISOR
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Median1Trace {
    /// Coreset cost of the bootstrap center.
    #[serde(rename = "Delta")]
    pub delta_cost: f64,
    #[serde(rename = "Delta_u")]
    pub delta_upper: f64,
    #[serde(rename = "Delta_l")]
    pub delta_lower: f64,
    pub epsilon_prime: f64,
    pub alpha_hat: f64,
    pub bootstrap: Vec<Vec<f64>>,
    pub pivot: Vec<Vec<f64>>,
    pub pivot_index: Option<usize>,
    pub radius: f64,
    pub cell_width: f64,
    pub candidate_points: Vec<Vec<f64>>,
    /// |P|^(2ℓ−2).
    pub raw_candidate_count: f64,
    pub winner_coreset_cost: f64,
    pub sample_size: usize,
    pub ranking_sample_size: u64,
    pub coreset_size: usize,
    pub short_circuit: bool,
}

/// `⌈−2(ε′)⁻¹(ln δ − ln 4)⌉`.
pub fn candidate_sample_size(eps_prime: f64, delta: f64) -> usize {
    (-2.0 / eps_prime * (delta.ln() - 4f64.ln())).ceil() as usize
}

/// `⌈−64(ε′)⁻²(ln δ − ln⌈−8(ε′)⁻¹(ln δ − ln 4)⌉)⌉`.
pub fn ranking_sample_size(eps_prime: f64, delta: f64) -> u64 {
    let inner = (-8.0 / eps_prime * (delta.ln() - 4f64.ln())).ceil();
    (-64.0 / (eps_prime * eps_prime) * (delta.ln() - inner.ln())).ceil() as u64
}

/// Position in `s` of the input curve with the lowest cost against the
/// multiset that holds `t[i]` `w_counts[i]` times; ties to the lowest
/// position.
pub fn rank_by_sample(t: &CurveDataset, s: &[usize], w_counts: &[u64]) -> Result<usize> {
    if s.is_empty() || w_counts.iter().all(|&c| c == 0) {
        return Err(Error::invalid("ranking needs non-empty candidate and evaluation samples"));
    }
    if w_counts.len() != t.len() {
        return Err(Error::invalid("one multiplicity per input curve is required"));
    }
    let opts = DistanceQueryOptions::default();
    let mut distinct: Vec<usize> = s.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let costs: Vec<f64> = distinct
        .par_iter()
        .map(|&j| {
            let d: Vec<f64> = (0..t.len())
                .map(|i| {
                    if w_counts[i] == 0 {
                        0.0
                    } else {
                        w_counts[i] as f64 * crate::frechet::frechet_distance(t.get(i), t.get(j), &opts)
                    }
                })
                .collect();
            d.iter().sum()
        })
        .collect();
    let cost_of = |j: usize| costs[distinct.binary_search(&j).expect("sampled index")];
    let mut best = (cost_of(s[0]), 0);
    for (pos, &j) in s.iter().enumerate().skip(1) {
        let c = cost_of(j);
        if c < best.0 {
            best = (c, pos);
        }
    }
    Ok(best.1)
}

/// Union of the grid covers of balls of `radius` around the pivot's
/// vertices, sorted by cell index.
pub fn shortcut_candidates(pivot: &PolygonalCurve, radius: f64, cell_width: f64, cell_cap: u64) -> Result<Vec<Point>> {
    let balls = pivot.vertices().map(|v| Ball::new(Point::new(v.to_vec())?, radius)).collect::<Result<Vec<_>>>()?;
    grid_cover_balls(&balls, cell_width, cell_cap)
}

/// Maps a tuple of distinct-point indices to the vertex indices of the curve
/// it represents: consecutive repeats collapse, then collinear vertices go.
fn tuple_curve(points: &[Vec<f64>], dim: usize, tuple: &[u32]) -> Vec<u32> {
    let mut collapsed: Vec<u32> = Vec::with_capacity(tuple.len());
    for &i in tuple {
        if collapsed.last() != Some(&i) {
            collapsed.push(i);
        }
    }
    if collapsed.len() <= 2 {
        return collapsed;
    }
    let coords: Vec<f64> = collapsed.iter().flat_map(|&i| points[i as usize].iter().copied()).collect();
    normalize_indices(dim, &coords, DEFAULT_COLLINEARITY_TOL).into_iter().map(|k| collapsed[k]).collect()
}

/// A tuple is the representative of its curve when padding the curve with
/// copies of its last vertex gives the tuple back.
fn is_canonical(points: &[Vec<f64>], dim: usize, tuple: &[u32]) -> bool {
    if tuple.len() <= 2 {
        return true;
    }
    let curve = tuple_curve(points, dim, tuple);
    let last = *curve.last().expect("non-empty tuple");
    curve.len() <= tuple.len()
        && curve.iter().zip(tuple).all(|(a, b)| a == b)
        && tuple[curve.len()..].iter().all(|&i| i == last)
}

fn canonical_tuple(points: &[Vec<f64>], dim: usize, tuple: &[u32]) -> Vec<u32> {
    let mut curve = tuple_curve(points, dim, tuple);
    let last = *curve.last().expect("non-empty tuple");
    curve.resize(tuple.len(), last);
    curve
}

fn tuple_coords(points: &[Vec<f64>], dim: usize, tuple: &[u32]) -> Vec<f64> {
    let idx = tuple_curve(points, dim, tuple);
    idx.iter().flat_map(|&i| points[i as usize].iter().copied()).collect()
}

/// Distinct candidate curves over `points`, in lexicographic order of their
/// representative tuples of length 2ℓ − 2.
pub struct CandidateCurves {
    points: Vec<Vec<f64>>,
    dim: usize,
    tuple: Vec<u32>,
    done: bool,
}

impl Iterator for CandidateCurves {
    type Item = PolygonalCurve;

    fn next(&mut self) -> Option<PolygonalCurve> {
        while !self.done {
            let current = self.tuple.clone();
            // Advance the odometer, last position fastest.
            let mut p = self.tuple.len();
            loop {
                if p == 0 {
                    self.done = true;
                    break;
                }
                p -= 1;
                if (self.tuple[p] as usize) + 1 < self.points.len() {
                    self.tuple[p] += 1;
                    break;
                }
                self.tuple[p] = 0;
            }
            if is_canonical(&self.points, self.dim, &current) {
                let coords = tuple_coords(&self.points, self.dim, &current);
                return Some(PolygonalCurve::from_flat(self.dim, coords).expect("grid points are finite"));
            }
        }
        None
    }
}

/// Streams every distinct curve built from 2ℓ − 2 points of `points`.
pub fn enumerate_candidate_curves(points: &[Point], ell: usize, candidate_cap: u64) -> Result<CandidateCurves> {
    if ell < 2 {
        return Err(Error::invalid("candidate curves need ell >= 2"));
    }
    let dim = points.first().ok_or_else(|| Error::invalid("no candidate points"))?.dim();
    let len = 2 * ell - 2;
    check_raw_count(points.len(), len, candidate_cap)?;
    Ok(CandidateCurves {
        points: points.iter().map(|p| p.coords().to_vec()).collect(),
        dim,
        tuple: vec![0; len],
        done: false,
    })
}

fn check_raw_count(points: usize, len: usize, cap: u64) -> Result<f64> {
    let raw = (points as f64).powi(len as i32);
    if raw > cap as f64 || points > u32::MAX as usize {
        return Err(Error::Capacity {
            what: "candidate curve enumeration",
            required: raw,
            cap,
            hint: "use a larger epsilon or a smaller instance, or raise --candidate-cap",
        });
    }
    Ok(raw)
}

/// Coreset entries merged by source curve.
struct Evaluation<'a> {
    curves: Vec<&'a PolygonalCurve>,
    weights: Vec<f64>,
    dim: usize,
}

impl<'a> Evaluation<'a> {
    fn new(coreset: &'a WeightedCurveSet) -> Self {
        let mut groups: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
        let mut unsourced = Vec::new();
        for (k, e) in coreset.entries().iter().enumerate() {
            match e.source {
                Some(s) => groups.entry(s).or_insert((k, 0.0)).1 += e.weight,
                None => unsourced.push((k, e.weight)),
            }
        }
        let mut items: Vec<(usize, f64)> = groups.into_values().chain(unsourced).collect();
        items.sort_by_key(|&(k, _)| k);
        let entries = coreset.entries();
        Evaluation {
            curves: items.iter().map(|&(k, _)| &entries[k].curve).collect(),
            weights: items.iter().map(|&(_, w)| w).collect(),
            dim: entries[0].curve.dim(),
        }
    }

    fn first_point_cost(&self, a: &[f64]) -> Vec<f64> {
        self.curves.iter().map(|c| dist(c.first(), a)).collect()
    }

    fn last_point_cost(&self, b: &[f64]) -> Vec<f64> {
        self.curves.iter().map(|c| dist(c.last(), b)).collect()
    }

    fn weighted(&self, d: &[f64]) -> f64 {
        self.weights.iter().zip(d).map(|(w, d)| w * d).sum()
    }

    /// Coreset cost of the candidate, or `None` once it provably exceeds
    /// `bound`.
    fn cost(&self, candidate: &[f64], bound: f64) -> Option<f64> {
        let c = Polyline::new(self.dim, candidate);
        let limit = bound * (1.0 + PRUNE_SLACK);
        let lbs: Vec<f64> = self.curves.iter().map(|t| lower_bound(c, (*t).into())).collect();
        let mut partial = self.weighted(&lbs);
        if partial > limit {
            return None;
        }
        let opts = DistanceQueryOptions::default();
        let mut exact = Vec::with_capacity(lbs.len());
        for ((t, w), lb) in self.curves.iter().zip(&self.weights).zip(&lbs) {
            let d = distance_lines(c, (*t).into(), &opts);
            partial += w * (d - lb);
            if partial > limit {
                return None;
            }
            exact.push(d);
        }
        Some(self.weighted(&exact))
    }
}

fn dist_to_polyline(p: &[f64], c: Polyline<'_>) -> f64 {
    if c.len() == 1 {
        return dist(p, c.v(0));
    }
    (0..c.len() - 1).map(|i| dist_point_segment(p, c.v(i), c.v(i + 1))).fold(f64::INFINITY, f64::min)
}

/// Lower bound on `d_F(c, t)` from endpoints, vertex-to-curve distances and,
/// for a segment, backtracking of `t` against the segment's direction.
fn lower_bound(c: Polyline<'_>, t: Polyline<'_>) -> f64 {
    let mut lb = dist(c.v(0), t.v(0)).max(dist(c.v(c.len() - 1), t.v(t.len() - 1)));
    for k in 0..t.len() {
        lb = lb.max(dist_to_polyline(t.v(k), c));
    }
    if c.len() == 2 {
        let (a, b) = (c.v(0), c.v(1));
        let len = dist(a, b);
        let mut best_prefix = f64::NEG_INFINITY;
        for k in 0..t.len() {
            let proj: f64 = t.v(k).iter().zip(a).zip(b).map(|((x, a), b)| x * (b - a)).sum::<f64>() / len;
            lb = lb.max((best_prefix - proj) / 2.0);
            best_prefix = best_prefix.max(proj);
        }
    } else if c.len() > 2 {
        for j in 0..c.len() {
            lb = lb.max(dist_to_polyline(c.v(j), t));
        }
    }
    lb
}

/// Algorithm result: the winning curve and a trace of the run.
pub fn one_median_5eps(t: &CurveDataset, cfg: &Median1Config) -> Result<(PolygonalCurve, Median1Trace)> {
    cfg.validate()?;
    let n = t.len();
    let dim = t.dim();
    let eps_p = cfg.epsilon_prime();
    let len = 2 * cfg.ell - 2;

    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let coreset_seed = master.next_u64();
    let s_seed = master.next_u64();
    let w_seed = master.next_u64();

    let boot = one_median_bootstrap(t, cfg.ell)?;
    let alpha = boot.approx_factor;
    let c_hat = boot.centers.centers()[0].clone();
    let c_hat_set = CenterSet::single(c_hat.clone());

    let mut ccfg = CoresetConfig::new(1, len, eps_p, cfg.delta / 4.0, coreset_seed);
    ccfg.sample_size_override = cfg.coreset_size;
    let coreset = build_coreset(t, &ccfg)?;
    let delta_cost = weighted_cost(&coreset, &c_hat_set);
    let vertices = |c: &PolygonalCurve| c.vertices().map(|v| v.to_vec()).collect::<Vec<_>>();

    let mut trace = Median1Trace {
        delta_cost,
        delta_upper: 0.0,
        delta_lower: 0.0,
        epsilon_prime: eps_p,
        alpha_hat: alpha,
        bootstrap: vertices(&c_hat),
        pivot: Vec::new(),
        pivot_index: None,
        radius: 0.0,
        cell_width: 0.0,
        candidate_points: Vec::new(),
        raw_candidate_count: 0.0,
        winner_coreset_cost: delta_cost,
        sample_size: 0,
        ranking_sample_size: 0,
        coreset_size: coreset.len(),
        short_circuit: false,
    };
    if delta_cost == 0.0 {
        trace.short_circuit = true;
        return Ok((c_hat, trace));
    }
    let delta_upper = delta_cost / (1.0 - eps_p);
    let delta_lower = delta_cost / ((1.0 + eps_p) * alpha);
    trace.delta_upper = delta_upper;
    trace.delta_lower = delta_lower;

    let s_size = candidate_sample_size(eps_p, cfg.delta);
    let w_size = ranking_sample_size(eps_p, cfg.delta);
    let mut rng = ChaCha8Rng::seed_from_u64(s_seed);
    let s: Vec<usize> = (0..s_size).map(|_| rng.random_range(0..n)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(w_seed);
    let mut w_counts = vec![0u64; n];
    for _ in 0..w_size {
        w_counts[rng.random_range(0..n)] += 1;
    }
    let pos = rank_by_sample(t, &s, &w_counts)?;
    let pivot = t.get(s[pos]);
    trace.sample_size = s_size;
    trace.ranking_sample_size = w_size;
    trace.pivot = vertices(pivot);
    trace.pivot_index = Some(s[pos]);

    let radius = (3.0 + 4.0 * eps_p) * delta_upper / n as f64;
    let width = eps_p * delta_lower / (n as f64 * (dim as f64).sqrt());
    trace.radius = radius;
    trace.cell_width = width;
    let p_points = shortcut_candidates(pivot, radius, width, cfg.cell_cap)?;
    trace.raw_candidate_count = check_raw_count(p_points.len(), len, cfg.candidate_cap)?;
    let points: Vec<Vec<f64>> = p_points.iter().map(|p| p.coords().to_vec()).collect();
    trace.candidate_points = points.clone();

    let eval = Evaluation::new(&coreset);
    let grid = GridSpec::new(width)?;
    let winner = search(&points, len, &eval, &grid, pivot, &c_hat, cfg.ell);
    let curve = PolygonalCurve::from_flat(dim, tuple_coords(&points, dim, &winner))?;
    trace.winner_coreset_cost = weighted_cost(&coreset, &CenterSet::single(curve.clone()));
    Ok((curve, trace))
}

fn locate(points: &[Vec<f64>], p: &[f64]) -> Option<u32> {
    points
        .binary_search_by(|q| {
            q.iter().zip(p).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
        .ok()
        .map(|i| i as u32)
}

/// Representative tuple of `curve` snapped to the grid, if every snapped
/// vertex is a candidate point and the curve fits.
fn snapped_tuple(
    points: &[Vec<f64>],
    dim: usize,
    len: usize,
    grid: &GridSpec,
    curve: &PolygonalCurve,
) -> Option<Vec<u32>> {
    if curve.len() > len {
        return None;
    }
    let mut tuple = curve
        .vertices()
        .map(|v| locate(points, &grid.cell_corner(&grid.cell_index(v))))
        .collect::<Option<Vec<u32>>>()?;
    let last = *tuple.last().expect("non-empty curve");
    tuple.resize(len, last);
    Some(canonical_tuple(points, dim, &tuple))
}

/// First minimizer, in lexicographic tuple order, of the coreset cost over
/// all representative tuples.
fn search(
    points: &[Vec<f64>],
    len: usize,
    eval: &Evaluation<'_>,
    grid: &GridSpec,
    pivot: &PolygonalCurve,
    c_hat: &PolygonalCurve,
    ell: usize,
) -> Vec<u32> {
    let dim = eval.dim;
    // Incumbent: the pivot's simplification (its vertices are pivot vertices,
    // whose cells are in P) and, when it fits, the bootstrap center.
    let mut seeds = Vec::new();
    if let Ok(s) = simplify(pivot, ell) {
        seeds.extend(snapped_tuple(points, dim, len, grid, &s.curve));
    }
    seeds.extend(snapped_tuple(points, dim, len, grid, c_hat));
    seeds.extend(snapped_tuple(points, dim, len, grid, &pivot.pick(&[0, pivot.len() - 1])));
    let mut incumbent: Option<(f64, Vec<u32>)> = None;
    for tuple in seeds {
        let c = eval.cost(&tuple_coords(points, dim, &tuple), f64::INFINITY).expect("unbounded evaluation completes");
        if incumbent.as_ref().is_none_or(|(b, bt)| c < *b || (c == *b && tuple < *bt)) {
            incumbent = Some((c, tuple));
        }
    }
    let (initial, fallback) = incumbent.expect("the pivot endpoints are always candidates");
    let limit = initial * (1.0 + PRUNE_SLACK);

    let first: Vec<Vec<f64>> = points.par_iter().map(|a| eval.first_point_cost(a)).collect();
    let last: Vec<Vec<f64>> = points.par_iter().map(|b| eval.last_point_cost(b)).collect();
    let firsts: Vec<u32> = (0..points.len() as u32).filter(|&i| eval.weighted(&first[i as usize]) <= limit).collect();
    let lasts: Vec<u32> = (0..points.len() as u32).filter(|&i| eval.weighted(&last[i as usize]) <= limit).collect();

    let bound = SharedBound::new(initial);
    let middle = len - 2;
    let best: Vec<Option<(f64, Vec<u32>)>> = firsts
        .par_iter()
        .map(|&a| {
            let mut local: Option<(f64, Vec<u32>)> = None;
            let mut tuple = vec![a; len];
            let mut mids = vec![0u32; middle];
            let fa = &first[a as usize];
            loop {
                tuple[1..1 + middle].copy_from_slice(&mids);
                for &b in &lasts {
                    tuple[len - 1] = b;
                    let lb_pair: f64 =
                        eval.weights.iter().zip(fa).zip(&last[b as usize]).map(|((w, x), y)| w * x.max(*y)).sum();
                    let current = bound.get();
                    if lb_pair > current * (1.0 + PRUNE_SLACK) {
                        continue;
                    }
                    if !is_canonical(points, dim, &tuple) {
                        continue;
                    }
                    if let Some(c) = eval.cost(&tuple_coords(points, dim, &tuple), current) {
                        bound.lower(c);
                        if local.as_ref().is_none_or(|(b, _)| c < *b) {
                            local = Some((c, tuple.clone()));
                        }
                    }
                }
                // Odometer over the middle positions.
                let mut p = middle;
                loop {
                    if p == 0 {
                        return local;
                    }
                    p -= 1;
                    if (mids[p] as usize) + 1 < points.len() {
                        mids[p] += 1;
                        break;
                    }
                    mids[p] = 0;
                }
            }
        })
        .collect();
    let mut winner: Option<(f64, Vec<u32>)> = None;
    for (c, tuple) in best.into_iter().flatten() {
        if winner.as_ref().is_none_or(|(b, bt)| c < *b || (c == *b && tuple < *bt)) {
            winner = Some((c, tuple));
        }
    }
    winner.map(|(_, t)| t).unwrap_or(fallback)
}
