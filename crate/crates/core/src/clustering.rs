//! Clustering costs, Voronoi partitions and constant-factor (k,ℓ)-median
//! solvers.
//!
//! The constant-factor solver simplifies every input curve and then solves a
//! discrete k-median over the simplifications. With a discrete solver of
//! factor β the chain of inequalities gives
//! `cost(T, C) ≤ 4·OPT + 2β·(4·OPT + OPT) = (4 + 10β)·OPT`:
//! each input is within 4·OPT of its simplification in total, an optimal
//! solution moved onto the nearest simplifications loses a factor 2, and the
//! simplified instance costs at most `cost(T, C*) + 4·OPT`.
//!
//! All argmins break ties towards the lowest index.

use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::coreset::WeightedCurveSet;
use crate::curve::{CurveDataset, PolygonalCurve};
use crate::error::{Error, Result};
use crate::frechet::{frechet_decide, frechet_distance, DistanceQueryOptions};
use crate::simplify::simplify_all;

/// Declared factor of [`one_median_bootstrap`]: `OPT + OPT + 4·OPT`.
pub const BOOTSTRAP_FACTOR: f64 = 6.0;

/// Declared factor of the local-search discrete solver.
pub const LOCAL_SEARCH_FACTOR: f64 = 5.0;

/// Default cap on the number of subsets enumerated by the exhaustive solver.
pub const DEFAULT_EXHAUSTIVE_CAP: u64 = 2_000_000;

const SWAP_GAIN: f64 = 1e-4;

/// Declared factor of the simplify-then-discrete solver with an inner
/// discrete solver of factor `beta`.
pub fn constant_factor_alpha(beta: f64) -> f64 {
    4.0 + 10.0 * beta
}

/// `k` center curves sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    centers: Vec<PolygonalCurve>,
}

impl CenterSet {
    pub fn new(centers: Vec<PolygonalCurve>) -> Result<Self> {
        let dim = centers.first().ok_or_else(|| Error::invalid("a center set needs at least one center"))?.dim();
        if centers.iter().any(|c| c.dim() != dim) {
            return Err(Error::invalid("centers have different dimensions"));
        }
        Ok(CenterSet { centers })
    }

    pub fn single(center: PolygonalCurve) -> Self {
        CenterSet { centers: vec![center] }
    }

    pub fn centers(&self) -> &[PolygonalCurve] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].dim()
    }

    pub fn max_complexity(&self) -> usize {
        self.centers.iter().map(PolygonalCurve::len).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub centers: CenterSet,
    /// Curve index → center index.
    pub assignment: Vec<usize>,
    /// Distance of each curve to its assigned center.
    pub distances: Vec<f64>,
    /// Δ̂ᵢ per center; zero for empty cells.
    pub cluster_costs: Vec<f64>,
    /// Δ̂, the sum of `cluster_costs` in center order.
    pub total_cost: f64,
    /// Declared approximation factor α̂ of the producing algorithm.
    pub approx_factor: f64,
    /// Indices of the centers among the solver's candidates, when they were
    /// chosen from a candidate list.
    pub center_indices: Option<Vec<usize>>,
}

impl ClusteringResult {
    /// Sizes |V̂ᵢ| of the Voronoi cells.
    pub fn cell_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centers.len()];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Discrete k-median solver over a finite candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Exhaustive,
    LocalSearch,
}

impl SolverMode {
    /// Declared factor β of the solver relative to the best discrete
    /// solution.
    pub fn inner_factor(self) -> f64 {
        match self {
            SolverMode::Exhaustive => 1.0,
            SolverMode::LocalSearch => LOCAL_SEARCH_FACTOR,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverMode::Exhaustive => "exhaustive",
            SolverMode::LocalSearch => "local_search",
        }
    }
}

impl FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(SolverMode::Exhaustive),
            "local_search" | "local-search" => Ok(SolverMode::LocalSearch),
            other => Err(Error::invalid(format!("unknown solver mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub mode: SolverMode,
    /// Largest C(n, k) the exhaustive solver will enumerate.
    pub exhaustive_cap: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { mode: SolverMode::Exhaustive, exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP }
    }
}

impl SolverConfig {
    pub fn new(mode: SolverMode) -> Self {
        SolverConfig { mode, ..Default::default() }
    }
}

/// Monotonically decreasing shared bound for parallel argmin searches.
/// Valid for non-negative finite values, whose bit patterns order like the
/// values themselves.
pub(crate) struct SharedBound(AtomicU64);

impl SharedBound {
    pub fn new(v: f64) -> Self {
        SharedBound(AtomicU64::new(v.to_bits()))
    }

    pub fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }

    pub fn lower(&self, v: f64) {
        debug_assert!(v >= 0.0);
        self.0.fetch_min(v.to_bits(), Ordering::Relaxed);
    }
}

/// Nearest center of `curve`, ties to the lowest index.
pub fn nearest_center(curve: &PolygonalCurve, centers: &CenterSet) -> (usize, f64) {
    let opts = DistanceQueryOptions::default();
    let mut best = (0, frechet_distance(curve, &centers.centers[0], &opts));
    for (i, c) in centers.centers.iter().enumerate().skip(1) {
        // A center that fails the decision at the current best cannot win.
        if !frechet_decide(curve, c, best.1) {
            continue;
        }
        let d = frechet_distance(curve, c, &opts);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn nearest_all(curves: &[PolygonalCurve], centers: &CenterSet) -> Vec<(usize, f64)> {
    curves.par_iter().map(|c| nearest_center(c, centers)).collect()
}

/// `Σ_τ min_c d_F(τ, c)`.
pub fn cost(t: &CurveDataset, c: &CenterSet) -> f64 {
    nearest_all(t.curves(), c).iter().map(|&(_, d)| d).sum()
}

/// `Σ_s w(s)·min_c d_F(s, c)` over the multiset entries.
pub fn weighted_cost(s: &WeightedCurveSet, c: &CenterSet) -> f64 {
    let d: Vec<f64> = s.entries().par_iter().map(|e| nearest_center(&e.curve, c).1).collect();
    s.entries().iter().zip(d).map(|(e, d)| e.weight * d).sum()
}

/// Nearest-center partition of `t`, labelled with the declared factor of
/// whatever produced `c`.
pub fn voronoi_partition(t: &CurveDataset, c: &CenterSet, approx_factor: f64) -> ClusteringResult {
    let nearest = nearest_all(t.curves(), c);
    let mut cluster_costs = vec![0.0; c.len()];
    for &(a, d) in &nearest {
        cluster_costs[a] += d;
    }
    ClusteringResult {
        centers: c.clone(),
        assignment: nearest.iter().map(|&(a, _)| a).collect(),
        distances: nearest.iter().map(|&(_, d)| d).collect(),
        total_cost: cluster_costs.iter().sum(),
        cluster_costs,
        approx_factor,
        center_indices: None,
    }
}

/// Symmetric matrix of pairwise Fréchet distances, row-major.
pub(crate) fn distance_matrix(curves: &[PolygonalCurve]) -> Vec<f64> {
    let n = curves.len();
    let opts = DistanceQueryOptions::default();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| frechet_distance(&curves[i], &curves[j], &opts)).collect())
        .collect();
    let mut m = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        for (off, &d) in row.iter().enumerate() {
            let j = i + 1 + off;
            m[i * n + j] = d;
            m[j * n + i] = d;
        }
    }
    m
}

fn subset_cost(matrix: &[f64], n: usize, centers: &[usize]) -> f64 {
    (0..n).map(|i| centers.iter().map(|&c| matrix[i * n + c]).fold(f64::INFINITY, f64::min)).sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn exhaustive(matrix: &[f64], n: usize, k: usize, cap: u64) -> Result<Vec<usize>> {
    let subsets = binomial(n, k).round();
    if subsets > cap as f64 {
        return Err(Error::Capacity {
            what: "exhaustive discrete k-median",
            required: subsets,
            cap,
            hint: "use --mode local_search or a smaller instance",
        });
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best = (subset_cost(matrix, n, &idx), idx.clone());
    loop {
        // Next k-subset in lexicographic order.
        let mut p = k;
        loop {
            if p == 0 {
                return Ok(best.1);
            }
            p -= 1;
            if idx[p] < n - k + p {
                break;
            }
        }
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
        let c = subset_cost(matrix, n, &idx);
        if c < best.0 {
            best = (c, idx.clone());
        }
    }
}

fn local_search(matrix: &[f64], n: usize, k: usize) -> Vec<usize> {
    // Greedy start: add the center that lowers the cost most.
    let mut centers: Vec<usize> = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; n];
    for _ in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for c in (0..n).filter(|c| !centers.contains(c)) {
            let total: f64 = (0..n).map(|i| nearest[i].min(matrix[i * n + c])).sum();
            if best.is_none_or(|(b, _)| total < b) {
                best = Some((total, c));
            }
        }
        let c = best.expect("k <= n").1;
        centers.push(c);
        for (i, v) in nearest.iter_mut().enumerate() {
            *v = v.min(matrix[i * n + c]);
        }
    }
    let mut current = subset_cost(matrix, n, &centers);
    loop {
        if current == 0.0 {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        let mut trial = centers.clone();
        for p in 0..k {
            for c in (0..n).filter(|c| !centers.contains(c)) {
                trial[p] = c;
                let v = subset_cost(matrix, n, &trial);
                if best.is_none_or(|(b, _, _)| v < b) {
                    best = Some((v, p, c));
                }
            }
            trial[p] = centers[p];
        }
        match best {
            Some((v, p, c)) if v < (1.0 - SWAP_GAIN) * current => {
                centers[p] = c;
                current = v;
            }
            _ => break,
        }
    }
    centers.sort_unstable();
    centers
}

/// Chooses `k` of the candidates as centers minimizing the clustering cost
/// of the candidates themselves.
pub fn discrete_kmedian(candidates: &CurveDataset, k: usize, config: &SolverConfig) -> Result<ClusteringResult> {
    let n = candidates.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must be in 1..={n}, got {k}")));
    }
    let matrix = distance_matrix(candidates.curves());
    let chosen = match config.mode {
        SolverMode::Exhaustive => exhaustive(&matrix, n, k, config.exhaustive_cap)?,
        SolverMode::LocalSearch => local_search(&matrix, n, k),
    };
    let mut assignment = Vec::with_capacity(n);
    let mut distances = Vec::with_capacity(n);
    let mut cluster_costs = vec![0.0; k];
    for i in 0..n {
        let mut best = (0, matrix[i * n + chosen[0]]);
        for (p, &c) in chosen.iter().enumerate().skip(1) {
            if matrix[i * n + c] < best.1 {
                best = (p, matrix[i * n + c]);
            }
        }
        assignment.push(best.0);
        distances.push(best.1);
        cluster_costs[best.0] += best.1;
    }
    let centers = CenterSet::new(chosen.iter().map(|&c| candidates.get(c).clone()).collect())?;
    Ok(ClusteringResult {
        centers,
        assignment,
        distances,
        total_cost: cluster_costs.iter().sum(),
        cluster_costs,
        approx_factor: config.mode.inner_factor(),
        center_indices: Some(chosen),
    })
}

/// Constant-factor (k,ℓ)-median: simplify every curve to ℓ vertices, pick
/// `k` simplifications with the discrete solver and partition `t` by them.
///
/// `delta` and `seed` are accepted for interface parity with randomized
/// solvers; the deterministic solvers here succeed with probability one.
pub fn kl_median_constant_factor(
    t: &CurveDataset,
    k: usize,
    ell: usize,
    delta: f64,
    _seed: u64,
    config: &SolverConfig,
) -> Result<ClusteringResult> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must be in (0, 1), got {delta}")));
    }
    if k == 0 || k > t.len() {
        return Err(Error::invalid(format!("k must be in 1..={}, got {k}", t.len())));
    }
    let simplified = simplify_all(t, ell)?;
    let candidates = CurveDataset::new(simplified.into_iter().map(|s| s.curve).collect())?;
    let discrete = discrete_kmedian(&candidates, k, config)?;
    let alpha = constant_factor_alpha(config.mode.inner_factor());
    let mut result = voronoi_partition(t, &discrete.centers, alpha);
    result.center_indices = discrete.center_indices;
    Ok(result)
}

/// Constant-factor (1,ℓ)-median: the ℓ-simplification of an input curve
/// with the lowest cost.
pub fn one_median_bootstrap(t: &CurveDataset, ell: usize) -> Result<ClusteringResult> {
    let simplified = simplify_all(t, ell)?;
    let opts = DistanceQueryOptions::default();
    let bound = SharedBound::new(f64::MAX);
    // Candidates whose partial sum exceeds a finished cost cannot win, and
    // pruning is strict, so the argmin is the same as without pruning.
    let costs: Vec<Option<f64>> = simplified
        .par_iter()
        .map(|s| {
            let mut total = 0.0;
            for tau in t.curves() {
                total += frechet_distance(tau, &s.curve, &opts);
                if total > bound.get() {
                    return None;
                }
            }
            bound.lower(total);
            Some(total)
        })
        .collect();
    let mut best: Option<(f64, usize)> = None;
    for (j, c) in costs.iter().enumerate() {
        if let Some(c) = *c {
            if best.is_none_or(|(b, _)| c < b) {
                best = Some((c, j));
            }
        }
    }
    let j = best.expect("at least one candidate completes").1;
    let mut result = voronoi_partition(t, &CenterSet::single(simplified[j].curve.clone()), BOOTSTRAP_FACTOR);
    result.center_indices = Some(vec![j]);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(x: f64) -> PolygonalCurve {
        PolygonalCurve::from_vertices(&[vec![x]]).unwrap()
    }

    fn points(xs: &[f64]) -> CurveDataset {
        CurveDataset::new(xs.iter().map(|&x| point(x)).collect()).unwrap()
    }

    #[test]
    fn cost_examples() {
        let t = points(&[0.0, 1.0]);
        assert_eq!(cost(&t, &CenterSet::single(point(0.0))), 1.0);
        let one = points(&[3.0]);
        assert_eq!(cost(&one, &CenterSet::single(point(3.0))), 0.0);
    }

    #[test]
    fn voronoi_ties_go_to_lowest_center() {
        let t = points(&[0.5]);
        let c = CenterSet::new(vec![point(0.0), point(1.0)]).unwrap();
        let r = voronoi_partition(&t, &c, 1.0);
        assert_eq!(r.assignment, vec![0]);
        assert_eq!(r.cluster_costs, vec![0.5, 0.0]);
    }

    #[test]
    fn discrete_one_median_of_three_points() {
        let t = points(&[0.0, 1.0, 10.0]);
        let r = discrete_kmedian(&t, 1, &SolverConfig::default()).unwrap();
        assert_eq!(r.center_indices, Some(vec![1]));
        assert_eq!(r.total_cost, 10.0);
        let r = discrete_kmedian(&t, 1, &SolverConfig::new(SolverMode::LocalSearch)).unwrap();
        assert_eq!(r.total_cost, 10.0);
    }

    #[test]
    fn k_equals_n_costs_nothing() {
        let t = points(&[0.0, 2.0, 7.0]);
        for mode in [SolverMode::Exhaustive, SolverMode::LocalSearch] {
            let r = discrete_kmedian(&t, 3, &SolverConfig::new(mode)).unwrap();
            assert_eq!(r.total_cost, 0.0);
        }
        assert!(discrete_kmedian(&t, 4, &SolverConfig::default()).is_err());
    }

    #[test]
    fn exhaustive_cap_is_enforced() {
        let t = points(&(0..30).map(f64::from).collect::<Vec<_>>());
        let cfg = SolverConfig { mode: SolverMode::Exhaustive, exhaustive_cap: 100 };
        assert!(matches!(discrete_kmedian(&t, 3, &cfg), Err(Error::Capacity { .. })));
    }

    #[test]
    fn declared_factors() {
        assert_eq!(constant_factor_alpha(1.0), 14.0);
        assert_eq!(constant_factor_alpha(10.5), 109.0);
    }

    #[test]
    fn bootstrap_on_identical_curves() {
        let c = PolygonalCurve::from_vertices(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let t = CurveDataset::new(vec![c.clone(); 4]).unwrap();
        let r = one_median_bootstrap(&t, 2).unwrap();
        assert_eq!(r.total_cost, 0.0);
        assert_eq!(r.centers.centers()[0], c);
        assert_eq!(r.approx_factor, BOOTSTRAP_FACTOR);
    }
}
