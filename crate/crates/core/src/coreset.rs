//! Sensitivity sampling of weighted ε-coresets.
//!
//! An approximate clustering bounds every curve's sensitivity by γ. Each γ
//! is rounded up to a power of two and then to a multiple of `1/n`, giving
//! λ; curves are drawn i.i.d. with probability `ψ = λ/Λ` and weighted by
//! `Λ/(|S|·λ)`, which makes the weighted cost an unbiased estimator of the
//! full cost for every center set.
//!
//! λ is held exactly as the integer `n·λ` ("units"), so ψ and the weights
//! are ratios of integers and the sampler draws a uniform integer below
//! `Σ units`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{
    kl_median_constant_factor, nearest_center, one_median_bootstrap, CenterSet, ClusteringResult, SolverConfig,
};
use crate::curve::{CurveDataset, PolygonalCurve};
use crate::error::{Error, Result};

/// One multiset entry of a weighted curve set.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCurve {
    pub curve: PolygonalCurve,
    pub weight: f64,
    /// Index of the input curve this entry was drawn from, if known.
    pub source: Option<usize>,
}

/// Provenance of a sampled coreset. Serializes to the sidecar document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetMeta {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub epsilon: f64,
    pub sample_size: usize,
    #[serde(rename = "Gamma")]
    pub gamma_total: f64,
    #[serde(rename = "Lambda")]
    pub lambda_total: f64,
    pub alpha_hat: f64,
    /// SHA-256 of the sampling distribution.
    #[serde(skip)]
    pub profile_hash: String,
}

/// A multiset of curves with strictly positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCurveSet {
    entries: Vec<WeightedCurve>,
    pub meta: Option<CoresetMeta>,
}

impl WeightedCurveSet {
    pub fn new(entries: Vec<WeightedCurve>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("a weighted curve set needs at least one entry"));
        }
        if let Some((i, e)) = entries.iter().enumerate().find(|(_, e)| !(e.weight > 0.0 && e.weight.is_finite())) {
            return Err(Error::invalid(format!("entry {i} has weight {}, weights must be finite and > 0", e.weight)));
        }
        let dim = entries[0].curve.dim();
        if entries.iter().any(|e| e.curve.dim() != dim) {
            return Err(Error::invalid("entries have different dimensions"));
        }
        Ok(WeightedCurveSet { entries, meta: None })
    }

    /// Skips validation; for exercising error paths downstream.
    pub fn from_entries_unchecked(entries: Vec<WeightedCurve>) -> Self {
        WeightedCurveSet { entries, meta: None }
    }

    /// Every curve of `t` once with weight 1.
    pub fn unit(t: &CurveDataset) -> Self {
        WeightedCurveSet {
            entries: t
                .curves()
                .iter()
                .enumerate()
                .map(|(i, c)| WeightedCurve { curve: c.clone(), weight: 1.0, source: Some(i) })
                .collect(),
            meta: None,
        }
    }

    pub fn entries(&self) -> &[WeightedCurve] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityProfile {
    pub gamma: Vec<f64>,
    /// `n·λ(f)`, an integer by construction.
    pub units: Vec<u64>,
    pub lambda: Vec<f64>,
    pub psi: Vec<f64>,
    /// Γ = Σγ.
    pub gamma_total: f64,
    /// Λ = Σλ.
    pub lambda_total: f64,
    pub alpha: f64,
    /// Number of non-empty Voronoi cells.
    pub k_prime: usize,
    /// Set when the approximate solution has cost zero and γ is uniform.
    pub degenerate: bool,
    pub source: ClusteringResult,
}

impl SensitivityProfile {
    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn total_units(&self) -> u64 {
        self.units.iter().sum()
    }

    /// `Λ/(|S|·λ(fᵢ))` for a sample of the given size.
    pub fn weight(&self, i: usize, sample_size: usize) -> f64 {
        self.total_units() as f64 / (sample_size as f64 * self.units[i] as f64)
    }

    /// Hex SHA-256 over `n`, α̂ and the units.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n() as u64).to_le_bytes());
        h.update(self.alpha.to_bits().to_le_bytes());
        for u in &self.units {
            h.update(u.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Closed-form total sensitivity `2k′ + 2√(6αk′) + 3α`.
pub fn total_sensitivity(alpha: f64, k_prime: usize) -> f64 {
    let k = k_prime as f64;
    2.0 * k + 2.0 * (6.0 * alpha * k).sqrt() + 3.0 * alpha
}

/// Smallest power of two that is ≥ `gamma`, as its exponent.
fn ceil_log2(gamma: f64) -> i32 {
    let mut e = gamma.log2().ceil() as i32;
    while 2f64.powi(e) < gamma {
        e += 1;
    }
    while 2f64.powi(e - 1) >= gamma {
        e -= 1;
    }
    e
}

/// Sensitivity bounds of every curve with respect to an approximate
/// solution whose declared factor is `approx.approx_factor`.
pub fn sensitivity_profile(t: &CurveDataset, approx: &ClusteringResult) -> Result<SensitivityProfile> {
    let n = t.len();
    if approx.assignment.len() != n || approx.distances.len() != n {
        return Err(Error::invalid("the approximate solution does not cover the dataset"));
    }
    let alpha = approx.approx_factor;
    if !(alpha >= 1.0) {
        return Err(Error::invalid(format!("approximation factor must be >= 1, got {alpha}")));
    }
    let sizes = approx.cell_sizes();
    let k_prime = sizes.iter().filter(|&&s| s > 0).count();
    let total = approx.total_cost;
    let kp = k_prime as f64;
    let degenerate = total == 0.0;
    let gamma: Vec<f64> = if degenerate {
        vec![total_sensitivity(alpha, k_prime) / n as f64; n]
    } else {
        let a = 1.0 + (2.0 * kp / (3.0 * alpha)).sqrt();
        let b = 1.0 + (3.0 * alpha / (2.0 * kp)).sqrt();
        (0..n)
            .map(|j| {
                let i = approx.assignment[j];
                let size = sizes[i] as f64;
                a * (alpha * approx.distances[j] / total + 2.0 * alpha * approx.cluster_costs[i] / (total * size))
                    + b * 2.0 / size
            })
            .collect()
    };
    let units: Vec<u64> = gamma.iter().map(|&g| (n as f64 * 2f64.powi(ceil_log2(g))).ceil() as u64).collect();
    let sum_units: u64 = units.iter().sum();
    let lambda: Vec<f64> = units.iter().map(|&u| u as f64 / n as f64).collect();
    let psi: Vec<f64> = units.iter().map(|&u| u as f64 / sum_units as f64).collect();
    Ok(SensitivityProfile {
        gamma_total: gamma.iter().sum(),
        lambda_total: sum_units as f64 / n as f64,
        gamma,
        units,
        lambda,
        psi,
        alpha,
        k_prime,
        degenerate,
        source: approx.clone(),
    })
}

/// Parameters of a coreset construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CoresetConfig {
    pub k: usize,
    pub ell: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub sample_size_override: Option<usize>,
    /// Constant in front of the sample-size formula.
    pub c_sample: f64,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl CoresetConfig {
    pub fn new(k: usize, ell: usize, epsilon: f64, delta: f64, seed: u64) -> Self {
        CoresetConfig {
            k,
            ell,
            epsilon,
            delta,
            sample_size_override: None,
            c_sample: 1.0,
            seed,
            solver: SolverConfig::default(),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon must be in (0, 1), got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must be in (0, 1), got {}", self.delta)));
        }
        if self.k == 0 || self.k > n {
            return Err(Error::invalid(format!("k must be in 1..={n}, got {}", self.k)));
        }
        if self.ell == 0 {
            return Err(Error::invalid("ell must be >= 1"));
        }
        if !(self.c_sample > 0.0) {
            return Err(Error::invalid("c_sample must be > 0"));
        }
        if self.sample_size_override == Some(0) {
            return Err(Error::invalid("sample size must be >= 1"));
        }
        Ok(())
    }
}

/// `c·⌈k·ε⁻²·(d²ℓ²k·ln(dℓm)·ln(kn)·ln²(k) + ln(2/δ))⌉`, rounded up.
pub fn theoretical_sample_size(
    n: usize,
    d: usize,
    m: usize,
    k: usize,
    ell: usize,
    epsilon: f64,
    delta: f64,
    c_sample: f64,
) -> f64 {
    let (n, d, m, k, l) = (n as f64, d as f64, m as f64, k as f64, ell as f64);
    let vc = d * d * l * l * k * (d * l * m).ln() * (k * n).ln() * k.ln().powi(2);
    let inner = (k / (epsilon * epsilon) * (vc + (2.0 / delta).ln())).ceil();
    (c_sample * inner).ceil()
}

/// The bootstrap approximation: the k = 1 substitute for `k = 1`, the
/// constant-factor solver otherwise.
pub fn approximate_solution(t: &CurveDataset, cfg: &CoresetConfig) -> Result<ClusteringResult> {
    cfg.validate(t.len())?;
    if cfg.k == 1 {
        one_median_bootstrap(t, cfg.ell)
    } else {
        kl_median_constant_factor(t, cfg.k, cfg.ell, cfg.delta, cfg.seed, &cfg.solver)
    }
}

/// Indices of `size` i.i.d. draws with probabilities ψ. Draw `t` uses its
/// own ChaCha8 stream `t` under `seed`, so draws do not depend on each other.
pub fn sample_indices(profile: &SensitivityProfile, size: usize, seed: u64) -> Vec<usize> {
    let mut cumulative = Vec::with_capacity(profile.units.len());
    let mut acc = 0u64;
    for &u in &profile.units {
        acc += u;
        cumulative.push(acc);
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|t| {
            let mut rng = base.clone();
            rng.set_stream(t as u64);
            let x = rng.random_range(0..acc);
            cumulative.partition_point(|&c| c <= x)
        })
        .collect()
}

/// Draws a weighted coreset of the given size from a precomputed profile.
pub fn sample_coreset(t: &CurveDataset, profile: &SensitivityProfile, size: usize, seed: u64) -> WeightedCurveSet {
    let entries = sample_indices(profile, size, seed)
        .into_iter()
        .map(|i| WeightedCurve { curve: t.get(i).clone(), weight: profile.weight(i, size), source: Some(i) })
        .collect();
    WeightedCurveSet { entries, meta: None }
}

/// Builds a weighted ε-coreset for (k,ℓ)-median clustering of `t`.
pub fn build_coreset(t: &CurveDataset, cfg: &CoresetConfig) -> Result<WeightedCurveSet> {
    let approx = approximate_solution(t, cfg)?;
    let profile = sensitivity_profile(t, &approx)?;
    let n = t.len();
    let size = match cfg.sample_size_override {
        Some(s) => s,
        None => {
            let s = theoretical_sample_size(
                n,
                t.dim(),
                t.max_complexity(),
                cfg.k,
                cfg.ell,
                cfg.epsilon,
                cfg.delta,
                cfg.c_sample,
            );
            if s > usize::MAX as f64 / 2.0 {
                return Err(Error::Capacity {
                    what: "coreset sample",
                    required: s,
                    cap: (usize::MAX / 2) as u64,
                    hint: "pass an explicit sample size",
                });
            }
            s as usize
        }
    };
    if size as f64 > n as f64 * 1e3 {
        log::warn!("coreset sample size {size} exceeds 1000 times the input size {n}");
    }
    let mut set = sample_coreset(t, &profile, size, cfg.seed);
    set.meta = Some(CoresetMeta {
        seed: cfg.seed,
        n,
        k: cfg.k,
        ell: cfg.ell,
        epsilon: cfg.epsilon,
        sample_size: size,
        gamma_total: profile.gamma_total,
        lambda_total: profile.lambda_total,
        alpha_hat: profile.alpha,
        profile_hash: profile.hash(),
    });
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoresetErrorStats {
    /// `|pcost − cost|/cost` per center set; infinite when only the full
    /// cost vanishes.
    pub relative_errors: Vec<f64>,
    pub max: f64,
    pub mean: f64,
}

impl CoresetErrorStats {
    pub fn from_errors(relative_errors: Vec<f64>) -> Self {
        let max = relative_errors.iter().copied().fold(0.0, f64::max);
        let mean = relative_errors.iter().sum::<f64>() / relative_errors.len().max(1) as f64;
        CoresetErrorStats { relative_errors, max, mean }
    }
}

pub fn relative_error(full: f64, estimate: f64) -> f64 {
    if full == 0.0 {
        if estimate == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (estimate - full).abs() / full
    }
}

/// Relative error of `s` against `t` for every center set.
pub fn coreset_error(t: &CurveDataset, s: &WeightedCurveSet, centers: &[CenterSet]) -> CoresetErrorStats {
    let errors = centers
        .iter()
        .map(|c| {
            let d: Vec<f64> = t.curves().par_iter().map(|x| nearest_center(x, c).1).collect();
            let full: f64 = d.iter().sum();
            let ws: Vec<f64> = s.entries().par_iter().map(|e| nearest_center(&e.curve, c).1).collect();
            let est: f64 = s.entries().iter().zip(ws).map(|(e, d)| e.weight * d).sum();
            relative_error(full, est)
        })
        .collect();
    CoresetErrorStats::from_errors(errors)
}
