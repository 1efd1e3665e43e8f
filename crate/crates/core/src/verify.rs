//! Self-verification suites: run the brute-force oracles against the fast
//! implementations and report measured quantities as JSON.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{cost, kl_median_constant_factor, one_median_bootstrap, CenterSet, SolverConfig};
use crate::coreset::{relative_error, sample_coreset, sensitivity_profile, total_sensitivity, CoresetConfig};
use crate::curve::{CurveDataset, PolygonalCurve};
use crate::error::{Error, Result};
use crate::frechet::{discrete_frechet, endpoint_lower_bound, frechet_decide, frechet_distance, DistanceQueryOptions};
use crate::median1::{one_median_5eps, Median1Config};
use crate::oracle;
use crate::simplify::simplify;
use crate::synthetic::{generate, random_curve, GeneratorConfig};

/// Closed-form Fréchet distances shipped with the crate.
pub const BUNDLED_FRECHET_CASES: &str = include_str!("../fixtures/frechet_cases.json");

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct FrechetCase {
    pub name: String,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub distance: f64,
}

#[derive(Deserialize)]
struct FrechetFixtures {
    cases: Vec<FrechetCase>,
}

pub fn parse_frechet_cases(text: &str) -> Result<Vec<FrechetCase>> {
    let f: FrechetFixtures = serde_json::from_str(text)?;
    if f.cases.is_empty() {
        return Err(Error::invalid("fixture file has no cases"));
    }
    Ok(f.cases)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Frechet,
    Simplify,
    Sensitivity,
    Coreset,
    Median1,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Frechet, Suite::Simplify, Suite::Sensitivity, Suite::Coreset, Suite::Median1];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Frechet => "frechet",
            Suite::Simplify => "simplify",
            Suite::Sensitivity => "sensitivity",
            Suite::Coreset => "coreset",
            Suite::Median1 => "median1",
        }
    }

    /// Parses a suite name; `all` expands to every suite.
    pub fn parse_list(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            Ok(Suite::ALL.to_vec())
        } else {
            Ok(vec![s.parse()?])
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::invalid(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst measured value of the checked quantity.
    pub measured: f64,
    /// Threshold the measured value is compared against.
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    /// Names of failed checks, prefixed by their suite.
    pub fn failures(&self) -> Vec<String> {
        self.suites
            .iter()
            .flat_map(|s| s.checks.iter().filter(|c| !c.passed).map(move |c| format!("{}/{}", s.suite, c.name)))
            .collect()
    }
}

/// `measured ≤ limit`.
fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Check {
    Check { name: name.into(), passed: measured <= limit, measured, limit }
}

/// A check that counts violations; passes when there are none.
fn no_violations(name: impl Into<String>, violations: usize) -> Check {
    at_most(name, violations as f64, 0.0)
}

pub fn verify(suites: &[Suite], frechet_cases: &[FrechetCase], seed: u64) -> Result<VerifyReport> {
    let reports = suites
        .iter()
        .map(|&s| {
            let checks = match s {
                Suite::Frechet => frechet_suite(frechet_cases, seed)?,
                Suite::Simplify => simplify_suite(seed),
                Suite::Sensitivity => sensitivity_suite(seed)?,
                Suite::Coreset => coreset_suite(seed)?,
                Suite::Median1 => median1_suite(seed)?,
            };
            Ok(SuiteReport { suite: s.name(), passed: checks.iter().all(|c| c.passed), checks })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport { passed: reports.iter().all(|r| r.passed), seed, suites: reports })
}

fn frechet_suite(cases: &[FrechetCase], seed: u64) -> Result<Vec<Check>> {
    let opts = DistanceQueryOptions::default();
    let mut checks = Vec::new();
    for case in cases {
        let a = PolygonalCurve::from_vertices(&case.a)?;
        let b = PolygonalCurve::from_vertices(&case.b)?;
        if a.dim() != b.dim() {
            return Err(Error::invalid(format!("fixture {} mixes dimensions", case.name)));
        }
        let d = frechet_distance(&a, &b, &opts);
        let err = (d - case.distance).abs() / case.distance.max(1e-12);
        checks.push(at_most(format!("case:{}", case.name), err, 1e-6));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut asym, mut sandwich, mut monotone, mut oracle_gap) = (0, 0, 0, 0.0f64);
    for i in 0..200 {
        let dim = rng.random_range(1..=3);
        let (ma, mb) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let a = random_curve(&mut rng, dim, ma, 3.0);
        let b = random_curve(&mut rng, dim, mb, 3.0);
        let d = frechet_distance(&a, &b, &opts);
        if d.to_bits() != frechet_distance(&b, &a, &opts).to_bits() {
            asym += 1;
        }
        if !(endpoint_lower_bound(&a, &b) <= d && d <= discrete_frechet(&a, &b)) {
            sandwich += 1;
        }
        let mut last = false;
        for k in 0..=20 {
            let ok = frechet_decide(&a, &b, d * k as f64 / 10.0);
            if last && !ok {
                monotone += 1;
            }
            last = ok;
        }
        if i < 25 {
            let step = 0.01;
            let o = oracle::resampled_discrete_frechet(&a, &b, step);
            // The resampled value lies in [d_F, d_F + step].
            let gap = if o < d { (d - o) / step } else { ((o - d) - step).max(0.0) / step };
            oracle_gap = oracle_gap.max(gap);
        }
    }
    checks.push(no_violations("symmetry", asym));
    checks.push(no_violations("bracket", sandwich));
    checks.push(no_violations("decision_monotone", monotone));
    checks.push(at_most("resampled_oracle_gap", oracle_gap, 1e-6));
    Ok(checks)
}

fn simplify_suite(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5151);
    let (mut worst, mut structure) = (0.0f64, 0);
    for _ in 0..60 {
        let dim = rng.random_range(1..=2);
        let m = rng.random_range(3..=8);
        let tau = random_curve(&mut rng, dim, m, 3.0);
        let ell = rng.random_range(2..=4);
        let r = simplify(&tau, ell).expect("ell >= 2");
        let (_, opt) = oracle::best_subsequence_simplification(&tau, ell);
        worst = worst.max(r.error - 4.0 * opt);
        let idx = r.indices.clone().unwrap_or_default();
        if r.curve.len() > ell
            || r.curve.first() != tau.first()
            || r.curve.last() != tau.last()
            || idx.windows(2).any(|w| w[0] >= w[1])
        {
            structure += 1;
        }
    }
    vec![at_most("four_factor_excess", worst, 1e-6), no_violations("subsequence_structure", structure)]
}

fn tiny_instance(rng: &mut ChaCha8Rng) -> Result<(CurveDataset, crate::clustering::ClusteringResult)> {
    let n = rng.random_range(3..=6);
    let t = oracle::random_1d_dataset(n, 4, rng.random());
    let k = rng.random_range(1..=2);
    let approx = if k == 1 {
        one_median_bootstrap(&t, 2)?
    } else {
        kl_median_constant_factor(&t, k, 2, 0.1, 0, &SolverConfig::default())?
    };
    Ok((t, approx))
}

fn sensitivity_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e45);
    let (mut closed, mut scheme, mut below) = (0.0f64, 0, 0.0f64);
    for _ in 0..20 {
        let (t, approx) = tiny_instance(&mut rng)?;
        let p = sensitivity_profile(&t, &approx)?;
        let n = t.len() as f64;
        if !p.degenerate {
            let g = total_sensitivity(p.alpha, p.k_prime);
            closed = closed.max((p.gamma_total - g).abs() / g);
        }
        let psi: f64 = p.psi.iter().sum();
        for i in 0..t.len() {
            let (g, l) = (p.gamma[i], p.lambda[i]);
            if !(g <= l && l <= 2.0 * g + 1.0 / n) || (l * n).fract() != 0.0 {
                scheme += 1;
            }
        }
        if (psi - 1.0).abs() > 1e-12 {
            scheme += 1;
        }
        let lb = oracle::sensitivity_lower_bound(&t, approx.centers.len(), 2, 20_000, rng.random());
        for (g, s) in p.gamma.iter().zip(&lb) {
            below = below.max(s - g);
        }
    }
    Ok(vec![
        at_most("closed_form_relative_error", closed, 1e-9),
        no_violations("rounding_scheme", scheme),
        at_most("empirical_sensitivity_excess", below, 0.0),
    ])
}

fn coreset_suite(seed: u64) -> Result<Vec<Check>> {
    let mut gen = GeneratorConfig::new(3, 20, 2, 6, seed);
    gen.spread = 0.5;
    let (t, _) = generate(&gen)?;
    let cfg = CoresetConfig::new(3, 3, 0.2, 0.1, seed);
    let approx = crate::coreset::approximate_solution(&t, &cfg)?;
    let profile = sensitivity_profile(&t, &approx)?;
    let centers = oracle::random_center_sets(&t, 3, 3, 1, seed ^ 0xc0);
    let c = &centers[0];
    let full = cost(&t, c);
    let opts = DistanceQueryOptions::default();
    let d: Vec<f64> = t
        .curves()
        .iter()
        .map(|x| c.centers().iter().map(|y| frechet_distance(x, y, &opts)).fold(f64::INFINITY, f64::min))
        .collect();
    let runs = 200;
    let size = 30;
    let estimates: Vec<f64> = (0..runs)
        .map(|r| {
            let s = sample_coreset(&t, &profile, size, seed.wrapping_add(r));
            s.entries().iter().map(|e| e.weight * d[e.source.expect("sampled")]).sum()
        })
        .collect();
    let mean = estimates.iter().sum::<f64>() / runs as f64;
    let var = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (runs as f64 - 1.0);
    let se = (var / runs as f64).sqrt();
    let unit = crate::coreset::WeightedCurveSet::unit(&t);
    let self_err = relative_error(full, crate::clustering::weighted_cost(&unit, c));
    Ok(vec![
        at_most("unbiasedness_standard_errors", (mean - full).abs() / se.max(1e-300), 3.0),
        at_most("unit_weight_identity", self_err, 0.0),
    ])
}

fn median1_suite(seed: u64) -> Result<Vec<Check>> {
    let t = oracle::random_1d_dataset(8, 4, seed ^ 0x3d);
    let mut cfg = Median1Config::new(0.5, 0.2, 2, seed);
    cfg.coreset_size = Some(40);
    let (c, _) = one_median_5eps(&t, &cfg)?;
    let refs: Vec<&PolygonalCurve> = t.curves().iter().collect();
    let opt = oracle::one_median_1d(&refs, 1e-3);
    let got = cost(&t, &CenterSet::single(c.clone()));
    let ratio = if opt.lower > 0.0 {
        got / opt.lower
    } else if got == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(vec![
        at_most("cost_over_optimum", ratio, 5.0 + cfg.epsilon),
        at_most("complexity", c.len() as f64, (2 * cfg.ell - 2) as f64),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixtures_pass() {
        let cases = parse_frechet_cases(BUNDLED_FRECHET_CASES).unwrap();
        assert_eq!(cases.len(), 20);
        let r = verify(&[Suite::Frechet], &cases, 1).unwrap();
        assert!(r.passed, "{:?}", r.failures());
    }

    #[test]
    fn corrupted_fixture_is_named() {
        let mut cases = parse_frechet_cases(BUNDLED_FRECHET_CASES).unwrap();
        cases[3].distance += 0.1;
        let r = verify(&[Suite::Frechet], &cases, 1).unwrap();
        assert!(!r.passed);
        assert_eq!(r.failures(), vec![format!("frechet/case:{}", cases[3].name)]);
    }
}
