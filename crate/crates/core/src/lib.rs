//! (k,ℓ)-median clustering of polygonal curves under the continuous Fréchet
//! distance: sensitivity-sampling coresets, a constant-factor solver, a
//! coreset-accelerated (5+ε)-approximate (1,ℓ)-median, and brute-force
//! oracles that check their guarantees on small instances.

pub mod cli;
pub mod clustering;
pub mod coreset;
pub mod curve;
pub mod error;
pub mod frechet;
pub mod geometry;
pub mod median1;
pub mod oracle;
pub mod simplify;
pub mod synthetic;
pub mod verify;

pub use clustering::{
    cost, discrete_kmedian, kl_median_constant_factor, one_median_bootstrap, voronoi_partition, weighted_cost,
    CenterSet, ClusteringResult, SolverConfig, SolverMode,
};
pub use coreset::{
    build_coreset, coreset_error, sensitivity_profile, CoresetConfig, SensitivityProfile, WeightedCurve,
    WeightedCurveSet,
};
pub use curve::{normalize, CurveDataset, PolygonalCurve};
pub use error::{Error, Result};
pub use frechet::{discrete_frechet, frechet_decide, frechet_distance, DistanceQueryOptions};
pub use geometry::{grid_cover_ball, grid_point, Ball, GridSpec, Point};
pub use median1::{one_median_5eps, Median1Config, Median1Trace};
pub use simplify::{simplify, simplify_all, SimplificationResult};
