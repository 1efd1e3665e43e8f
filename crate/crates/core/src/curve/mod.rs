//! Polygonal curves and curve datasets.
//!
//! A curve is stored as its vertex sequence only. Instants are implicit and
//! uniform on the edges; every quantity computed by this crate is invariant
//! under reparameterization, so they are never materialized.

pub mod io;

use crate::error::{Error, Result};
use crate::geometry::{dist_point_segment, Point};

/// Default relative collinearity tolerance used by [`normalize`].
pub const DEFAULT_COLLINEARITY_TOL: f64 = 1e-12;

/// A polygonal curve in ℝᵈ given by `m ≥ 1` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalCurve {
    dim: usize,
    coords: Vec<f64>,
    id: Option<String>,
}

impl PolygonalCurve {
    /// Builds a curve from a flat coordinate buffer without normalizing it.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("curve dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::invalid("a curve needs at least one vertex"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "coordinate buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite vertex coordinate {c}")));
        }
        Ok(PolygonalCurve { dim, coords, id: None })
    }

    /// Builds a curve from points without normalizing it.
    pub fn from_points(points: &[Point]) -> Result<Self> {
        let dim = points.first().ok_or_else(|| Error::invalid("a curve needs at least one vertex"))?.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::invalid(format!(
                    "vertex {i} has dimension {} but vertex 0 has dimension {dim}",
                    p.dim()
                )));
            }
            coords.extend_from_slice(p.coords());
        }
        Self::from_flat(dim, coords)
    }

    /// Convenience constructor from nested coordinate vectors.
    pub fn from_vertices(vertices: &[Vec<f64>]) -> Result<Self> {
        let points = vertices.iter().map(|v| Point::new(v.clone())).collect::<Result<Vec<_>>>()?;
        Self::from_points(&points)
    }

    /// Builds a curve from vertices picked out of `self` by index.
    pub(crate) fn pick(&self, indices: &[usize]) -> PolygonalCurve {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.vertex(i));
        }
        PolygonalCurve { dim: self.dim, coords, id: None }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vertices, `|τ|`.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; curves have at least one vertex.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn first(&self) -> &[f64] {
        self.vertex(0)
    }

    pub fn last(&self) -> &[f64] {
        self.vertex(self.len() - 1)
    }

    /// Longest edge length; zero for a single point.
    pub fn max_edge_length(&self) -> f64 {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.coords.chunks_exact(self.dim).skip(1))
            .map(|(a, b)| crate::geometry::dist(a, b))
            .fold(0.0, f64::max)
    }

    /// Returns the normalized version of this curve, keeping its id.
    pub fn normalized(&self, collinearity_tol: f64) -> PolygonalCurve {
        let keep = normalize_indices(self.dim, &self.coords, collinearity_tol);
        let mut out = self.pick(&keep);
        out.id = self.id.clone();
        out
    }
}

/// Indices of the vertices kept by normalization, in order.
///
/// Exact consecutive duplicates are dropped, and a middle vertex is dropped
/// when its distance to the segment joining its neighbours is at most
/// `tol` times that segment's length. Every surviving consecutive triple has
/// been tested, which makes the operation idempotent.
pub(crate) fn normalize_indices(dim: usize, coords: &[f64], tol: f64) -> Vec<usize> {
    let v = |i: usize| &coords[i * dim..(i + 1) * dim];
    let n = coords.len() / dim;
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        if let Some(&last) = keep.last() {
            if v(last) == v(i) {
                continue;
            }
        }
        keep.push(i);
        while keep.len() >= 3 {
            let k = keep.len();
            let (a, b, c) = (v(keep[k - 3]), v(keep[k - 2]), v(keep[k - 1]));
            let span = crate::geometry::dist(a, c);
            if dist_point_segment(b, a, c) <= tol * span {
                keep.remove(k - 2);
                // a == c leaves a consecutive duplicate behind.
                if keep.len() >= 2 && v(keep[keep.len() - 2]) == v(keep[keep.len() - 1]) {
                    keep.pop();
                }
            } else {
                break;
            }
        }
    }
    keep
}

/// Builds a normalized curve from raw vertices.
pub fn normalize(raw_vertices: &[Point], collinearity_tol: f64) -> Result<PolygonalCurve> {
    if !(collinearity_tol >= 0.0) {
        return Err(Error::invalid("collinearity tolerance must be >= 0"));
    }
    Ok(PolygonalCurve::from_points(raw_vertices)?.normalized(collinearity_tol))
}

/// A non-empty collection of curves sharing one ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveDataset {
    curves: Vec<PolygonalCurve>,
    dim: usize,
}

impl CurveDataset {
    pub fn new(curves: Vec<PolygonalCurve>) -> Result<Self> {
        let dim = curves.first().ok_or_else(|| Error::invalid("a dataset needs at least one curve"))?.dim();
        if let Some((i, c)) = curves.iter().enumerate().find(|(_, c)| c.dim() != dim) {
            return Err(Error::invalid(format!(
                "curve {i} has dimension {} but the dataset has dimension {dim}",
                c.dim()
            )));
        }
        Ok(CurveDataset { curves, dim })
    }

    pub fn curves(&self) -> &[PolygonalCurve] {
        &self.curves
    }

    pub fn into_curves(self) -> Vec<PolygonalCurve> {
        self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `m`, the largest complexity in the dataset.
    pub fn max_complexity(&self) -> usize {
        self.curves.iter().map(PolygonalCurve::len).max().unwrap_or(0)
    }

    pub fn get(&self, i: usize) -> &PolygonalCurve {
        &self.curves[i]
    }
}
