//! Euclidean primitives in ℝᵈ: points, closed balls and axis-aligned grids.
//!
//! Grid cells are half-open boxes `[i·r, (i+1)·r)` on every axis, so the grid
//! point of `p` is `(⌊p₁/r⌋·r, …, ⌊p_d/r⌋·r)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in ℝᵈ with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("a point needs at least one coordinate"));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {c}")));
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

/// The closed ball `{q : ‖q − center‖ ≤ radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!("ball radius must be finite and >= 0, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        dist(self.center.coords(), q) <= self.radius
    }
}

/// An axis-aligned grid with cubic cells of the given width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    cell_width: f64,
}

impl GridSpec {
    pub fn new(cell_width: f64) -> Result<Self> {
        if !(cell_width > 0.0) || !cell_width.is_finite() {
            return Err(Error::invalid(format!("grid cell width must be finite and > 0, got {cell_width}")));
        }
        Ok(GridSpec { cell_width })
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    /// Integer cell index of `p` on every axis (mathematical floor).
    pub fn cell_index(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|&x| (x / self.cell_width).floor() as i64).collect()
    }

    /// Lower corner of the cell with the given index.
    pub fn cell_corner(&self, index: &[i64]) -> Vec<f64> {
        index.iter().map(|&i| i as f64 * self.cell_width).collect()
    }

    /// Whether the half-open cell with `index` meets the closed ball.
    fn cell_meets_ball(&self, index: &[i64], center: &[f64], radius: f64) -> bool {
        let r = self.cell_width;
        let mut gap2 = 0.0;
        // The infimum over a half-open box is not attained on the open side.
        let mut attained = true;
        for (&i, &c) in index.iter().zip(center) {
            let lo = i as f64 * r;
            let hi = (i + 1) as f64 * r;
            if c < lo {
                gap2 += (lo - c) * (lo - c);
            } else if c >= hi {
                gap2 += (c - hi) * (c - hi);
                attained = false;
            }
        }
        let r2 = radius * radius;
        gap2 < r2 || (gap2 == r2 && attained)
    }

    /// Grid points of every cell intersecting `ball`, in lexicographic index
    /// order. Errors if the bounding box of the ball spans more than `cap`
    /// cells.
    pub fn cover_ball(&self, ball: &Ball, cap: u64) -> Result<Vec<Point>> {
        Ok(self.cover_ball_indices(ball, cap)?.into_iter().map(|idx| Point(self.cell_corner(&idx))).collect())
    }

    /// Like [`GridSpec::cover_ball`] but returns integer cell indices.
    pub fn cover_ball_indices(&self, ball: &Ball, cap: u64) -> Result<Vec<Vec<i64>>> {
        let required = self.bounding_cells(ball);
        if required > cap as f64 {
            return Err(Error::Capacity {
                what: "grid cover of a ball",
                required,
                cap,
                hint: "increase epsilon, reduce the instance, or raise the cell cap",
            });
        }
        let center = ball.center.coords();
        // Widen the index range by one cell per side; the exact intersection
        // test below discards the extras.
        let ranges: Vec<(i64, i64)> = center
            .iter()
            .map(|&c| {
                let lo = ((c - ball.radius) / self.cell_width).floor() as i64 - 1;
                let hi = ((c + ball.radius) / self.cell_width).floor() as i64 + 1;
                (lo, hi)
            })
            .collect();
        let mut out = Vec::new();
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            if self.cell_meets_ball(&idx, center, ball.radius) {
                out.push(idx.clone());
            }
            // Odometer, last axis fastest.
            let mut axis = idx.len();
            loop {
                if axis == 0 {
                    return Ok(out);
                }
                axis -= 1;
                if idx[axis] < ranges[axis].1 {
                    idx[axis] += 1;
                    break;
                }
                idx[axis] = ranges[axis].0;
            }
        }
    }

    /// Number of cells in the index bounding box of the ball.
    pub fn bounding_cells(&self, ball: &Ball) -> f64 {
        ball.center
            .coords()
            .iter()
            .map(|&c| {
                let lo = ((c - ball.radius) / self.cell_width).floor();
                let hi = ((c + ball.radius) / self.cell_width).floor();
                hi - lo + 1.0
            })
            .product()
    }
}

/// The r-grid-point of `p`.
pub fn grid_point(p: &Point, r: f64) -> Result<Point> {
    let grid = GridSpec::new(r)?;
    Point::new(grid.cell_corner(&grid.cell_index(p.coords())))
}

/// Grid points of all cells of width `r` that intersect the closed ball.
pub fn grid_cover_ball(ball: &Ball, r: f64, cap: u64) -> Result<Vec<Point>> {
    GridSpec::new(r)?.cover_ball(ball, cap)
}

/// Union of the grid covers of several balls, deduplicated and sorted by
/// cell index. `cap` bounds the total number of bounding-box cells visited
/// across all balls.
pub fn grid_cover_balls(balls: &[Ball], r: f64, cap: u64) -> Result<Vec<Point>> {
    let grid = GridSpec::new(r)?;
    let mut used = 0.0f64;
    let mut cells = BTreeSet::new();
    for ball in balls {
        used += grid.bounding_cells(ball);
        if used > cap as f64 {
            return Err(Error::Capacity {
                what: "grid covers of the shortcut balls",
                required: used,
                cap,
                hint: "increase epsilon, reduce the instance, or raise the cell cap",
            });
        }
        cells.extend(grid.cover_ball_indices(ball, cap)?);
    }
    Ok(cells.into_iter().map(|idx| Point(grid.cell_corner(&idx))).collect())
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Distance from `p` to the closed segment `ab`.
pub fn dist_point_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut len2 = 0.0;
    let mut dot = 0.0;
    for ((&pi, &ai), &bi) in p.iter().zip(a).zip(b) {
        let e = bi - ai;
        len2 += e * e;
        dot += (pi - ai) * e;
    }
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot / len2).clamp(0.0, 1.0);
    p.iter()
        .zip(a)
        .zip(b)
        .map(|((&pi, &ai), &bi)| {
            let q = ai + t * (bi - ai);
            (pi - q) * (pi - q)
        })
        .sum::<f64>()
        .sqrt()
}
