//! Tensor-product grids and the geometric quantities of a point cloud.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::distance;

/// Axis-aligned box `[a_1, b_1] x ... x [a_d, b_d]`.
pub type Bounds = Vec<[f64; 2]>;

/// A tensor-product grid over a box. Nodes on each axis run from
/// `a + offset` to `b - offset` in steps of `spacing`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub bounds: Bounds,
    pub spacing: f64,
    #[serde(default)]
    pub offset: f64,
}

impl GridSpec {
    pub fn nodes(bounds: Bounds, spacing: f64) -> Self {
        Self {
            bounds,
            spacing,
            offset: 0.0,
        }
    }

    /// Cell-centred grid: nodes offset by half a spacing from the box faces.
    pub fn cell_centres(bounds: Bounds, spacing: f64) -> Self {
        Self {
            bounds,
            spacing,
            offset: 0.5 * spacing,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn axis(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        let edge = hi - lo;
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got {}",
                self.spacing
            )));
        }
        if !(edge >= 0.0) || self.offset < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "invalid grid axis [{lo}, {hi}] with offset {}",
                self.offset
            )));
        }
        if self.spacing > edge + 2.0 * self.offset + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "spacing {} larger than box edge {}",
                self.spacing,
                edge + 2.0 * self.offset
            )));
        }
        let (a, b) = (lo + self.offset, hi - self.offset);
        let span = b - a;
        let steps = (span / self.spacing).round();
        if (steps * self.spacing - span).abs() > 1e-12 * span.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "spacing {} does not divide the axis length {span}",
                self.spacing
            )));
        }
        let steps = steps as usize;
        Ok((0..=steps)
            .map(|m| if m == steps { b } else { a + m as f64 * self.spacing })
            .collect())
    }
}

/// Tensor-product grid, lexicographic with the first coordinate slowest.
pub fn make_grid(spec: &GridSpec) -> Result<Vec<Vec<f64>>> {
    if spec.bounds.is_empty() {
        return Err(Error::Empty("grid bounds"));
    }
    let axes = spec
        .bounds
        .iter()
        .map(|&[lo, hi]| spec.axis(lo, hi))
        .collect::<Result<Vec<_>>>()?;
    let mut points = vec![Vec::with_capacity(axes.len())];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Minimum pairwise distance.
pub fn separation_distance(points: &[Vec<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "separation distance needs at least two points".into(),
        ));
    }
    Ok((0..points.len())
        .into_par_iter()
        .map(|i| {
            points[i + 1..]
                .iter()
                .map(|q| distance(&points[i], q))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min))
}

/// Largest distance from a probe node to its nearest point, over a probe
/// grid of spacing at most `probe_spacing` covering `bounds`. This is a lower
/// bound of the fill distance that converges as the probes are refined.
pub fn fill_distance_estimate(points: &[Vec<f64>], bounds: &Bounds, probe_spacing: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("point set"));
    }
    if !(probe_spacing.is_finite() && probe_spacing > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "probe spacing must be positive, got {probe_spacing}"
        )));
    }
    // shrink the probe spacing so it divides every edge
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&[lo, hi]| {
            let steps = ((hi - lo) / probe_spacing).ceil().max(1.0) as usize;
            (0..=steps)
                .map(|m| lo + (hi - lo) * m as f64 / steps as f64)
                .collect()
        })
        .collect();
    let total: usize = axes.iter().map(Vec::len).product();
    Ok((0..total)
        .into_par_iter()
        .map_init(
            || vec![0.0; axes.len()],
            |probe, mut idx| {
                for d in (0..axes.len()).rev() {
                    let len = axes[d].len();
                    probe[d] = axes[d][idx % len];
                    idx /= len;
                }
                points
                    .iter()
                    .map(|p| distance(p, probe))
                    .fold(f64::INFINITY, f64::min)
            },
        )
        .reduce(|| 0.0, f64::max))
}
