//! Swiss roll on the 2-simplex, Gaussian kernel density estimates on a
//! barycentric grid, and the KL divergence between two such estimates.
//!
//! Distances are measured in the planar embedding of the simplex as the
//! equilateral triangle with unit side and vertices `(0,0)`, `(1,0)`,
//! `(1/2, √3/2)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::SimplexPoint;
use crate::rng::RngState;

pub const DEFAULT_BANDWIDTH: f64 = 0.02;
pub const DEFAULT_RESOLUTION: usize = 100;
pub const DEFAULT_KL_FLOOR: f64 = 1e-10;
/// Minimum barycentric coordinate of every Swiss-roll point.
pub const SWISS_ROLL_MARGIN: f64 = 0.02;
/// Jitter of the roll before rescaling, relative to a unit outer radius.
pub const SWISS_ROLL_JITTER: f64 = 0.01;

const HEIGHT: f64 = 0.866_025_403_784_438_6;

/// Planar coordinates of a point of the 2-simplex.
pub fn to_plane(mu: &[f64]) -> [f64; 2] {
    [mu[1] + 0.5 * mu[2], HEIGHT * mu[2]]
}

/// Barycentric coordinates of a planar point; inverse of [`to_plane`].
pub fn from_plane(q: [f64; 2]) -> [f64; 3] {
    let m2 = q[1] / HEIGHT;
    let m1 = q[0] - 0.5 * m2;
    [1.0 - m1 - m2, m1, m2]
}

fn check_2_simplex(points: &[SimplexPoint]) -> Result<()> {
    match points.iter().find(|p| p.dim() != 3) {
        Some(p) => Err(Error::DimensionMismatch {
            expected: 3,
            got: p.dim(),
        }),
        None => Ok(()),
    }
}

/// A 2-D Swiss roll placed inside the simplex with every coordinate at
/// least [`SWISS_ROLL_MARGIN`].
///
/// Angles are uniform on `[1.5π, 4.5π]` with radius `θ/4.5π`, and jitter
/// `N(0, 0.01²)` is added per roll coordinate. The roll is centred on the
/// barycentre and scaled so its outermost point touches the disc whose
/// points all satisfy the margin.
pub fn swiss_roll_simplex(count: usize, rng: &mut RngState) -> Result<Vec<SimplexPoint>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    let roll: Vec<[f64; 2]> = (0..count)
        .map(|_| {
            let theta = rng.uniform_in(1.5 * PI, 4.5 * PI);
            let r = theta / (4.5 * PI);
            let jx = SWISS_ROLL_JITTER * rng.standard_normal();
            let jy = SWISS_ROLL_JITTER * rng.standard_normal();
            [r * theta.cos() + jx, r * theta.sin() + jy]
        })
        .collect();
    let reach = roll.iter().map(|q| q[0].hypot(q[1])).fold(0.0, f64::max);
    let allowed = (1.0 / 3.0 - SWISS_ROLL_MARGIN) * HEIGHT;
    let scale = allowed / reach;
    let centre = to_plane(&[1.0 / 3.0; 3]);
    roll.iter()
        .map(|q| {
            let mu = from_plane([centre[0] + scale * q[0], centre[1] + scale * q[1]]);
            SimplexPoint::normalized(mu.to_vec())
        })
        .collect()
}

/// Density values on the barycentric lattice `{(i, j, k)/R : i+j+k = R}`
/// with lumped (vertex-averaged) quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    resolution: usize,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    density: Vec<f64>,
}

impl DensityGrid {
    /// A grid with all densities zero.
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidArgument("grid resolution must be positive".into()));
        }
        let r = resolution as f64;
        let cell = HEIGHT / 2.0 / (r * r);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for i in 0..=resolution {
            for j in 0..=resolution - i {
                let k = resolution - i - j;
                nodes.push([i as f64 / r, j as f64 / r, k as f64 / r]);
                let zeros = [i, j, k].iter().filter(|c| **c == 0).count();
                // Each node carries a third of the area of its adjacent cells:
                // 6 inside, 3 on an edge, 1 at a corner.
                let adjacent = [6.0, 3.0, 1.0][zeros];
                weights.push(adjacent * cell / 3.0);
            }
        }
        let density = vec![0.0; nodes.len()];
        Ok(Self {
            resolution,
            nodes,
            weights,
            density,
        })
    }

    /// The normalized constant density.
    pub fn uniform(resolution: usize) -> Result<Self> {
        let mut g = Self::new(resolution)?;
        g.density.iter_mut().for_each(|d| *d = 1.0);
        g.normalize()?;
        Ok(g)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Quadrature of the density over the triangle.
    pub fn integral(&self) -> f64 {
        self.weights.iter().zip(&self.density).map(|(w, d)| w * d).sum()
    }

    /// Index of the largest density value.
    pub fn argmax(&self) -> usize {
        self.density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0
    }

    fn normalize(&mut self) -> Result<()> {
        let total = self.integral();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NonFinite("density normalization"));
        }
        self.density.iter_mut().for_each(|d| *d /= total);
        Ok(())
    }
}

/// Isotropic Gaussian KDE of `samples` on the nodes of `grid`, normalized so
/// the grid quadrature equals one.
pub fn kde_density(samples: &[SimplexPoint], bandwidth: f64, grid: &DensityGrid) -> Result<DensityGrid> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("KDE needs at least one sample".into()));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
    }
    check_2_simplex(samples)?;
    let pts: Vec<[f64; 2]> = samples.iter().map(|s| to_plane(s.probs())).collect();
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    // Beyond 40 bandwidths every kernel term underflows relative to the peak.
    let cutoff = (40.0 * bandwidth).powi(2);
    let mut out = DensityGrid::new(grid.resolution)?;
    for (node, d) in grid.nodes.iter().zip(out.density.iter_mut()) {
        let q = to_plane(node);
        *d = pts
            .iter()
            .map(|s| {
                let r2 = (q[0] - s[0]).powi(2) + (q[1] - s[1]).powi(2);
                if r2 > cutoff {
                    0.0
                } else {
                    (-r2 * inv).exp()
                }
            })
            .sum();
    }
    out.normalize()?;
    Ok(out)
}

/// `Σ w·p·ln((p + floor)/(q + floor))` over the grid.
pub fn kde_kl(data: &DensityGrid, generated: &DensityGrid, floor: f64) -> Result<f64> {
    if data.resolution != generated.resolution {
        return Err(Error::InvalidArgument(format!(
            "grid resolutions differ: {} vs {}",
            data.resolution, generated.resolution
        )));
    }
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument(format!("floor must be positive, got {floor}")));
    }
    Ok(data
        .weights
        .iter()
        .zip(data.density.iter().zip(&generated.density))
        .map(|(w, (p, q))| w * p * ((p + floor) / (q + floor)).ln())
        .sum())
}

/// Summary of one KDE comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeReport {
    pub kl: f64,
    pub bandwidth: f64,
    pub resolution: usize,
    pub floor: f64,
    pub data_count: usize,
    pub generated_count: usize,
}

/// KDE both sample sets on one grid and compare them.
pub fn kde_compare(
    data: &[SimplexPoint],
    generated: &[SimplexPoint],
    bandwidth: f64,
    resolution: usize,
    floor: f64,
) -> Result<KdeReport> {
    let grid = DensityGrid::new(resolution)?;
    let p = kde_density(data, bandwidth, &grid)?;
    let q = kde_density(generated, bandwidth, &grid)?;
    Ok(KdeReport {
        kl: kde_kl(&p, &q, floor)?,
        bandwidth,
        resolution,
        floor,
        data_count: data.len(),
        generated_count: generated.len(),
    })
}
