//! Finsler metric, α-energies of discretized curves and a perturbation
//! oracle for optimality tests.

use crate::alpha::AlphaParam;
use crate::error::{Error, Result};
use crate::geodesic::GeodesicCurve;
use crate::manifold::{SimplexPoint, SimplexTangent};
use crate::rng::RngState;

/// Number of sine modes in a perturbation.
const PERTURB_MODES: usize = 3;

/// Distributions at uniform times `k/K`, `k = 0..=K`, with `K ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    nodes: Vec<SimplexPoint>,
}

impl DiscreteCurve {
    pub fn new(nodes: Vec<SimplexPoint>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "a discrete curve needs K ≥ 2 intervals, got {}",
                nodes.len().saturating_sub(1)
            )));
        }
        let n = nodes[0].dim();
        if let Some(bad) = nodes.iter().find(|p| p.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.dim(),
            });
        }
        Ok(Self { nodes })
    }

    /// Samples `curve` at `k/K` for `k = 0..=K`.
    pub fn from_geodesic(curve: &GeodesicCurve, intervals: usize) -> Result<Self> {
        let nodes = (0..=intervals)
            .map(|k| curve.point_simplex(k as f64 / intervals as f64))
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[SimplexPoint] {
        &self.nodes
    }

    /// Number of intervals `K`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn reversed(&self) -> Self {
        Self {
            nodes: self.nodes.iter().rev().cloned().collect(),
        }
    }

    /// Smallest coordinate over the interior nodes.
    pub fn interior_margin(&self) -> f64 {
        self.nodes[1..self.nodes.len() - 1]
            .iter()
            .map(SimplexPoint::min)
            .fold(f64::INFINITY, f64::min)
    }

    /// Forward-difference velocity on interval `k`.
    fn velocity(&self, k: usize) -> Vec<f64> {
        let scale = self.intervals() as f64;
        self.nodes[k + 1]
            .probs()
            .iter()
            .zip(self.nodes[k].probs())
            .map(|(b, a)| (b - a) * scale)
            .collect()
    }
}

/// `F(μ, a)^p = Σ |aᵢ/μᵢ|^p μᵢ`.
fn finsler_pow(mu: &[f64], a: &[f64], p: f64) -> f64 {
    mu.iter().zip(a).map(|(m, ai)| (ai / m).abs().powf(p) * m).sum()
}

/// `F(μ, a) = (Σ |aᵢ/μᵢ|^p μᵢ)^(1/p)`.
pub fn finsler_metric(mu: &SimplexPoint, a: &SimplexTangent, alpha: AlphaParam) -> Result<f64> {
    let p = alpha.finite_p("the Finsler metric needs finite p; use max_relative_velocity")?;
    mu.check_dim(a.dim())?;
    Ok(finsler_pow(mu.probs(), a.comps(), p).powf(1.0 / p))
}

/// `(1/p)∫F^p dt` with forward-difference velocities and the trapezoid rule
/// over each interval's two endpoints.
pub fn curve_alpha_energy(curve: &DiscreteCurve, alpha: AlphaParam) -> Result<f64> {
    let p = alpha.finite_p("the alpha-energy needs finite p")?;
    let dt = 1.0 / curve.intervals() as f64;
    let mut total = 0.0;
    for k in 0..curve.intervals() {
        let v = curve.velocity(k);
        let left = finsler_pow(curve.nodes[k].probs(), &v, p);
        let right = finsler_pow(curve.nodes[k + 1].probs(), &v, p);
        total += 0.5 * dt * (left + right);
    }
    Ok(total / p)
}

/// `½∫‖γ̇‖²_g dt`, the α = 0 energy.
pub fn kinetic_energy(curve: &DiscreteCurve) -> f64 {
    curve_alpha_energy(curve, AlphaParam::new(0.0).expect("valid alpha")).expect("finite p")
}

/// `max |γ̇ᵢ/γᵢ|` over intervals, both interval endpoints and components.
pub fn max_relative_velocity(curve: &DiscreteCurve) -> f64 {
    let mut best = 0.0f64;
    for k in 0..curve.intervals() {
        let v = curve.velocity(k);
        for node in [&curve.nodes[k], &curve.nodes[k + 1]] {
            for (vi, m) in v.iter().zip(node.probs()) {
                best = best.max((vi / m).abs());
            }
        }
    }
    best
}

/// Displaces interior nodes by a smooth zero-sum field of max-abs
/// `magnitude`; endpoints are kept bit-identical.
///
/// Each component is a sum of `sin(mπt)` modes with standard normal
/// coefficients, centred across components at every node and rescaled.
pub fn perturb_curve(curve: &DiscreteCurve, magnitude: f64, rng: &mut RngState) -> Result<DiscreteCurve> {
    if !(magnitude >= 0.0) {
        return Err(Error::InvalidArgument(format!("perturbation magnitude {magnitude} is negative")));
    }
    if magnitude == 0.0 {
        return Ok(curve.clone());
    }
    let margin = curve.interior_margin();
    if magnitude >= margin {
        return Err(Error::InvalidArgument(format!(
            "perturbation magnitude {magnitude} is not below the interior margin {margin}"
        )));
    }
    let n = curve.nodes[0].dim();
    let k_max = curve.intervals();
    let coef: Vec<[f64; PERTURB_MODES]> = (0..n)
        .map(|_| std::array::from_fn(|_| rng.standard_normal()))
        .collect();
    let mut field: Vec<Vec<f64>> = (0..=k_max)
        .map(|k| {
            let t = k as f64 / k_max as f64;
            let raw: Vec<f64> = coef
                .iter()
                .map(|c| {
                    c.iter()
                        .enumerate()
                        .map(|(m, cm)| cm * ((m + 1) as f64 * std::f64::consts::PI * t).sin())
                        .sum()
                })
                .collect();
            let mean = raw.iter().sum::<f64>() / n as f64;
            raw.iter().map(|r| r - mean).collect()
        })
        .collect();
    let peak = field[1..k_max]
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(curve.clone());
    }
    let scale = magnitude / peak;
    for row in &mut field {
        row.iter_mut().for_each(|v| *v *= scale);
    }
    let mut nodes = Vec::with_capacity(k_max + 1);
    nodes.push(curve.nodes[0].clone());
    for k in 1..k_max {
        let raw: Vec<f64> = curve.nodes[k]
            .probs()
            .iter()
            .zip(&field[k])
            .map(|(m, d)| m + d)
            .collect();
        nodes.push(SimplexPoint::normalized(raw)?);
    }
    nodes.push(curve.nodes[k_max].clone());
    DiscreteCurve::new(nodes)
}
