//! Points and tangent vectors of the open probability simplex, the Fisher
//! metric, and the prior over it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Default lower bound applied to probabilities before any geometric operation.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-3;

/// Absolute tolerance on `Σμ = 1` for a [`SimplexPoint`].
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

/// Tolerance on `Σa = 0` for a [`SimplexTangent`], scaled by `max(1, ‖a‖₁)`.
pub const TANGENT_SUM_TOL: f64 = 1e-12;

/// A strictly positive categorical distribution over `n ≥ 2` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a distribution needs at least 2 classes, got {}",
                probs.len()
            )));
        }
        if let Some((i, &v)) = probs.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NotInterior(format!("entry {i} is {v}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::NotInterior(format!("entries sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Divides a strictly positive vector by its sum.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::NotInterior(format!("cannot normalize vector with sum {sum}")));
        }
        Self::new(raw.into_iter().map(|v| v / sum).collect())
    }

    /// The uniform distribution on `n` classes.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn min(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: n,
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.probs
    }
}

/// A zero-sum vector, i.e. an element of the tangent space of the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexTangent {
    comps: Vec<f64>,
}

impl SimplexTangent {
    pub fn new(comps: Vec<f64>) -> Result<Self> {
        if comps.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tangent components"));
        }
        let sum: f64 = comps.iter().sum();
        let scale = comps.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if sum.abs() > TANGENT_SUM_TOL * scale {
            return Err(Error::NotTangent(format!("components sum to {sum:e}")));
        }
        Ok(Self { comps })
    }

    pub fn zeros(n: usize) -> Self {
        Self { comps: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[f64] {
        &self.comps
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.comps
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            comps: self.comps.iter().map(|v| v * s).collect(),
        }
    }
}

/// Fisher–Rao inner product `Σ aᵢbᵢ/μᵢ` at `mu`.
pub fn fisher_inner(mu: &SimplexPoint, a: &SimplexTangent, b: &SimplexTangent) -> Result<f64> {
    mu.check_dim(a.dim())?;
    mu.check_dim(b.dim())?;
    Ok(mu
        .probs()
        .iter()
        .zip(a.comps())
        .zip(b.comps())
        .map(|((m, x), y)| x * y / m)
        .sum())
}

/// Orthogonal projection `w − μ Σⱼ wⱼ` onto the tangent space at `mu`.
pub fn project_tangent(mu: &SimplexPoint, w: &[f64]) -> Result<SimplexTangent> {
    mu.check_dim(w.len())?;
    let total: f64 = w.iter().sum();
    let comps: Vec<f64> = w.iter().zip(mu.probs()).map(|(wi, m)| wi - m * total).collect();
    SimplexTangent::new(comps)
}

/// Raises every entry to at least `eps`, then renormalizes.
pub fn clamp_normalize(mu_raw: &[f64], eps: f64) -> Result<SimplexPoint> {
    let n = mu_raw.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 classes, got {n}")));
    }
    if !(eps > 0.0 && eps < 1.0 / n as f64) {
        return Err(Error::InvalidArgument(format!(
            "clamp eps must lie in (0, 1/{n}), got {eps}"
        )));
    }
    if mu_raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("clamp input must be finite and nonnegative".into()));
    }
    if mu_raw.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidArgument("clamp input is all zero".into()));
    }
    if mu_raw.iter().all(|v| *v >= eps) {
        let sum: f64 = mu_raw.iter().sum();
        if (sum - 1.0).abs() <= SIMPLEX_SUM_TOL {
            return SimplexPoint::new(mu_raw.to_vec());
        }
    }
    SimplexPoint::normalized(mu_raw.iter().map(|v| v.max(eps)).collect())
}

/// Draws from the uniform distribution on the (n−1)-simplex by normalizing
/// i.i.d. unit exponentials, then clamps with `eps`.
pub fn sample_uniform_simplex(n: usize, eps: f64, rng: &mut RngState) -> Result<SimplexPoint> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 classes, got {n}")));
    }
    let draws: Vec<f64> = (0..n).map(|_| rng.exp1()).collect();
    let sum: f64 = draws.iter().sum();
    let raw: Vec<f64> = draws.iter().map(|d| d / sum).collect();
    clamp_normalize(&raw, eps)
}
