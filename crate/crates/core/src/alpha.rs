//! α-representations of the simplex, mapped tangents, the α-norm and
//! α-divergences.
//!
//! For α < 1 a distribution μ is represented by `x = μ^(1/p)` with
//! `p = 2/(1−α)`, a point on the positive orthant of the unit L_p sphere.
//! At α = 1 the representation is `x = log μ` and every formula switches to
//! its logit-space branch; the L_p machinery is never evaluated at p = ∞.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{project_tangent, SimplexPoint, SimplexTangent};

/// Tolerance on the sphere constraint of a [`MappedState`] and on tangency of
/// a [`MappedTangent`].
pub const MAPPED_TOL: f64 = 1e-9;

/// Geometry selector α ∈ [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AlphaParam {
    alpha: f64,
    p: f64,
}

impl AlphaParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&alpha) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        let p = if alpha == 1.0 { f64::INFINITY } else { 2.0 / (1.0 - alpha) };
        Ok(Self { alpha, p })
    }

    /// Builds the parameter from its exponent `p ≥ 1`, keeping `p` exact.
    pub fn from_exponent(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            return Self::new(1.0);
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("exponent p must be ≥ 1, got {p}")));
        }
        Ok(Self {
            alpha: 1.0 - 2.0 / p,
            p,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `2/(1−α)`; `f64::INFINITY` at α = 1.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// True at α = 1, where the logit-space closed forms apply.
    pub fn is_logit(&self) -> bool {
        self.p.is_infinite()
    }

    /// True for the α values with closed-form maps, {−1, 0, 1}.
    pub fn is_closed_form(&self) -> bool {
        self.alpha == -1.0 || self.alpha == 0.0 || self.alpha == 1.0
    }

    pub(crate) fn finite_p(&self, what: &'static str) -> Result<f64> {
        if self.is_logit() {
            return Err(Error::UnsupportedAlpha {
                alpha: self.alpha,
                reason: what,
            });
        }
        Ok(self.p)
    }
}

impl TryFrom<f64> for AlphaParam {
    type Error = Error;

    fn try_from(a: f64) -> Result<Self> {
        Self::new(a)
    }
}

impl From<AlphaParam> for f64 {
    fn from(a: AlphaParam) -> f64 {
        a.alpha
    }
}

/// `x^p` for `x > 0`, with `x^1` exact.
#[inline]
pub(crate) fn powp(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

pub(crate) fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// The α-representation of a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedState {
    coords: Vec<f64>,
    alpha: AlphaParam,
}

impl MappedState {
    /// Validates `coords` against the sphere (α < 1) or logsumexp (α = 1)
    /// constraint.
    pub fn new(coords: Vec<f64>, alpha: AlphaParam) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidArgument("mapped state needs at least 2 coordinates".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("mapped coordinates"));
        }
        if alpha.is_logit() {
            let lse = logsumexp(&coords);
            if lse.abs() > MAPPED_TOL {
                return Err(Error::NotInterior(format!("logsumexp of logit coordinates is {lse:e}")));
            }
        } else {
            if let Some(c) = coords.iter().find(|c| !(**c > 0.0)) {
                return Err(Error::NotInterior(format!("mapped coordinate {c} is not positive")));
            }
            let s: f64 = coords.iter().map(|c| powp(*c, alpha.p())).sum();
            if (s - 1.0).abs() > MAPPED_TOL {
                return Err(Error::NotInterior(format!("Σx^p = {s}, expected 1")));
            }
        }
        Ok(Self { coords, alpha })
    }

    /// Projects a strictly positive vector onto the unit L_p sphere (α < 1),
    /// or shifts logits so that logsumexp is 0 (α = 1).
    pub fn normalize(raw: Vec<f64>, alpha: AlphaParam) -> Result<Self> {
        if raw.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("state before normalization"));
        }
        if alpha.is_logit() {
            let lse = logsumexp(&raw);
            return Self::new(raw.iter().map(|c| c - lse).collect(), alpha);
        }
        if let Some(c) = raw.iter().find(|c| !(**c > 0.0)) {
            return Err(Error::NotInterior(format!("coordinate {c} left the positive orthant")));
        }
        let norm = lp_norm(&raw, alpha.p());
        Self::new(raw.iter().map(|c| c / norm).collect(), alpha)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn alpha(&self) -> AlphaParam {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The weights `s` with tangency `Σ sᵢuᵢ = 0`: `x^(p−1)` for α < 1 and `μ`
    /// at α = 1.
    pub fn normal_weights(&self) -> Vec<f64> {
        if self.alpha.is_logit() {
            self.coords.iter().map(|c| c.exp()).collect()
        } else {
            let p = self.alpha.p();
            self.coords.iter().map(|c| powp(*c, p) / c).collect()
        }
    }

    pub(crate) fn check_compatible(&self, other: &MappedState) -> Result<()> {
        if self.alpha != other.alpha {
            return Err(Error::AlphaMismatch(self.alpha.alpha(), other.alpha.alpha()));
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

/// `‖c‖_p` for a positive vector, scaled by the maximum so large `p` does not
/// underflow.
pub(crate) fn lp_norm(c: &[f64], p: f64) -> f64 {
    let m = c.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    m * c.iter().map(|v| powp(v / m, p)).sum::<f64>().powf(1.0 / p)
}

/// A tangent vector to the mapped manifold at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedTangent {
    comps: Vec<f64>,
    base: MappedState,
}

impl MappedTangent {
    pub fn new(comps: Vec<f64>, base: MappedState) -> Result<Self> {
        if comps.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: comps.len(),
            });
        }
        if comps.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("mapped tangent"));
        }
        let s = base.normal_weights();
        let dot: f64 = s.iter().zip(&comps).map(|(a, b)| a * b).sum();
        let scale: f64 = s.iter().zip(&comps).map(|(a, b)| (a * b).abs()).sum::<f64>().max(1.0);
        if dot.abs() > MAPPED_TOL * scale {
            return Err(Error::NotTangent(format!("normal component {dot:e}")));
        }
        Ok(Self { comps, base })
    }

    pub fn zeros(base: MappedState) -> Self {
        Self {
            comps: vec![0.0; base.dim()],
            base,
        }
    }

    pub fn comps(&self) -> &[f64] {
        &self.comps
    }

    pub fn base(&self) -> &MappedState {
        &self.base
    }

    pub fn alpha(&self) -> AlphaParam {
        self.base.alpha
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            comps: self.comps.iter().map(|c| c * s).collect(),
            base: self.base.clone(),
        }
    }

    /// Euclidean norm of the components.
    pub fn l2(&self) -> f64 {
        self.comps.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

pub fn to_alpha_rep(mu: &SimplexPoint, alpha: AlphaParam) -> MappedState {
    let coords = if alpha.is_logit() {
        mu.probs().iter().map(|m| m.ln()).collect()
    } else if alpha.p() == 1.0 {
        mu.probs().to_vec()
    } else {
        let inv = 1.0 / alpha.p();
        mu.probs().iter().map(|m| m.powf(inv)).collect()
    };
    MappedState { coords, alpha }
}

/// Inverse of [`to_alpha_rep`]; the result is renormalized by its sum.
pub fn from_alpha_rep(x: &MappedState) -> Result<SimplexPoint> {
    let raw: Vec<f64> = if x.alpha.is_logit() {
        x.coords.iter().map(|c| c.exp()).collect()
    } else {
        let p = x.alpha.p();
        x.coords.iter().map(|c| powp(*c, p)).collect()
    };
    SimplexPoint::normalized(raw)
}

pub fn map_tangent(mu: &SimplexPoint, a: &SimplexTangent, alpha: AlphaParam) -> Result<MappedTangent> {
    mu.check_dim(a.dim())?;
    let base = to_alpha_rep(mu, alpha);
    let comps = if alpha.is_logit() {
        a.comps().iter().zip(mu.probs()).map(|(ai, m)| ai / m).collect()
    } else if alpha.p() == 1.0 {
        a.comps().to_vec()
    } else {
        let p = alpha.p();
        a.comps()
            .iter()
            .zip(mu.probs())
            .zip(base.coords())
            .map(|((ai, m), x)| x * ai / (p * m))
            .collect()
    };
    MappedTangent::new(comps, base)
}

pub fn unmap_tangent(u: &MappedTangent) -> Result<SimplexTangent> {
    let mu = from_alpha_rep(&u.base)?;
    let comps = if u.alpha().is_logit() {
        u.comps.iter().zip(mu.probs()).map(|(ui, m)| ui * m).collect()
    } else if u.alpha().p() == 1.0 {
        u.comps.clone()
    } else {
        let p = u.alpha().p();
        u.comps
            .iter()
            .zip(mu.probs())
            .zip(u.base.coords())
            .map(|((ui, m), x)| p * m * ui / x)
            .collect()
    };
    SimplexTangent::new(comps)
}

/// Orthogonal projection of `w` onto the tangent space at `x`:
/// `w − x·Σ x^(p−1)w` for α < 1 and `w − Σ μw` at α = 1.
pub fn project_sphere_tangent(x: &MappedState, w: &[f64]) -> Result<MappedTangent> {
    if w.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: w.len(),
        });
    }
    let s = x.normal_weights();
    let dot: f64 = s.iter().zip(w).map(|(a, b)| a * b).sum();
    let comps = if x.alpha.is_logit() {
        w.iter().map(|wi| wi - dot).collect()
    } else {
        w.iter().zip(&x.coords).map(|(wi, xi)| wi - xi * dot).collect()
    };
    MappedTangent::new(comps, x.clone())
}

/// Riemannian norm of a mapped tangent: `p²Σu²μ^α` for α < 1, `Σu²μ` at α = 1.
pub fn alpha_norm_sq(u: &MappedTangent, mu: &SimplexPoint) -> Result<f64> {
    mu.check_dim(u.comps.len())?;
    let alpha = u.alpha();
    let expected = to_alpha_rep(mu, alpha);
    let mismatch = expected
        .coords
        .iter()
        .zip(&u.base.coords)
        .any(|(a, b)| (a - b).abs() > MAPPED_TOL * a.abs().max(1.0));
    if mismatch {
        return Err(Error::InvalidArgument("tangent is not based at the given distribution".into()));
    }
    Ok(alpha_norm_sq_raw(&u.comps, mu.probs(), alpha))
}

/// [`alpha_norm_sq`] without base validation.
pub(crate) fn alpha_norm_sq_raw(u: &[f64], mu: &[f64], alpha: AlphaParam) -> f64 {
    if alpha.is_logit() {
        return u.iter().zip(mu).map(|(ui, m)| ui * ui * m).sum();
    }
    let p = alpha.p();
    let a = alpha.alpha();
    p * p * u.iter().zip(mu).map(|(ui, m)| ui * ui * m.powf(a)).sum::<f64>()
}

fn kl(mu: &[f64], nu: &[f64]) -> f64 {
    mu.iter().zip(nu).map(|(m, n)| m * (m / n).ln()).sum()
}

/// α-divergence on the simplex, normalized so that `D(μ‖μ) = 0`; the limits
/// α = −1 and α = 1 are `KL(μ‖ν)` and `KL(ν‖μ)`.
pub fn alpha_divergence(mu: &SimplexPoint, nu: &SimplexPoint, alpha: AlphaParam) -> Result<f64> {
    mu.check_dim(nu.dim())?;
    let a = alpha.alpha();
    if a == -1.0 {
        return Ok(kl(mu.probs(), nu.probs()));
    }
    if a == 1.0 {
        return Ok(kl(nu.probs(), mu.probs()));
    }
    let (en, em) = ((1.0 + a) / 2.0, (1.0 - a) / 2.0);
    let s: f64 = mu
        .probs()
        .iter()
        .zip(nu.probs())
        .map(|(m, n)| n.powf(en) * m.powf(em))
        .sum();
    Ok(4.0 / (1.0 - a * a) * (1.0 - s))
}

/// α-divergence `D^(α)(m‖n)` between positive measures.
pub fn m_plus_divergence(m: &[f64], n: &[f64], alpha: AlphaParam) -> Result<f64> {
    check_positive_pair(m, n)?;
    let a = alpha.alpha();
    let v = if a == -1.0 {
        m.iter().zip(n).map(|(mi, ni)| mi * (mi / ni).ln() - mi + ni).sum()
    } else if a == 1.0 {
        m.iter().zip(n).map(|(mi, ni)| ni * (ni / mi).ln() - ni + mi).sum()
    } else {
        let (en, em) = ((1.0 + a) / 2.0, (1.0 - a) / 2.0);
        m.iter()
            .zip(n)
            .map(|(mi, ni)| {
                2.0 / (1.0 - a) * ni + 2.0 / (1.0 + a) * mi - 4.0 / (1.0 - a * a) * ni.powf(en) * mi.powf(em)
            })
            .sum()
    };
    Ok(v)
}

/// Partial derivative of [`m_plus_divergence`] in its first argument:
/// `(2/(1+α))(1 − (n/m)^((1+α)/2))`, `log(m/n)` at α = −1, `1 − n/m` at α = 1.
pub fn m_plus_divergence_grad(m: &[f64], n: &[f64], alpha: AlphaParam) -> Result<Vec<f64>> {
    check_positive_pair(m, n)?;
    let a = alpha.alpha();
    Ok(m.iter()
        .zip(n)
        .map(|(mi, ni)| {
            if a == -1.0 {
                (mi / ni).ln()
            } else {
                2.0 / (1.0 + a) * (1.0 - (ni / mi).powf((1.0 + a) / 2.0))
            }
        })
        .collect())
}

fn check_positive_pair(m: &[f64], n: &[f64]) -> Result<()> {
    if m.len() != n.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            got: n.len(),
        });
    }
    if m.iter().chain(n).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NotInterior("measures must be strictly positive".into()));
    }
    Ok(())
}

/// `π̂(w) = p(w^(1/p) − 1)`, or `log w` at α = 1.
fn q_log(w: f64, alpha: AlphaParam) -> f64 {
    if alpha.is_logit() {
        w.ln()
    } else {
        let p = alpha.p();
        p * (w.ln() / p).exp_m1()
    }
}

/// Fisher-gradient descent direction of `D^(−α)(·‖ν)` at μ:
/// `P_μ(μ·π̂(ν/μ))`.
pub fn neg_divergence_gradient(mu: &SimplexPoint, nu: &SimplexPoint, alpha: AlphaParam) -> Result<SimplexTangent> {
    mu.check_dim(nu.dim())?;
    let w: Vec<f64> = mu
        .probs()
        .iter()
        .zip(nu.probs())
        .map(|(m, n)| m * q_log(n / m, alpha))
        .collect();
    project_tangent(mu, &w)
}

/// Modified α-representation `p(μ^(1/p) − 1)` (Tsallis q-logarithm), which
/// tends to `log μ` as α → 1.
pub fn modified_alpha_rep(mu: &SimplexPoint, alpha: AlphaParam) -> Vec<f64> {
    mu.probs().iter().map(|m| q_log(*m, alpha)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::fisher_inner;

    fn al(a: f64) -> AlphaParam {
        AlphaParam::new(a).unwrap()
    }

    fn pt(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    fn tan(v: &[f64]) -> SimplexTangent {
        SimplexTangent::new(v.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn alpha_param_range() {
        assert!(AlphaParam::new(1.5).is_err());
        assert!(AlphaParam::new(f64::NAN).is_err());
        assert_eq!(al(-1.0).p(), 1.0);
        assert_eq!(al(0.0).p(), 2.0);
        assert!(al(1.0).is_logit());
        let big = AlphaParam::from_exponent(1e4).unwrap();
        assert_eq!(big.p(), 1e4);
        assert!((big.alpha() - 0.9998).abs() < 1e-15);
        assert!(AlphaParam::from_exponent(0.5).is_err());
    }

    #[test]
    fn to_alpha_rep_examples() {
        assert_eq!(to_alpha_rep(&pt(&[0.3, 0.7]), al(-1.0)).coords(), &[0.3, 0.7]);
        close(
            to_alpha_rep(&pt(&[0.25, 0.75]), al(0.0)).coords(),
            &[0.5, 0.75f64.sqrt()],
            1e-15,
        );
        close(
            to_alpha_rep(&pt(&[0.5, 0.5]), al(1.0)).coords(),
            &[0.5f64.ln(), 0.5f64.ln()],
            0.0,
        );
    }

    #[test]
    fn from_alpha_rep_examples() {
        let x = MappedState::new(vec![0.6, 0.8], al(0.0)).unwrap();
        close(from_alpha_rep(&x).unwrap().probs(), &[0.36, 0.64], 1e-15);
        let x = MappedState::new(vec![0.9f64.ln(), 0.1f64.ln()], al(1.0)).unwrap();
        close(from_alpha_rep(&x).unwrap().probs(), &[0.9, 0.1], 1e-15);
        let mu = pt(&[0.2, 0.3, 0.5]);
        assert_eq!(from_alpha_rep(&to_alpha_rep(&mu, al(-1.0))).unwrap(), mu);
    }

    #[test]
    fn mapped_state_rejects_off_sphere() {
        assert!(MappedState::new(vec![0.6, 0.6], al(0.0)).is_err());
        assert!(MappedState::new(vec![0.0, 1.0], al(0.0)).is_err());
        assert!(MappedState::new(vec![0.0, 0.0], al(1.0)).is_err());
    }

    #[test]
    fn map_tangent_examples() {
        let mu = pt(&[0.3, 0.7]);
        let a = tan(&[0.2, -0.2]);
        close(map_tangent(&mu, &a, al(-1.0)).unwrap().comps(), a.comps(), 0.0);

        let u = map_tangent(&pt(&[0.25, 0.75]), &tan(&[0.1, -0.1]), al(0.0)).unwrap();
        close(u.comps(), &[0.1, -0.1 / (2.0 * 0.75f64.sqrt())], 1e-15);

        let u = map_tangent(&pt(&[0.5, 0.5]), &tan(&[0.1, -0.1]), al(1.0)).unwrap();
        close(u.comps(), &[0.2, -0.2], 1e-15);
    }

    #[test]
    fn unmap_tangent_examples() {
        let mu = pt(&[0.5, 0.5]);
        let base = to_alpha_rep(&mu, al(1.0));
        let u = MappedTangent::new(vec![0.2, -0.2], base).unwrap();
        close(unmap_tangent(&u).unwrap().comps(), &[0.1, -0.1], 1e-15);

        let base = to_alpha_rep(&pt(&[0.3, 0.7]), al(-1.0));
        let u = MappedTangent::new(vec![0.4, -0.4], base).unwrap();
        close(unmap_tangent(&u).unwrap().comps(), &[0.4, -0.4], 1e-15);
    }

    #[test]
    fn sphere_projection_examples() {
        let x = MappedState::new(vec![0.6, 0.8], al(0.0)).unwrap();
        close(project_sphere_tangent(&x, &[1.0, 0.0]).unwrap().comps(), &[0.64, -0.48], 1e-15);
        close(project_sphere_tangent(&x, x.coords()).unwrap().comps(), &[0.0, 0.0], 1e-15);
        let w = [0.8, -0.6];
        close(project_sphere_tangent(&x, &w).unwrap().comps(), &w, 1e-15);
        assert!(project_sphere_tangent(&x, &[1.0]).is_err());

        let xl = to_alpha_rep(&pt(&[0.2, 0.8]), al(1.0));
        let p = project_sphere_tangent(&xl, &[1.0, 0.0]).unwrap();
        close(p.comps(), &[0.8, -0.2], 1e-15);
    }

    #[test]
    fn alpha_norm_examples() {
        let mu = pt(&[0.5, 0.5]);
        let u = map_tangent(&mu, &tan(&[1.0, -1.0]), al(-1.0)).unwrap();
        assert!((alpha_norm_sq(&u, &mu).unwrap() - 4.0).abs() < 1e-14);
        let u = map_tangent(&mu, &tan(&[0.1, -0.1]), al(1.0)).unwrap();
        assert!((alpha_norm_sq(&u, &mu).unwrap() - 0.04).abs() < 1e-15);
        let z = MappedTangent::zeros(to_alpha_rep(&mu, al(0.5)));
        assert_eq!(alpha_norm_sq(&z, &mu).unwrap(), 0.0);
        assert!(alpha_norm_sq(&u, &pt(&[0.4, 0.6])).is_err());
    }

    #[test]
    fn divergence_examples() {
        let mu = pt(&[0.5, 0.5]);
        let nu = pt(&[0.25, 0.75]);
        for a in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            assert!(alpha_divergence(&mu, &mu, al(a)).unwrap().abs() < 1e-15);
        }
        let kl = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((alpha_divergence(&mu, &nu, al(-1.0)).unwrap() - kl).abs() < 1e-15);
        let h = 4.0 * (1.0 - (0.125f64.sqrt() + 0.375f64.sqrt()));
        assert!((alpha_divergence(&mu, &nu, al(0.0)).unwrap() - h).abs() < 1e-14);
        assert!((h - 0.136_29).abs() < 1e-4);
    }

    #[test]
    fn divergence_limits_are_continuous() {
        let mu = pt(&[0.2, 0.5, 0.3]);
        let nu = pt(&[0.6, 0.1, 0.3]);
        let lo = alpha_divergence(&mu, &nu, al(-1.0 + 1e-7)).unwrap();
        let hi = alpha_divergence(&mu, &nu, al(1.0 - 1e-7)).unwrap();
        assert!((lo - alpha_divergence(&mu, &nu, al(-1.0)).unwrap()).abs() < 1e-6);
        assert!((hi - alpha_divergence(&mu, &nu, al(1.0)).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn neg_gradient_examples() {
        let mu = pt(&[0.5, 0.5]);
        for a in [-1.0, 0.0, 0.5, 1.0] {
            let g = neg_divergence_gradient(&mu, &mu, al(a)).unwrap();
            close(g.comps(), &[0.0, 0.0], 1e-15);
        }
        let nu = pt(&[0.9, 0.1]);
        let g = neg_divergence_gradient(&mu, &nu, al(1.0)).unwrap();
        let w = [0.5 * 1.8f64.ln(), 0.5 * 0.2f64.ln()];
        let c = 0.5 * (w[0] + w[1]);
        close(g.comps(), &[w[0] - c, w[1] - c], 1e-15);

        let mu = pt(&[0.2, 0.3, 0.5]);
        let nu = pt(&[0.6, 0.1, 0.3]);
        let g = neg_divergence_gradient(&mu, &nu, al(-1.0)).unwrap();
        close(g.comps(), &[0.4, -0.2, -0.2], 1e-15);
    }

    #[test]
    fn modified_rep_examples() {
        let mu = pt(&[0.25, 0.75]);
        close(&modified_alpha_rep(&mu, al(-1.0)), &[-0.75, -0.25], 1e-15);
        close(&modified_alpha_rep(&mu, al(0.0)), &[-1.0, 2.0 * (0.75f64.sqrt() - 1.0)], 1e-15);
        let half = pt(&[0.5, 0.5]);
        let m = modified_alpha_rep(&half, AlphaParam::from_exponent(1e4).unwrap());
        close(&m, &[0.5f64.ln(); 2], 1e-3);
        close(&modified_alpha_rep(&half, al(1.0)), &[0.5f64.ln(); 2], 0.0);
    }

    #[test]
    fn m_plus_gradient_matches_differences() {
        let m = [0.7, 1.3, 0.4];
        let n = [0.5, 0.9, 1.1];
        let h = 1e-5;
        for a in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let g = m_plus_divergence_grad(&m, &n, al(a)).unwrap();
            for i in 0..3 {
                let (mut up, mut dn) = (m, m);
                up[i] += h;
                dn[i] -= h;
                let fd = (m_plus_divergence(&up, &n, al(a)).unwrap()
                    - m_plus_divergence(&dn, &n, al(a)).unwrap())
                    / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6, "alpha {a} i {i}: {fd} vs {}", g[i]);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn simplex(n: usize) -> impl Strategy<Value = SimplexPoint> {
            proptest::collection::vec(0.01f64..1.0, n).prop_map(|v| SimplexPoint::normalized(v).unwrap())
        }

        fn alphas() -> impl Strategy<Value = AlphaParam> {
            prop_oneof![Just(-1.0), Just(-0.5), Just(0.0), Just(0.5), Just(1.0), -1.0f64..1.0]
                .prop_map(|a| AlphaParam::new(a).unwrap())
        }

        proptest! {
            #[test]
            fn rep_round_trip(mu in simplex(4), alpha in alphas()) {
                let back = from_alpha_rep(&to_alpha_rep(&mu, alpha)).unwrap();
                for (a, b) in back.probs().iter().zip(mu.probs()) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
                prop_assert!(MappedState::new(to_alpha_rep(&mu, alpha).coords().to_vec(), alpha).is_ok());
            }

            #[test]
            fn tangent_round_trip_and_norm(mu in simplex(4), w in proptest::collection::vec(-1.0f64..1.0, 4), alpha in alphas()) {
                let a = project_tangent(&mu, &w).unwrap();
                let u = map_tangent(&mu, &a, alpha).unwrap();
                let back = unmap_tangent(&u).unwrap();
                for (x, y) in back.comps().iter().zip(a.comps()) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
                let g = fisher_inner(&mu, &a, &a).unwrap();
                let n = alpha_norm_sq(&u, &mu).unwrap();
                prop_assert!((n - g).abs() <= 1e-10 * g.max(1e-300));
            }

            #[test]
            fn sphere_projection_idempotent(mu in simplex(3), w in proptest::collection::vec(-2.0f64..2.0, 3), alpha in alphas()) {
                let x = to_alpha_rep(&mu, alpha);
                let once = project_sphere_tangent(&x, &w).unwrap();
                let twice = project_sphere_tangent(&x, once.comps()).unwrap();
                for (a, b) in once.comps().iter().zip(twice.comps()) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
                if !alpha.is_logit() {
                    let z = project_sphere_tangent(&x, x.coords()).unwrap();
                    prop_assert!(z.l2() < 1e-12);
                }
            }

            #[test]
            fn divergence_nonnegative(mu in simplex(3), nu in simplex(3), alpha in alphas()) {
                let d = alpha_divergence(&mu, &nu, alpha).unwrap();
                prop_assert!(d >= -1e-14);
                if mu.probs().iter().zip(nu.probs()).any(|(a, b)| (a - b).abs() > 1e-3) {
                    prop_assert!(d > 0.0);
                }
            }
        }
    }
}
