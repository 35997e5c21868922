//! Exponential and logarithm maps, α-geodesic curves, conditional vector
//! fields and geodesic-equation residuals.
//!
//! | α        | exp / log                          | curve evaluation            |
//! |----------|------------------------------------|-----------------------------|
//! | −1       | linear                             | linear                      |
//! | 0        | unit-sphere great circle           | great circle                |
//! | 1        | logit shift with logsumexp         | softmax of linear logits    |
//! | other    | normalized line + solved τ         | cached interpolation τ      |

use crate::alpha::{
    from_alpha_rep, logsumexp, lp_norm, powp, project_sphere_tangent, to_alpha_rep, AlphaParam, MappedState,
    MappedTangent,
};
use crate::error::{Error, Result};
use crate::manifold::SimplexPoint;
use crate::reparam::{
    solve_tau_bvp, solve_tau_ivp, sphere_angle, ReparamSolution, DEFAULT_SHOOT_ITERS, DEFAULT_SHOOT_TOL,
    DEFAULT_TAU_STEPS,
};

/// Largest `t` at which conditional vector fields are evaluated.
pub const T_MAX: f64 = 1.0 - 1e-3;

/// Default finite-difference step for residual checks.
pub const RESIDUAL_STEP: f64 = 1e-3;

/// Discretization of the τ solves behind numerical-α maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauOptions {
    pub steps: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TauOptions {
    fn default() -> Self {
        Self {
            steps: DEFAULT_TAU_STEPS,
            tol: DEFAULT_SHOOT_TOL,
            max_iter: DEFAULT_SHOOT_ITERS,
        }
    }
}

impl TauOptions {
    pub fn with_steps(steps: usize) -> Self {
        Self {
            steps,
            ..Self::default()
        }
    }
}

fn check_t(t: f64, lo: f64, hi: f64, what: &str) -> Result<()> {
    if !(lo..=hi).contains(&t) {
        return Err(Error::InvalidArgument(format!("{what}: t = {t} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_based_at(x: &MappedState, u: &MappedTangent) -> Result<()> {
    x.check_compatible(u.base())?;
    let same = x
        .coords()
        .iter()
        .zip(u.base().coords())
        .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
    if !same {
        return Err(Error::InvalidArgument("tangent is based at a different point".into()));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Exponential map `exp_x(t·u)` with the default τ discretization.
pub fn exp_map(x: &MappedState, u: &MappedTangent, t: f64) -> Result<MappedState> {
    exp_map_with(x, u, t, TauOptions::default().steps)
}

/// Exponential map `exp_x(t·u)`; numerical α solves the initial-value
/// problem for the scaled vector `t·u` with `tau_steps` steps.
pub fn exp_map_with(x: &MappedState, u: &MappedTangent, t: f64, tau_steps: usize) -> Result<MappedState> {
    check_t(t, 0.0, 1.0, "exp_map")?;
    check_based_at(x, u)?;
    if t == 0.0 || u.comps().iter().all(|c| *c == 0.0) {
        return Ok(x.clone());
    }
    let raw = exp_raw(x, u.comps(), t, tau_steps)?;
    MappedState::normalize(raw, x.alpha())
}

/// Unnormalized exponential map. For α < 1 the output lies on the L_p sphere
/// up to roundoff but may contain nonpositive entries.
pub(crate) fn exp_raw(x: &MappedState, u: &[f64], t: f64, tau_steps: usize) -> Result<Vec<f64>> {
    let alpha = x.alpha();
    let xc = x.coords();
    if u.iter().all(|c| *c == 0.0) || t == 0.0 {
        return Ok(xc.to_vec());
    }
    if alpha.is_logit() {
        let y: Vec<f64> = xc.iter().zip(u).map(|(a, b)| a + t * b).collect();
        let lse = logsumexp(&y);
        return Ok(y.iter().map(|c| c - lse).collect());
    }
    if alpha.alpha() == -1.0 {
        return Ok(xc.iter().zip(u).map(|(a, b)| a + t * b).collect());
    }
    if alpha.alpha() == 0.0 {
        let norm = dot(u, u).sqrt();
        let s = t * norm;
        let (sin, cos) = s.sin_cos();
        return Ok(xc.iter().zip(u).map(|(a, b)| a * cos + b / norm * sin).collect());
    }
    let scaled = MappedTangent::new(u.iter().map(|c| c * t).collect(), x.clone())?;
    let sol = solve_tau_ivp(x, &scaled, tau_steps)?;
    let tau = *sol.tau().last().expect("nonempty grid");
    Ok(xc.iter().zip(scaled.comps()).map(|(a, b)| a + tau * b).collect())
}

/// Logarithm map with the default τ discretization.
pub fn log_map(x: &MappedState, y: &MappedState) -> Result<MappedTangent> {
    log_map_with(x, y, TauOptions::default())
}

/// Logarithm map `log_x(y)`; numerical α returns `τ̇(0)·P_x(y − x)` with
/// `τ̇(0)` from the interpolation problem.
pub fn log_map_with(x: &MappedState, y: &MappedState, opts: TauOptions) -> Result<MappedTangent> {
    x.check_compatible(y)?;
    if x.coords() == y.coords() {
        return Ok(MappedTangent::zeros(x.clone()));
    }
    let alpha = x.alpha();
    let d = sub(y.coords(), x.coords());
    if alpha.is_logit() {
        let kl: f64 = x.coords().iter().zip(&d).map(|(lx, di)| -lx.exp() * di).sum();
        return project_sphere_tangent(x, &d.iter().map(|di| di + kl).collect::<Vec<_>>());
    }
    if alpha.alpha() == -1.0 {
        return MappedTangent::new(d, x.clone());
    }
    if alpha.alpha() == 0.0 {
        let theta = sphere_angle(x.coords(), y.coords());
        let c = dot(x.coords(), y.coords());
        let scale = if theta < 1e-8 { 1.0 } else { theta / theta.sin() };
        let v: Vec<f64> = y.coords().iter().zip(x.coords()).map(|(yi, xi)| scale * (yi - c * xi)).collect();
        return project_sphere_tangent(x, &v);
    }
    let sol = solve_tau_bvp(x, y, opts.steps, opts.tol, opts.max_iter)?;
    Ok(project_sphere_tangent(x, &d)?.scaled(sol.tau_dot0()))
}

/// `((1−t)m0^(1/p) + t·m1^(1/p))^p`, the α-geodesic between positive measures.
pub fn m_plus_geodesic(m0: &[f64], m1: &[f64], t: f64, alpha: AlphaParam) -> Result<Vec<f64>> {
    let p = alpha.finite_p("positive-measure geodesics need finite p")?;
    if m0.len() != m1.len() {
        return Err(Error::DimensionMismatch {
            expected: m0.len(),
            got: m1.len(),
        });
    }
    if m0.iter().chain(m1).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NotInterior("measures must be strictly positive".into()));
    }
    check_t(t, 0.0, 1.0, "m_plus_geodesic")?;
    if t == 0.0 {
        return Ok(m0.to_vec());
    }
    if t == 1.0 {
        return Ok(m1.to_vec());
    }
    let inv = 1.0 / p;
    Ok(m0
        .iter()
        .zip(m1)
        .map(|(a, b)| powp((1.0 - t) * a.powf(inv) + t * b.powf(inv), p))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
enum CurveKind {
    /// `γ(t) = exp_{x0}(t·v)` with `v = log_{x0}(x1)`.
    Closed { v: MappedTangent },
    /// `γ(t) = normalize(x0 + τ(t)(x1 − x0))`.
    Numerical { d: Vec<f64>, reparam: ReparamSolution },
}

/// The α-geodesic between two mapped states, evaluated on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicCurve {
    x0: MappedState,
    x1: MappedState,
    kind: CurveKind,
}

/// The geodesic between two distributions with default τ options.
pub fn geodesic(mu0: &SimplexPoint, mu1: &SimplexPoint, alpha: AlphaParam) -> Result<GeodesicCurve> {
    mu0.check_dim(mu1.dim())?;
    GeodesicCurve::new(to_alpha_rep(mu0, alpha), to_alpha_rep(mu1, alpha), TauOptions::default())
}

impl GeodesicCurve {
    /// Builds the curve; numerical α solves and caches the interpolation τ.
    pub fn new(x0: MappedState, x1: MappedState, opts: TauOptions) -> Result<Self> {
        x0.check_compatible(&x1)?;
        let kind = if x0.alpha().is_closed_form() {
            CurveKind::Closed { v: log_map(&x0, &x1)? }
        } else {
            let reparam = solve_tau_bvp(&x0, &x1, opts.steps, opts.tol, opts.max_iter)?;
            CurveKind::Numerical {
                d: sub(x1.coords(), x0.coords()),
                reparam,
            }
        };
        Ok(Self { x0, x1, kind })
    }

    pub fn alpha(&self) -> AlphaParam {
        self.x0.alpha()
    }

    pub fn x0(&self) -> &MappedState {
        &self.x0
    }

    pub fn x1(&self) -> &MappedState {
        &self.x1
    }

    /// The cached interpolation τ, present for numerical α.
    pub fn reparam(&self) -> Option<&ReparamSolution> {
        match &self.kind {
            CurveKind::Numerical { reparam, .. } => Some(reparam),
            CurveKind::Closed { .. } => None,
        }
    }

    /// `γ(t)` in mapped coordinates.
    pub fn point(&self, t: f64) -> Result<MappedState> {
        check_t(t, 0.0, 1.0, "geodesic point")?;
        // Shooting meets τ(1) = 1 only to its tolerance; the endpoint is exact.
        if t == 1.0 {
            return Ok(self.x1.clone());
        }
        match &self.kind {
            CurveKind::Closed { v } => {
                MappedState::normalize(exp_raw(&self.x0, v.comps(), t, 1)?, self.alpha())
            }
            CurveKind::Numerical { d, reparam } => {
                let (tau, _) = reparam.eval(t)?;
                let c: Vec<f64> = self.x0.coords().iter().zip(d).map(|(a, b)| a + tau * b).collect();
                MappedState::normalize(c, self.alpha())
            }
        }
    }

    /// `γ(t)` as a distribution.
    pub fn point_simplex(&self, t: f64) -> Result<SimplexPoint> {
        from_alpha_rep(&self.point(t)?)
    }

    /// Analytic time derivative `γ̇(t)` in mapped coordinates.
    pub fn velocity(&self, t: f64) -> Result<MappedTangent> {
        check_t(t, 0.0, 1.0, "geodesic velocity")?;
        let alpha = self.alpha();
        match &self.kind {
            CurveKind::Closed { v } => {
                let g = self.point(t)?;
                let u = v.comps();
                let comps: Vec<f64> = if alpha.is_logit() {
                    return project_sphere_tangent(&g, u);
                } else if alpha.alpha() == -1.0 {
                    u.to_vec()
                } else {
                    let s = dot(u, u).sqrt();
                    if s == 0.0 {
                        vec![0.0; u.len()]
                    } else {
                        let (sin, cos) = (s * t).sin_cos();
                        self.x0.coords().iter().zip(u).map(|(a, b)| -a * s * sin + b * cos).collect()
                    }
                };
                project_sphere_tangent(&g, &comps)
            }
            CurveKind::Numerical { d, reparam } => {
                let (tau, tau_dot) = reparam.eval(t)?;
                let c: Vec<f64> = self.x0.coords().iter().zip(d).map(|(a, b)| a + tau * b).collect();
                let norm = lp_norm(&c, alpha.p());
                let g = MappedState::normalize(c, alpha)?;
                let cdot: Vec<f64> = d.iter().map(|b| tau_dot * b / norm).collect();
                project_sphere_tangent(&g, &cdot)
            }
        }
    }
}

/// Conditional vector field at `γ(t)`: `log_{γ(t)}(x1)/(1−t)` at closed-form
/// α and the analytic curve velocity otherwise.
pub fn conditional_vector_field(curve: &GeodesicCurve, t: f64) -> Result<MappedTangent> {
    check_t(t, 0.0, T_MAX, "conditional vector field")?;
    if curve.alpha().is_closed_form() {
        let xt = curve.point(t)?;
        Ok(log_map(&xt, &curve.x1)?.scaled(1.0 / (1.0 - t)))
    } else {
        curve.velocity(t)
    }
}

/// `μ̈ − ((1+α)/2)(μ̇²/μ − μ·Σ μ̇²/μ)` by central differences of step `h` in
/// simplex coordinates.
pub fn geodesic_equation_residual(curve: &GeodesicCurve, t: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) || t - h < 0.0 || t + h > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "residual at t = {t} with step {h} differences outside [0, 1]"
        )));
    }
    let m = curve.point_simplex(t - h)?;
    let c = curve.point_simplex(t)?;
    let pl = curve.point_simplex(t + h)?;
    let k = (1.0 + curve.alpha().alpha()) / 2.0;
    let (m, c, pl) = (m.probs(), c.probs(), pl.probs());
    let vel: Vec<f64> = pl.iter().zip(m).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let acc: Vec<f64> = (0..c.len()).map(|i| (pl[i] - 2.0 * c[i] + m[i]) / (h * h)).collect();
    let s: f64 = vel.iter().zip(c).map(|(v, mu)| v * v / mu).sum();
    Ok((0..c.len())
        .map(|i| acc[i] - k * (vel[i] * vel[i] / c[i] - c[i] * s))
        .collect())
}
