//! Time reparameterizations τ(t) of normalized straight lines in the
//! α-representation.
//!
//! The curve `γ(t) = (x + τ(t)d)/‖x + τ(t)d‖_p` is a geodesic exactly when
//!
//! ```text
//! τ̈ = 2 · (Σ cᵢ^(p−1) dᵢ / Σ cᵢ^p) · τ̇²,    c = x + τd,
//! ```
//!
//! with `τ(0) = 0`. The initial-value problem fixes `τ̇(0) = 1` (exponential
//! map, `d = u`); the boundary-value problem fixes `τ(1) = 1` (interpolation,
//! `d = y − x`) and is solved by shooting on `τ̇(0)`.
//!
//! Integration is semi-implicit Euler on a uniform grid: the velocity update
//! uses the acceleration at the current position and the position update uses
//! the new velocity.

use crate::alpha::{MappedState, MappedTangent};
use crate::error::{Error, Result};

/// Euler steps per unit time for interpolation solves.
pub const DEFAULT_TAU_STEPS: usize = 100;
/// Shooting tolerance on `|τ(1) − 1|`.
pub const DEFAULT_SHOOT_TOL: f64 = 1e-3;
/// Maximum bisections of the shooting bracket.
pub const DEFAULT_SHOOT_ITERS: usize = 10;

const BRACKET: (f64, f64) = (1.0, 2.0);
const BRACKET_MIN: f64 = 1.0 / 16.0;
const BRACKET_MAX: f64 = 32.0;

/// Cube root of a positive normal number: an exponent-thirding bit guess
/// (about 5 correct bits) refined by two Halley steps and a final Newton
/// step. `f64::cbrt` is a software routine here and dominated the α = −0.5
/// solves.
#[inline]
fn cbrt_positive(x: f64) -> f64 {
    const BIAS: u64 = 0x2A9F_7893 << 32;
    let mut y = f64::from_bits(x.to_bits() / 3 + BIAS);
    for _ in 0..2 {
        let y3 = y * y * y;
        y *= (y3 + 2.0 * x) / (2.0 * y3 + x);
    }
    y - (y * y * y - x) / (3.0 * y * y)
}

/// `r^e` for `r ∈ (0, 1]`, specialised for the exponents that occur at
/// α ∈ {−0.5, 0, 0.5} and other integer or cube-root cases.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PowKernel {
    Int(i32),
    Cbrt,
    General(f64),
}

impl PowKernel {
    fn new(e: f64) -> Self {
        if e == e.round() && e.abs() < 64.0 {
            PowKernel::Int(e as i32)
        } else if (e - 1.0 / 3.0).abs() < 1e-12 {
            PowKernel::Cbrt
        } else {
            PowKernel::General(e)
        }
    }

    /// Small exponents cannot underflow on the line, so no rescaling by the
    /// largest coordinate is needed.
    fn is_mild(self) -> bool {
        matches!(self, PowKernel::Cbrt) || matches!(self, PowKernel::Int(k) if k.abs() <= 8)
    }

    #[inline]
    fn eval(self, r: f64) -> f64 {
        match self {
            PowKernel::Int(k) => r.powi(k),
            PowKernel::Cbrt => cbrt_positive(r),
            PowKernel::General(e) => r.powf(e),
        }
    }
}

/// The straight line `c(τ) = x + τd` whose normalization is reparameterized.
#[derive(Debug, Clone, PartialEq)]
struct Line {
    x: Vec<f64>,
    d: Vec<f64>,
    p: f64,
    kernel: PowKernel,
}

impl Line {
    fn new(x: &[f64], d: Vec<f64>, p: f64) -> Self {
        Self {
            x: x.to_vec(),
            d,
            p,
            kernel: PowKernel::new(p - 1.0),
        }
    }

    /// `Σc^(p−1)d / Σc^p` at `c = x + τd`.
    #[inline]
    fn log_norm_rate(&self, tau: f64) -> Result<f64> {
        if self.kernel.is_mild() {
            let (mut num, mut den) = (0.0, 0.0);
            for (xi, di) in self.x.iter().zip(&self.d) {
                let c = xi + tau * di;
                if !(c > 0.0) {
                    return Err(if c.is_nan() {
                        Error::NonFinite("reparameterization line")
                    } else {
                        Error::PositivityViolated { tau }
                    });
                }
                let w = self.kernel.eval(c);
                num += w * di;
                den += w * c;
            }
            return Ok(num / den);
        }
        let mut m = 0.0f64;
        for (xi, di) in self.x.iter().zip(&self.d) {
            let c = xi + tau * di;
            if !(c > 0.0) {
                return Err(if c.is_nan() {
                    Error::NonFinite("reparameterization line")
                } else {
                    Error::PositivityViolated { tau }
                });
            }
            m = m.max(c);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (xi, di) in self.x.iter().zip(&self.d) {
            let r = (xi + tau * di) / m;
            let w = self.kernel.eval(r);
            num += w * di;
            den += w * r;
        }
        Ok(num / (den * m))
    }

    #[inline]
    fn accel(&self, tau: f64, tau_dot: f64) -> Result<f64> {
        Ok(2.0 * self.log_norm_rate(tau)? * tau_dot * tau_dot)
    }

    /// One classical Runge–Kutta step of size `h` (either sign).
    fn rk4(&self, tau: f64, v: f64, h: f64) -> Result<(f64, f64)> {
        let k1 = (v, self.accel(tau, v)?);
        let k2v = v + 0.5 * h * k1.1;
        let k2 = (k2v, self.accel(tau + 0.5 * h * k1.0, k2v)?);
        let k3v = v + 0.5 * h * k2.1;
        let k3 = (k3v, self.accel(tau + 0.5 * h * k2.0, k3v)?);
        let k4v = v + h * k3.1;
        let k4 = (k4v, self.accel(tau + h * k3.0, k4v)?);
        Ok((
            tau + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        ))
    }

    /// Integrates from `(0, v0)` over `[0, 1]`. Returns the final state and,
    /// when `record` is set, the full grid.
    fn integrate(&self, v0: f64, steps: usize, record: bool) -> Result<Trajectory> {
        let h = 1.0 / steps as f64;
        let (mut tau, mut v) = (0.0, v0);
        let mut traj = Trajectory::default();
        if record {
            traj.tau.reserve(steps + 1);
            traj.tau_dot.reserve(steps + 1);
            traj.tau.push(tau);
            traj.tau_dot.push(v);
        }
        for _ in 0..steps {
            v += h * self.accel(tau, v)?;
            if !v.is_finite() || !tau.is_finite() {
                return Err(Error::NonFinite("reparameterization"));
            }
            if !(v > 0.0) {
                return Err(Error::NonMonotone);
            }
            tau += h * v;
            if record {
                traj.tau.push(tau);
                traj.tau_dot.push(v);
            }
        }
        traj.end = tau;
        Ok(traj)
    }
}

#[derive(Debug, Default)]
struct Trajectory {
    tau: Vec<f64>,
    tau_dot: Vec<f64>,
    end: f64,
}

/// How τ is evaluated between grid nodes.
#[derive(Debug, Clone, PartialEq)]
enum Continuation {
    /// `τ(t) = t`.
    Identity,
    /// Great-circle interpolation at α = 0 with angle θ.
    GreatCircle { theta: f64 },
    /// Great-circle exponential at α = 0 with speed `s`.
    Tangent { speed: f64 },
    /// Numerical solution; off-grid values continue the ODE from the nearest node.
    Ode(Line),
}

/// A discretized reparameterization on a uniform grid over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReparamSolution {
    grid_t: Vec<f64>,
    tau: Vec<f64>,
    tau_dot: Vec<f64>,
    tau_dot0: f64,
    cont: Continuation,
}

impl ReparamSolution {
    fn from_fn(steps: usize, cont: Continuation) -> Self {
        let grid_t: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
        let (tau, tau_dot): (Vec<f64>, Vec<f64>) = grid_t.iter().map(|t| closed_eval(&cont, *t)).unzip();
        Self {
            tau_dot0: tau_dot[0],
            grid_t,
            tau,
            tau_dot,
            cont,
        }
    }

    pub fn grid_t(&self) -> &[f64] {
        &self.grid_t
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn tau_dot(&self) -> &[f64] {
        &self.tau_dot
    }

    /// `τ̇(0)`.
    pub fn tau_dot0(&self) -> f64 {
        self.tau_dot0
    }

    pub fn steps(&self) -> usize {
        self.grid_t.len() - 1
    }

    /// `(τ(t), τ̇(t))` at any `t ∈ [0, 1]`. Grid nodes return the stored
    /// values; between nodes the closed form is evaluated, or the ODE is
    /// continued from the nearest node by one Runge–Kutta step.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("reparameterization queried at t = {t}")));
        }
        let steps = self.steps();
        let k = (t * steps as f64).round() as usize;
        let dt = t - self.grid_t[k];
        if dt == 0.0 {
            return Ok((self.tau[k], self.tau_dot[k]));
        }
        match &self.cont {
            Continuation::Ode(line) => line.rk4(self.tau[k], self.tau_dot[k], dt),
            other => Ok(closed_eval(other, t)),
        }
    }

    fn validate(&self) -> Result<()> {
        let increasing = self.tau.windows(2).all(|w| w[1] > w[0]);
        if !increasing || self.tau_dot.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NonMonotone);
        }
        Ok(())
    }
}

fn closed_eval(cont: &Continuation, t: f64) -> (f64, f64) {
    match *cont {
        Continuation::Identity => (t, 1.0),
        Continuation::GreatCircle { theta } => {
            let a = ((1.0 - t) * theta).sin();
            let b = (t * theta).sin();
            let s = a + b;
            (b / s, theta * theta.sin() / (s * s))
        }
        Continuation::Tangent { speed } => {
            let c = (speed * t).cos();
            ((speed * t).tan() / speed, 1.0 / (c * c))
        }
        Continuation::Ode(_) => unreachable!("numerical solutions are stored on the grid"),
    }
}

fn check_steps(steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidArgument("reparameterization needs at least one step".into()));
    }
    Ok(())
}

/// Solves the initial-value problem for `exp` along `u` (`τ̇(0) = 1`).
pub fn solve_tau_ivp(x: &MappedState, u: &MappedTangent, steps: usize) -> Result<ReparamSolution> {
    check_steps(steps)?;
    x.check_compatible(u.base())?;
    let p = x.alpha().finite_p("the reparameterization ODE needs finite p")?;
    if u.comps().iter().all(|c| *c == 0.0) {
        return Ok(ReparamSolution::from_fn(steps, Continuation::Identity));
    }
    let line = Line::new(x.coords(), u.comps().to_vec(), p);
    let traj = line.integrate(1.0, steps, true)?;
    finish(traj, steps, line)
}

fn finish(traj: Trajectory, steps: usize, line: Line) -> Result<ReparamSolution> {
    let sol = ReparamSolution {
        grid_t: (0..=steps).map(|k| k as f64 / steps as f64).collect(),
        tau_dot0: traj.tau_dot[0],
        tau: traj.tau,
        tau_dot: traj.tau_dot,
        cont: Continuation::Ode(line),
    };
    sol.validate()?;
    Ok(sol)
}

/// Solves the boundary-value problem between `x` and `y` (`τ(1) = 1`) by
/// shooting on `τ̇(0)`.
///
/// Secant steps from the slope given by the first integral usually meet
/// `tol` within two integrations. Otherwise the bracket starts at `[1, 2]`
/// and is doubled or halved until the residual `τ(1) − 1` changes sign,
/// within `[1/16, 32]`. At most `max_iter` bisections
/// follow; if none reaches `tol`, a final false-position step is tried before
/// giving up. Trial trajectories that leave the orthant or blow up count as
/// overshooting.
pub fn solve_tau_bvp(
    x: &MappedState,
    y: &MappedState,
    steps: usize,
    tol: f64,
    max_iter: usize,
) -> Result<ReparamSolution> {
    check_steps(steps)?;
    x.check_compatible(y)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("shooting tolerance must be positive, got {tol}")));
    }
    let p = x.alpha().finite_p("the reparameterization ODE needs finite p")?;
    let d: Vec<f64> = y.coords().iter().zip(x.coords()).map(|(a, b)| a - b).collect();
    if d.iter().all(|c| *c == 0.0) {
        return Ok(ReparamSolution::from_fn(steps, Continuation::Identity));
    }
    let line = Line::new(x.coords(), d, p);
    if let Some(traj) = shoot_from_first_integral(&line, steps, tol) {
        return finish(traj, steps, line);
    }
    let residual = |v: f64| -> Result<f64> {
        match line.integrate(v, steps, false) {
            Ok(tr) => Ok(tr.end - 1.0),
            Err(Error::PositivityViolated { .. }) | Err(Error::NonFinite(_)) => Ok(f64::INFINITY),
            Err(Error::NonMonotone) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };

    let (mut lo, mut hi) = BRACKET;
    let (mut f_lo, mut f_hi) = (residual(lo)?, residual(hi)?);
    while f_lo > 0.0 && f_hi > 0.0 {
        if lo / 2.0 < BRACKET_MIN {
            return Err(Error::BracketExhausted { lo, hi, sign: 1.0 });
        }
        (hi, f_hi) = (lo, f_lo);
        lo /= 2.0;
        f_lo = residual(lo)?;
    }
    while f_lo < 0.0 && f_hi < 0.0 {
        if hi * 2.0 > BRACKET_MAX {
            return Err(Error::BracketExhausted { lo, hi, sign: -1.0 });
        }
        (lo, f_lo) = (hi, f_hi);
        hi *= 2.0;
        f_hi = residual(hi)?;
    }

    let accept = |v: f64| -> Result<ReparamSolution> {
        let traj = line.integrate(v, steps, true)?;
        finish(traj, steps, line.clone())
    };
    if f_lo.abs() <= tol {
        return accept(lo);
    }
    if f_hi.abs() <= tol {
        return accept(hi);
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let f_mid = residual(mid)?;
        if f_mid.abs() <= tol {
            return accept(mid);
        }
        if f_mid < 0.0 {
            (lo, f_lo) = (mid, f_mid);
        } else {
            (hi, f_hi) = (mid, f_mid);
        }
    }
    if f_lo.is_finite() && f_hi.is_finite() {
        let v = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        let f = residual(v)?;
        if f.abs() <= tol {
            return accept(v);
        }
        return Err(Error::NotConverged { residual: f.abs() });
    }
    Err(Error::NotConverged {
        residual: f_lo.abs().min(f_hi.abs()),
    })
}

/// Secant shooting started from the exact slope of the continuous problem.
///
/// Along `c = x + τd` the ODE has the first integral `τ̇ = τ̇(0)‖c‖_p²`, so
/// `τ(1) = 1` requires `τ̇(0) = ∫₀¹ ‖x + sd‖_p⁻² ds`. The Euler solution
/// differs from this by its discretization bias, which a few secant steps
/// remove. Returns `None` whenever a trial fails, leaving the bracketing
/// search to decide.
fn shoot_from_first_integral(line: &Line, steps: usize, tol: f64) -> Option<Trajectory> {
    const PANELS: usize = 16;
    const SECANT_STEPS: usize = 4;
    // ‖c‖_p⁻² = (Σ c·c^(p−1))^(−2/p); c stays positive between x and y.
    let g = |s: f64| -> f64 {
        let sum: f64 = line
            .x
            .iter()
            .zip(&line.d)
            .map(|(a, b)| {
                let c = a + s * b;
                c * line.kernel.eval(c)
            })
            .sum();
        sum.powf(-2.0 / line.p)
    };
    let h = 1.0 / PANELS as f64;
    let inner: f64 = (1..PANELS)
        .map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h))
        .sum();
    let guess = h / 3.0 * (g(0.0) + inner + g(1.0));
    let trial = |v: f64| -> Option<(f64, Trajectory)> {
        if !(v > 0.0 && v.is_finite()) {
            return None;
        }
        let traj = line.integrate(v, steps, true).ok()?;
        Some((traj.end - 1.0, traj))
    };
    let (mut r_a, traj) = trial(guess)?;
    if r_a.abs() <= tol {
        return Some(traj);
    }
    let mut v_a = guess;
    let mut v_b = guess / (1.0 + r_a);
    for _ in 0..SECANT_STEPS {
        let (r_b, traj) = trial(v_b)?;
        if r_b.abs() <= tol {
            return Some(traj);
        }
        if r_b == r_a {
            return None;
        }
        let next = v_b - r_b * (v_b - v_a) / (r_b - r_a);
        (v_a, r_a, v_b) = (v_b, r_b, next);
    }
    None
}

/// The second argument of [`closed_form_tau`].
#[derive(Debug, Clone, Copy)]
pub enum TauTarget<'a> {
    /// Interpolation towards an endpoint.
    Endpoint(&'a MappedState),
    /// Exponential map along a tangent.
    Tangent(&'a MappedTangent),
}

/// Closed-form reparameterizations at α = −1 (`τ = t`) and α = 0
/// (great-circle), tabulated on `steps + 1` nodes.
pub fn closed_form_tau(x: &MappedState, target: TauTarget<'_>, steps: usize) -> Result<ReparamSolution> {
    check_steps(steps)?;
    let alpha = x.alpha();
    match target {
        TauTarget::Endpoint(y) => x.check_compatible(y)?,
        TauTarget::Tangent(u) => x.check_compatible(u.base())?,
    }
    if alpha.alpha() == -1.0 {
        return Ok(ReparamSolution::from_fn(steps, Continuation::Identity));
    }
    if alpha.alpha() != 0.0 {
        return Err(Error::UnsupportedAlpha {
            alpha: alpha.alpha(),
            reason: "closed-form reparameterizations exist only at alpha = -1 and 0",
        });
    }
    let cont = match target {
        TauTarget::Endpoint(y) => {
            let theta = sphere_angle(x.coords(), y.coords());
            if theta < 1e-12 {
                Continuation::Identity
            } else {
                Continuation::GreatCircle { theta }
            }
        }
        TauTarget::Tangent(u) => {
            let speed = u.l2();
            if speed == 0.0 {
                Continuation::Identity
            } else if speed >= std::f64::consts::FRAC_PI_2 {
                return Err(Error::PositivityViolated { tau: f64::INFINITY });
            } else {
                Continuation::Tangent { speed }
            }
        }
    };
    Ok(ReparamSolution::from_fn(steps, cont))
}

/// Angle between two unit vectors, accurate for nearby points.
pub(crate) fn sphere_angle(x: &[f64], y: &[f64]) -> f64 {
    let chord = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    2.0 * (0.5 * chord).min(1.0).asin()
}

#[cfg(test)]
mod tests {
    #[test]
    fn cube_root_matches_std() {
        let mut worst = 0.0f64;
        for k in 0..200_000 {
            let r = (1e-12f64).powf(k as f64 / 200_000.0);
            worst = worst.max((super::cbrt_positive(r) - r.cbrt()).abs() / r.cbrt());
        }
        assert!(worst < 4e-16, "{worst}");
        assert_eq!(super::cbrt_positive(1.0), 1.0);
        assert_eq!(super::cbrt_positive(0.125), 0.5);
    }

    use super::*;
    use crate::alpha::{project_sphere_tangent, to_alpha_rep, AlphaParam};
    use crate::manifold::{sample_uniform_simplex, SimplexPoint};
    use crate::rng::RngState;

    fn al(a: f64) -> AlphaParam {
        AlphaParam::new(a).unwrap()
    }

    fn state(v: &[f64], a: f64) -> MappedState {
        to_alpha_rep(&SimplexPoint::normalized(v.to_vec()).unwrap(), al(a))
    }

    /// `τ̇(0) = ∫₀¹ ‖x + sd‖_p^(−2) ds` from the first integral
    /// `τ̇ = τ̇(0)·‖c‖_p^2`, by composite Simpson.
    fn first_integral_tau_dot0(x: &[f64], y: &[f64], p: f64) -> f64 {
        let m = 20_000;
        let h = 1.0 / m as f64;
        let f = |s: f64| {
            let c: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + s * (b - a)).collect();
            crate::alpha::lp_norm(&c, p).powi(-2)
        };
        let mut acc = f(0.0) + f(1.0);
        for k in 1..m {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn ivp_zero_vector_is_identity() {
        let x = state(&[0.2, 0.3, 0.5], 0.5);
        let sol = solve_tau_ivp(&x, &MappedTangent::zeros(x.clone()), 100).unwrap();
        for (t, tau) in sol.grid_t().iter().zip(sol.tau()) {
            assert_eq!(t, tau);
        }
    }

    #[test]
    fn ivp_linear_at_minus_one() {
        let x = state(&[0.2, 0.3, 0.5], -1.0);
        let u = project_sphere_tangent(&x, &[0.1, -0.05, -0.05]).unwrap();
        let sol = solve_tau_ivp(&x, &u, 100).unwrap();
        for (t, tau) in sol.grid_t().iter().zip(sol.tau()) {
            assert!((t - tau).abs() < 1e-12);
        }
    }

    #[test]
    fn ivp_matches_tangent_closed_form_at_zero() {
        let x = state(&[0.3, 0.7], 0.0);
        let u = project_sphere_tangent(&x, &[0.5, -0.3]).unwrap();
        let s = u.l2();
        let sol = solve_tau_ivp(&x, &u, 100).unwrap();
        for (t, tau) in sol.grid_t().iter().zip(sol.tau()) {
            assert!((tau - (s * t).tan() / s).abs() < 2e-3);
        }
        let cf = closed_form_tau(&x, TauTarget::Tangent(&u), 100).unwrap();
        assert!((cf.tau()[100] - s.tan() / s).abs() < 1e-15);
    }

    #[test]
    fn bvp_examples() {
        let x = state(&[0.2, 0.8], -1.0);
        let y = state(&[0.7, 0.3], -1.0);
        let sol = solve_tau_bvp(&x, &y, 100, 1e-3, 10).unwrap();
        assert!((sol.tau_dot0() - 1.0).abs() < 1e-3);

        let a = al(0.0);
        let x = MappedState::new(vec![0.6, 0.8], a).unwrap();
        let y = MappedState::new(vec![0.8, 0.6], a).unwrap();
        let theta = 0.96f64.acos();
        let sol = solve_tau_bvp(&x, &y, 100, 1e-3, 10).unwrap();
        assert!((sol.tau_dot0() - theta / theta.sin()).abs() < 2e-3);
        assert!((sol.tau()[100] - 1.0).abs() <= 1e-3);

        let sol = solve_tau_bvp(&x, &x, 100, 1e-3, 10).unwrap();
        assert_eq!(sol.tau(), sol.grid_t());
    }

    #[test]
    fn bvp_rejects_bad_inputs() {
        let x = state(&[0.2, 0.8], 0.0);
        let y = state(&[0.7, 0.3], 0.5);
        assert!(matches!(solve_tau_bvp(&x, &y, 100, 1e-3, 10), Err(Error::AlphaMismatch(..))));
        let x1 = state(&[0.2, 0.8], 1.0);
        let y1 = state(&[0.7, 0.3], 1.0);
        assert!(matches!(
            solve_tau_bvp(&x1, &y1, 100, 1e-3, 10),
            Err(Error::UnsupportedAlpha { .. })
        ));
    }

    #[test]
    fn closed_form_examples() {
        let a = al(0.0);
        let theta = std::f64::consts::FRAC_PI_3;
        let x = MappedState::new(vec![(0.1f64).cos(), (0.1f64).sin()], a).unwrap();
        let y = MappedState::new(vec![(0.1 + theta).cos(), (0.1 + theta).sin()], a).unwrap();
        let sol = closed_form_tau(&x, TauTarget::Endpoint(&y), 10).unwrap();
        assert_eq!(sol.tau()[0], 0.0);
        assert!((sol.tau()[10] - 1.0).abs() < 1e-12);
        assert!((sol.tau_dot0() - 1.2092).abs() < 1e-4);

        let xm = state(&[0.2, 0.8], -1.0);
        let ym = state(&[0.5, 0.5], -1.0);
        let sol = closed_form_tau(&xm, TauTarget::Endpoint(&ym), 100).unwrap();
        assert_eq!(sol.eval(0.37).unwrap(), (0.37, 1.0));
        let xh = state(&[0.2, 0.8], 0.5);
        let yh = state(&[0.5, 0.5], 0.5);
        assert!(matches!(
            closed_form_tau(&xh, TauTarget::Endpoint(&yh), 100),
            Err(Error::UnsupportedAlpha { .. })
        ));
    }

    #[test]
    fn bvp_agrees_with_first_integral_at_half_alphas() {
        let mut rng = RngState::new(5);
        for a in [-0.5, 0.5] {
            for _ in 0..20 {
                let mu = sample_uniform_simplex(3, 1e-3, &mut rng).unwrap();
                let nu = sample_uniform_simplex(3, 1e-3, &mut rng).unwrap();
                let (x, y) = (to_alpha_rep(&mu, al(a)), to_alpha_rep(&nu, al(a)));
                let oracle = first_integral_tau_dot0(x.coords(), y.coords(), al(a).p());
                let coarse = solve_tau_bvp(&x, &y, 100, 1e-3, 10).unwrap();
                assert!((coarse.tau_dot0() - oracle).abs() < 2e-2, "{} vs {oracle}", coarse.tau_dot0());
                assert!((coarse.tau()[100] - 1.0).abs() <= 1e-3);
                let fine = solve_tau_bvp(&x, &y, 2000, 1e-7, 40).unwrap();
                assert!((fine.tau_dot0() - oracle).abs() < 1e-3, "{} vs {oracle}", fine.tau_dot0());
            }
        }
    }

    #[test]
    fn large_exponent_does_not_underflow() {
        let a = al(0.999);
        let x = state(&[0.98, 0.01, 0.01], 0.999);
        let y = state(&[0.01, 0.98, 0.01], 0.999);
        assert_eq!(x.alpha(), a);
        let sol = solve_tau_bvp(&x, &y, 100, 1e-3, 10).unwrap();
        assert!(sol.tau().iter().all(|t| t.is_finite()));
    }

    #[test]
    fn refinement_reduces_closed_form_gap() {
        let x = state(&[0.9, 0.05, 0.05], 0.0);
        let y = state(&[0.05, 0.05, 0.9], 0.0);
        let cf = closed_form_tau(&x, TauTarget::Endpoint(&y), 400).unwrap();
        let gap = |steps: usize| {
            let sol = solve_tau_bvp(&x, &y, steps, 1e-6, 60).unwrap();
            sol.grid_t()
                .iter()
                .zip(sol.tau())
                .map(|(t, tau)| (tau - cf.eval(*t).unwrap().0).abs())
                .fold(0.0, f64::max)
        };
        let (g100, g200, g400) = (gap(100), gap(200), gap(400));
        assert!(g200 < g100 && g400 < g200, "{g100} {g200} {g400}");
    }

    #[test]
    fn off_grid_continuation_is_smooth() {
        let x = state(&[0.7, 0.2, 0.1], 0.5);
        let y = state(&[0.1, 0.3, 0.6], 0.5);
        let sol = solve_tau_bvp(&x, &y, 400, 1e-3, 10).unwrap();
        let t = 0.5;
        let h = 1e-3;
        let (tp, _) = sol.eval(t + h).unwrap();
        let (tm, _) = sol.eval(t - h).unwrap();
        let (t0, v0) = sol.eval(t).unwrap();
        assert!(((tp - tm) / (2.0 * h) - v0).abs() < 1e-5);
        let acc = (tp - 2.0 * t0 + tm) / (h * h);
        let line = match &sol.cont {
            Continuation::Ode(l) => l.clone(),
            _ => unreachable!(),
        };
        assert!((acc - line.accel(t0, v0).unwrap()).abs() < 1e-3);
        assert!(sol.eval(1.5).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (
                proptest::collection::vec(0.01f64..1.0, 3),
                proptest::collection::vec(0.01f64..1.0, 3),
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn bvp_solutions_are_monotone((a, b) in pair(), alpha in prop_oneof![Just(-0.5), Just(0.5), Just(0.0)]) {
                let x = state(&a, alpha);
                let y = state(&b, alpha);
                let sol = solve_tau_bvp(&x, &y, 100, 1e-3, 10).unwrap();
                prop_assert_eq!(sol.tau()[0], 0.0);
                prop_assert!((sol.tau()[100] - 1.0).abs() <= 1e-3);
                prop_assert!(sol.tau().windows(2).all(|w| w[1] > w[0]));
                prop_assert!(sol.tau_dot().iter().all(|v| *v > 0.0));
            }
        }
    }
}
