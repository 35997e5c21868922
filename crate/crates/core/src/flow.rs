//! α-flow training objective, trainer, Euler sampler and loss reporting, plus
//! the linear-interpolation baseline.
//!
//! A training pair `(μ0, μ1)` with `t ∈ [0, 1 − t_clamp]` yields the state
//! `x_t` on the α-geodesic from `μ0` to `μ1` and the regression target
//! `u_t`. The raw network output `w` is projected onto the tangent space,
//! `P(w) = w − b·(s·w)`, and the loss is the α-norm `Σ ωᵢ rᵢ²` of
//! `r = P(w) − u_t`:
//!
//! | geometry       | `b`  | `s`        | `ω`          |
//! |----------------|------|------------|--------------|
//! | α < 1          | `x`  | `x^(p−1)`  | `p² μ^α`     |
//! | α = 1          | `1`  | `μ`        | `μ`          |
//! | linear         | `1`  | `1/n`      | `1`          |
//!
//! Norm weights use `max(μ, clamp_eps)`.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::alpha::{from_alpha_rep, to_alpha_rep, AlphaParam, MappedState};
use crate::error::{Error, Result};
use crate::geodesic::{conditional_vector_field, exp_raw, log_map_with, GeodesicCurve, TauOptions};
use crate::manifold::{clamp_normalize, sample_uniform_simplex, SimplexPoint, DEFAULT_CLAMP_EPS};
use crate::nn::{adam_step, write_features, AdamState, LayerDoc, MlpModel, DEFAULT_HIDDEN, TIME_FEATURES};
use crate::reparam::{DEFAULT_SHOOT_ITERS, DEFAULT_SHOOT_TOL, DEFAULT_TAU_STEPS};
use crate::rng::RngState;

/// Version of the model JSON document.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Training objective family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Geodesic interpolation and α-norm loss.
    #[default]
    AlphaFlow,
    /// Straight-line interpolation on the simplex with a Euclidean loss.
    Linear,
}

/// Hyperparameters of training and sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub alpha: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Euler steps `N` of the sampler.
    pub euler_steps_sample: usize,
    /// Steps of the interpolation τ solve during training.
    pub tau_steps: usize,
    /// Steps of the per-step τ solve during sampling.
    pub sample_tau_steps: usize,
    pub shoot_tol: f64,
    pub shoot_max_iter: usize,
    /// Times are drawn from `[0, 1 − t_clamp]`.
    pub t_clamp: f64,
    pub clamp_eps: f64,
    pub seed: u64,
    pub baseline: Baseline,
    pub hidden: Vec<usize>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            epochs: 2000,
            learning_rate: 1e-3,
            euler_steps_sample: 1000,
            tau_steps: DEFAULT_TAU_STEPS,
            sample_tau_steps: 20,
            shoot_tol: DEFAULT_SHOOT_TOL,
            shoot_max_iter: DEFAULT_SHOOT_ITERS,
            t_clamp: 1e-3,
            clamp_eps: DEFAULT_CLAMP_EPS,
            seed: 0,
            baseline: Baseline::AlphaFlow,
            hidden: DEFAULT_HIDDEN.to_vec(),
        }
    }
}

impl FlowConfig {
    /// Checks ranges for data with `n` classes.
    pub fn validate(&self, n: usize) -> Result<()> {
        AlphaParam::new(self.alpha)?;
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.epochs == 0 || self.euler_steps_sample == 0 || self.tau_steps == 0 || self.sample_tau_steps == 0 {
            return bad("epochs and step counts must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.t_clamp > 0.0 && self.t_clamp < 0.5) {
            return bad(format!("t_clamp must lie in (0, 0.5), got {}", self.t_clamp));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 1.0 / n as f64) {
            return bad(format!("clamp_eps must lie in (0, 1/{n}), got {}", self.clamp_eps));
        }
        if !(self.shoot_tol > 0.0) {
            return bad(format!("shooting tolerance must be positive, got {}", self.shoot_tol));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad(format!("hidden widths must be nonempty and positive, got {:?}", self.hidden));
        }
        Ok(())
    }

    /// The geometry in which states live; the linear baseline uses α = −1
    /// coordinates, which are the probabilities themselves.
    pub fn geometry(&self) -> Result<AlphaParam> {
        match self.baseline {
            Baseline::AlphaFlow => AlphaParam::new(self.alpha),
            Baseline::Linear => AlphaParam::new(-1.0),
        }
    }

    fn tau_options(&self) -> TauOptions {
        TauOptions {
            steps: self.tau_steps,
            tol: self.shoot_tol,
            max_iter: self.shoot_max_iter,
        }
    }
}

/// A time-dependent vector field on mapped coordinates.
pub trait VectorField {
    /// Raw (unprojected) prediction at coordinates `x` and time `t`.
    fn predict(&self, x: &[f64], t: f64) -> Result<Vec<f64>>;

    /// Predictions for every row of `xs` at the per-row times `ts`.
    fn predict_rows(&self, xs: &Array2<f64>, ts: &[f64]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros(xs.dim());
        for (i, row) in xs.rows().into_iter().enumerate() {
            let v = self.predict(row.as_slice().expect("standard layout"), ts[i])?;
            out.row_mut(i).assign(&ndarray::ArrayView1::from(&v));
        }
        Ok(out)
    }
}

fn featurize(xs: &Array2<f64>, ts: &[f64]) -> Array2<f64> {
    let n = xs.ncols();
    let mut inputs = Array2::zeros((xs.nrows(), n + TIME_FEATURES));
    for (i, (mut row, x)) in inputs.rows_mut().into_iter().zip(xs.rows()).enumerate() {
        write_features(row.as_slice_mut().expect("standard layout"), x.as_slice().expect("standard layout"), ts[i]);
    }
    inputs
}

impl VectorField for MlpModel {
    fn predict(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.forward(x, t)
    }

    fn predict_rows(&self, xs: &Array2<f64>, ts: &[f64]) -> Result<Array2<f64>> {
        self.predict_batch(&featurize(xs, ts))
    }
}

/// The conditional field towards a fixed target, `log_x(x1)/(1 − t)`.
#[derive(Debug, Clone)]
pub struct OracleField {
    target: MappedState,
    opts: TauOptions,
}

impl OracleField {
    pub fn new(target: &SimplexPoint, alpha: AlphaParam, opts: TauOptions) -> Self {
        Self {
            target: to_alpha_rep(target, alpha),
            opts,
        }
    }
}

impl VectorField for OracleField {
    fn predict(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let x = MappedState::normalize(x.to_vec(), self.target.alpha())?;
        Ok(log_map_with(&x, &self.target, self.opts)?.scaled(1.0 / (1.0 - t)).comps().to_vec())
    }
}

/// A field that is zero everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField;

impl VectorField for ZeroField {
    fn predict(&self, x: &[f64], _t: f64) -> Result<Vec<f64>> {
        Ok(vec![0.0; x.len()])
    }
}

/// Projection `(b, s)` with `P(w) = w − b(s·w)` at state `x`.
fn projection(x: &MappedState, baseline: Baseline) -> (Vec<f64>, Vec<f64>) {
    let n = x.dim();
    match baseline {
        Baseline::Linear => (vec![1.0; n], vec![1.0 / n as f64; n]),
        Baseline::AlphaFlow if x.alpha().is_logit() => (vec![1.0; n], x.normal_weights()),
        Baseline::AlphaFlow => (x.coords().to_vec(), x.normal_weights()),
    }
}

fn project(w: &[f64], b: &[f64], s: &[f64]) -> Vec<f64> {
    let dot: f64 = s.iter().zip(w).map(|(a, c)| a * c).sum();
    w.iter().zip(b).map(|(wi, bi)| wi - bi * dot).collect()
}

fn norm_weights(mu: &[f64], alpha: AlphaParam, baseline: Baseline, eps: f64) -> Vec<f64> {
    match baseline {
        Baseline::Linear => vec![1.0; mu.len()],
        Baseline::AlphaFlow if alpha.is_logit() => mu.iter().map(|m| m.max(eps)).collect(),
        Baseline::AlphaFlow => {
            let (p, a) = (alpha.p(), alpha.alpha());
            mu.iter().map(|m| p * p * m.max(eps).powf(a)).collect()
        }
    }
}

/// State, target field and loss geometry for one `(μ0, μ1, t)` draw.
#[derive(Debug, Clone)]
pub struct TrainingTarget {
    x_t: MappedState,
    u_t: Vec<f64>,
    b: Vec<f64>,
    s: Vec<f64>,
    w: Vec<f64>,
}

impl TrainingTarget {
    /// `mu1` must already be clamped.
    pub fn new(mu0: &SimplexPoint, mu1: &SimplexPoint, t: f64, cfg: &FlowConfig) -> Result<Self> {
        mu0.check_dim(mu1.dim())?;
        if !(0.0..=1.0 - cfg.t_clamp).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "t = {t} outside [0, {}]",
                1.0 - cfg.t_clamp
            )));
        }
        let alpha = cfg.geometry()?;
        let (x_t, u_t) = match cfg.baseline {
            Baseline::Linear => {
                let mu_t: Vec<f64> = mu0
                    .probs()
                    .iter()
                    .zip(mu1.probs())
                    .map(|(a, b)| (1.0 - t) * a + t * b)
                    .collect();
                let u: Vec<f64> = mu1.probs().iter().zip(mu0.probs()).map(|(b, a)| b - a).collect();
                (MappedState::normalize(mu_t, alpha)?, u)
            }
            Baseline::AlphaFlow => {
                let curve = GeodesicCurve::new(to_alpha_rep(mu0, alpha), to_alpha_rep(mu1, alpha), cfg.tau_options())?;
                let u = conditional_vector_field(&curve, t)?;
                (u.base().clone(), u.comps().to_vec())
            }
        };
        let mu_t = from_alpha_rep(&x_t)?;
        let (b, s) = projection(&x_t, cfg.baseline);
        let w = norm_weights(mu_t.probs(), alpha, cfg.baseline, cfg.clamp_eps);
        Ok(Self { x_t, u_t, b, s, w })
    }

    pub fn state(&self) -> &MappedState {
        &self.x_t
    }

    /// Regression target `u_t`.
    pub fn field(&self) -> &[f64] {
        &self.u_t
    }

    /// Projection of a raw prediction onto the tangent space at `x_t`.
    pub fn project(&self, raw: &[f64]) -> Vec<f64> {
        project(raw, &self.b, &self.s)
    }

    fn residual(&self, raw: &[f64]) -> Vec<f64> {
        self.project(raw).iter().zip(&self.u_t).map(|(v, u)| v - u).collect()
    }

    /// `Σ ωᵢ (P(raw) − u_t)ᵢ²`.
    pub fn loss(&self, raw: &[f64]) -> f64 {
        self.residual(raw).iter().zip(&self.w).map(|(r, w)| w * r * r).sum()
    }

    /// Gradient of [`TrainingTarget::loss`] in `raw`:
    /// `2ω∘r − 2s·(b·(ω∘r))`.
    pub fn loss_grad(&self, raw: &[f64]) -> Vec<f64> {
        let wr: Vec<f64> = self.residual(raw).iter().zip(&self.w).map(|(r, w)| w * r).collect();
        let bw: f64 = self.b.iter().zip(&wr).map(|(b, v)| b * v).sum();
        wr.iter().zip(&self.s).map(|(v, s)| 2.0 * v - 2.0 * s * bw).collect()
    }
}

/// The α-flow loss of `predictor` for one draw.
pub fn training_loss(
    predictor: &dyn VectorField,
    mu1: &SimplexPoint,
    mu0: &SimplexPoint,
    t: f64,
    cfg: &FlowConfig,
) -> Result<f64> {
    let target = TrainingTarget::new(mu0, mu1, t, cfg)?;
    let raw = predictor.predict(target.state().coords(), t)?;
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("prediction"));
    }
    Ok(target.loss(&raw))
}

/// A trained network with the configuration it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    pub config: FlowConfig,
    pub mlp: MlpModel,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    alpha: f64,
    n: usize,
    config: FlowConfig,
    layers: Vec<LayerDoc>,
}

impl FlowModel {
    pub fn n(&self) -> usize {
        self.mlp.output_dim()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDoc {
            format_version: MODEL_FORMAT_VERSION,
            alpha: self.config.geometry()?.alpha(),
            n: self.n(),
            config: self.config.clone(),
            layers: self.mlp.to_docs(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(s)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let mlp = MlpModel::from_docs(doc.layers)?;
        if mlp.output_dim() != doc.n || mlp.input_dim() != doc.n + TIME_FEATURES {
            return Err(Error::Format("layer shapes do not match the class count".into()));
        }
        doc.config.validate(doc.n)?;
        if doc.config.geometry()?.alpha() != doc.alpha {
            return Err(Error::Format("alpha field disagrees with the configuration".into()));
        }
        Ok(Self { config: doc.config, mlp })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl VectorField for FlowModel {
    fn predict(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.mlp.predict(x, t)
    }

    fn predict_rows(&self, xs: &Array2<f64>, ts: &[f64]) -> Result<Array2<f64>> {
        self.mlp.predict_rows(xs, ts)
    }
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FlowModel,
    /// Mean training loss per epoch.
    pub history: Vec<f64>,
}

fn check_dataset(dataset: &[SimplexPoint]) -> Result<usize> {
    let first = dataset
        .first()
        .ok_or_else(|| Error::InvalidArgument("dataset is empty".into()))?;
    let n = first.dim();
    for p in dataset {
        first.check_dim(p.dim())?;
    }
    Ok(n)
}

/// Draws `(μ0, t)` for every data point and builds the training targets.
fn draw_targets(data: &[SimplexPoint], cfg: &FlowConfig, rng: &mut RngState) -> Result<Vec<(TrainingTarget, f64)>> {
    let n = data[0].dim();
    data.iter()
        .map(|mu1| {
            let mu0 = sample_uniform_simplex(n, cfg.clamp_eps, rng)?;
            let t = rng.uniform_in(0.0, 1.0 - cfg.t_clamp);
            Ok((TrainingTarget::new(&mu0, mu1, t, cfg)?, t))
        })
        .collect()
}

fn clamp_dataset(dataset: &[SimplexPoint], eps: f64) -> Result<Vec<SimplexPoint>> {
    dataset.iter().map(|p| clamp_normalize(p.probs(), eps)).collect()
}

fn state_matrix(targets: &[(TrainingTarget, f64)]) -> (Array2<f64>, Vec<f64>) {
    let n = targets[0].0.x_t.dim();
    let mut xs = Array2::zeros((targets.len(), n));
    for (mut row, (tg, _)) in xs.rows_mut().into_iter().zip(targets) {
        row.as_slice_mut().expect("standard layout").copy_from_slice(tg.x_t.coords());
    }
    (xs, targets.iter().map(|(_, t)| *t).collect())
}

/// Full-batch Adam on the mean loss, with fresh `(μ0, t)` draws every epoch.
pub fn train(dataset: &[SimplexPoint], cfg: &FlowConfig) -> Result<TrainOutcome> {
    train_with_progress(dataset, cfg, |_, _| {})
}

/// [`train`] with a callback receiving `(epoch, mean loss)` after each epoch.
pub fn train_with_progress(
    dataset: &[SimplexPoint],
    cfg: &FlowConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    let n = check_dataset(dataset)?;
    cfg.validate(n)?;
    let data = clamp_dataset(dataset, cfg.clamp_eps)?;
    let root = RngState::new(cfg.seed);
    let mut mlp = MlpModel::new(n, &cfg.hidden, &mut root.fork(0))?;
    let mut adam = AdamState::new(&mlp);
    let mut history = Vec::with_capacity(cfg.epochs);
    let batch = data.len() as f64;
    for epoch in 0..cfg.epochs {
        let mut rng = root.fork(epoch as u64 + 1);
        let targets = draw_targets(&data, cfg, &mut rng)?;
        let (xs, ts) = state_matrix(&targets);
        let (out, cache) = mlp.forward_batch(featurize(&xs, &ts))?;
        let mut upstream = Array2::zeros(out.dim());
        let mut total = 0.0;
        for (i, (tg, _)) in targets.iter().enumerate() {
            let raw = out.row(i);
            let raw = raw.as_slice().expect("standard layout");
            total += tg.loss(raw);
            let g = tg.loss_grad(raw);
            for (dst, gv) in upstream.row_mut(i).iter_mut().zip(g) {
                *dst = gv / batch;
            }
        }
        let mean = total / batch;
        if !mean.is_finite() {
            return Err(Error::Diverged { epoch, loss: mean });
        }
        let grads = mlp.backward(&cache, &upstream)?;
        adam_step(&mut mlp, &grads, &mut adam, cfg.learning_rate).map_err(|_| Error::Diverged { epoch, loss: mean })?;
        history.push(mean);
        progress(epoch, mean);
    }
    Ok(TrainOutcome {
        model: FlowModel {
            config: cfg.clone(),
            mlp,
        },
        history,
    })
}

/// Result of [`sample`].
#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub points: Vec<SimplexPoint>,
    /// Euler steps at which a trajectory left the positive orthant and was
    /// clamped back.
    pub clamp_activations: usize,
}

/// Euler integration of `field` from prior draws: `x ← exp_x(v/N)` with
/// `v = P_x(field(x, k/N))`, for `k = 0..N`.
pub fn sample(field: &dyn VectorField, cfg: &FlowConfig, n: usize, count: usize, rng: &RngState) -> Result<SampleOutcome> {
    sample_with_observer(field, cfg, n, count, rng, |_, _| {})
}

/// [`sample`] with a callback receiving `(step, states)` after every step.
pub fn sample_with_observer(
    field: &dyn VectorField,
    cfg: &FlowConfig,
    n: usize,
    count: usize,
    rng: &RngState,
    mut observe: impl FnMut(usize, &[MappedState]),
) -> Result<SampleOutcome> {
    cfg.validate(n)?;
    let alpha = cfg.geometry()?;
    let mut states = (0..count)
        .map(|i| Ok(to_alpha_rep(&sample_uniform_simplex(n, cfg.clamp_eps, &mut rng.fork(i as u64))?, alpha)))
        .collect::<Result<Vec<_>>>()?;
    let steps = cfg.euler_steps_sample;
    let h = 1.0 / steps as f64;
    let mut clamps = 0;
    let mut xs = Array2::zeros((count, n));
    for k in 0..steps {
        let t = k as f64 * h;
        for (mut row, x) in xs.rows_mut().into_iter().zip(&states) {
            row.as_slice_mut().expect("standard layout").copy_from_slice(x.coords());
        }
        let raw = field.predict_rows(&xs, &vec![t; count])?;
        for (x, r) in states.iter_mut().zip(raw.rows()) {
            let r = r.as_slice().expect("standard layout");
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("prediction"));
            }
            let (b, s) = projection(x, cfg.baseline);
            let v: Vec<f64> = project(r, &b, &s).iter().map(|c| c * h).collect();
            let (next, clamped) = euler_step(x, &v, cfg)?;
            clamps += clamped as usize;
            *x = next;
        }
        observe(k + 1, &states);
    }
    let points = states.iter().map(from_alpha_rep).collect::<Result<Vec<_>>>()?;
    Ok(SampleOutcome {
        points,
        clamp_activations: clamps,
    })
}

/// One sampler step; returns the new state and whether it had to be clamped
/// back into the positive orthant.
fn euler_step(x: &MappedState, v: &[f64], cfg: &FlowConfig) -> Result<(MappedState, bool)> {
    let alpha = x.alpha();
    let candidate = match cfg.baseline {
        Baseline::Linear => Ok(x.coords().iter().zip(v).map(|(a, b)| a + b).collect::<Vec<f64>>()),
        Baseline::AlphaFlow => exp_raw(x, v, 1.0, cfg.sample_tau_steps),
    };
    let candidate = match candidate {
        Ok(c) => c,
        Err(Error::PositivityViolated { .. }) => x.coords().iter().zip(v).map(|(a, b)| a + b).collect(),
        Err(e) => return Err(e),
    };
    if candidate.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("sampler state"));
    }
    if alpha.is_logit() || candidate.iter().all(|c| *c > 0.0) {
        return Ok((MappedState::normalize(candidate, alpha)?, false));
    }
    let p = alpha.p();
    let mu: Vec<f64> = candidate.iter().map(|c| c.max(0.0).powf(p)).collect();
    Ok((to_alpha_rep(&clamp_normalize(&mu, cfg.clamp_eps)?, alpha), true))
}

/// Monte-Carlo estimate of the training loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub mean_loss: f64,
    /// The negative-ELBO bound up to its model-independent constant.
    pub half_loss: f64,
    /// Mean loss of each Monte-Carlo pass over the dataset.
    pub per_batch: Vec<f64>,
}

/// Averages the loss over `mc_draws` passes of fresh `(μ0, t)` draws.
pub fn elbo_report(
    field: &dyn VectorField,
    dataset: &[SimplexPoint],
    cfg: &FlowConfig,
    mc_draws: usize,
    rng: &RngState,
) -> Result<LossReport> {
    let n = check_dataset(dataset)?;
    cfg.validate(n)?;
    if mc_draws == 0 {
        return Err(Error::InvalidArgument("mc_draws must be positive".into()));
    }
    let data = clamp_dataset(dataset, cfg.clamp_eps)?;
    let mut per_batch = Vec::with_capacity(mc_draws);
    for pass in 0..mc_draws {
        let targets = draw_targets(&data, cfg, &mut rng.fork(pass as u64))?;
        let (xs, ts) = state_matrix(&targets);
        let raw = field.predict_rows(&xs, &ts)?;
        let total: f64 = targets
            .iter()
            .zip(raw.rows())
            .map(|((tg, _), r)| tg.loss(r.as_slice().expect("standard layout")))
            .sum();
        let mean = total / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        per_batch.push(mean);
    }
    let mean_loss = per_batch.iter().sum::<f64>() / mc_draws as f64;
    Ok(LossReport {
        mean_loss,
        half_loss: mean_loss / 2.0,
        per_batch,
    })
}
