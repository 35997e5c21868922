//! Multilayer perceptron with tanh hidden layers, manual backpropagation and
//! Adam.
//!
//! Inputs are the mapped state concatenated with the time features
//! `(t, sin 2πt, cos 2πt)`. Layer `l` maps `a ↦ a·W_l + b_l` with `W_l` of
//! shape `[fan_in, fan_out]`; every layer but the last is followed by tanh.

use ndarray::{Array1, Array2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Number of time features appended to the state.
pub const TIME_FEATURES: usize = 3;
/// Default hidden layer widths.
pub const DEFAULT_HIDDEN: [usize; 2] = [256, 256];

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Writes `(x, t, sin 2πt, cos 2πt)` into `row`.
pub fn write_features(row: &mut [f64], x: &[f64], t: f64) {
    let n = x.len();
    row[..n].copy_from_slice(x);
    let (s, c) = (2.0 * std::f64::consts::PI * t).sin_cos();
    row[n] = t;
    row[n + 1] = s;
    row[n + 2] = c;
}

/// One affine layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            w: Array2::zeros((fan_in, fan_out)),
            b: Array1::zeros(fan_out),
        }
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.w.nrows(), self.w.ncols())
    }

    fn all_finite(&self) -> bool {
        self.w.iter().chain(self.b.iter()).all(|v| v.is_finite())
    }
}

/// The vector-field regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Dense>,
}

/// Gradients with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

/// Activations retained by [`MlpModel::forward_batch`] for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer; entries after the first are tanh outputs.
    inputs: Vec<Array2<f64>>,
}

impl MlpModel {
    /// A state-plus-time regressor for `n` classes with Xavier-uniform weights
    /// and zero biases.
    pub fn new(n: usize, hidden: &[usize], rng: &mut RngState) -> Result<Self> {
        Self::from_widths(&Self::widths_for(n, hidden), rng)
    }

    /// All-zero parameters; the output is identically zero.
    pub fn zeros(n: usize, hidden: &[usize]) -> Self {
        let widths = Self::widths_for(n, hidden);
        Self {
            layers: widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    fn widths_for(n: usize, hidden: &[usize]) -> Vec<usize> {
        let mut w = vec![n + TIME_FEATURES];
        w.extend_from_slice(hidden);
        w.push(n);
        w
    }

    /// A plain network with the given layer widths (input first).
    pub fn from_widths(widths: &[usize], rng: &mut RngState) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid layer widths {widths:?}")));
        }
        let layers = widths
            .windows(2)
            .map(|w| {
                let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let mut layer = Dense::zeros(w[0], w[1]);
                layer.w.iter_mut().for_each(|v| *v = rng.uniform_in(-bound, bound));
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").w.ncols()
    }

    /// Widths of every layer boundary, input first.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(|l| l.w.ncols()));
        w
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: cols,
            });
        }
        Ok(())
    }

    /// Raw prediction at state coordinates `x` and time `t`.
    pub fn forward(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_input(x.len() + TIME_FEATURES)?;
        let mut row = vec![0.0; self.input_dim()];
        write_features(&mut row, x, t);
        let input = Array2::from_shape_vec((1, row.len()), row).expect("shape");
        Ok(self.predict_batch(&input)?.row(0).to_vec())
    }

    /// Batched prediction on rows of already featurized inputs.
    pub fn predict_batch(&self, inputs: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(inputs.ncols())?;
        let mut a = inputs.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            a = affine(&a, layer);
            if l < last {
                a.mapv_inplace(tanh);
            }
        }
        Ok(a)
    }

    /// Batched prediction keeping activations for [`MlpModel::backward`].
    pub fn forward_batch(&self, inputs: Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(inputs.ncols())?;
        let last = self.layers.len() - 1;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
        };
        let mut a = inputs;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = affine(&a, layer);
            cache.inputs.push(a);
            if l < last {
                z.mapv_inplace(tanh);
            }
            a = z;
        }
        Ok((a, cache))
    }

    /// Parameter gradients of `Σ upstream ∘ output` for the cached batch.
    pub fn backward(&self, cache: &ForwardCache, upstream: &Array2<f64>) -> Result<Gradients> {
        if upstream.ncols() != self.output_dim() || upstream.nrows() != cache.inputs[0].nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                got: upstream.ncols(),
            });
        }
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut g = upstream.clone();
        for l in (0..self.layers.len()).rev() {
            let a = &cache.inputs[l];
            let gw = a.t().dot(&g);
            let gb = g.sum_axis(Axis(0));
            if l > 0 {
                let mut prev = g.dot(&self.layers[l].w.t());
                Zip::from(&mut prev).and(a).for_each(|p, &act| *p *= 1.0 - act * act);
                g = prev;
            }
            grads.push(Dense { w: gw, b: gb });
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// Single-sample gradients of `upstream · forward(x, t)`.
    pub fn backward_single(&self, x: &[f64], t: f64, upstream: &[f64]) -> Result<Gradients> {
        self.check_input(x.len() + TIME_FEATURES)?;
        let mut row = vec![0.0; self.input_dim()];
        write_features(&mut row, x, t);
        let input = Array2::from_shape_vec((1, row.len()), row).expect("shape");
        let (_, cache) = self.forward_batch(input)?;
        let up = Array2::from_shape_vec((1, upstream.len()), upstream.to_vec())
            .map_err(|_| Error::DimensionMismatch {
                expected: self.output_dim(),
                got: upstream.len(),
            })?;
        self.backward(&cache, &up)
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(Dense::all_finite)
    }

    /// Parameters in layer order, weights (row-major) before biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied().collect::<Vec<_>>())
            .collect()
    }

    /// Overwrites the parameters from the layout of [`MlpModel::params`].
    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter();
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|p| *p = *it.next().expect("length checked"));
        }
        Ok(())
    }
}

fn affine(a: &Array2<f64>, layer: &Dense) -> Array2<f64> {
    let mut z = a.dot(&layer.w);
    z += &layer.b;
    z
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model.layers.iter().map(Dense::zeros_like).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(Dense::all_finite)
    }

    /// Flattened view in layer order, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied().collect::<Vec<_>>())
            .collect()
    }
}

/// Bias-corrected first and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Dense>,
    v: Vec<Dense>,
    step: u64,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        Self {
            m: model.layers.iter().map(Dense::zeros_like).collect(),
            v: model.layers.iter().map(Dense::zeros_like).collect(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One Adam update with β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
pub fn adam_step(model: &mut MlpModel, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<()> {
    if grads.layers.len() != model.layers.len()
        || grads
            .layers
            .iter()
            .zip(&model.layers)
            .any(|(g, p)| g.w.dim() != p.w.dim() || g.b.dim() != p.b.dim())
    {
        return Err(Error::InvalidArgument("gradient shapes do not match the model".into()));
    }
    if !grads.all_finite() {
        return Err(Error::NonFinite("gradients"));
    }
    state.step += 1;
    let bc1 = 1.0 - ADAM_BETA1.powi(state.step as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(state.step as i32);
    let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
    };
    for (((p, g), m), v) in model
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        Zip::from(&mut p.w)
            .and(&g.w)
            .and(&mut m.w)
            .and(&mut v.w)
            .for_each(|p, &g, m, v| update(p, g, m, v));
        Zip::from(&mut p.b)
            .and(&g.b)
            .and(&mut m.b)
            .and(&mut v.b)
            .for_each(|p, &g, m, v| update(p, g, m, v));
    }
    Ok(())
}

/// Serialized layer: row-major `[fan_in, fan_out]` weights and the bias.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerDoc {
    pub shape: [usize; 2],
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl MlpModel {
    pub fn to_docs(&self) -> Vec<LayerDoc> {
        self.layers
            .iter()
            .map(|l| LayerDoc {
                shape: [l.w.nrows(), l.w.ncols()],
                weights: l.w.iter().copied().collect(),
                bias: l.b.to_vec(),
            })
            .collect()
    }

    pub fn from_docs(docs: Vec<LayerDoc>) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::Format("model has no layers".into()));
        }
        let mut layers = Vec::with_capacity(docs.len());
        for (i, d) in docs.into_iter().enumerate() {
            let [r, c] = d.shape;
            if d.bias.len() != c {
                return Err(Error::Format(format!("layer {i}: bias length {} for width {c}", d.bias.len())));
            }
            let w = Array2::from_shape_vec((r, c), d.weights)
                .map_err(|e| Error::Format(format!("layer {i}: {e}")))?;
            layers.push(Dense {
                w,
                b: Array1::from(d.bias),
            });
        }
        if layers.windows(2).any(|p| p[0].w.ncols() != p[1].w.nrows()) {
            return Err(Error::Format("consecutive layer shapes do not chain".into()));
        }
        let model = Self { layers };
        if !model.all_finite() {
            return Err(Error::Format("model parameters are not finite".into()));
        }
        Ok(model)
    }
}

/// `tanh` through one `exp`; libm's `tanh` goes through the slower `expm1`
/// and was a quarter of the training time. Absolute error stays at rounding
/// level, which is all the network needs.
#[inline]
fn tanh(x: f64) -> f64 {
    1.0 - 2.0 / ((2.0 * x).exp() + 1.0)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fast_tanh_tracks_std() {
        for k in -4000..=4000 {
            let x = k as f64 / 100.0;
            assert!((super::tanh(x) - x.tanh()).abs() <= 4e-16, "{x}");
        }
        assert_eq!(super::tanh(1e3), 1.0);
        assert_eq!(super::tanh(-1e3), -1.0);
    }

    use super::*;

    #[test]
    fn zero_model_outputs_zero() {
        let m = MlpModel::zeros(3, &[8, 8]);
        assert_eq!(m.forward(&[0.1, 0.2, 0.3], 0.4).unwrap(), vec![0.0; 3]);
        assert!(m.forward(&[0.1, 0.2], 0.4).is_err());
    }

    #[test]
    fn forward_is_pure_and_smooth() {
        let m = MlpModel::new(3, &[16, 16], &mut RngState::new(1)).unwrap();
        let x = [0.4, 0.5, 0.6];
        let a = m.forward(&x, 0.3).unwrap();
        assert_eq!(a, m.forward(&x, 0.3).unwrap());
        let b = m.forward(&x, 0.3 + 1e-6).unwrap();
        let diff = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-4 && diff > 0.0);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let m = MlpModel::new(2, &[5], &mut RngState::new(2)).unwrap();
        let g = m.backward_single(&[0.3, 0.7], 0.5, &[0.0, 0.0]).unwrap();
        assert!(g.flatten().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_linear_layer_least_squares() {
        let mut rng = RngState::new(3);
        let m = MlpModel::from_widths(&[3, 2], &mut rng).unwrap();
        let x = Array2::from_shape_vec((4, 3), (0..12).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let y = Array2::from_shape_vec((4, 2), (0..8).map(|i| (i as f64 * 0.11).cos()).collect()).unwrap();
        let (out, cache) = m.forward_batch(x.clone()).unwrap();
        let resid = &out - &y;
        let g = m.backward(&cache, &(2.0 * &resid)).unwrap();
        let expected_w = 2.0 * x.t().dot(&resid);
        let expected_b = 2.0 * resid.sum_axis(Axis(0));
        assert!((&g.layers[0].w - &expected_w).iter().all(|v| v.abs() < 1e-12));
        assert!((&g.layers[0].b - &expected_b).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngState::new(4);
        let mut m = MlpModel::from_widths(&[4, 3, 2], &mut rng).unwrap();
        let x = Array2::from_shape_vec((3, 4), (0..12).map(|i| (i as f64 * 0.7).cos()).collect()).unwrap();
        let up = Array2::from_shape_vec((3, 2), vec![0.3, -1.2, 0.5, 0.8, -0.4, 1.1]).unwrap();
        let loss = |m: &MlpModel| (m.predict_batch(&x).unwrap() * &up).sum();
        let (_, cache) = m.forward_batch(x.clone()).unwrap();
        let analytic = m.backward(&cache, &up).unwrap().flatten();
        let base = m.params();
        let h = 1e-6;
        let mut worst = 0.0f64;
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += h;
            m.set_params(&p).unwrap();
            let up_l = loss(&m);
            p[i] -= 2.0 * h;
            m.set_params(&p).unwrap();
            let dn_l = loss(&m);
            let fd = (up_l - dn_l) / (2.0 * h);
            let rel = (fd - analytic[i]).abs() / analytic[i].abs().max(1e-3);
            worst = worst.max(rel);
        }
        assert!(worst <= 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut m = MlpModel::new(2, &[4], &mut RngState::new(5)).unwrap();
        let before = m.clone();
        let mut st = AdamState::new(&m);
        let zero = Gradients::zeros_like(&m);
        adam_step(&mut m, &zero, &mut st, 1e-2).unwrap();
        assert_eq!(m, before);
        assert_eq!(st.step(), 1);
    }

    #[test]
    fn adam_minimizes_scalar_quadratic() {
        let mut m = MlpModel::from_widths(&[1, 1], &mut RngState::new(6)).unwrap();
        let mut st = AdamState::new(&m);
        let target = 0.75;
        let mut converged_at = None;
        for it in 0..2000 {
            let w = m.layers()[0].w[[0, 0]];
            let mut g = Gradients::zeros_like(&m);
            g.layers[0].w[[0, 0]] = 2.0 * (w - target);
            adam_step(&mut m, &g, &mut st, 1e-2).unwrap();
            if (m.layers()[0].w[[0, 0]] - target).abs() < 1e-6 && converged_at.is_none() {
                converged_at = Some(it);
            }
        }
        assert!(converged_at.is_some());
        assert!((m.layers()[0].w[[0, 0]] - target).abs() < 1e-6);
    }

    #[test]
    fn adam_is_deterministic_and_rejects_nan() {
        let run = || {
            let mut m = MlpModel::new(2, &[4], &mut RngState::new(7)).unwrap();
            let mut st = AdamState::new(&m);
            for k in 0..5 {
                let mut g = Gradients::zeros_like(&m);
                g.layers[0].w.iter_mut().for_each(|v| *v = (k as f64).sin());
                adam_step(&mut m, &g, &mut st, 1e-3).unwrap();
            }
            m
        };
        assert_eq!(run(), run());
        let mut m = MlpModel::new(2, &[4], &mut RngState::new(7)).unwrap();
        let mut st = AdamState::new(&m);
        let mut g = Gradients::zeros_like(&m);
        g.layers[1].b[0] = f64::NAN;
        assert!(adam_step(&mut m, &g, &mut st, 1e-3).is_err());
    }

    #[test]
    fn docs_round_trip_is_bit_exact() {
        let m = MlpModel::new(3, &[7, 5], &mut RngState::new(8)).unwrap();
        let json = serde_json::to_string(&m.to_docs()).unwrap();
        let back = MlpModel::from_docs(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.param_count(), m.param_count());
        assert_eq!(back.widths(), vec![6, 7, 5, 3]);
    }
}
