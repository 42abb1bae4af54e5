//! Causally-masked temporal predictors behind a black-box inference
//! boundary.
//!
//! Every backbone shares the same structural front-end: when predicting
//! variable `j` at time `t` the model sees all variables at lags
//! `1..K-1`, other variables at lag 0, and never its own lag-0 value.
//! Inputs are arranged as a sliding window of `K` lags; predictions for
//! `t < K-1` have no full window and are excluded from every loss and
//! influence signal.
//!
//! Training is full-batch gradient descent on the MSE with early stopping
//! on the training loss. After training, parameters are frozen; inference
//! only mutates an atomic forward-pass counter used for complexity
//! accounting.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::MultivariateSeries;

const PREDICTOR_FORMAT_VERSION: u32 = 1;

/// Prediction head family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backbone {
    /// One affine head per target; interpretable oracle.
    Linear,
    /// Tanh multilayer perceptron per target.
    Mlp,
}

/// Replacement value used when masking non-parent variables at inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Imputation {
    /// Per-variable training mean (default; small distribution shift for
    /// normalized data).
    TrainingMean,
    /// Literal zero.
    Zero,
}

/// Training and architecture configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    pub backbone: Backbone,
    /// Number of accessible lags K (slots 0..K-1).
    pub window: usize,
    /// Hidden layer widths (MLP only).
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Early stopping: epochs without training-loss improvement.
    pub patience: usize,
    pub seed: u64,
    pub imputation: Imputation,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            backbone: Backbone::Mlp,
            window: 5,
            hidden_sizes: vec![32],
            learning_rate: 1e-2,
            max_epochs: 20,
            patience: 5,
            seed: 0,
            imputation: Imputation::TrainingMean,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidConfig(format!("window must be >= 2, got {}", self.window)));
        }
        if self.max_epochs < 1 {
            return Err(Error::InvalidConfig("max_epochs must be >= 1".into()));
        }
        if self.patience < 1 {
            return Err(Error::InvalidConfig("patience must be >= 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.backbone == Backbone::Mlp
            && (self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0))
        {
            return Err(Error::InvalidConfig(
                "mlp backbone needs at least one nonzero hidden width".into(),
            ));
        }
        Ok(())
    }
}

/// Which `(variable, lag)` slots a prediction head may read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskSpec {
    pub n_vars: usize,
    pub window: usize,
    pub target: usize,
}

/// Binary mask over `(variable, lag)` input slots: 1 = accessible.
///
/// All variables are open at lags `1..K-1`; variables other than the
/// target are open at lag 0; the target's lag-0 slot is always masked.
pub fn build_causal_mask(spec: &MaskSpec) -> Result<Array2<f64>> {
    if spec.target >= spec.n_vars {
        return Err(Error::InvalidInput(format!(
            "target {} out of range for {} variables",
            spec.target, spec.n_vars
        )));
    }
    if spec.window == 0 {
        return Err(Error::InvalidInput("window must be >= 1".into()));
    }
    let mut mask = Array2::ones((spec.n_vars, spec.window));
    mask[[spec.target, 0]] = 0.0;
    Ok(mask)
}

/// Per-target parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum HeadParams {
    Linear {
        weights: Array1<f64>,
        bias: f64,
    },
    Mlp {
        /// `(W, b)` per hidden layer; `W` has shape `width x fan_in`.
        layers: Vec<(Array2<f64>, Array1<f64>)>,
        out_weights: Array1<f64>,
        out_bias: f64,
    },
}

/// Parameterized model: one head per target over a shared masked window.
///
/// Input slots are mean-centered with per-slot centers frozen at training
/// time; this conditions full-batch gradient descent independently of the
/// input dimension. Exposed separately from [`TrainedPredictor`] so tests
/// can set known parameters and check gradients against finite
/// differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorModel {
    config: PredictorConfig,
    n_vars: usize,
    heads: Vec<HeadParams>,
    /// Per-slot input offsets, zero until set by training.
    centers: Array1<f64>,
}

/// Sliding windows of a series: row r of `inputs` holds the K-lag window
/// ending at time `K-1+r`, laid out as slot `(i, l) -> column i*K + l`.
struct Windows {
    inputs: Array2<f64>,
    targets: Array2<f64>,
}

fn build_windows(series: &MultivariateSeries, window: usize) -> Result<Windows> {
    let n = series.n_vars();
    let t_len = series.len();
    if t_len <= window {
        return Err(Error::InsufficientData(format!(
            "series length {t_len} must exceed window {window}"
        )));
    }
    let n_rows = t_len - window + 1;
    let x = series.values();
    let mut inputs = Array2::zeros((n_rows, n * window));
    let mut targets = Array2::zeros((n_rows, n));
    for r in 0..n_rows {
        let t = window - 1 + r;
        for i in 0..n {
            for l in 0..window {
                inputs[[r, i * window + l]] = x[[i, t - l]];
            }
            targets[[r, i]] = x[[i, t]];
        }
    }
    Ok(Windows { inputs, targets })
}

impl PredictorModel {
    /// Seeded initialization: zero weights for the linear backbone,
    /// Xavier-uniform for MLP layers.
    pub fn init(config: PredictorConfig, n_vars: usize) -> Result<Self> {
        config.validate()?;
        if n_vars == 0 {
            return Err(Error::InvalidInput("model needs at least one variable".into()));
        }
        let input_dim = n_vars * config.window;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let heads = (0..n_vars)
            .map(|_| match config.backbone {
                Backbone::Linear => HeadParams::Linear {
                    weights: Array1::zeros(input_dim),
                    bias: 0.0,
                },
                Backbone::Mlp => {
                    let mut layers = Vec::new();
                    let mut fan_in = input_dim;
                    for &width in &config.hidden_sizes {
                        let limit = (6.0 / (fan_in + width) as f64).sqrt();
                        let w = Array2::from_shape_fn((width, fan_in), |_| {
                            rng.gen_range(-limit..limit)
                        });
                        layers.push((w, Array1::zeros(width)));
                        fan_in = width;
                    }
                    let limit = (6.0 / (fan_in + 1) as f64).sqrt();
                    let out_weights =
                        Array1::from_shape_fn(fan_in, |_| rng.gen_range(-limit..limit));
                    HeadParams::Mlp { layers, out_weights, out_bias: 0.0 }
                }
            })
            .collect();
        let centers = Array1::zeros(n_vars * config.window);
        Ok(Self { config, n_vars, heads, centers })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    /// Overwrite one linear head with explicit `(variable, lag)` weights.
    pub fn set_linear_head(
        &mut self,
        target: usize,
        weights: &Array2<f64>,
        bias: f64,
    ) -> Result<()> {
        if target >= self.n_vars {
            return Err(Error::InvalidInput(format!("target {target} out of range")));
        }
        let k = self.config.window;
        if weights.dim() != (self.n_vars, k) {
            return Err(Error::InvalidInput(format!(
                "weight matrix shape {:?} does not match ({}, {k})",
                weights.dim(),
                self.n_vars
            )));
        }
        match &mut self.heads[target] {
            HeadParams::Linear { weights: w, bias: b } => {
                for i in 0..self.n_vars {
                    for l in 0..k {
                        w[i * k + l] = weights[[i, l]];
                    }
                }
                *b = bias;
                Ok(())
            }
            HeadParams::Mlp { .. } => {
                Err(Error::InvalidInput("set_linear_head requires a linear backbone".into()))
            }
        }
    }

    /// All parameters flattened head by head (layout is stable across
    /// calls; used for snapshots and gradient checks).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for head in &self.heads {
            match head {
                HeadParams::Linear { weights, bias } => {
                    out.extend(weights.iter());
                    out.push(*bias);
                }
                HeadParams::Mlp { layers, out_weights, out_bias } => {
                    for (w, b) in layers {
                        out.extend(w.iter());
                        out.extend(b.iter());
                    }
                    out.extend(out_weights.iter());
                    out.push(*out_bias);
                }
            }
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        let expected = self.params_flat().len();
        if params.len() != expected {
            return Err(Error::InvalidInput(format!(
                "expected {expected} parameters, got {}",
                params.len()
            )));
        }
        let mut it = params.iter().copied();
        for head in &mut self.heads {
            match head {
                HeadParams::Linear { weights, bias } => {
                    for w in weights.iter_mut() {
                        *w = it.next().unwrap();
                    }
                    *bias = it.next().unwrap();
                }
                HeadParams::Mlp { layers, out_weights, out_bias } => {
                    for (w, b) in layers {
                        for v in w.iter_mut() {
                            *v = it.next().unwrap();
                        }
                        for v in b.iter_mut() {
                            *v = it.next().unwrap();
                        }
                    }
                    for v in out_weights.iter_mut() {
                        *v = it.next().unwrap();
                    }
                    *out_bias = it.next().unwrap();
                }
            }
        }
        Ok(())
    }

    /// Forward pass of one head on a pre-masked design matrix. Returns
    /// `(prediction, hidden activations)`; activations feed the backward
    /// pass.
    fn forward_head(&self, head: &HeadParams, design: &Array2<f64>) -> (Array1<f64>, Vec<Array2<f64>>) {
        match head {
            HeadParams::Linear { weights, bias } => {
                let y = design.dot(weights) + *bias;
                (y, Vec::new())
            }
            HeadParams::Mlp { layers, out_weights, out_bias } => {
                let mut activations = Vec::with_capacity(layers.len());
                let mut a = design.clone();
                for (w, b) in layers {
                    let mut z = a.dot(&w.t());
                    z += b;
                    z.mapv_inplace(f64::tanh);
                    activations.push(z.clone());
                    a = z;
                }
                let y = a.dot(out_weights) + *out_bias;
                (y, activations)
            }
        }
    }

    /// MSE gradient of one head, matching `params_flat` layout for that
    /// head. `residual_scaled` must hold `2 (yhat - y) / n`.
    fn grad_head(
        &self,
        head: &HeadParams,
        design: &Array2<f64>,
        activations: &[Array2<f64>],
        residual_scaled: &Array1<f64>,
    ) -> Vec<f64> {
        match head {
            HeadParams::Linear { .. } => {
                let grad_w = design.t().dot(residual_scaled);
                let grad_b = residual_scaled.sum();
                let mut out: Vec<f64> = grad_w.to_vec();
                out.push(grad_b);
                out
            }
            HeadParams::Mlp { layers, out_weights, .. } => {
                let last = activations.last().expect("mlp has at least one layer");
                let grad_out_w = last.t().dot(residual_scaled);
                let grad_out_b = residual_scaled.sum();

                // Backpropagate through tanh layers.
                let mut layer_grads: Vec<(Array2<f64>, Array1<f64>)> =
                    Vec::with_capacity(layers.len());
                // d_h: gradient wrt layer output, shape n x width.
                let mut d_h: Array2<f64> = {
                    let n = residual_scaled.len();
                    let mut m = Array2::zeros((n, out_weights.len()));
                    for r in 0..n {
                        let rs = residual_scaled[r];
                        for c in 0..out_weights.len() {
                            m[[r, c]] = rs * out_weights[c];
                        }
                    }
                    m
                };
                for (idx, (w, _)) in layers.iter().enumerate().rev() {
                    let act = &activations[idx];
                    // d_z = d_h * (1 - act^2)
                    let mut d_z = d_h.clone();
                    d_z.zip_mut_with(act, |g, &a| *g *= 1.0 - a * a);
                    let input: &Array2<f64> =
                        if idx == 0 { design } else { &activations[idx - 1] };
                    let grad_w = d_z.t().dot(input);
                    let grad_b = d_z.sum_axis(ndarray::Axis(0));
                    layer_grads.push((grad_w, grad_b));
                    if idx > 0 {
                        d_h = d_z.dot(w);
                    }
                }
                layer_grads.reverse();

                let mut out = Vec::new();
                for (gw, gb) in &layer_grads {
                    out.extend(gw.iter());
                    out.extend(gb.iter());
                }
                out.extend(grad_out_w.iter());
                out.push(grad_out_b);
                out
            }
        }
    }

    /// Per-head design: shared windows with non-parent variables imputed,
    /// slots centered, and the target's lag-0 column structurally zeroed.
    fn head_design(
        &self,
        windows: &Windows,
        target: usize,
        parents: Option<&BTreeSet<usize>>,
        impute: &[f64],
    ) -> Array2<f64> {
        let k = self.config.window;
        let mut design = windows.inputs.clone();
        if let Some(parents) = parents {
            for (i, &value) in impute.iter().enumerate() {
                if !parents.contains(&i) {
                    for l in 0..k {
                        design.column_mut(i * k + l).fill(value);
                    }
                }
            }
        }
        design -= &self.centers;
        design.column_mut(target * k).fill(0.0);
        design
    }

    /// Mean training loss (over heads) on a series.
    pub fn loss(&self, series: &MultivariateSeries) -> Result<f64> {
        let windows = build_windows(series, self.config.window)?;
        let impute = vec![0.0; self.n_vars];
        let mut total = 0.0;
        for (j, head) in self.heads.iter().enumerate() {
            let design = self.head_design(&windows, j, None, &impute);
            let (y, _) = self.forward_head(head, &design);
            let target = windows.targets.column(j);
            let mse = y
                .iter()
                .zip(target.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / y.len() as f64;
            total += mse;
        }
        Ok(total / self.n_vars as f64)
    }

    /// Mean loss and its gradient wrt the flat parameter vector.
    pub fn loss_and_grad(&self, series: &MultivariateSeries) -> Result<(f64, Vec<f64>)> {
        let windows = build_windows(series, self.config.window)?;
        let impute = vec![0.0; self.n_vars];
        let mut total = 0.0;
        let mut grads = Vec::new();
        let n_heads = self.n_vars as f64;
        for (j, head) in self.heads.iter().enumerate() {
            let design = self.head_design(&windows, j, None, &impute);
            let (y, activations) = self.forward_head(head, &design);
            let target = windows.targets.column(j);
            let n = y.len() as f64;
            let residual = &y - &target;
            total += residual.iter().map(|r| r * r).sum::<f64>() / n;
            let scaled = residual.mapv(|r| 2.0 * r / n / n_heads);
            grads.extend(self.grad_head(head, &design, &activations, &scaled));
        }
        Ok((total / n_heads, grads))
    }
}

/// A frozen predictor: immutable parameters plus an atomic count of
/// inference calls.
#[derive(Debug)]
pub struct TrainedPredictor {
    model: PredictorModel,
    train_means: Vec<f64>,
    loss_trace: Vec<f64>,
    final_loss: f64,
    forward_passes: AtomicU64,
}

/// Dense predictions aligned with the input series. Entries before
/// `valid_from` carry no information and are fixed at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub values: Array2<f64>,
    pub valid_from: usize,
}

impl Prediction {
    /// Per-target MSE against the observed series over the valid region.
    pub fn mse_per_target(&self, series: &MultivariateSeries) -> Result<Vec<f64>> {
        if series.values().dim() != self.values.dim() {
            return Err(Error::InvalidInput("prediction/series shape mismatch".into()));
        }
        let (n, t_len) = self.values.dim();
        let count = t_len - self.valid_from;
        if count == 0 {
            return Err(Error::InsufficientData("no valid prediction time points".into()));
        }
        let x = series.values();
        Ok((0..n)
            .map(|j| {
                (self.valid_from..t_len)
                    .map(|t| (self.values[[j, t]] - x[[j, t]]).powi(2))
                    .sum::<f64>()
                    / count as f64
            })
            .collect())
    }
}

/// Train one prediction head per variable with full-batch gradient descent
/// on the MSE, early-stopping on the training loss. The best-loss
/// parameters are kept.
pub fn train(series: &MultivariateSeries, config: &PredictorConfig) -> Result<TrainedPredictor> {
    config.validate()?;
    let windows = build_windows(series, config.window)?;
    let n_vars = series.n_vars();
    let mut model = PredictorModel::init(config.clone(), n_vars)?;
    model.centers = windows
        .inputs
        .columns()
        .into_iter()
        .map(|col| col.sum() / col.len() as f64)
        .collect();
    let impute = vec![0.0; n_vars];

    // The structural mask never changes: precompute per-head designs once.
    let designs: Vec<Array2<f64>> =
        (0..n_vars).map(|j| model.head_design(&windows, j, None, &impute)).collect();

    let mut best_loss = f64::INFINITY;
    let mut best_params = model.params_flat();
    let mut loss_trace = Vec::with_capacity(config.max_epochs);
    let mut strikes = 0usize;

    for epoch in 0..config.max_epochs {
        let mut epoch_loss = 0.0;
        let mut head_grads: Vec<Vec<f64>> = Vec::with_capacity(n_vars);
        for (j, design) in designs.iter().enumerate() {
            let head = &model.heads[j];
            let (y, activations) = model.forward_head(head, design);
            let target = windows.targets.column(j);
            let n = y.len() as f64;
            let residual = &y - &target;
            epoch_loss += residual.iter().map(|r| r * r).sum::<f64>() / n;
            // Each head descends its own MSE gradient.
            let scaled = residual.mapv(|r| 2.0 * r / n);
            head_grads.push(model.grad_head(head, design, &activations, &scaled));
        }
        epoch_loss /= n_vars as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        loss_trace.push(epoch_loss);

        if epoch_loss < best_loss {
            best_loss = epoch_loss;
            best_params = model.params_flat();
            strikes = 0;
        } else {
            strikes += 1;
            if strikes >= config.patience {
                break;
            }
        }

        // Gradient step.
        for (j, grad) in head_grads.iter().enumerate() {
            apply_step(&mut model.heads[j], grad, config.learning_rate);
        }
    }

    model.set_params_flat(&best_params)?;
    Ok(TrainedPredictor {
        model,
        train_means: series.var_means(),
        loss_trace,
        final_loss: best_loss,
        forward_passes: AtomicU64::new(0),
    })
}

fn apply_step(head: &mut HeadParams, grad: &[f64], lr: f64) {
    let mut it = grad.iter().copied();
    match head {
        HeadParams::Linear { weights, bias } => {
            for w in weights.iter_mut() {
                *w -= lr * it.next().unwrap();
            }
            *bias -= lr * it.next().unwrap();
        }
        HeadParams::Mlp { layers, out_weights, out_bias } => {
            for (w, b) in layers {
                for v in w.iter_mut() {
                    *v -= lr * it.next().unwrap();
                }
                for v in b.iter_mut() {
                    *v -= lr * it.next().unwrap();
                }
            }
            for v in out_weights.iter_mut() {
                *v -= lr * it.next().unwrap();
            }
            *out_bias -= lr * it.next().unwrap();
        }
    }
}

impl TrainedPredictor {
    /// Wrap a hand-built model (testing and oracle construction).
    pub fn from_model(model: PredictorModel, train_means: Vec<f64>) -> Result<Self> {
        if train_means.len() != model.n_vars() {
            return Err(Error::InvalidInput("one training mean per variable required".into()));
        }
        Ok(Self {
            model,
            train_means,
            loss_trace: Vec::new(),
            final_loss: f64::NAN,
            forward_passes: AtomicU64::new(0),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.model.n_vars
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.model.config
    }

    pub fn window(&self) -> usize {
        self.model.config.window
    }

    /// First time index with a full input window.
    pub fn valid_from(&self) -> usize {
        self.model.config.window - 1
    }

    /// Per-epoch training loss trace.
    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    /// Training loss of the frozen parameters.
    pub fn final_loss(&self) -> f64 {
        self.final_loss
    }

    pub fn train_means(&self) -> &[f64] {
        &self.train_means
    }

    /// Number of inference calls made so far.
    pub fn forward_passes(&self) -> u64 {
        self.forward_passes.load(Ordering::Relaxed)
    }

    fn imputation_values(&self) -> Vec<f64> {
        match self.model.config.imputation {
            Imputation::TrainingMean => self.train_means.clone(),
            Imputation::Zero => vec![0.0; self.model.n_vars],
        }
    }

    /// Predict every variable at every time index with a full window.
    /// Counts as one forward pass.
    pub fn predict_series(&self, series: &MultivariateSeries) -> Result<Prediction> {
        self.predict_impl(series, None)
    }

    /// Predict with non-parent inputs replaced by the configured neutral
    /// value. `parents[j]` is the parent set of target `j`; a target uses
    /// its own history only if `j` is in its parent set. Counts as one
    /// forward pass.
    pub fn predict_with_parents(
        &self,
        series: &MultivariateSeries,
        parents: &[BTreeSet<usize>],
    ) -> Result<Prediction> {
        if parents.len() != self.model.n_vars {
            return Err(Error::InvalidInput(format!(
                "{} parent sets for {} variables",
                parents.len(),
                self.model.n_vars
            )));
        }
        for (j, set) in parents.iter().enumerate() {
            if let Some(&bad) = set.iter().find(|&&i| i >= self.model.n_vars) {
                return Err(Error::InvalidInput(format!(
                    "parent {bad} of target {j} out of range"
                )));
            }
        }
        self.predict_impl(series, Some(parents))
    }

    fn predict_impl(
        &self,
        series: &MultivariateSeries,
        parents: Option<&[BTreeSet<usize>]>,
    ) -> Result<Prediction> {
        if series.n_vars() != self.model.n_vars {
            return Err(Error::InvalidInput(format!(
                "series has {} variables, predictor expects {}",
                series.n_vars(),
                self.model.n_vars
            )));
        }
        let k = self.model.config.window;
        let windows = build_windows(series, k)?;
        let impute = self.imputation_values();

        self.forward_passes.fetch_add(1, Ordering::Relaxed);

        let valid_from = k - 1;
        let mut values = Array2::zeros((self.model.n_vars, series.len()));
        for (j, head) in self.model.heads.iter().enumerate() {
            let design =
                self.model.head_design(&windows, j, parents.map(|p| &p[j]), &impute);
            let (y, _) = self.model.forward_head(head, &design);
            for (r, v) in y.iter().enumerate() {
                values[[j, valid_from + r]] = *v;
            }
        }
        Ok(Prediction { values, valid_from })
    }
}

#[derive(Serialize, Deserialize)]
struct PredictorDoc {
    format_version: u32,
    model: PredictorModel,
    train_means: Vec<f64>,
    loss_trace: Vec<f64>,
    final_loss: f64,
}

/// Persist a trained predictor (versioned JSON parameter dump with the
/// config embedded). The forward-pass counter is not part of the state.
pub fn save_predictor<P: AsRef<Path>>(pred: &TrainedPredictor, path: P) -> Result<()> {
    let doc = PredictorDoc {
        format_version: PREDICTOR_FORMAT_VERSION,
        model: pred.model.clone(),
        train_means: pred.train_means.clone(),
        loss_trace: pred.loss_trace.clone(),
        final_loss: pred.final_loss,
    };
    let text = serde_json::to_string(&doc)?;
    std::fs::write(path.as_ref(), text)?;
    Ok(())
}

pub fn load_predictor<P: AsRef<Path>>(path: P) -> Result<TrainedPredictor> {
    let doc: PredictorDoc = serde_json::from_str(&std::fs::read_to_string(path.as_ref())?)?;
    if doc.format_version != PREDICTOR_FORMAT_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported predictor format version {}",
            doc.format_version
        )));
    }
    Ok(TrainedPredictor {
        model: doc.model,
        train_means: doc.train_means,
        loss_trace: doc.loss_trace,
        final_loss: doc.final_loss,
        forward_passes: AtomicU64::new(0),
    })
}
