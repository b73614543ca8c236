//! Fixed-budget training: squared-error loss, bias-corrected Adam, a
//! triangular cyclic learning rate, and prediction in original units.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DvsError, Result};
use crate::nn::{LayerSpec, LayerStack};
use crate::series::WindowSet;
use crate::visibility::dvs_transform;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Full passes over the training windows.
    pub iterations: usize,
    pub lr_max: f64,
    pub lr_min: f64,
    /// Cycle length of the learning-rate triangle, in iterations.
    pub clr_cycle_len: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Feed the network the visibility-compressed window instead of the raw one.
    pub use_dvs: bool,
    /// Reshuffle window order every iteration (seeded).
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 100,
            lr_max: 1e-4,
            lr_min: 1e-12,
            clr_cycle_len: 20,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 7,
            use_dvs: true,
            shuffle: false,
        }
    }
}

impl TrainConfig {
    /// Reports every violated constraint at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.iterations == 0 {
            problems.push("iterations must be at least 1".to_string());
        }
        if !(self.lr_max.is_finite() && self.lr_max > 0.0) {
            problems.push(format!("lr_max must be positive (got {})", self.lr_max));
        }
        if !(self.lr_min.is_finite() && self.lr_min > 0.0) {
            problems.push(format!("lr_min must be positive (got {})", self.lr_min));
        }
        if self.lr_min > self.lr_max {
            problems.push(format!(
                "lr_min ({}) must not exceed lr_max ({})",
                self.lr_min, self.lr_max
            ));
        }
        if self.clr_cycle_len == 0 {
            problems.push("clr_cycle_len must be at least 1".to_string());
        }
        for (name, beta) in [
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
        ] {
            if !(beta > 0.0 && beta < 1.0) {
                problems.push(format!("{name} must lie in (0, 1) (got {beta})"));
            }
        }
        if !(self.adam_eps.is_finite() && self.adam_eps > 0.0) {
            problems.push(format!("adam_eps must be positive (got {})", self.adam_eps));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DvsError::InvalidConfig(problems))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Squared error and its derivative with respect to the prediction.
pub fn mse_loss(pred: f64, target: f64) -> (f64, f64) {
    let e = pred - target;
    (e * e, 2.0 * e)
}

/// Triangular wave starting at `lr_min`, peaking at mid-cycle.
pub fn clr_lr(iter: usize, cfg: &TrainConfig) -> f64 {
    let cycle = cfg.clr_cycle_len.max(1);
    let p = (iter % cycle) as f64 / cycle as f64;
    cfg.lr_min + (cfg.lr_max - cfg.lr_min) * (1.0 - (2.0 * p - 1.0).abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    cfg: &TrainConfig,
) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(DvsError::DimensionMismatch {
            expected: params.len(),
            got: grads.len(),
        });
    }
    crate::error::ensure_finite(grads, "gradient")?;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    state.t += 1;
    let c1 = 1.0 - b1.powf(state.t as f64);
    let c2 = 1.0 - b2.powf(state.t as f64);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + cfg.adam_eps);
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(DvsError::NonFinite("parameters after Adam step".into()));
    }
    Ok(())
}

/// z-score scaling fitted on training data only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    /// Population statistics of `values`. A (near-)constant sample keeps
    /// unit scale so it maps to zeros instead of dividing by zero.
    pub fn fit<'a>(values: impl IntoIterator<Item = &'a f64>) -> Self {
        let (mut n, mut sum, mut sq) = (0usize, 0.0, 0.0);
        let collected: Vec<f64> = values.into_iter().copied().collect();
        for &x in &collected {
            n += 1;
            sum += x;
        }
        if n == 0 {
            return Standardizer {
                mean: 0.0,
                std: 1.0,
            };
        }
        let mean = sum / n as f64;
        for &x in &collected {
            sq += (x - mean) * (x - mean);
        }
        let std = (sq / n as f64).sqrt();
        let std = if std > 1e-12 * mean.abs().max(1.0) {
            std
        } else {
            1.0
        };
        Standardizer { mean, std }
    }

    /// Pools every input and target value of the training windows.
    pub fn fit_windows(ws: &WindowSet) -> Self {
        Self::fit(
            ws.windows
                .iter()
                .flat_map(|w| w.input.iter().chain(std::iter::once(&w.target))),
        )
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// A trained network plus the preprocessing it was trained with.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub stack: LayerStack,
    pub scaler: Standardizer,
    pub use_dvs: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    arch: Vec<LayerSpec>,
    input_len: usize,
    params: Vec<f64>,
    seed: u64,
    use_dvs: bool,
    scaler: Standardizer,
}

impl TrainedModel {
    pub fn input_len(&self) -> usize {
        self.stack.input_len()
    }

    /// Standardize, then optionally compress with the visibility transform.
    pub fn prepare_input(&self, raw: &[f64]) -> Result<Vec<f64>> {
        prepare_input(raw, &self.scaler, self.use_dvs)
    }

    pub fn predict_one(&self, raw: &[f64]) -> Result<f64> {
        let x = self.prepare_input(raw)?;
        Ok(self.scaler.invert(self.stack.predict(&x)?))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            arch: self.stack.layers().to_vec(),
            input_len: self.stack.input_len(),
            params: self.stack.params().to_vec(),
            seed: self.stack.seed(),
            use_dvs: self.use_dvs,
            scaler: self.scaler,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        Ok(TrainedModel {
            stack: LayerStack::from_parts(f.arch, f.input_len, f.params, f.seed)?,
            scaler: f.scaler,
            use_dvs: f.use_dvs,
        })
    }
}

fn prepare_input(raw: &[f64], scaler: &Standardizer, use_dvs: bool) -> Result<Vec<f64>> {
    let z: Vec<f64> = raw.iter().map(|&x| scaler.apply(x)).collect();
    if use_dvs {
        Ok(dvs_transform(&z)?.z)
    } else {
        Ok(z)
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    /// Mean per-window loss of each iteration, in standardized units.
    pub loss_curve: Vec<f64>,
    pub model: TrainedModel,
    pub config: TrainConfig,
    pub wall_time_secs: f64,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    loss_curve: &'a [f64],
    config: &'a TrainConfig,
    wall_time_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    model_path: Option<&'a str>,
}

impl TrainReport {
    pub fn to_json(&self, model_path: Option<&str>) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ReportJson {
            loss_curve: &self.loss_curve,
            config: &self.config,
            wall_time_secs: self.wall_time_secs,
            model_path,
        })?)
    }
}

/// Per-window (batch size 1) Adam updates; one iteration is one pass over
/// `train_set`. The learning rate is fixed within an iteration.
pub fn train(
    mut stack: LayerStack,
    train_set: &WindowSet,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(DvsError::TooShort { needed: 1, got: 0 });
    }
    if train_set.window_len != stack.input_len() {
        return Err(DvsError::Shape(format!(
            "windows have length {}, network expects {}",
            train_set.window_len,
            stack.input_len()
        )));
    }
    let started = Instant::now();
    let scaler = Standardizer::fit_windows(train_set);
    let samples = train_set
        .windows
        .iter()
        .map(|w| {
            Ok((
                prepare_input(&w.input, &scaler, cfg.use_dvs)?,
                scaler.apply(w.target),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut adam = AdamState::new(stack.param_count());
    let mut loss_curve = Vec::with_capacity(cfg.iterations);

    for iter in 0..cfg.iterations {
        let lr = clr_lr(iter, cfg);
        if cfg.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut total = 0.0;
        for &k in &order {
            let (x, y) = &samples[k];
            let (pred, tape) = stack.forward(x)?;
            let (loss, dpred) = mse_loss(pred, *y);
            total += loss;
            let grads = stack.backward(tape, dpred)?;
            adam_step(stack.params_mut(), &grads, &mut adam, lr, cfg)?;
        }
        loss_curve.push(total / samples.len() as f64);
    }

    Ok(TrainReport {
        loss_curve,
        model: TrainedModel {
            stack,
            scaler,
            use_dvs: cfg.use_dvs,
        },
        config: cfg.clone(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// One prediction per window, in the original units.
pub fn predict(model: &TrainedModel, windows: &WindowSet) -> Result<Vec<f64>> {
    if !windows.is_empty() && windows.window_len != model.input_len() {
        return Err(DvsError::Shape(format!(
            "windows have length {}, model expects {}",
            windows.window_len,
            model.input_len()
        )));
    }
    windows
        .windows
        .iter()
        .map(|w| model.predict_one(&w.input))
        .collect()
}
