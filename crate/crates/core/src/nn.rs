//! Small sequential network over a single-channel input sequence: valid
//! 1-D cross-correlation, max pooling, ReLU, flatten and dense layers, with
//! exact reverse-mode gradients.
//!
//! Activations are laid out channel-major (`x[c * len + t]`), so flatten is
//! a no-op on the buffer and only changes the logical shape.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, DvsError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
    },
    #[serde(rename = "maxpool1d")]
    MaxPool1d {
        pool_size: usize,
    },
    Relu,
    Flatten,
    Dense {
        in_features: usize,
        out_features: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub channels: usize,
    pub len: usize,
}

impl Shape {
    pub fn numel(self) -> usize {
        self.channels * self.len
    }
}

impl LayerSpec {
    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
            } => out_channels * in_channels * kernel_size + out_channels,
            LayerSpec::Dense {
                in_features,
                out_features,
            } => out_features * in_features + out_features,
            _ => 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
            } => in_channels >= 1 && out_channels >= 1 && kernel_size >= 1,
            LayerSpec::MaxPool1d { pool_size } => pool_size >= 1,
            LayerSpec::Dense {
                in_features,
                out_features,
            } => in_features >= 1 && out_features >= 1,
            LayerSpec::Relu | LayerSpec::Flatten => true,
        };
        if ok {
            Ok(())
        } else {
            Err(DvsError::Shape(format!(
                "{self:?}: sizes must be at least 1"
            )))
        }
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        self.validate()?;
        let out = match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
            } => {
                if input.channels != in_channels {
                    return Err(DvsError::Shape(format!(
                        "conv1d expects {in_channels} channels, got {}",
                        input.channels
                    )));
                }
                if input.len < kernel_size {
                    return Err(DvsError::Shape(format!(
                        "conv1d kernel {kernel_size} longer than input length {}",
                        input.len
                    )));
                }
                Shape {
                    channels: out_channels,
                    len: input.len - kernel_size + 1,
                }
            }
            LayerSpec::MaxPool1d { pool_size } => {
                if input.len < pool_size {
                    return Err(DvsError::Shape(format!(
                        "maxpool1d of size {pool_size} on length {} is empty",
                        input.len
                    )));
                }
                Shape {
                    channels: input.channels,
                    len: input.len / pool_size,
                }
            }
            LayerSpec::Relu => input,
            LayerSpec::Flatten => Shape {
                channels: 1,
                len: input.numel(),
            },
            LayerSpec::Dense {
                in_features,
                out_features,
            } => {
                if input.channels != 1 || input.len != in_features {
                    return Err(DvsError::Shape(format!(
                        "dense expects {in_features} features, got {}x{}",
                        input.channels, input.len
                    )));
                }
                Shape {
                    channels: 1,
                    len: out_features,
                }
            }
        };
        Ok(out)
    }
}

/// Layers plus one flat parameter vector. Each parameterised layer owns a
/// contiguous slice: weights (row-major, output-major) then biases.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerStack {
    layers: Vec<LayerSpec>,
    params: Vec<f64>,
    offsets: Vec<usize>,
    shapes: Vec<Shape>,
    input_len: usize,
    seed: u64,
}

/// Everything `backward` needs from one `forward` call.
#[derive(Clone, Debug)]
pub struct ForwardTape {
    inputs: Vec<Vec<f64>>,
    argmax: Vec<Vec<usize>>,
    output: f64,
}

impl ForwardTape {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Input activation of layer `k`.
    pub fn layer_input(&self, k: usize) -> &[f64] {
        &self.inputs[k]
    }

    /// Winning flat input index per pooled output; empty for other layers.
    pub fn pool_argmax(&self, k: usize) -> &[usize] {
        &self.argmax[k]
    }

    pub fn output(&self) -> f64 {
        self.output
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StackFile {
    arch: Vec<LayerSpec>,
    input_len: usize,
    params: Vec<f64>,
    seed: u64,
}

impl LayerStack {
    /// Checks that shapes compose from a `(1, input_len)` input down to a
    /// single output. Parameters start at zero.
    pub fn new(layers: Vec<LayerSpec>, input_len: usize) -> Result<Self> {
        if input_len == 0 {
            return Err(DvsError::Shape("input length must be positive".into()));
        }
        let mut shape = Shape {
            channels: 1,
            len: input_len,
        };
        let mut shapes = vec![shape];
        let mut offsets = Vec::with_capacity(layers.len());
        let mut total = 0;
        for layer in &layers {
            shape = layer.output_shape(shape)?;
            shapes.push(shape);
            offsets.push(total);
            total += layer.param_count();
        }
        if shape.numel() != 1 {
            return Err(DvsError::Shape(format!(
                "network must end in a single output, ends in {}x{}",
                shape.channels, shape.len
            )));
        }
        Ok(LayerStack {
            layers,
            params: vec![0.0; total],
            offsets,
            shapes,
            input_len,
            seed: 0,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    /// Input shape of layer `k`; index `layers().len()` is the output.
    pub fn shape_at(&self, k: usize) -> Shape {
        self.shapes[k]
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Glorot-uniform weights, zero biases.
    pub fn initialize(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.seed = seed;
        for (layer, &off) in self.layers.iter().zip(&self.offsets) {
            let (n_weights, fan_in, fan_out) = match *layer {
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel_size,
                } => (
                    out_channels * in_channels * kernel_size,
                    in_channels * kernel_size,
                    out_channels * kernel_size,
                ),
                LayerSpec::Dense {
                    in_features,
                    out_features,
                } => (out_features * in_features, in_features, out_features),
                _ => continue,
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut self.params[off..off + n_weights] {
                *w = rng.random_range(-limit..limit);
            }
            for b in &mut self.params[off + n_weights..off + layer.param_count()] {
                *b = 0.0;
            }
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<(f64, ForwardTape)> {
        if input.len() != self.input_len {
            return Err(DvsError::Shape(format!(
                "expected input of length {}, got {}",
                self.input_len,
                input.len()
            )));
        }
        ensure_finite(input, "network input")?;

        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut argmax = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            let (inp, out) = (self.shapes[k], self.shapes[k + 1]);
            let p = &self.params[self.offsets[k]..self.offsets[k] + layer.param_count()];
            let mut winners = Vec::new();
            let y = match *layer {
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel_size,
                } => conv_forward(
                    &x,
                    p,
                    in_channels,
                    out_channels,
                    kernel_size,
                    inp.len,
                    out.len,
                ),
                LayerSpec::MaxPool1d { pool_size } => {
                    let (y, idx) = pool_forward(&x, inp, out, pool_size);
                    winners = idx;
                    y
                }
                LayerSpec::Relu => x.iter().map(|&v| v.max(0.0)).collect(),
                LayerSpec::Flatten => x.clone(),
                LayerSpec::Dense {
                    in_features,
                    out_features,
                } => dense_forward(&x, p, in_features, out_features),
            };
            inputs.push(std::mem::replace(&mut x, y));
            argmax.push(winners);
        }
        let output = x[0];
        if !output.is_finite() {
            return Err(DvsError::NonFinite("network output".into()));
        }
        Ok((
            output,
            ForwardTape {
                inputs,
                argmax,
                output,
            },
        ))
    }

    /// Output only.
    pub fn predict(&self, input: &[f64]) -> Result<f64> {
        self.forward(input).map(|(y, _)| y)
    }

    /// Gradient of `upstream * output` with respect to every parameter.
    pub fn backward(&self, tape: ForwardTape, upstream: f64) -> Result<Vec<f64>> {
        if tape.inputs.len() != self.layers.len() {
            return Err(DvsError::TapeMismatch(format!(
                "tape has {} layers, stack has {}",
                tape.inputs.len(),
                self.layers.len()
            )));
        }
        for (k, x) in tape.inputs.iter().enumerate() {
            if x.len() != self.shapes[k].numel() {
                return Err(DvsError::TapeMismatch(format!(
                    "layer {k} input has {} entries, expected {}",
                    x.len(),
                    self.shapes[k].numel()
                )));
            }
        }

        let mut grads = vec![0.0; self.params.len()];
        let mut dy = vec![upstream];
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let x = &tape.inputs[k];
            let (inp, out) = (self.shapes[k], self.shapes[k + 1]);
            let range = self.offsets[k]..self.offsets[k] + layer.param_count();
            let dx = match *layer {
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel_size,
                } => conv_backward(
                    x,
                    &dy,
                    &self.params[range.clone()],
                    &mut grads[range],
                    (in_channels, out_channels, kernel_size),
                    inp.len,
                    out.len,
                ),
                LayerSpec::MaxPool1d { .. } => {
                    let mut dx = vec![0.0; x.len()];
                    for (&src, &g) in tape.argmax[k].iter().zip(&dy) {
                        dx[src] += g;
                    }
                    dx
                }
                LayerSpec::Relu => x
                    .iter()
                    .zip(&dy)
                    .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                    .collect(),
                LayerSpec::Flatten => dy,
                LayerSpec::Dense {
                    in_features,
                    out_features,
                } => dense_backward(
                    x,
                    &dy,
                    &self.params[range.clone()],
                    &mut grads[range],
                    in_features,
                    out_features,
                ),
            };
            dy = dx;
        }
        Ok(grads)
    }

    /// `{arch, input_len, params, seed}`; params round-trip bit-exactly.
    pub fn to_json(&self) -> Result<String> {
        let file = StackFile {
            arch: self.layers.clone(),
            input_len: self.input_len,
            params: self.params.clone(),
            seed: self.seed,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StackFile = serde_json::from_str(text)?;
        Self::from_parts(file.arch, file.input_len, file.params, file.seed)
    }

    pub fn from_parts(
        arch: Vec<LayerSpec>,
        input_len: usize,
        params: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let mut stack = LayerStack::new(arch, input_len)?;
        if params.len() != stack.params.len() {
            return Err(DvsError::DimensionMismatch {
                expected: stack.params.len(),
                got: params.len(),
            });
        }
        stack.params = params;
        stack.seed = seed;
        Ok(stack)
    }
}

fn conv_forward(
    x: &[f64],
    p: &[f64],
    cin: usize,
    cout: usize,
    k: usize,
    len_in: usize,
    len_out: usize,
) -> Vec<f64> {
    let (w, b) = p.split_at(cout * cin * k);
    let mut y = vec![0.0; cout * len_out];
    for o in 0..cout {
        let row = &mut y[o * len_out..(o + 1) * len_out];
        row.fill(b[o]);
        for c in 0..cin {
            let xc = &x[c * len_in..(c + 1) * len_in];
            let kern = &w[(o * cin + c) * k..(o * cin + c + 1) * k];
            for (t, out) in row.iter_mut().enumerate() {
                *out += kern
                    .iter()
                    .zip(&xc[t..t + k])
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            }
        }
    }
    y
}

fn conv_backward(
    x: &[f64],
    dy: &[f64],
    p: &[f64],
    g: &mut [f64],
    (cin, cout, k): (usize, usize, usize),
    len_in: usize,
    len_out: usize,
) -> Vec<f64> {
    let n_w = cout * cin * k;
    let w = &p[..n_w];
    let (gw, gb) = g.split_at_mut(n_w);
    let mut dx = vec![0.0; cin * len_in];
    for o in 0..cout {
        let dyo = &dy[o * len_out..(o + 1) * len_out];
        gb[o] += dyo.iter().sum::<f64>();
        for c in 0..cin {
            let base = (o * cin + c) * k;
            let xc = &x[c * len_in..(c + 1) * len_in];
            let dxc = &mut dx[c * len_in..(c + 1) * len_in];
            for (t, &d) in dyo.iter().enumerate() {
                for q in 0..k {
                    gw[base + q] += d * xc[t + q];
                    dxc[t + q] += d * w[base + q];
                }
            }
        }
    }
    dx
}

fn pool_forward(x: &[f64], inp: Shape, out: Shape, pool: usize) -> (Vec<f64>, Vec<usize>) {
    let mut y = Vec::with_capacity(out.numel());
    let mut idx = Vec::with_capacity(out.numel());
    for c in 0..inp.channels {
        for t in 0..out.len {
            let start = c * inp.len + t * pool;
            let mut best = start;
            for s in start + 1..start + pool {
                // strict: the first maximum wins ties
                if x[s] > x[best] {
                    best = s;
                }
            }
            y.push(x[best]);
            idx.push(best);
        }
    }
    (y, idx)
}

fn dense_forward(x: &[f64], p: &[f64], n_in: usize, n_out: usize) -> Vec<f64> {
    let (w, b) = p.split_at(n_out * n_in);
    (0..n_out)
        .map(|o| {
            b[o] + w[o * n_in..(o + 1) * n_in]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect()
}

fn dense_backward(
    x: &[f64],
    dy: &[f64],
    p: &[f64],
    g: &mut [f64],
    n_in: usize,
    n_out: usize,
) -> Vec<f64> {
    let w = &p[..n_out * n_in];
    let (gw, gb) = g.split_at_mut(n_out * n_in);
    let mut dx = vec![0.0; n_in];
    for o in 0..n_out {
        let d = dy[o];
        gb[o] += d;
        if d == 0.0 {
            continue;
        }
        let row = &w[o * n_in..(o + 1) * n_in];
        let grow = &mut gw[o * n_in..(o + 1) * n_in];
        for i in 0..n_in {
            grow[i] += d * x[i];
            dx[i] += d * row[i];
        }
    }
    dx
}

/// conv(1→8, k3) → ReLU → pool 2 → conv(8→16, k3) → ReLU → pool 2 →
/// flatten → dense(→1). Needs `input_len >= 11`.
pub fn build_dvs_cnn(input_len: usize, seed: u64) -> Result<LayerStack> {
    if input_len < 11 {
        return Err(DvsError::Shape(format!(
            "input length {input_len} too short for two conv/pool blocks (need 11)"
        )));
    }
    let after_first = (input_len - 2) / 2;
    let after_second = (after_first - 2) / 2;
    let layers = vec![
        LayerSpec::Conv1d {
            in_channels: 1,
            out_channels: 8,
            kernel_size: 3,
        },
        LayerSpec::Relu,
        LayerSpec::MaxPool1d { pool_size: 2 },
        LayerSpec::Conv1d {
            in_channels: 8,
            out_channels: 16,
            kernel_size: 3,
        },
        LayerSpec::Relu,
        LayerSpec::MaxPool1d { pool_size: 2 },
        LayerSpec::Flatten,
        LayerSpec::Dense {
            in_features: 16 * after_second,
            out_features: 1,
        },
    ];
    let mut stack = LayerStack::new(layers, input_len)?;
    stack.initialize(seed);
    Ok(stack)
}

/// dense(→100) → ReLU → dense(100→1).
pub fn build_ablation_ann(input_len: usize, seed: u64) -> Result<LayerStack> {
    let layers = vec![
        LayerSpec::Dense {
            in_features: input_len,
            out_features: 100,
        },
        LayerSpec::Relu,
        LayerSpec::Dense {
            in_features: 100,
            out_features: 1,
        },
    ];
    let mut stack = LayerStack::new(layers, input_len)?;
    stack.initialize(seed);
    Ok(stack)
}

/// conv(1→64, k2) → ReLU → pool 2 → flatten → dense(→100) → ReLU →
/// dense(100→1). Needs `input_len >= 3`.
pub fn build_ablation_cnn(input_len: usize, seed: u64) -> Result<LayerStack> {
    if input_len < 3 {
        return Err(DvsError::Shape(format!(
            "input length {input_len} too short for conv k=2 plus pool 2 (need 3)"
        )));
    }
    let pooled = (input_len - 1) / 2;
    let layers = vec![
        LayerSpec::Conv1d {
            in_channels: 1,
            out_channels: 64,
            kernel_size: 2,
        },
        LayerSpec::Relu,
        LayerSpec::MaxPool1d { pool_size: 2 },
        LayerSpec::Flatten,
        LayerSpec::Dense {
            in_features: 64 * pooled,
            out_features: 100,
        },
        LayerSpec::Relu,
        LayerSpec::Dense {
            in_features: 100,
            out_features: 1,
        },
    ];
    let mut stack = LayerStack::new(layers, input_len)?;
    stack.initialize(seed);
    Ok(stack)
}
