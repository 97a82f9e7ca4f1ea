//! Layer vocabulary of the generator with forward passes and exact
//! reverse-mode pullbacks. Tensors are flat `f64` buffers; rank-3 shapes are
//! channel-major `[channels, height, width]`.

use crate::error::{Error, Result};

pub const CONV_KERNEL: usize = 4;
pub const CONV_STRIDE: usize = 2;
pub const CONV_PAD: usize = 1;
pub const LEAKY_SLOPE: f64 = 0.2;

pub type Shape = Vec<usize>;

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    /// `y = W x + b` with `W` stored row-major as `[outputs, inputs]`.
    Dense {
        outputs: usize,
        inputs: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
    },
    /// Transposed convolution, kernel 4, stride 2, padding 1. Weight layout
    /// `[in_channels, out_channels, 4, 4]`.
    ConvTranspose2d {
        in_channels: usize,
        out_channels: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
    },
    Relu,
    LeakyRelu,
    Tanh,
    Sigmoid,
    Reshape { shape: Shape },
    /// Per-channel `scale · x + shift`; folded inference-time batch norm.
    ChannelAffine { scale: Vec<f64>, shift: Vec<f64> },
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedModel(msg.into())
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Layer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense { .. } => "dense",
            Layer::ConvTranspose2d { .. } => "conv_transpose_2d",
            Layer::Relu => "relu",
            Layer::LeakyRelu => "leaky_relu",
            Layer::Tanh => "tanh",
            Layer::Sigmoid => "sigmoid",
            Layer::Reshape { .. } => "reshape",
            Layer::ChannelAffine { .. } => "channel_affine",
        }
    }

    /// Checks the weights against the declared shape and maps an input shape to
    /// the output shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Shape> {
        match self {
            Layer::Dense {
                outputs,
                inputs,
                weight,
                bias,
            } => {
                if weight.len() != outputs * inputs || bias.len() != *outputs {
                    return Err(malformed("dense weight/bias lengths do not match [outputs, inputs]"));
                }
                if numel(input) != *inputs {
                    return Err(malformed(format!(
                        "dense expects {inputs} inputs, got shape {input:?}"
                    )));
                }
                Ok(vec![*outputs])
            }
            Layer::ConvTranspose2d {
                in_channels,
                out_channels,
                weight,
                bias,
            } => {
                if weight.len() != in_channels * out_channels * CONV_KERNEL * CONV_KERNEL
                    || bias.len() != *out_channels
                {
                    return Err(malformed("conv-transpose weight/bias lengths do not match"));
                }
                match input {
                    [c, h, w] if c == in_channels => {
                        Ok(vec![*out_channels, h * CONV_STRIDE, w * CONV_STRIDE])
                    }
                    _ => Err(malformed(format!(
                        "conv-transpose expects [{in_channels}, h, w], got {input:?}"
                    ))),
                }
            }
            Layer::Relu | Layer::LeakyRelu | Layer::Tanh | Layer::Sigmoid => Ok(input.to_vec()),
            Layer::Reshape { shape } => {
                if shape.is_empty() || numel(shape) != numel(input) {
                    return Err(malformed(format!("cannot reshape {input:?} into {shape:?}")));
                }
                Ok(shape.clone())
            }
            Layer::ChannelAffine { scale, shift } => {
                if scale.len() != shift.len() {
                    return Err(malformed("channel-affine scale and shift lengths differ"));
                }
                let channels = match input {
                    [n] => *n,
                    [c, _, _] => *c,
                    _ => return Err(malformed(format!("channel-affine cannot act on {input:?}"))),
                };
                if channels != scale.len() {
                    return Err(malformed(format!(
                        "channel-affine has {} channels, input has {channels}",
                        scale.len()
                    )));
                }
                Ok(input.to_vec())
            }
        }
    }

    /// Forward pass. `shape` is the (already validated) input shape.
    pub fn forward(&self, x: &[f64], shape: &[usize]) -> Vec<f64> {
        match self {
            Layer::Dense {
                outputs,
                inputs,
                weight,
                bias,
            } => (0..*outputs)
                .map(|o| {
                    let row = &weight[o * inputs..(o + 1) * inputs];
                    bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
                })
                .collect(),
            Layer::ConvTranspose2d {
                in_channels,
                out_channels,
                weight,
                bias,
            } => conv_transpose_forward(x, shape, *in_channels, *out_channels, weight, bias),
            Layer::Relu => x.iter().map(|&v| v.max(0.0)).collect(),
            Layer::LeakyRelu => x
                .iter()
                .map(|&v| if v > 0.0 { v } else { LEAKY_SLOPE * v })
                .collect(),
            Layer::Tanh => x.iter().map(|v| v.tanh()).collect(),
            Layer::Sigmoid => x.iter().map(|&v| sigmoid(v)).collect(),
            Layer::Reshape { .. } => x.to_vec(),
            Layer::ChannelAffine { scale, shift } => {
                let per_channel = x.len() / scale.len();
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let c = i / per_channel;
                        scale[c] * v + shift[c]
                    })
                    .collect()
            }
        }
    }

    /// Pullback of `cotangent` (w.r.t. this layer's output) to its input.
    /// `x` and `y` are the recorded input and output of the forward pass.
    pub fn vjp(&self, x: &[f64], y: &[f64], shape: &[usize], cotangent: &[f64]) -> Vec<f64> {
        match self {
            Layer::Dense {
                outputs,
                inputs,
                weight,
                ..
            } => {
                let mut grad = vec![0.0; *inputs];
                for o in 0..*outputs {
                    let g = cotangent[o];
                    if g == 0.0 {
                        continue;
                    }
                    let row = &weight[o * inputs..(o + 1) * inputs];
                    for (acc, w) in grad.iter_mut().zip(row) {
                        *acc += w * g;
                    }
                }
                grad
            }
            Layer::ConvTranspose2d {
                in_channels,
                out_channels,
                weight,
                ..
            } => conv_transpose_vjp(cotangent, shape, *in_channels, *out_channels, weight),
            Layer::Relu => x
                .iter()
                .zip(cotangent)
                .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                .collect(),
            Layer::LeakyRelu => x
                .iter()
                .zip(cotangent)
                .map(|(&v, &g)| if v > 0.0 { g } else { LEAKY_SLOPE * g })
                .collect(),
            Layer::Tanh => y.iter().zip(cotangent).map(|(&t, &g)| g * (1.0 - t * t)).collect(),
            Layer::Sigmoid => y.iter().zip(cotangent).map(|(&s, &g)| g * s * (1.0 - s)).collect(),
            Layer::Reshape { .. } => cotangent.to_vec(),
            Layer::ChannelAffine { scale, .. } => {
                let per_channel = cotangent.len() / scale.len();
                cotangent
                    .iter()
                    .enumerate()
                    .map(|(i, &g)| scale[i / per_channel] * g)
                    .collect()
            }
        }
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Output row/column hit by input index `i` and kernel tap `k`, if inside.
#[inline]
fn tap(i: usize, k: usize, limit: usize) -> Option<usize> {
    (i * CONV_STRIDE + k).checked_sub(CONV_PAD).filter(|&o| o < limit)
}

fn conv_transpose_forward(
    x: &[f64],
    shape: &[usize],
    in_channels: usize,
    out_channels: usize,
    weight: &[f64],
    bias: &[f64],
) -> Vec<f64> {
    let (h, w) = (shape[1], shape[2]);
    let (oh, ow) = (h * CONV_STRIDE, w * CONV_STRIDE);
    let kk = CONV_KERNEL * CONV_KERNEL;
    let mut out = Vec::with_capacity(out_channels * oh * ow);
    for &b in bias {
        out.extend(std::iter::repeat_n(b, oh * ow));
    }
    for i in 0..in_channels {
        for iy in 0..h {
            for ix in 0..w {
                let v = x[(i * h + iy) * w + ix];
                if v == 0.0 {
                    continue;
                }
                for o in 0..out_channels {
                    let kernel = &weight[(i * out_channels + o) * kk..(i * out_channels + o + 1) * kk];
                    let plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
                    for ky in 0..CONV_KERNEL {
                        let Some(y) = tap(iy, ky, oh) else { continue };
                        for kx in 0..CONV_KERNEL {
                            let Some(xo) = tap(ix, kx, ow) else { continue };
                            plane[y * ow + xo] += v * kernel[ky * CONV_KERNEL + kx];
                        }
                    }
                }
            }
        }
    }
    out
}

fn conv_transpose_vjp(
    cotangent: &[f64],
    shape: &[usize],
    in_channels: usize,
    out_channels: usize,
    weight: &[f64],
) -> Vec<f64> {
    let (h, w) = (shape[1], shape[2]);
    let (oh, ow) = (h * CONV_STRIDE, w * CONV_STRIDE);
    let kk = CONV_KERNEL * CONV_KERNEL;
    let mut grad = vec![0.0; in_channels * h * w];
    for i in 0..in_channels {
        for o in 0..out_channels {
            let kernel = &weight[(i * out_channels + o) * kk..(i * out_channels + o + 1) * kk];
            let plane = &cotangent[o * oh * ow..(o + 1) * oh * ow];
            for iy in 0..h {
                for ix in 0..w {
                    let mut acc = 0.0;
                    for ky in 0..CONV_KERNEL {
                        let Some(y) = tap(iy, ky, oh) else { continue };
                        for kx in 0..CONV_KERNEL {
                            let Some(xo) = tap(ix, kx, ow) else { continue };
                            acc += plane[y * ow + xo] * kernel[ky * CONV_KERNEL + kx];
                        }
                    }
                    grad[(i * h + iy) * w + ix] += acc;
                }
            }
        }
    }
    grad
}
