use rand::Rng;
use rand_distr::StandardNormal;

use super::layer::{Layer, Shape, CONV_KERNEL};
use crate::error::{Error, Result};
use crate::field::RealImage;
use crate::rng::seeded_rng;

/// Feed-forward generator `G₀: R^Z → (0,1)^(side×side)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorModel {
    latent_dim: usize,
    layers: Vec<Layer>,
    /// Input shape of each layer, plus the final output shape.
    shapes: Vec<Shape>,
    output_side: usize,
}

/// Recorded activations of one forward pass; `activations[0]` is the latent.
#[derive(Clone, Debug)]
pub struct Trace {
    activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace holds at least the input")
    }
}

impl GeneratorModel {
    pub fn new(latent_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if latent_dim == 0 {
            return Err(Error::MalformedModel("latent dimension is zero".into()));
        }
        if layers.is_empty() {
            return Err(Error::MalformedModel("model has no layers".into()));
        }
        let mut shapes = vec![vec![latent_dim]];
        for (i, layer) in layers.iter().enumerate() {
            let next = layer
                .output_shape(shapes.last().unwrap())
                .map_err(|e| Error::MalformedModel(format!("layer {i}: {e}")))?;
            shapes.push(next);
        }
        if !matches!(layers.last(), Some(Layer::Sigmoid)) {
            return Err(Error::MalformedModel(
                "final layer must be a sigmoid so outputs lie in (0, 1)".into(),
            ));
        }
        let out = shapes.last().unwrap();
        let output_side = match out.as_slice() {
            [1, h, w] if h == w => *h,
            [n] => {
                let side = (*n as f64).sqrt().round() as usize;
                if side * side != *n {
                    return Err(Error::MalformedModel(format!("output length {n} is not a square")));
                }
                side
            }
            _ => {
                return Err(Error::MalformedModel(format!(
                    "output shape {out:?} is not a single square channel"
                )))
            }
        };
        Ok(GeneratorModel {
            latent_dim,
            layers,
            shapes,
            output_side,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn output_side(&self) -> usize {
        self.output_side
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn n_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Dense { weight, bias, .. } | Layer::ConvTranspose2d { weight, bias, .. } => {
                    weight.len() + bias.len()
                }
                Layer::ChannelAffine { scale, shift } => scale.len() + shift.len(),
                _ => 0,
            })
            .sum()
    }

    fn check_latent(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.latent_dim {
            return Err(Error::GeometryMismatch(format!(
                "latent of length {} for a model with Z = {}",
                z.len(),
                self.latent_dim
            )));
        }
        Ok(())
    }

    pub fn trace(&self, z: &[f64]) -> Result<Trace> {
        self.check_latent(z)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(z.to_vec());
        for (layer, shape) in self.layers.iter().zip(&self.shapes) {
            let y = layer.forward(activations.last().unwrap(), shape);
            activations.push(y);
        }
        Ok(Trace { activations })
    }

    /// `J_{G₀}(z)ᵀ · cotangent` for the pass recorded in `trace`.
    pub fn pullback(&self, trace: &Trace, cotangent: &[f64]) -> Result<Vec<f64>> {
        let n = self.output_side * self.output_side;
        if cotangent.len() != n {
            return Err(Error::GeometryMismatch(format!(
                "cotangent of length {} for an output of {n} pixels",
                cotangent.len()
            )));
        }
        let mut g = cotangent.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            g = layer.vjp(&trace.activations[i], &trace.activations[i + 1], &self.shapes[i], &g);
        }
        Ok(g)
    }

    pub fn generate_real(&self, z: &[f64]) -> Result<RealImage> {
        let trace = self.trace(z)?;
        RealImage::from_vec(self.output_side, self.output_side, trace.output().to_vec())
    }

    pub fn vjp_real(&self, z: &[f64], cotangent: &RealImage) -> Result<Vec<f64>> {
        let trace = self.trace(z)?;
        self.pullback(&trace, cotangent.as_slice())
    }

    /// DCGAN-style stack with freshly initialized weights: dense to
    /// `[base_channels, 4, 4]`, then transposed-convolution doublings (with
    /// channel-affine and ReLU between them) down to one channel, then sigmoid.
    /// Weights are rounded to `f32` so the model survives a PGEN round trip.
    pub fn dcgan(latent_dim: usize, base_channels: usize, output_side: usize, seed: u64) -> Result<Self> {
        if output_side < 8 || !output_side.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "output side {output_side} must be a power of two ≥ 8"
            )));
        }
        let doublings = (output_side / 4).trailing_zeros() as usize;
        let mut rng = seeded_rng(seed);
        let mut normal = |n: usize, std: f64| -> Vec<f64> {
            (0..n)
                .map(|_| ((std * rng.sample::<f64, _>(StandardNormal)) as f32) as f64)
                .collect()
        };
        let start = base_channels * 16;
        let mut layers = vec![
            Layer::Dense {
                outputs: start,
                inputs: latent_dim,
                weight: normal(start * latent_dim, (1.0 / latent_dim as f64).sqrt()),
                bias: normal(start, 0.1),
            },
            Layer::Reshape {
                shape: vec![base_channels, 4, 4],
            },
        ];
        let mut channels = base_channels;
        for d in 0..doublings {
            let last = d + 1 == doublings;
            let next = if last { 1 } else { (channels / 2).max(1) };
            // each output pixel of a k4/s2 transpose receives four taps per input channel
            let std = (2.0 / (channels * 4) as f64).sqrt();
            layers.push(Layer::ConvTranspose2d {
                in_channels: channels,
                out_channels: next,
                weight: normal(channels * next * CONV_KERNEL * CONV_KERNEL, std),
                bias: normal(next, 0.1),
            });
            layers.push(Layer::ChannelAffine {
                scale: vec![1.0; next],
                shift: vec![0.0; next],
            });
            if !last {
                layers.push(Layer::Relu);
            }
            channels = next;
        }
        layers.push(Layer::Sigmoid);
        GeneratorModel::new(latent_dim, layers)
    }

    /// The shipped reference architecture: Z = 64, 128 base channels, 64×64 output.
    pub fn reference(seed: u64) -> Self {
        Self::dcgan(64, 128, 64, seed).expect("reference architecture is well formed")
    }
}
