//! PGEN weight files.
//!
//! Little-endian layout: magic `PGEN`, u32 version (1), u32 latent_dim,
//! u32 n_layers, then per layer a u8 kind tag, u32 rank, `rank` u32 shape
//! entries and the f32 weights (weight tensor, then bias or shift).
//!
//! | tag | kind            | shape                   | payload               |
//! |-----|-----------------|-------------------------|-----------------------|
//! | 0   | dense           | `[outputs, inputs]`     | weight, bias          |
//! | 1   | conv-transpose  | `[in, out, 4, 4]`       | weight, bias          |
//! | 2   | relu            | `[]`                    |                       |
//! | 3   | leaky relu 0.2  | `[]`                    |                       |
//! | 4   | tanh            | `[]`                    |                       |
//! | 5   | sigmoid         | `[]`                    |                       |
//! | 6   | reshape         | target shape            |                       |
//! | 7   | channel affine  | `[channels]`            | scale, shift          |

use std::fs;
use std::path::Path;

use super::layer::{Layer, CONV_KERNEL};
use super::model::GeneratorModel;
use crate::error::{Error, Result};
use crate::io::bytes::{put_u32, ByteReader};

const MAGIC: &[u8; 4] = b"PGEN";
const VERSION: u32 = 1;

fn put_f32s(out: &mut Vec<u8>, values: &[f64]) {
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

fn put_header(out: &mut Vec<u8>, tag: u8, shape: &[usize]) {
    out.push(tag);
    put_u32(out, shape.len());
    for &s in shape {
        put_u32(out, s);
    }
}

pub fn encode_model(model: &GeneratorModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION as usize);
    put_u32(&mut out, model.latent_dim());
    put_u32(&mut out, model.layers().len());
    for layer in model.layers() {
        match layer {
            Layer::Dense {
                outputs,
                inputs,
                weight,
                bias,
            } => {
                put_header(&mut out, 0, &[*outputs, *inputs]);
                put_f32s(&mut out, weight);
                put_f32s(&mut out, bias);
            }
            Layer::ConvTranspose2d {
                in_channels,
                out_channels,
                weight,
                bias,
            } => {
                put_header(&mut out, 1, &[*in_channels, *out_channels, CONV_KERNEL, CONV_KERNEL]);
                put_f32s(&mut out, weight);
                put_f32s(&mut out, bias);
            }
            Layer::Relu => put_header(&mut out, 2, &[]),
            Layer::LeakyRelu => put_header(&mut out, 3, &[]),
            Layer::Tanh => put_header(&mut out, 4, &[]),
            Layer::Sigmoid => put_header(&mut out, 5, &[]),
            Layer::Reshape { shape } => put_header(&mut out, 6, shape),
            Layer::ChannelAffine { scale, shift } => {
                put_header(&mut out, 7, &[scale.len()]);
                put_f32s(&mut out, scale);
                put_f32s(&mut out, shift);
            }
        }
    }
    out
}

fn read_f32s(r: &mut ByteReader<'_>, n: usize) -> Result<Vec<f64>> {
    let bytes = r.take(n.checked_mul(4).ok_or_else(|| Error::CorruptFile("weight count overflows".into()))?)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect())
}

fn expect_rank(i: usize, kind: &str, shape: &[usize], rank: usize) -> Result<()> {
    if shape.len() != rank {
        return Err(Error::MalformedModel(format!(
            "layer {i} ({kind}) has rank {}, expected {rank}",
            shape.len()
        )));
    }
    Ok(())
}

pub fn decode_model(bytes: &[u8]) -> Result<GeneratorModel> {
    let mut r = ByteReader::new(bytes, "PGEN");
    r.expect_magic(MAGIC)?;
    r.expect_version(VERSION)?;
    let latent_dim = r.len_u32()?;
    let n_layers = r.len_u32()?;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for i in 0..n_layers {
        let tag = r.u8()?;
        let rank = r.len_u32()?;
        if rank > 8 {
            return Err(Error::MalformedModel(format!("layer {i} declares rank {rank}")));
        }
        let shape = (0..rank).map(|_| r.len_u32()).collect::<Result<Vec<_>>>()?;
        let layer = match tag {
            0 => {
                expect_rank(i, "dense", &shape, 2)?;
                let (outputs, inputs) = (shape[0], shape[1]);
                Layer::Dense {
                    outputs,
                    inputs,
                    weight: read_f32s(&mut r, outputs * inputs)?,
                    bias: read_f32s(&mut r, outputs)?,
                }
            }
            1 => {
                expect_rank(i, "conv-transpose", &shape, 4)?;
                if shape[2] != CONV_KERNEL || shape[3] != CONV_KERNEL {
                    return Err(Error::MalformedModel(format!(
                        "layer {i}: only {CONV_KERNEL}x{CONV_KERNEL} transpose kernels are supported"
                    )));
                }
                let (cin, cout) = (shape[0], shape[1]);
                Layer::ConvTranspose2d {
                    in_channels: cin,
                    out_channels: cout,
                    weight: read_f32s(&mut r, cin * cout * CONV_KERNEL * CONV_KERNEL)?,
                    bias: read_f32s(&mut r, cout)?,
                }
            }
            2..=5 => {
                expect_rank(i, "activation", &shape, 0)?;
                match tag {
                    2 => Layer::Relu,
                    3 => Layer::LeakyRelu,
                    4 => Layer::Tanh,
                    _ => Layer::Sigmoid,
                }
            }
            6 => Layer::Reshape { shape },
            7 => {
                expect_rank(i, "channel-affine", &shape, 1)?;
                Layer::ChannelAffine {
                    scale: read_f32s(&mut r, shape[0])?,
                    shift: read_f32s(&mut r, shape[0])?,
                }
            }
            other => {
                return Err(Error::MalformedModel(format!("layer {i} has unknown kind tag {other}")));
            }
        };
        layers.push(layer);
    }
    r.finish()?;
    GeneratorModel::new(latent_dim, layers)
}

pub fn save_model(model: &GeneratorModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GeneratorModel> {
    decode_model(&fs::read(path)?)
}
