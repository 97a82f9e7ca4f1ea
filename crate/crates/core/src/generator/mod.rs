//! Compact feed-forward generator, its complex two-head composition, and the
//! vector-Jacobian products used by the likelihood gradient.

mod complex;
mod format;
mod layer;
mod model;

pub use complex::{generate_complex, pullback_complex, trace_complex, vjp_complex, ComplexTrace, LatentVector};
pub use format::{decode_model, encode_model, load_model, save_model};
pub use layer::{Layer, Shape, CONV_KERNEL, CONV_PAD, CONV_STRIDE, LEAKY_SLOPE};
pub use model::{GeneratorModel, Trace};
