//! Tensors, the seeded generator, and the differentiable primitives, each
//! with a hand-paired backward pass.

mod activation;
mod conv;
mod dense;
mod gemm;
pub mod gradcheck;
mod loss;
mod params;
mod rng;
mod tensor;

pub use activation::{global_avg_pool, global_avg_pool_backward, relu, relu_backward};
pub use conv::{conv1d_grouped, conv1d_grouped_backward, ConvGrads, ConvSpec};
pub use dense::{dense, dense_backward, DenseGrads};
pub use gradcheck::{finite_difference_check, GradCheckReport, Probe};
pub use loss::{
    cross_entropy, mse, mse_backward, softmax, softmax_cross_entropy_backward, softmax_slice,
    CE_CLAMP,
};
pub use params::ParamSet;
pub use rng::{Rng, Stream};
pub use tensor::Tensor;
