//! Runs a grouped 1-D convolution forward and backward on a small batch.
//!
//! `cargo run --example grouped_conv`

use resnext_mtl::nn::{conv1d_grouped, conv1d_grouped_backward, ConvSpec, Rng, Stream, Tensor};

fn main() -> resnext_mtl::Result<()> {
    let spec = ConvSpec {
        in_channels: 8,
        out_channels: 8,
        kernel: 3,
        stride: 2,
        padding: 1,
        groups: 4,
    };
    spec.validate()?;
    let mut rng = Rng::stream(1, Stream::Init);
    let x = Tensor::from_fn([2, 10, 8], |_| rng.normal());
    let w = Tensor::from_fn(spec.weight_shape(), |_| 0.3 * rng.normal());
    let b = Tensor::zeros([8]);
    let y = conv1d_grouped(&x, &w, &b, &spec)?;
    println!("input {:?} -> output {:?}", x.shape(), y.shape());
    println!("weight {:?}, {} parameters", w.shape(), spec.param_count());

    let grads = conv1d_grouped_backward(&x, &w, &spec, &Tensor::full(y.shape().to_vec(), 1.0))?;
    println!(
        "grad shapes: input {:?} weight {:?} bias {:?}",
        grads.input.shape(),
        grads.weight.shape(),
        grads.bias.shape()
    );
    println!("bias grad = batch * T_out = {}", grads.bias.data()[0]);
    Ok(())
}
