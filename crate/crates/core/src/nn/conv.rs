//! Grouped 1-D convolution over `[T x C]` (or batched `[B x T x C]`) tensors.
//!
//! Channels are split into `groups` contiguous slices. Output channel `co`
//! belongs to group `co / (C_out / G)` and only sees input channels of the
//! same group. Weights are laid out `[C_out x (C_in / G) x K]`.
//!
//! Each group is lowered to one matrix product over all `B * T_out` output
//! rows: an im2col buffer (column index `ci * K + k`, matching the weight
//! layout) times the transposed group weight block. 1x1 stride-1 unpadded
//! convolutions skip the im2col copy and read the input in place.

use serde::{Deserialize, Serialize};

use super::gemm::{gemm, Layout};
use super::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
}

impl ConvSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("in_channels", self.in_channels),
            ("out_channels", self.out_channels),
            ("kernel", self.kernel),
            ("stride", self.stride),
            ("groups", self.groups),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid(format!("conv {name}"), "must be >= 1"));
            }
        }
        if self.in_channels % self.groups != 0 {
            return Err(Error::invalid(
                "conv in_channels",
                format!(
                    "{} not divisible by groups {}",
                    self.in_channels, self.groups
                ),
            ));
        }
        if self.out_channels % self.groups != 0 {
            return Err(Error::invalid(
                "conv out_channels",
                format!(
                    "{} not divisible by groups {}",
                    self.out_channels, self.groups
                ),
            ));
        }
        Ok(())
    }

    /// `floor((T + 2p - K) / s) + 1`, or an error when that is below 1.
    pub fn out_len(&self, t: usize) -> Result<usize> {
        let padded = t + 2 * self.padding;
        if padded < self.kernel {
            return Err(Error::shape(
                "conv1d_grouped",
                format!(
                    "input length {t} with padding {} is shorter than kernel {}",
                    self.padding, self.kernel
                ),
            ));
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }

    pub fn in_per_group(&self) -> usize {
        self.in_channels / self.groups
    }

    pub fn out_per_group(&self) -> usize {
        self.out_channels / self.groups
    }

    pub fn weight_shape(&self) -> [usize; 3] {
        [self.out_channels, self.in_per_group(), self.kernel]
    }

    /// `(C_in / G) * K * C_out + C_out`.
    pub fn param_count(&self) -> usize {
        self.in_per_group() * self.kernel * self.out_channels + self.out_channels
    }

    fn is_pointwise(&self) -> bool {
        self.kernel == 1 && self.stride == 1 && self.padding == 0
    }
}

#[derive(Clone, Debug)]
pub struct ConvGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Tensor,
}

struct Geometry {
    batch: usize,
    t_in: usize,
    t_out: usize,
}

fn check_operands(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&Tensor>,
    spec: &ConvSpec,
) -> Result<Geometry> {
    spec.validate()?;
    let (batch, t_in, c_in) = input.batch_dims("conv1d_grouped")?;
    if c_in != spec.in_channels {
        return Err(Error::shape(
            "conv1d_grouped",
            format!(
                "input channels {c_in} != spec.in_channels {}",
                spec.in_channels
            ),
        ));
    }
    if weight.shape() != spec.weight_shape() {
        return Err(Error::shape(
            "conv1d_grouped",
            format!(
                "weight shape {:?} != [out_channels, in_channels/groups, kernel] = {:?}",
                weight.shape(),
                spec.weight_shape()
            ),
        ));
    }
    if let Some(b) = bias {
        if b.shape() != [spec.out_channels] {
            return Err(Error::shape(
                "conv1d_grouped",
                format!("bias shape {:?} != [{}]", b.shape(), spec.out_channels),
            ));
        }
    }
    let t_out = spec.out_len(t_in)?;
    Ok(Geometry { batch, t_in, t_out })
}

/// Copies the receptive fields of group `g` into `col` (`[B*T_out x cig*K]`).
fn im2col(x: &[f64], geo: &Geometry, spec: &ConvSpec, g: usize, col: &mut [f64]) {
    let cig = spec.in_per_group();
    let k = spec.kernel;
    let kd = cig * k;
    let c_in = spec.in_channels;
    col.fill(0.0);
    for b in 0..geo.batch {
        for to in 0..geo.t_out {
            let row = &mut col[(b * geo.t_out + to) * kd..][..kd];
            for kk in 0..k {
                let Some(ti) = (to * spec.stride + kk).checked_sub(spec.padding) else {
                    continue;
                };
                if ti >= geo.t_in {
                    continue;
                }
                let src = &x[(b * geo.t_in + ti) * c_in + g * cig..][..cig];
                for (ci, &v) in src.iter().enumerate() {
                    row[ci * k + kk] = v;
                }
            }
        }
    }
}

/// Scatter-adds a column-gradient buffer back onto the input gradient.
fn col2im(gcol: &[f64], geo: &Geometry, spec: &ConvSpec, g: usize, gx: &mut [f64]) {
    let cig = spec.in_per_group();
    let k = spec.kernel;
    let kd = cig * k;
    let c_in = spec.in_channels;
    for b in 0..geo.batch {
        for to in 0..geo.t_out {
            let row = &gcol[(b * geo.t_out + to) * kd..][..kd];
            for kk in 0..k {
                let Some(ti) = (to * spec.stride + kk).checked_sub(spec.padding) else {
                    continue;
                };
                if ti >= geo.t_in {
                    continue;
                }
                let dst = &mut gx[(b * geo.t_in + ti) * c_in + g * cig..][..cig];
                for (ci, d) in dst.iter_mut().enumerate() {
                    *d += row[ci * k + kk];
                }
            }
        }
    }
}

fn out_shape(input: &Tensor, t_out: usize, c: usize) -> Vec<usize> {
    if input.rank() == 2 {
        vec![t_out, c]
    } else {
        vec![input.shape()[0], t_out, c]
    }
}

/// Grouped convolution with symmetric zero padding.
pub fn conv1d_grouped(
    input: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    spec: &ConvSpec,
) -> Result<Tensor> {
    let geo = check_operands(input, weight, Some(bias), spec)?;
    let rows = geo.batch * geo.t_out;
    let c_out = spec.out_channels;
    let mut out = Vec::with_capacity(rows * c_out);
    for _ in 0..rows {
        out.extend_from_slice(bias.data());
    }
    let cig = spec.in_per_group();
    let cog = spec.out_per_group();
    let kd = cig * spec.kernel;
    let mut col = if spec.is_pointwise() {
        Vec::new()
    } else {
        vec![0.0; rows * kd]
    };
    for g in 0..spec.groups {
        let (a, la) = if spec.is_pointwise() {
            (input.data(), Layout::new(g * cig, spec.in_channels, 1))
        } else {
            im2col(input.data(), &geo, spec, g, &mut col);
            (col.as_slice(), Layout::new(0, kd, 1))
        };
        gemm(
            rows,
            kd,
            cog,
            a,
            la,
            weight.data(),
            Layout::new(g * cog * kd, 1, kd),
            1.0,
            &mut out,
            Layout::new(g * cog, c_out, 1),
        );
    }
    Ok(Tensor::from_parts(out_shape(input, geo.t_out, c_out), out))
}

/// Gradients of `conv1d_grouped` with respect to input, weight and bias,
/// given the upstream gradient `grad_out` (shaped like the forward output).
pub fn conv1d_grouped_backward(
    input: &Tensor,
    weight: &Tensor,
    spec: &ConvSpec,
    grad_out: &Tensor,
) -> Result<ConvGrads> {
    let geo = check_operands(input, weight, None, spec)?;
    let expected = out_shape(input, geo.t_out, spec.out_channels);
    if grad_out.shape() != expected.as_slice() {
        return Err(Error::shape(
            "conv1d_grouped_backward",
            format!("grad_out shape {:?} != {expected:?}", grad_out.shape()),
        ));
    }
    let rows = geo.batch * geo.t_out;
    let c_out = spec.out_channels;
    let cig = spec.in_per_group();
    let cog = spec.out_per_group();
    let kd = cig * spec.kernel;
    let go = grad_out.data();

    let mut gb = vec![0.0; c_out];
    for r in 0..rows {
        for (acc, &v) in gb.iter_mut().zip(&go[r * c_out..(r + 1) * c_out]) {
            *acc += v;
        }
    }

    let mut gw = vec![0.0; weight.len()];
    let mut gx = vec![0.0; input.len()];
    let pointwise = spec.is_pointwise();
    let (mut col, mut gcol) = if pointwise {
        (Vec::new(), Vec::new())
    } else {
        (vec![0.0; rows * kd], vec![0.0; rows * kd])
    };
    for g in 0..spec.groups {
        let (a, la) = if pointwise {
            (input.data(), Layout::new(g * cig, spec.in_channels, 1))
        } else {
            im2col(input.data(), &geo, spec, g, &mut col);
            (col.as_slice(), Layout::new(0, kd, 1))
        };
        // dW_g[cog x kd] = G_g^T [cog x rows] * A [rows x kd]
        gemm(
            cog,
            rows,
            kd,
            go,
            Layout::new(g * cog, 1, c_out),
            a,
            la,
            0.0,
            &mut gw,
            Layout::new(g * cog * kd, kd, 1),
        );
        // dA[rows x kd] = G_g [rows x cog] * W_g [cog x kd]
        let wl = Layout::new(g * cog * kd, kd, 1);
        let gl = Layout::new(g * cog, c_out, 1);
        if pointwise {
            gemm(
                rows,
                cog,
                kd,
                go,
                gl,
                weight.data(),
                wl,
                0.0,
                &mut gx,
                Layout::new(g * cig, spec.in_channels, 1),
            );
        } else {
            gemm(
                rows,
                cog,
                kd,
                go,
                gl,
                weight.data(),
                wl,
                0.0,
                &mut gcol,
                Layout::new(0, kd, 1),
            );
            col2im(&gcol, &geo, spec, g, &mut gx);
        }
    }
    Ok(ConvGrads {
        input: Tensor::from_parts(input.shape().to_vec(), gx),
        weight: Tensor::from_parts(weight.shape().to_vec(), gw),
        bias: Tensor::from_parts(vec![c_out], gb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(cin: usize, cout: usize, k: usize, s: usize, p: usize, g: usize) -> ConvSpec {
        ConvSpec {
            in_channels: cin,
            out_channels: cout,
            kernel: k,
            stride: s,
            padding: p,
            groups: g,
        }
    }

    #[test]
    fn sliding_sum_example() {
        let x = Tensor::matrix(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let w = Tensor::new([1, 1, 2], vec![1.0, 1.0]).unwrap();
        let b = Tensor::vector(vec![0.0]);
        let y = conv1d_grouped(&x, &w, &b, &spec(1, 1, 2, 1, 0, 1)).unwrap();
        assert_eq!(y.shape(), [2, 1]);
        assert_eq!(y.data(), [3.0, 5.0]);
    }

    #[test]
    fn per_group_scaling_example() {
        let x = Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = Tensor::new([2, 1, 1], vec![2.0, 3.0]).unwrap();
        let b = Tensor::vector(vec![0.0, 0.0]);
        let y = conv1d_grouped(&x, &w, &b, &spec(2, 2, 1, 1, 0, 2)).unwrap();
        assert_eq!(y.data(), [2.0, 6.0, 6.0, 12.0]);
    }

    #[test]
    fn identity_kernel_is_identity() {
        let x = Tensor::from_fn([5, 3], |i| i as f64 * 0.5 - 2.0);
        let w = Tensor::from_fn([3, 3, 1], |i| if i / 3 == i % 3 { 1.0 } else { 0.0 });
        let b = Tensor::zeros([3]);
        let y = conv1d_grouped(&x, &w, &b, &spec(3, 3, 1, 1, 0, 1)).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn rejects_bad_shapes() {
        let x = Tensor::zeros([4, 3]);
        let w = Tensor::zeros([2, 3, 1]);
        let b = Tensor::zeros([2]);
        let err = conv1d_grouped(&x, &w, &b, &spec(2, 2, 1, 1, 0, 1)).unwrap_err();
        assert!(err.to_string().contains("input channels 3"), "{err}");
        let err = conv1d_grouped(
            &Tensor::zeros([2, 2]),
            &Tensor::zeros([2, 2, 5]),
            &b,
            &spec(2, 2, 5, 1, 0, 1),
        )
        .unwrap_err();
        assert!(err.to_string().contains("shorter than kernel"), "{err}");
        assert!(spec(3, 4, 1, 1, 0, 2).validate().is_err());
    }

    #[test]
    fn strided_padded_length() {
        let s = spec(1, 1, 3, 2, 1, 1);
        assert_eq!(s.out_len(32).unwrap(), 16);
        assert_eq!(s.out_len(1).unwrap(), 1);
    }

    #[test]
    fn batched_matches_per_sample() {
        let s = spec(4, 4, 3, 2, 1, 2);
        let x = Tensor::from_fn([3, 7, 4], |i| ((i * 37) % 11) as f64 - 5.0);
        let w = Tensor::from_fn(s.weight_shape(), |i| ((i * 13) % 7) as f64 * 0.1 - 0.3);
        let b = Tensor::vector(vec![0.1, -0.2, 0.3, 0.0]);
        let y = conv1d_grouped(&x, &w, &b, &s).unwrap();
        for bi in 0..3 {
            let xi = Tensor::new([7, 4], x.data()[bi * 28..(bi + 1) * 28].to_vec()).unwrap();
            let yi = conv1d_grouped(&xi, &w, &b, &s).unwrap();
            let t_out = yi.shape()[0];
            assert_eq!(yi.data(), &y.data()[bi * t_out * 4..(bi + 1) * t_out * 4]);
        }
    }
}
