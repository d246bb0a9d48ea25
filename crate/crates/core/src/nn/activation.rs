use super::Tensor;
use crate::error::{Error, Result};

/// Elementwise ReLU.
pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Passes `grad` where the forward input was strictly positive. The
/// subgradient at zero is zero.
pub fn relu_backward(x: &Tensor, grad: &Tensor) -> Result<Tensor> {
    if x.shape() != grad.shape() {
        return Err(Error::shape(
            "relu_backward",
            format!("{:?} vs {:?}", x.shape(), grad.shape()),
        ));
    }
    let data = x
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Ok(Tensor::from_parts(x.shape().to_vec(), data))
}

/// Per-channel mean over the time axis: `[T x C] -> [C]`, `[B x T x C] -> [B x C]`.
pub fn global_avg_pool(x: &Tensor) -> Result<Tensor> {
    let (batch, t, c) = x.batch_dims("global_avg_pool")?;
    let mut out = vec![0.0; batch * c];
    let inv = 1.0 / t as f64;
    for b in 0..batch {
        let acc = &mut out[b * c..(b + 1) * c];
        for ti in 0..t {
            let row = &x.data()[(b * t + ti) * c..][..c];
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        for a in acc.iter_mut() {
            *a *= inv;
        }
    }
    let shape = if x.rank() == 2 {
        vec![c]
    } else {
        vec![batch, c]
    };
    Ok(Tensor::from_parts(shape, out))
}

/// Spreads `grad / T` uniformly over the pooled time axis.
pub fn global_avg_pool_backward(input_shape: &[usize], grad: &Tensor) -> Result<Tensor> {
    let (batch, t, c) = match *input_shape {
        [t, c] => (1, t, c),
        [b, t, c] => (b, t, c),
        _ => {
            return Err(Error::shape(
                "global_avg_pool_backward",
                format!("input shape {input_shape:?}"),
            ))
        }
    };
    if grad.len() != batch * c {
        return Err(Error::shape(
            "global_avg_pool_backward",
            format!("grad has {} values, expected {}", grad.len(), batch * c),
        ));
    }
    let inv = 1.0 / t as f64;
    let mut out = Vec::with_capacity(batch * t * c);
    for b in 0..batch {
        let g = &grad.data()[b * c..(b + 1) * c];
        for _ in 0..t {
            out.extend(g.iter().map(|v| v * inv));
        }
    }
    Ok(Tensor::from_parts(input_shape.to_vec(), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_examples() {
        let x = Tensor::vector(vec![-1.0, 0.0, 2.0]);
        assert_eq!(relu(&x).data(), [0.0, 0.0, 2.0]);
        let pos = Tensor::vector(vec![0.0, 1.0, 3.5]);
        assert_eq!(relu(&pos), pos);
        let neg = Tensor::vector(vec![-0.1, -4.0]);
        assert_eq!(relu(&neg).data(), [0.0, 0.0]);
    }

    #[test]
    fn relu_grad_zero_at_kink() {
        let x = Tensor::vector(vec![-1.0, 0.0, 2.0]);
        let g = relu_backward(&x, &Tensor::full([3], 1.0)).unwrap();
        assert_eq!(g.data(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn pool_examples() {
        let x = Tensor::matrix(2, 2, vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        assert_eq!(global_avg_pool(&x).unwrap().data(), [3.0, 5.0]);
        let one = Tensor::matrix(1, 3, vec![1.0, -2.0, 4.0]).unwrap();
        assert_eq!(global_avg_pool(&one).unwrap().data(), one.data());
        let c = Tensor::full([6, 2], 2.5);
        assert_eq!(global_avg_pool(&c).unwrap().data(), [2.5, 2.5]);
    }

    #[test]
    fn pool_backward_uniform() {
        let g = Tensor::vector(vec![4.0, 8.0]);
        let gx = global_avg_pool_backward(&[4, 2], &g).unwrap();
        assert_eq!(gx.data(), [1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
    }
}
