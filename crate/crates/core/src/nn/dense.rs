use super::gemm::{gemm, Layout};
use super::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct DenseGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Tensor,
}

fn rows_and_width(x: &Tensor) -> Result<(usize, usize)> {
    match *x.shape() {
        [d] => Ok((1, d)),
        [b, d] => Ok((b, d)),
        _ => Err(Error::shape(
            "dense",
            format!("input must be [d_in] or [B x d_in], got {:?}", x.shape()),
        )),
    }
}

fn check(x: &Tensor, w: &Tensor, b: Option<&Tensor>) -> Result<(usize, usize, usize)> {
    let (rows, d_in) = rows_and_width(x)?;
    let [d_out, w_in] = *w.shape() else {
        return Err(Error::shape(
            "dense",
            format!("weight must be [d_out x d_in], got {:?}", w.shape()),
        ));
    };
    if w_in != d_in {
        return Err(Error::shape(
            "dense",
            format!("weight d_in {w_in} != input width {d_in}"),
        ));
    }
    if let Some(b) = b {
        if b.shape() != [d_out] {
            return Err(Error::shape(
                "dense",
                format!("bias shape {:?} != [{d_out}]", b.shape()),
            ));
        }
    }
    Ok((rows, d_in, d_out))
}

fn out_shape(x: &Tensor, rows: usize, d_out: usize) -> Vec<usize> {
    if x.rank() == 1 {
        vec![d_out]
    } else {
        vec![rows, d_out]
    }
}

/// `y = W x + b`, applied row-wise when `x` is `[B x d_in]`.
pub fn dense(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (rows, d_in, d_out) = check(x, w, Some(b))?;
    let mut out = Vec::with_capacity(rows * d_out);
    for _ in 0..rows {
        out.extend_from_slice(b.data());
    }
    gemm(
        rows,
        d_in,
        d_out,
        x.data(),
        Layout::new(0, d_in, 1),
        w.data(),
        Layout::new(0, 1, d_in),
        1.0,
        &mut out,
        Layout::new(0, d_out, 1),
    );
    Ok(Tensor::from_parts(out_shape(x, rows, d_out), out))
}

pub fn dense_backward(x: &Tensor, w: &Tensor, grad_out: &Tensor) -> Result<DenseGrads> {
    let (rows, d_in, d_out) = check(x, w, None)?;
    if grad_out.shape() != out_shape(x, rows, d_out).as_slice() {
        return Err(Error::shape(
            "dense_backward",
            format!("grad_out shape {:?}", grad_out.shape()),
        ));
    }
    let g = grad_out.data();
    let mut gx = vec![0.0; rows * d_in];
    gemm(
        rows,
        d_out,
        d_in,
        g,
        Layout::new(0, d_out, 1),
        w.data(),
        Layout::new(0, d_in, 1),
        0.0,
        &mut gx,
        Layout::new(0, d_in, 1),
    );
    let mut gw = vec![0.0; d_out * d_in];
    gemm(
        d_out,
        rows,
        d_in,
        g,
        Layout::new(0, 1, d_out),
        x.data(),
        Layout::new(0, d_in, 1),
        0.0,
        &mut gw,
        Layout::new(0, d_in, 1),
    );
    let mut gb = vec![0.0; d_out];
    for r in 0..rows {
        for (acc, &v) in gb.iter_mut().zip(&g[r * d_out..(r + 1) * d_out]) {
            *acc += v;
        }
    }
    Ok(DenseGrads {
        input: Tensor::from_parts(x.shape().to_vec(), gx),
        weight: Tensor::from_parts(w.shape().to_vec(), gw),
        bias: Tensor::from_parts(vec![d_out], gb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights() {
        let x = Tensor::vector(vec![0.5, -1.5, 2.0]);
        let w = Tensor::from_fn([3, 3], |i| if i / 3 == i % 3 { 1.0 } else { 0.0 });
        assert_eq!(dense(&x, &w, &Tensor::zeros([3])).unwrap(), x);
    }

    #[test]
    fn hand_multiply() {
        let x = Tensor::vector(vec![1.0, 2.0]);
        let w = Tensor::matrix(2, 2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        let b = Tensor::vector(vec![0.0, 1.0]);
        assert_eq!(dense(&x, &w, &b).unwrap().data(), [3.0, 3.0]);
    }

    #[test]
    fn zero_weights_broadcast_bias() {
        let x = Tensor::vector(vec![7.0, -3.0, 1.0]);
        let y = dense(&x, &Tensor::zeros([1, 3]), &Tensor::vector(vec![5.0])).unwrap();
        assert_eq!(y.data(), [5.0]);
    }

    #[test]
    fn mismatch_rejected() {
        let x = Tensor::vector(vec![1.0, 2.0]);
        assert!(dense(&x, &Tensor::zeros([2, 3]), &Tensor::zeros([2])).is_err());
        assert!(dense(&x, &Tensor::zeros([2, 2]), &Tensor::zeros([3])).is_err());
    }
}
