use super::Tensor;
use crate::error::{Error, Result};

/// Floor applied to the true-class probability before taking its log.
pub const CE_CLAMP: f64 = 1e-12;

/// Max-subtracted softmax over a slice.
pub fn softmax_slice(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Softmax of a `[K]` vector, or row-wise over `[B x K]`.
pub fn softmax(z: &Tensor) -> Tensor {
    let k = *z.shape().last().expect("tensor has rank >= 1");
    let data = z.data().chunks(k).flat_map(softmax_slice).collect();
    Tensor::from_parts(z.shape().to_vec(), data)
}

/// `-ln(max(probs[label], CE_CLAMP))`.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = *probs.get(label).ok_or_else(|| {
        Error::invalid(
            "class label",
            format!("{label} out of range for {} classes", probs.len()),
        )
    })?;
    Ok(-p.max(CE_CLAMP).ln())
}

/// Gradient of `cross_entropy(softmax(z), label)` with respect to the logits `z`.
pub fn softmax_cross_entropy_backward(probs: &[f64], label: usize) -> Result<Vec<f64>> {
    if label >= probs.len() {
        return Err(Error::invalid(
            "class label",
            format!("{label} out of range for {} classes", probs.len()),
        ));
    }
    let mut g = probs.to_vec();
    g[label] -= 1.0;
    Ok(g)
}

/// Mean squared error.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair("mse", pred, target)?;
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// `2 (pred - target) / n`.
pub fn mse_backward(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check_pair("mse_backward", pred, target)?;
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| 2.0 * (p - t) / n)
        .collect())
}

fn check_pair(op: &'static str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(
            op,
            format!("lengths {} vs {}", a.len(), b.len()),
        ));
    }
    if a.is_empty() {
        return Err(Error::shape(op, "empty input"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let u = softmax_slice(&[0.0, 0.0, 0.0]);
        for p in &u {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = softmax_slice(&[2f64.ln(), 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_extreme_logits_stay_finite() {
        let p = softmax_slice(&[1000.0, -1000.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[0.0, 1.0, 0.0], 1).unwrap(), 0.0);
        let ce = cross_entropy(&[0.25; 4], 2).unwrap();
        assert!((ce - 4f64.ln()).abs() < 1e-15);
        assert!((ce - 1.3863).abs() < 1e-4);
        let capped = cross_entropy(&[1.0, 0.0], 1).unwrap();
        assert_eq!(capped, -CE_CLAMP.ln());
        assert_eq!(
            cross_entropy(&[CE_CLAMP, 1.0 - CE_CLAMP], 0).unwrap(),
            capped
        );
        assert!(cross_entropy(&[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn fused_gradient_is_probs_minus_onehot() {
        let g = softmax_cross_entropy_backward(&[0.2, 0.5, 0.3], 1).unwrap();
        assert_eq!(g, vec![0.2, -0.5, 0.3]);
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 2.0], &[3.0, 2.0]).unwrap(), 2.0);
        let base = mse(&[0.5, -1.0, 2.0], &[1.0, 1.0, 1.0]).unwrap();
        let scaled = mse(&[1.5, -3.0, 6.0], &[3.0, 3.0, 3.0]).unwrap();
        assert!((scaled - 9.0 * base).abs() < 1e-12);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert_eq!(
            mse_backward(&[1.0, 2.0], &[3.0, 2.0]).unwrap(),
            vec![-2.0, 0.0]
        );
    }
}
