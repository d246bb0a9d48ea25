use crate::error::{Error, Result};

/// Weighted joint objective `L = sum_i alpha_i * L_i` over `(L_i, alpha_i)` pairs.
pub fn multi_task_loss(per_task: &[(f64, f64)]) -> Result<f64> {
    if per_task.is_empty() {
        return Err(Error::invalid("multi_task_loss", "no tasks"));
    }
    if per_task.iter().any(|&(_, a)| !(a.is_finite() && a >= 0.0)) {
        return Err(Error::invalid("alpha", "weights must be finite and >= 0"));
    }
    if per_task.iter().all(|&(_, a)| a == 0.0) {
        return Err(Error::invalid("alpha", "all task weights are zero"));
    }
    Ok(per_task.iter().map(|&(l, a)| a * l).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_sum_examples() {
        assert_eq!(multi_task_loss(&[(0.7, 1.0), (9.9, 0.0)]).unwrap(), 0.7);
        let l = multi_task_loss(&[(0.5, 0.6), (0.3, 0.4)]).unwrap();
        assert!((l - 0.42).abs() < 1e-15);
        assert_eq!(
            multi_task_loss(&[(1.5, 1.0), (2.0, 1.0), (0.25, 1.0)]).unwrap(),
            3.75
        );
        assert!(multi_task_loss(&[(1.0, 0.0), (2.0, 0.0)]).is_err());
        assert!(multi_task_loss(&[]).is_err());
    }
}
