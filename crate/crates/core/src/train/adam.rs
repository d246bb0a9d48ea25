use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParamSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |b: f64| (0.0..1.0).contains(&b);
        if !ok(self.beta1) || !ok(self.beta2) || !(self.eps > 0.0) {
            return Err(Error::invalid(
                "train.adam",
                format!(
                    "beta1 {}, beta2 {} must be in [0, 1) and eps {} > 0",
                    self.beta1, self.beta2, self.eps
                ),
            ));
        }
        Ok(())
    }
}

/// First and second moments per parameter, plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: ParamSet,
    pub v: ParamSet,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            config,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(
    params: &mut ParamSet,
    grads: &ParamSet,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    params.check_same_layout(grads, "adam_step")?;
    params.check_same_layout(&state.m, "adam_step")?;
    params.check_same_layout(&state.v, "adam_step")?;
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::invalid(
            "learning rate",
            format!("{lr} must be positive"),
        ));
    }
    state.t += 1;
    let AdamConfig { beta1, beta2, eps } = state.config;
    let bc1 = 1.0 - beta1.powf(state.t as f64);
    let bc2 = 1.0 - beta2.powf(state.t as f64);
    let moments = state.m.iter_mut().zip(state.v.iter_mut());
    for (((_, p), (_, g)), ((_, m), (_, v))) in params.iter_mut().zip(grads.iter()).zip(moments) {
        let (p, m, v) = (p.data_mut(), m.data_mut(), v.data_mut());
        for (i, &gi) in g.data().iter().enumerate() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn scalar(v: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("w", Tensor::vector(vec![v])).unwrap();
        p
    }

    #[test]
    fn first_step_hand_value() {
        let mut p = scalar(1.0);
        let mut s = AdamState::new(&p, AdamConfig::default());
        adam_step(&mut p, &scalar(2.0), &mut s, 1e-3).unwrap();
        let expect = 1.0 - 1e-3 * 2.0 / (2.0 + 1e-8);
        assert!((p.get("w").unwrap().data()[0] - expect).abs() < 1e-15);
        assert!((p.get("w").unwrap().data()[0] - 0.999).abs() < 1e-9);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = scalar(0.37);
        let before = p.clone();
        let mut s = AdamState::new(&p, AdamConfig::default());
        for _ in 0..5 {
            adam_step(&mut p, &scalar(0.0), &mut s, 1e-2).unwrap();
        }
        assert!(p.bit_eq(&before));
    }

    #[test]
    fn first_step_is_signed_lr() {
        let mut p = ParamSet::new();
        p.insert("w", Tensor::vector(vec![0.0; 4])).unwrap();
        let mut g = ParamSet::new();
        g.insert("w", Tensor::vector(vec![3.0, -0.5, 10.0, -7.0]))
            .unwrap();
        let mut s = AdamState::new(&p, AdamConfig::default());
        adam_step(&mut p, &g, &mut s, 0.01).unwrap();
        for (x, gi) in p
            .get("w")
            .unwrap()
            .data()
            .iter()
            .zip(g.get("w").unwrap().data())
        {
            assert!((x + 0.01 * gi.signum()).abs() < 1e-9);
        }
    }

    #[test]
    fn layout_mismatch_rejected() {
        let mut p = scalar(1.0);
        let mut s = AdamState::new(&p, AdamConfig::default());
        let mut g = ParamSet::new();
        g.insert("other", Tensor::vector(vec![1.0])).unwrap();
        assert!(adam_step(&mut p, &g, &mut s, 1e-3).is_err());
    }
}
