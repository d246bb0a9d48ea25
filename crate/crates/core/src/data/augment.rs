use serde::{Deserialize, Serialize};

use super::sample::Sample;
use crate::error::{Error, Result};
use crate::nn::{Rng, Tensor};

/// Training-time window perturbations, applied in the order crop, shift,
/// scale, noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentPolicy {
    /// Extra leading rows a training window carries for random cropping.
    pub crop_slack: usize,
    pub scale_range: [f64; 2],
    pub shift_max: usize,
    /// Noise std as a fraction of each feature's std.
    pub noise_sigma: f64,
    /// Odd moving-average width used to smooth the noise.
    pub smooth_window: usize,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        AugmentPolicy {
            crop_slack: 4,
            scale_range: [0.95, 1.05],
            shift_max: 2,
            noise_sigma: 0.01,
            smooth_window: 3,
        }
    }
}

impl AugmentPolicy {
    /// Leaves every window unchanged.
    pub fn neutral() -> Self {
        AugmentPolicy {
            crop_slack: 0,
            scale_range: [1.0, 1.0],
            shift_max: 0,
            noise_sigma: 0.0,
            smooth_window: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.scale_range;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0 && hi.is_finite()) {
            return Err(Error::invalid(
                "augment.scale_range",
                format!("[{lo}, {hi}] must satisfy 0 < lo <= 1 <= hi"),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid(
                "augment.noise_sigma",
                format!("{} must be >= 0", self.noise_sigma),
            ));
        }
        if self.smooth_window % 2 == 0 {
            return Err(Error::invalid(
                "augment.smooth_window",
                format!("{} must be odd and >= 1", self.smooth_window),
            ));
        }
        Ok(())
    }
}

/// Centered moving average along time, truncated at the edges.
fn smooth(values: &[f64], t: usize, f: usize, window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut out = vec![0.0; values.len()];
    for i in 0..t {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(t - 1);
        let n = (hi - lo + 1) as f64;
        for c in 0..f {
            let mut s = 0.0;
            for r in lo..=hi {
                s += values[r * f + c];
            }
            out[i * f + c] = s / n;
        }
    }
    out
}

/// Returns a length-`t` augmented copy of `sample`. The source window must
/// hold at least `t + crop_slack` rows; only the last `t + crop_slack` are
/// used. Random draws are made only for non-neutral policy components.
pub fn augment(
    sample: &Sample,
    policy: &AugmentPolicy,
    t: usize,
    feature_std: &[f64],
    rng: &mut Rng,
) -> Result<Sample> {
    policy.validate()?;
    let (rows, f) = sample.dims();
    let need = t + policy.crop_slack;
    if t == 0 || rows < need {
        return Err(Error::shape(
            "augment",
            format!("window has {rows} rows, needs T + crop_slack = {need}"),
        ));
    }
    if feature_std.len() != f {
        return Err(Error::shape(
            "augment",
            format!("{} feature stds for {f} features", feature_std.len()),
        ));
    }
    let src = sample.x.data();
    let base = rows - need;
    let offset = if policy.crop_slack > 0 {
        rng.int_in(0, policy.crop_slack as i64) as usize
    } else {
        0
    };
    let shift = if policy.shift_max > 0 {
        rng.int_in(-(policy.shift_max as i64), policy.shift_max as i64)
    } else {
        0
    };
    let [lo, hi] = policy.scale_range;
    let scale = if lo != hi {
        rng.uniform_in(lo, hi)
    } else {
        1.0
    };
    let mut out = Vec::with_capacity(t * f);
    for i in 0..t {
        let j = (i as i64 - shift).clamp(0, t as i64 - 1) as usize;
        let r = base + offset + j;
        out.extend(src[r * f..(r + 1) * f].iter().map(|v| v * scale));
    }
    if policy.noise_sigma > 0.0 {
        let mut noise = Vec::with_capacity(t * f);
        for _ in 0..t {
            for s in feature_std {
                noise.push(rng.normal() * policy.noise_sigma * s);
            }
        }
        let noise = smooth(&noise, t, f, policy.smooth_window);
        for (v, n) in out.iter_mut().zip(noise) {
            *v += n;
        }
    }
    Ok(Sample {
        x: Tensor::new([t, f], out)?,
        labels: sample.labels.clone(),
        anchor: sample.anchor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sample::Label;

    fn sample(rows: usize, f: usize) -> Sample {
        Sample {
            x: Tensor::from_fn([rows, f], |i| i as f64 * 0.5 - 3.0),
            labels: [("dir".to_string(), Label::Class(1))].into(),
            anchor: "2024-05-01".parse().unwrap(),
        }
    }

    #[test]
    fn neutral_policy_is_identity() {
        let s = sample(8, 3);
        let mut rng = Rng::seed_from(1);
        let before = rng.state();
        let out = augment(&s, &AugmentPolicy::neutral(), 8, &[1.0; 3], &mut rng).unwrap();
        assert_eq!(out, s);
        assert_eq!(rng.state(), before);
    }

    #[test]
    fn zero_noise_smoothing_is_exact() {
        let s = sample(10, 2);
        let policy = AugmentPolicy {
            crop_slack: 2,
            noise_sigma: 0.0,
            ..AugmentPolicy::default()
        };
        let mut r1 = Rng::seed_from(9);
        let out = augment(&s, &policy, 8, &[1.0; 2], &mut r1).unwrap();
        let mut r2 = Rng::seed_from(9);
        let off = r2.int_in(0, 2) as usize;
        let shift = r2.int_in(-2, 2);
        let k = r2.uniform_in(0.95, 1.05);
        for i in 0..8 {
            let j = (i as i64 - shift).clamp(0, 7) as usize;
            for c in 0..2 {
                assert_eq!(out.x.data()[i * 2 + c], s.x.data()[(off + j) * 2 + c] * k);
            }
        }
    }

    #[test]
    fn shape_and_labels_preserved() {
        let s = sample(12, 4);
        let mut rng = Rng::seed_from(3);
        for _ in 0..20 {
            let out = augment(&s, &AugmentPolicy::default(), 8, &[1.0; 4], &mut rng).unwrap();
            assert_eq!(out.x.shape(), [8, 4]);
            assert_eq!(out.labels, s.labels);
        }
        assert!(augment(
            &sample(11, 4),
            &AugmentPolicy::default(),
            8,
            &[1.0; 4],
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn moving_average_truncates_at_edges() {
        let v = [1.0, 2.0, 3.0, 10.0];
        assert_eq!(smooth(&v, 4, 1, 3), [1.5, 2.0, 5.0, 6.5]);
        assert_eq!(smooth(&v, 4, 1, 1), v);
    }

    #[test]
    fn policy_validation() {
        let bad = AugmentPolicy {
            smooth_window: 2,
            ..AugmentPolicy::default()
        };
        assert!(bad.validate().is_err());
        let bad = AugmentPolicy {
            scale_range: [1.1, 1.2],
            ..AugmentPolicy::default()
        };
        assert!(bad.validate().is_err());
    }
}
