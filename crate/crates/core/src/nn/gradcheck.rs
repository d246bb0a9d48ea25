//! Central-difference gradient verification.

use super::Tensor;
use crate::error::{Error, Result};

/// One evaluation of a scalar objective.
///
/// `pattern` fingerprints every piecewise-linear branch taken (ReLU signs).
/// A perturbation that changes it straddles a kink, where a central difference
/// does not estimate the derivative, so that coordinate is skipped and counted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub value: f64,
    pub pattern: u64,
}

impl Probe {
    pub fn smooth(value: f64) -> Self {
        Probe { value, pattern: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coord {
    pub input: usize,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst: Option<Coord>,
    pub checked: usize,
    pub skipped_kinks: usize,
}

/// FNV-1a over the sign bits of `values` (`v > 0`), folded into `seed`.
pub fn sign_pattern(seed: u64, values: &[f64]) -> u64 {
    let mut h = if seed == 0 {
        0xcbf2_9ce4_8422_2325
    } else {
        seed
    };
    for chunk in values.chunks(64) {
        let mut bits = 0u64;
        for (i, &v) in chunk.iter().enumerate() {
            if v > 0.0 {
                bits |= 1 << i;
            }
        }
        for byte in bits.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// `|a - n| / max(1, |a|, |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Compares `analytic[i]` (the gradient of `f` with respect to `inputs[i]`)
/// against central differences with step `eps`, coordinate by coordinate.
pub fn finite_difference_check<F>(
    inputs: &[Tensor],
    analytic: &[Tensor],
    eps: f64,
    mut f: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&[Tensor]) -> Result<Probe>,
{
    if !(1e-7..=1e-4).contains(&eps) {
        return Err(Error::invalid("eps", format!("{eps} outside [1e-7, 1e-4]")));
    }
    if inputs.len() != analytic.len() {
        return Err(Error::shape(
            "finite_difference_check",
            format!("{} inputs vs {} gradients", inputs.len(), analytic.len()),
        ));
    }
    for (i, (x, g)) in inputs.iter().zip(analytic).enumerate() {
        if x.shape() != g.shape() {
            return Err(Error::shape(
                "finite_difference_check",
                format!(
                    "input {i} shape {:?} vs gradient {:?}",
                    x.shape(),
                    g.shape()
                ),
            ));
        }
    }
    let base = f(inputs)?;
    if !base.value.is_finite() {
        return Err(Error::NonFinite {
            detail: "in objective at the unperturbed inputs".into(),
        });
    }
    let mut work: Vec<Tensor> = inputs.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        skipped_kinks: 0,
    };
    for input in 0..inputs.len() {
        for index in 0..inputs[input].len() {
            let coord = Coord { input, index };
            let orig = inputs[input].data()[index];
            work[input].data_mut()[index] = orig + eps;
            let plus = f(&work)?;
            work[input].data_mut()[index] = orig - eps;
            let minus = f(&work)?;
            work[input].data_mut()[index] = orig;
            if !plus.value.is_finite() || !minus.value.is_finite() {
                return Err(Error::NonFinite {
                    detail: format!("in objective at input {input}, coordinate {index}"),
                });
            }
            if plus.pattern != base.pattern || minus.pattern != base.pattern {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus.value - minus.value) / (2.0 * eps);
            let err = relative_error(analytic[input].data()[index], numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some(coord);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_passes_and_wrong_gradient_fails() {
        let x = Tensor::vector(vec![0.3, -1.2, 2.0]);
        let f = |xs: &[Tensor]| Ok(Probe::smooth(xs[0].data().iter().map(|v| v * v).sum()));
        let good = x.map(|v| 2.0 * v);
        let r = finite_difference_check(std::slice::from_ref(&x), &[good], 1e-6, f).unwrap();
        assert!(r.max_rel_error < 1e-8, "{r:?}");
        assert_eq!(r.checked, 3);
        let bad = x.map(|v| 2.0 * v + 0.1);
        let r = finite_difference_check(std::slice::from_ref(&x), &[bad], 1e-6, f).unwrap();
        assert!(r.max_rel_error > 1e-2);
    }

    #[test]
    fn eps_range_enforced() {
        let x = Tensor::vector(vec![1.0]);
        let f = |_: &[Tensor]| Ok(Probe::smooth(0.0));
        assert!(finite_difference_check(
            std::slice::from_ref(&x),
            std::slice::from_ref(&x),
            1e-3,
            f
        )
        .is_err());
    }

    #[test]
    fn non_finite_reports_coordinate() {
        let x = Tensor::vector(vec![1.0, 1e-7]);
        let f = |xs: &[Tensor]| Ok(Probe::smooth(xs[0].data()[1].ln()));
        let err =
            finite_difference_check(std::slice::from_ref(&x), std::slice::from_ref(&x), 1e-6, f)
                .unwrap_err()
                .to_string();
        assert!(err.contains("coordinate 1"), "{err}");
    }
}
