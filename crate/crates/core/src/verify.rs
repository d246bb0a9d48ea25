//! Seeded finite-difference suite over every differentiable primitive and
//! over small end-to-end models.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::data::{Label, Sample};
use crate::error::Result;
use crate::model::{build_model, ExtractorConfig, StageConfig, TaskSpec};
use crate::nn::gradcheck::sign_pattern;
use crate::nn::{
    conv1d_grouped, conv1d_grouped_backward, cross_entropy, dense, dense_backward,
    finite_difference_check, global_avg_pool, global_avg_pool_backward, mse, mse_backward, relu,
    relu_backward, softmax_cross_entropy_backward, softmax_slice, ConvSpec, ParamSet, Probe, Rng,
    Stream, Tensor,
};

pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_TOLERANCE: f64 = 1e-5;

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub name: String,
    /// `layer` or `model`.
    pub family: &'static str,
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub eps: f64,
    pub tolerance: f64,
    pub cases: Vec<CaseResult>,
}

impl SuiteReport {
    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| !c.passed).count()
    }

    pub fn max_error(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| c.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn count(&self, family: &str) -> usize {
        self.cases.iter().filter(|c| c.family == family).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:<44} {:>12} {:>8} {:>6}  result\n",
            "case", "max rel err", "checked", "kinks"
        );
        for c in &self.cases {
            let _ = writeln!(
                s,
                "{:<44} {:>12.3e} {:>8} {:>6}  {}",
                c.name,
                c.max_rel_error,
                c.checked,
                c.skipped_kinks,
                if c.passed { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            s,
            "{} cases ({} layer, {} model), {} failed, worst {:.3e} (tolerance {:.0e}, eps {:.0e})",
            self.cases.len(),
            self.count("layer"),
            self.count("model"),
            self.failures(),
            self.max_error(),
            self.tolerance,
            self.eps
        );
        s
    }
}

fn random(rng: &mut Rng, shape: &[usize]) -> Tensor {
    Tensor::from_fn(shape.to_vec(), |_| rng.uniform_in(-1.0, 1.0))
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

struct Harness {
    eps: f64,
    tolerance: f64,
    cases: Vec<CaseResult>,
}

impl Harness {
    fn record<F>(
        &mut self,
        name: String,
        family: &'static str,
        inputs: &[Tensor],
        analytic: &[Tensor],
        f: F,
    ) -> Result<()>
    where
        F: FnMut(&[Tensor]) -> Result<Probe>,
    {
        let r = finite_difference_check(inputs, analytic, self.eps, f)?;
        self.cases.push(CaseResult {
            name,
            family,
            passed: r.checked > 0 && r.max_rel_error < self.tolerance,
            max_rel_error: r.max_rel_error,
            checked: r.checked,
            skipped_kinks: r.skipped_kinks,
        });
        Ok(())
    }
}

fn conv_cases(h: &mut Harness, seed: u64) -> Result<()> {
    let geometries = [
        (1, 1, 0),
        (3, 1, 1),
        (3, 2, 1),
        (2, 1, 0),
        (5, 2, 2),
        (3, 1, 0),
    ];
    let mut i = 0;
    for groups in [1, 2, 4] {
        for &(kernel, stride, padding) in &geometries {
            for batch in [0usize, 2] {
                let mut rng = Rng::stream(seed.wrapping_add(1000 + i), Stream::Check);
                i += 1;
                let spec = ConvSpec {
                    in_channels: 2 * groups,
                    out_channels: 3 * groups,
                    kernel,
                    stride,
                    padding,
                    groups,
                };
                let t = 7;
                let xshape: Vec<usize> = if batch == 0 {
                    vec![t, spec.in_channels]
                } else {
                    vec![batch, t, spec.in_channels]
                };
                let x = random(&mut rng, &xshape);
                let w = random(&mut rng, &spec.weight_shape());
                let b = random(&mut rng, &[spec.out_channels]);
                let y = conv1d_grouped(&x, &w, &b, &spec)?;
                let r = random(&mut rng, y.shape());
                let g = conv1d_grouped_backward(&x, &w, &spec, &r)?;
                let name = format!(
                    "conv G={groups} K={kernel} s={stride} p={padding} B={}",
                    batch.max(1)
                );
                h.record(
                    name,
                    "layer",
                    &[x, w, b],
                    &[g.input, g.weight, g.bias],
                    |p| {
                        Ok(Probe::smooth(dot(
                            &conv1d_grouped(&p[0], &p[1], &p[2], &spec)?,
                            &r,
                        )))
                    },
                )?;
            }
        }
    }
    Ok(())
}

fn dense_cases(h: &mut Harness, seed: u64) -> Result<()> {
    for i in 0..20u64 {
        let mut rng = Rng::stream(seed.wrapping_add(2000 + i), Stream::Check);
        let d_in = 1 + (i % 5) as usize;
        let d_out = 1 + (i % 4) as usize;
        let xshape = if i % 2 == 0 {
            vec![d_in]
        } else {
            vec![3, d_in]
        };
        let x = random(&mut rng, &xshape);
        let w = random(&mut rng, &[d_out, d_in]);
        let b = random(&mut rng, &[d_out]);
        let y = dense(&x, &w, &b)?;
        let r = random(&mut rng, y.shape());
        let g = dense_backward(&x, &w, &r)?;
        h.record(
            format!("dense {d_in}->{d_out} x{:?}", xshape),
            "layer",
            &[x, w, b],
            &[g.input, g.weight, g.bias],
            |p| Ok(Probe::smooth(dot(&dense(&p[0], &p[1], &p[2])?, &r))),
        )?;
    }
    Ok(())
}

fn pointwise_cases(h: &mut Harness, seed: u64) -> Result<()> {
    for i in 0..12u64 {
        let mut rng = Rng::stream(seed.wrapping_add(3000 + i), Stream::Check);
        let shape = [2 + (i % 3) as usize, 3];
        let x = random(&mut rng, &shape);
        let r = random(&mut rng, &shape);
        let g = relu_backward(&x, &r)?;
        h.record(format!("relu {shape:?} #{i}"), "layer", &[x], &[g], |p| {
            Ok(Probe {
                value: dot(&relu(&p[0]), &r),
                pattern: sign_pattern(0, p[0].data()),
            })
        })?;
    }
    for i in 0..12u64 {
        let mut rng = Rng::stream(seed.wrapping_add(4000 + i), Stream::Check);
        let shape: Vec<usize> = if i % 2 == 0 {
            vec![1 + (i % 4) as usize, 3]
        } else {
            vec![2, 1 + (i % 4) as usize, 3]
        };
        let x = random(&mut rng, &shape);
        let pooled = global_avg_pool(&x)?;
        let r = random(&mut rng, pooled.shape());
        let g = global_avg_pool_backward(x.shape(), &r)?;
        h.record(
            format!("global_avg_pool {shape:?}"),
            "layer",
            &[x],
            &[g],
            |p| Ok(Probe::smooth(dot(&global_avg_pool(&p[0])?, &r))),
        )?;
    }
    Ok(())
}

fn loss_cases(h: &mut Harness, seed: u64) -> Result<()> {
    for i in 0..12u64 {
        let mut rng = Rng::stream(seed.wrapping_add(5000 + i), Stream::Check);
        let k = 2 + (i % 5) as usize;
        let label = rng.below(k as u64) as usize;
        let z = Tensor::from_fn([k], |_| rng.uniform_in(-3.0, 3.0));
        let g = Tensor::vector(softmax_cross_entropy_backward(
            &softmax_slice(z.data()),
            label,
        )?);
        h.record(
            format!("softmax+cross_entropy K={k} y={label}"),
            "layer",
            &[z],
            &[g],
            |p| {
                Ok(Probe::smooth(cross_entropy(
                    &softmax_slice(p[0].data()),
                    label,
                )?))
            },
        )?;
    }
    for i in 0..12u64 {
        let mut rng = Rng::stream(seed.wrapping_add(6000 + i), Stream::Check);
        let n = 1 + (i % 6) as usize;
        let pred = random(&mut rng, &[n]);
        let target: Vec<f64> = (0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
        let g = Tensor::vector(mse_backward(pred.data(), &target)?);
        h.record(format!("mse n={n} #{i}"), "layer", &[pred], &[g], |p| {
            Ok(Probe::smooth(mse(p[0].data(), &target)?))
        })?;
    }
    Ok(())
}

/// A small extractor with cardinality `groups`, used by the end-to-end checks.
pub fn tiny_extractor(in_features: usize, groups: usize, two_stages: bool) -> ExtractorConfig {
    let mut stages = vec![StageConfig {
        blocks: 1,
        out_channels: 8,
        stride: 2,
    }];
    if two_stages {
        stages.push(StageConfig {
            blocks: 1,
            out_channels: 8,
            stride: 1,
        });
    }
    ExtractorConfig {
        in_features,
        stem_channels: 4,
        stem_kernel: 3,
        stages,
        cardinality: groups,
        bottleneck_width: 2,
        final_channels: 8,
    }
}

fn model_cases(h: &mut Harness, seed: u64) -> Result<()> {
    let variants = [
        (2, false, [0.6, 0.4]),
        (3, true, [1.0, 0.0]),
        (2, true, [0.0, 1.0]),
        (3, false, [0.5, 0.5]),
    ];
    let mut i = 0u64;
    for groups in [1, 2, 4] {
        for &(features, two_stages, alphas) in &variants {
            let mut rng = Rng::stream(seed.wrapping_add(7000 + i), Stream::Check);
            i += 1;
            let cfg = tiny_extractor(features, groups, two_stages);
            let mut tasks = vec![
                TaskSpec::classification("cls", 3, alphas[0]),
                TaskSpec::regression("reg", alphas[1]),
            ];
            for t in &mut tasks {
                t.adapter_dim = 4;
            }
            let net = build_model(&cfg, &tasks, &mut rng)?;
            let samples: Vec<Sample> = (0..3)
                .map(|_| {
                    let mut labels = BTreeMap::new();
                    labels.insert("cls".to_string(), Label::Class(rng.below(3) as usize));
                    labels.insert("reg".to_string(), Label::Value(rng.uniform_in(-1.0, 1.0)));
                    Sample {
                        x: random(&mut rng, &[8, features]),
                        labels,
                        anchor: chrono::NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
                    }
                })
                .collect();
            let (_, grads) = net.backward_all(&samples, &alphas)?;
            let names: Vec<String> = net.params().names().map(str::to_string).collect();
            let inputs: Vec<Tensor> = net.params().iter().map(|(_, t)| t.clone()).collect();
            let analytic: Vec<Tensor> = grads.iter().map(|(_, t)| t.clone()).collect();
            let name = format!(
                "model G={groups} F={features} stages={} alpha=({}, {})",
                1 + usize::from(two_stages),
                alphas[0],
                alphas[1]
            );
            h.record(name, "model", &inputs, &analytic, |p| {
                let mut ps = ParamSet::new();
                for (n, t) in names.iter().zip(p) {
                    ps.insert(n.clone(), t.clone())?;
                }
                net.loss_probe(&ps, &samples, &alphas)
            })?;
        }
    }
    Ok(())
}

/// Runs every case with central differences of step `eps`; a case passes
/// when its worst relative error is below `tolerance`.
pub fn gradcheck_suite(seed: u64, eps: f64, tolerance: f64) -> Result<SuiteReport> {
    let mut h = Harness {
        eps,
        tolerance,
        cases: Vec::new(),
    };
    conv_cases(&mut h, seed)?;
    dense_cases(&mut h, seed)?;
    pointwise_cases(&mut h, seed)?;
    loss_cases(&mut h, seed)?;
    model_cases(&mut h, seed)?;
    Ok(SuiteReport {
        eps,
        tolerance,
        cases: h.cases,
    })
}
