use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One stage of ResNeXt blocks. The first block applies `stride`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageConfig {
    pub blocks: usize,
    pub out_channels: usize,
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractorConfig {
    pub in_features: usize,
    pub stem_channels: usize,
    pub stem_kernel: usize,
    pub stages: Vec<StageConfig>,
    /// Number of groups `G` in each block's grouped convolution.
    pub cardinality: usize,
    /// Channels per group path; the grouped conv is `G * bottleneck_width` wide.
    pub bottleneck_width: usize,
    /// Width `C` of the shared feature map; must equal the last stage's output.
    pub final_channels: usize,
}

impl Default for ExtractorConfig {
    /// Stem 3-tap conv to 64 channels, then two stages of two blocks
    /// (64 -> 128 and 128 -> 128, each opening with stride 2), G = 8, width 16.
    fn default() -> Self {
        ExtractorConfig {
            in_features: 8,
            stem_channels: 64,
            stem_kernel: 3,
            stages: vec![
                StageConfig {
                    blocks: 2,
                    out_channels: 128,
                    stride: 2,
                },
                StageConfig {
                    blocks: 2,
                    out_channels: 128,
                    stride: 2,
                },
            ],
            cardinality: 8,
            bottleneck_width: 16,
            final_channels: 128,
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("in_features", self.in_features),
            ("stem_channels", self.stem_channels),
            ("cardinality", self.cardinality),
            ("bottleneck_width", self.bottleneck_width),
            ("final_channels", self.final_channels),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("extractor.{name}"), "must be >= 1"));
            }
        }
        if self.stem_kernel == 0 || self.stem_kernel % 2 == 0 {
            return Err(Error::invalid(
                "extractor.stem_kernel",
                format!("{} must be odd", self.stem_kernel),
            ));
        }
        if self.stages.is_empty() {
            return Err(Error::invalid(
                "extractor.stages",
                "at least one stage required",
            ));
        }
        for (i, s) in self.stages.iter().enumerate() {
            if s.blocks == 0 {
                return Err(Error::invalid(
                    format!("extractor.stages[{i}].blocks"),
                    "must be >= 1",
                ));
            }
            if s.out_channels == 0 || s.out_channels % self.cardinality != 0 {
                return Err(Error::invalid(
                    format!("extractor.stages[{i}].out_channels"),
                    format!(
                        "{} must be a positive multiple of cardinality {}",
                        s.out_channels, self.cardinality
                    ),
                ));
            }
            if !matches!(s.stride, 1 | 2) {
                return Err(Error::invalid(
                    format!("extractor.stages[{i}].stride"),
                    format!("{} not in {{1, 2}}", s.stride),
                ));
            }
        }
        let last = self
            .stages
            .last()
            .map(|s| s.out_channels)
            .unwrap_or_default();
        if last != self.final_channels {
            return Err(Error::invalid(
                "extractor.final_channels",
                format!("{} != last stage out_channels {last}", self.final_channels),
            ));
        }
        Ok(())
    }

    /// `T / T'`.
    pub fn downsample(&self) -> usize {
        self.stages.iter().map(|s| s.stride).product()
    }

    /// Checks that a window of `t` rows downsamples exactly and returns `T'`.
    pub fn output_len(&self, t: usize) -> Result<usize> {
        let d = self.downsample();
        if t < d || t % d != 0 {
            return Err(Error::invalid(
                "window length",
                format!("T = {t} must be a positive multiple of {d} (minimum T = {d})"),
            ));
        }
        Ok(t / d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TaskKind {
    Classification { classes: usize },
    Regression,
}

impl TaskKind {
    /// Width of the head output.
    pub fn output_dim(&self) -> usize {
        match *self {
            TaskKind::Classification { classes } => classes,
            TaskKind::Regression => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Classification { .. } => "classification",
            TaskKind::Regression => "regression",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub kind: TaskKind,
    /// Weight of this task's loss in the joint objective.
    pub alpha: f64,
    /// Width of the task adapter output.
    pub adapter_dim: usize,
}

impl TaskSpec {
    pub fn classification(id: impl Into<String>, classes: usize, alpha: f64) -> Self {
        TaskSpec {
            id: id.into(),
            kind: TaskKind::Classification { classes },
            alpha,
            adapter_dim: 64,
        }
    }

    pub fn regression(id: impl Into<String>, alpha: f64) -> Self {
        TaskSpec {
            id: id.into(),
            kind: TaskKind::Regression,
            alpha,
            adapter_dim: 64,
        }
    }
}

pub fn validate_tasks(tasks: &[TaskSpec]) -> Result<()> {
    if tasks.is_empty() {
        return Err(Error::invalid("tasks", "at least one task required"));
    }
    let mut seen = HashSet::new();
    for t in tasks {
        if t.id.is_empty() {
            return Err(Error::invalid("tasks.id", "must be non-empty"));
        }
        if !seen.insert(t.id.as_str()) {
            return Err(Error::invalid("tasks.id", format!("duplicate `{}`", t.id)));
        }
        if !(t.alpha.is_finite() && t.alpha >= 0.0) {
            return Err(Error::invalid(
                format!("tasks.{}.alpha", t.id),
                format!("{} must be finite and >= 0", t.alpha),
            ));
        }
        if t.adapter_dim == 0 {
            return Err(Error::invalid(
                format!("tasks.{}.adapter_dim", t.id),
                "must be >= 1",
            ));
        }
        if let TaskKind::Classification { classes } = t.kind {
            if classes < 2 {
                return Err(Error::invalid(
                    format!("tasks.{}.classes", t.id),
                    format!("{classes} < 2"),
                ));
            }
        }
    }
    validate_alphas(&tasks.iter().map(|t| t.alpha).collect::<Vec<_>>())
}

pub(crate) fn validate_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::invalid(
            "alpha",
            format!("{alphas:?} must be finite and >= 0"),
        ));
    }
    if alphas.iter().sum::<f64>() <= 0.0 {
        return Err(Error::invalid("alpha", "all task weights are zero"));
    }
    Ok(())
}
