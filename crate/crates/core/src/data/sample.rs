use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::nn::Tensor;

/// Target for one task.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Class(usize),
    Value(f64),
}

/// One input window `X` (`[T x F]`) with its per-task labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Tensor,
    pub labels: BTreeMap<String, Label>,
    /// Date of the last row of the window.
    pub anchor: NaiveDate,
}

impl Sample {
    pub fn label(&self, task_id: &str) -> Option<Label> {
        self.labels.get(task_id).copied()
    }

    /// Window length and feature count.
    pub fn dims(&self) -> (usize, usize) {
        match *self.x.shape() {
            [t, f] => (t, f),
            _ => panic!("sample window must be rank 2"),
        }
    }
}
