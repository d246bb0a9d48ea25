use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

fn check_lengths(op: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::shape(op, format!("{a} predictions vs {b} labels")));
    }
    if a == 0 {
        return Err(Error::invalid(op, "no samples"));
    }
    Ok(())
}

/// Fraction of exact matches.
pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    check_lengths("accuracy", preds.len(), labels.len())?;
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// `K x K` counts, rows = true class, columns = predicted class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(preds: &[usize], labels: &[usize], classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::invalid("classes", format!("{classes} < 2")));
        }
        if preds.len() != labels.len() {
            return Err(Error::shape(
                "confusion_matrix",
                format!("{} predictions vs {} labels", preds.len(), labels.len()),
            ));
        }
        let mut counts = vec![0; classes * classes];
        for (&p, &l) in preds.iter().zip(labels) {
            if p >= classes || l >= classes {
                return Err(Error::invalid(
                    "class index",
                    format!("pair (label {l}, prediction {p}) outside 0..{classes}"),
                ));
            }
            counts[l * classes + p] += 1;
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// F1 of class `c`. A class never seen in labels or predictions scores 1.
    pub fn f1(&self, c: usize) -> f64 {
        let tp = self.get(c, c);
        let fp: u64 = (0..self.classes)
            .filter(|&t| t != c)
            .map(|t| self.get(t, c))
            .sum();
        let fn_: u64 = (0..self.classes)
            .filter(|&p| p != c)
            .map(|p| self.get(c, p))
            .sum();
        if tp + fp + fn_ == 0 {
            return 1.0;
        }
        if tp == 0 {
            return 0.0;
        }
        let p = tp as f64 / (tp + fp) as f64;
        let r = tp as f64 / (tp + fn_) as f64;
        2.0 * p * r / (p + r)
    }

    pub fn macro_f1(&self) -> f64 {
        (0..self.classes).map(|c| self.f1(c)).sum::<f64>() / self.classes as f64
    }
}

/// Unweighted mean of per-class F1 over `classes` classes.
pub fn macro_f1(preds: &[usize], labels: &[usize], classes: usize) -> Result<f64> {
    check_lengths("macro_f1", preds.len(), labels.len())?;
    Ok(ConfusionMatrix::new(preds, labels, classes)?.macro_f1())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub rmse: f64,
}

pub fn regression_metrics(preds: &[f64], targets: &[f64]) -> Result<RegressionMetrics> {
    check_lengths("regression_metrics", preds.len(), targets.len())?;
    let n = preds.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for (p, t) in preds.iter().zip(targets) {
        let d = p - t;
        abs += d.abs();
        sq += d * d;
    }
    Ok(RegressionMetrics {
        mae: abs / n,
        rmse: (sq / n).sqrt(),
    })
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Majority,
    Mean,
}

/// Constant predictions from training labels: the most frequent class
/// (lowest index on ties) or the mean target.
pub fn baseline_predict(
    kind: BaselineKind,
    train: &[Label],
    eval_size: usize,
) -> Result<Vec<Label>> {
    if train.is_empty() {
        return Err(Error::invalid("baseline", "no training labels"));
    }
    let value = match kind {
        BaselineKind::Majority => {
            let classes = train
                .iter()
                .map(|l| match l {
                    Label::Class(c) => Ok(*c),
                    Label::Value(_) => Err(Error::invalid(
                        "baseline",
                        "majority baseline needs class labels",
                    )),
                })
                .collect::<Result<Vec<_>>>()?;
            let k = classes.iter().max().expect("nonempty") + 1;
            let mut counts = vec![0usize; k];
            for c in classes {
                counts[c] += 1;
            }
            let mut best = 0;
            for (c, &n) in counts.iter().enumerate() {
                if n > counts[best] {
                    best = c;
                }
            }
            Label::Class(best)
        }
        BaselineKind::Mean => {
            let mut sum = 0.0;
            for l in train {
                match l {
                    Label::Value(v) => sum += v,
                    Label::Class(_) => {
                        return Err(Error::invalid(
                            "baseline",
                            "mean baseline needs real targets",
                        ))
                    }
                }
            }
            Label::Value(sum / train.len() as f64)
        }
    };
    Ok(vec![value; eval_size])
}
