use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::schedule::lr_at;
use crate::data::{augment, AugmentPolicy, Label, Sample};
use crate::error::{Error, Result};
use crate::eval::{predict, report_from_predictions, MetricsReport, TaskPredictions};
use crate::model::MultiTaskNet;
use crate::nn::{Rng, Stream, CE_CLAMP};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub base_lr: f64,
    pub decay_factor: f64,
    pub decay_every_epochs: usize,
    pub batch_size: usize,
    pub pretrain_epochs_per_task: usize,
    pub joint_epochs: usize,
    /// Joint-phase loss weights; the task specs' weights when absent.
    pub alphas: Option<Vec<f64>>,
    /// Hold the shared trunk fixed while pretraining each head.
    pub freeze_trunk_in_pretrain: bool,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            base_lr: 1e-3,
            decay_factor: 0.5,
            decay_every_epochs: 10,
            batch_size: 32,
            pretrain_epochs_per_task: 3,
            joint_epochs: 30,
            alphas: None,
            freeze_trunk_in_pretrain: false,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::invalid(
                "train.base_lr",
                format!("{} must be > 0", self.base_lr),
            ));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::invalid(
                "train.decay_factor",
                format!("{} must be in (0, 1]", self.decay_factor),
            ));
        }
        if self.decay_every_epochs == 0 {
            return Err(Error::invalid("train.decay_every_epochs", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("train.batch_size", "must be >= 1"));
        }
        self.adam.validate()
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        lr_at(
            epoch,
            self.base_lr,
            self.decay_factor,
            self.decay_every_epochs,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    /// Single-task optimization of task `task` (index into the task list).
    Pretrain {
        task: usize,
    },
    Joint,
}

/// Ordered phases with their epoch budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub phases: Vec<(Phase, usize)>,
}

impl PhasePlan {
    /// Pretraining of each task in order, then the joint phase.
    pub fn standard(n_tasks: usize, cfg: &TrainConfig) -> Self {
        let mut phases: Vec<(Phase, usize)> = (0..n_tasks)
            .map(|task| (Phase::Pretrain { task }, cfg.pretrain_epochs_per_task))
            .collect();
        phases.push((Phase::Joint, cfg.joint_epochs));
        PhasePlan { phases }
    }

    pub fn total_epochs(&self) -> usize {
        self.phases.iter().map(|p| p.1).sum()
    }
}

/// Position in the phase plan: the next epoch to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub phase: usize,
    pub epoch: usize,
}

/// Training inputs. Training windows carry `crop_slack` extra leading rows.
pub struct TrainData<'a> {
    pub train: &'a [Sample],
    pub val: &'a [Sample],
    pub window: usize,
    pub feature_std: &'a [f64],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub phase: String,
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub val_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub val: Option<MetricsReport>,
}

impl EpochLog {
    pub fn to_json_line(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }
}

/// Owns the model, optimizer state and random streams across all phases.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub(crate) net: MultiTaskNet,
    pub(crate) cfg: TrainConfig,
    pub(crate) policy: AugmentPolicy,
    pub(crate) plan: PhasePlan,
    pub(crate) seed: u64,
    pub(crate) config_hash: String,
    pub(crate) adam: AdamState,
    pub(crate) shuffle_rng: Rng,
    pub(crate) augment_rng: Rng,
    pub(crate) progress: Progress,
}

impl Trainer {
    pub fn new(
        net: MultiTaskNet,
        cfg: TrainConfig,
        policy: AugmentPolicy,
        seed: u64,
    ) -> Result<Self> {
        let plan = PhasePlan::standard(net.tasks().len(), &cfg);
        Self::with_plan(net, cfg, policy, plan, seed)
    }

    pub fn with_plan(
        net: MultiTaskNet,
        cfg: TrainConfig,
        policy: AugmentPolicy,
        plan: PhasePlan,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        policy.validate()?;
        let n = net.tasks().len();
        for (phase, _) in &plan.phases {
            if let Phase::Pretrain { task } = phase {
                if *task >= n {
                    return Err(Error::invalid(
                        "phase plan",
                        format!("task index {task} >= {n}"),
                    ));
                }
            }
        }
        if let Some(a) = &cfg.alphas {
            if a.len() != n {
                return Err(Error::invalid(
                    "train.alphas",
                    format!("{} weights for {n} tasks", a.len()),
                ));
            }
        }
        Ok(Trainer {
            adam: AdamState::new(net.params(), cfg.adam),
            net,
            cfg,
            policy,
            plan,
            seed,
            config_hash: String::new(),
            shuffle_rng: Rng::stream(seed, Stream::Shuffle),
            augment_rng: Rng::stream(seed, Stream::Augment),
            progress: Progress::default(),
        })
    }

    /// Hash recorded in checkpoints and validation reports.
    pub fn set_config_hash(&mut self, hash: impl Into<String>) {
        self.config_hash = hash.into();
    }

    pub fn net(&self) -> &MultiTaskNet {
        &self.net
    }

    pub fn into_net(self) -> MultiTaskNet {
        self.net
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn progress(&self) -> Progress {
        self.progress
    }

    pub fn plan(&self) -> &PhasePlan {
        &self.plan
    }

    pub fn is_done(&self) -> bool {
        self.progress.phase >= self.plan.phases.len()
    }

    fn skip_empty_phases(&mut self) {
        while !self.is_done() && self.progress.epoch >= self.plan.phases[self.progress.phase].1 {
            self.progress = Progress {
                phase: self.progress.phase + 1,
                epoch: 0,
            };
        }
    }

    fn alphas(&self, phase: &Phase) -> Vec<f64> {
        let n = self.net.tasks().len();
        match phase {
            Phase::Pretrain { task } => {
                (0..n).map(|i| if i == *task { 1.0 } else { 0.0 }).collect()
            }
            Phase::Joint => self
                .cfg
                .alphas
                .clone()
                .unwrap_or_else(|| self.net.tasks().iter().map(|t| t.alpha).collect()),
        }
    }

    fn phase_name(&self, phase: &Phase) -> String {
        match phase {
            Phase::Pretrain { task } => format!("pretrain:{}", self.net.tasks()[*task].id),
            Phase::Joint => "joint".into(),
        }
    }

    /// Runs the next epoch, or returns `None` once the plan is exhausted.
    /// Each phase starts with fresh optimizer moments and its own learning
    /// rate schedule; shuffling and augmentation draw from streams that run
    /// on across phases.
    pub fn run_epoch(&mut self, data: &TrainData) -> Result<Option<EpochLog>> {
        self.skip_empty_phases();
        if self.is_done() {
            return Ok(None);
        }
        if data.train.is_empty() {
            return Err(Error::invalid("training data", "no training samples"));
        }
        let Progress { phase: pi, epoch } = self.progress;
        let phase = self.plan.phases[pi].0.clone();
        let name = self.phase_name(&phase);
        if epoch == 0 {
            self.adam = AdamState::new(self.net.params(), self.cfg.adam);
        }
        let alphas = self.alphas(&phase);
        let freeze = self.cfg.freeze_trunk_in_pretrain && matches!(phase, Phase::Pretrain { .. });
        let lr = self.cfg.lr_at(epoch);
        let mut order: Vec<usize> = (0..data.train.len()).collect();
        self.shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for (bi, chunk) in order.chunks(self.cfg.batch_size).enumerate() {
            let batch = chunk
                .iter()
                .map(|&i| {
                    augment(
                        &data.train[i],
                        &self.policy,
                        data.window,
                        data.feature_std,
                        &mut self.augment_rng,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let mut g = self.net.backward_batch(&batch, &alphas)?;
            if !g.loss.is_finite() || g.grads.iter().any(|(_, t)| !t.is_finite()) {
                return Err(Error::Divergence {
                    phase: name,
                    epoch,
                    batch: bi,
                });
            }
            if freeze {
                for (pname, t) in g.grads.iter_mut() {
                    if !pname.starts_with("task.") {
                        t.data_mut().fill(0.0);
                    }
                }
            }
            adam_step(self.net.params_mut(), &g.grads, &mut self.adam, lr)?;
            loss_sum += g.loss * batch.len() as f64;
        }
        let train_loss = loss_sum / data.train.len() as f64;
        let (val_loss, val) = if data.val.is_empty() {
            (None, None)
        } else {
            let preds = predict(&self.net, data.val)?;
            let loss = prediction_loss(&self.net, data.val, &preds, &alphas)?;
            let report = report_from_predictions(
                &self.net,
                data.val,
                preds,
                "val",
                self.seed,
                &self.config_hash,
            )?;
            (Some(loss), Some(report))
        };
        self.progress.epoch += 1;
        self.skip_empty_phases();
        Ok(Some(EpochLog {
            phase: name,
            epoch,
            lr,
            train_loss,
            val_loss,
            val,
        }))
    }

    /// Runs every remaining epoch and returns their logs.
    pub fn run(&mut self, data: &TrainData) -> Result<Vec<EpochLog>> {
        let mut logs = Vec::new();
        while let Some(log) = self.run_epoch(data)? {
            logs.push(log);
        }
        Ok(logs)
    }

    /// Runs at most `n` further epochs.
    pub fn run_epochs(&mut self, data: &TrainData, n: usize) -> Result<Vec<EpochLog>> {
        let mut logs = Vec::new();
        for _ in 0..n {
            match self.run_epoch(data)? {
                Some(log) => logs.push(log),
                None => break,
            }
        }
        Ok(logs)
    }
}

/// Weighted mean loss computed from already available predictions.
fn prediction_loss(
    net: &MultiTaskNet,
    samples: &[Sample],
    preds: &[TaskPredictions],
    alphas: &[f64],
) -> Result<f64> {
    let n = samples.len() as f64;
    let mut total = 0.0;
    for ((task, pred), &alpha) in net.tasks().iter().zip(preds).zip(alphas) {
        if alpha == 0.0 {
            continue;
        }
        let mut sum = 0.0;
        for (i, s) in samples.iter().enumerate() {
            sum += match (pred, s.label(&task.id)) {
                (TaskPredictions::Classes { probs, .. }, Some(Label::Class(c))) => {
                    -probs[i][c].max(CE_CLAMP).ln()
                }
                (TaskPredictions::Values(v), Some(Label::Value(y))) => (v[i] - y) * (v[i] - y),
                _ => {
                    return Err(Error::invalid(
                        format!("label for task `{}`", task.id),
                        format!("missing or of the wrong kind on sample {i}"),
                    ))
                }
            };
        }
        total += alpha * sum / n;
    }
    Ok(total)
}

/// Trains only `task_id` for `cfg.pretrain_epochs_per_task` epochs. Other
/// tasks' adapters and heads receive zero gradient and stay bit-identical.
pub fn pretrain_single_task(
    net: MultiTaskNet,
    data: &TrainData,
    task_id: &str,
    cfg: &TrainConfig,
    policy: &AugmentPolicy,
    seed: u64,
) -> Result<(MultiTaskNet, Vec<EpochLog>)> {
    if data.train.is_empty() {
        return Err(Error::invalid("training data", "no training samples"));
    }
    let task = net.task_index(task_id)?;
    let plan = PhasePlan {
        phases: vec![(Phase::Pretrain { task }, cfg.pretrain_epochs_per_task)],
    };
    let mut t = Trainer::with_plan(net, cfg.clone(), policy.clone(), plan, seed)?;
    let logs = t.run(data)?;
    Ok((t.into_net(), logs))
}

/// Runs only the joint phase for `cfg.joint_epochs` epochs.
pub fn train_joint(
    net: MultiTaskNet,
    data: &TrainData,
    cfg: &TrainConfig,
    policy: &AugmentPolicy,
    seed: u64,
) -> Result<(MultiTaskNet, Vec<EpochLog>)> {
    let plan = PhasePlan {
        phases: vec![(Phase::Joint, cfg.joint_epochs)],
    };
    let mut t = Trainer::with_plan(net, cfg.clone(), policy.clone(), plan, seed)?;
    let logs = t.run(data)?;
    Ok((t.into_net(), logs))
}
