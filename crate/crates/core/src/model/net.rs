use serde::{Deserialize, Serialize};

use super::config::{validate_alphas, validate_tasks, ExtractorConfig, TaskKind, TaskSpec};
use super::loss::multi_task_loss;
use crate::data::{Label, Sample};
use crate::error::{Error, Result};
use crate::nn::gradcheck::sign_pattern;
use crate::nn::{
    conv1d_grouped, conv1d_grouped_backward, cross_entropy, dense, dense_backward, global_avg_pool,
    global_avg_pool_backward, relu, relu_backward, softmax, softmax_cross_entropy_backward,
    ConvSpec, ParamSet, Probe, Rng, Tensor,
};

#[derive(Clone, Debug)]
struct ConvLayer {
    spec: ConvSpec,
    weight: String,
    bias: String,
}

impl ConvLayer {
    fn new(prefix: String, spec: ConvSpec) -> Self {
        ConvLayer {
            spec,
            weight: format!("{prefix}.weight"),
            bias: format!("{prefix}.bias"),
        }
    }

    fn forward(&self, p: &ParamSet, x: &Tensor) -> Result<Tensor> {
        conv1d_grouped(
            x,
            p.require(&self.weight)?,
            p.require(&self.bias)?,
            &self.spec,
        )
    }

    /// Accumulates weight/bias gradients into `grads` and returns the input gradient.
    fn backward(
        &self,
        p: &ParamSet,
        x: &Tensor,
        g: &Tensor,
        grads: &mut ParamSet,
    ) -> Result<Tensor> {
        let cg = conv1d_grouped_backward(x, p.require(&self.weight)?, &self.spec, g)?;
        accumulate(grads, &self.weight, &cg.weight)?;
        accumulate(grads, &self.bias, &cg.bias)?;
        Ok(cg.input)
    }
}

/// Residual bottleneck: 1x1 reduce -> 3-tap grouped conv (carries the
/// stride) -> 1x1 expand, added to the shortcut before the final ReLU.
#[derive(Clone, Debug)]
struct Block {
    reduce: ConvLayer,
    grouped: ConvLayer,
    expand: ConvLayer,
    /// `None` is the identity shortcut.
    shortcut: Option<ConvLayer>,
}

#[derive(Clone, Debug)]
struct TaskLayer {
    adapter_w: String,
    adapter_b: String,
    head_w: String,
    head_b: String,
}

impl TaskLayer {
    fn new(id: &str) -> Self {
        TaskLayer {
            adapter_w: format!("task.{id}.adapter.weight"),
            adapter_b: format!("task.{id}.adapter.bias"),
            head_w: format!("task.{id}.head.weight"),
            head_b: format!("task.{id}.head.bias"),
        }
    }
}

#[derive(Clone, Debug)]
struct Layout {
    stem: ConvLayer,
    blocks: Vec<Block>,
    tasks: Vec<TaskLayer>,
}

/// Name, shape and fan-in of every parameter, in canonical order.
type ParamDecl = (String, Vec<usize>, usize);

fn conv_spec(cin: usize, cout: usize, kernel: usize, stride: usize, groups: usize) -> ConvSpec {
    ConvSpec {
        in_channels: cin,
        out_channels: cout,
        kernel,
        stride,
        padding: kernel / 2,
        groups,
    }
}

fn build_layout(cfg: &ExtractorConfig, tasks: &[TaskSpec]) -> (Layout, Vec<ParamDecl>) {
    let mut decls = Vec::new();
    let mut declare = |layer: &ConvLayer| {
        let s = layer.spec;
        decls.push((
            layer.weight.clone(),
            s.weight_shape().to_vec(),
            s.in_per_group() * s.kernel,
        ));
        decls.push((layer.bias.clone(), vec![s.out_channels], 0));
    };
    let stem = ConvLayer::new(
        "stem".into(),
        conv_spec(cfg.in_features, cfg.stem_channels, cfg.stem_kernel, 1, 1),
    );
    declare(&stem);
    let width = cfg.cardinality * cfg.bottleneck_width;
    let mut cin = cfg.stem_channels;
    let mut blocks = Vec::new();
    for (si, stage) in cfg.stages.iter().enumerate() {
        for bi in 0..stage.blocks {
            let prefix = format!("stage{si}.block{bi}");
            let stride = if bi == 0 { stage.stride } else { 1 };
            let cout = stage.out_channels;
            let block = Block {
                reduce: ConvLayer::new(format!("{prefix}.reduce"), conv_spec(cin, width, 1, 1, 1)),
                grouped: ConvLayer::new(
                    format!("{prefix}.grouped"),
                    conv_spec(width, width, 3, stride, cfg.cardinality),
                ),
                expand: ConvLayer::new(format!("{prefix}.expand"), conv_spec(width, cout, 1, 1, 1)),
                shortcut: (cin != cout || stride != 1).then(|| {
                    ConvLayer::new(
                        format!("{prefix}.shortcut"),
                        ConvSpec {
                            padding: 0,
                            ..conv_spec(cin, cout, 1, stride, 1)
                        },
                    )
                }),
            };
            declare(&block.reduce);
            declare(&block.grouped);
            declare(&block.expand);
            if let Some(sc) = &block.shortcut {
                declare(sc);
            }
            blocks.push(block);
            cin = cout;
        }
    }
    let mut task_layers = Vec::new();
    for t in tasks {
        let l = TaskLayer::new(&t.id);
        let k = t.kind.output_dim();
        decls.push((
            l.adapter_w.clone(),
            vec![t.adapter_dim, cfg.final_channels],
            cfg.final_channels,
        ));
        decls.push((l.adapter_b.clone(), vec![t.adapter_dim], 0));
        decls.push((l.head_w.clone(), vec![k, t.adapter_dim], t.adapter_dim));
        decls.push((l.head_b.clone(), vec![k], 0));
        task_layers.push(l);
    }
    (
        Layout {
            stem,
            blocks,
            tasks: task_layers,
        },
        decls,
    )
}

/// Serializable description of a network's architecture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub extractor: ExtractorConfig,
    pub tasks: Vec<TaskSpec>,
}

/// ResNeXt trunk plus one adapter and head per task.
#[derive(Clone, Debug)]
pub struct MultiTaskNet {
    arch: Architecture,
    params: ParamSet,
    layout: Layout,
}

/// Per-task model output for a batch.
#[derive(Clone, Debug, PartialEq)]
pub enum TaskOutput {
    /// `[B x K]` class probabilities.
    Probabilities(Tensor),
    /// One scalar per sample.
    Values(Vec<f64>),
}

/// Single-sample head output.
#[derive(Clone, Debug, PartialEq)]
pub enum Prediction {
    Distribution(Vec<f64>),
    Scalar(f64),
}

struct BlockCache {
    reduce_pre: Tensor,
    reduce_act: Tensor,
    grouped_pre: Tensor,
    grouped_act: Tensor,
    out_pre: Tensor,
}

struct TaskCache {
    adapter_pre: Tensor,
    features: Tensor,
    /// Logits for classification, values for regression, `[B x K]`.
    head: Tensor,
}

/// Intermediate values of one forward pass, kept for the backward pass.
pub struct ForwardPass {
    x: Tensor,
    stem_pre: Tensor,
    /// `acts[0]` is the stem output, `acts[i + 1]` the output of block `i`.
    acts: Vec<Tensor>,
    blocks: Vec<BlockCache>,
    pooled: Tensor,
    tasks: Vec<TaskCache>,
}

impl ForwardPass {
    /// The shared feature map `[B x T' x C]`.
    pub fn shared_features(&self) -> &Tensor {
        self.acts.last().expect("stem output always present")
    }

    pub fn pooled(&self) -> &Tensor {
        &self.pooled
    }

    pub fn output(&self, task: usize) -> TaskOutput {
        let head = &self.tasks[task].head;
        if head.shape()[1] == 1 {
            TaskOutput::Values(head.data().to_vec())
        } else {
            TaskOutput::Probabilities(softmax(head))
        }
    }

    /// Fingerprint of every ReLU's sign pattern.
    pub fn relu_pattern(&self) -> u64 {
        let mut h = sign_pattern(0, self.stem_pre.data());
        for b in &self.blocks {
            h = sign_pattern(h, b.reduce_pre.data());
            h = sign_pattern(h, b.grouped_pre.data());
            h = sign_pattern(h, b.out_pre.data());
        }
        for t in &self.tasks {
            h = sign_pattern(h, t.adapter_pre.data());
        }
        h
    }
}

/// Loss and gradients for one batch.
#[derive(Clone, Debug)]
pub struct BatchGradients {
    /// Joint loss `sum_i alpha_i * L_i` over tasks with nonzero weight.
    pub loss: f64,
    /// Mean per-sample loss of each task, when every sample carries its label.
    pub task_losses: Vec<Option<f64>>,
    pub grads: ParamSet,
}

fn accumulate(grads: &mut ParamSet, name: &str, g: &Tensor) -> Result<()> {
    grads
        .get_mut(name)
        .ok_or_else(|| Error::invalid("parameter name", format!("`{name}` not found")))?
        .add_scaled(g, 1.0)
}

fn add(a: &Tensor, b: &Tensor) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    Tensor::from_parts(a.shape().to_vec(), data)
}

/// Stacks sample windows into `[B x T x F]`.
pub fn stack_windows(samples: &[Sample]) -> Result<Tensor> {
    let first = samples
        .first()
        .ok_or_else(|| Error::invalid("batch", "empty batch"))?;
    let (t, f) = first.dims();
    let mut data = Vec::with_capacity(samples.len() * t * f);
    for (i, s) in samples.iter().enumerate() {
        if s.x.shape() != [t, f] {
            return Err(Error::shape(
                "stack_windows",
                format!(
                    "sample {i} has shape {:?}, expected [{t}, {f}]",
                    s.x.shape()
                ),
            ));
        }
        data.extend_from_slice(s.x.data());
    }
    Ok(Tensor::from_parts(vec![samples.len(), t, f], data))
}

impl MultiTaskNet {
    /// Builds a network with fan-in uniform initialization: weights drawn from
    /// `U(-sqrt(1/fan_in), sqrt(1/fan_in))` in canonical parameter order, biases zero.
    pub fn build(cfg: &ExtractorConfig, tasks: &[TaskSpec], rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        validate_tasks(tasks)?;
        let (layout, decls) = build_layout(cfg, tasks);
        let mut params = ParamSet::new();
        for (name, shape, fan_in) in decls {
            let t = if fan_in == 0 {
                Tensor::zeros(shape)
            } else {
                let bound = (1.0 / fan_in as f64).sqrt();
                Tensor::from_fn(shape, |_| rng.uniform_in(-bound, bound))
            };
            params.insert(name, t)?;
        }
        Ok(MultiTaskNet {
            arch: Architecture {
                extractor: cfg.clone(),
                tasks: tasks.to_vec(),
            },
            params,
            layout,
        })
    }

    /// Reassembles a network from saved parameters, checking names and shapes.
    pub fn from_params(arch: Architecture, params: ParamSet) -> Result<Self> {
        arch.extractor.validate()?;
        validate_tasks(&arch.tasks)?;
        let (layout, decls) = build_layout(&arch.extractor, &arch.tasks);
        let mut expected = ParamSet::new();
        for (name, shape, _) in decls {
            expected.insert(name, Tensor::zeros(shape))?;
        }
        expected.check_same_layout(&params, "MultiTaskNet::from_params")?;
        Ok(MultiTaskNet {
            arch,
            params,
            layout,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn config(&self) -> &ExtractorConfig {
        &self.arch.extractor
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.arch.tasks
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn task_index(&self, task_id: &str) -> Result<usize> {
        self.arch
            .tasks
            .iter()
            .position(|t| t.id == task_id)
            .ok_or_else(|| Error::invalid("task id", format!("unknown task `{task_id}`")))
    }

    /// Names of the parameters owned by task `task` (adapter and head).
    pub fn task_param_names(&self, task: usize) -> [&str; 4] {
        let l = &self.layout.tasks[task];
        [&l.adapter_w, &l.adapter_b, &l.head_w, &l.head_b]
    }

    pub fn is_task_param(&self, name: &str) -> bool {
        name.starts_with("task.")
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let (_, t, f) = x.batch_dims("extract_features")?;
        if f != self.arch.extractor.in_features {
            return Err(Error::shape(
                "extract_features",
                format!(
                    "input has {f} features, model expects {}",
                    self.arch.extractor.in_features
                ),
            ));
        }
        self.arch.extractor.output_len(t)?;
        Ok(())
    }

    fn trunk(&self, p: &ParamSet, x: &Tensor) -> Result<(Tensor, Vec<Tensor>, Vec<BlockCache>)> {
        let stem_pre = self.layout.stem.forward(p, x)?;
        let mut acts = vec![relu(&stem_pre)];
        let mut caches = Vec::with_capacity(self.layout.blocks.len());
        for block in &self.layout.blocks {
            let input = acts.last().expect("nonempty");
            let reduce_pre = block.reduce.forward(p, input)?;
            let reduce_act = relu(&reduce_pre);
            let grouped_pre = block.grouped.forward(p, &reduce_act)?;
            let grouped_act = relu(&grouped_pre);
            let expanded = block.expand.forward(p, &grouped_act)?;
            let out_pre = match &block.shortcut {
                Some(sc) => add(&expanded, &sc.forward(p, input)?),
                None => add(&expanded, input),
            };
            acts.push(relu(&out_pre));
            caches.push(BlockCache {
                reduce_pre,
                reduce_act,
                grouped_pre,
                grouped_act,
                out_pre,
            });
        }
        Ok((stem_pre, acts, caches))
    }

    /// Shared feature map: `[T x F] -> [T' x C]` (or batched `[B x T x F] -> [B x T' x C]`).
    pub fn extract_features(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let (_, mut acts, _) = self.trunk(&self.params, x)?;
        Ok(acts.pop().expect("nonempty"))
    }

    /// Task-specific features `relu(W_i * pool(F_shared) + b_i)`.
    pub fn task_adapter(&self, task_id: &str, shared: &Tensor) -> Result<Tensor> {
        let l = &self.layout.tasks[self.task_index(task_id)?];
        let pooled = global_avg_pool(shared)?;
        let pre = dense(
            &pooled,
            self.params.require(&l.adapter_w)?,
            self.params.require(&l.adapter_b)?,
        )?;
        Ok(relu(&pre))
    }

    /// Head output for one sample's adapter features `F_i`.
    pub fn head_forward(&self, task_id: &str, features: &Tensor) -> Result<Prediction> {
        let i = self.task_index(task_id)?;
        let l = &self.layout.tasks[i];
        let d = self.arch.tasks[i].adapter_dim;
        if features.shape() != [d] {
            return Err(Error::shape(
                "head_forward",
                format!("features shape {:?}, expected [{d}]", features.shape()),
            ));
        }
        let out = dense(
            features,
            self.params.require(&l.head_w)?,
            self.params.require(&l.head_b)?,
        )?;
        Ok(match self.arch.tasks[i].kind {
            TaskKind::Classification { .. } => Prediction::Distribution(softmax(&out).into_data()),
            TaskKind::Regression => Prediction::Scalar(out.data()[0]),
        })
    }

    fn forward_with(&self, p: &ParamSet, x: &Tensor) -> Result<ForwardPass> {
        self.check_input(x)?;
        let x3 = if x.rank() == 2 {
            x.clone().reshape([1, x.shape()[0], x.shape()[1]])?
        } else {
            x.clone()
        };
        let (stem_pre, acts, blocks) = self.trunk(p, &x3)?;
        let pooled = global_avg_pool(acts.last().expect("nonempty"))?;
        let mut tasks = Vec::with_capacity(self.layout.tasks.len());
        for l in &self.layout.tasks {
            let adapter_pre = dense(&pooled, p.require(&l.adapter_w)?, p.require(&l.adapter_b)?)?;
            let features = relu(&adapter_pre);
            let head = dense(&features, p.require(&l.head_w)?, p.require(&l.head_b)?)?;
            tasks.push(TaskCache {
                adapter_pre,
                features,
                head,
            });
        }
        Ok(ForwardPass {
            x: x3,
            stem_pre,
            acts,
            blocks,
            pooled,
            tasks,
        })
    }

    /// Full forward pass over a `[B x T x F]` (or single `[T x F]`) input.
    pub fn forward(&self, x: &Tensor) -> Result<ForwardPass> {
        self.forward_with(&self.params, x)
    }

    /// `alphas`-weighted joint loss and the mean loss of each labeled task.
    fn losses(
        &self,
        fp: &ForwardPass,
        samples: &[Sample],
        alphas: &[f64],
    ) -> Result<(f64, Vec<Option<f64>>)> {
        let b = samples.len() as f64;
        let mut task_losses = Vec::with_capacity(self.arch.tasks.len());
        let mut weighted = Vec::new();
        for (i, task) in self.arch.tasks.iter().enumerate() {
            let labels = collect_labels(samples, task, alphas[i] > 0.0)?;
            let Some(labels) = labels else {
                task_losses.push(None);
                continue;
            };
            let head = &fp.tasks[i].head;
            let k = head.shape()[1];
            let mut sum = 0.0;
            match task.kind {
                TaskKind::Classification { .. } => {
                    let probs = softmax(head);
                    for (row, label) in probs.data().chunks(k).zip(&labels) {
                        sum += cross_entropy(row, label.class()?)?;
                    }
                }
                TaskKind::Regression => {
                    for (&pred, label) in head.data().iter().zip(&labels) {
                        let d = pred - label.value()?;
                        sum += d * d;
                    }
                }
            }
            let mean = sum / b;
            task_losses.push(Some(mean));
            if alphas[i] > 0.0 {
                weighted.push((mean, alphas[i]));
            }
        }
        Ok((multi_task_loss(&weighted)?, task_losses))
    }

    fn check_alphas(&self, alphas: &[f64]) -> Result<()> {
        if alphas.len() != self.arch.tasks.len() {
            return Err(Error::invalid(
                "alpha",
                format!(
                    "{} weights for {} tasks",
                    alphas.len(),
                    self.arch.tasks.len()
                ),
            ));
        }
        validate_alphas(alphas)
    }

    /// Joint loss and its gradient for every parameter. Per-task losses are
    /// batch means; tasks with zero weight contribute nothing, not even zeros
    /// multiplied through.
    pub fn backward_batch(&self, samples: &[Sample], alphas: &[f64]) -> Result<BatchGradients> {
        self.check_alphas(alphas)?;
        let x = stack_windows(samples)?;
        let fp = self.forward(&x)?;
        let (loss, task_losses) = self.losses(&fp, samples, alphas)?;
        let p = &self.params;
        let mut grads = p.zeros_like();
        let b = samples.len();
        let c = self.arch.extractor.final_channels;
        let mut g_pooled = Tensor::zeros([b, c]);
        for (i, task) in self.arch.tasks.iter().enumerate() {
            let alpha = alphas[i];
            if alpha <= 0.0 {
                continue;
            }
            let labels = collect_labels(samples, task, true)?.expect("required labels present");
            let cache = &fp.tasks[i];
            let k = cache.head.shape()[1];
            let scale = alpha / b as f64;
            let mut g_head = Vec::with_capacity(b * k);
            match task.kind {
                TaskKind::Classification { .. } => {
                    let probs = softmax(&cache.head);
                    for (row, label) in probs.data().chunks(k).zip(&labels) {
                        let g = softmax_cross_entropy_backward(row, label.class()?)?;
                        g_head.extend(g.into_iter().map(|v| v * scale));
                    }
                }
                TaskKind::Regression => {
                    for (&pred, label) in cache.head.data().iter().zip(&labels) {
                        g_head.push(scale * 2.0 * (pred - label.value()?));
                    }
                }
            }
            let g_head = Tensor::from_parts(vec![b, k], g_head);
            let l = &self.layout.tasks[i];
            let hg = dense_backward(&cache.features, p.require(&l.head_w)?, &g_head)?;
            accumulate(&mut grads, &l.head_w, &hg.weight)?;
            accumulate(&mut grads, &l.head_b, &hg.bias)?;
            let g_adapter = relu_backward(&cache.adapter_pre, &hg.input)?;
            let ag = dense_backward(&fp.pooled, p.require(&l.adapter_w)?, &g_adapter)?;
            accumulate(&mut grads, &l.adapter_w, &ag.weight)?;
            accumulate(&mut grads, &l.adapter_b, &ag.bias)?;
            g_pooled.add_scaled(&ag.input, 1.0)?;
        }
        let mut g = global_avg_pool_backward(fp.shared_features().shape(), &g_pooled)?;
        for (bi, block) in self.layout.blocks.iter().enumerate().rev() {
            let cache = &fp.blocks[bi];
            let input = &fp.acts[bi];
            let g_pre = relu_backward(&cache.out_pre, &g)?;
            let mut g_input = match &block.shortcut {
                Some(sc) => sc.backward(p, input, &g_pre, &mut grads)?,
                None => g_pre.clone(),
            };
            let g_gact = block
                .expand
                .backward(p, &cache.grouped_act, &g_pre, &mut grads)?;
            let g_gpre = relu_backward(&cache.grouped_pre, &g_gact)?;
            let g_ract = block
                .grouped
                .backward(p, &cache.reduce_act, &g_gpre, &mut grads)?;
            let g_rpre = relu_backward(&cache.reduce_pre, &g_ract)?;
            let g_main = block.reduce.backward(p, input, &g_rpre, &mut grads)?;
            g_input.add_scaled(&g_main, 1.0)?;
            g = g_input;
        }
        let g_stem = relu_backward(&fp.stem_pre, &g)?;
        self.layout.stem.backward(p, &fp.x, &g_stem, &mut grads)?;
        Ok(BatchGradients {
            loss,
            task_losses,
            grads,
        })
    }

    /// Mean-over-batch joint loss and the gradient of every parameter.
    pub fn backward_all(&self, samples: &[Sample], alphas: &[f64]) -> Result<(f64, ParamSet)> {
        let r = self.backward_batch(samples, alphas)?;
        Ok((r.loss, r.grads))
    }

    /// Joint loss at parameters `params` (same layout as the model's), with the
    /// ReLU fingerprint, for finite-difference checks.
    pub fn loss_probe(
        &self,
        params: &ParamSet,
        samples: &[Sample],
        alphas: &[f64],
    ) -> Result<Probe> {
        self.check_alphas(alphas)?;
        let x = stack_windows(samples)?;
        let fp = self.forward_with(params, &x)?;
        let (loss, _) = self.losses(&fp, samples, alphas)?;
        Ok(Probe {
            value: loss,
            pattern: fp.relu_pattern(),
        })
    }
}

impl Label {
    fn class(self) -> Result<usize> {
        match self {
            Label::Class(c) => Ok(c),
            Label::Value(_) => Err(Error::invalid(
                "label",
                "expected a class index, got a real value",
            )),
        }
    }

    fn value(self) -> Result<f64> {
        match self {
            Label::Value(v) => Ok(v),
            Label::Class(_) => Err(Error::invalid(
                "label",
                "expected a real value, got a class index",
            )),
        }
    }
}

/// Labels of `task` across the batch. A missing label is an error when
/// `required`, otherwise the whole task is reported as unlabeled.
fn collect_labels(
    samples: &[Sample],
    task: &TaskSpec,
    required: bool,
) -> Result<Option<Vec<Label>>> {
    let mut out = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        match s.label(&task.id) {
            Some(l) => {
                if let (TaskKind::Classification { classes }, Label::Class(c)) = (task.kind, l) {
                    if c >= classes {
                        return Err(Error::invalid(
                            format!("label for task `{}`", task.id),
                            format!("class {c} out of range for {classes} classes"),
                        ));
                    }
                }
                out.push(l);
            }
            None if required => {
                return Err(Error::invalid(
                    format!("label for task `{}`", task.id),
                    format!(
                        "missing on sample {i} (anchor {}) while its weight is nonzero",
                        s.anchor
                    ),
                ))
            }
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}
