use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use crate::data::{
    build_dataset, generate, load_tables, write_macro, write_prices, Dataset, Label, SplitName,
};
use crate::error::{Error, Result};
use crate::eval::{
    accuracy, baseline_predict, evaluate, regression_metrics, BaselineKind, MetricsReport,
};
use crate::model::{build_model, TaskKind};
use crate::nn::{Rng, Stream};
use crate::train::{Checkpoint, EpochLog, TrainData, Trainer};
use crate::verify::{gradcheck_suite, SuiteReport, DEFAULT_EPS, DEFAULT_TOLERANCE};

pub const PRICES_FILE: &str = "prices.csv";
pub const MACRO_FILE: &str = "macro.csv";
pub const DATASET_FILE: &str = "dataset.json";
pub const SUMMARY_FILE: &str = "ingest_summary.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.gcmt";
pub const LOG_FILE: &str = "train_log.jsonl";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_resolved(cfg: &RunConfig) -> Result<()> {
    let path = cfg.out_dir.join(RESOLVED_CONFIG_FILE);
    fs::write(&path, cfg.to_toml()?).map_err(|e| Error::io(&path, e))
}

#[derive(Clone, Debug)]
pub struct SynthOutcome {
    pub prices: PathBuf,
    pub macros: PathBuf,
    pub bayes_accuracy: f64,
    pub bayes_rmse: f64,
}

/// Writes planted-signal price and macro CSVs into the output directory.
pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthOutcome> {
    cfg.validate()?;
    let data = generate(&cfg.synth, cfg.seed)?;
    ensure_dir(&cfg.out_dir)?;
    let prices = cfg.out_dir.join(PRICES_FILE);
    let macros = cfg.out_dir.join(MACRO_FILE);
    write_prices(create(&prices)?, &data.prices).map_err(|e| Error::io(&prices, e))?;
    write_macro(create(&macros)?, &data.macros).map_err(|e| Error::io(&macros, e))?;
    Ok(SynthOutcome {
        prices,
        macros,
        bayes_accuracy: cfg.synth.bayes_accuracy(),
        bayes_rmse: cfg.synth.bayes_rmse(),
    })
}

/// Runs the preprocessing pipeline and writes the dataset artifact and summary.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<Dataset> {
    cfg.validate()?;
    let (prices, macros) =
        load_tables(&cfg.prices_path(), &cfg.macros_path()).map_err(|e| e.in_stage("load"))?;
    let mut ds = build_dataset(&prices, &macros, &cfg.data.pipeline(), &cfg.tasks)?;
    if ds.n_features() != cfg.model.in_features {
        return Err(Error::invalid(
            "model.in_features",
            format!(
                "{} but the data has {} feature columns",
                cfg.model.in_features,
                ds.n_features()
            ),
        ));
    }
    ds.seed = cfg.seed;
    ds.config_hash = cfg.content_hash()?;
    ensure_dir(&cfg.out_dir)?;
    write_resolved(cfg)?;
    ds.save(&cfg.out_dir.join(DATASET_FILE))?;
    let summary = cfg.out_dir.join(SUMMARY_FILE);
    fs::write(&summary, ds.summary.to_text()).map_err(|e| Error::io(&summary, e))?;
    Ok(ds)
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let ds = Dataset::load(&cfg.out_dir.join(DATASET_FILE))?;
    let ids: Vec<String> = cfg.tasks.iter().map(|t| t.id.clone()).collect();
    if ds.tasks != ids {
        return Err(Error::invalid(
            "tasks",
            format!(
                "config declares {ids:?}, dataset was labeled for {:?}",
                ds.tasks
            ),
        ));
    }
    if ds.n_features() != cfg.model.in_features || ds.window != cfg.data.window {
        return Err(Error::invalid(
            "dataset",
            format!(
                "dataset has {} features and window {}, config expects {} and {}",
                ds.n_features(),
                ds.window,
                cfg.model.in_features,
                cfg.data.window
            ),
        ));
    }
    Ok(ds)
}

fn norm_reference(ds: &Dataset) -> String {
    format!(
        "{}:{}..{}",
        ds.config_hash, ds.norm.fit_start, ds.norm.fit_end
    )
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub logs: Vec<EpochLog>,
}

/// Pretrains each head, then trains jointly, checkpointing after every
/// epoch. With `resume`, continues from that checkpoint instead.
pub fn cmd_train(cfg: &RunConfig, resume: Option<&Path>) -> Result<TrainOutcome> {
    cfg.validate()?;
    let hash = cfg.content_hash()?;
    let ds = load_dataset(cfg)?;
    let mut trainer = match resume {
        Some(path) => {
            let ckpt = Checkpoint::load(path)?;
            if ckpt.meta.config_hash != hash {
                return Err(Error::Checkpoint(format!(
                    "{} was written under config {}, current config is {hash}",
                    path.display(),
                    ckpt.meta.config_hash
                )));
            }
            Trainer::resume(ckpt)?
        }
        None => {
            let net = build_model(
                &cfg.model,
                &cfg.tasks,
                &mut Rng::stream(cfg.seed, Stream::Init),
            )?;
            let mut t = Trainer::new(net, cfg.train.clone(), cfg.augment.clone(), cfg.seed)?;
            t.set_config_hash(hash.clone());
            t
        }
    };
    let train = ds.split_samples(SplitName::Train, cfg.augment.crop_slack)?;
    let val = ds.split_samples(SplitName::Val, 0)?;
    let std = ds.feature_std();
    let data = TrainData {
        train: &train,
        val: &val,
        window: ds.window,
        feature_std: &std,
    };
    ensure_dir(&cfg.out_dir)?;
    write_resolved(cfg)?;
    let log_path = cfg.out_dir.join(LOG_FILE);
    let log_file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(resume.is_some())
        .truncate(resume.is_none())
        .open(&log_path)
        .map_err(|e| Error::io(&log_path, e))?;
    let mut log = BufWriter::new(log_file);
    let ckpt_path = cfg.out_dir.join(CHECKPOINT_FILE);
    let norm = norm_reference(&ds);
    trainer.checkpoint(&norm).save(&ckpt_path)?;
    let mut logs = Vec::new();
    while let Some(entry) = trainer.run_epoch(&data)? {
        writeln!(log, "{}", entry.to_json_line()?).map_err(|e| Error::io(&log_path, e))?;
        log.flush().map_err(|e| Error::io(&log_path, e))?;
        trainer.checkpoint(&norm).save(&ckpt_path)?;
        logs.push(entry);
    }
    Ok(TrainOutcome {
        checkpoint: ckpt_path,
        logs,
    })
}

/// Evaluates a checkpoint on one split and writes `metrics_<split>.json`.
pub fn cmd_eval(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    split: SplitName,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let default = cfg.out_dir.join(CHECKPOINT_FILE);
    let ckpt = Checkpoint::load(checkpoint.unwrap_or(&default))?;
    let net = ckpt.network()?;
    if net.tasks().iter().map(|t| &t.id).ne(ds.tasks.iter()) {
        return Err(Error::invalid(
            "checkpoint",
            "task list differs from the dataset's",
        ));
    }
    let samples = ds.split_samples(split, 0)?;
    let report = evaluate(
        &net,
        &samples,
        split.as_str(),
        cfg.seed,
        &cfg.content_hash()?,
    )?;
    let path = cfg.out_dir.join(format!("metrics_{}.json", split.as_str()));
    fs::write(&path, report.to_json()?).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

/// Majority-class and mean-target baselines fitted on the training split,
/// scored on `split`, as one text line per task.
pub fn baseline_text(cfg: &RunConfig, split: SplitName) -> Result<String> {
    let ds = load_dataset(cfg)?;
    let mut out = String::new();
    for task in &cfg.tasks {
        let labels = |idx: &[usize]| -> Vec<Label> {
            idx.iter()
                .map(|&i| ds.samples[i].labels[&task.id])
                .collect()
        };
        let train = labels(ds.indices(SplitName::Train));
        let eval = labels(ds.indices(split));
        if eval.is_empty() {
            continue;
        }
        match task.kind {
            TaskKind::Classification { .. } => {
                let p = baseline_predict(BaselineKind::Majority, &train, eval.len())?;
                let as_class = |v: &[Label]| {
                    v.iter()
                        .map(|l| if let Label::Class(c) = l { *c } else { 0 })
                        .collect::<Vec<_>>()
                };
                let acc = accuracy(&as_class(&p), &as_class(&eval))?;
                out.push_str(&format!(
                    "  {:<16} majority baseline Acc {:.1}\n",
                    task.id,
                    acc * 100.0
                ));
            }
            TaskKind::Regression => {
                let p = baseline_predict(BaselineKind::Mean, &train, eval.len())?;
                let as_value = |v: &[Label]| {
                    v.iter()
                        .map(|l| if let Label::Value(x) = l { *x } else { 0.0 })
                        .collect::<Vec<_>>()
                };
                let m = regression_metrics(&as_value(&p), &as_value(&eval))?;
                out.push_str(&format!(
                    "  {:<16} mean baseline MAE {:.6}  RMSE {:.6}\n",
                    task.id, m.mae, m.rmse
                ));
            }
        }
    }
    Ok(out)
}

/// Runs the finite-difference suite. The caller treats any failed case as a
/// numerical failure.
pub fn cmd_gradcheck(cfg: &RunConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    gradcheck_suite(cfg.seed, DEFAULT_EPS, DEFAULT_TOLERANCE)
}
