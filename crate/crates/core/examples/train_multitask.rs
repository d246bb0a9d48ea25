//! Synthesizes a planted-signal market, trains both heads, and reports test metrics.
//!
//! `cargo run --release --example train_multitask -- [n_days] [joint_epochs]`

use std::time::Instant;

use resnext_mtl::data::{
    build_dataset, generate, AugmentPolicy, PipelineOptions, SplitName, SynthConfig,
};
use resnext_mtl::eval::evaluate;
use resnext_mtl::model::{build_model, ExtractorConfig, TaskSpec};
use resnext_mtl::nn::{Rng, Stream};
use resnext_mtl::train::{TrainConfig, TrainData, Trainer};

fn main() -> resnext_mtl::Result<()> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let synth = SynthConfig {
        n_days: args.first().copied().unwrap_or(4_000),
        ..SynthConfig::default()
    };
    let seed = 7;
    let market = generate(&synth, seed)?;
    let tasks = vec![
        TaskSpec::classification("direction", 2, 0.5),
        TaskSpec::regression("log_return", 0.5),
    ];
    let ds = build_dataset(
        &market.prices,
        &market.macros,
        &PipelineOptions::default(),
        &tasks,
    )?;
    print!("{}", ds.summary.to_text());

    let policy = AugmentPolicy::default();
    let train = ds.split_samples(SplitName::Train, policy.crop_slack)?;
    let val = ds.split_samples(SplitName::Val, 0)?;
    let test = ds.split_samples(SplitName::Test, 0)?;
    let std = ds.feature_std();
    let data = TrainData {
        train: &train,
        val: &val,
        window: ds.window,
        feature_std: &std,
    };

    let net = build_model(
        &ExtractorConfig::default(),
        &tasks,
        &mut Rng::stream(seed, Stream::Init),
    )?;
    let cfg = TrainConfig {
        joint_epochs: args.get(1).copied().unwrap_or(6),
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(net, cfg, policy, seed)?;
    loop {
        let started = Instant::now();
        let Some(log) = trainer.run_epoch(&data)? else {
            break;
        };
        println!(
            "{} epoch {} lr {:.2e} train {:.5} ({:.1}s)",
            log.phase,
            log.epoch,
            log.lr,
            log.train_loss,
            started.elapsed().as_secs_f64()
        );
        if let Some(val) = &log.val {
            print!("{}", val.to_text());
        }
    }
    let report = evaluate(trainer.net(), &test, "test", seed, "")?;
    print!("{}", report.to_text());
    println!(
        "bayes accuracy {:.4}, bayes rmse {:.5}, zero-prediction rmse {:.5}",
        synth.bayes_accuracy(),
        synth.bayes_rmse(),
        synth.baseline_rmse()
    );
    Ok(())
}
