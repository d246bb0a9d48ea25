//! Trains a small model for a few epochs, checkpoints, resumes in a fresh
//! trainer, and confirms the result matches an uninterrupted run bit for bit.
//!
//! `cargo run --release --example checkpoint_resume`

use resnext_mtl::data::{
    build_dataset, generate, AugmentPolicy, PipelineOptions, SplitName, SynthConfig,
};
use resnext_mtl::model::{build_model, TaskSpec};
use resnext_mtl::nn::{Rng, Stream};
use resnext_mtl::train::{Checkpoint, TrainConfig, TrainData, Trainer};
use resnext_mtl::verify::tiny_extractor;

fn main() -> resnext_mtl::Result<()> {
    let seed = 5;
    let synth = SynthConfig {
        n_days: 400,
        ..SynthConfig::default()
    };
    let market = generate(&synth, seed)?;
    let tasks = vec![
        TaskSpec::classification("direction", 2, 0.5),
        TaskSpec::regression("log_return", 0.5),
    ];
    let opts = PipelineOptions {
        window: 8,
        ..PipelineOptions::default()
    };
    let ds = build_dataset(&market.prices, &market.macros, &opts, &tasks)?;
    let policy = AugmentPolicy::default();
    let train = ds.split_samples(SplitName::Train, policy.crop_slack)?;
    let val = ds.split_samples(SplitName::Val, 0)?;
    let std = ds.feature_std();
    let data = TrainData {
        train: &train,
        val: &val,
        window: ds.window,
        feature_std: &std,
    };
    let cfg = TrainConfig {
        pretrain_epochs_per_task: 1,
        joint_epochs: 3,
        ..TrainConfig::default()
    };
    let model = tiny_extractor(ds.n_features(), 2, false);
    let fresh = || -> resnext_mtl::Result<Trainer> {
        let net = build_model(&model, &tasks, &mut Rng::stream(seed, Stream::Init))?;
        Trainer::new(net, cfg.clone(), policy.clone(), seed)
    };

    let mut straight = fresh()?;
    straight.run(&data)?;

    let mut first = fresh()?;
    first.run_epochs(&data, 3)?;
    let bytes = first.checkpoint("example").to_bytes()?;
    println!(
        "checkpoint after {:?}: {} bytes",
        first.progress(),
        bytes.len()
    );
    let mut resumed = Trainer::resume(Checkpoint::from_bytes(&bytes)?)?;
    resumed.run(&data)?;

    let same = resumed.net().params().bit_eq(straight.net().params());
    println!("resumed run matches uninterrupted run: {same}");

    let mut corrupt = bytes.clone();
    corrupt[bytes.len() / 2] ^= 1;
    match Checkpoint::from_bytes(&corrupt) {
        Err(e) => println!("corrupted file rejected: {e}"),
        Ok(_) => println!("corrupted file was accepted"),
    }
    Ok(())
}
