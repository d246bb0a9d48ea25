use resnext_mtl::data::{
    build_dataset, generate, AugmentPolicy, PipelineOptions, SplitName, SynthConfig,
};
use resnext_mtl::model::{build_model, TaskSpec};
use resnext_mtl::nn::{Rng, Stream};
use resnext_mtl::train::{Checkpoint, TrainConfig, TrainData, Trainer};
use resnext_mtl::verify::tiny_extractor;

fn trained() -> Checkpoint {
    let tasks = [
        TaskSpec::classification("up", 2, 0.5),
        TaskSpec::regression("ret", 0.5),
    ];
    let market = generate(
        &SynthConfig {
            n_days: 300,
            ..SynthConfig::default()
        },
        1,
    )
    .unwrap();
    let opts = PipelineOptions {
        window: 8,
        ..PipelineOptions::default()
    };
    let ds = build_dataset(&market.prices, &market.macros, &opts, &tasks).unwrap();
    let policy = AugmentPolicy::default();
    let train = ds
        .split_samples(SplitName::Train, policy.crop_slack)
        .unwrap();
    let val = ds.split_samples(SplitName::Val, 0).unwrap();
    let std = ds.feature_std();
    let data = TrainData {
        train: &train,
        val: &val,
        window: 8,
        feature_std: &std,
    };
    let net = build_model(
        &tiny_extractor(8, 2, false),
        &tasks,
        &mut Rng::stream(1, Stream::Init),
    )
    .unwrap();
    let cfg = TrainConfig {
        pretrain_epochs_per_task: 1,
        joint_epochs: 1,
        ..TrainConfig::default()
    };
    let mut t = Trainer::new(net, cfg, policy, 1).unwrap();
    t.run_epochs(&data, 2).unwrap();
    t.checkpoint("norm")
}

#[test]
fn round_trip_through_file() {
    let ckpt = trained();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.gcmt");
    ckpt.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ckpt);
    assert!(back.params.bit_eq(&ckpt.params));
    assert_eq!(back.network().unwrap().params().len(), ckpt.params.len());
}

#[test]
fn corruption_is_detected() {
    let bytes = trained().to_bytes().unwrap();
    for pos in [0, 5, 12, bytes.len() / 3, bytes.len() - 9, bytes.len() - 1] {
        let mut b = bytes.clone();
        b[pos] ^= 0x10;
        assert!(
            Checkpoint::from_bytes(&b).is_err(),
            "flip at {pos} accepted"
        );
    }
    for len in [0, 3, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(
            Checkpoint::from_bytes(&bytes[..len]).is_err(),
            "truncation to {len} accepted"
        );
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(Checkpoint::from_bytes(&extra).is_err());
    let e = Checkpoint::from_bytes(&bytes[..bytes.len() - 4]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}
