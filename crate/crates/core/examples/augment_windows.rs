//! Applies the training-time augmentation policy to one window, then shows
//! that the neutral policy is the identity.
//!
//! `cargo run --example augment_windows`

use std::collections::BTreeMap;

use chrono::NaiveDate;
use resnext_mtl::data::{augment, AugmentPolicy, Sample};
use resnext_mtl::nn::{Rng, Stream, Tensor};

fn main() -> resnext_mtl::Result<()> {
    let (t, f) = (8, 3);
    let policy = AugmentPolicy::default();
    let rows = t + policy.crop_slack;
    let sample = Sample {
        x: Tensor::from_fn([rows, f], |i| (i / f) as f64 + 0.1 * (i % f) as f64),
        labels: BTreeMap::new(),
        anchor: NaiveDate::from_ymd_opt(2020, 1, 2).expect("valid date"),
    };
    let std = vec![1.0; f];
    let mut rng = Rng::stream(3, Stream::Augment);
    for k in 0..3 {
        let out = augment(&sample, &policy, t, &std, &mut rng)?;
        let first: Vec<String> = out
            .x
            .data()
            .iter()
            .step_by(f)
            .map(|v| format!("{v:5.2}"))
            .collect();
        println!("draw {k}: feature 0 = [{}]", first.join(" "));
    }

    let plain = Sample {
        x: Tensor::from_fn([t, f], |i| i as f64),
        ..sample
    };
    let same = augment(&plain, &AugmentPolicy::neutral(), t, &std, &mut rng)?;
    println!("neutral policy is identity: {}", same.x.bit_eq(&plain.x));
    Ok(())
}
