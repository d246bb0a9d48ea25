//! Computes classification and regression metrics and the trivial baselines
//! a trained model should beat.
//!
//! `cargo run --example evaluate_metrics`

use resnext_mtl::data::Label;
use resnext_mtl::eval::{
    accuracy, baseline_predict, regression_metrics, BaselineKind, ConfusionMatrix,
};

fn main() -> resnext_mtl::Result<()> {
    let truth = [0, 0, 1, 1, 1, 2, 2, 0];
    let preds = [0, 1, 1, 1, 0, 2, 1, 0];
    let cm = ConfusionMatrix::new(&preds, &truth, 3)?;
    println!("accuracy {:.3}", accuracy(&preds, &truth)?);
    for c in 0..3 {
        println!("class {c}: F1 {:.3}", cm.f1(c));
    }
    println!("macro F1 {:.3}", cm.macro_f1());

    let targets = [0.01, -0.02, 0.005, 0.0];
    let m = regression_metrics(&[0.012, -0.015, 0.0, 0.002], &targets)?;
    println!("MAE {:.4} RMSE {:.4}", m.mae, m.rmse);

    let train: Vec<Label> = [1, 1, 0, 1].iter().map(|&c| Label::Class(c)).collect();
    println!(
        "majority baseline: {:?}",
        baseline_predict(BaselineKind::Majority, &train, 2)?
    );
    let train: Vec<Label> = targets.iter().map(|&v| Label::Value(v)).collect();
    println!(
        "mean baseline: {:?}",
        baseline_predict(BaselineKind::Mean, &train, 2)?
    );
    Ok(())
}
