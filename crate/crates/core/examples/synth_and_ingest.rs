//! Generates a synthetic market with a planted signal, writes it as CSV,
//! reads it back and runs the windowing/labeling/split/normalize pipeline.
//!
//! `cargo run --release --example synth_and_ingest -- [out_dir]`

use std::fs::File;
use std::path::PathBuf;

use resnext_mtl::data::{
    build_dataset, generate, load_tables, write_macro, write_prices, PipelineOptions, SplitName,
    SynthConfig,
};
use resnext_mtl::model::TaskSpec;
use resnext_mtl::Error;

fn main() -> resnext_mtl::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let synth = SynthConfig {
        n_days: 3_000,
        missing_rate: 0.01,
        ..SynthConfig::default()
    };
    let market = generate(&synth, 11)?;
    let prices = dir.join("prices.csv");
    let macros = dir.join("macro.csv");
    let open = |p: &PathBuf| File::create(p).map_err(|e| Error::io(p, e));
    write_prices(open(&prices)?, &market.prices).map_err(|e| Error::io(&prices, e))?;
    write_macro(open(&macros)?, &market.macros).map_err(|e| Error::io(&macros, e))?;
    println!("wrote {} and {}", prices.display(), macros.display());

    let (prices, macros) = load_tables(&prices, &macros)?;
    let tasks = [
        TaskSpec::classification("direction", 2, 0.5),
        TaskSpec::regression("log_return", 0.5),
    ];
    let ds = build_dataset(&prices, &macros, &PipelineOptions::default(), &tasks)?;
    print!("{}", ds.summary.to_text());
    for split in [SplitName::Train, SplitName::Val, SplitName::Test] {
        println!("{:<5} {} windows", split.as_str(), ds.indices(split).len());
    }
    let first = ds.materialize(ds.indices(SplitName::Train)[0], 0)?;
    println!(
        "one window: {:?}, anchor {}, labels {:?}",
        first.x.shape(),
        first.anchor,
        first.labels
    );
    println!(
        "bayes accuracy for this generator: {:.4}",
        synth.bayes_accuracy()
    );
    Ok(())
}
