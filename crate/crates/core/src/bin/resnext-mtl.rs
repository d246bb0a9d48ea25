use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use resnext_mtl::cli::{self, RunConfig};
use resnext_mtl::data::SplitName;
use resnext_mtl::Result;

#[derive(Parser)]
#[command(
    name = "resnext-mtl",
    version,
    about = "Grouped-convolution multi-task learning on market windows"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "test")]
    split: String,
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write planted-signal price and macro CSVs.
    Synth,
    /// Build the windowed, normalized, split dataset.
    Ingest,
    /// Pretrain each head, then train jointly (resume with --checkpoint).
    Train,
    /// Score a checkpoint on --split.
    Eval,
    /// Finite-difference check of every layer and of small models.
    Gradcheck,
}

fn run(args: Args) -> Result<bool> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.out_dir = o;
    }
    let split: SplitName = args.split.parse()?;
    cfg.validate()?;
    match args.command {
        Command::Synth => {
            let o = cli::cmd_synth(&cfg)?;
            println!("wrote {} and {}", o.prices.display(), o.macros.display());
            println!(
                "bayes-optimal direction accuracy {:.4}, log-return RMSE {:.6}",
                o.bayes_accuracy, o.bayes_rmse
            );
        }
        Command::Ingest => {
            let ds = cli::cmd_ingest(&cfg)?;
            print!("{}", ds.summary.to_text());
            println!("dataset {}", cfg.out_dir.join(cli::DATASET_FILE).display());
        }
        Command::Train => {
            let o = cli::cmd_train(&cfg, args.checkpoint.as_deref())?;
            for l in &o.logs {
                let val = l
                    .val_loss
                    .map(|v| format!(" val {v:.6}"))
                    .unwrap_or_default();
                eprintln!(
                    "{} epoch {} lr {:.3e} train {:.6}{val}",
                    l.phase, l.epoch, l.lr, l.train_loss
                );
            }
            println!("checkpoint {}", o.checkpoint.display());
        }
        Command::Eval => {
            let r = cli::cmd_eval(&cfg, args.checkpoint.as_deref(), split)?;
            eprint!("{}", r.to_text());
            eprint!("{}", cli::baseline_text(&cfg, split)?);
            println!("{}", r.to_json()?);
        }
        Command::Gradcheck => {
            let r = cli::cmd_gradcheck(&cfg)?;
            print!("{}", r.to_text());
            return Ok(r.failures() == 0);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
