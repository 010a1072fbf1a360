use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use reign::pipeline::{self, ModelChoice, PipelineConfig, RunOptions, SelectionMode};

#[derive(Parser)]
#[command(
    name = "reign",
    version,
    about = "Reformulation-category selection for robust conversational QA"
)]
struct Cli {
    /// TOML config; every field defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `paths.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train QA_orig on the train split.
    TrainQa,
    /// Train QA_orig, then the selector on the dev split.
    TrainRcs,
    /// Select categories, generate reformulations, train QA_robust.
    Augment {
        #[arg(long)]
        rcs_checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "rcs")]
        mode: String,
    },
    /// Evaluate a saved model on the test split.
    Evaluate {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        paraphrases: bool,
    },
    /// Run every stage and write reports and manifest.
    E2e {
        #[arg(long)]
        rcs_checkpoint: Option<PathBuf>,
    },
    /// Export distant-supervision pairs from the dev split.
    DistantPairs {
        #[arg(long)]
        cap: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Orig,
    Robust,
}

fn run(cli: Cli) -> reign::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.paths.out_dir = out;
    }
    cfg.validate()?;
    let out = cfg.paths.out_dir.display().to_string();
    match cli.command {
        Command::TrainQa => {
            pipeline::run_train_qa(&cfg)?;
            println!("wrote {out}/{}", pipeline::QA_ORIG_FILE);
        }
        Command::TrainRcs => {
            pipeline::run_train_rcs(&cfg)?;
            println!("wrote {out}/{}", pipeline::RCS_FILE);
        }
        Command::Augment { rcs_checkpoint, mode } => {
            let mode: SelectionMode = mode.parse()?;
            let manifest = pipeline::run_augment(&cfg, &RunOptions { mode, rcs_checkpoint })?;
            println!(
                "{} reformulations, {} training pairs; wrote {out}/{}",
                manifest.counts.get("reformulations").copied().unwrap_or(0),
                manifest.counts.get("augmented_pairs").copied().unwrap_or(0),
                pipeline::QA_ROBUST_FILE
            );
        }
        Command::Evaluate { model, paraphrases } => {
            let model = match model {
                Model::Orig => ModelChoice::Orig,
                Model::Robust => ModelChoice::Robust,
            };
            print!("{}", pipeline::run_evaluate(&cfg, model, paraphrases)?.to_json());
        }
        Command::E2e { rcs_checkpoint } => {
            let opts = RunOptions {
                mode: SelectionMode::Rcs,
                rcs_checkpoint,
            };
            let o = pipeline::run_e2e_with(&cfg, &opts)?;
            let robust = |r: Option<f64>| r.map_or("-".to_owned(), |v| format!("{v:.3}"));
            println!(
                "QA_orig   P@1 {:.3}  MRR {:.3}  Hit@5 {:.3}  Robust {}",
                o.orig.p_at_1,
                o.orig.mrr,
                o.orig.hit_at_5,
                robust(o.orig.robust)
            );
            println!(
                "QA_robust P@1 {:.3}  MRR {:.3}  Hit@5 {:.3}  Robust {}",
                o.robust.p_at_1,
                o.robust.mrr,
                o.robust.hit_at_5,
                robust(o.robust.robust)
            );
            println!("{} reformulations; artifacts in {out}", o.n_reformulations);
        }
        Command::DistantPairs { cap } => {
            let path = pipeline::emit_distant_pairs(&cfg, cap.unwrap_or(cfg.distant_pairs.cap))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(3))
        }
    }
}
