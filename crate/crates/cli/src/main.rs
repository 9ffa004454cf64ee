use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elhyb::corpus::Mix;
use elhyb::Error;

mod commands;

/// Ellipsis completion and hybrid dialog understanding.
#[derive(Debug, Parser)]
#[command(name = "elhyb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every command that reads corpora or models.
#[derive(Debug, Args)]
struct Common {
    /// Run configuration (TOML). Defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory. Falls back to `data.dir` in the config, then
    /// ELHYB_DATA_DIR, then ./data.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Checkpoint directory.
    #[arg(long, default_value = "models")]
    models: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic completion, dialog-act and SRL corpora.
    GenData {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of dialogs.
        #[arg(long)]
        n: Option<usize>,
        /// Case proportions `had_ellipsis,modified_to_ellipsis,already_complete`.
        #[arg(long)]
        mix: Option<Mix>,
        /// Probability that a hold reply gets the misleading reference.
        #[arg(long)]
        hold_noise: Option<f64>,
        /// Output directory (default as for --data elsewhere).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Train the completion model; writes <name>.ckpt and <name>.report.json.
    TrainCompletion {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "completion")]
        name: String,
        /// Continue training the existing checkpoint.
        #[arg(long)]
        resume: bool,
    },
    /// Complete the utterances of a completion-format JSONL file.
    Complete {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// Output JSONL (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Beam width (config value when absent; 1 is greedy).
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long, default_value = "completion")]
        name: String,
    },
    /// Train a dialog-act classifier, or a joint hidden-state model.
    TrainDa {
        #[command(flatten)]
        common: Common,
        /// Input path: el or cmp.
        #[arg(long, default_value = "el")]
        path: String,
        /// Ensemble member index; members differ only by seed.
        #[arg(long, default_value_t = 0)]
        member: usize,
        /// Train the joint model over a path pair, e.g. `el-cmp`.
        #[arg(long)]
        joint: Option<String>,
        /// Hidden-state combination of the joint model: sum, max or cat.
        #[arg(long, default_value = "sum")]
        hidden: String,
        #[arg(long)]
        resume: bool,
    },
    /// Train an SRL parser (predicate identifier and argument tagger).
    TrainSrl {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "el")]
        path: String,
        #[arg(long, default_value_t = 0)]
        member: usize,
    },
    /// Run experiment variants on the held-out split and write reports.
    RunGrid {
        #[command(flatten)]
        common: Common,
        /// da or srl.
        #[arg(long, default_value = "da")]
        task: String,
        /// Variant name or `all`.
        #[arg(long, default_value = "all")]
        variant: String,
        /// DA: a selection method, `logits_sum+expert`, or `all`.
        /// SRL: rule, probability or all.
        #[arg(long, default_value = "all")]
        selection: String,
        /// Macro-averaged dialog-act scores.
        #[arg(long)]
        r#macro: bool,
        /// Conventional SRL span scoring instead of the modified one.
        #[arg(long)]
        standard: bool,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Score a prediction file against a corpus file.
    Evaluate {
        /// completion, da or srl.
        #[arg(long)]
        task: String,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Write the per-example breakdown here as JSONL.
        #[arg(long)]
        per_example: Option<PathBuf>,
        #[arg(long)]
        r#macro: bool,
        #[arg(long)]
        standard: bool,
        /// Report path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
