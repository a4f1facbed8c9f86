use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spamdetect::pipeline::{self, Overrides, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(version, about = "Spam account detection from profile, text and follower-graph features")]
struct Cli {
    /// TOML pipeline config; relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Depth-15 trees, top-15 SHAP list, correlation threshold 0.1.
    #[arg(long, global = true)]
    paper_mode: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset into the data directory.
    Synth,
    /// Compute features.csv, centralities.csv and embeddings.txt.
    Featurize,
    /// Select features, grid-search, train and evaluate.
    SelectTrainEval,
    /// Score accounts listed one per line in a file.
    Score {
        #[arg(long)]
        users: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let cfg = PipelineConfig::load(
        cli.config.as_deref(),
        Overrides {
            seed: cli.seed,
            paper_mode: cli.paper_mode,
        },
    )?;
    match cli.command {
        Command::Synth => {
            let d = pipeline::cmd_synth(&cfg)?;
            eprintln!("wrote {} users, {} edges to {}", d.users.len(), d.edges.len(), cfg.paths.data_dir.display());
        }
        Command::Featurize => {
            let f = pipeline::cmd_featurize(&cfg)?;
            for w in &f.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("featurized {} labeled users", f.table.rows.len());
        }
        Command::SelectTrainEval => {
            let o = pipeline::cmd_select_train_eval(&cfg)?;
            let m = &o.metrics;
            eprintln!(
                "selected {} features, vector length {}; test average accuracy {:.4}, macro F1 {:.4}",
                o.selection.selected.len(),
                m.vector_length,
                m.test.average_accuracy,
                m.test.macro_f1
            );
        }
        Command::Score { users } => {
            let ids = pipeline::read_id_list(&users)?;
            let s = pipeline::cmd_score(&cfg, &ids)?;
            eprintln!("scored {} users", s.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
