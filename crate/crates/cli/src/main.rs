//! `veracity` — claim verification and explanation summaries from the
//! command line.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 data error.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::Settings;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<veracity_core::corpus::DataError> for CliError {
    fn from(e: veracity_core::corpus::DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<veracity_core::classifier::ModelError> for CliError {
    fn from(e: veracity_core::classifier::ModelError) -> Self {
        use veracity_core::classifier::ModelError;
        match e {
            ModelError::Input(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<veracity_core::topic::TopicError> for CliError {
    fn from(e: veracity_core::topic::TopicError) -> Self {
        use veracity_core::topic::TopicError;
        match e {
            TopicError::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<veracity_core::summarize::SummarizeError> for CliError {
    fn from(e: veracity_core::summarize::SummarizeError) -> Self {
        use veracity_core::summarize::SummarizeError;
        match e {
            SummarizeError::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<veracity_core::rouge::RougeError> for CliError {
    fn from(e: veracity_core::rouge::RougeError) -> Self {
        use veracity_core::rouge::RougeError;
        match e {
            RougeError::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "veracity",
    version,
    about = "Verify claims against evidence documents and explain the verdicts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Flat key-value config file (`key = value` per line).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable, wins over --config).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Master random seed (expands into per-component seeds).
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<Settings, CliError> {
        let mut settings = Settings::default();
        if let Some(path) = &self.config {
            settings.apply_file(path)?;
        }
        settings.apply_pairs(&self.set)?;
        if let Some(seed) = self.seed {
            settings.set("seed", &seed.to_string())?;
        }
        Ok(settings)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset and split it into train/val/test files.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        train_frac: Option<f64>,
        #[arg(long)]
        val_frac: Option<f64>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train a model; writes checkpoint.bin, training_log.csv, and
    /// config.snapshot.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        /// GloVe-format vectors; omitted means random trainable vectors.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Predict labels with attention exports.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Fit the topic model over a dataset's candidate sentences.
    LdaFit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        topics: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Produce topic-diversified summaries (optionally with a BM25
    /// baseline alongside).
    Summarize {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        lda: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Topic/attention trade-off in the sentence cost.
        #[arg(long)]
        lambda: Option<f64>,
        /// Coverage semantics: dominant or multi.
        #[arg(long)]
        coverage: Option<String>,
        /// Multi-coverage probability threshold.
        #[arg(long)]
        tau: Option<f64>,
        /// Fixed BM25 baseline length (default: match the summary).
        #[arg(long)]
        top_n: Option<usize>,
        /// Baseline to emit alongside: none or bm25.
        #[arg(long)]
        baseline: Option<String>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score summaries against cosine-filtered gold references.
    EvaluateRouge {
        #[arg(long)]
        summaries: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Cosine threshold for keeping description sentences.
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Per-class accuracy and macro F1 from a predictions file.
    EvaluateCls {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep lambda over {0.1..0.9} and report ROUGE per value.
    GridLambda {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        lda: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Prepare {
            input,
            out_dir,
            train_frac,
            val_frac,
            config,
        } => {
            let mut settings = config.resolve()?;
            if let Some(f) = train_frac {
                settings.set("train_frac", &f.to_string())?;
            }
            if let Some(f) = val_frac {
                settings.set("val_frac", &f.to_string())?;
            }
            commands::cmd_prepare(&input, &out_dir, &settings)
        }
        Command::Train {
            train,
            val,
            embeddings,
            out_dir,
            config,
        } => {
            let settings = config.resolve()?;
            commands::cmd_train(&train, &val, embeddings.as_deref(), &out_dir, settings)
        }
        Command::Predict {
            checkpoint,
            data,
            out_dir,
            config,
        } => {
            if config.seed.is_some() {
                return Err(CliError::Usage(
                    "predict is deterministic; --seed is not accepted here".into(),
                ));
            }
            commands::cmd_predict(
                &checkpoint,
                &data,
                &out_dir,
                config.config.as_deref(),
                &config.set,
            )
        }
        Command::LdaFit {
            data,
            out,
            topics,
            iterations,
            config,
        } => {
            let mut settings = config.resolve()?;
            if let Some(k) = topics {
                settings.set("lda_topics", &k.to_string())?;
            }
            if let Some(n) = iterations {
                settings.set("lda_iterations", &n.to_string())?;
            }
            commands::cmd_lda_fit(&data, &out, &settings)
        }
        Command::Summarize {
            checkpoint,
            lda,
            data,
            out_dir,
            lambda,
            coverage,
            tau,
            top_n,
            baseline,
            config,
        } => {
            let mut settings = config.resolve()?;
            if let Some(l) = lambda {
                settings.set("lambda", &l.to_string())?;
            }
            if let Some(c) = coverage {
                settings.set("coverage", &c)?;
            }
            if let Some(t) = tau {
                settings.set("tau", &t.to_string())?;
            }
            if let Some(n) = top_n {
                settings.set("top_n", &n.to_string())?;
            }
            if let Some(b) = baseline {
                settings.set("baseline", &b)?;
            }
            commands::cmd_summarize(&checkpoint, &lda, &data, &out_dir, &settings)
        }
        Command::EvaluateRouge {
            summaries,
            data,
            embeddings,
            out,
            threshold,
            config,
        } => {
            let mut settings = config.resolve()?;
            if let Some(t) = threshold {
                settings.set("gold_threshold", &t.to_string())?;
            }
            commands::cmd_evaluate_rouge(&summaries, &data, &embeddings, &out, &settings)
        }
        Command::EvaluateCls { predictions, out } => commands::cmd_evaluate_cls(&predictions, &out),
        Command::GridLambda {
            checkpoint,
            lda,
            data,
            embeddings,
            out,
            config,
        } => {
            let settings = config.resolve()?;
            commands::cmd_grid_lambda(&checkpoint, &lda, &data, &embeddings, &out, &settings)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Data(message)) => {
            eprintln!("data error: {message}");
            ExitCode::from(2)
        }
    }
}
