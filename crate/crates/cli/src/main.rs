//! `rulecraft` command line: train, eval, predict, explain and bench.

mod commands;
mod config;
mod dataset;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rulecraft::pipeline::Learner;

use crate::config::{CliConfig, DatasetKind, Preprocess};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "rulecraft",
    version,
    about = "Readable classification rules with modular FOIL, IREP and RIPPER"
)]
pub struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Falls back to RULECRAFT_THREADS, then 1.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Output directory (model for train, reports for eval and bench).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Learn one rule set per label and write a model directory.
    Train(TrainArgs),
    /// Score a model on a labelled dataset and write metrics.json.
    Eval(EvalArgs),
    /// Print one predicted label per example.
    Predict(PredictArgs),
    /// Show which rules fire for one example.
    Explain(ExplainArgs),
    /// Time the modular pipeline against the monolithic learner.
    Bench(BenchArgs),
}

/// Dataset and pipeline settings shared by `train` and `bench`.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub train_labels: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub test_labels: Option<PathBuf>,
    #[arg(long)]
    pub train_limit: Option<usize>,
    #[arg(long)]
    pub test_limit: Option<usize>,
    #[arg(long, value_enum)]
    pub kind: Option<DatasetKind>,
    #[arg(long, value_enum)]
    pub preprocess: Option<Preprocess>,
    #[arg(long)]
    pub threshold: Option<u8>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub label_column: Option<String>,
    /// foil, irep or ripper.
    #[arg(long)]
    pub learner: Option<Learner>,
    #[arg(long, conflicts_with = "monolithic")]
    pub modular: bool,
    #[arg(long)]
    pub monolithic: bool,
    #[arg(long)]
    pub pos_clusters: Option<usize>,
    #[arg(long)]
    pub neg_clusters: Option<usize>,
    #[arg(long)]
    pub neg_fraction: Option<f64>,
    #[arg(long)]
    pub pca_k: Option<usize>,
    /// Fit PCA on all training rows instead of per binary task.
    #[arg(long)]
    pub global_pca: bool,
    /// Rules per cluster.
    #[arg(long)]
    pub rule_cap: Option<usize>,
    #[arg(long)]
    pub ripper_k: Option<usize>,
    #[arg(long)]
    pub max_literals: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Timed runs per variant; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Labelled dataset, in the format the model was trained on.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub test_labels: Option<PathBuf>,
    #[arg(long)]
    pub test_limit: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub input_labels: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub input_labels: Option<PathBuf>,
    /// Zero-based example row.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut CliConfig) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        fn set_opt<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
            if v.is_some() {
                *slot = v.clone();
            }
        }
        set_opt(&mut cfg.train, &self.train);
        set_opt(&mut cfg.train_labels, &self.train_labels);
        set_opt(&mut cfg.test, &self.test);
        set_opt(&mut cfg.test_labels, &self.test_labels);
        set_opt(&mut cfg.train_limit, &self.train_limit);
        set_opt(&mut cfg.test_limit, &self.test_limit);
        set(&mut cfg.dataset.kind, &self.kind);
        set(&mut cfg.dataset.preprocess, &self.preprocess);
        set(&mut cfg.dataset.threshold, &self.threshold);
        set(&mut cfg.dataset.vocab_size, &self.vocab_size);
        set(&mut cfg.dataset.label_column, &self.label_column);
        let p = &mut cfg.pipeline;
        set(&mut p.learner, &self.learner);
        if self.modular {
            p.modular = true;
        }
        if self.monolithic {
            p.modular = false;
        }
        set(&mut p.pos_clusters, &self.pos_clusters);
        set(&mut p.neg_clusters, &self.neg_clusters);
        set(&mut p.neg_fraction, &self.neg_fraction);
        set(&mut p.pca_k, &self.pca_k);
        if self.global_pca {
            p.global_pca = true;
        }
        set(&mut p.rule_cap_per_cluster, &self.rule_cap);
        set(&mut p.ripper_k, &self.ripper_k);
        set_opt(&mut p.max_literals_per_rule, &self.max_literals);
    }
}

impl Cli {
    /// Config file, then flags; parallelism falls back to the environment
    /// only when neither sets it.
    pub fn resolve(&self, overrides: &Overrides) -> Result<CliConfig, CliError> {
        let (mut cfg, file_parallelism) = match &self.config {
            Some(path) => CliConfig::load(path)?,
            None => (CliConfig::default(), false),
        };
        overrides.apply(&mut cfg);
        if let Some(seed) = self.seed {
            cfg.pipeline.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        match self.parallelism {
            Some(n) => cfg.pipeline.parallelism = n,
            None if !file_parallelism => {
                if let Some(n) = config::threads_from_env()? {
                    cfg.pipeline.parallelism = n;
                }
            }
            None => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            e.exit()
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", CliError::Config(first.to_string()));
            return ExitCode::from(2);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
