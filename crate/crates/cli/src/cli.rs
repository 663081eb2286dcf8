use std::path::PathBuf;

use actiseg_core::evaluation::CvMode;
use clap::{Args, Parser, Subcommand};

/// Segment per-minute actigraphy, extract features and evaluate classifiers.
#[derive(Debug, Parser)]
#[command(name = "actiseg", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus in the interchange format.
    Synth(SynthArgs),
    /// Write one feature table per scheme.
    Featurize(FeaturizeArgs),
    /// Cross-validate every (scheme, model) cell and write the report.
    Evaluate(EvaluateArgs),
    /// Train a tree model on a full table and rank features by split gain.
    Importance(ImportanceArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Experiment config file (TOML).
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    /// Master seed for folds, models and synthetic data.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, short = 'o')]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "ACTISEG_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CorpusArgs {
    /// Interchange file or directory of per-subject recordings.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// `subject_id,label` table for a flat recordings directory.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    /// Use a generated corpus (the config's `[synth]` section or defaults).
    #[arg(long, conflicts_with = "corpus")]
    pub synth: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SchemeArgs {
    /// Scheme preset; repeat for several. Replaces the config's list.
    #[arg(long = "scheme", value_name = "PRESET")]
    pub schemes: Vec<String>,
    /// Custom scheme file; repeat for several. Replaces the config's list.
    #[arg(long = "scheme-file", value_name = "PATH")]
    pub scheme_files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub patients: Option<usize>,
    #[arg(long)]
    pub controls: Option<usize>,
    /// Days per subject.
    #[arg(long)]
    pub days: Option<usize>,
    /// Output file; defaults to `corpus.csv` in the output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub schemes: SchemeArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub schemes: SchemeArgs,
    /// Model preset; repeat for several. Replaces the config's list.
    #[arg(long = "model", value_name = "PRESET")]
    pub models: Vec<String>,
    /// Number of folds.
    #[arg(long, short = 'k')]
    pub k: Option<usize>,
    /// `row_stratified` or `subject_grouped`.
    #[arg(long)]
    pub cv_mode: Option<CvMode>,
    /// Also write `roc_points.csv`.
    #[arg(long)]
    pub roc: bool,
    /// Read `features_<scheme>.csv` tables from this directory instead of a corpus.
    #[arg(long)]
    pub features_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ImportanceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Scheme preset or the name of a scheme from `--scheme-file`.
    #[arg(long)]
    pub scheme: String,
    #[arg(long = "scheme-file", value_name = "PATH")]
    pub scheme_files: Vec<PathBuf>,
    /// Tree model preset: lgbm, xgb, random_forest or decision_tree.
    #[arg(long)]
    pub model: String,
    /// Read `features_<scheme>.csv` from this directory instead of a corpus.
    #[arg(long)]
    pub features_dir: Option<PathBuf>,
}
