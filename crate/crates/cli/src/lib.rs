//! The `actiseg` command line: synth, featurize, evaluate and importance.
//!
//! Each subcommand reads an optional TOML experiment config and lets flags
//! override its keys. Errors map to exit codes 2 (config or usage), 3 (data)
//! and 4 (internal).

pub mod cli;
pub mod config;
pub mod error;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use actiseg_core::evaluation::{evaluate_tables, CvMode, MatrixResult};
use actiseg_core::features::{featurize_corpus, format_float, FeatureSet, FeatureTable};
use actiseg_core::ingest::{load_path, read_label_table, Corpus, LabelSource};
use actiseg_core::models::{train_table, ImportanceReport};
use actiseg_core::segmentation::{Preset, SegmentationScheme};
use actiseg_core::synth::gen_corpus;

pub use cli::{Cli, Command};
pub use config::{CorpusSource, ExperimentConfig, SynthConfig};
pub use error::CliError;

use cli::{CommonArgs, CorpusArgs, EvaluateArgs, FeaturizeArgs, ImportanceArgs, SynthArgs};
use config::{model_spec, resolve_models, resolve_schemes, DEFAULT_K, DEFAULT_OUTPUT_DIR};

pub const REPORT_FILE: &str = "report.csv";
pub const FOLDS_FILE: &str = "folds.csv";
pub const ROC_FILE: &str = "roc_points.csv";

pub fn features_file(scheme: &str) -> String {
    format!("features_{scheme}.csv")
}

pub fn importance_file(scheme: &str, model: &str) -> String {
    format!("importance_{scheme}_{model}.csv")
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    match &common.config {
        Some(path) => ExperimentConfig::load(path),
        None => Ok(ExperimentConfig::default()),
    }
}

fn seed_of(common: &CommonArgs, cfg: &ExperimentConfig) -> u64 {
    common.seed.or(cfg.seed).unwrap_or(0)
}

fn output_dir_of(common: &CommonArgs, cfg: &ExperimentConfig) -> PathBuf {
    common
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn synth_seed(common: &CommonArgs, cfg: &ExperimentConfig, params: &SynthConfig) -> u64 {
    common.seed.or(params.seed).or(cfg.seed).unwrap_or(0)
}

fn in_pool<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    pool.install(f)
}

fn workers_of(common: &CommonArgs, cfg: &ExperimentConfig) -> Result<Option<usize>, CliError> {
    match common.workers.or(cfg.workers) {
        Some(0) => Err(CliError::config("workers must be at least 1")),
        w => Ok(w),
    }
}

/// Resolves the corpus source: flags first, then `[corpus]`, then `[synth]`.
pub fn corpus_source(common: &CommonArgs, args: &CorpusArgs, cfg: &ExperimentConfig) -> CorpusSource {
    let columns = cfg.corpus.as_ref().map(|c| c.columns.clone()).unwrap_or_default();
    if let Some(path) = &args.corpus {
        return CorpusSource::Path {
            path: path.clone(),
            metadata: args.metadata.clone(),
            columns,
        };
    }
    if args.synth {
        let params = cfg.synth.clone().unwrap_or_default();
        let seed = synth_seed(common, cfg, &params);
        return CorpusSource::Synth { params, seed };
    }
    if let Some(c) = &cfg.corpus {
        return CorpusSource::Path {
            path: c.path.clone(),
            metadata: args.metadata.clone().or_else(|| c.metadata.clone()),
            columns,
        };
    }
    if let Some(params) = &cfg.synth {
        let seed = synth_seed(common, cfg, params);
        return CorpusSource::Synth {
            params: params.clone(),
            seed,
        };
    }
    CorpusSource::Unset
}

pub fn load_source(source: &CorpusSource) -> Result<Corpus, CliError> {
    match source {
        CorpusSource::Path {
            path,
            metadata,
            columns,
        } => {
            if !path.exists() {
                return Err(CliError::Config(format!("corpus path {} does not exist", path.display())));
            }
            let labels = match metadata {
                Some(m) if !m.exists() => {
                    return Err(CliError::Config(format!("metadata table {} does not exist", m.display())))
                }
                Some(m) => LabelSource::Table(read_label_table(m)?),
                None => LabelSource::Directories,
            };
            Ok(load_path(path, &labels, columns)?)
        }
        CorpusSource::Synth { params, seed } => {
            Ok(gen_corpus(params.patients, params.controls, params.days, *seed)?)
        }
        CorpusSource::Unset => Err(CliError::config(
            "no corpus: set [corpus] or [synth] in the config, or pass --corpus or --synth",
        )),
    }
}

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let mut out = create_file(path)?;
    f(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_table(dir: &Path, scheme: &SegmentationScheme) -> Result<FeatureTable, CliError> {
    let path = dir.join(features_file(&scheme.name));
    let file = File::open(&path)
        .map_err(|e| CliError::Config(format!("feature table {}: {e}", path.display())))?;
    let table = FeatureTable::read_csv(std::io::BufReader::new(file), &scheme.name)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if table.unit != scheme.unit {
        return Err(CliError::Data(format!(
            "{}: row unit does not match scheme '{}'",
            path.display(),
            scheme.name
        )));
    }
    Ok(table)
}

/// Writes a generated corpus and returns the file path.
pub fn cmd_synth(args: &SynthArgs) -> Result<PathBuf, CliError> {
    let cfg = load_config(&args.common)?;
    let mut params = cfg.synth.clone().unwrap_or_default();
    params.patients = args.patients.unwrap_or(params.patients);
    params.controls = args.controls.unwrap_or(params.controls);
    params.days = args.days.unwrap_or(params.days);
    let seed = synth_seed(&args.common, &cfg, &params);
    let path = args
        .output
        .clone()
        .unwrap_or_else(|| output_dir_of(&args.common, &cfg).join("corpus.csv"));
    let workers = workers_of(&args.common, &cfg)?;
    let corpus = in_pool(workers, || Ok(gen_corpus(params.patients, params.controls, params.days, seed)?))?;
    let mut out = create_file(&path)?;
    corpus.write_interchange(&mut out)?;
    out.flush().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Summary of one written feature table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSummary {
    pub path: PathBuf,
    pub rows: usize,
    /// Id and label columns included.
    pub columns: usize,
}

pub fn cmd_featurize(args: &FeaturizeArgs) -> Result<Vec<TableSummary>, CliError> {
    let cfg = load_config(&args.common)?;
    let schemes = schemes_of(&args.schemes, &cfg)?;
    let source = corpus_source(&args.common, &args.corpus, &cfg);
    let out_dir = output_dir_of(&args.common, &cfg);
    let workers = workers_of(&args.common, &cfg)?;
    let tables = in_pool(workers, || {
        let corpus = load_source(&source)?;
        let set = FeatureSet::default();
        schemes
            .iter()
            .map(|s| Ok(featurize_corpus(&corpus, s, &set)?))
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut written = Vec::new();
    for t in &tables {
        let path = out_dir.join(features_file(&t.scheme));
        let mut out = create_file(&path)?;
        t.write_csv(&mut out)?;
        out.flush().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        written.push(TableSummary {
            path,
            rows: t.n_rows(),
            columns: t.n_cols() + 3,
        });
    }
    Ok(written)
}

fn schemes_of(args: &cli::SchemeArgs, cfg: &ExperimentConfig) -> Result<Vec<SegmentationScheme>, CliError> {
    if args.schemes.is_empty() && args.scheme_files.is_empty() {
        resolve_schemes(cfg.schemes.as_deref(), &cfg.scheme_files)
    } else {
        let presets = (!args.schemes.is_empty()).then_some(args.schemes.as_slice());
        resolve_schemes(presets.or(Some(&[])), &args.scheme_files)
    }
}

/// Output files of an evaluate run.
#[derive(Debug, Clone)]
pub struct EvaluateOutput {
    pub result: MatrixResult,
    pub report: PathBuf,
    pub folds: PathBuf,
    pub roc: Option<PathBuf>,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvaluateOutput, CliError> {
    let cfg = load_config(&args.common)?;
    let seed = seed_of(&args.common, &cfg);
    let k = args.k.or(cfg.k).unwrap_or(DEFAULT_K);
    if k < 2 {
        return Err(CliError::Config(format!("k must be at least 2, got {k}")));
    }
    let mode = args.cv_mode.or(cfg.cv_mode).unwrap_or(CvMode::RowStratified);
    let schemes = schemes_of(&args.schemes, &cfg)?;
    let model_names = if args.models.is_empty() {
        cfg.models.clone()
    } else {
        Some(args.models.clone())
    };
    let specs = resolve_models(model_names.as_deref(), seed, &cfg.overrides)?;
    let roc = args.roc || cfg.roc.unwrap_or(false);
    let features_dir = args.features_dir.clone().or_else(|| cfg.features_dir.clone());
    let source = corpus_source(&args.common, &args.corpus, &cfg);
    let out_dir = output_dir_of(&args.common, &cfg);
    let workers = workers_of(&args.common, &cfg)?;

    let result = in_pool(workers, || {
        let tables = match &features_dir {
            Some(dir) => schemes
                .iter()
                .map(|s| read_table(dir, s))
                .collect::<Result<Vec<_>, _>>()?,
            None => {
                let corpus = load_source(&source)?;
                let set = FeatureSet::default();
                schemes
                    .iter()
                    .map(|s| Ok(featurize_corpus(&corpus, s, &set)?))
                    .collect::<Result<Vec<_>, CliError>>()?
            }
        };
        Ok(evaluate_tables(&tables, &specs, k, seed, mode)?)
    })?;

    let report = out_dir.join(REPORT_FILE);
    write_with(&report, |w| result.write_report(w))?;
    let folds = out_dir.join(FOLDS_FILE);
    write_with(&folds, |w| result.write_folds(w))?;
    let roc = if roc {
        let path = out_dir.join(ROC_FILE);
        write_with(&path, |w| result.write_roc(w))?;
        Some(path)
    } else {
        None
    };
    Ok(EvaluateOutput {
        result,
        report,
        folds,
        roc,
    })
}

pub fn cmd_importance(args: &ImportanceArgs) -> Result<(PathBuf, ImportanceReport), CliError> {
    let cfg = load_config(&args.common)?;
    let seed = seed_of(&args.common, &cfg);
    let spec = model_spec(&args.model, seed, &cfg.overrides)?;
    if !spec.family().is_tree() {
        return Err(CliError::Config(format!(
            "importance needs a tree model; '{}' is {}",
            spec.name,
            spec.family()
        )));
    }
    let files = if args.scheme_files.is_empty() {
        &cfg.scheme_files
    } else {
        &args.scheme_files
    };
    let scheme = match args.scheme.parse::<Preset>() {
        Ok(p) => p.scheme(),
        Err(_) => resolve_schemes(Some(&[]), files)?
            .into_iter()
            .find(|s| s.name == args.scheme)
            .ok_or_else(|| CliError::Config(format!("unknown scheme '{}'", args.scheme)))?,
    };
    let features_dir = args.features_dir.clone().or_else(|| cfg.features_dir.clone());
    let source = corpus_source(&args.common, &args.corpus, &cfg);
    let out_dir = output_dir_of(&args.common, &cfg);
    let workers = workers_of(&args.common, &cfg)?;

    let report = in_pool(workers, || {
        let table = match &features_dir {
            Some(dir) => read_table(dir, &scheme)?,
            None => featurize_corpus(&load_source(&source)?, &scheme, &FeatureSet::default())?,
        };
        Ok(train_table(&spec, &table)?.gain_importance()?)
    })?;
    let path = out_dir.join(importance_file(&scheme.name, &spec.name));
    write_with(&path, |w| {
        writeln!(w, "feature,gain")?;
        for (name, gain) in &report.entries {
            writeln!(w, "{name},{}", format_float(*gain))?;
        }
        Ok(())
    })?;
    Ok((path, report))
}

/// Runs a parsed command line, printing results to standard output.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => {
            let path = cmd_synth(&args)?;
            println!("wrote {}", path.display());
        }
        Command::Featurize(args) => {
            for t in cmd_featurize(&args)? {
                println!("{}: {} rows x {} columns", t.path.display(), t.rows, t.columns);
            }
        }
        Command::Evaluate(args) => {
            let out = cmd_evaluate(&args)?;
            print!("{}", out.result.render_grid());
            println!("wrote {}", out.report.display());
        }
        Command::Importance(args) => {
            let (path, report) = cmd_importance(&args)?;
            for (name, gain) in report.entries.iter().take(10) {
                println!("{name:<32} {gain:.4}");
            }
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
