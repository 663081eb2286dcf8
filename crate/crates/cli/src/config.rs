use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use actiseg_core::evaluation::CvMode;
use actiseg_core::ingest::ColumnMap;
use actiseg_core::models::{ModelPreset, ModelSpec};
use actiseg_core::segmentation::{load_scheme_file, Preset, SegmentationScheme};
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

/// Experiment config file. Every key is optional; command-line flags take
/// precedence over the file. Relative paths resolve against the file's
/// directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub cv_mode: Option<CvMode>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Preset names; all eight when neither this nor `scheme_files` is given.
    pub schemes: Option<Vec<String>>,
    #[serde(default)]
    pub scheme_files: Vec<PathBuf>,
    /// Model preset names; all seven when absent.
    pub models: Option<Vec<String>>,
    /// Hyperparameter overrides keyed by preset name.
    #[serde(default)]
    pub overrides: BTreeMap<String, toml::Table>,
    pub roc: Option<bool>,
    /// Directory holding `features_<scheme>.csv` tables to evaluate instead of a corpus.
    pub features_dir: Option<PathBuf>,
    pub corpus: Option<CorpusConfig>,
    pub synth: Option<SynthConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    /// Interchange file or directory of per-subject recordings.
    pub path: PathBuf,
    /// `subject_id,label` table; labels come from subdirectories when absent.
    pub metadata: Option<PathBuf>,
    #[serde(default)]
    pub columns: ColumnMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub patients: usize,
    pub controls: usize,
    pub days: usize,
    pub seed: Option<u64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            patients: 10,
            controls: 10,
            days: 14,
            seed: None,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(CliError::config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.output_dir.as_mut().map(fix);
        self.features_dir.as_mut().map(fix);
        self.scheme_files.iter_mut().for_each(fix);
        if let Some(c) = &mut self.corpus {
            fix(&mut c.path);
            c.metadata.as_mut().map(fix);
        }
    }
}

/// Where a command gets its subject-days from.
#[derive(Debug, Clone)]
pub enum CorpusSource {
    Path {
        path: PathBuf,
        metadata: Option<PathBuf>,
        columns: ColumnMap,
    },
    Synth { params: SynthConfig, seed: u64 },
    Unset,
}

/// Loads the schemes named by presets and files, keeping names unique.
pub fn resolve_schemes(
    presets: Option<&[String]>,
    files: &[PathBuf],
) -> Result<Vec<SegmentationScheme>, CliError> {
    let mut out: Vec<SegmentationScheme> = match presets {
        Some(names) => names
            .iter()
            .map(|n| n.parse::<Preset>().map(Preset::scheme))
            .collect::<Result<_, _>>()?,
        None if files.is_empty() => Preset::ALL.iter().map(|p| p.scheme()).collect(),
        None => Vec::new(),
    };
    for f in files {
        if !f.exists() {
            return Err(CliError::Config(format!("scheme file {} does not exist", f.display())));
        }
        out.push(load_scheme_file(f)?);
    }
    if out.is_empty() {
        return Err(CliError::config("at least one scheme is required"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in &out {
        if !seen.insert(s.name.as_str()) {
            return Err(CliError::Config(format!("scheme '{}' listed twice", s.name)));
        }
    }
    Ok(out)
}

/// Preset spec with config overrides merged into its hyperparameters.
pub fn model_spec(
    name: &str,
    seed: u64,
    overrides: &BTreeMap<String, toml::Table>,
) -> Result<ModelSpec, CliError> {
    let preset: ModelPreset = name.parse()?;
    let spec = preset.spec(seed);
    let Some(table) = overrides.get(preset.name()) else {
        return Ok(spec);
    };
    let map = match serde_json::to_value(table).map_err(CliError::config)? {
        serde_json::Value::Object(m) => m,
        _ => return Err(CliError::Internal("override table is not a map".into())),
    };
    spec.with_overrides(&map)
        .map_err(|e| CliError::Config(format!("overrides.{name}: {e}")))
}

pub fn resolve_models(
    names: Option<&[String]>,
    seed: u64,
    overrides: &BTreeMap<String, toml::Table>,
) -> Result<Vec<ModelSpec>, CliError> {
    let names: Vec<String> = match names {
        Some(n) => n.to_vec(),
        None => ModelPreset::ALL.iter().map(|p| p.name().to_string()).collect(),
    };
    if names.is_empty() {
        return Err(CliError::config("at least one model is required"));
    }
    for key in overrides.keys() {
        let preset: ModelPreset = key
            .parse()
            .map_err(|_| CliError::Config(format!("overrides for unknown model '{key}'")))?;
        if !names.iter().any(|n| n.parse::<ModelPreset>().ok() == Some(preset)) {
            log::warn!("overrides.{key} is set but the model is not selected");
        }
    }
    let specs = names
        .iter()
        .map(|n| model_spec(n, seed, overrides))
        .collect::<Result<Vec<_>, _>>()?;
    let mut seen = std::collections::BTreeSet::new();
    for s in &specs {
        if !seen.insert(s.name.as_str()) {
            return Err(CliError::Config(format!("model '{}' listed twice", s.name)));
        }
    }
    Ok(specs)
}
