//! Temporal segmentation of per-minute actigraphy, per-segment statistical
//! features, from-scratch classifiers and cross-validated evaluation.
//!
//! The pipeline runs `ingest` → `segmentation` → `features` → `models` →
//! `evaluation`; `synth` generates corpora with a known day/night structure.

pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod models;
pub mod segmentation;
pub mod synth;

pub use evaluation::{
    auc_roc, cross_validate, evaluate_tables, f1, run_matrix, stratified_kfold, CvMode, CvReport, EvalError,
    FoldPlan, MatrixResult,
};
pub use features::{extract_features, featurize_corpus, Feature, FeatureSet, FeatureTable};
pub use ingest::{Corpus, DaySeries, IngestError, Label};
pub use models::{train, ModelError, ModelPreset, ModelSpec, TrainedModel};
pub use segmentation::{builtin_scheme, segment_day, validate_scheme, Preset, SegmentationScheme};
pub use synth::{gen_corpus, gen_corpus_with};
