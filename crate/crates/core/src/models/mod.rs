//! Binary classifiers producing probability scores.
//!
//! Seven presets cover the model families of the experiment matrix. The two
//! boosting presets share one histogram GBDT engine and differ in how trees
//! grow: leaf-wise to a leaf budget (`lgbm`) or level-wise to a depth limit
//! (`xgb`). Logistic regression, k-NN and the linear SVM standardize features
//! with a scaler fitted on the training rows.

mod gbdt;
pub mod logistic;
mod scaler;
mod svm;
mod tree;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureTable;
use crate::ingest::Label;

pub use gbdt::GbdtModel;
pub use scaler::Scaler;
pub use tree::{Node, Tree};

use tree::{build_cart, CartOptions};

pub const MODEL_FORMAT: &str = "actiseg-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("training rows contain a single class")]
    SingleClass,
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{0} rows but {1} labels")]
    LabelCount(usize, usize),
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("unknown model preset '{0}'")]
    UnknownPreset(String),
    #[error("gain importance requires a tree model, got {0}")]
    NotTreeModel(ModelFamily),
    #[error("model file: {0}")]
    Format(String),
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Gbdt,
    RandomForest,
    DecisionTree,
    LogisticRegression,
    Knn,
    LinearSvm,
}

impl ModelFamily {
    pub fn is_tree(self) -> bool {
        matches!(
            self,
            ModelFamily::Gbdt | ModelFamily::RandomForest | ModelFamily::DecisionTree
        )
    }

    pub fn uses_scaler(self) -> bool {
        matches!(
            self,
            ModelFamily::LogisticRegression | ModelFamily::Knn | ModelFamily::LinearSvm
        )
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFamily::Gbdt => "gbdt",
            ModelFamily::RandomForest => "random_forest",
            ModelFamily::DecisionTree => "decision_tree",
            ModelFamily::LogisticRegression => "logistic_regression",
            ModelFamily::Knn => "knn",
            ModelFamily::LinearSvm => "linear_svm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    LeafWise,
    LevelWise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbdtParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub growth: Growth,
    pub num_leaves: Option<usize>,
    pub max_depth: Option<usize>,
    pub max_bins: usize,
    pub min_samples_leaf: usize,
    pub min_hessian: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(p))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticParams {
    pub l2: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    Gbdt(GbdtParams),
    RandomForest(ForestParams),
    DecisionTree(TreeParams),
    LogisticRegression(LogisticParams),
    Knn(KnnParams),
    LinearSvm(SvmParams),
}

impl ModelParams {
    pub fn family(&self) -> ModelFamily {
        match self {
            ModelParams::Gbdt(_) => ModelFamily::Gbdt,
            ModelParams::RandomForest(_) => ModelFamily::RandomForest,
            ModelParams::DecisionTree(_) => ModelFamily::DecisionTree,
            ModelParams::LogisticRegression(_) => ModelFamily::LogisticRegression,
            ModelParams::Knn(_) => ModelFamily::Knn,
            ModelParams::LinearSvm(_) => ModelFamily::LinearSvm,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidParam(m.to_string()));
        let rate_ok = |r: f64| r > 0.0 && r <= 1.0;
        match self {
            ModelParams::Gbdt(p) => {
                if !rate_ok(p.learning_rate) {
                    return bad("learning_rate must lie in (0, 1]");
                }
                if !(2..=256).contains(&p.max_bins) {
                    return bad("max_bins must lie in [2, 256]");
                }
                if p.min_samples_leaf == 0 {
                    return bad("min_samples_leaf must be positive");
                }
                if p.num_leaves.is_some_and(|l| l < 2) || p.max_depth == Some(0) {
                    return bad("num_leaves must be >= 2 and max_depth >= 1");
                }
                if p.growth == Growth::LeafWise && p.num_leaves.is_none() {
                    return bad("leaf-wise growth needs num_leaves");
                }
                if p.growth == Growth::LevelWise && p.max_depth.is_none() {
                    return bad("level-wise growth needs max_depth");
                }
                if !(p.l2 >= 0.0 && p.min_hessian >= 0.0) {
                    return bad("l2 and min_hessian must be non-negative");
                }
            }
            ModelParams::RandomForest(p) => {
                if p.trees == 0 || p.max_features == Some(0) || p.max_depth == Some(0) {
                    return bad("trees, max_features and max_depth must be positive");
                }
                if p.min_samples_split < 2 {
                    return bad("min_samples_split must be >= 2");
                }
            }
            ModelParams::DecisionTree(p) => {
                if p.max_depth == Some(0) || p.min_samples_split < 2 {
                    return bad("max_depth must be positive and min_samples_split >= 2");
                }
            }
            ModelParams::LogisticRegression(p) => {
                if !(p.l2 >= 0.0 && p.tolerance > 0.0) || p.max_iter == 0 {
                    return bad("l2 >= 0, tolerance > 0 and max_iter > 0 required");
                }
            }
            ModelParams::Knn(p) => {
                if p.k == 0 {
                    return bad("k must be >= 1");
                }
            }
            ModelParams::LinearSvm(p) => {
                if !(p.c > 0.0) || p.iterations == 0 {
                    return bad("c and iterations must be positive");
                }
            }
        }
        Ok(())
    }
}

/// A named, seeded classifier configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub seed: u64,
    #[serde(flatten)]
    pub params: ModelParams,
}

impl ModelSpec {
    pub fn family(&self) -> ModelFamily {
        self.params.family()
    }

    /// Replaces the named hyperparameters; the family cannot change.
    pub fn with_overrides(
        mut self,
        overrides: &serde_json::Map<String, serde_json::Value>,
    ) -> Result<Self, ModelError> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut value = serde_json::to_value(&self.params).map_err(|e| ModelError::Format(e.to_string()))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| ModelError::Format("parameters are not a map".into()))?;
        for (key, v) in overrides {
            if key == "family" {
                return Err(ModelError::InvalidParam("family cannot be overridden".into()));
            }
            obj.insert(key.clone(), v.clone());
        }
        self.params =
            serde_json::from_value(value).map_err(|e| ModelError::InvalidParam(e.to_string()))?;
        self.params.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelPreset {
    Lgbm,
    Xgb,
    RandomForest,
    LogisticRegression,
    Svm,
    Knn,
    DecisionTree,
}

impl ModelPreset {
    /// Presets in the order of the published results table.
    pub const ALL: [ModelPreset; 7] = [
        ModelPreset::Lgbm,
        ModelPreset::Xgb,
        ModelPreset::RandomForest,
        ModelPreset::LogisticRegression,
        ModelPreset::Svm,
        ModelPreset::Knn,
        ModelPreset::DecisionTree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelPreset::Lgbm => "lgbm",
            ModelPreset::Xgb => "xgb",
            ModelPreset::RandomForest => "random_forest",
            ModelPreset::LogisticRegression => "logistic_regression",
            ModelPreset::Svm => "svm",
            ModelPreset::Knn => "knn",
            ModelPreset::DecisionTree => "decision_tree",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelPreset::Lgbm => "LightGBM-like",
            ModelPreset::Xgb => "XGBoost-like",
            ModelPreset::RandomForest => "Random Forest",
            ModelPreset::LogisticRegression => "Logistic Regression",
            ModelPreset::Svm => "SVM (linear)",
            ModelPreset::Knn => "K-Nearest Neighbors",
            ModelPreset::DecisionTree => "Decision Tree",
        }
    }

    pub fn params(self) -> ModelParams {
        let gbdt = GbdtParams {
            rounds: 100,
            learning_rate: 0.1,
            growth: Growth::LeafWise,
            num_leaves: Some(31),
            max_depth: None,
            max_bins: 255,
            min_samples_leaf: 20,
            min_hessian: 1e-3,
            l2: 1.0,
        };
        match self {
            ModelPreset::Lgbm => ModelParams::Gbdt(gbdt),
            ModelPreset::Xgb => ModelParams::Gbdt(GbdtParams {
                growth: Growth::LevelWise,
                num_leaves: None,
                max_depth: Some(6),
                ..gbdt
            }),
            ModelPreset::RandomForest => ModelParams::RandomForest(ForestParams {
                trees: 100,
                max_features: None,
                bootstrap: true,
                max_depth: None,
                min_samples_split: 2,
            }),
            ModelPreset::LogisticRegression => ModelParams::LogisticRegression(LogisticParams {
                l2: 1.0,
                tolerance: 1e-6,
                max_iter: 1000,
            }),
            ModelPreset::Svm => ModelParams::LinearSvm(SvmParams {
                c: 1.0,
                iterations: 1000,
            }),
            ModelPreset::Knn => ModelParams::Knn(KnnParams { k: 5 }),
            ModelPreset::DecisionTree => ModelParams::DecisionTree(TreeParams {
                max_depth: None,
                min_samples_split: 2,
            }),
        }
    }

    pub fn spec(self, seed: u64) -> ModelSpec {
        ModelSpec {
            name: self.name().to_string(),
            seed,
            params: self.params(),
        }
    }
}

impl FromStr for ModelPreset {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ModelError::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedState {
    Gbdt(GbdtModel),
    Forest { trees: Vec<Tree> },
    Tree { tree: Tree },
    Linear { weights: Vec<f64>, bias: f64 },
    Knn { rows: Vec<Vec<f64>>, positive: Vec<bool>, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    pub scaler: Option<Scaler>,
    pub state: FittedState,
}

/// Features ranked by total split gain, descending; ties keep column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceReport {
    pub entries: Vec<(String, f64)>,
}

fn check_rows(rows: &[Vec<f64>], dim: usize) -> Result<(), ModelError> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(ModelError::Dimension {
                expected: dim,
                got: r.len(),
            });
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { row: i, col: j });
        }
    }
    Ok(())
}

fn columns_of(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = rows.first().map_or(0, Vec::len);
    (0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// Fits a model. Deterministic given the spec, row order and seed.
pub fn train(
    spec: &ModelSpec,
    rows: &[Vec<f64>],
    labels: &[Label],
    feature_names: &[String],
) -> Result<TrainedModel, ModelError> {
    spec.params.validate()?;
    if rows.len() < 2 {
        return Err(ModelError::TooFewRows(rows.len()));
    }
    if rows.len() != labels.len() {
        return Err(ModelError::LabelCount(rows.len(), labels.len()));
    }
    let dim = feature_names.len();
    check_rows(rows, dim)?;
    let y: Vec<f64> = labels.iter().map(|l| l.as_u8() as f64).collect();
    let n_pos = y.iter().filter(|v| **v > 0.5).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(ModelError::SingleClass);
    }

    let (scaler, scaled) = if spec.family().uses_scaler() {
        let s = Scaler::fit(rows)?;
        let t = s.transform(rows);
        (Some(s), Some(t))
    } else {
        (None, None)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let state = match &spec.params {
        ModelParams::Gbdt(p) => FittedState::Gbdt(GbdtModel::fit(&columns_of(rows), &y, p)),
        ModelParams::DecisionTree(p) => {
            let opts = CartOptions {
                max_depth: p.max_depth,
                min_samples_split: p.min_samples_split,
                max_features: None,
            };
            let tree = build_cart(&columns_of(rows), &y, (0..rows.len()).collect(), opts, &mut rng);
            FittedState::Tree { tree }
        }
        ModelParams::RandomForest(p) => {
            let columns = columns_of(rows);
            let m = p
                .max_features
                .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
                .min(dim);
            let opts = CartOptions {
                max_depth: p.max_depth,
                min_samples_split: p.min_samples_split,
                max_features: Some(m),
            };
            // one independent stream per tree, derived up front
            let seeds: Vec<u64> = (0..p.trees).map(|_| rng.random()).collect();
            let n = rows.len();
            let trees = seeds
                .into_iter()
                .map(|s| {
                    let mut tree_rng = ChaCha8Rng::seed_from_u64(s);
                    let sample: Vec<usize> = if p.bootstrap {
                        (0..n).map(|_| tree_rng.random_range(0..n)).collect()
                    } else {
                        (0..n).collect()
                    };
                    build_cart(&columns, &y, sample, opts, &mut tree_rng)
                })
                .collect();
            FittedState::Forest { trees }
        }
        ModelParams::LogisticRegression(p) => {
            let fit = logistic::fit(scaled.as_ref().unwrap(), &y, p.l2, p.tolerance, p.max_iter);
            let mut weights = fit.params;
            let bias = weights.pop().unwrap();
            FittedState::Linear { weights, bias }
        }
        ModelParams::LinearSvm(p) => {
            let (weights, bias) = svm::fit(scaled.as_ref().unwrap(), &y, p.c, p.iterations);
            FittedState::Linear { weights, bias }
        }
        ModelParams::Knn(p) => FittedState::Knn {
            rows: scaled.unwrap(),
            positive: y.iter().map(|v| *v > 0.5).collect(),
            k: p.k,
        },
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        feature_names: feature_names.to_vec(),
        scaler,
        state,
    })
}

/// Fits on every row of a feature table.
pub fn train_table(spec: &ModelSpec, table: &FeatureTable) -> Result<TrainedModel, ModelError> {
    train(spec, &table.matrix(), &table.labels(), &table.columns)
}

impl TrainedModel {
    pub fn family(&self) -> ModelFamily {
        self.spec.family()
    }

    /// Positive-class scores in `[0, 1]`, one per row.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        check_rows(rows, self.feature_names.len())?;
        let prepared;
        let rows = match &self.scaler {
            Some(s) => {
                prepared = s.transform(rows);
                &prepared[..]
            }
            None => rows,
        };
        Ok(rows.iter().map(|r| self.score_row(r)).collect())
    }

    fn score_row(&self, row: &[f64]) -> f64 {
        match &self.state {
            FittedState::Gbdt(m) => sigmoid(m.decision_value(row)),
            FittedState::Tree { tree } => tree.predict_row(row),
            FittedState::Forest { trees } => {
                trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / trees.len() as f64
            }
            FittedState::Linear { weights, bias } => {
                sigmoid(bias + row.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>())
            }
            FittedState::Knn { rows, positive, k } => {
                let mut dist: Vec<(f64, usize)> = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let d = r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                        (d, i)
                    })
                    .collect();
                let k = (*k).min(dist.len());
                let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if k < dist.len() {
                    dist.select_nth_unstable_by(k - 1, by_dist);
                }
                dist[..k].iter().filter(|(_, i)| positive[*i]).count() as f64 / k as f64
            }
        }
    }

    /// Total split gain per feature over every tree of the model.
    pub fn gain_importance(&self) -> Result<ImportanceReport, ModelError> {
        let mut gains = vec![0.0; self.feature_names.len()];
        match &self.state {
            FittedState::Gbdt(m) => m.trees.iter().for_each(|t| t.accumulate_gain(&mut gains)),
            FittedState::Forest { trees } => trees.iter().for_each(|t| t.accumulate_gain(&mut gains)),
            FittedState::Tree { tree } => tree.accumulate_gain(&mut gains),
            _ => return Err(ModelError::NotTreeModel(self.family())),
        }
        let mut entries: Vec<(String, f64)> =
            self.feature_names.iter().cloned().zip(gains).collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(ImportanceReport { entries })
    }

    /// Writes the model as versioned JSON.
    pub fn save<W: Write>(&self, writer: W) -> Result<(), ModelError> {
        let doc = serde_json::json!({
            "format": MODEL_FORMAT,
            "version": MODEL_FORMAT_VERSION,
            "model": self,
        });
        serde_json::to_writer(writer, &doc).map_err(|e| ModelError::Format(e.to_string()))
    }

    pub fn load<R: Read>(reader: R) -> Result<Self, ModelError> {
        let mut doc: serde_json::Value =
            serde_json::from_reader(reader).map_err(|e| ModelError::Format(e.to_string()))?;
        if doc["format"] != MODEL_FORMAT {
            return Err(ModelError::Format("not a model file".into()));
        }
        if doc["version"] != MODEL_FORMAT_VERSION {
            return Err(ModelError::Format(format!(
                "unsupported version {}",
                doc["version"]
            )));
        }
        serde_json::from_value(doc["model"].take()).map_err(|e| ModelError::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("f{i}")).collect()
    }

    fn separable(n: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![i as f64, ((i * 31) % 17) as f64, ((i * 7) % 5) as f64])
            .collect();
        let labels = (0..n)
            .map(|i| if i >= n / 2 { Label::Patient } else { Label::Control })
            .collect();
        (rows, labels)
    }

    #[test]
    fn knn_one_recovers_training_rows() {
        let (rows, labels) = separable(40);
        let mut spec = ModelPreset::Knn.spec(0);
        spec.params = ModelParams::Knn(KnnParams { k: 1 });
        let m = train(&spec, &rows, &labels, &names(3)).unwrap();
        let p = m.predict_proba(&rows).unwrap();
        for (s, l) in p.iter().zip(&labels) {
            assert_eq!(*s, l.as_u8() as f64);
        }
    }

    #[test]
    fn knn_three_counts_neighbors() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0], vec![10.0], vec![11.0]];
        let labels = vec![Label::Patient, Label::Patient, Label::Control, Label::Control, Label::Control];
        let mut spec = ModelPreset::Knn.spec(0);
        spec.params = ModelParams::Knn(KnnParams { k: 3 });
        let m = train(&spec, &rows, &labels, &names(1)).unwrap();
        let p = m.predict_proba(&[vec![0.5]]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn knn_distance_ties_break_by_row_index() {
        // symmetric around zero, so the query is equidistant from rows 0 and 1
        let rows = vec![vec![-1.0], vec![1.0], vec![-3.0], vec![3.0]];
        let mut spec = ModelPreset::Knn.spec(0);
        spec.params = ModelParams::Knn(KnnParams { k: 1 });
        for (first, expected) in [(Label::Patient, 1.0), (Label::Control, 0.0)] {
            let other = if first == Label::Patient { Label::Control } else { Label::Patient };
            let labels = vec![first, other, Label::Control, Label::Patient];
            let m = train(&spec, &rows, &labels, &names(1)).unwrap();
            assert_eq!(m.predict_proba(&[vec![0.0]]).unwrap()[0], expected);
        }
    }

    #[test]
    fn logistic_constant_features_give_half() {
        let rows = vec![vec![3.0, 3.0]; 8];
        let labels: Vec<Label> = (0..8).map(|i| if i % 2 == 0 { Label::Patient } else { Label::Control }).collect();
        let m = train(&ModelPreset::LogisticRegression.spec(0), &rows, &labels, &names(2)).unwrap();
        for p in m.predict_proba(&rows).unwrap() {
            assert!((p - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn every_family_scores_in_unit_interval() {
        let (rows, labels) = separable(60);
        for preset in ModelPreset::ALL {
            let mut spec = preset.spec(3);
            if let ModelParams::Gbdt(p) = &mut spec.params {
                p.min_samples_leaf = 5;
            }
            let m = train(&spec, &rows, &labels, &names(3)).unwrap();
            let p = m.predict_proba(&rows[..7]).unwrap();
            assert_eq!(p.len(), 7);
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)), "{preset:?}");
        }
    }

    #[test]
    fn errors_on_bad_input() {
        let (rows, labels) = separable(10);
        let spec = ModelPreset::DecisionTree.spec(0);
        let one_class = vec![Label::Control; 10];
        assert!(matches!(train(&spec, &rows, &one_class, &names(3)), Err(ModelError::SingleClass)));
        let mut bad = rows.clone();
        bad[2][1] = f64::NAN;
        assert!(matches!(train(&spec, &bad, &labels, &names(3)), Err(ModelError::NonFinite { row: 2, col: 1 })));
        let m = train(&spec, &rows, &labels, &names(3)).unwrap();
        assert!(matches!(m.predict_proba(&[vec![1.0]]), Err(ModelError::Dimension { .. })));
        assert!(matches!(
            train(&spec, &rows[..1], &labels[..1], &names(3)),
            Err(ModelError::TooFewRows(1))
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        let mut spec = ModelPreset::Lgbm.spec(0);
        if let ModelParams::Gbdt(p) = &mut spec.params {
            p.learning_rate = 0.0;
        }
        let (rows, labels) = separable(10);
        assert!(matches!(train(&spec, &rows, &labels, &names(3)), Err(ModelError::InvalidParam(_))));
        let mut spec = ModelPreset::Knn.spec(0);
        spec.params = ModelParams::Knn(KnnParams { k: 0 });
        assert!(spec.params.validate().is_err());
    }

    #[test]
    fn importance_only_for_trees() {
        let (rows, labels) = separable(30);
        let m = train(&ModelPreset::Knn.spec(0), &rows, &labels, &names(3)).unwrap();
        assert!(matches!(m.gain_importance(), Err(ModelError::NotTreeModel(ModelFamily::Knn))));
    }

    #[test]
    fn stump_has_one_nonzero_gain() {
        let (rows, labels) = separable(30);
        let mut spec = ModelPreset::DecisionTree.spec(0);
        spec.params = ModelParams::DecisionTree(TreeParams { max_depth: Some(1), min_samples_split: 2 });
        let m = train(&spec, &rows, &labels, &names(3)).unwrap();
        let report = m.gain_importance().unwrap();
        assert_eq!(report.entries.len(), 3);
        assert_eq!(report.entries.iter().filter(|(_, g)| *g > 0.0).count(), 1);
        assert_eq!(report.entries[0].0, "f0");
    }

    #[test]
    fn zero_round_gbdt() {
        let (rows, labels) = separable(30);
        let mut spec = ModelPreset::Lgbm.spec(0);
        if let ModelParams::Gbdt(p) = &mut spec.params {
            p.rounds = 0;
        }
        let m = train(&spec, &rows, &labels, &names(3)).unwrap();
        assert!(m.predict_proba(&rows).unwrap().iter().all(|p| (p - 0.5).abs() < 1e-12));
        assert!(m.gain_importance().unwrap().entries.iter().all(|(_, g)| *g == 0.0));
    }

    #[test]
    fn overrides_replace_parameters() {
        let mut o = serde_json::Map::new();
        o.insert("k".into(), serde_json::json!(3));
        let spec = ModelPreset::Knn.spec(0).with_overrides(&o).unwrap();
        assert_eq!(spec.params, ModelParams::Knn(KnnParams { k: 3 }));
        o.insert("k".into(), serde_json::json!(0));
        assert!(ModelPreset::Knn.spec(0).with_overrides(&o).is_err());
        o.clear();
        o.insert("depth".into(), serde_json::json!(3));
        assert!(ModelPreset::Knn.spec(0).with_overrides(&o).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let (rows, labels) = separable(40);
        for preset in [ModelPreset::Xgb, ModelPreset::Svm, ModelPreset::Knn] {
            let m = train(&preset.spec(1), &rows, &labels, &names(3)).unwrap();
            let mut buf = Vec::new();
            m.save(&mut buf).unwrap();
            let back = TrainedModel::load(buf.as_slice()).unwrap();
            assert_eq!(back, m);
        }
        assert!(TrainedModel::load(&b"{\"format\":\"x\"}"[..]).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let (rows, labels) = separable(50);
        for preset in ModelPreset::ALL {
            let a = train(&preset.spec(9), &rows, &labels, &names(3)).unwrap();
            let b = train(&preset.spec(9), &rows, &labels, &names(3)).unwrap();
            assert_eq!(a, b);
        }
    }
}
