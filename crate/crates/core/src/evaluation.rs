//! Stratified k-fold cross-validation, AUC-ROC and F1, and the
//! scheme-by-model experiment matrix.
//!
//! Fold metrics are averaged across folds (not pooled). F1 thresholds the
//! positive-class probability at 0.5. Standard deviations are population
//! standard deviations over folds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{featurize_corpus, format_float, FeatureError, FeatureSet, FeatureTable};
use crate::ingest::{Corpus, Label};
use crate::models::{train, ModelError, ModelSpec, TrainedModel};
use crate::segmentation::{Preset, SegmentationScheme};

/// Probability threshold for counting a prediction as positive.
pub const F1_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("{count} rows cannot fill k = {k} folds")]
    TooFewRows { count: usize, k: usize },
    #[error("class {label} has {count} rows")]
    ClassTooSmall { label: Label, count: usize, k: usize },
    #[error("{count} subjects cannot fill k = {k} folds")]
    TooFewSubjects { count: usize, k: usize },
    #[error("subject {0} has rows with different labels")]
    MixedSubject(String),
    #[error("AUC needs both classes among the labels")]
    SingleClass,
    #[error("{0} scores but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("score {0} is not a number")]
    NanScore(usize),
    #[error("fold plan covers {plan} rows, table has {table}")]
    PlanMismatch { plan: usize, table: usize },
    #[error("nothing to evaluate: {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvMode {
    RowStratified,
    SubjectGrouped,
}

impl std::fmt::Display for CvMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CvMode::RowStratified => "row_stratified",
            CvMode::SubjectGrouped => "subject_grouped",
        })
    }
}

impl std::str::FromStr for CvMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "row_stratified" | "row" => Ok(CvMode::RowStratified),
            "subject_grouped" | "grouped" | "subject" => Ok(CvMode::SubjectGrouped),
            _ => Err(format!("unknown cv mode '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub mode: CvMode,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Deals shuffled items round-robin over the folds, continuing the rotation
/// from one class to the next so fold sizes stay balanced too.
fn deal(items_per_class: [Vec<usize>; 2], k: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut offset = 0;
    for mut items in items_per_class {
        items.shuffle(rng);
        for (j, item) in items.iter().enumerate() {
            out.push((*item, (offset + j) % k));
        }
        offset = (offset + items.len()) % k;
    }
    out
}

/// Assigns rows to `k` folds, preserving class proportions.
///
/// Each fold receives `floor(n_c / k)` or `ceil(n_c / k)` rows of class `c`.
/// A class smaller than `k` leaves some folds without that class.
///
/// In grouped mode whole subjects are dealt to folds (stratified by subject
/// label), so a subject never straddles two folds.
pub fn stratified_kfold(
    labels: &[Label],
    groups: &[&str],
    k: usize,
    seed: u64,
    mode: CvMode,
) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidK(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    match mode {
        CvMode::RowStratified => {
            let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
            for (i, l) in labels.iter().enumerate() {
                by_class[l.as_u8() as usize].push(i);
            }
            if labels.len() < k {
                return Err(EvalError::TooFewRows { count: labels.len(), k });
            }
            for (c, rows) in by_class.iter().enumerate() {
                if rows.is_empty() {
                    return Err(EvalError::ClassTooSmall {
                        label: Label::from_u8(c as u8).unwrap(),
                        count: rows.len(),
                        k,
                    });
                }
            }
            for (row, fold) in deal(by_class, k, &mut rng) {
                assignments[row] = fold;
            }
        }
        CvMode::SubjectGrouped => {
            if groups.len() != labels.len() {
                return Err(EvalError::LengthMismatch(groups.len(), labels.len()));
            }
            let mut subjects: BTreeMap<&str, (Label, Vec<usize>)> = BTreeMap::new();
            for (i, (g, l)) in groups.iter().zip(labels).enumerate() {
                let entry = subjects.entry(g).or_insert((*l, Vec::new()));
                if entry.0 != *l {
                    return Err(EvalError::MixedSubject(g.to_string()));
                }
                entry.1.push(i);
            }
            if subjects.len() < k {
                return Err(EvalError::TooFewSubjects {
                    count: subjects.len(),
                    k,
                });
            }
            let ids: Vec<&(Label, Vec<usize>)> = subjects.values().collect();
            let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
            for (i, (l, _)) in ids.iter().enumerate() {
                by_class[l.as_u8() as usize].push(i);
            }
            for (subject, fold) in deal(by_class, k, &mut rng) {
                for &row in &ids[subject].1 {
                    assignments[row] = fold;
                }
            }
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        mode,
        seed,
    })
}

fn check_scores(scores: &[f64], labels: &[Label]) -> Result<(), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(EvalError::NanScore(i));
    }
    Ok(())
}

/// Area under the ROC curve via the Mann-Whitney statistic with mid-ranks,
/// so tied scores count one half.
pub fn auc_roc(scores: &[f64], labels: &[Label]) -> Result<f64, EvalError> {
    check_scores(scores, labels)?;
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum of positives, kept integral
    let mut rank_sum2 = 0u64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share the mid-rank (i + j + 2) / 2
        let twice_mid = (i + j + 2) as u64;
        let pos_in_tie = order[i..=j].iter().filter(|&&r| labels[r].is_positive()).count() as u64;
        rank_sum2 += twice_mid * pos_in_tie;
        i = j + 1;
    }
    let (p, n) = (n_pos as u64, n_neg as u64);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / 2.0 / (p * n) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

pub fn confusion(scores: &[f64], labels: &[Label], threshold: f64) -> Confusion {
    let mut c = Confusion::default();
    for (s, l) in scores.iter().zip(labels) {
        match (*s >= threshold, l.is_positive()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

/// F1 of the patient class with predictions `score >= threshold`; 0 when
/// there are no true positives.
pub fn f1(scores: &[f64], labels: &[Label], threshold: f64) -> Result<f64, EvalError> {
    check_scores(scores, labels)?;
    let c = confusion(scores, labels, threshold);
    if c.tp == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * c.tp as f64 / (2 * c.tp + c.fp + c.fn_) as f64)
}

/// ROC curve points `(fpr, tpr)` from the origin to `(1, 1)`, one per distinct threshold.
pub fn roc_points(scores: &[f64], labels: &[Label]) -> Vec<(f64, f64)> {
    let n_pos = labels.iter().filter(|l| l.is_positive()).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    for (idx, &i) in order.iter().enumerate() {
        if labels[i].is_positive() {
            tp += 1.0;
        } else {
            fp += 1.0;
        }
        let last_of_tie = idx + 1 == order.len() || scores[order[idx + 1]] != scores[i];
        if last_of_tie {
            pts.push((
                if n_neg > 0.0 { fp / n_neg } else { 0.0 },
                if n_pos > 0.0 { tp / n_pos } else { 0.0 },
            ));
        }
    }
    pts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// `None` when the held-out rows hold a single class.
    pub auc: Option<f64>,
    pub f1: f64,
    pub roc: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub scheme: String,
    pub model: String,
    pub family: String,
    pub folds: Vec<FoldMetrics>,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub seed: u64,
    pub config_digest: String,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

fn subset<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Fits a model on the given rows of a table only.
pub fn fit_rows(
    table: &FeatureTable,
    spec: &ModelSpec,
    rows: &[usize],
) -> Result<TrainedModel, EvalError> {
    let x: Vec<Vec<f64>> = rows.iter().map(|&i| table.rows[i].values.clone()).collect();
    let y: Vec<Label> = rows.iter().map(|&i| table.rows[i].label).collect();
    Ok(train(spec, &x, &y, &table.columns)?)
}

/// Short digest identifying everything that determines a cell's result.
pub fn config_digest(scheme: &str, spec: &ModelSpec, plan: &FoldPlan) -> String {
    let doc = serde_json::json!({
        "scheme": scheme,
        "model": spec,
        "k": plan.k,
        "mode": plan.mode,
        "seed": plan.seed,
    });
    let hash = Sha256::digest(doc.to_string().as_bytes());
    hash.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Trains on each fold's complement and scores the held-out rows.
pub fn cross_validate(
    table: &FeatureTable,
    spec: &ModelSpec,
    plan: &FoldPlan,
) -> Result<CvReport, EvalError> {
    if plan.assignments.len() != table.n_rows() {
        return Err(EvalError::PlanMismatch {
            plan: plan.assignments.len(),
            table: table.n_rows(),
        });
    }
    let labels = table.labels();
    let folds = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let train_rows = plan.train_rows(fold);
            let test_rows = plan.test_rows(fold);
            let model = fit_rows(table, spec, &train_rows)?;
            let x_test: Vec<Vec<f64>> = subset(&table.rows, &test_rows)
                .into_iter()
                .map(|r| r.values)
                .collect();
            let y_test = subset(&labels, &test_rows);
            let scores = model.predict_proba(&x_test)?;
            let auc = match auc_roc(&scores, &y_test) {
                Ok(a) => Some(a),
                Err(EvalError::SingleClass) => {
                    warn!(
                        "{} / {}: fold {fold} has a single class among held-out rows; AUC excluded",
                        table.scheme, spec.name
                    );
                    None
                }
                Err(e) => return Err(e),
            };
            Ok(FoldMetrics {
                fold,
                n_train: train_rows.len(),
                n_test: test_rows.len(),
                auc,
                f1: f1(&scores, &y_test, F1_THRESHOLD)?,
                roc: roc_points(&scores, &y_test),
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let aucs: Vec<f64> = folds.iter().filter_map(|f| f.auc).collect();
    let f1s: Vec<f64> = folds.iter().map(|f| f.f1).collect();
    let (auc_mean, auc_std) = mean_std(&aucs);
    let (f1_mean, f1_std) = mean_std(&f1s);
    Ok(CvReport {
        scheme: table.scheme.clone(),
        model: spec.name.clone(),
        family: spec.family().to_string(),
        folds,
        auc_mean,
        auc_std,
        f1_mean,
        f1_std,
        seed: plan.seed,
        config_digest: config_digest(&table.scheme, spec, plan),
    })
}

/// Fold plan for a table; grouped mode groups rows by subject.
pub fn plan_for(table: &FeatureTable, k: usize, seed: u64, mode: CvMode) -> Result<FoldPlan, EvalError> {
    stratified_kfold(&table.labels(), &table.groups(), k, seed, mode)
}

#[derive(Debug, Clone)]
pub struct MatrixResult {
    pub reports: Vec<CvReport>,
}

/// Position of a scheme in the published table order; custom schemes follow.
fn scheme_rank(name: &str) -> usize {
    name.parse::<Preset>()
        .ok()
        .and_then(|p| Preset::ALL.iter().position(|q| *q == p))
        .unwrap_or(Preset::ALL.len())
}

/// Evaluates every (scheme, model) cell with the same fold seed.
pub fn run_matrix(
    corpus: &Corpus,
    schemes: &[SegmentationScheme],
    specs: &[ModelSpec],
    k: usize,
    seed: u64,
    mode: CvMode,
) -> Result<MatrixResult, EvalError> {
    if schemes.is_empty() {
        return Err(EvalError::Empty("no schemes"));
    }
    let set = FeatureSet::default();
    let tables = schemes
        .par_iter()
        .map(|s| featurize_corpus(corpus, s, &set))
        .collect::<Result<Vec<_>, FeatureError>>()?;
    evaluate_tables(&tables, specs, k, seed, mode)
}

/// Evaluates every (table, model) cell. Reports follow the published scheme
/// order, then model order.
pub fn evaluate_tables(
    tables: &[FeatureTable],
    specs: &[ModelSpec],
    k: usize,
    seed: u64,
    mode: CvMode,
) -> Result<MatrixResult, EvalError> {
    if tables.is_empty() {
        return Err(EvalError::Empty("no schemes"));
    }
    if specs.is_empty() {
        return Err(EvalError::Empty("no models"));
    }
    let mut ordered: Vec<&FeatureTable> = tables.iter().collect();
    ordered.sort_by_key(|t| scheme_rank(&t.scheme));
    let plans = ordered
        .iter()
        .map(|t| plan_for(t, k, seed, mode))
        .collect::<Result<Vec<_>, EvalError>>()?;
    let cells: Vec<(usize, usize)> = (0..ordered.len())
        .flat_map(|t| (0..specs.len()).map(move |m| (t, m)))
        .collect();
    let reports = cells
        .par_iter()
        .map(|&(t, m)| cross_validate(ordered[t], &specs[m], &plans[t]))
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(MatrixResult { reports })
}

impl MatrixResult {
    /// `scheme,model,auc_mean,auc_std,f1_mean,f1_std,seed,config_digest`
    pub fn write_report<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scheme,model,auc_mean,auc_std,f1_mean,f1_std,seed,config_digest")?;
        for r in &self.reports {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.scheme,
                r.model,
                format_float(r.auc_mean),
                format_float(r.auc_std),
                format_float(r.f1_mean),
                format_float(r.f1_std),
                r.seed,
                r.config_digest
            )?;
        }
        Ok(())
    }

    /// Long format: one line per fold.
    pub fn write_folds<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scheme,model,fold,n_train,n_test,auc,f1")?;
        for r in &self.reports {
            for f in &r.folds {
                let auc = f.auc.map(format_float).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.scheme,
                    r.model,
                    f.fold,
                    f.n_train,
                    f.n_test,
                    auc,
                    format_float(f.f1)
                )?;
            }
        }
        Ok(())
    }

    /// `scheme,model,fold,fpr,tpr`
    pub fn write_roc<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scheme,model,fold,fpr,tpr")?;
        for r in &self.reports {
            for f in &r.folds {
                for (fpr, tpr) in &f.roc {
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.scheme,
                        r.model,
                        f.fold,
                        format_float(*fpr),
                        format_float(*tpr)
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Fixed-width grid with metrics rounded to two decimals.
    pub fn render_grid(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<12} {:<22} {:>7} {:>7}", "Scheme", "Model", "AUC", "F1");
        let mut last = "";
        for r in &self.reports {
            let scheme = if r.scheme != last { r.scheme.as_str() } else { "" };
            last = &r.scheme;
            let _ = writeln!(
                s,
                "{:<12} {:<22} {:>7.2} {:>7.2}",
                scheme, r.model, r.auc_mean, r.f1_mean
            );
        }
        s
    }
}
