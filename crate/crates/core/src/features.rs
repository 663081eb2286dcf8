//! Per-segment statistical features and feature tables.
//!
//! Variance-type quantities use the population form. Degenerate inputs (zero
//! variance, zero mean, a single distinct value) map to 0 so that every cell of
//! a table is finite.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Corpus, Label};
use crate::segmentation::{segment_values, validate_scheme, RowUnit, SegmentationScheme};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot extract features from an empty segment")]
    EmptyInput,
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("duplicate feature '{0}'")]
    DuplicateFeature(String),
    #[error("invalid scheme '{name}': {violation}")]
    InvalidScheme {
        name: String,
        violation: crate::segmentation::SchemeViolation,
    },
    #[error("feature table: {0}")]
    Table(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Mean,
    Median,
    StdDev,
    PropZeros,
    Skewness,
    Kurtosis,
    Max,
    Mad,
    Iqr,
    Cv,
    Entropy,
    AutocorrLag1,
    NPeaks,
    NTroughs,
    Semivariance,
    Rms,
}

impl Feature {
    pub const ALL: [Feature; 16] = [
        Feature::Mean,
        Feature::Median,
        Feature::StdDev,
        Feature::PropZeros,
        Feature::Skewness,
        Feature::Kurtosis,
        Feature::Max,
        Feature::Mad,
        Feature::Iqr,
        Feature::Cv,
        Feature::Entropy,
        Feature::AutocorrLag1,
        Feature::NPeaks,
        Feature::NTroughs,
        Feature::Semivariance,
        Feature::Rms,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Feature::Mean => "mean",
            Feature::Median => "median",
            Feature::StdDev => "std_dev",
            Feature::PropZeros => "prop_zeros",
            Feature::Skewness => "skewness",
            Feature::Kurtosis => "kurtosis",
            Feature::Max => "max",
            Feature::Mad => "mad",
            Feature::Iqr => "iqr",
            Feature::Cv => "cv",
            Feature::Entropy => "entropy",
            Feature::AutocorrLag1 => "autocorr_lag1",
            Feature::NPeaks => "n_peaks",
            Feature::NTroughs => "n_troughs",
            Feature::Semivariance => "semivariance",
            Feature::Rms => "rms",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Feature {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| FeatureError::UnknownFeature(s.to_string()))
    }
}

/// Ordered, duplicate-free list of features to compute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureSet(Vec<Feature>);

impl FeatureSet {
    pub fn new(features: Vec<Feature>) -> Result<Self, FeatureError> {
        let mut seen = std::collections::HashSet::new();
        for f in &features {
            if !seen.insert(*f) {
                return Err(FeatureError::DuplicateFeature(f.id().to_string()));
            }
        }
        Ok(Self(features))
    }

    pub fn features(&self) -> &[Feature] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for FeatureSet {
    fn default() -> Self {
        Self(Feature::ALL.to_vec())
    }
}

/// Feature values in the order of the [`FeatureSet`] they were computed with.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub features: Vec<Feature>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, feature: Feature) -> Option<f64> {
        self.features
            .iter()
            .position(|f| *f == feature)
            .map(|i| self.values[i])
    }
}

/// Linear-interpolation quantile at position `(n - 1) * p` of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Moments and order statistics shared between features.
struct Summary {
    n: f64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
    sum_sq: f64,
    semivar_sum: f64,
    lag1: f64,
}

impl Summary {
    fn new(values: &[u32]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
        let (mut m2, mut m3, mut m4, mut sum_sq, mut semivar_sum) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &v in values {
            let x = v as f64;
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
            sum_sq += x * x;
            if x < mean {
                semivar_sum += d2;
            }
        }
        let lag1 = values
            .windows(2)
            .map(|w| (w[0] as f64 - mean) * (w[1] as f64 - mean))
            .sum();
        Self {
            n,
            mean,
            m2: m2 / n,
            m3: m3 / n,
            m4: m4 / n,
            sum_sq,
            semivar_sum,
            lag1,
        }
    }
}

/// Shannon entropy (nats) of a histogram over `[0, max]` with
/// `min(16, distinct)` equal-width bins; the top edge is closed.
fn histogram_entropy(sorted: &[u32]) -> f64 {
    let max = *sorted.last().unwrap() as u64;
    let mut distinct = 1usize;
    for w in sorted.windows(2) {
        if w[0] != w[1] {
            distinct += 1;
        }
    }
    if distinct <= 1 {
        return 0.0;
    }
    let bins = distinct.min(16) as u64;
    let mut counts = vec![0usize; bins as usize];
    for &v in sorted {
        let idx = ((v as u64 * bins) / max).min(bins - 1);
        counts[idx as usize] += 1;
    }
    let n = sorted.len() as f64;
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn count_extrema(values: &[u32]) -> (usize, usize) {
    let mut peaks = 0;
    let mut troughs = 0;
    for w in values.windows(3) {
        if w[1] > w[0] && w[1] > w[2] {
            peaks += 1;
        } else if w[1] < w[0] && w[1] < w[2] {
            troughs += 1;
        }
    }
    (peaks, troughs)
}

/// Computes the requested features over one segment's values.
pub fn extract_features(values: &[u32], set: &FeatureSet) -> Result<FeatureVector, FeatureError> {
    if values.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let s = Summary::new(values);
    let mut sorted_int = values.to_vec();
    sorted_int.sort_unstable();
    let sorted: Vec<f64> = sorted_int.iter().map(|&v| v as f64).collect();
    let median = quantile_sorted(&sorted, 0.5);
    let std_dev = s.m2.sqrt();

    let out = set
        .features()
        .iter()
        .map(|f| match f {
            Feature::Mean => s.mean,
            Feature::Median => median,
            Feature::StdDev => std_dev,
            Feature::PropZeros => {
                sorted_int.iter().take_while(|&&v| v == 0).count() as f64 / s.n
            }
            Feature::Skewness => {
                if s.m2 > 0.0 {
                    s.m3 / s.m2.powf(1.5)
                } else {
                    0.0
                }
            }
            Feature::Kurtosis => {
                if s.m2 > 0.0 {
                    s.m4 / (s.m2 * s.m2) - 3.0
                } else {
                    0.0
                }
            }
            Feature::Max => *sorted.last().unwrap(),
            Feature::Mad => {
                let mut dev: Vec<f64> = sorted.iter().map(|x| (x - median).abs()).collect();
                dev.sort_unstable_by(f64::total_cmp);
                quantile_sorted(&dev, 0.5)
            }
            Feature::Iqr => quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
            Feature::Cv => {
                if s.mean > 0.0 {
                    std_dev / s.mean
                } else {
                    0.0
                }
            }
            Feature::Entropy => histogram_entropy(&sorted_int),
            Feature::AutocorrLag1 => {
                let denom = s.m2 * s.n;
                if denom > 0.0 {
                    (s.lag1 / denom).clamp(-1.0, 1.0)
                } else {
                    0.0
                }
            }
            Feature::NPeaks => count_extrema(values).0 as f64,
            Feature::NTroughs => count_extrema(values).1 as f64,
            Feature::Semivariance => s.semivar_sum / s.n,
            Feature::Rms => (s.sum_sq / s.n).sqrt(),
        })
        .collect();
    Ok(FeatureVector {
        features: set.features().to_vec(),
        values: out,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub subject_id: String,
    /// `None` for per-subject rows.
    pub date: Option<NaiveDate>,
    pub label: Label,
    pub values: Vec<f64>,
}

impl FeatureRow {
    /// Rows are grouped by subject for cross-validation.
    pub fn group_id(&self) -> &str {
        &self.subject_id
    }
}

/// Rectangular table of feature rows; columns are `<segment>_<feature>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub scheme: String,
    pub unit: RowUnit,
    pub columns: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn groups(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.subject_id.as_str()).collect()
    }

    /// Row-major copy of the feature values.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FeatureError> {
        let mut out = std::io::BufWriter::new(writer);
        write!(out, "subject_id,date,label")?;
        for c in &self.columns {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
        for r in &self.rows {
            let date = r
                .date
                .map(|d| d.format("%Y-%m-%d").to_string())
                .unwrap_or_else(|| "all".to_string());
            write!(out, "{},{},{}", r.subject_id, date, r.label)?;
            for v in &r.values {
                write!(out, ",{}", format_float(*v))?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, scheme: &str) -> Result<Self, FeatureError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 3
            || &headers[0] != "subject_id"
            || &headers[1] != "date"
            || &headers[2] != "label"
        {
            return Err(FeatureError::Table(
                "header must start with subject_id,date,label".into(),
            ));
        }
        let columns: Vec<String> = headers.iter().skip(3).map(str::to_string).collect();
        let mut rows = Vec::new();
        let mut unit = RowUnit::PerDay;
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let bad = |what: &str| FeatureError::Table(format!("row {}: invalid {what}", i + 1));
            let date = match &record[1] {
                "all" => {
                    unit = RowUnit::PerSubject;
                    None
                }
                d => Some(NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|_| bad("date"))?),
            };
            let label = Label::parse(&record[2]).ok_or_else(|| bad("label"))?;
            let values = record
                .iter()
                .skip(3)
                .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| bad("value"))?;
            rows.push(FeatureRow {
                subject_id: record[0].to_string(),
                date,
                label,
                values,
            });
        }
        Ok(Self {
            scheme: scheme.to_string(),
            unit,
            columns,
            rows,
        })
    }
}

/// Renders a float with 17 significant digits so it parses back exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn column_names(scheme: &SegmentationScheme, set: &FeatureSet) -> Vec<String> {
    scheme
        .segments
        .iter()
        .flat_map(|seg| set.features().iter().map(move |f| format!("{}_{}", seg.name, f.id())))
        .collect()
}

/// Builds the feature table of a corpus under a scheme.
///
/// Per-day schemes give one row per subject-day. Per-subject schemes
/// concatenate each subject's days in date order and segment the result
/// day-by-day before computing features, giving one row per subject.
pub fn featurize_corpus(
    corpus: &Corpus,
    scheme: &SegmentationScheme,
    set: &FeatureSet,
) -> Result<FeatureTable, FeatureError> {
    validate_scheme(scheme).map_err(|violation| FeatureError::InvalidScheme {
        name: scheme.name.clone(),
        violation,
    })?;
    if corpus.days().is_empty() {
        return Err(FeatureError::Table("empty corpus".into()));
    }
    let columns = column_names(scheme, set);
    let featurize = |days: &[&crate::ingest::DaySeries]| -> Result<Vec<f64>, FeatureError> {
        let mut row = Vec::with_capacity(columns.len());
        for seg in &scheme.segments {
            let values: Vec<u32> = days
                .iter()
                .flat_map(|d| segment_values(d.values(), seg))
                .collect();
            row.extend(extract_features(&values, set)?.values);
        }
        Ok(row)
    };

    let rows = match scheme.unit {
        RowUnit::PerDay => corpus
            .days()
            .par_iter()
            .map(|d| {
                Ok(FeatureRow {
                    subject_id: d.subject_id.clone(),
                    date: Some(d.date),
                    label: d.label,
                    values: featurize(&[d])?,
                })
            })
            .collect::<Result<Vec<_>, FeatureError>>()?,
        RowUnit::PerSubject => corpus
            .subjects()
            .par_iter()
            .map(|(id, info)| {
                let days: Vec<_> = corpus.subject_days(id).collect();
                Ok(FeatureRow {
                    subject_id: id.clone(),
                    date: None,
                    label: info.label,
                    values: featurize(&days)?,
                })
            })
            .collect::<Result<Vec<_>, FeatureError>>()?,
    };
    Ok(FeatureTable {
        scheme: scheme.name.clone(),
        unit: scheme.unit,
        columns,
        rows,
    })
}
