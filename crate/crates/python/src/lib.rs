//! Python bindings: feature extraction, segmentation, metrics, fold plans,
//! synthetic corpora, feature tables and trained models.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use actiseg_core::evaluation::{self, CvMode, CvReport};
use actiseg_core::features::{self, Feature, FeatureSet, FeatureTable};
use actiseg_core::ingest::{self, ColumnMap, Label, LabelSource};
use actiseg_core::models::{self, ModelPreset, ModelSpec, TrainedModel};
use actiseg_core::segmentation::{self, Preset, RowUnit, SegmentationScheme};
use actiseg_core::synth;
use pyo3::exceptions::{PyIOError, PyTypeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn labels_from(raw: &[u8]) -> PyResult<Vec<Label>> {
    raw.iter()
        .map(|&v| Label::from_u8(v).ok_or_else(|| value_err(format!("label must be 0 or 1, got {v}"))))
        .collect()
}

fn feature_set(names: Option<Vec<String>>) -> PyResult<FeatureSet> {
    match names {
        None => Ok(FeatureSet::default()),
        Some(n) => {
            let parsed = n
                .iter()
                .map(|s| s.parse::<Feature>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(value_err)?;
            FeatureSet::new(parsed).map_err(value_err)
        }
    }
}

fn preset_scheme(name: &str) -> PyResult<SegmentationScheme> {
    name.parse::<Preset>().map(Preset::scheme).map_err(value_err)
}

/// Names of the sixteen features in extraction order.
#[pyfunction]
fn feature_names() -> Vec<&'static str> {
    Feature::ALL.iter().map(|f| f.id()).collect()
}

/// Features of one segment as a dict; all sixteen unless `features` is given.
#[pyfunction]
#[pyo3(signature = (values, features = None))]
fn extract_features(values: Vec<u32>, features: Option<Vec<String>>) -> PyResult<BTreeMap<String, f64>> {
    let set = feature_set(features)?;
    let v = features::extract_features(&values, &set).map_err(value_err)?;
    Ok(v.features
        .iter()
        .zip(v.values)
        .map(|(f, x)| (f.id().to_string(), x))
        .collect())
}

/// Preset scheme names in table order.
#[pyfunction]
fn scheme_names() -> Vec<&'static str> {
    Preset::ALL.iter().map(|p| p.name()).collect()
}

/// Segment windows of a preset as `{segment: [(start_minute, end_minute), ...]}`.
#[pyfunction]
fn scheme_windows(name: &str) -> PyResult<Vec<(String, Vec<(u16, u16)>)>> {
    Ok(preset_scheme(name)?
        .segments
        .iter()
        .map(|s| (s.name.clone(), s.windows.iter().map(|w| (w.start, w.end)).collect()))
        .collect())
}

/// Splits 1440 per-minute counts into the segments of a preset.
#[pyfunction]
fn segment_day(values: Vec<u32>, scheme: &str) -> PyResult<Vec<(String, Vec<u32>)>> {
    let scheme = preset_scheme(scheme)?;
    let date = synth::start_date();
    let day = ingest::DaySeries::new("day", Label::Control, date, values).map_err(value_err)?;
    Ok(segmentation::segment_day(&day, &scheme)
        .map_err(value_err)?
        .into_iter()
        .map(|s| (s.def_name, s.values))
        .collect())
}

#[pyfunction]
fn auc_roc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    evaluation::auc_roc(&scores, &labels_from(&labels)?).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (scores, labels, threshold = evaluation::F1_THRESHOLD))]
fn f1(scores: Vec<f64>, labels: Vec<u8>, threshold: f64) -> PyResult<f64> {
    evaluation::f1(&scores, &labels_from(&labels)?, threshold).map_err(value_err)
}

/// Fold index of every row. Passing `groups` keeps each group in one fold.
#[pyfunction]
#[pyo3(signature = (labels, k = 10, seed = 0, groups = None))]
fn stratified_kfold(labels: Vec<u8>, k: usize, seed: u64, groups: Option<Vec<String>>) -> PyResult<Vec<usize>> {
    let labels = labels_from(&labels)?;
    let (mode, ids) = match &groups {
        Some(g) => (CvMode::SubjectGrouped, g.iter().map(String::as_str).collect()),
        None => (CvMode::RowStratified, Vec::new()),
    };
    Ok(evaluation::stratified_kfold(&labels, &ids, k, seed, mode)
        .map_err(value_err)?
        .assignments)
}

/// Complete subject-days with labels.
#[pyclass(name = "Corpus", module = "actiseg", frozen)]
struct PyCorpus {
    inner: ingest::Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Loads an interchange file or a directory of recordings.
    #[staticmethod]
    #[pyo3(signature = (path, metadata = None))]
    fn load(py: Python<'_>, path: PathBuf, metadata: Option<PathBuf>) -> PyResult<Self> {
        let labels = match metadata {
            Some(m) => LabelSource::Table(ingest::read_label_table(&m).map_err(value_err)?),
            None => LabelSource::Directories,
        };
        let inner = py
            .detach(|| ingest::load_path(&path, &labels, &ColumnMap::default()))
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Writes the interchange format.
    fn write(&self, path: PathBuf) -> PyResult<()> {
        let file = File::create(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        self.inner.write_interchange(BufWriter::new(file)).map_err(value_err)
    }

    #[getter]
    fn n_days(&self) -> usize {
        self.inner.days().len()
    }

    /// `{subject_id: (label, days)}`
    fn subjects(&self) -> BTreeMap<String, (u8, usize)> {
        self.inner
            .subjects()
            .iter()
            .map(|(id, s)| (id.clone(), (s.label.as_u8(), s.days)))
            .collect()
    }

    /// Feature table under a preset scheme.
    #[pyo3(signature = (scheme, features = None))]
    fn featurize(&self, py: Python<'_>, scheme: &str, features: Option<Vec<String>>) -> PyResult<PyFeatureTable> {
        let scheme = preset_scheme(scheme)?;
        let set = feature_set(features)?;
        let inner = py
            .detach(|| features::featurize_corpus(&self.inner, &scheme, &set))
            .map_err(value_err)?;
        Ok(PyFeatureTable { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.days().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus(subjects={}, days={})",
            self.inner.subjects().len(),
            self.inner.days().len()
        )
    }
}

/// Synthetic corpus with patients `P000..` and controls `C000..`.
#[pyfunction]
#[pyo3(signature = (n_patients = 10, n_controls = 10, days = 14, seed = 0))]
fn gen_corpus(py: Python<'_>, n_patients: usize, n_controls: usize, days: usize, seed: u64) -> PyResult<PyCorpus> {
    let inner = py
        .detach(|| synth::gen_corpus(n_patients, n_controls, days, seed))
        .map_err(value_err)?;
    Ok(PyCorpus { inner })
}

#[pyclass(name = "FeatureTable", module = "actiseg", frozen)]
struct PyFeatureTable {
    inner: FeatureTable,
}

#[pymethods]
impl PyFeatureTable {
    #[staticmethod]
    fn read_csv(path: PathBuf, scheme: &str) -> PyResult<Self> {
        let file = File::open(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let inner = FeatureTable::read_csv(BufReader::new(file), scheme).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let file = File::create(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        self.inner.write_csv(BufWriter::new(file)).map_err(value_err)
    }

    #[getter]
    fn scheme(&self) -> &str {
        &self.inner.scheme
    }

    #[getter]
    fn per_subject(&self) -> bool {
        self.inner.unit == RowUnit::PerSubject
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.columns.clone()
    }

    #[getter]
    fn labels(&self) -> Vec<u8> {
        self.inner.labels().iter().map(|l| l.as_u8()).collect()
    }

    #[getter]
    fn groups(&self) -> Vec<String> {
        self.inner.groups().into_iter().map(str::to_string).collect()
    }

    /// Row-major feature values.
    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.matrix()
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "FeatureTable(scheme={:?}, rows={}, columns={})",
            self.inner.scheme,
            self.inner.n_rows(),
            self.inner.n_cols()
        )
    }
}

fn json_value(v: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    if v.is_none() {
        Ok(serde_json::Value::Null)
    } else if v.is_instance_of::<PyBool>() {
        Ok(serde_json::Value::Bool(v.extract()?))
    } else if let Ok(i) = v.extract::<i64>() {
        Ok(i.into())
    } else if let Ok(f) = v.extract::<f64>() {
        Ok(f.into())
    } else if let Ok(s) = v.extract::<String>() {
        Ok(s.into())
    } else {
        Err(PyTypeError::new_err(format!("unsupported hyperparameter value {v}")))
    }
}

fn spec_from(preset: &str, seed: u64, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<ModelSpec> {
    let spec = preset.parse::<ModelPreset>().map_err(value_err)?.spec(seed);
    let mut map = serde_json::Map::new();
    if let Some(d) = overrides {
        for (k, v) in d.iter() {
            map.insert(k.extract::<String>()?, json_value(&v)?);
        }
    }
    spec.with_overrides(&map).map_err(value_err)
}

#[pyclass(name = "Model", module = "actiseg", frozen)]
struct PyModel {
    inner: TrainedModel,
}

#[pymethods]
impl PyModel {
    /// Trains a preset on a whole table; keyword arguments override hyperparameters.
    #[staticmethod]
    #[pyo3(signature = (table, preset, seed = 0, **overrides))]
    fn train(
        py: Python<'_>,
        table: &PyFeatureTable,
        preset: &str,
        seed: u64,
        overrides: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let spec = spec_from(preset, seed, overrides)?;
        let inner = py
            .detach(|| models::train_table(&spec, &table.inner))
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = TrainedModel::load(text.as_bytes()).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.save(&mut buf).map_err(value_err)?;
        String::from_utf8(buf).map_err(value_err)
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.family().to_string()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    /// Patient-class probability of each row.
    fn predict_proba(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.predict_proba(&rows).map_err(value_err)
    }

    /// `(feature, gain)` pairs, largest gain first. Tree models only.
    fn importance(&self) -> PyResult<Vec<(String, f64)>> {
        Ok(self.inner.gain_importance().map_err(value_err)?.entries)
    }

    fn __repr__(&self) -> String {
        format!("Model(name={:?}, family={})", self.inner.spec.name, self.inner.family())
    }
}

fn report_dict<'py>(py: Python<'py>, r: &CvReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scheme", &r.scheme)?;
    d.set_item("model", &r.model)?;
    d.set_item("auc_mean", r.auc_mean)?;
    d.set_item("auc_std", r.auc_std)?;
    d.set_item("f1_mean", r.f1_mean)?;
    d.set_item("f1_std", r.f1_std)?;
    d.set_item("seed", r.seed)?;
    d.set_item("config_digest", &r.config_digest)?;
    let folds: Vec<(usize, Option<f64>, f64)> = r.folds.iter().map(|f| (f.fold, f.auc, f.f1)).collect();
    d.set_item("folds", folds)?;
    Ok(d)
}

/// Stratified k-fold evaluation of a preset on a table.
#[pyfunction]
#[pyo3(signature = (table, preset, k = 10, seed = 0, mode = "row_stratified", **overrides))]
fn cross_validate<'py>(
    py: Python<'py>,
    table: &PyFeatureTable,
    preset: &str,
    k: usize,
    seed: u64,
    mode: &str,
    overrides: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mode: CvMode = mode.parse().map_err(value_err)?;
    let spec = spec_from(preset, seed, overrides)?;
    let report = py
        .detach(|| {
            let plan = evaluation::plan_for(&table.inner, k, seed, mode)?;
            evaluation::cross_validate(&table.inner, &spec, &plan)
        })
        .map_err(value_err)?;
    report_dict(py, &report)
}

#[pymodule]
fn actiseg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(scheme_names, m)?)?;
    m.add_function(wrap_pyfunction!(scheme_windows, m)?)?;
    m.add_function(wrap_pyfunction!(segment_day, m)?)?;
    m.add_function(wrap_pyfunction!(auc_roc, m)?)?;
    m.add_function(wrap_pyfunction!(f1, m)?)?;
    m.add_function(wrap_pyfunction!(stratified_kfold, m)?)?;
    m.add_function(wrap_pyfunction!(gen_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyFeatureTable>()?;
    m.add_class::<PyModel>()?;
    m.add("MODEL_PRESETS", ModelPreset::ALL.iter().map(|p| p.name()).collect::<Vec<_>>())?;
    Ok(())
}
