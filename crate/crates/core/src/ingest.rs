//! Reading per-subject activity recordings and assembling them into a corpus
//! of complete calendar days.
//!
//! Raw files are comma-separated with a header row. Each row carries a naive
//! timestamp and a non-negative integer activity count for one minute. Labels
//! never come from file content: they come from the directory the file sits in
//! (`patient/` or `control/`) or from an explicit `subject_id,label` table.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minutes in one calendar day.
pub const MINUTES_PER_DAY: usize = 1440;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";
const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{source_name}: line {line}: {message}")]
    Malformed {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("{source_name}: column '{column}' not found in header")]
    MissingColumn { source_name: String, column: String },
    #[error(
        "{source_name}: timestamps not monotonic: line {line} ({current}) precedes line {prev_line} ({previous})"
    )]
    NonMonotonic {
        source_name: String,
        prev_line: u64,
        previous: NaiveDateTime,
        line: u64,
        current: NaiveDateTime,
    },
    #[error("subject {subject_id}: duplicate sample for {date} minute {minute}")]
    DuplicateMinute {
        subject_id: String,
        date: NaiveDate,
        minute: usize,
    },
    #[error("subject {0} has recordings but no label in the metadata table")]
    UnlabeledSubject(String),
    #[error("subject {0} appears more than once")]
    DuplicateSubject(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl IngestError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Binary class of a subject. Patients are the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Control,
    Patient,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Control => 0,
            Label::Patient => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Control),
            1 => Some(Label::Patient),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Patient
    }

    /// Parses `0`/`1` or the class names used in directory layouts.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "control" | "controls" => Some(Label::Control),
            "1" | "patient" | "patients" | "schizophrenia" => Some(Label::Patient),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActivitySample {
    pub timestamp: NaiveDateTime,
    pub activity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSeries {
    pub subject_id: String,
    pub label: Label,
    pub samples: Vec<ActivitySample>,
}

/// One complete subject-day of per-minute activity counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaySeries {
    pub subject_id: String,
    pub label: Label,
    pub date: NaiveDate,
    values: Vec<u32>,
}

impl DaySeries {
    /// Fails unless `values` holds exactly one count per minute of the day.
    pub fn new(
        subject_id: impl Into<String>,
        label: Label,
        date: NaiveDate,
        values: Vec<u32>,
    ) -> Result<Self, IngestError> {
        if values.len() != MINUTES_PER_DAY {
            return Err(IngestError::InvalidCorpus(format!(
                "day has {} values, expected {MINUTES_PER_DAY}",
                values.len()
            )));
        }
        Ok(Self {
            subject_id: subject_id.into(),
            label,
            date,
            values,
        })
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }
}

/// Which header names hold the timestamp and activity fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub timestamp: String,
    pub activity: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            activity: "activity".into(),
        }
    }
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    NaiveDateTime::parse_from_str(raw, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M"))
        .ok()
}

fn truncate_to_minute(ts: NaiveDateTime) -> NaiveDateTime {
    ts.with_second(0)
        .and_then(|t| t.with_nanosecond(0))
        .expect("zero seconds is always valid")
}

/// Parses one subject's delimited recording.
///
/// Timestamps are truncated to the minute. Decreasing timestamps are an error;
/// two rows falling in the same minute are left for [`split_into_days`] to
/// reject.
pub fn parse_subject_file<R: Read>(
    reader: R,
    source_name: &str,
    subject_id: &str,
    label: Label,
    columns: &ColumnMap,
) -> Result<LabeledSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| IngestError::MissingColumn {
                source_name: source_name.to_string(),
                column: name.to_string(),
            })
    };
    let ts_col = find(&columns.timestamp)?;
    let act_col = find(&columns.activity)?;

    let mut samples: Vec<ActivitySample> = Vec::new();
    let mut prev_line = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            IngestError::Malformed {
                source_name: source_name.to_string(),
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |message: String| IngestError::Malformed {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let raw_ts = record.get(ts_col).unwrap_or_default();
        let timestamp = parse_timestamp(raw_ts)
            .map(truncate_to_minute)
            .ok_or_else(|| malformed(format!("invalid timestamp '{raw_ts}'")))?;
        let raw_act = record.get(act_col).unwrap_or_default();
        let activity: u32 = match raw_act.parse::<i64>() {
            Ok(v) if v < 0 => return Err(malformed(format!("negative activity {v}"))),
            Ok(v) => u32::try_from(v)
                .map_err(|_| malformed(format!("activity {v} out of range")))?,
            Err(_) => return Err(malformed(format!("invalid activity '{raw_act}'"))),
        };
        if let Some(prev) = samples.last() {
            if timestamp < prev.timestamp {
                return Err(IngestError::NonMonotonic {
                    source_name: source_name.to_string(),
                    prev_line,
                    previous: prev.timestamp,
                    line,
                    current: timestamp,
                });
            }
        }
        prev_line = line;
        samples.push(ActivitySample {
            timestamp,
            activity,
        });
    }
    Ok(LabeledSeries {
        subject_id: subject_id.to_string(),
        label,
        samples,
    })
}

/// A calendar date's worth of samples; `None` marks a minute with no sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialDay {
    pub date: NaiveDate,
    pub minutes: Vec<Option<u32>>,
}

impl PartialDay {
    pub fn present(&self) -> usize {
        self.minutes.iter().filter(|m| m.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSeries {
    pub subject_id: String,
    pub label: Label,
    pub days: Vec<PartialDay>,
}

/// Groups samples by calendar date without filling gaps.
pub fn split_into_days(series: &LabeledSeries) -> Result<SplitSeries, IngestError> {
    let mut days: BTreeMap<NaiveDate, Vec<Option<u32>>> = BTreeMap::new();
    for s in &series.samples {
        let date = s.timestamp.date();
        let minute = (s.timestamp.hour() * 60 + s.timestamp.minute()) as usize;
        let slots = days
            .entry(date)
            .or_insert_with(|| vec![None; MINUTES_PER_DAY]);
        if slots[minute].is_some() {
            return Err(IngestError::DuplicateMinute {
                subject_id: series.subject_id.clone(),
                date,
                minute,
            });
        }
        slots[minute] = Some(s.activity);
    }
    Ok(SplitSeries {
        subject_id: series.subject_id.clone(),
        label: series.label,
        days: days
            .into_iter()
            .map(|(date, minutes)| PartialDay { date, minutes })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilteredDays {
    pub kept: Vec<DaySeries>,
    pub discarded: usize,
}

/// Keeps only days where every minute has a sample.
pub fn filter_complete_days(split: SplitSeries) -> FilteredDays {
    let mut kept = Vec::new();
    let mut discarded = 0;
    for day in split.days {
        if day.minutes.iter().all(Option::is_some) {
            let values = day.minutes.into_iter().map(|m| m.unwrap()).collect();
            kept.push(DaySeries {
                subject_id: split.subject_id.clone(),
                label: split.label,
                date: day.date,
                values,
            });
        } else {
            discarded += 1;
        }
    }
    FilteredDays { kept, discarded }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SubjectInfo {
    pub label: Label,
    pub days: usize,
}

/// Days kept and discarded during loading, per class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadSummary {
    pub kept: [usize; 2],
    pub discarded: [usize; 2],
}

/// All complete days of all subjects, sorted by (subject, date).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    days: Vec<DaySeries>,
    subjects: BTreeMap<String, SubjectInfo>,
    summary: LoadSummary,
}

impl Corpus {
    pub fn new(mut days: Vec<DaySeries>) -> Result<Self, IngestError> {
        if days.is_empty() {
            return Err(IngestError::EmptyCorpus);
        }
        days.sort_by(|a, b| (&a.subject_id, a.date).cmp(&(&b.subject_id, b.date)));
        let mut subjects: BTreeMap<String, SubjectInfo> = BTreeMap::new();
        for (i, d) in days.iter().enumerate() {
            if i > 0 && days[i - 1].subject_id == d.subject_id && days[i - 1].date == d.date {
                return Err(IngestError::InvalidCorpus(format!(
                    "duplicate day {} for subject {}",
                    d.date, d.subject_id
                )));
            }
            let info = subjects.entry(d.subject_id.clone()).or_insert(SubjectInfo {
                label: d.label,
                days: 0,
            });
            if info.label != d.label {
                return Err(IngestError::InvalidCorpus(format!(
                    "subject {} has days with conflicting labels",
                    d.subject_id
                )));
            }
            info.days += 1;
        }
        let mut summary = LoadSummary::default();
        for d in &days {
            summary.kept[d.label.as_u8() as usize] += 1;
        }
        Ok(Self {
            days,
            subjects,
            summary,
        })
    }

    pub fn days(&self) -> &[DaySeries] {
        &self.days
    }

    pub fn subjects(&self) -> &BTreeMap<String, SubjectInfo> {
        &self.subjects
    }

    pub fn summary(&self) -> LoadSummary {
        self.summary
    }

    /// Days of one subject in date order.
    pub fn subject_days<'a>(&'a self, subject_id: &'a str) -> impl Iterator<Item = &'a DaySeries> {
        self.days.iter().filter(move |d| d.subject_id == subject_id)
    }

    /// Writes the interchange table `subject_id,label,date,minute,activity`.
    pub fn write_interchange<W: Write>(&self, writer: W) -> Result<(), IngestError> {
        let mut out = std::io::BufWriter::new(writer);
        let io = |e| IngestError::io(Path::new("<interchange>"), e);
        writeln!(out, "subject_id,label,date,minute,activity").map_err(io)?;
        for d in &self.days {
            let date = d.date.format(DATE_FORMAT).to_string();
            for (minute, v) in d.values.iter().enumerate() {
                writeln!(out, "{},{},{},{},{}", d.subject_id, d.label, date, minute, v)
                    .map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }

    /// Reads a table written by [`Corpus::write_interchange`]. Incomplete days
    /// are discarded like raw recordings.
    pub fn read_interchange<R: Read>(reader: R, source_name: &str) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["subject_id", "label", "date", "minute", "activity"];
        for col in expected {
            if !headers.iter().any(|h| h == col) {
                return Err(IngestError::MissingColumn {
                    source_name: source_name.to_string(),
                    column: col.to_string(),
                });
            }
        }
        let idx: Vec<usize> = expected
            .iter()
            .map(|c| headers.iter().position(|h| h == *c).unwrap())
            .collect();

        let mut groups: BTreeMap<(String, NaiveDate), (Label, Vec<Option<u32>>)> = BTreeMap::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let malformed = |message: String| IngestError::Malformed {
                source_name: source_name.to_string(),
                line,
                message,
            };
            let subject = record[idx[0]].to_string();
            let label = Label::parse(&record[idx[1]])
                .ok_or_else(|| malformed(format!("invalid label '{}'", &record[idx[1]])))?;
            let date = NaiveDate::parse_from_str(&record[idx[2]], DATE_FORMAT)
                .map_err(|_| malformed(format!("invalid date '{}'", &record[idx[2]])))?;
            let minute: usize = record[idx[3]]
                .parse()
                .ok()
                .filter(|m| *m < MINUTES_PER_DAY)
                .ok_or_else(|| malformed(format!("invalid minute '{}'", &record[idx[3]])))?;
            let activity: u32 = record[idx[4]]
                .parse()
                .map_err(|_| malformed(format!("invalid activity '{}'", &record[idx[4]])))?;
            let entry = groups
                .entry((subject.clone(), date))
                .or_insert_with(|| (label, vec![None; MINUTES_PER_DAY]));
            if entry.0 != label {
                return Err(malformed(format!("label conflicts for subject {subject}")));
            }
            if entry.1[minute].replace(activity).is_some() {
                return Err(IngestError::DuplicateMinute {
                    subject_id: subject,
                    date,
                    minute,
                });
            }
        }
        let mut days = Vec::new();
        let mut discarded = [0usize; 2];
        for ((subject_id, date), (label, minutes)) in groups {
            if minutes.iter().all(Option::is_some) {
                let values = minutes.into_iter().map(Option::unwrap).collect();
                days.push(DaySeries::new(subject_id, label, date, values)?);
            } else {
                discarded[label.as_u8() as usize] += 1;
            }
        }
        let mut corpus = Corpus::new(days)?;
        corpus.summary.discarded = discarded;
        Ok(corpus)
    }
}

/// Where subject labels come from when loading a directory of recordings.
#[derive(Debug, Clone)]
pub enum LabelSource {
    /// Files live in `patient/` (or `schizophrenia/`) and `control/` subdirectories.
    Directories,
    /// Files live directly under the root; labels come from this table.
    Table(BTreeMap<String, Label>),
}

/// Reads a `subject_id,label` table.
pub fn read_label_table(path: &Path) -> Result<BTreeMap<String, Label>, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let headers = rdr.headers()?.clone();
    let source_name = path.display().to_string();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn {
                source_name: source_name.clone(),
                column: name.to_string(),
            })
    };
    let (sid, lab) = (col("subject_id")?, col("label")?);
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let label = Label::parse(&record[lab]).ok_or_else(|| IngestError::Malformed {
            source_name: source_name.clone(),
            line,
            message: format!("invalid label '{}'", &record[lab]),
        })?;
        if out.insert(record[sid].to_string(), label).is_some() {
            return Err(IngestError::DuplicateSubject(record[sid].to_string()));
        }
    }
    Ok(out)
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| IngestError::io(dir, e))? {
        let path = entry.map_err(|e| IngestError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn subject_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads every recording under `root`, keeping complete days only.
pub fn load_corpus(
    root: &Path,
    labels: &LabelSource,
    columns: &ColumnMap,
) -> Result<Corpus, IngestError> {
    let mut jobs: Vec<(PathBuf, String, Label)> = Vec::new();
    match labels {
        LabelSource::Directories => {
            for (dirs, label) in [
                (&["control", "controls"][..], Label::Control),
                (&["patient", "patients", "schizophrenia"][..], Label::Patient),
            ] {
                for d in dirs {
                    let dir = root.join(d);
                    if dir.is_dir() {
                        for f in csv_files(&dir)? {
                            let id = subject_id_of(&f);
                            jobs.push((f, id, label));
                        }
                    }
                }
            }
        }
        LabelSource::Table(table) => {
            for f in csv_files(root)? {
                let id = subject_id_of(&f);
                let label = *table
                    .get(&id)
                    .ok_or_else(|| IngestError::UnlabeledSubject(id.clone()))?;
                jobs.push((f, id, label));
            }
        }
    }
    if jobs.is_empty() {
        return Err(IngestError::EmptyCorpus);
    }
    let mut seen = std::collections::BTreeSet::new();
    for (_, id, _) in &jobs {
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateSubject(id.clone()));
        }
    }

    let per_subject: Vec<(Label, FilteredDays)> = jobs
        .par_iter()
        .map(|(path, id, label)| {
            let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
            let series = parse_subject_file(
                BufReader::new(file),
                &path.display().to_string(),
                id,
                *label,
                columns,
            )?;
            Ok((*label, filter_complete_days(split_into_days(&series)?)))
        })
        .collect::<Result<_, IngestError>>()?;

    let mut discarded = [0usize; 2];
    let mut days = Vec::new();
    for (label, filtered) in per_subject {
        discarded[label.as_u8() as usize] += filtered.discarded;
        days.extend(filtered.kept);
    }
    let mut corpus = Corpus::new(days)?;
    corpus.summary.discarded = discarded;
    let n_subj = |l: Label| corpus.subjects.values().filter(|s| s.label == l).count();
    info!(
        "loaded {} subjects ({} patients, {} controls); days kept {} patient / {} control, discarded {} patient / {} control",
        corpus.subjects.len(),
        n_subj(Label::Patient),
        n_subj(Label::Control),
        corpus.summary.kept[1],
        corpus.summary.kept[0],
        discarded[1],
        discarded[0],
    );
    Ok(corpus)
}

/// Loads either an interchange file or a directory of raw recordings.
pub fn load_path(
    path: &Path,
    labels: &LabelSource,
    columns: &ColumnMap,
) -> Result<Corpus, IngestError> {
    if path.is_file() {
        let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
        Corpus::read_interchange(BufReader::new(file), &path.display().to_string())
    } else if path.is_dir() {
        load_corpus(path, labels, columns)
    } else {
        Err(IngestError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ))
    }
}
