//! Partitions of the 1440-minute day into named segments.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{DaySeries, Label, MINUTES_PER_DAY};

const DAY: u16 = MINUTES_PER_DAY as u16;

/// Half-open range of minutes `[start, end)` within a day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MinuteWindow {
    pub start: u16,
    pub end: u16,
}

impl MinuteWindow {
    pub const fn new(start: u16, end: u16) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parses `HH:MM-HH:MM`; the end may be `24:00`.
    pub fn parse_clock_range(s: &str) -> Result<Self, SchemeError> {
        let bad = || SchemeError::InvalidRange(s.to_string());
        let (a, b) = s.trim().split_once('-').ok_or_else(bad)?;
        let minute = |t: &str| -> Option<u16> {
            let (h, m) = t.trim().split_once(':')?;
            let (h, m): (u16, u16) = (h.parse().ok()?, m.parse().ok()?);
            (m < 60 && (h < 24 || (h == 24 && m == 0))).then_some(h * 60 + m)
        };
        Ok(Self::new(minute(a).ok_or_else(bad)?, minute(b).ok_or_else(bad)?))
    }
}

impl fmt::Display for MinuteWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentDef {
    pub name: String,
    pub windows: Vec<MinuteWindow>,
}

impl SegmentDef {
    pub fn new(name: impl Into<String>, windows: Vec<MinuteWindow>) -> Self {
        Self {
            name: name.into(),
            windows,
        }
    }

    pub fn total_minutes(&self) -> usize {
        self.windows.iter().map(MinuteWindow::len).sum()
    }
}

/// How rows are formed from a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowUnit {
    /// One row per subject-day.
    PerDay,
    /// One row per subject, features over all of the subject's days concatenated.
    PerSubject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationScheme {
    pub name: String,
    pub segments: Vec<SegmentDef>,
    pub unit: RowUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Parts12,
    Parts8,
    Parts6,
    Parts4,
    Parts3,
    Parts2,
    FullDay,
    AllDays,
}

impl Preset {
    /// Presets in the row order of the published results table.
    pub const ALL: [Preset; 8] = [
        Preset::Parts12,
        Preset::Parts8,
        Preset::Parts6,
        Preset::Parts4,
        Preset::Parts3,
        Preset::Parts2,
        Preset::FullDay,
        Preset::AllDays,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Parts12 => "parts12",
            Preset::Parts8 => "parts8",
            Preset::Parts6 => "parts6",
            Preset::Parts4 => "parts4",
            Preset::Parts3 => "parts3",
            Preset::Parts2 => "parts2",
            Preset::FullDay => "full_day",
            Preset::AllDays => "all_days",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Preset::Parts12 => "12 Parts",
            Preset::Parts8 => "8 Parts",
            Preset::Parts6 => "6 Parts",
            Preset::Parts4 => "4 Parts",
            Preset::Parts3 => "3 Parts",
            Preset::Parts2 => "2 Parts",
            Preset::FullDay => "Full Day",
            Preset::AllDays => "All Days",
        }
    }

    pub fn scheme(self) -> SegmentationScheme {
        builtin_scheme(self)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| SchemeError::UnknownPreset(s.to_string()))
    }
}

fn equal_parts(name: &str, parts: u16, names: Option<&[&str]>) -> SegmentationScheme {
    let width = DAY / parts;
    let segments = (0..parts)
        .map(|i| {
            let seg_name = match names {
                Some(n) => n[i as usize].to_string(),
                None => format!("seg{i:02}"),
            };
            SegmentDef::new(seg_name, vec![MinuteWindow::new(i * width, (i + 1) * width)])
        })
        .collect();
    SegmentationScheme {
        name: name.to_string(),
        segments,
        unit: RowUnit::PerDay,
    }
}

/// The preset partitions. Night in `parts2` stays within the calendar day:
/// it is the union of the early-morning and late-evening windows.
pub fn builtin_scheme(preset: Preset) -> SegmentationScheme {
    let name = preset.name();
    match preset {
        Preset::FullDay => equal_parts(name, 1, Some(&["full"])),
        Preset::AllDays => SegmentationScheme {
            name: name.to_string(),
            segments: vec![SegmentDef::new("all", vec![MinuteWindow::new(0, DAY)])],
            unit: RowUnit::PerSubject,
        },
        Preset::Parts2 => SegmentationScheme {
            name: name.to_string(),
            segments: vec![
                SegmentDef::new("day", vec![MinuteWindow::new(480, 1200)]),
                SegmentDef::new(
                    "night",
                    vec![MinuteWindow::new(0, 480), MinuteWindow::new(1200, DAY)],
                ),
            ],
            unit: RowUnit::PerDay,
        },
        Preset::Parts3 => equal_parts(name, 3, None),
        Preset::Parts4 => equal_parts(
            name,
            4,
            Some(&["night", "morning", "afternoon", "evening"]),
        ),
        Preset::Parts6 => equal_parts(name, 6, None),
        Preset::Parts8 => equal_parts(name, 8, None),
        Preset::Parts12 => equal_parts(name, 12, None),
    }
}

/// First problem found in a scheme.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeViolation {
    #[error("scheme has no segments")]
    NoSegments,
    #[error("segment '{0}' has no windows")]
    EmptySegment(String),
    #[error("duplicate segment name '{0}'")]
    DuplicateName(String),
    #[error("segment '{segment}': invalid window {window}")]
    InvalidWindow { segment: String, window: MinuteWindow },
    #[error("overlap at minutes {0}")]
    Overlap(MinuteWindow),
    #[error("gap at minutes {0}")]
    Gap(MinuteWindow),
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("unknown scheme preset '{0}'")]
    UnknownPreset(String),
    #[error("invalid clock range '{0}' (expected HH:MM-HH:MM)")]
    InvalidRange(String),
    #[error("invalid scheme '{name}': {violation}")]
    Invalid {
        name: String,
        violation: SchemeViolation,
    },
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

/// Checks that windows are well formed, pairwise disjoint and cover the day exactly.
pub fn validate_scheme(scheme: &SegmentationScheme) -> Result<(), SchemeViolation> {
    if scheme.segments.is_empty() {
        return Err(SchemeViolation::NoSegments);
    }
    let mut names = std::collections::HashSet::new();
    let mut windows = Vec::new();
    for seg in &scheme.segments {
        if !names.insert(seg.name.as_str()) {
            return Err(SchemeViolation::DuplicateName(seg.name.clone()));
        }
        if seg.windows.is_empty() {
            return Err(SchemeViolation::EmptySegment(seg.name.clone()));
        }
        for w in &seg.windows {
            if w.start >= w.end || w.end > DAY {
                return Err(SchemeViolation::InvalidWindow {
                    segment: seg.name.clone(),
                    window: *w,
                });
            }
            windows.push(*w);
        }
    }
    windows.sort();
    let mut covered_to = 0u16;
    for w in windows {
        if w.start < covered_to {
            return Err(SchemeViolation::Overlap(MinuteWindow::new(
                w.start,
                covered_to.min(w.end),
            )));
        }
        if w.start > covered_to {
            return Err(SchemeViolation::Gap(MinuteWindow::new(covered_to, w.start)));
        }
        covered_to = w.end;
    }
    if covered_to < DAY {
        return Err(SchemeViolation::Gap(MinuteWindow::new(covered_to, DAY)));
    }
    Ok(())
}

/// Identity of the day a segment was cut from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayKey {
    pub subject_id: String,
    pub date: NaiveDate,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub def_name: String,
    pub values: Vec<u32>,
    pub parent: DayKey,
}

/// Values of one segment of a day, in ascending minute order.
pub(crate) fn segment_values(values: &[u32], def: &SegmentDef) -> Vec<u32> {
    let mut windows = def.windows.clone();
    windows.sort();
    let mut out = Vec::with_capacity(def.total_minutes());
    for w in windows {
        out.extend_from_slice(&values[w.start as usize..w.end as usize]);
    }
    out
}

/// Cuts a day into one segment per definition of the scheme.
pub fn segment_day(day: &DaySeries, scheme: &SegmentationScheme) -> Result<Vec<Segment>, SchemeError> {
    validate_scheme(scheme).map_err(|violation| SchemeError::Invalid {
        name: scheme.name.clone(),
        violation,
    })?;
    let parent = DayKey {
        subject_id: day.subject_id.clone(),
        date: day.date,
        label: day.label,
    };
    Ok(scheme
        .segments
        .iter()
        .map(|def| Segment {
            def_name: def.name.clone(),
            values: segment_values(day.values(), def),
            parent: parent.clone(),
        })
        .collect())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeFile {
    name: String,
    #[serde(default)]
    unit: Option<RowUnit>,
    segments: Vec<SegmentEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentEntry {
    name: String,
    ranges: Vec<String>,
}

/// Parses a TOML scheme definition:
///
/// ```toml
/// name = "sleep_wake"
/// [[segments]]
/// name = "night"
/// ranges = ["00:00-07:00", "22:00-24:00"]
/// [[segments]]
/// name = "day"
/// ranges = ["07:00-22:00"]
/// ```
pub fn parse_scheme_toml(text: &str) -> Result<SegmentationScheme, SchemeError> {
    let file: SchemeFile = toml::from_str(text).map_err(|e| SchemeError::File {
        path: "<scheme>".into(),
        message: e.to_string(),
    })?;
    let segments = file
        .segments
        .into_iter()
        .map(|s| {
            let windows = s
                .ranges
                .iter()
                .map(|r| MinuteWindow::parse_clock_range(r))
                .collect::<Result<_, _>>()?;
            Ok(SegmentDef::new(s.name, windows))
        })
        .collect::<Result<_, SchemeError>>()?;
    let scheme = SegmentationScheme {
        name: file.name,
        segments,
        unit: file.unit.unwrap_or(RowUnit::PerDay),
    };
    validate_scheme(&scheme).map_err(|violation| SchemeError::Invalid {
        name: scheme.name.clone(),
        violation,
    })?;
    Ok(scheme)
}

pub fn load_scheme_file(path: &Path) -> Result<SegmentationScheme, SchemeError> {
    let text = std::fs::read_to_string(path).map_err(|e| SchemeError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scheme_toml(&text).map_err(|e| match e {
        SchemeError::File { message, .. } => SchemeError::File {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day_with(values: Vec<u32>) -> DaySeries {
        DaySeries::new("s", Label::Control, NaiveDate::from_ymd_opt(2004, 5, 7).unwrap(), values).unwrap()
    }

    fn scheme_of(windows: &[(u16, u16)]) -> SegmentationScheme {
        SegmentationScheme {
            name: "t".into(),
            segments: windows
                .iter()
                .enumerate()
                .map(|(i, (a, b))| SegmentDef::new(format!("s{i}"), vec![MinuteWindow::new(*a, *b)]))
                .collect(),
            unit: RowUnit::PerDay,
        }
    }

    #[test]
    fn parts2_windows() {
        let s = builtin_scheme(Preset::Parts2);
        assert_eq!(s.segments[0].name, "day");
        assert_eq!(s.segments[0].windows, vec![MinuteWindow::new(480, 1200)]);
        assert_eq!(s.segments[1].name, "night");
        assert_eq!(
            s.segments[1].windows,
            vec![MinuteWindow::new(0, 480), MinuteWindow::new(1200, 1440)]
        );
    }

    #[test]
    fn parts3_boundaries() {
        let s = builtin_scheme(Preset::Parts3);
        let bounds: Vec<_> = s.segments.iter().map(|d| (d.windows[0].start, d.windows[0].end)).collect();
        assert_eq!(bounds, vec![(0, 480), (480, 960), (960, 1440)]);
    }

    #[test]
    fn parts12_two_hour_windows() {
        let s = builtin_scheme(Preset::Parts12);
        assert_eq!(s.segments.len(), 12);
        for (i, d) in s.segments.iter().enumerate() {
            assert_eq!(d.windows, vec![MinuteWindow::new(i as u16 * 120, (i as u16 + 1) * 120)]);
            assert_eq!(d.name, format!("seg{i:02}"));
        }
        assert_eq!(validate_scheme(&s), Ok(()));
    }

    #[test]
    fn presets_validate() {
        for p in Preset::ALL {
            assert_eq!(validate_scheme(&p.scheme()), Ok(()), "{p}");
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
    }

    #[test]
    fn overlap_and_gap_reported() {
        assert_eq!(
            validate_scheme(&scheme_of(&[(0, 720), (700, 1440)])),
            Err(SchemeViolation::Overlap(MinuteWindow::new(700, 720)))
        );
        assert_eq!(
            validate_scheme(&scheme_of(&[(0, 700), (720, 1440)])),
            Err(SchemeViolation::Gap(MinuteWindow::new(700, 720)))
        );
        assert_eq!(
            validate_scheme(&scheme_of(&[(0, 700)])),
            Err(SchemeViolation::Gap(MinuteWindow::new(700, 1440)))
        );
    }

    #[test]
    fn constant_day_parts4() {
        let segs = segment_day(&day_with(vec![7; 1440]), &builtin_scheme(Preset::Parts4)).unwrap();
        assert_eq!(segs.len(), 4);
        for s in segs {
            assert_eq!(s.values, vec![7; 360]);
        }
    }

    #[test]
    fn index_day_parts2_order() {
        let segs = segment_day(&day_with((0..1440).collect()), &builtin_scheme(Preset::Parts2)).unwrap();
        let night: Vec<u32> = (0..480).chain(1200..1440).collect();
        assert_eq!(segs[0].values, (480..1200).collect::<Vec<u32>>());
        assert_eq!(segs[1].values, night);
    }

    #[test]
    fn full_day_identity() {
        let day = day_with((0..1440).map(|i| i * 3 % 17).collect());
        let segs = segment_day(&day, &builtin_scheme(Preset::FullDay)).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].values, day.values());
    }

    #[test]
    fn invalid_scheme_refused() {
        let err = segment_day(&day_with(vec![0; 1440]), &scheme_of(&[(0, 700)])).unwrap_err();
        assert!(matches!(err, SchemeError::Invalid { .. }));
    }

    #[test]
    fn toml_scheme() {
        let s = parse_scheme_toml(
            r#"
name = "sleep_wake"
[[segments]]
name = "night"
ranges = ["00:00-07:00", "22:00-24:00"]
[[segments]]
name = "day"
ranges = ["07:00-22:00"]
"#,
        )
        .unwrap();
        assert_eq!(s.segments[0].windows, vec![MinuteWindow::new(0, 420), MinuteWindow::new(1320, 1440)]);
        assert!(parse_scheme_toml("name='x'\n[[segments]]\nname='a'\nranges=['00:00-12:00']\n").is_err());
        assert!(MinuteWindow::parse_clock_range("25:00-26:00").is_err());
    }

    proptest! {
        #[test]
        fn segments_conserve_values(values in proptest::collection::vec(0u32..5000, 1440), preset in 0usize..8) {
            let day = day_with(values.clone());
            let segs = segment_day(&day, &Preset::ALL[preset].scheme()).unwrap();
            let mut all: Vec<u32> = segs.iter().flat_map(|s| s.values.iter().copied()).collect();
            let total: u64 = all.iter().map(|v| *v as u64).sum();
            prop_assert_eq!(total, values.iter().map(|v| *v as u64).sum::<u64>());
            let mut expected = values;
            all.sort_unstable();
            expected.sort_unstable();
            prop_assert_eq!(all, expected);
        }
    }
}
