//! Seeded synthetic actigraphy with a circadian day/night structure.
//!
//! Controls are active between 07:00 and 22:00 with a sinusoidal intensity
//! peaking mid-afternoon, and almost still at night. Patients additionally
//! show nocturnal activity bursts and damped activity between 06:00 and 12:00.
//! All numeric defaults are artifact choices, not measured values.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    filter_complete_days, split_into_days, ActivitySample, Corpus, IngestError, Label,
    LabeledSeries, MINUTES_PER_DAY,
};

const WAKE: usize = 7 * 60;
const SLEEP: usize = 22 * 60;
const MORNING: std::ops::Range<usize> = 360..720;
/// Probability that an awake minute registers movement.
const DAY_MOVE_PROB: f64 = 0.85;
/// Probability that a control's night minute registers movement.
const NIGHT_MOVE_PROB: f64 = 0.04;
/// Burst intensity as a fraction of the daytime base rate.
const BURST_SCALE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("need at least one patient, one control and one day")]
    EmptyRequest,
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub label: Label,
    /// Daytime intensity scale (counts per minute at the activity peak).
    pub base_rate: f64,
    /// Mean count of a nocturnal movement minute.
    pub night_rate: f64,
    /// Per-minute probability of a nocturnal burst; used for patients only.
    pub burst_prob: f64,
    /// Factor applied to 06:00-12:00 intensity; used for patients only.
    pub morning_damping: f64,
    pub days: usize,
    pub seed: u64,
}

impl SubjectProfile {
    pub fn control(days: usize, seed: u64) -> Self {
        Self {
            label: Label::Control,
            base_rate: 300.0,
            night_rate: 5.0,
            burst_prob: 0.0,
            morning_damping: 1.0,
            days,
            seed,
        }
    }

    pub fn patient(days: usize, seed: u64) -> Self {
        Self {
            label: Label::Patient,
            burst_prob: 0.15,
            morning_damping: 0.5,
            ..Self::control(days, seed)
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidProfile(m.to_string()));
        if !(self.base_rate >= 0.0 && self.night_rate >= 0.0) {
            return bad("rates must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.burst_prob) {
            return bad("burst_prob must lie in [0, 1]");
        }
        if !(self.morning_damping > 0.0 && self.morning_damping <= 1.0) {
            return bad("morning_damping must lie in (0, 1]");
        }
        Ok(())
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u32).unwrap_or(0)
}

/// First day of every generated recording.
pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2003, 3, 3).unwrap()
}

/// Generates `profile.days` complete days of per-minute counts.
pub fn gen_subject(subject_id: &str, profile: &SubjectProfile) -> Result<LabeledSeries, SynthError> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let patient = profile.label.is_positive();
    let t0: NaiveDateTime = start_date().and_hms_opt(0, 0, 0).unwrap();
    let mut samples = Vec::with_capacity(profile.days * MINUTES_PER_DAY);
    for day in 0..profile.days {
        let day_factor = rng.random_range(0.75..1.25);
        for minute in 0..MINUTES_PER_DAY {
            let awake = (WAKE..SLEEP).contains(&minute);
            let count = if awake {
                let phase = std::f64::consts::PI * (minute - WAKE) as f64 / (SLEEP - WAKE) as f64;
                let mut mean = profile.base_rate * day_factor * (0.3 + 0.7 * phase.sin());
                if patient && MORNING.contains(&minute) {
                    mean *= profile.morning_damping;
                }
                if rng.random_bool(DAY_MOVE_PROB) {
                    poisson(&mut rng, mean)
                } else {
                    0
                }
            } else if patient && rng.random_bool(profile.burst_prob) {
                let mut mean = profile.base_rate * BURST_SCALE;
                if MORNING.contains(&minute) {
                    mean *= profile.morning_damping;
                }
                poisson(&mut rng, mean)
            } else if rng.random_bool(NIGHT_MOVE_PROB) {
                poisson(&mut rng, profile.night_rate)
            } else {
                0
            };
            samples.push(ActivitySample {
                timestamp: t0 + Duration::minutes((day * MINUTES_PER_DAY + minute) as i64),
                activity: count,
            });
        }
    }
    Ok(LabeledSeries {
        subject_id: subject_id.to_string(),
        label: profile.label,
        samples,
    })
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th subject of a class: patients use tag 1, controls 0,
/// and the seed is `splitmix64(master ^ splitmix64(tag << 32 | index))`.
pub fn subject_seed(master: u64, label: Label, index: usize) -> u64 {
    let tag = (label.as_u8() as u64) << 32 | index as u64;
    splitmix64(master ^ splitmix64(tag))
}

/// Profile of one generated subject. Base rate and burst probability vary
/// between subjects by a factor drawn uniformly from [0.6, 1.4].
pub fn subject_profile(label: Label, index: usize, days: usize, master: u64) -> SubjectProfile {
    let seed = subject_seed(master, label, index);
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
    let mut p = match label {
        Label::Control => SubjectProfile::control(days, seed),
        Label::Patient => SubjectProfile::patient(days, seed),
    };
    p.base_rate *= rng.random_range(0.6..1.4);
    p.burst_prob = (p.burst_prob * rng.random_range(0.6..1.4)).min(1.0);
    p
}

/// Generates a corpus with subjects `P000..` and `C000..`.
pub fn gen_corpus(n_patients: usize, n_controls: usize, days: usize, seed: u64) -> Result<Corpus, SynthError> {
    gen_corpus_with(n_patients, n_controls, days, seed, |_| {})
}

/// Like [`gen_corpus`], with `adjust` applied to every subject profile after
/// the per-subject jitter.
pub fn gen_corpus_with(
    n_patients: usize,
    n_controls: usize,
    days: usize,
    seed: u64,
    adjust: impl Fn(&mut SubjectProfile) + Sync,
) -> Result<Corpus, SynthError> {
    if n_patients == 0 || n_controls == 0 || days == 0 {
        return Err(SynthError::EmptyRequest);
    }
    use rayon::prelude::*;
    let profile = |label, i| {
        let mut p = subject_profile(label, i, days, seed);
        adjust(&mut p);
        p
    };
    let subjects: Vec<(String, SubjectProfile)> = (0..n_patients)
        .map(|i| (format!("P{i:03}"), profile(Label::Patient, i)))
        .chain((0..n_controls).map(|i| (format!("C{i:03}"), profile(Label::Control, i))))
        .collect();
    let days = subjects
        .par_iter()
        .map(|(id, profile)| {
            let series = gen_subject(id, profile)?;
            Ok(filter_complete_days(split_into_days(&series)?).kept)
        })
        .collect::<Result<Vec<_>, SynthError>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(Corpus::new(days)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_features, Feature, FeatureSet};
    use crate::segmentation::{segment_day, Preset};

    #[test]
    fn control_nights_are_quieter() {
        let s = gen_subject("C", &SubjectProfile::control(2, 11)).unwrap();
        assert_eq!(s.samples.len(), 2880);
        let (mut night, mut nn, mut day, mut nd) = (0.0, 0.0, 0.0, 0.0);
        for (i, x) in s.samples.iter().enumerate() {
            let m = i % MINUTES_PER_DAY;
            if !(480..1200).contains(&m) {
                night += x.activity as f64;
                nn += 1.0;
            } else {
                day += x.activity as f64;
                nd += 1.0;
            }
        }
        assert!(night / nn < day / nd);
    }

    #[test]
    fn same_seed_same_series() {
        let p = SubjectProfile::patient(3, 5);
        assert_eq!(gen_subject("P", &p).unwrap(), gen_subject("P", &p).unwrap());
    }

    #[test]
    fn patient_nights_have_fewer_zeros() {
        // Monte-Carlo over 100 seeds
        let set = FeatureSet::new(vec![Feature::PropZeros]).unwrap();
        let night_zeros = |profile: SubjectProfile| -> f64 {
            let s = gen_subject("x", &profile).unwrap();
            let day = filter_complete_days(split_into_days(&s).unwrap()).kept.remove(0);
            let segs = segment_day(&day, &Preset::Parts2.scheme()).unwrap();
            extract_features(&segs[1].values, &set).unwrap().values[0]
        };
        let (mut p, mut c) = (0.0, 0.0);
        for seed in 0..100 {
            let mut patient = SubjectProfile::patient(1, seed);
            patient.burst_prob = 0.2;
            p += night_zeros(patient);
            c += night_zeros(SubjectProfile::control(1, seed + 1000));
        }
        assert!(p / 100.0 < c / 100.0 - 0.05, "patient {p} control {c}");
    }

    #[test]
    fn corpus_shape() {
        let c = gen_corpus(22, 32, 13, 1).unwrap();
        assert_eq!(c.subjects().len(), 54);
        assert_eq!(c.days().len(), 702);
        assert!(c.subjects().contains_key("P021") && c.subjects().contains_key("C031"));
        let c = gen_corpus(1, 1, 1, 9).unwrap();
        assert_eq!(c.days().len(), 2);
    }

    #[test]
    fn adjusted_profiles_apply() {
        let quiet = gen_corpus_with(1, 1, 1, 3, |p| p.base_rate = 0.0).unwrap();
        assert!(quiet.days().iter().all(|d| {
            let day: u32 = d.values()[WAKE..SLEEP].iter().sum();
            day == 0
        }));
    }

    #[test]
    fn different_seeds_differ() {
        assert_ne!(gen_corpus(1, 1, 1, 1).unwrap(), gen_corpus(1, 1, 1, 2).unwrap());
    }

    #[test]
    fn invalid_profile_rejected() {
        let mut p = SubjectProfile::patient(1, 0);
        p.morning_damping = 0.0;
        assert!(gen_subject("x", &p).is_err());
        assert!(matches!(gen_corpus(0, 1, 1, 0), Err(SynthError::EmptyRequest)));
    }
}
