//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs as a plain binary (`harness = false`) and exits non-zero when any
//! criterion fails. Criterion 8 needs the PSYKOSE recordings under
//! `$PSYKOSE_DIR` or `data/psykose` at the workspace root and is skipped
//! otherwise.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use actiseg_cli::{cmd_evaluate, Cli, Command};
use actiseg_core::evaluation::{auc_roc, cross_validate, f1, stratified_kfold, CvMode, F1_THRESHOLD};
use actiseg_core::features::{extract_features, featurize_corpus, Feature, FeatureSet, FeatureTable};
use actiseg_core::ingest::{load_corpus, ColumnMap, Corpus, DaySeries, Label, LabelSource};
use actiseg_core::models::{logistic, train, train_table, FittedState, ModelPreset, ModelSpec, TrainedModel};
use actiseg_core::segmentation::{segment_day, Preset};
use actiseg_core::synth::{gen_corpus, gen_corpus_with};
use chrono::NaiveDate;
use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Status {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Outcome = Status;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Status::Pass(detail)
    } else {
        Status::Fail(detail)
    }
}

fn within_budget(outcome: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    match outcome {
        Status::Pass(d) if elapsed > budget => {
            Status::Fail(format!("{d}; took {elapsed:.1?}, budget {budget:?}"))
        }
        other => other,
    }
}

// ---------------------------------------------------------------------------
// 1. feature oracle

fn naive_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn naive_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Straight transcription of the feature definitions, in `Feature::ALL` order.
fn naive_features(raw: &[u32]) -> [f64; 16] {
    let x: Vec<f64> = raw.iter().map(|&v| v as f64).collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let moment = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let (m2, m3, m4) = (moment(2), moment(3), moment(4));
    let mut sorted = x.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = naive_median(&sorted);
    let std_dev = m2.sqrt();

    let mut dev: Vec<f64> = x.iter().map(|v| (v - median).abs()).collect();
    dev.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let distinct: BTreeSet<u32> = raw.iter().copied().collect();
    let entropy = if distinct.len() <= 1 {
        0.0
    } else {
        let bins = distinct.len().min(16) as u64;
        let max = *raw.iter().max().unwrap() as u64;
        let mut counts = vec![0usize; bins as usize];
        for &v in raw {
            let b = ((v as u64 * bins) / max).min(bins - 1);
            counts[b as usize] += 1;
        }
        -counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum::<f64>()
    };

    let denom: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let autocorr = if denom == 0.0 {
        0.0
    } else {
        x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / denom
    };
    let mut peaks = 0;
    let mut troughs = 0;
    for i in 1..x.len().saturating_sub(1) {
        if x[i - 1] < x[i] && x[i] > x[i + 1] {
            peaks += 1;
        }
        if x[i - 1] > x[i] && x[i] < x[i + 1] {
            troughs += 1;
        }
    }

    [
        mean,
        median,
        std_dev,
        x.iter().filter(|&&v| v == 0.0).count() as f64 / n,
        if m2 == 0.0 { 0.0 } else { m3 / m2.powf(1.5) },
        if m2 == 0.0 { 0.0 } else { m4 / (m2 * m2) - 3.0 },
        sorted[sorted.len() - 1],
        naive_median(&dev),
        naive_quantile(&sorted, 0.75) - naive_quantile(&sorted, 0.25),
        if mean == 0.0 { 0.0 } else { std_dev / mean },
        entropy,
        autocorr,
        peaks as f64,
        troughs as f64,
        x.iter().filter(|&&v| v < mean).map(|v| (mean - v).powi(2)).sum::<f64>() / n,
        (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
    ]
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn random_vector(rng: &mut ChaCha8Rng, case: usize) -> Vec<u32> {
    let n = match case % 10 {
        2 => 2,
        _ => rng.random_range(2..=1440),
    };
    match case % 10 {
        0 => vec![rng.random_range(0..=5000); n],
        1 => vec![0; n],
        3..=5 => (0..n)
            .map(|_| if rng.random_bool(0.8) { 0 } else { rng.random_range(1..=5000) })
            .collect(),
        6 => (0..n).map(|_| rng.random_range(0..=3)).collect(),
        _ => (0..n).map(|_| rng.random_range(0..=5000)).collect(),
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf1);
    let set = FeatureSet::default();
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let v = random_vector(&mut rng, case);
        let got = extract_features(&v, &set).expect("non-empty input");
        let want = naive_features(&v);
        for (i, f) in Feature::ALL.iter().enumerate() {
            let g = got.get(*f).unwrap();
            if !g.is_finite() || !rel_close(g, want[i], 1e-9) {
                return Status::Fail(format!("case {case} (n = {}): {f} = {g}, oracle {}", v.len(), want[i]));
            }
            worst = worst.max((g - want[i]).abs() / want[i].abs().max(g.abs()).max(1.0));
        }
    }
    Status::Pass(format!("1000 vectors x 16 features, worst relative error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 2. AUC and F1 oracles

fn brute_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let (mut wins2, mut pairs) = (0u64, 0u64);
    for (i, li) in labels.iter().enumerate() {
        if !li.is_positive() {
            continue;
        }
        for (j, lj) in labels.iter().enumerate() {
            if lj.is_positive() {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins2 += 2;
            } else if scores[i] == scores[j] {
                wins2 += 1;
            }
        }
    }
    wins2 as f64 / (2 * pairs) as f64
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Label>) {
    let n = rng.random_range(2..=200);
    let levels = rng.random_range(2..=50);
    let mut labels: Vec<Label> = (0..n)
        .map(|_| if rng.random_bool(0.4) { Label::Patient } else { Label::Control })
        .collect();
    labels[0] = Label::Patient;
    labels[1] = Label::Control;
    let scores = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
    (scores, labels)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa0c);
    for case in 0..500 {
        let (scores, labels) = random_instance(&mut rng);
        let got = auc_roc(&scores, &labels).unwrap();
        let want = brute_auc(&scores, &labels);
        if got != want {
            return Status::Fail(format!("AUC case {case}: {got} vs brute force {want}"));
        }
        let (mut tp, mut fp, mut fneg) = (0u32, 0u32, 0u32);
        for (s, l) in scores.iter().zip(&labels) {
            match (*s >= F1_THRESHOLD, l.is_positive()) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => {}
            }
        }
        let want_f1 = if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
        };
        let got_f1 = f1(&scores, &labels, F1_THRESHOLD).unwrap();
        if got_f1 != want_f1 {
            return Status::Fail(format!("F1 case {case}: {got_f1} vs {want_f1}"));
        }
    }
    Status::Pass("500 tied instances, AUC and F1 bit-identical to the oracles".into())
}

// ---------------------------------------------------------------------------
// 3. logistic gradient

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x10c);
    let mut worst = 0.0f64;
    for problem in 0..50 {
        let n = rng.random_range(5..=40);
        let p = rng.random_range(1..=6);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..2) as f64).collect();
        let l2 = rng.random_range(0.01..2.0);
        let theta: Vec<f64> = (0..=p).map(|_| rng.random_range(-1.5..1.5)).collect();
        let (_, grad) = logistic::objective(&theta, &rows, &y, l2);
        for j in 0..=p {
            // Richardson-extrapolated central difference
            let central = |h: f64| {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[j] += h;
                down[j] -= h;
                (logistic::objective(&up, &rows, &y, l2).0 - logistic::objective(&down, &rows, &y, l2).0)
                    / (2.0 * h)
            };
            let h = 1e-3;
            let fd = (4.0 * central(h / 2.0) - central(h)) / 3.0;
            let err = (grad[j] - fd).abs() / grad[j].abs().max(fd.abs()).max(1e-3);
            worst = worst.max(err);
            if err > 1e-6 {
                return Status::Fail(format!(
                    "problem {problem}, coordinate {j}: analytic {} vs finite difference {fd} (rel {err:.2e})",
                    grad[j]
                ));
            }
        }
    }
    Status::Pass(format!("50 problems, worst relative error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 4. GBDT loss and separability

fn labels_of(bits: &[bool]) -> Vec<Label> {
    bits.iter()
        .map(|&b| if b { Label::Patient } else { Label::Control })
        .collect()
}

fn gbdt_fixtures() -> Vec<(&'static str, Vec<Vec<f64>>, Vec<Label>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6bd7);
    let mut out = Vec::new();

    let x: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64, ((i * 37) % 11) as f64]).collect();
    let y = labels_of(&(0..200).map(|i| i >= 100).collect::<Vec<_>>());
    out.push(("separable", x, y));

    let x: Vec<Vec<f64>> = (0..300)
        .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y = labels_of(&x.iter().map(|r: &Vec<f64>| r[0] + 0.5 * r[1] + rng.random_range(-0.6..0.6) > 0.0).collect::<Vec<_>>());
    out.push(("noisy_linear", x, y));

    let x: Vec<Vec<f64>> = (0..400)
        .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y = labels_of(&x.iter().map(|r: &Vec<f64>| (r[0] > 0.0) != (r[1] > 0.0)).collect::<Vec<_>>());
    out.push(("xor", x, y));

    let x: Vec<Vec<f64>> = (0..120).map(|_| vec![rng.random_range(0..4) as f64, 1.0]).collect();
    let y = labels_of(&(0..120).map(|_| rng.random_bool(0.3)).collect::<Vec<_>>());
    out.push(("pure_noise", x, y));

    let corpus = gen_corpus(6, 6, 4, 3).unwrap();
    let t = featurize_corpus(&corpus, &Preset::Parts2.scheme(), &FeatureSet::default()).unwrap();
    out.push(("synthetic_parts2", t.matrix(), t.labels()));
    out
}

fn criterion_4() -> Outcome {
    let mut notes = Vec::new();
    for (name, x, y) in gbdt_fixtures() {
        let cols: Vec<String> = (0..x[0].len()).map(|j| format!("f{j}")).collect();
        for preset in [ModelPreset::Lgbm, ModelPreset::Xgb] {
            let model = train(&preset.spec(5), &x, &y, &cols).unwrap();
            let FittedState::Gbdt(g) = &model.state else {
                return Status::Fail(format!("{} did not produce a boosted model", preset.name()));
            };
            if let Some(r) = g.train_log_loss.windows(2).position(|w| w[1] > w[0]) {
                return Status::Fail(format!(
                    "{name}/{}: loss rose in round {}: {} -> {}",
                    preset.name(),
                    r + 1,
                    g.train_log_loss[r],
                    g.train_log_loss[r + 1]
                ));
            }
            if name == "separable" {
                let auc = auc_roc(&model.predict_proba(&x).unwrap(), &y).unwrap();
                if auc != 1.0 {
                    return Status::Fail(format!("separable/{}: training AUC {auc}", preset.name()));
                }
            }
        }
        notes.push(name);
    }
    Status::Pass(format!(
        "loss non-increasing for lgbm and xgb on {}; separable training AUC 1.0",
        notes.join(", ")
    ))
}

// ---------------------------------------------------------------------------
// 5. stratification

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5f0);
    for draw in 0..1000 {
        let k = rng.random_range(2..=10);
        let n = rng.random_range(k..=300);
        let p_pos = rng.random_range(0.05..0.95);
        let mut labels: Vec<Label> = (0..n)
            .map(|_| if rng.random_bool(p_pos) { Label::Patient } else { Label::Control })
            .collect();
        labels[0] = Label::Patient;
        labels[1] = Label::Control;
        let seed = rng.random();
        let plan = stratified_kfold(&labels, &[], k, seed, CvMode::RowStratified).unwrap();
        for c in [Label::Control, Label::Patient] {
            let n_c = labels.iter().filter(|&&l| l == c).count() as f64;
            for f in 0..k {
                let got = plan.test_rows(f).iter().filter(|&&r| labels[r] == c).count() as f64;
                if (got - n_c / k as f64).abs() >= 1.0 {
                    return Status::Fail(format!(
                        "draw {draw}: fold {f} holds {got} of class {c}, proportional share {:.2}",
                        n_c / k as f64
                    ));
                }
            }
        }

        let subjects = rng.random_range(k.max(2)..=40);
        let mut ids = Vec::new();
        let mut glabels = Vec::new();
        for s in 0..subjects {
            let label = if s % 2 == 0 { Label::Patient } else { Label::Control };
            for _ in 0..rng.random_range(1..=8) {
                ids.push(format!("s{s}"));
                glabels.push(label);
            }
        }
        let groups: Vec<&str> = ids.iter().map(String::as_str).collect();
        let plan = stratified_kfold(&glabels, &groups, k, seed, CvMode::SubjectGrouped).unwrap();
        for s in 0..subjects {
            let name = format!("s{s}");
            let folds: BTreeSet<usize> = (0..ids.len())
                .filter(|&i| ids[i] == name)
                .map(|i| plan.assignments[i])
                .collect();
            if folds.len() != 1 {
                return Status::Fail(format!("draw {draw}: subject {name} spans folds {folds:?}"));
            }
        }
    }
    Status::Pass("1000 draws: per-fold class counts within 1 of proportional; no subject split".into())
}

// ---------------------------------------------------------------------------
// 6. segmentation conservation

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e6);
    let date = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    for preset in Preset::ALL {
        let scheme = preset.scheme();
        for d in 0..100 {
            let values: Vec<u32> = (0..1440).map(|_| rng.random_range(0..3000)).collect();
            let day = DaySeries::new("s", Label::Control, date, values.clone()).unwrap();
            let mut seen: Vec<u32> = segment_day(&day, &scheme)
                .unwrap()
                .into_iter()
                .flat_map(|s| s.values)
                .collect();
            let mut want = values;
            seen.sort_unstable();
            want.sort_unstable();
            if seen != want {
                return Status::Fail(format!("{preset} day {d}: segment values differ from the day's"));
            }
        }
    }
    let minutes: Vec<u32> = (0..1440).collect();
    let day = DaySeries::new("s", Label::Control, date, minutes).unwrap();
    let segs = segment_day(&day, &Preset::Parts2.scheme()).unwrap();
    let night: Vec<u32> = segs
        .iter()
        .find(|s| s.def_name == "night")
        .map(|s| s.values.clone())
        .unwrap_or_default();
    let want: Vec<u32> = (0..480).chain(1200..1440).collect();
    check(
        night == want,
        format!(
            "8 presets x 100 days conserve values; parts2 night is minutes [0,480) and [1200,1440) ({} minutes)",
            night.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. synthetic segmentation effect

fn cv_auc(corpus: &Corpus, preset: Preset, spec: &ModelSpec, seed: u64) -> f64 {
    let table = featurize_corpus(corpus, &preset.scheme(), &FeatureSet::default()).unwrap();
    let plan = stratified_kfold(&table.labels(), &table.groups(), 10, seed, CvMode::RowStratified).unwrap();
    cross_validate(&table, spec, &plan).unwrap().auc_mean
}

fn criterion_7() -> Outcome {
    let presets = [Preset::Parts2, Preset::Parts4, Preset::Parts6, Preset::Parts12, Preset::AllDays];
    let mut sums = [0.0; 5];
    let seeds = 1..=5u64;
    let n = seeds.clone().count() as f64;
    for seed in seeds {
        let corpus = gen_corpus(10, 10, 14, seed).unwrap();
        let spec = ModelPreset::Lgbm.spec(seed);
        for (i, p) in presets.iter().enumerate() {
            sums[i] += cv_auc(&corpus, *p, &spec, seed);
        }
    }
    let m: Vec<f64> = sums.iter().map(|s| s / n).collect();
    let detail = format!(
        "mean AUC parts2 {:.4}, parts4 {:.4}, parts6 {:.4}, parts12 {:.4}, all_days {:.4}",
        m[0], m[1], m[2], m[3], m[4]
    );
    let ok = m[0] - m[4] >= 0.02 && m[1..4].iter().all(|a| (a - m[0]).abs() <= 0.03);
    check(ok, detail)
}

// ---------------------------------------------------------------------------
// 8. PSYKOSE

fn psykose_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("PSYKOSE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/psykose"));
    dir.is_dir().then_some(dir)
}

fn psykose_corpus() -> Option<Corpus> {
    let dir = psykose_dir()?;
    Some(load_corpus(&dir, &LabelSource::Directories, &ColumnMap::default()).expect("PSYKOSE recordings load"))
}

fn criterion_8(corpus: Option<&Corpus>) -> Outcome {
    let Some(corpus) = corpus else {
        return Status::Skip("PSYKOSE data not found (set PSYKOSE_DIR)".into());
    };
    let spec = ModelPreset::Lgbm.spec(0);
    let parts2 = cv_auc(corpus, Preset::Parts2, &spec, 0);
    let all_days = cv_auc(corpus, Preset::AllDays, &spec, 0);
    check(
        (parts2 - 0.97).abs() <= 0.05 && (all_days - 0.93).abs() <= 0.05 && parts2 > all_days,
        format!("lgbm 10-fold AUC parts2 {parts2:.4} (target 0.97 +/- 0.05), all_days {all_days:.4} (target 0.93 +/- 0.05)"),
    )
}

// ---------------------------------------------------------------------------
// 9. importance

fn ranking(table: &FeatureTable, spec: &ModelSpec) -> Vec<String> {
    let model: TrainedModel = train_table(spec, table).unwrap();
    model.gain_importance().unwrap().entries.into_iter().map(|(n, _)| n).collect()
}

fn criterion_9(psykose: Option<&Corpus>) -> Outcome {
    let scheme = Preset::Parts2.scheme();
    let set = FeatureSet::default();
    let spec = ModelPreset::Lgbm.spec(0);
    let is_night = |name: &str| name.starts_with("night_");

    // all class signal in nocturnal bursts
    let mut details = Vec::new();
    for seed in 1..=5 {
        let corpus = gen_corpus_with(10, 10, 14, seed, |p| p.morning_damping = 1.0).unwrap();
        let top = ranking(&featurize_corpus(&corpus, &scheme, &set).unwrap(), &spec);
        if !is_night(&top[0]) {
            return Status::Fail(format!("burst-only corpus, seed {seed}: top feature {}", top[0]));
        }
        details.push(top[0].clone());
    }
    let default = gen_corpus(10, 10, 14, 1).unwrap();
    let top = ranking(&featurize_corpus(&default, &scheme, &set).unwrap(), &spec);
    if !top[..3].iter().any(|n| is_night(n)) {
        return Status::Fail(format!("default corpus: no night feature in top 3 {:?}", &top[..3]));
    }
    let mut detail = format!(
        "burst-only top features {}; default corpus top 3 {:?}",
        details.join(", "),
        &top[..3]
    );
    if let Some(corpus) = psykose {
        let top = ranking(&featurize_corpus(corpus, &scheme, &set).unwrap(), &spec);
        let night = top[..5].iter().filter(|n| is_night(n)).count();
        detail.push_str(&format!("; PSYKOSE top 5 {:?}", &top[..5]));
        if night < 2 {
            return Status::Fail(format!("{detail}: only {night} night features"));
        }
    }
    Status::Pass(detail)
}

// ---------------------------------------------------------------------------
// 10. determinism

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("experiment.toml");
    std::fs::write(
        &config,
        r#"
seed = 11
k = 5
schemes = ["parts2", "parts4", "all_days"]
models = ["lgbm", "xgb", "random_forest", "logistic_regression", "svm", "knn", "decision_tree"]
roc = true

[synth]
patients = 6
controls = 6
days = 5
"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (run, workers) in [(0, "1"), (1, "4")] {
        let out = dir.path().join(format!("run{run}"));
        let argv = [
            "actiseg",
            "evaluate",
            "--config",
            config.to_str().unwrap(),
            "--output-dir",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ];
        let Command::Evaluate(args) = Cli::try_parse_from(argv).unwrap().command else {
            unreachable!()
        };
        let result = match cmd_evaluate(&args) {
            Ok(r) => r,
            Err(e) => return Status::Fail(format!("run {run}: {e}")),
        };
        let files: Vec<Vec<u8>> = [Some(result.report), Some(result.folds), result.roc]
            .into_iter()
            .flatten()
            .map(|p| std::fs::read(p).unwrap())
            .collect();
        outputs.push(files);
    }
    check(
        outputs[0] == outputs[1],
        format!(
            "report, folds and ROC files byte-identical across 1 and 4 workers ({} report bytes)",
            outputs[0][0].len()
        ),
    )
}

fn main() -> ExitCode {
    let psykose = psykose_corpus();
    let criteria: Vec<(usize, &str, Duration, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "feature oracle", Duration::from_secs(10), Box::new(criterion_1)),
        (2, "AUC and F1 oracles", Duration::from_secs(5), Box::new(criterion_2)),
        (3, "logistic gradient", Duration::MAX, Box::new(criterion_3)),
        (4, "GBDT loss and separability", Duration::MAX, Box::new(criterion_4)),
        (5, "stratification", Duration::MAX, Box::new(criterion_5)),
        (6, "segmentation conservation", Duration::MAX, Box::new(criterion_6)),
        (7, "synthetic segmentation effect", Duration::from_secs(300), Box::new(criterion_7)),
        (8, "PSYKOSE reproduction", Duration::from_secs(900), Box::new(|| criterion_8(psykose.as_ref()))),
        (9, "importance sanity", Duration::MAX, Box::new(|| criterion_9(psykose.as_ref()))),
        (10, "end-to-end determinism", Duration::MAX, Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (tag, detail) = match within_budget(outcome, elapsed, budget) {
            Status::Pass(d) => ("PASS", d),
            Status::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Status::Skip(d) => ("SKIP", d),
        };
        println!("criterion {id:>2} [{tag}] {name}: {detail} ({elapsed:.2?})");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
