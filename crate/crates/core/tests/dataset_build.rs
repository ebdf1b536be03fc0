use std::path::Path;

use hrvbench_core::dataset::*;
use hrvbench_core::error::Error;
use hrvbench_core::hrv::Label;
use hrvbench_core::signal::{write_waveform_csv, Modality};
use hrvbench_core::synth::{synth_bvp, NoiseSpec, SynthSpec};

const RATE: f64 = 64.0;

fn write_segment(dir: &Path, name: &str, t0: f64, seconds: f64, hr: f64, seed: u64) -> String {
    let spec = SynthSpec::new(Modality::Bvp, RATE, seconds, hr)
        .with_modulation(0.1, 30.0)
        .with_noise(NoiseSpec::standard())
        .with_seed(seed);
    let w = synth_bvp(&spec).unwrap().waveform;
    write_waveform_csv(&dir.join(name), &w, t0).unwrap();
    name.to_string()
}

fn recording(file: &str, cond: &str, t0: f64, t1: f64) -> Recording {
    Recording {
        file_path: file.into(),
        condition_id: cond.into(),
        t_start_s: t0,
        t_end_s: t1,
        keep_last_s: None,
    }
}

fn scheme() -> LabelScheme {
    LabelScheme::from_rules([
        ("baseline", ConditionRule::new(ConditionLabel::NoStress)),
        ("task", ConditionRule::new(ConditionLabel::Stress)),
        ("prep", ConditionRule::new(ConditionLabel::Exclude)),
    ])
}

/// Per participant: 6 min baseline then 5 min task, in separate files sharing one time axis.
fn two_participants(dir: &Path, task_seed: u64) -> DatasetManifest {
    let participants = (0..2u64)
        .map(|i| {
            let n = write_segment(
                dir,
                &format!("p{i}_base.csv"),
                0.0,
                360.0,
                66.0 + 4.0 * i as f64,
                10 + i,
            );
            let s = write_segment(dir, &format!("p{i}_task.csv"), 360.0, 300.0, 88.0, task_seed + i);
            ParticipantEntry {
                participant_id: format!("p{i}"),
                neutral_condition_id: "baseline".into(),
                recordings: vec![
                    recording(&n, "baseline", 0.0, 360.0),
                    recording(&s, "task", 360.0, 660.0),
                ],
                excluded: None,
            }
        })
        .collect();
    DatasetManifest {
        dataset_id: "synthetic".into(),
        modality: Modality::Bvp,
        rate_hz: RATE,
        participants,
        label_scheme: Some(scheme()),
        base_dir: dir.to_path_buf(),
    }
}

#[test]
fn two_synthetic_participants() {
    let dir = tempfile::tempdir().unwrap();
    let m = two_participants(dir.path(), 100);
    let (t, report) = build_feature_table(&m, &scheme(), BuildOptions::default()).unwrap();
    assert_eq!(t.participants(), ["p0", "p1"]);
    assert!(report.excluded.is_empty());
    let [neg, pos] = t.class_counts();
    assert!(neg > 200 && pos > 150, "{neg} {pos}");
    for r in &t.rows {
        assert!(r.values.iter().all(|v| v.is_finite()));
        // label purity: the whole window lies in its condition's segment
        let (lo, hi) = if r.condition_id == "baseline" {
            (0.0, 360.0)
        } else {
            (360.0, 660.0)
        };
        assert!(
            r.start_s >= lo && r.start_s + 60.0 <= hi + 1e-9,
            "{} {}",
            r.condition_id,
            r.start_s
        );
    }
    // neutral windows used for calibration lie in [0, 1] by construction
    for r in t.rows.iter().filter(|r| r.label == Label::NoStress) {
        assert!(r.values.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
    }
    assert_eq!(report.normalization.len(), 2);
}

#[test]
fn calibration_ignores_stress_signals() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let (_, a) = build_feature_table(&two_participants(dir_a.path(), 100), &scheme(), BuildOptions::default()).unwrap();
    let (tb, b) =
        build_feature_table(&two_participants(dir_b.path(), 555), &scheme(), BuildOptions::default()).unwrap();
    assert_eq!(a.normalization, b.normalization);
    assert!(tb.rows.iter().any(|r| r.label == Label::Stress));
}

#[test]
fn participant_without_neutral_data_is_excluded() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = two_participants(dir.path(), 100);
    m.participants[1].recordings.remove(0);
    let (t, report) = build_feature_table(&m, &scheme(), BuildOptions::default()).unwrap();
    assert_eq!(t.participants(), ["p0"]);
    assert_eq!(report.excluded.len(), 1);
    assert_eq!(report.excluded[0].participant_id, "p1");
    assert_eq!(t.participants().len() + report.excluded.len(), m.participants.len());
}

#[test]
fn manifest_exclusions_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = two_participants(dir.path(), 100);
    m.participants[0].excluded = Some("missing data".into());
    let (t, report) = build_feature_table(&m, &scheme(), BuildOptions::default()).unwrap();
    assert_eq!(t.participants(), ["p1"]);
    assert!(report.excluded[0].reason.contains("missing data"));
}

#[test]
fn excluded_condition_contributes_no_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = two_participants(dir.path(), 100);
    for p in &mut m.participants {
        p.recordings[1].condition_id = "prep".into();
    }
    let (t, _) = build_feature_table(&m, &scheme(), BuildOptions::default()).unwrap();
    assert!(t.rows.iter().all(|r| r.condition_id == "baseline"));
    assert_eq!(t.class_counts()[1], 0);
}

#[test]
fn all_excluded_is_an_empty_table_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = two_participants(dir.path(), 100);
    for p in &mut m.participants {
        p.neutral_condition_id = "missing".into();
    }
    assert!(matches!(
        build_feature_table(&m, &scheme(), BuildOptions::default()),
        Err(Error::EmptyTable(_))
    ));
}

#[test]
fn keep_last_trims_the_segment() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = two_participants(dir.path(), 100);
    for p in &mut m.participants {
        p.recordings[1].keep_last_s = Some(120.0);
    }
    let (t, _) = build_feature_table(&m, &scheme(), BuildOptions::default()).unwrap();
    let task: Vec<_> = t.rows.iter().filter(|r| r.condition_id == "task").collect();
    assert!(!task.is_empty());
    assert!(task.iter().all(|r| r.start_s >= 540.0));
}

#[test]
fn manifest_file_round_trip_and_table_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = two_participants(dir.path(), 100);
    let path = dir.path().join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&m).unwrap()).unwrap();
    let loaded = load_manifest(&path).unwrap();
    assert_eq!(loaded.participants, m.participants);
    let s = scheme_for(&loaded.dataset_id, loaded.label_scheme.as_ref()).unwrap();
    let (t, _) = build_feature_table(
        &loaded,
        &s,
        BuildOptions {
            plausibility_filter: true,
        },
    )
    .unwrap();
    let table_path = dir.path().join("table.csv");
    save_table(&t, &table_path).unwrap();
    let back = load_table(&table_path).unwrap();
    assert_eq!(back.len(), t.len());
    for (a, b) in t.rows.iter().zip(&back.rows) {
        assert_eq!(a.label, b.label);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 5.000001e-9 * x.abs(), "{x} {y}");
        }
    }
}
