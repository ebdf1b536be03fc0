use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hrvbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrvbench"))
        .args(args)
        .env_remove("HRVBENCH_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hrvbench(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and stderr of a failing run.
fn fails(args: &[&str]) -> (i32, String) {
    let out = hrvbench(args);
    assert!(!out.status.success(), "{args:?} succeeded");
    (out.status.code().unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn synth_table(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec![
        "synth",
        "features",
        "--n-per-class",
        "40",
        "--participants",
        "4",
        "--separation",
        "3",
    ];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", s(&path)]);
    ok(&args);
    path
}

fn report_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_ecg_writes_waveform_and_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let wave = dir.path().join(name);
        ok(&[
            "synth",
            "ecg",
            "--bpm",
            "60",
            "--duration",
            "60",
            "--seed",
            "7",
            "--out",
            s(&wave),
        ]);
        let beats = wave.with_extension("beats.csv");
        (std::fs::read(&wave).unwrap(), std::fs::read_to_string(&beats).unwrap())
    };
    let (wave, beats) = run("a.csv");
    assert_eq!(run("b.csv"), (wave.clone(), beats.clone()));
    let text = String::from_utf8(wave).unwrap();
    assert_eq!(text.lines().count(), 1 + 60 * 700);
    // 60 bpm over 60 s, none closer than half an interval to either end
    let n_beats = beats.lines().count() - 1;
    assert!((59..=60).contains(&n_beats), "{n_beats}");
}

#[test]
fn synth_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let (code, err) = fails(&["synth", "ecg", "--bpm", "500", "--out", s(&out)]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[E_INVALID_SPEC]:"), "{err}");
    let (code, err) = fails(&["synth", "bvp", "--noise", "loud", "--out", s(&out)]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[E_USAGE]:"), "{err}");
    let (code, err) = fails(&["synth", "ecg", "--bpm", "sixty", "--out", s(&out)]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[E_USAGE]:"), "{err}");
}

#[test]
fn loso_all_kinds_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let table = synth_table(dir.path(), "t.csv", &["--seed", "3"]);
    let out = dir.path().join("out");
    let stdout = ok(&["eval", "loso", "--table", s(&table), "--out", s(&out)]);
    assert_eq!(stdout.lines().count(), 3);
    for kind in ["RFC", "SVM", "MLP"] {
        let json = out.join(format!("within_{kind}.json"));
        let r = report_json(&json);
        assert_eq!(r["protocol"], "within");
        assert_eq!(r["summary"]["n"], 4);
        assert_eq!(r["config"]["run"]["command"], "eval loso");
        for f in r["folds"].as_array().unwrap() {
            assert!(out.join(f["model_ref"].as_str().unwrap()).is_file());
        }
        let text = ok(&["report", s(&json)]);
        assert_eq!(
            text,
            std::fs::read_to_string(out.join(format!("within_{kind}.txt"))).unwrap()
        );
        let csv = ok(&["report", s(&json), "--format", "csv"]);
        assert_eq!(csv.lines().count(), 1 + 4 + 2, "{csv}");
    }
    let (code, err) = fails(&["report", s(&out.join("within_RFC.json")), "--format", "xml"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[E_USAGE]:"), "{err}");
    let (code, err) = fails(&["report", s(&table)]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[E_INVALID_SPEC]:"), "{err}");
}

#[test]
fn cross_with_mismatched_roster_is_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth_table(dir.path(), "a.csv", &["--seed", "1"]);
    let b = synth_table(dir.path(), "b.csv", &["--seed", "2"]);
    let text = std::fs::read_to_string(&b).unwrap();
    let (header, body) = text.split_once('\n').unwrap();
    let swapped = header
        .replace("MeanNN", "TMP")
        .replace("MedianNN", "MeanNN")
        .replace("TMP", "MedianNN");
    assert_ne!(swapped, header);
    std::fs::write(&b, format!("{swapped}\n{body}")).unwrap();
    let out = dir.path().join("out");
    let (code, err) = fails(&[
        "eval",
        "cross",
        "--source",
        s(&a),
        "--target",
        s(&b),
        "--models",
        "svm",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[E_SCHEMA]:"), "{err}");
    assert!(!out.exists());
}

#[test]
fn cross_writes_source_models_and_transfer_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth_table(dir.path(), "a.csv", &["--seed", "1", "--dataset-id", "A"]);
    let b = synth_table(dir.path(), "b.csv", &["--seed", "2", "--dataset-id", "B"]);
    let out = dir.path().join("out");
    ok(&[
        "eval",
        "cross",
        "--source",
        s(&a),
        "--target",
        s(&b),
        "--models",
        "rfc",
        "--out",
        s(&out),
    ]);
    let r = report_json(&out.join("cross_RFC.json"));
    assert_eq!(r["protocol"], "cross");
    assert_eq!(r["source_datasets"], serde_json::json!(["A"]));
    assert_eq!(r["target_dataset"], "B");
    assert_eq!(r["folds"].as_array().unwrap().len(), 4);
    for f in r["folds"].as_array().unwrap() {
        assert!(out.join(f["model_ref"].as_str().unwrap()).is_file());
    }
    assert!(out.join("within_RFC.json").is_file());
}

#[test]
fn combined_has_per_source_sections() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth_table(dir.path(), "a.csv", &["--seed", "1", "--dataset-id", "A"]);
    let b = synth_table(dir.path(), "b.csv", &["--seed", "2", "--dataset-id", "B"]);
    let out = dir.path().join("out");
    ok(&[
        "eval",
        "combined",
        "--table",
        s(&a),
        "--table",
        s(&b),
        "--models",
        "svm",
        "--out",
        s(&out),
    ]);
    let r = report_json(&out.join("combined_SVM.json"));
    assert_eq!(r["summary"]["n"], 8);
    let per_source = r["per_source"].as_object().unwrap();
    assert_eq!(per_source.keys().collect::<Vec<_>>(), ["A", "B"]);
    assert_eq!(per_source["A"]["n"], 4);
    let (code, _) = fails(&["eval", "combined", "--table", s(&a), "--out", s(&out)]);
    assert_eq!(code, 2);
}

#[test]
fn output_tree_independent_of_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let table = synth_table(dir.path(), "t.csv", &["--seed", "4"]);
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "eval",
            "loso",
            "--table",
            s(&table),
            "--seed",
            "11",
            "--parallelism",
            threads,
            "--out",
            s(&out),
        ]);
        tree_bytes(&out)
    };
    let one = run("1", "p1");
    assert_eq!(one.len(), 3 * (2 + 4));
    assert!(one == run("8", "p8"));
    assert!(one == run("1", "p1b"));
}

#[test]
fn seed_from_flag_config_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let table = synth_table(dir.path(), "t.csv", &["--seed", "5"]);
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"seed": 21, "models": ["SVM"], "class_weighting": false}"#).unwrap();
    let seed_of = |out: &Path| report_json(&out.join("within_SVM.json"))["config"]["master_seed"].clone();

    let from_file = dir.path().join("f");
    ok(&[
        "eval",
        "loso",
        "--config",
        s(&config),
        "--table",
        s(&table),
        "--out",
        s(&from_file),
    ]);
    assert_eq!(seed_of(&from_file), 21);
    assert_eq!(
        report_json(&from_file.join("within_SVM.json"))["config"]["class_weighting"],
        false
    );
    assert!(!from_file.join("within_RFC.json").exists());

    let from_flag = dir.path().join("g");
    ok(&[
        "eval",
        "loso",
        "--config",
        s(&config),
        "--seed",
        "22",
        "--table",
        s(&table),
        "--out",
        s(&from_flag),
    ]);
    assert_eq!(seed_of(&from_flag), 22);

    let from_env = dir.path().join("h");
    let out = Command::new(env!("CARGO_BIN_EXE_hrvbench"))
        .args([
            "eval",
            "loso",
            "--models",
            "svm",
            "--table",
            s(&table),
            "--out",
            s(&from_env),
        ])
        .env("HRVBENCH_SEED", "23")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(seed_of(&from_env), 23);

    std::fs::write(&config, r#"{"seed": 21, "threads": 2}"#).unwrap();
    let (code, err) = fails(&[
        "eval",
        "loso",
        "--config",
        s(&config),
        "--table",
        s(&table),
        "--out",
        s(&from_env),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("threads"), "{err}");
}

fn write_bvp(dir: &Path, name: &str, t0: u32, seconds: u32, bpm: u32, seed: u32) -> String {
    let path = dir.join(name);
    let [t0, seconds, bpm, seed] = [t0, seconds, bpm, seed].map(|v| v.to_string());
    ok(&[
        "synth",
        "bvp",
        "--t0",
        &t0,
        "--duration",
        &seconds,
        "--bpm",
        &bpm,
        "--mod-freq",
        "0.1",
        "--mod-depth",
        "30",
        "--seed",
        &seed,
        "--out",
        s(&path),
    ]);
    name.to_string()
}

fn manifest(dir: &Path) -> PathBuf {
    let mut participants = Vec::new();
    for i in 0..2u32 {
        let base = write_bvp(dir, &format!("p{i}_base.csv"), 0, 360, 66 + 4 * i, 10 + i);
        let task = write_bvp(dir, &format!("p{i}_task.csv"), 360, 300, 88, 20 + i);
        participants.push(serde_json::json!({
            "participant_id": format!("p{i}"),
            "neutral_condition_id": "baseline",
            "recordings": [
                {"file_path": base, "condition_id": "baseline", "t_start_s": 0.0, "t_end_s": 360.0},
                {"file_path": task, "condition_id": "task", "t_start_s": 360.0, "t_end_s": 660.0},
            ],
        }));
    }
    let m = serde_json::json!({
        "dataset_id": "synthetic",
        "modality": "BVP",
        "rate_hz": 64.0,
        "participants": participants,
        "label_scheme": {"baseline": {"label": "no_stress"}, "task": {"label": "stress"}},
    });
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&m).unwrap()).unwrap();
    path
}

#[test]
fn features_from_synthetic_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path());
    let table = dir.path().join("features.csv");
    ok(&["features", "--manifest", s(&m), "--out", s(&table)]);
    // windows run from the first beat at a 1 s hop while they end by the last beat
    let expected: usize = ["p0_base", "p0_task", "p1_base", "p1_task"]
        .iter()
        .map(|name| {
            let beats = std::fs::read_to_string(dir.path().join(format!("{name}.beats.csv"))).unwrap();
            let t: Vec<f64> = beats.lines().skip(1).map(|l| l.parse().unwrap()).collect();
            ((t[t.len() - 1] - t[0] - 60.0) / 1.0).floor() as usize + 1
        })
        .sum();
    assert!(expected > 1000, "{expected}");
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 1 + expected);
    let report = report_json(&table.with_extension("build.json"));
    assert_eq!(report["participants_total"], 2);
    assert_eq!(report["excluded"].as_array().unwrap().len(), 0);
    assert_eq!(report["intervals_filtered"], 0);

    // a flat 3 s stretch in the baseline leaves one implausibly long interval
    let base = dir.path().join("p0_base.csv");
    let text = std::fs::read_to_string(&base).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    for line in &mut lines[1 + 100 * 64..1 + 103 * 64] {
        let t = line.split(',').next().unwrap().to_string();
        *line = format!("{t},0");
    }
    std::fs::write(&base, lines.join("\n") + "\n").unwrap();
    let filtered = dir.path().join("filtered.csv");
    ok(&[
        "features",
        "--manifest",
        s(&m),
        "--out",
        s(&filtered),
        "--plausibility-filter",
    ]);
    let report = report_json(&filtered.with_extension("build.json"));
    assert!(report["intervals_filtered"].as_u64().unwrap() >= 1, "{report}");
    let unfiltered = dir.path().join("unfiltered.csv");
    ok(&["features", "--manifest", s(&m), "--out", s(&unfiltered)]);
    assert_eq!(
        report_json(&unfiltered.with_extension("build.json"))["intervals_filtered"],
        0
    );
}

#[test]
fn bad_manifest_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let out = dir.path().join("f.csv");
    std::fs::write(
        &m,
        r#"{"dataset_id": "x", "modality": "BVP", "rate_hz": 64.0, "participants": []}"#,
    )
    .unwrap();
    let (code, err) = fails(&["features", "--manifest", s(&m), "--out", s(&out)]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[E_MANIFEST]:"), "{err}");
    let (code, err) = fails(&[
        "features",
        "--manifest",
        s(&dir.path().join("missing.json")),
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 2, "{err}");
    let good = manifest(dir.path());
    let (code, err) = fails(&["features", "--manifest", s(&good), "--scheme", "NOPE", "--out", s(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("WESAD"), "{err}");
    assert!(!out.exists());
}
