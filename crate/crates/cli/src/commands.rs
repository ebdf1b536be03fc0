use std::path::{Path, PathBuf};

use hrvbench_core::dataset::{
    build_feature_table, built_in_schemes, load_manifest, load_table, save_table, scheme_for, BuildOptions,
    FeatureTable, LabelScheme,
};
use hrvbench_core::eval::{
    combine_and_loso, cross_dataset, load_report, loso, render_csv, render_text, write_report, EvalConfig,
    EvaluationReport, FoldModel,
};
use hrvbench_core::models::{save_model, ModelKind};
use hrvbench_core::signal::{write_waveform_csv, Modality};
use hrvbench_core::synth::{synth_bvp, synth_ecg, synth_feature_sets, FeatureSetSpec, NoiseSpec, SynthSpec};
use serde_json::json;

use crate::config::{model_kinds, write_file, CliError, FileConfig, Settings};
use crate::{EvalArgs, EvalCommand, FeatureSynthArgs, FeaturesArgs, ReportArgs, SynthCommand, WaveArgs};

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn json_bytes<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Io(format!("serializing JSON: {e}")))
}

pub fn features(settings: &Settings, file: &FileConfig, a: FeaturesArgs) -> Result<(), CliError> {
    let manifest = load_manifest(&a.manifest)?;
    let scheme = match (&a.scheme, &a.scheme_file) {
        (_, Some(path)) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let s: LabelScheme =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            s.validate()?;
            s
        }
        (Some(id), None) => {
            let mut all = built_in_schemes();
            let names: Vec<String> = all.keys().cloned().collect();
            let s = all
                .remove(id)
                .ok_or_else(|| CliError::Usage(format!("unknown scheme {id:?}; built-in: {}", names.join(", "))))?;
            s.validate()?;
            s
        }
        (None, None) => scheme_for(&manifest.dataset_id, manifest.label_scheme.as_ref())?,
    };
    let opts = BuildOptions {
        plausibility_filter: a.plausibility_filter || file.plausibility_filter.unwrap_or(false),
    };
    let (table, report) = settings.install(|| build_feature_table(&manifest, &scheme, opts))??;
    save_table(&table, &a.out)?;
    let report_path = a.report.unwrap_or_else(|| a.out.with_extension("build.json"));
    write_file(&report_path, json_bytes(&report)?)?;
    println!(
        "{} windows from {} of {} participants ({} excluded) -> {}",
        table.len(),
        report.participants_total - report.excluded.len(),
        report.participants_total,
        report.excluded.len(),
        a.out.display()
    );
    for x in &report.excluded {
        println!("  excluded {}: {}", x.participant_id, x.reason);
    }
    Ok(())
}

fn load(path: &Path) -> Result<FeatureTable, CliError> {
    Ok(load_table(path)?)
}

fn eval_config(settings: &Settings, file: &FileConfig, common: &EvalArgs) -> EvalConfig {
    let mut cfg = EvalConfig::new(settings.seed);
    cfg.class_weighting = !common.no_class_weighting && file.class_weighting.unwrap_or(true);
    if let Some(h) = &file.hyperparams {
        cfg.hyperparams = h.clone();
    }
    cfg
}

/// Report plus fold models, written after all computation is done.
fn emit(
    dir: &Path,
    stem: &str,
    mut report: EvaluationReport,
    run: &serde_json::Value,
    models: &[FoldModel],
) -> Result<(), CliError> {
    report.config.run = run.clone();
    for m in models {
        let path = dir.join(&m.model_ref);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        }
        save_model(&m.model, &path)?;
    }
    let (json_path, _) = write_report(&report, dir, stem)?;
    let s = &report.summary;
    println!(
        "{} {}: f1_pos {:.3} (sd {:.3}), accuracy {:.3} over {} folds, {} skipped -> {}",
        report.protocol.as_str(),
        report.model_kind,
        s.mean.f1_pos,
        s.std.f1_pos,
        s.mean.accuracy,
        s.n,
        report.skipped.len(),
        json_path.display()
    );
    Ok(())
}

pub fn eval(settings: &Settings, file: &FileConfig, cmd: EvalCommand) -> Result<(), CliError> {
    match cmd {
        EvalCommand::Loso { table, common } => {
            let kinds = model_kinds(&common.models, file)?;
            let cfg = eval_config(settings, file, &common);
            let t = load(&table)?;
            let run = run_echo("loso", &[&table], &kinds);
            let outs =
                settings.install(|| kinds.iter().map(|&k| loso(&t, k, &cfg)).collect::<Result<Vec<_>, _>>())??;
            for o in outs {
                let stem = format!("within_{}", o.report.model_kind);
                emit(&common.out, &stem, o.report, &run, &o.models)?;
            }
        }
        EvalCommand::Cross { source, target, common } => {
            let kinds = model_kinds(&common.models, file)?;
            let cfg = eval_config(settings, file, &common);
            let (src, tgt) = (load(&source)?, load(&target)?);
            if src.feature_names != tgt.feature_names {
                return Err(hrvbench_core::Error::Schema(format!(
                    "{} and {} have different feature rosters",
                    source.display(),
                    target.display()
                ))
                .into());
            }
            let run = run_echo("cross", &[&source, &target], &kinds);
            let outs = settings.install(|| {
                kinds
                    .iter()
                    .map(|&k| {
                        let within = loso(&src, k, &cfg)?;
                        let cross = cross_dataset(&within.models, &tgt, &cfg)?;
                        Ok((within, cross))
                    })
                    .collect::<hrvbench_core::Result<Vec<_>>>()
            })??;
            for (within, cross) in outs {
                let kind = cross.model_kind;
                emit(&common.out, &format!("cross_{kind}"), cross, &run, &[])?;
                emit(
                    &common.out,
                    &format!("within_{kind}"),
                    within.report,
                    &run,
                    &within.models,
                )?;
            }
        }
        EvalCommand::Combined { tables, common } => {
            if tables.len() < 2 {
                return Err(CliError::Usage(
                    "combined evaluation needs at least two --table arguments".into(),
                ));
            }
            let kinds = model_kinds(&common.models, file)?;
            let cfg = eval_config(settings, file, &common);
            let loaded = tables.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
            let paths: Vec<&PathBuf> = tables.iter().collect();
            let run = run_echo("combined", &paths, &kinds);
            let outs = settings.install(|| {
                kinds
                    .iter()
                    .map(|&k| combine_and_loso(&loaded, k, &cfg))
                    .collect::<Result<Vec<_>, _>>()
            })??;
            for o in outs {
                let stem = format!("combined_{}", o.report.model_kind);
                emit(&common.out, &stem, o.report, &run, &o.models)?;
            }
        }
    }
    Ok(())
}

/// Echoed into reports. Output locations and parallelism are left out so the
/// output tree depends only on inputs and seed.
fn run_echo(protocol: &str, tables: &[&PathBuf], kinds: &[ModelKind]) -> serde_json::Value {
    json!({
        "command": format!("eval {protocol}"),
        "tables": tables.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
        "models": kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>(),
    })
}

pub fn synth(settings: &Settings, cmd: SynthCommand) -> Result<(), CliError> {
    match cmd {
        SynthCommand::Ecg(a) => waveform(settings, Modality::Ecg, a),
        SynthCommand::Bvp(a) => waveform(settings, Modality::Bvp, a),
        SynthCommand::Features(a) => feature_set(settings, a),
    }
}

fn waveform(settings: &Settings, modality: Modality, a: WaveArgs) -> Result<(), CliError> {
    let noise = match a.noise.as_str() {
        "clean" => NoiseSpec::clean(),
        "standard" => NoiseSpec::standard(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown noise preset {other:?}; expected clean or standard"
            )))
        }
    };
    let rate = a.rate.unwrap_or(match modality {
        Modality::Ecg => 700.0,
        Modality::Bvp => 64.0,
    });
    let spec = SynthSpec::new(modality, rate, a.duration, a.bpm)
        .with_modulation(a.mod_freq, a.mod_depth)
        .with_noise(noise)
        .with_seed(settings.seed);
    let w = match modality {
        Modality::Ecg => synth_ecg(&spec)?,
        Modality::Bvp => synth_bvp(&spec)?,
    };
    if !a.t0.is_finite() {
        return Err(CliError::Usage(format!("--t0 {} is not finite", a.t0)));
    }
    write_waveform_csv(&a.out, &w.waveform, a.t0)?;
    let ann = a.annotations.unwrap_or_else(|| a.out.with_extension("beats.csv"));
    w.write_annotations(&ann)?;
    println!(
        "{} samples at {rate} Hz, {} beats -> {}, {}",
        w.waveform.len(),
        w.true_beats_s.len(),
        a.out.display(),
        ann.display()
    );
    Ok(())
}

fn feature_set(settings: &Settings, a: FeatureSynthArgs) -> Result<(), CliError> {
    let mut spec = FeatureSetSpec::balanced(a.n_per_class, a.separation, a.participants, settings.seed);
    spec.n_stress = a.n_stress.unwrap_or(a.n_per_class);
    spec.participant_jitter = a.jitter;
    spec.offset = a.offset;
    spec.dataset_id = a.dataset_id;
    let t = synth_feature_sets(&spec)?;
    save_table(&t, &a.out)?;
    println!(
        "{} rows, {} participants -> {}",
        t.len(),
        t.participants().len(),
        a.out.display()
    );
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<(), CliError> {
    let render: fn(&EvaluationReport) -> String = match a.format.as_str() {
        "text" => render_text,
        "csv" => render_csv,
        other => {
            return Err(CliError::Usage(format!(
                "unknown report format {other:?}; expected text or csv"
            )))
        }
    };
    let out = render(&load_report(&a.input)?);
    match a.out {
        Some(path) => write_file(&path, out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}
