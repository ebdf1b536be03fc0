use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::metrics::Summary;
use super::protocol::{EvaluationReport, REPORT_VERSION};
use crate::dataset::format_sig9;
use crate::error::{Error, Result};

fn row(out: &mut String, name: &str, windows: &str, f1_pos: f64, f1_macro: f64, acc: f64) {
    let _ = writeln!(out, "{name:<24} {windows:>8} {f1_pos:>8.3} {f1_macro:>8.3} {acc:>8.3}");
}

fn summary_rows(out: &mut String, label: &str, s: &Summary) {
    row(
        out,
        &format!("{label} mean"),
        &s.n.to_string(),
        s.mean.f1_pos,
        s.mean.f1_macro,
        s.mean.accuracy,
    );
    row(
        out,
        &format!("{label} std"),
        "",
        s.std.f1_pos,
        s.std.f1_macro,
        s.std.accuracy,
    );
}

/// Fixed-width text table: summary first, then one row per fold.
pub fn render_text(r: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "protocol: {}", r.protocol.as_str());
    let _ = writeln!(out, "model: {}", r.model_kind);
    let _ = writeln!(out, "source datasets: {}", r.source_datasets.join(", "));
    if let Some(t) = &r.target_dataset {
        let _ = writeln!(out, "target dataset: {t}");
    }
    let _ = writeln!(out, "master seed: {}", r.config.master_seed);
    let _ = writeln!(
        out,
        "class weighting: {}",
        if r.config.class_weighting { "balanced" } else { "none" }
    );
    out.push('\n');
    let header = format!(
        "{:<24} {:>8} {:>8} {:>8} {:>8}",
        "", "n", "f1_pos", "f1_macro", "accuracy"
    );
    let _ = writeln!(out, "{header}");
    summary_rows(&mut out, "all", &r.summary);
    for (source, s) in &r.per_source {
        summary_rows(&mut out, source, s);
    }
    if let Some(p) = &r.pooled {
        row(
            &mut out,
            "pooled",
            &p.confusion.total().to_string(),
            p.metrics.f1_pos,
            p.metrics.f1_macro,
            p.metrics.accuracy,
        );
    }
    out.push('\n');
    let fold_word = if r.protocol == super::Protocol::Cross {
        "model"
    } else {
        "held out"
    };
    let _ = writeln!(
        out,
        "{:<24} {:>8} {:>8} {:>8} {:>8}",
        fold_word, "windows", "f1_pos", "f1_macro", "accuracy"
    );
    for f in &r.folds {
        row(
            &mut out,
            &f.fold_id,
            &f.confusion.total().to_string(),
            f.metrics.f1_pos,
            f.metrics.f1_macro,
            f.metrics.accuracy,
        );
    }
    for (i, s) in r.skipped.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<24} {:>8} {:>8} {:>8} {:>8}",
            format!("{}[{}]", s.fold_id, i + 1),
            "-",
            "-",
            "-",
            "-"
        );
    }
    if !r.skipped.is_empty() {
        out.push('\n');
        for (i, s) in r.skipped.iter().enumerate() {
            let _ = writeln!(out, "[{}] fold {} skipped: {}", i + 1, s.fold_id, s.reason);
        }
    }
    out
}

/// One line per fold plus `mean` and `std` lines.
pub fn render_csv(r: &EvaluationReport) -> String {
    let mut out = String::from("fold_id,tp,fp,fn,tn,f1_pos,f1_macro,accuracy\n");
    let q = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    for f in &r.folds {
        let c = f.confusion;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            q(&f.fold_id),
            c.tp,
            c.fp,
            c.fn_,
            c.tn,
            format_sig9(f.metrics.f1_pos),
            format_sig9(f.metrics.f1_macro),
            format_sig9(f.metrics.accuracy)
        );
    }
    for (name, m) in [("mean", r.summary.mean), ("std", r.summary.std)] {
        let _ = writeln!(
            out,
            "{name},,,,,{},{},{}",
            format_sig9(m.f1_pos),
            format_sig9(m.f1_macro),
            format_sig9(m.accuracy)
        );
    }
    out
}

/// Writes `<stem>.json` and `<stem>.txt` into `dir`, returning both paths.
pub fn write_report(r: &EvaluationReport, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join(format!("{stem}.json"));
    let text_path = dir.join(format!("{stem}.txt"));
    let json = serde_json::to_string_pretty(r).map_err(|e| Error::ModelFormat(e.to_string()))? + "\n";
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    std::fs::write(&text_path, render_text(r)).map_err(|e| Error::io(&text_path, e))?;
    Ok((json_path, text_path))
}

pub fn load_report(path: &Path) -> Result<EvaluationReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let r: EvaluationReport = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidSpec(format!("{}: not a report: {e}", path.display())))?;
    if r.report_version != REPORT_VERSION {
        return Err(Error::InvalidSpec(format!(
            "{}: report version {}, this build reads {REPORT_VERSION}",
            path.display(),
            r.report_version
        )));
    }
    Ok(r)
}
