use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, ParticipantEntry, Recording};
use super::scheme::LabelScheme;
use super::table::{FeatureTable, TableRow};
use crate::error::{Error, Result};
use crate::hrv::{
    apply_normalization, extract_features, fit_normalization, ibis_from_peaks, segment_windows, FeatureWindow, Label,
    NormalizationParams, HOP_S, NORMALIZATION_BUDGET_S, PLAUSIBLE_MS, WINDOW_S,
};
use crate::peaks::{detect_r_peaks, detect_systolic_peaks};
use crate::signal::{preprocess_bvp, preprocess_ecg, read_waveform_csv, Modality, Waveform, WaveformCsv};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Drop intervals outside the plausible range before windowing.
    pub plausibility_filter: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub participant_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub participants_total: usize,
    pub excluded: Vec<Exclusion>,
    /// Per included participant, in manifest order.
    pub normalization: Vec<NormalizationParams>,
    /// Windows with too few intervals.
    pub windows_dropped: usize,
    pub intervals_filtered: usize,
    pub lf_hf_sentinel_windows: usize,
    pub degenerate_spectrum_windows: usize,
    pub warnings: Vec<String>,
}

#[derive(Default)]
struct Tally {
    windows_dropped: usize,
    intervals_filtered: usize,
    warnings: Vec<String>,
}

struct Processed {
    windows: Vec<FeatureWindow>,
    params: NormalizationParams,
    tally: Tally,
}

/// Runs every participant through filtering, beat detection, windowing,
/// feature extraction and neutral-based normalization.
///
/// Each condition segment is processed on its own, so no window spans two
/// conditions. Participants whose calibration fails or who lack data are
/// excluded and listed in the report; other errors abort the build.
pub fn build_feature_table(
    m: &DatasetManifest,
    scheme: &LabelScheme,
    opts: BuildOptions,
) -> Result<(FeatureTable, BuildReport)> {
    m.validate()?;
    scheme.validate()?;
    let results: Vec<Result<Processed>> = m
        .participants
        .par_iter()
        .map(|p| match &p.excluded {
            Some(reason) => Err(Error::InsufficientData(format!("excluded by manifest: {reason}"))),
            None => process_participant(m, p, scheme, opts),
        })
        .collect();

    let mut table = FeatureTable::new();
    let mut report = BuildReport {
        participants_total: m.participants.len(),
        ..Default::default()
    };
    for (p, res) in m.participants.iter().zip(results) {
        match res {
            Ok(done) => {
                report.windows_dropped += done.tally.windows_dropped;
                report.intervals_filtered += done.tally.intervals_filtered;
                report.warnings.extend(done.tally.warnings);
                for w in &done.windows {
                    report.lf_hf_sentinel_windows += w.flags.lf_hf_sentinel as usize;
                    report.degenerate_spectrum_windows += w.flags.spectrum_degenerate as usize;
                }
                table.rows.extend(done.windows.iter().map(TableRow::from_window));
                report.normalization.push(done.params);
            }
            Err(e @ (Error::Calibration(_) | Error::InsufficientData(_))) => report.excluded.push(Exclusion {
                participant_id: p.participant_id.clone(),
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if table.is_empty() {
        return Err(Error::EmptyTable(format!(
            "dataset {}: no labeled windows ({} of {} participants excluded)",
            m.dataset_id,
            report.excluded.len(),
            report.participants_total
        )));
    }
    Ok((table, report))
}

fn process_participant(
    m: &DatasetManifest,
    p: &ParticipantEntry,
    scheme: &LabelScheme,
    opts: BuildOptions,
) -> Result<Processed> {
    let mut files: HashMap<PathBuf, Arc<WaveformCsv>> = HashMap::new();
    let mut windows = Vec::new();
    let mut tally = Tally::default();
    for r in &p.recordings {
        let neutral = r.condition_id == p.neutral_condition_id;
        let rule = scheme.rule(&r.condition_id);
        if rule.label.label().is_none() && !neutral {
            continue;
        }
        let path = m.resolve(&r.file_path);
        let csv = match files.get(&path) {
            Some(c) => Arc::clone(c),
            None => {
                let c = Arc::new(read_waveform_csv(&path)?);
                c.check_step(m.rate_hz).map_err(|e| Error::Ingestion {
                    path: path.clone(),
                    reason: e.to_string(),
                })?;
                files.insert(path.clone(), Arc::clone(&c));
                c
            }
        };
        let keep = r.keep_last_s.or(rule.keep_last_s);
        let ctx = format!("participant {} condition {}", p.participant_id, r.condition_id);
        match segment_windows_for(m, p, r, &csv, keep, opts, &mut tally) {
            Ok(ws) => windows.extend(ws),
            Err(Error::InsufficientData(msg)) => tally.warnings.push(format!("{ctx}: {msg}")),
            Err(e) => return Err(e),
        }
    }

    let neutral: Vec<FeatureWindow> = windows
        .iter()
        .filter(|w| w.condition_id == p.neutral_condition_id)
        .cloned()
        .collect();
    if neutral.is_empty() {
        return Err(Error::Calibration(format!(
            "participant {} has no usable windows in neutral condition {:?}",
            p.participant_id, p.neutral_condition_id
        )));
    }
    let params = fit_normalization(&neutral, NORMALIZATION_BUDGET_S)?;
    let windows = windows
        .into_iter()
        .filter_map(|mut w| {
            w.label = scheme.rule(&w.condition_id).label.label()?;
            w.features = apply_normalization(&params, &w.features);
            Some(w)
        })
        .collect();
    Ok(Processed { windows, params, tally })
}

/// Feature windows of one condition segment, unnormalized and unlabeled.
fn segment_windows_for(
    m: &DatasetManifest,
    p: &ParticipantEntry,
    r: &Recording,
    csv: &WaveformCsv,
    keep_last_s: Option<f64>,
    opts: BuildOptions,
    out: &mut Tally,
) -> Result<Vec<FeatureWindow>> {
    let from = match keep_last_s {
        Some(k) => r.t_start_s.max(r.t_end_s - k),
        None => r.t_start_s,
    };
    let lo = csv.times_s.partition_point(|&t| t < from);
    let hi = csv.times_s.partition_point(|&t| t < r.t_end_s);
    if hi - lo < 2 {
        return Err(Error::InsufficientData(format!(
            "{} samples in [{from}, {})",
            hi - lo,
            r.t_end_s
        )));
    }
    let t0 = csv.times_s[lo];
    let w = Waveform::new(
        csv.values[lo..hi].to_vec(),
        m.rate_hz,
        m.modality,
        &p.participant_id,
        &r.condition_id,
    )?;
    let peaks = match m.modality {
        Modality::Ecg => detect_r_peaks(&preprocess_ecg(&w)?)?,
        Modality::Bvp => detect_systolic_peaks(&preprocess_bvp(&w)?)?,
    };
    let mut ibi = ibis_from_peaks(&peaks)?;
    if opts.plausibility_filter {
        let (kept, removed) = ibi.retain_plausible(PLAUSIBLE_MS.0, PLAUSIBLE_MS.1);
        out.intervals_filtered += removed;
        ibi = kept;
    }
    let seg = segment_windows(&ibi, WINDOW_S, HOP_S)?;
    out.windows_dropped += seg.dropped;
    if let Some(warning) = seg.warning {
        out.warnings.push(format!(
            "participant {} condition {}: {warning}",
            p.participant_id, r.condition_id
        ));
    }
    seg.windows
        .iter()
        .map(|iw| {
            let (features, flags) = extract_features(&iw.ibi)?;
            Ok(FeatureWindow {
                start_s: t0 + iw.start_s,
                end_s: t0 + iw.end_s,
                features,
                label: Label::Unlabeled,
                participant_id: p.participant_id.clone(),
                dataset_id: m.dataset_id.clone(),
                condition_id: r.condition_id.clone(),
                flags,
            })
        })
        .collect()
}
