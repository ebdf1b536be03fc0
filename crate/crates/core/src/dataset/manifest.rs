use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scheme::LabelScheme;
use crate::error::{Error, Result};
use crate::signal::Modality;

/// One condition segment of a waveform file. `t_start_s` and `t_end_s` are on
/// the file's own `t_seconds` axis; the segment is `[t_start_s, t_end_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recording {
    pub file_path: PathBuf,
    pub condition_id: String,
    pub t_start_s: f64,
    pub t_end_s: f64,
    /// Overrides the scheme's `keep_last_s` for this segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep_last_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantEntry {
    pub participant_id: String,
    pub neutral_condition_id: String,
    pub recordings: Vec<Recording>,
    /// Set by the user to leave a participant out; reported as excluded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
}

/// A dataset: one JSON document listing every participant's condition segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub modality: Modality,
    pub rate_hz: f64,
    pub participants: Vec<ParticipantEntry>,
    /// Inline labeling; when absent the built-in scheme for `dataset_id` applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_scheme: Option<LabelScheme>,
    /// Directory relative file paths resolve against; the manifest's own
    /// directory when loaded from disk.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn resolve(&self, file: &Path) -> PathBuf {
        if file.is_absolute() {
            file.to_path_buf()
        } else {
            self.base_dir.join(file)
        }
    }

    /// Structural checks. Every problem found is listed in one manifest error.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.dataset_id.trim().is_empty() {
            problems.push("dataset_id: empty".to_string());
        }
        if self.dataset_id.contains('/') {
            problems.push(format!("dataset_id: {:?} contains '/'", self.dataset_id));
        }
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            problems.push(format!("rate_hz: {} is not a positive number", self.rate_hz));
        }
        if self.participants.is_empty() {
            problems.push("participants: empty".to_string());
        }
        let mut seen = BTreeSet::new();
        for (pi, p) in self.participants.iter().enumerate() {
            let at = format!("participants[{pi}]");
            if p.participant_id.trim().is_empty() {
                problems.push(format!("{at}.participant_id: empty"));
            } else if !seen.insert(p.participant_id.as_str()) {
                problems.push(format!("{at}.participant_id: duplicate {:?}", p.participant_id));
            }
            if p.recordings.is_empty() {
                problems.push(format!("{at}.recordings: empty"));
            }
            for (ri, r) in p.recordings.iter().enumerate() {
                let at = format!("{at}.recordings[{ri}]");
                if !(r.t_start_s.is_finite() && r.t_end_s.is_finite() && r.t_end_s > r.t_start_s) {
                    problems.push(format!(
                        "{at}: t_end_s {} must exceed t_start_s {}",
                        r.t_end_s, r.t_start_s
                    ));
                }
                if r.condition_id.trim().is_empty() {
                    problems.push(format!("{at}.condition_id: empty"));
                }
                if let Some(k) = r.keep_last_s {
                    if !(k.is_finite() && k > 0.0) {
                        problems.push(format!("{at}.keep_last_s: {k} is not positive"));
                    }
                }
            }
            let mut spans: Vec<(f64, f64, usize)> = p
                .recordings
                .iter()
                .enumerate()
                .map(|(i, r)| (r.t_start_s, r.t_end_s, i))
                .collect();
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in spans.windows(2) {
                if w[1].0 < w[0].1 {
                    problems.push(format!(
                        "{at}: recordings[{}] and recordings[{}] overlap in time",
                        w[0].2, w[1].2
                    ));
                }
            }
        }
        if let Some(s) = &self.label_scheme {
            if let Err(e) = s.validate() {
                problems.push(format!("label_scheme: {e}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Manifest(problems.join("; ")))
        }
    }

    /// Every referenced file must exist.
    pub fn check_files(&self) -> Result<()> {
        for p in &self.participants {
            for r in &p.recordings {
                let path = self.resolve(&r.file_path);
                if !path.is_file() {
                    return Err(Error::Ingestion {
                        path,
                        reason: format!("signal file for participant {} not found", p.participant_id),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Reads, validates and checks the files of a manifest.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Ingestion {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut m: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    m.validate()?;
    m.check_files()?;
    Ok(m)
}
