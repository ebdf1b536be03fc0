use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hrv::{FeatureWindow, Label, FEATURE_NAMES};

/// Leading identification columns of a table file, before the features.
pub const ID_COLUMNS: [&str; 5] = ["dataset_id", "participant_id", "condition_id", "start_s", "label"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub dataset_id: String,
    pub participant_id: String,
    pub condition_id: String,
    pub start_s: f64,
    pub label: Label,
    /// One value per entry of the table's `feature_names`.
    pub values: Vec<f64>,
}

impl TableRow {
    pub fn from_window(w: &FeatureWindow) -> Self {
        Self {
            dataset_id: w.dataset_id.clone(),
            participant_id: w.participant_id.clone(),
            condition_id: w.condition_id.clone(),
            start_s: w.start_s,
            label: w.label,
            values: w.features.0.to_vec(),
        }
    }
}

/// Rows of labeled feature vectors sharing one feature roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl Default for FeatureTable {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureTable {
    /// Empty table with the canonical roster.
    pub fn new() -> Self {
        Self {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Whether the roster is the 22 canonical names in canonical order.
    pub fn has_canonical_roster(&self) -> bool {
        self.feature_names
            .iter()
            .map(String::as_str)
            .eq(FEATURE_NAMES.iter().copied())
    }

    /// Sorted distinct participant ids.
    pub fn participants(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.rows.iter().map(|r| r.participant_id.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Rows for which `keep` holds, same roster.
    pub fn filter(&self, keep: impl Fn(&TableRow) -> bool) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Feature matrix and 0/1 targets of the labeled rows.
    pub fn xy(&self) -> (Vec<Vec<f64>>, Vec<u8>) {
        self.rows
            .iter()
            .filter_map(|r| r.label.target().map(|t| (r.values.clone(), t)))
            .unzip()
    }

    /// Count of labeled rows per class, `[no_stress, stress]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0, 0];
        for r in &self.rows {
            if let Some(t) = r.label.target() {
                c[t as usize] += 1;
            }
        }
        c
    }
}

/// `%.9g`: nine significant digits, trailing zeros dropped, exponent form
/// outside `1e-4 <= |v| < 1e9`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

pub fn save_table(t: &FeatureTable, path: &Path) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let header: Vec<&str> = ID_COLUMNS
        .iter()
        .copied()
        .chain(t.feature_names.iter().map(String::as_str))
        .collect();
    w.write_record(&header).map_err(io)?;
    for r in &t.rows {
        let mut rec = vec![
            r.dataset_id.clone(),
            r.participant_id.clone(),
            r.condition_id.clone(),
            format_sig9(r.start_s),
            r.label.as_str().to_string(),
        ];
        rec.extend(r.values.iter().map(|v| format_sig9(*v)));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a table file. The header must hold the id columns followed by each
/// of the 22 feature names exactly once; their order is kept as found.
pub fn load_table(path: &Path) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(e) => Error::io(path, e),
            other => Error::TableFormat {
                line: 0,
                reason: format!("{other:?}"),
            },
        })?;
    let fail = |line: usize, reason: String| Error::TableFormat { line, reason };
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(fail(1, "missing header".into())),
        Some(r) => r.map_err(|e| fail(1, e.to_string()))?,
    };
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < ID_COLUMNS.len() || cols[..ID_COLUMNS.len()] != ID_COLUMNS {
        return Err(fail(1, format!("header must start with {}", ID_COLUMNS.join(","))));
    }
    let feature_names: Vec<String> = cols[ID_COLUMNS.len()..].iter().map(|s| s.to_string()).collect();
    for name in FEATURE_NAMES {
        match feature_names.iter().filter(|n| *n == name).count() {
            0 => return Err(fail(1, format!("missing feature column {name}"))),
            1 => {}
            _ => return Err(fail(1, format!("duplicate feature column {name}"))),
        }
    }
    if let Some(extra) = feature_names.iter().find(|n| !FEATURE_NAMES.contains(&n.as_str())) {
        return Err(fail(1, format!("unknown column {extra}")));
    }

    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| fail(line, e.to_string()))?;
        if rec.len() != cols.len() {
            return Err(fail(line, format!("{} fields, header has {}", rec.len(), cols.len())));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| fail(line, format!("column {}: {:?} is not a number", cols[k], &rec[k])))
        };
        let label = rec[4]
            .parse::<Label>()
            .map_err(|_| fail(line, format!("unknown label {:?}", &rec[4])))?;
        rows.push(TableRow {
            dataset_id: rec[0].to_string(),
            participant_id: rec[1].to_string(),
            condition_id: rec[2].to_string(),
            start_s: num(3)?,
            label,
            values: (ID_COLUMNS.len()..cols.len()).map(num).collect::<Result<_>>()?,
        });
    }
    Ok(FeatureTable { feature_names, rows })
}
