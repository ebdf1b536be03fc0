use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Modality, Waveform};
use crate::error::{Error, Result};

const HEADER: &str = "t_seconds,value";

/// Contents of a `t_seconds,value` waveform file.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformCsv {
    pub times_s: Vec<f64>,
    pub values: Vec<f64>,
}

impl WaveformCsv {
    /// Checks the time column against the declared rate and builds a waveform.
    ///
    /// `t` must start anywhere but advance by `1 / rate_hz` per row (within 5% of a step).
    pub fn into_waveform(
        self,
        rate_hz: f64,
        modality: Modality,
        participant_id: &str,
        session_id: &str,
    ) -> Result<Waveform> {
        self.check_step(rate_hz)?;
        Waveform::new(self.values, rate_hz, modality, participant_id, session_id)
    }

    pub fn check_step(&self, rate_hz: f64) -> Result<()> {
        let Some(&t0) = self.times_s.first() else {
            return Ok(());
        };
        let tol = 0.05 / rate_hz;
        for (i, &t) in self.times_s.iter().enumerate() {
            let expected = t0 + i as f64 / rate_hz;
            if (t - expected).abs() > tol {
                return Err(Error::InvalidSpec(format!(
                    "row {} has t = {t} s, expected {expected} s at {rate_hz} Hz",
                    i + 2
                )));
            }
        }
        Ok(())
    }
}

pub fn read_waveform_csv(path: &Path) -> Result<WaveformCsv> {
    let file = File::open(path).map_err(|e| Error::Ingestion {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let fail = |line: usize, reason: String| Error::Ingestion {
        path: path.to_path_buf(),
        reason: format!("line {line}: {reason}"),
    };
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == HEADER => {}
        Some(Ok(h)) => return Err(fail(1, format!("expected header `{HEADER}`, got `{h}`"))),
        Some(Err(e)) => return Err(fail(1, e.to_string())),
        None => return Err(fail(1, "empty file".into())),
    }
    let mut out = WaveformCsv {
        times_s: Vec::new(),
        values: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| fail(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let (t, v) = line
            .split_once(',')
            .ok_or_else(|| fail(lineno, "expected two columns".into()))?;
        let t: f64 = t.trim().parse().map_err(|_| fail(lineno, format!("bad time `{t}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| fail(lineno, format!("bad value `{v}`")))?;
        if !t.is_finite() || !v.is_finite() {
            return Err(fail(lineno, "non-finite sample".into()));
        }
        if let Some(&prev) = out.times_s.last() {
            if t <= prev {
                return Err(fail(lineno, "time column is not increasing".into()));
            }
        }
        out.times_s.push(t);
        out.values.push(v);
    }
    Ok(out)
}

pub fn write_waveform_csv(path: &Path, w: &Waveform, t0_s: f64) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let rate = w.rate_hz();
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{HEADER}")?;
        for (i, v) in w.samples().iter().enumerate() {
            writeln!(out, "{},{}", t0_s + i as f64 / rate, v)?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
