//! Uniformly sampled physiological signals and their band-pass preprocessing.

mod filter;
mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use filter::{
    apply_zero_phase, design_bandpass, preprocess_bvp, preprocess_ecg, BandpassSpec, Biquad, FilterCoefficients,
    BVP_BAND, ECG_BAND,
};
pub use io::{read_waveform_csv, write_waveform_csv, WaveformCsv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "ECG")]
    Ecg,
    #[serde(rename = "BVP")]
    Bvp,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Ecg => "ECG",
            Modality::Bvp => "BVP",
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ECG" => Ok(Modality::Ecg),
            "BVP" | "PPG" => Ok(Modality::Bvp),
            other => Err(Error::InvalidSpec(format!("unknown modality `{other}`"))),
        }
    }
}

/// A uniformly sampled ECG or BVP recording.
///
/// Samples are always finite, there are at least two of them, and the rate is
/// strictly positive. Construction is the only place these are checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    rate_hz: f64,
    modality: Modality,
    participant_id: String,
    session_id: String,
}

impl Waveform {
    pub fn new(
        samples: Vec<f64>,
        rate_hz: f64,
        modality: Modality,
        participant_id: impl Into<String>,
        session_id: impl Into<String>,
    ) -> Result<Self> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "sampling rate must be finite and > 0, got {rate_hz}"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "waveform needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            rate_hz,
            modality,
            participant_id: participant_id.into(),
            session_id: session_id.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn participant_id(&self) -> &str {
        &self.participant_id
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz
    }

    /// Same metadata, new samples (of any valid length).
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(
            samples,
            self.rate_hz,
            self.modality,
            self.participant_id.clone(),
            self.session_id.clone(),
        )
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}
