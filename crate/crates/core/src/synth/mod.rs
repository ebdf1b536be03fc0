//! Synthetic ground truth: annotated ECG/BVP waveforms and labeled feature sets.

mod features;
mod score;
mod waveform;

pub use features::{synth_feature_sets, FeatureSetSpec};
pub use score::{score_detections, DetectionScore};
pub use waveform::{beat_schedule, synth_bvp, synth_ecg, AnnotatedWaveform, HrvModulation, NoiseSpec, SynthSpec};
