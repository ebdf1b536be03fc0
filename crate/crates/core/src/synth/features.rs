use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureTable, TableRow};
use crate::error::{Error, Result};
use crate::hrv::{Label, N_FEATURES};

/// Two Gaussian classes with unit within-class spread in every feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSetSpec {
    pub dataset_id: String,
    pub n_no_stress: usize,
    pub n_stress: usize,
    /// Class mean gap in each feature, in within-class standard deviations.
    pub separation_sigma: f64,
    pub n_participants: usize,
    /// Spread of the per-participant mean offset, in within-class standard deviations.
    pub participant_jitter: f64,
    /// Added to every value; moves a whole dataset for shift experiments.
    pub offset: f64,
    pub seed: u64,
}

impl FeatureSetSpec {
    /// Balanced classes, `n_per_class` rows each, jitter 0.25.
    pub fn balanced(n_per_class: usize, separation_sigma: f64, n_participants: usize, seed: u64) -> Self {
        Self {
            dataset_id: "synthetic".into(),
            n_no_stress: n_per_class,
            n_stress: n_per_class,
            separation_sigma,
            n_participants,
            participant_jitter: 0.25,
            offset: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_no_stress < 1 || self.n_stress < 1 {
            return Err(Error::InvalidSpec("each class needs at least one row".into()));
        }
        if self.n_participants < 1 {
            return Err(Error::InvalidSpec("need at least one participant".into()));
        }
        let reals = [self.separation_sigma, self.participant_jitter, self.offset];
        if reals.iter().any(|v| !v.is_finite()) || self.separation_sigma < 0.0 || self.participant_jitter < 0.0 {
            return Err(Error::InvalidSpec(
                "separation and jitter must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Labeled blobs: no-stress centred at 0, stress at `separation_sigma` in every
/// feature. Rows are shuffled, then dealt to participants round-robin.
pub fn synth_feature_sets(spec: &FeatureSetSpec) -> Result<FeatureTable> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let jitter: Vec<[f64; N_FEATURES]> = (0..spec.n_participants)
        .map(|_| std::array::from_fn(|_| spec.participant_jitter * normal(&mut rng)))
        .collect();
    let mut labels: Vec<Label> = std::iter::repeat_n(Label::NoStress, spec.n_no_stress)
        .chain(std::iter::repeat_n(Label::Stress, spec.n_stress))
        .collect();
    labels.shuffle(&mut rng);

    let mut t = FeatureTable::new();
    for (i, label) in labels.into_iter().enumerate() {
        let p = i % spec.n_participants;
        let centre = if label == Label::Stress {
            spec.separation_sigma
        } else {
            0.0
        };
        let values = (0..N_FEATURES)
            .map(|k| spec.offset + centre + jitter[p][k] + normal(&mut rng))
            .collect();
        t.rows.push(TableRow {
            dataset_id: spec.dataset_id.clone(),
            participant_id: format!("S{p:02}"),
            condition_id: if label == Label::Stress { "stress" } else { "neutral" }.into(),
            start_s: (i / spec.n_participants) as f64,
            label,
            values,
        });
    }
    Ok(t)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}
