//! Random forest, linear SVM and MLP classifiers behind one train/predict contract.

pub mod forest;
mod io;
pub mod mlp;
pub mod svm;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureTable;
use crate::error::{Error, Result};
use crate::hrv::{FeatureVector, Label, FEATURE_NAMES, N_FEATURES};

pub use forest::{Forest, RfcParams};
pub use io::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use mlp::{Mlp, MlpParams};
pub use svm::{LinearSvm, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "RFC")]
    Rfc,
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "MLP")]
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Rfc, ModelKind::Svm, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rfc => "RFC",
            ModelKind::Svm => "SVM",
            ModelKind::Mlp => "MLP",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RFC" | "RF" => Ok(ModelKind::Rfc),
            "SVM" => Ok(ModelKind::Svm),
            "MLP" => Ok(ModelKind::Mlp),
            _ => Err(Error::InvalidSpec(format!(
                "unknown model kind {s:?}; expected RFC, SVM or MLP"
            ))),
        }
    }
}

/// Loss weight per class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub no_stress: f64,
    pub stress: f64,
}

impl ClassWeights {
    pub const UNIFORM: ClassWeights = ClassWeights {
        no_stress: 1.0,
        stress: 1.0,
    };

    pub fn of(&self, target: u8) -> f64 {
        if target == 1 {
            self.stress
        } else {
            self.no_stress
        }
    }

    pub fn per_sample(&self, y: &[u8]) -> Vec<f64> {
        y.iter().map(|&t| self.of(t)).collect()
    }
}

/// Balanced weights `N / (2 n_c)`.
pub fn compute_class_weights(y: &[u8]) -> Result<ClassWeights> {
    let pos = y.iter().filter(|&&t| t == 1).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels(format!(
            "{neg} no-stress and {pos} stress samples"
        )));
    }
    let n = y.len() as f64;
    Ok(ClassWeights {
        no_stress: n / (2.0 * neg as f64),
        stress: n / (2.0 * pos as f64),
    })
}

pub(crate) fn require_both_classes(y: &[u8]) -> Result<()> {
    compute_class_weights(y).map(|_| ())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub rfc: RfcParams,
    pub svm: SvmParams,
    pub mlp: MlpParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub dataset_ids: Vec<String>,
    pub fold_id: Option<String>,
    pub class_weights: ClassWeights,
    pub n_train: usize,
    /// Solver and early-stopping facts worth keeping with the model.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters")]
pub enum ModelParams {
    #[serde(rename = "RFC")]
    Rfc(Forest),
    #[serde(rename = "SVM")]
    Svm(LinearSvm),
    #[serde(rename = "MLP")]
    Mlp(Mlp),
}

/// A fitted classifier. Immutable once trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub hyperparams: Hyperparams,
    pub feature_names: Vec<String>,
    pub training_meta: TrainingMeta,
    #[serde(flatten)]
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Stress score in [0, 1]; `label` is stress when it is at least 0.5.
    pub score: f64,
}

impl Prediction {
    fn from_score(score: f64) -> Self {
        let label = if score >= 0.5 { Label::Stress } else { Label::NoStress };
        Self { label, score }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub hyperparams: Hyperparams,
    /// Weight classes by inverse frequency; uniform weights otherwise.
    pub class_weighting: bool,
    pub seed: u64,
    pub fold_id: Option<String>,
}

impl TrainOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            hyperparams: Hyperparams::default(),
            class_weighting: true,
            seed,
            fold_id: None,
        }
    }
}

impl TrainedModel {
    /// Fits `kind` on the labeled rows of `table`.
    pub fn train(kind: ModelKind, table: &FeatureTable, opts: &TrainOptions) -> Result<Self> {
        check_roster_length(&table.feature_names)?;
        let (x, y) = table.xy();
        let weights = if opts.class_weighting {
            compute_class_weights(&y)?
        } else {
            require_both_classes(&y)?;
            ClassWeights::UNIFORM
        };
        let sw = weights.per_sample(&y);
        let hp = &opts.hyperparams;
        let mut notes = Vec::new();
        let params = match kind {
            ModelKind::Rfc => ModelParams::Rfc(forest::train_rfc(&x, &y, &sw, &hp.rfc, opts.seed)?),
            ModelKind::Svm => {
                let (m, fit) = svm::train_svm(&x, &y, &sw, &hp.svm)?;
                notes.push(format!(
                    "smo iterations {}, relative duality gap {:.3e}",
                    fit.iterations, fit.relative_gap
                ));
                ModelParams::Svm(m)
            }
            ModelKind::Mlp => {
                let (m, fit) = mlp::train_mlp(&x, &y, &sw, &hp.mlp, opts.seed)?;
                notes.push(format!(
                    "validation split {} rows (stratified), epochs run {}, best epoch {}, best validation loss {:.6}",
                    fit.n_validation, fit.epochs_run, fit.best_epoch, fit.best_validation_loss
                ));
                ModelParams::Mlp(m)
            }
        };
        let mut dataset_ids: Vec<String> = table.rows.iter().map(|r| r.dataset_id.clone()).collect();
        dataset_ids.sort();
        dataset_ids.dedup();
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            hyperparams: hp.clone(),
            feature_names: table.feature_names.clone(),
            training_meta: TrainingMeta {
                seed: opts.seed,
                dataset_ids,
                fold_id: opts.fold_id.clone(),
                class_weights: weights,
                n_train: y.len(),
                notes,
            },
            params,
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::Rfc(_) => ModelKind::Rfc,
            ModelParams::Svm(_) => ModelKind::Svm,
            ModelParams::Mlp(_) => ModelKind::Mlp,
        }
    }

    /// Fails unless `names` is exactly this model's roster, in order.
    pub fn check_schema(&self, names: &[String]) -> Result<()> {
        if names == self.feature_names.as_slice() {
            return Ok(());
        }
        let first = names
            .iter()
            .zip(&self.feature_names)
            .position(|(a, b)| a != b)
            .unwrap_or(names.len().min(self.feature_names.len()));
        Err(Error::Schema(format!(
            "feature roster differs from the model's at position {first}: got {:?}, model expects {:?}",
            names.get(first),
            self.feature_names.get(first)
        )))
    }

    /// Scores a vector in the canonical feature order.
    pub fn predict(&self, v: &FeatureVector) -> Result<Prediction> {
        if !self
            .feature_names
            .iter()
            .map(String::as_str)
            .eq(FEATURE_NAMES.iter().copied())
        {
            return Err(Error::Schema(
                "model was trained on a non-canonical feature order".into(),
            ));
        }
        Ok(self.predict_raw(&v.0))
    }

    /// Scores every row of `table`; the rosters must match.
    pub fn predict_table(&self, table: &FeatureTable) -> Result<Vec<Prediction>> {
        self.check_schema(&table.feature_names)?;
        Ok(table.rows.iter().map(|r| self.predict_raw(&r.values)).collect())
    }

    /// Scores a vector laid out as `feature_names`.
    pub fn predict_raw(&self, x: &[f64]) -> Prediction {
        let score = match &self.params {
            ModelParams::Rfc(f) => f.score(x),
            ModelParams::Svm(s) => s.score(x),
            ModelParams::Mlp(m) => m.score(x),
        };
        Prediction::from_score(score)
    }
}

fn check_roster_length(names: &[String]) -> Result<()> {
    if names.len() != N_FEATURES {
        return Err(Error::Schema(format!(
            "expected {N_FEATURES} features, table has {}",
            names.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_class_weights() {
        let mut y = vec![0u8; 100];
        y.extend([1u8; 50]);
        let w = compute_class_weights(&y).unwrap();
        assert_eq!((w.no_stress, w.stress), (0.75, 1.5));
        let w = compute_class_weights(&[0, 1, 0, 1]).unwrap();
        assert_eq!((w.no_stress, w.stress), (1.0, 1.0));
        assert!(matches!(
            compute_class_weights(&[1, 1, 1]),
            Err(Error::DegenerateLabels(_))
        ));
        assert!(compute_class_weights(&[]).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("knn".parse::<ModelKind>().is_err());
    }
}
