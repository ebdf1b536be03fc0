//! Dataset manifests, labeling schemes, table building and table files.

mod build;
mod manifest;
mod scheme;
mod table;

pub use build::{build_feature_table, BuildOptions, BuildReport, Exclusion};
pub use manifest::{load_manifest, DatasetManifest, ParticipantEntry, Recording};
pub use scheme::{built_in_schemes, scheme_for, ConditionLabel, ConditionRule, LabelScheme, POST_INTERVIEW_KEEP_S};
pub use table::{format_sig9, load_table, save_table, FeatureTable, TableRow, ID_COLUMNS};
