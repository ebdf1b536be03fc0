use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, Confusion, Metrics, Summary};
use crate::dataset::FeatureTable;
use crate::error::{Error, Result};
use crate::models::{Hyperparams, ModelKind, TrainOptions, TrainedModel};
use crate::seed::derive_seed;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Within,
    Cross,
    Combined,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Within => "within",
            Protocol::Cross => "cross",
            Protocol::Combined => "combined",
        }
    }
}

/// Settings shared by every fold of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub master_seed: u64,
    pub hyperparams: Hyperparams,
    pub class_weighting: bool,
}

impl EvalConfig {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            hyperparams: Hyperparams::default(),
            class_weighting: true,
        }
    }
}

/// Settings echoed into a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub master_seed: u64,
    pub class_weighting: bool,
    pub hyperparams: Hyperparams,
    pub feature_names: Vec<String>,
    /// Caller-supplied run configuration, stored as given.
    #[serde(default)]
    pub run: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    /// Held-out participant (LOSO) or source model (cross-dataset).
    pub fold_id: String,
    pub confusion: Confusion,
    #[serde(flatten)]
    pub metrics: Metrics,
    /// Where the fold's model is written, relative to the report directory.
    pub model_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFold {
    pub fold_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub report_version: u32,
    pub protocol: Protocol,
    pub model_kind: ModelKind,
    pub source_datasets: Vec<String>,
    pub target_dataset: Option<String>,
    pub folds: Vec<FoldResult>,
    pub skipped: Vec<SkippedFold>,
    /// Unweighted over folds (within, combined) or source models (cross).
    pub summary: Summary,
    /// Combined protocol: summary per source dataset of the held-out participant.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_source: BTreeMap<String, Summary>,
    /// Cross protocol: all models' predictions pooled into one confusion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooled: Option<PooledResult>,
    /// Cross protocol: confusion per target participant, summed over models.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_target_participant: BTreeMap<String, Confusion>,
    pub config: ConfigEcho,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledResult {
    pub confusion: Confusion,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// A LOSO fold's model, kept for cross-dataset testing.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldModel {
    pub fold_id: String,
    pub model_ref: String,
    pub model: TrainedModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LosoOutput {
    pub report: EvaluationReport,
    pub models: Vec<FoldModel>,
}

/// File-system-safe relative path for a fold model.
pub fn model_ref(kind: ModelKind, fold_id: &str) -> String {
    let safe: String = fold_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("models/{}/{safe}.json", kind.as_str())
}

fn datasets_of(t: &FeatureTable) -> Vec<String> {
    let set: BTreeSet<&str> = t.rows.iter().map(|r| r.dataset_id.as_str()).collect();
    set.into_iter().map(str::to_string).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum FoldOutcome {
    Done(FoldResult, Box<FoldModel>),
    Skipped(SkippedFold),
}

/// One LOSO fold: train on everyone but `held_out`, test on `held_out`.
pub fn loso_fold(table: &FeatureTable, held_out: &str, kind: ModelKind, cfg: &EvalConfig) -> Result<FoldOutcome> {
    let train = table.filter(|r| r.participant_id != held_out);
    let test = table.filter(|r| r.participant_id == held_out);
    assert!(
        train.rows.iter().all(|r| r.participant_id != held_out),
        "held-out participant leaked into training"
    );
    let skip = |reason: String| {
        Ok(FoldOutcome::Skipped(SkippedFold {
            fold_id: held_out.to_string(),
            reason,
        }))
    };
    let [neg, pos] = train.class_counts();
    if neg == 0 || pos == 0 {
        return skip(format!("training data has {neg} no-stress and {pos} stress windows"));
    }
    if test.class_counts() == [0, 0] {
        return skip("held-out participant has no labeled windows".into());
    }
    let opts = TrainOptions {
        hyperparams: cfg.hyperparams.clone(),
        class_weighting: cfg.class_weighting,
        seed: derive_seed(cfg.master_seed, held_out),
        fold_id: Some(held_out.to_string()),
    };
    let model = match TrainedModel::train(kind, &train, &opts) {
        Ok(m) => m,
        Err(e @ (Error::DegenerateLabels(_) | Error::InsufficientData(_))) => return skip(e.to_string()),
        Err(e) => return Err(e),
    };
    let preds = model.predict_table(&test)?;
    let confusion = Confusion::from_labels(test.rows.iter().zip(&preds).map(|(r, p)| (r.label, p.label)));
    let mref = model_ref(kind, held_out);
    Ok(FoldOutcome::Done(
        FoldResult {
            fold_id: held_out.to_string(),
            confusion,
            metrics: metrics(&confusion)?,
            model_ref: Some(mref.clone()),
        },
        Box::new(FoldModel {
            fold_id: held_out.to_string(),
            model_ref: mref,
            model,
        }),
    ))
}

fn echo(cfg: &EvalConfig, names: &[String]) -> ConfigEcho {
    ConfigEcho {
        master_seed: cfg.master_seed,
        class_weighting: cfg.class_weighting,
        hyperparams: cfg.hyperparams.clone(),
        feature_names: names.to_vec(),
        run: serde_json::Value::Null,
    }
}

/// Leave-one-subject-out: one fold per participant, run in parallel, each
/// seeded from the master seed and the participant id.
pub fn loso(table: &FeatureTable, kind: ModelKind, cfg: &EvalConfig) -> Result<LosoOutput> {
    let participants = table.participants();
    if participants.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "LOSO needs at least 2 participants, table has {}",
            participants.len()
        )));
    }
    let outcomes: Vec<Result<FoldOutcome>> = participants
        .par_iter()
        .map(|p| loso_fold(table, p, kind, cfg))
        .collect();
    let mut folds = Vec::new();
    let mut models = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o? {
            FoldOutcome::Done(f, m) => {
                folds.push(f);
                models.push(*m);
            }
            FoldOutcome::Skipped(s) => skipped.push(s),
        }
    }
    let summary = Summary::of(&folds.iter().map(|f| f.metrics).collect::<Vec<_>>());
    let datasets = datasets_of(table);
    Ok(LosoOutput {
        report: EvaluationReport {
            report_version: REPORT_VERSION,
            protocol: Protocol::Within,
            model_kind: kind,
            target_dataset: (datasets.len() == 1).then(|| datasets[0].clone()),
            source_datasets: datasets,
            folds,
            skipped,
            summary,
            per_source: BTreeMap::new(),
            pooled: None,
            per_target_participant: BTreeMap::new(),
            config: echo(cfg, &table.feature_names),
        },
        models,
    })
}

/// Every source model scores the whole target table; the summary averages
/// over models.
pub fn cross_dataset(models: &[FoldModel], target: &FeatureTable, cfg: &EvalConfig) -> Result<EvaluationReport> {
    let Some(first) = models.first() else {
        return Err(Error::InvalidSpec(
            "cross-dataset evaluation needs at least one model".into(),
        ));
    };
    let kind = first.model.kind();
    for m in models {
        if m.model.kind() != kind {
            return Err(Error::InvalidSpec(format!(
                "models mix kinds {kind} and {}",
                m.model.kind()
            )));
        }
        m.model.check_schema(&target.feature_names)?;
    }
    let labeled = target.filter(|r| r.label.target().is_some());
    if labeled.is_empty() {
        return Err(Error::EmptyTable("target table has no labeled windows".into()));
    }
    let scored: Vec<(FoldResult, BTreeMap<String, Confusion>)> = models
        .par_iter()
        .map(|m| {
            let preds = m.model.predict_table(&labeled)?;
            let mut per_participant: BTreeMap<String, Confusion> = BTreeMap::new();
            for (r, p) in labeled.rows.iter().zip(&preds) {
                per_participant
                    .entry(r.participant_id.clone())
                    .or_default()
                    .add(&Confusion::from_labels([(r.label, p.label)]));
            }
            let confusion = Confusion::from_labels(labeled.rows.iter().zip(&preds).map(|(r, p)| (r.label, p.label)));
            Ok((
                FoldResult {
                    fold_id: m.fold_id.clone(),
                    confusion,
                    metrics: metrics(&confusion)?,
                    model_ref: Some(m.model_ref.clone()),
                },
                per_participant,
            ))
        })
        .collect::<Result<_>>()?;

    let mut pooled = Confusion::default();
    let mut per_target_participant: BTreeMap<String, Confusion> = BTreeMap::new();
    let mut folds = Vec::with_capacity(scored.len());
    for (f, pp) in scored {
        pooled.add(&f.confusion);
        for (pid, c) in pp {
            per_target_participant.entry(pid).or_default().add(&c);
        }
        folds.push(f);
    }
    let mut sources: Vec<String> = models
        .iter()
        .flat_map(|m| m.model.training_meta.dataset_ids.clone())
        .collect();
    sources.sort();
    sources.dedup();
    let targets = datasets_of(&labeled);
    Ok(EvaluationReport {
        report_version: REPORT_VERSION,
        protocol: Protocol::Cross,
        model_kind: kind,
        source_datasets: sources,
        target_dataset: Some(targets.join("+")),
        summary: Summary::of(&folds.iter().map(|f| f.metrics).collect::<Vec<_>>()),
        folds,
        skipped: Vec::new(),
        per_source: BTreeMap::new(),
        pooled: Some(PooledResult {
            confusion: pooled,
            metrics: metrics(&pooled)?,
        }),
        per_target_participant,
        config: echo(cfg, &target.feature_names),
    })
}

/// Union of the tables with participant ids prefixed `dataset_id/`.
pub fn combine_tables(tables: &[FeatureTable]) -> Result<FeatureTable> {
    let Some(first) = tables.first() else {
        return Err(Error::InvalidSpec("no tables to combine".into()));
    };
    let mut out = FeatureTable {
        feature_names: first.feature_names.clone(),
        rows: Vec::new(),
    };
    let mut owner: BTreeMap<String, usize> = BTreeMap::new();
    for (ti, t) in tables.iter().enumerate() {
        if t.feature_names != first.feature_names {
            return Err(Error::Schema(format!(
                "table {ti} has a different feature roster from table 0"
            )));
        }
        for r in &t.rows {
            let id = format!("{}/{}", r.dataset_id, r.participant_id);
            if let Some(&prev) = owner.get(&id) {
                if prev != ti {
                    return Err(Error::Manifest(format!(
                        "participant {id} appears in tables {prev} and {ti}"
                    )));
                }
            } else {
                owner.insert(id.clone(), ti);
            }
            let mut row = r.clone();
            row.participant_id = id;
            out.rows.push(row);
        }
    }
    Ok(out)
}

/// LOSO over the union of several datasets, with a per-source breakdown.
pub fn combine_and_loso(tables: &[FeatureTable], kind: ModelKind, cfg: &EvalConfig) -> Result<LosoOutput> {
    let union = combine_tables(tables)?;
    let mut out = loso(&union, kind, cfg)?;
    let mut by_source: BTreeMap<String, Vec<Metrics>> = BTreeMap::new();
    for f in &out.report.folds {
        let source = f.fold_id.split_once('/').map_or(f.fold_id.as_str(), |(d, _)| d);
        by_source.entry(source.to_string()).or_default().push(f.metrics);
    }
    out.report.protocol = Protocol::Combined;
    out.report.target_dataset = None;
    out.report.per_source = by_source.into_iter().map(|(k, v)| (k, Summary::of(&v))).collect();
    Ok(out)
}
