use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hrv::Label;

/// What a condition contributes to the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionLabel {
    Stress,
    NoStress,
    Exclude,
}

impl ConditionLabel {
    pub fn label(self) -> Option<Label> {
        match self {
            ConditionLabel::Stress => Some(Label::Stress),
            ConditionLabel::NoStress => Some(Label::NoStress),
            ConditionLabel::Exclude => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionRule {
    pub label: ConditionLabel,
    /// Only the final `keep_last_s` seconds of each segment are used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep_last_s: Option<f64>,
}

impl ConditionRule {
    pub const fn new(label: ConditionLabel) -> Self {
        Self {
            label,
            keep_last_s: None,
        }
    }
}

/// Condition id to label. Conditions absent from the map are excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelScheme {
    pub rules: BTreeMap<String, ConditionRule>,
}

impl LabelScheme {
    pub fn from_rules<'a>(rules: impl IntoIterator<Item = (&'a str, ConditionRule)>) -> Self {
        Self {
            rules: rules.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn rule(&self, condition_id: &str) -> ConditionRule {
        self.rules
            .get(condition_id)
            .copied()
            .unwrap_or(ConditionRule::new(ConditionLabel::Exclude))
    }

    /// At least one stress and one no-stress condition.
    pub fn validate(&self) -> Result<()> {
        let has = |l: ConditionLabel| self.rules.values().any(|r| r.label == l);
        if !has(ConditionLabel::Stress) || !has(ConditionLabel::NoStress) {
            return Err(Error::InvalidSpec(
                "label scheme needs at least one stress and one no_stress condition".into(),
            ));
        }
        if let Some((id, _)) = self
            .rules
            .iter()
            .find(|(_, r)| r.keep_last_s.is_some_and(|k| !(k.is_finite() && k > 0.0)))
        {
            return Err(Error::InvalidSpec(format!(
                "condition {id}: keep_last_s must be positive"
            )));
        }
        Ok(())
    }
}

/// No-stress span kept from the end of the ForDigitStress post-interview phase.
pub const POST_INTERVIEW_KEEP_S: f64 = 900.0;

/// Labeling of the four studied datasets, keyed by dataset id.
pub fn built_in_schemes() -> BTreeMap<String, LabelScheme> {
    use ConditionLabel::*;
    let r = ConditionRule::new;
    [
        (
            "WESAD",
            LabelScheme::from_rules([
                ("neutral", r(NoStress)),
                ("amusement", r(NoStress)),
                ("stress", r(Stress)),
            ]),
        ),
        (
            "SWELL-KW",
            LabelScheme::from_rules([
                ("neutral", r(NoStress)),
                ("email_interruptions", r(Stress)),
                ("time_pressure", r(Stress)),
            ]),
        ),
        (
            "ForDigitStress",
            LabelScheme::from_rules([
                ("interview", r(Stress)),
                (
                    "post_interview",
                    ConditionRule {
                        label: NoStress,
                        keep_last_s: Some(POST_INTERVIEW_KEEP_S),
                    },
                ),
                ("preparation", r(Exclude)),
            ]),
        ),
        (
            "VerBIO",
            LabelScheme::from_rules([
                ("relaxation", r(NoStress)),
                ("presentation", r(Stress)),
                ("preparation", r(Exclude)),
            ]),
        ),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// The manifest's inline scheme, else the built-in one for its dataset id.
pub fn scheme_for(dataset_id: &str, inline: Option<&LabelScheme>) -> Result<LabelScheme> {
    let scheme = match inline {
        Some(s) => s.clone(),
        None => built_in_schemes().remove(dataset_id).ok_or_else(|| {
            Error::Manifest(format!(
                "no built-in label scheme for dataset {dataset_id:?}; add label_scheme to the manifest"
            ))
        })?,
    };
    scheme.validate()?;
    Ok(scheme)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_labeling_rules() {
        let s = built_in_schemes();
        assert_eq!(s["WESAD"].rule("amusement").label, ConditionLabel::NoStress);
        assert_eq!(s["WESAD"].rule("stress").label, ConditionLabel::Stress);
        assert_eq!(s["SWELL-KW"].rule("time_pressure").label, ConditionLabel::Stress);
        assert_eq!(s["SWELL-KW"].rule("email_interruptions").label, ConditionLabel::Stress);
        assert_eq!(s["VerBIO"].rule("preparation").label, ConditionLabel::Exclude);
        assert_eq!(s["ForDigitStress"].rule("post_interview").keep_last_s, Some(900.0));
        assert_eq!(s["ForDigitStress"].rule("interview").label, ConditionLabel::Stress);
        for scheme in s.values() {
            scheme.validate().unwrap();
        }
    }

    #[test]
    fn unmapped_conditions_are_excluded() {
        let s = &built_in_schemes()["WESAD"];
        assert_eq!(s.rule("meditation").label, ConditionLabel::Exclude);
    }

    #[test]
    fn one_sided_scheme_is_invalid() {
        let s = LabelScheme::from_rules([("a", ConditionRule::new(ConditionLabel::Stress))]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn scheme_lookup() {
        assert!(scheme_for("WESAD", None).is_ok());
        assert!(matches!(scheme_for("other", None), Err(Error::Manifest(_))));
        let inline = built_in_schemes()["VerBIO"].clone();
        assert_eq!(scheme_for("other", Some(&inline)).unwrap(), inline);
    }

    #[test]
    fn json_form_is_a_plain_map() {
        let json = r#"{"rest": {"label": "no_stress"}, "task": {"label": "stress", "keep_last_s": 60}}"#;
        let s: LabelScheme = serde_json::from_str(json).unwrap();
        assert_eq!(s.rule("task").keep_last_s, Some(60.0));
    }
}
