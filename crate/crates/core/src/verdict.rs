//! The structured detection result and its canonical JSON form.

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::prompt::PromptVariant;

pub const MAX_SCORE: i64 = 10;
pub const MAX_RATIONALE_WORDS: usize = 500;

/// Result of analysing one email.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionVerdict {
    pub is_phishing: bool,
    /// 0 to 10; absent for simple prompts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phishing_score: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brand_impersonated: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationales: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brief_reason: Option<String>,
}

impl DetectionVerdict {
    pub fn bare(is_phishing: bool) -> Self {
        Self {
            is_phishing,
            phishing_score: None,
            brand_impersonated: None,
            rationales: None,
            brief_reason: None,
        }
    }

    pub fn with_score(mut self, score: i64) -> Self {
        self.phishing_score = Some(score);
        self
    }

    /// Parses the JSON produced by [`verdict_to_json`].
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerdictError {
    #[error("phishing_score {0} is outside 0..=10")]
    InvalidScore(i64),
    #[error("rationales has {0} words, more than 500")]
    RationalesTooLong(usize),
    #[error("required field `{0}` is missing")]
    MissingField(&'static str),
}

fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Checks the score range and rationale length. Normal prompts also require
/// a score; simple prompts only require `is_phishing`.
pub fn validate_verdict(
    verdict: DetectionVerdict,
    variant: PromptVariant,
) -> Result<DetectionVerdict, VerdictError> {
    match verdict.phishing_score {
        Some(score) if !(0..=MAX_SCORE).contains(&score) => {
            return Err(VerdictError::InvalidScore(score))
        }
        None if !variant.is_simple() => return Err(VerdictError::MissingField("phishing_score")),
        _ => {}
    }
    if let Some(rationales) = &verdict.rationales {
        let words = word_count(rationales);
        if words > MAX_RATIONALE_WORDS {
            return Err(VerdictError::RationalesTooLong(words));
        }
    }
    Ok(verdict)
}

fn push_json_string(out: &mut String, value: &str) {
    // serializing a &str cannot fail
    out.push_str(&serde_json::to_string(value).unwrap_or_default());
}

/// Single-line JSON with keys in schema order and absent fields omitted,
/// e.g. `{"is_phishing": true, "phishing_score": 8}`.
pub fn verdict_to_json(verdict: &DetectionVerdict) -> String {
    let mut out = String::from("{\"is_phishing\": ");
    out.push_str(if verdict.is_phishing { "true" } else { "false" });
    if let Some(score) = verdict.phishing_score {
        out.push_str(", \"phishing_score\": ");
        out.push_str(&alloc::format!("{score}"));
    }
    let strings = [
        ("brand_impersonated", &verdict.brand_impersonated),
        ("rationales", &verdict.rationales),
        ("brief_reason", &verdict.brief_reason),
    ];
    for (key, value) in strings {
        if let Some(value) = value {
            out.push_str(", \"");
            out.push_str(key);
            out.push_str("\": ");
            push_json_string(&mut out, value);
        }
    }
    out.push('}');
    out
}
