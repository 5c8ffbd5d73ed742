//! A deterministic stand-in for a live model.
//!
//! The verdict depends only on keywords found in the email body of the
//! prompt, so offline runs are reproducible.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::prompt::{extract_email_slot, PromptVariant};
use crate::response::{ModelOutput, RawModelResponse, ResponseSchema};
use crate::tokens::{Approx4, Tokenizer};
use crate::verdict::{verdict_to_json, DetectionVerdict};

pub const DEFAULT_KEYWORDS: [&str; 4] = ["verify", "urgent", "suspended", "click"];
pub const DEFAULT_PHISHING_SCORE: i64 = 8;
pub const DEFAULT_LEGITIMATE_SCORE: i64 = 1;

/// Keyword table: a body containing any keyword (case-insensitive) is
/// phishing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockRules {
    pub keywords: Vec<String>,
    pub phishing_score: i64,
    pub legitimate_score: i64,
}

impl Default for MockRules {
    fn default() -> Self {
        Self {
            keywords: DEFAULT_KEYWORDS.iter().map(|k| k.to_string()).collect(),
            phishing_score: DEFAULT_PHISHING_SCORE,
            legitimate_score: DEFAULT_LEGITIMATE_SCORE,
        }
    }
}

impl MockRules {
    /// The first keyword present in `body`, if any.
    pub fn matching_keyword(&self, body: &str) -> Option<&str> {
        let haystack = body.to_lowercase();
        self.keywords
            .iter()
            .find(|k| !k.is_empty() && haystack.contains(&k.to_lowercase()))
            .map(String::as_str)
    }

    /// The full verdict the mock reports for `body`.
    pub fn decide(&self, body: &str) -> DetectionVerdict {
        match self.matching_keyword(body) {
            Some(keyword) => DetectionVerdict {
                is_phishing: true,
                phishing_score: Some(self.phishing_score),
                brand_impersonated: Some(String::new()),
                rationales: Some(alloc::format!(
                    "The body contains the keyword \"{keyword}\"."
                )),
                brief_reason: Some(alloc::format!("Keyword \"{keyword}\" found.")),
            },
            None => DetectionVerdict {
                is_phishing: false,
                phishing_score: Some(self.legitimate_score),
                brand_impersonated: Some(String::new()),
                rationales: Some(String::from("No rule keyword appears in the body.")),
                brief_reason: Some(String::from("No rule keyword found.")),
            },
        }
    }

    /// Answers a prompt the way a provider would: function arguments for
    /// structured variants, JSON inside prose for embedded-schema ones.
    pub fn respond(
        &self,
        prompt: &str,
        variant: PromptVariant,
        schema: &ResponseSchema,
    ) -> RawModelResponse {
        let verdict = restrict(self.decide(prompt_body(prompt)), schema);
        let output = if variant.embeds_schema() {
            ModelOutput::Text(alloc::format!(
                "Here is my analysis.\n```json\n{}\n```",
                verdict_to_json(&verdict)
            ))
        } else {
            ModelOutput::Structured(arguments(&verdict))
        };
        let output_text = match &output {
            ModelOutput::Text(t) => t.clone(),
            ModelOutput::Structured(v) => v.to_string(),
        };
        RawModelResponse {
            output,
            input_tokens: Approx4.count(prompt) as u64,
            output_tokens: Approx4.count(&output_text) as u64,
            latency: Duration::ZERO,
            attempt_latencies: alloc::vec![Duration::ZERO],
        }
    }
}

/// The email body inside a rendered prompt: the slot contents after the
/// header block.
pub fn prompt_body(prompt: &str) -> &str {
    let email = extract_email_slot(prompt).unwrap_or(prompt);
    match email.split_once("\n\n") {
        Some((_, body)) => body,
        None => email,
    }
}

fn restrict(verdict: DetectionVerdict, schema: &ResponseSchema) -> DetectionVerdict {
    DetectionVerdict {
        is_phishing: verdict.is_phishing,
        phishing_score: verdict
            .phishing_score
            .filter(|_| schema.has("phishing_score")),
        brand_impersonated: verdict
            .brand_impersonated
            .filter(|_| schema.has("brand_impersonated")),
        rationales: verdict.rationales.filter(|_| schema.has("rationales")),
        brief_reason: verdict.brief_reason.filter(|_| schema.has("brief_reason")),
    }
}

fn arguments(verdict: &DetectionVerdict) -> Value {
    let mut map = Map::new();
    map.insert("is_phishing".into(), Value::Bool(verdict.is_phishing));
    if let Some(score) = verdict.phishing_score {
        map.insert("phishing_score".into(), Value::from(score));
    }
    for (key, field) in [
        ("brand_impersonated", &verdict.brand_impersonated),
        ("rationales", &verdict.rationales),
        ("brief_reason", &verdict.brief_reason),
    ] {
        if let Some(text) = field {
            map.insert(key.into(), Value::String(text.clone()));
        }
    }
    Value::Object(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::{build_function_schema, extract_json_fallback, parse_structured};

    fn prompt(variant: PromptVariant, header: &str, body: &str) -> String {
        let (before, after) = variant.template_parts();
        alloc::format!("{before}{header}\n\n{body}{after}")
    }

    #[test]
    fn keyword_in_body_is_phishing() {
        let rules = MockRules::default();
        let schema = build_function_schema(PromptVariant::Normal);
        let p = prompt(
            PromptVariant::Normal,
            "Subject: hi",
            "Please VERIFY your account",
        );
        let v =
            parse_structured(&rules.respond(&p, PromptVariant::Normal, &schema), &schema).unwrap();
        assert!(v.is_phishing);
        assert_eq!(v.phishing_score, Some(8));
    }

    #[test]
    fn header_keywords_and_template_words_ignored() {
        let rules = MockRules::default();
        let schema = build_function_schema(PromptVariant::Normal);
        let p = prompt(
            PromptVariant::Normal,
            "Subject: urgent click",
            "Lunch at noon?",
        );
        let v =
            parse_structured(&rules.respond(&p, PromptVariant::Normal, &schema), &schema).unwrap();
        assert!(!v.is_phishing);
    }

    #[test]
    fn simple_variant_only_sets_is_phishing() {
        let rules = MockRules::default();
        let schema = build_function_schema(PromptVariant::Simple);
        let p = prompt(PromptVariant::Simple, "From: x", "click here");
        let v =
            parse_structured(&rules.respond(&p, PromptVariant::Simple, &schema), &schema).unwrap();
        assert_eq!(v, DetectionVerdict::bare(true));
    }

    #[test]
    fn embedded_variant_answers_in_text() {
        let rules = MockRules::default();
        let schema = build_function_schema(PromptVariant::EmbeddedSchema);
        let p = prompt(
            PromptVariant::EmbeddedSchema,
            "From: x",
            "account suspended",
        );
        let resp = rules.respond(&p, PromptVariant::EmbeddedSchema, &schema);
        let ModelOutput::Text(text) = &resp.output else {
            panic!("expected text")
        };
        let v = extract_json_fallback(text, &schema).unwrap();
        assert!(v.is_phishing);
        assert!(resp.input_tokens > 0 && resp.output_tokens > 0);
    }

    #[test]
    fn deterministic() {
        let rules = MockRules::default();
        let schema = build_function_schema(PromptVariant::Normal);
        let p = prompt(PromptVariant::Normal, "From: x", "hello");
        assert_eq!(
            rules.respond(&p, PromptVariant::Normal, &schema),
            rules.respond(&p, PromptVariant::Normal, &schema)
        );
    }
}
