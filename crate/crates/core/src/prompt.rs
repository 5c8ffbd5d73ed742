//! Prompt templates and rendering.
//!
//! Templates live in `templates/<version>/` as plain text with a single
//! `{{EMAIL}}` slot inside triple-backtick fences.

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::simplify::SimplifiedEmail;
use crate::tokens::Tokenizer;

pub const TEMPLATE_VERSION: &str = "v1";
const SLOT: &str = "{{EMAIL}}";
const FENCE: &str = "```";

const NORMAL: &str = include_str!("../templates/v1/normal.txt");
const SIMPLE: &str = include_str!("../templates/v1/simple.txt");
const EMBEDDED_SCHEMA: &str = include_str!("../templates/v1/embedded_schema.txt");
const EMBEDDED_SCHEMA_SIMPLE: &str = include_str!("../templates/v1/embedded_schema_simple.txt");

/// Prompt style chosen by the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyle {
    #[default]
    Normal,
    Simple,
}

/// The concrete template. Providers without structured output get the
/// `EmbeddedSchema*` forms, which spell out the JSON keys in the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    Normal,
    Simple,
    EmbeddedSchema,
    EmbeddedSchemaSimple,
}

impl PromptVariant {
    pub fn new(style: PromptStyle, structured_output: bool) -> Self {
        match (style, structured_output) {
            (PromptStyle::Normal, true) => Self::Normal,
            (PromptStyle::Simple, true) => Self::Simple,
            (PromptStyle::Normal, false) => Self::EmbeddedSchema,
            (PromptStyle::Simple, false) => Self::EmbeddedSchemaSimple,
        }
    }

    pub fn style(self) -> PromptStyle {
        match self {
            Self::Normal | Self::EmbeddedSchema => PromptStyle::Normal,
            Self::Simple | Self::EmbeddedSchemaSimple => PromptStyle::Simple,
        }
    }

    pub fn is_simple(self) -> bool {
        self.style() == PromptStyle::Simple
    }

    pub fn embeds_schema(self) -> bool {
        matches!(self, Self::EmbeddedSchema | Self::EmbeddedSchemaSimple)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Simple => "simple",
            Self::EmbeddedSchema => "embedded_schema",
            Self::EmbeddedSchemaSimple => "embedded_schema_simple",
        }
    }

    /// The template text with its `{{EMAIL}}` slot.
    pub fn template(self) -> &'static str {
        let raw = match self {
            Self::Normal => NORMAL,
            Self::Simple => SIMPLE,
            Self::EmbeddedSchema => EMBEDDED_SCHEMA,
            Self::EmbeddedSchemaSimple => EMBEDDED_SCHEMA_SIMPLE,
        };
        raw.strip_suffix('\n').unwrap_or(raw)
    }

    /// Template text before and after the `{{EMAIL}}` slot.
    pub fn template_parts(self) -> (&'static str, &'static str) {
        self.template()
            .split_once(SLOT)
            .expect("every template has an email slot")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub variant: PromptVariant,
    pub email_token_count: usize,
    email_start: usize,
    email_end: usize,
}

impl RenderedPrompt {
    /// The serialized email as inserted between the fences.
    pub fn email_text(&self) -> &str {
        &self.text[self.email_start..self.email_end]
    }
}

/// `Name: value` header lines, a blank line, then the body.
pub fn serialize_email(email: &SimplifiedEmail) -> String {
    email.serialized()
}

pub fn render_prompt(
    email: &SimplifiedEmail,
    variant: PromptVariant,
    tokenizer: &dyn Tokenizer,
) -> RenderedPrompt {
    let serialized = serialize_email(email);
    let (before, after) = variant.template_parts();
    let mut text = String::with_capacity(before.len() + serialized.len() + after.len());
    text.push_str(before);
    let email_start = text.len();
    text.push_str(&serialized);
    let email_end = text.len();
    text.push_str(after);
    RenderedPrompt {
        email_token_count: tokenizer.count(&serialized),
        text,
        variant,
        email_start,
        email_end,
    }
}

/// Recovers the email from prompt text produced by any template: the text
/// between the fence that opens the `Email:` slot and the final fence.
pub fn extract_email_slot(prompt: &str) -> Option<&str> {
    let marker = "\nEmail:\n```";
    let start = prompt.find(marker)? + marker.len();
    let end = prompt.rfind(FENCE)?;
    (end >= start).then(|| &prompt[start..end])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplify::BodyKind;
    use crate::tokens::Approx4;
    use alloc::vec::Vec;

    fn email(body: &str) -> SimplifiedEmail {
        SimplifiedEmail {
            header_block: String::from("From: a@b"),
            body_text: String::from(body),
            body_kind: BodyKind::Plain,
            reduction_log: Vec::new(),
        }
    }

    const ALL: [PromptVariant; 4] = [
        PromptVariant::Normal,
        PromptVariant::Simple,
        PromptVariant::EmbeddedSchema,
        PromptVariant::EmbeddedSchemaSimple,
    ];

    #[test]
    fn serialization_layout() {
        assert_eq!(serialize_email(&email("hi")), "From: a@b\n\nhi");
        assert_eq!(serialize_email(&email("")), "From: a@b\n\n");
    }

    #[test]
    fn each_template_has_one_slot_inside_fences() {
        for variant in ALL {
            let template = variant.template();
            assert_eq!(template.matches(SLOT).count(), 1, "{variant:?}");
            assert!(template.ends_with("Email:\n```{{EMAIL}}```"), "{variant:?}");
        }
    }

    #[test]
    fn simple_prompt_opening() {
        let p = render_prompt(&email("hi"), PromptVariant::Simple, &Approx4);
        assert!(p.text.starts_with("Determine whether a given email"));
        assert_eq!(p.email_text(), "From: a@b\n\nhi");
    }

    #[test]
    fn normal_prompt_content() {
        let p = render_prompt(&email("hi"), PromptVariant::Normal, &Approx4);
        assert!(p.text.starts_with("I want you to act as a spam detector"));
        assert!(p
            .text
            .contains("1. Identify any impersonation of well-known brands."));
        assert!(p
            .text
            .contains("fake rewards, fake warnings about account problems"));
        assert!(p
            .text
            .contains("Note that the To address has been replaced with a dummy address."));
        assert!(!p.text.contains("is_phishing"));
    }

    #[test]
    fn embedded_schema_prompt_lists_keys() {
        let p = render_prompt(&email("hi"), PromptVariant::EmbeddedSchema, &Approx4);
        assert!(p
            .text
            .contains("phishing_score: phishing risk confidence score"));
        assert!(p.text.contains("5. Summarize your findings"));
        assert!(p
            .text
            .contains("6. Your output should be JSON-formatted text"));
        let simple = render_prompt(&email("hi"), PromptVariant::EmbeddedSchemaSimple, &Approx4);
        assert!(simple.text.contains("- is_phishing: a boolean value"));
        assert!(!simple.text.contains("phishing_score"));
    }

    #[test]
    fn variant_selection() {
        assert_eq!(
            PromptVariant::new(PromptStyle::Normal, false),
            PromptVariant::EmbeddedSchema
        );
        assert_eq!(
            PromptVariant::new(PromptStyle::Simple, true),
            PromptVariant::Simple
        );
        assert!(PromptVariant::EmbeddedSchemaSimple.is_simple());
    }

    #[test]
    fn slot_extraction_matches_insertion() {
        for variant in ALL {
            let e = email("body with ``` fences ``` inside\nEmail:\n```x");
            let p = render_prompt(&e, variant, &Approx4);
            assert_eq!(extract_email_slot(&p.text), Some(p.email_text()));
            assert_eq!(p.email_text(), serialize_email(&e));
            assert_eq!(p.email_token_count, Approx4.count(&serialize_email(&e)));
        }
    }
}
