//! The per-email stages glued together, without IO.

use alloc::string::String;

use crate::ingest::{
    anonymize_recipients, parse_eml, sanitize_headers, HeaderDenylist, ParseError, RawEmail,
};
use crate::prompt::{render_prompt, PromptVariant, RenderedPrompt};
use crate::response::{
    interpret_response, ExtractError, RawModelResponse, ResponseSchema, VerdictSource,
};
use crate::simplify::{simplify, SimplifiedEmail, SimplifyError, SimplifyOptions};
use crate::tokens::{TokenBudget, Tokenizer};
use crate::verdict::{validate_verdict, DetectionVerdict, VerdictError};

pub const DEFAULT_DUMMY_ADDRESS: &str = "user@example.com";

#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub denylist: HeaderDenylist,
    pub dummy_address: String,
    pub budget: TokenBudget,
    pub simplify: SimplifyOptions,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self {
            denylist: HeaderDenylist::default(),
            dummy_address: String::from(DEFAULT_DUMMY_ADDRESS),
            budget: TokenBudget::default(),
            simplify: SimplifyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prepared {
    pub simplified: SimplifiedEmail,
    pub prompt: RenderedPrompt,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PipelineError {
    #[error("parse: {0}")]
    Parse(#[from] ParseError),
    #[error("simplify: {0}")]
    Simplify(#[from] SimplifyError),
    #[error("extract: {0}")]
    Extract(#[from] ExtractError),
    #[error("verdict: {0}")]
    Verdict(#[from] VerdictError),
}

impl PipelineError {
    /// Short stage name used in per-sample error records.
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Parse(_) => "parse",
            PipelineError::Simplify(_) => "simplify",
            PipelineError::Extract(_) => "extract",
            PipelineError::Verdict(_) => "verdict",
        }
    }
}

/// Parse, sanitize, anonymize, simplify and render one email.
pub fn prepare(
    raw: &RawEmail,
    variant: PromptVariant,
    tokenizer: &dyn Tokenizer,
    options: &PrepareOptions,
) -> Result<Prepared, PipelineError> {
    let parsed = parse_eml(raw)?;
    let parsed = sanitize_headers(parsed, &options.denylist);
    let parsed = anonymize_recipients(parsed, &options.dummy_address);
    let simplified = simplify(&parsed, tokenizer, options.budget, &options.simplify)?;
    let prompt = render_prompt(&simplified, variant, tokenizer);
    Ok(Prepared { simplified, prompt })
}

/// Turn a reply into a validated verdict.
pub fn interpret(
    response: &RawModelResponse,
    schema: &ResponseSchema,
    variant: PromptVariant,
) -> Result<(DetectionVerdict, VerdictSource), PipelineError> {
    let (verdict, source) = interpret_response(response, schema)?;
    Ok((validate_verdict(verdict, variant)?, source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::MockRules;
    use crate::response::build_function_schema;
    use crate::tokens::Approx4;
    use alloc::vec::Vec;

    fn raw(text: &str) -> RawEmail {
        RawEmail::new(Vec::from(text.as_bytes())).unwrap()
    }

    #[test]
    fn mock_round_trip() {
        let email = raw("From: a@bank.test\r\nTo: bob@corp.test\r\nX-Spam: 1\r\nSubject: Hi\r\n\r\nYour account is suspended.\r\n");
        for variant in [
            PromptVariant::Normal,
            PromptVariant::EmbeddedSchema,
            PromptVariant::Simple,
        ] {
            let prepared = prepare(&email, variant, &Approx4, &PrepareOptions::default()).unwrap();
            let text = prepared.prompt.email_text();
            assert!(text.contains("To: user@example.com"));
            assert!(!text.contains("bob@corp.test"));
            assert!(!text.contains("X-Spam"));
            let schema = build_function_schema(variant);
            let resp = MockRules::default().respond(&prepared.prompt.text, variant, &schema);
            let (verdict, _) = interpret(&resp, &schema, variant).unwrap();
            assert!(verdict.is_phishing);
        }
    }

    #[test]
    fn stage_names() {
        let err = prepare(
            &raw("no blank line"),
            PromptVariant::Normal,
            &Approx4,
            &PrepareOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.stage(), "parse");
    }
}
