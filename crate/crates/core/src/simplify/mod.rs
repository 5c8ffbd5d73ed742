//! Budget-driven reduction of a parsed email.
//!
//! [`simplify`] serializes the email and, only if it is over budget, runs
//! the reduction steps in order until it fits:
//!
//! 1. keep a single body part, preferring HTML;
//! 2. prune HTML markup ([`prune_html`]);
//! 3. drop HTML elements from the middle ([`trim_html_center`]) or, for
//!    plain text, lines from the middle ([`trim_plain_middle`]).

mod html_rules;
mod trim;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ingest::{flatten_body_parts, BodyPart, ParsedEmail};
use crate::tokens::{TokenBudget, Tokenizer};

pub use html_rules::{prune_html, truncate_url, DEFAULT_KEEP_ATTRIBUTES};
pub use trim::{trim_html_center, trim_plain_middle};

pub const DEFAULT_ELISION_MARKER: &str = "[...]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyKind {
    Html,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionStep {
    OrganizeMultipart,
    PruneHtml,
    TrimHtmlCenter,
    TrimPlainMiddle,
}

impl ReductionStep {
    pub fn name(self) -> &'static str {
        match self {
            Self::OrganizeMultipart => "organize_multipart",
            Self::PruneHtml => "prune_html",
            Self::TrimHtmlCenter => "trim_html_center",
            Self::TrimPlainMiddle => "trim_plain_middle",
        }
    }
}

/// The budget-compliant text form of an email.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplifiedEmail {
    pub header_block: String,
    pub body_text: String,
    pub body_kind: BodyKind,
    pub reduction_log: Vec<ReductionStep>,
}

impl SimplifiedEmail {
    /// Header block, a blank line, then the body.
    pub fn serialized(&self) -> String {
        join_email(&self.header_block, &self.body_text)
    }
}

pub(crate) fn join_email(header_block: &str, body: &str) -> String {
    if header_block.is_empty() {
        return String::from(body);
    }
    let mut out = String::with_capacity(header_block.len() + body.len() + 2);
    out.push_str(header_block);
    out.push_str("\n\n");
    out.push_str(body);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimplifyError {
    #[error("email has no body parts")]
    NoBody,
    #[error("budget of {limit} tokens cannot be met even with an empty body")]
    BudgetUnreachable { limit: usize },
}

/// The header block and budget a body is measured against.
#[derive(Clone, Copy)]
pub struct Fit<'a> {
    pub header_block: &'a str,
    pub tokenizer: &'a dyn Tokenizer,
    pub budget: TokenBudget,
}

impl<'a> Fit<'a> {
    pub fn new(header_block: &'a str, tokenizer: &'a dyn Tokenizer, budget: TokenBudget) -> Self {
        Self {
            header_block,
            tokenizer,
            budget,
        }
    }

    pub fn admits(&self, body: &str) -> bool {
        self.budget
            .admits(self.tokenizer, &join_email(self.header_block, body))
    }

    pub(crate) fn unreachable(&self) -> SimplifyError {
        SimplifyError::BudgetUnreachable {
            limit: self.budget.limit(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplifyOptions {
    pub keep_attributes: Vec<String>,
    pub elision_marker: String,
}

impl Default for SimplifyOptions {
    fn default() -> Self {
        Self {
            keep_attributes: DEFAULT_KEEP_ATTRIBUTES
                .iter()
                .map(|s| String::from(*s))
                .collect(),
            elision_marker: String::from(DEFAULT_ELISION_MARKER),
        }
    }
}

/// `Name: value` lines in order, then one `Attachment:` line per attachment.
pub fn header_block(email: &ParsedEmail) -> String {
    let mut lines: Vec<String> = email
        .headers
        .iter()
        .map(|h| alloc::format!("{}: {}", h.name, h.value))
        .collect();
    for attachment in &email.attachments {
        let name = if attachment.filename.is_empty() {
            "(unnamed)"
        } else {
            &attachment.filename
        };
        lines.push(alloc::format!(
            "Attachment: {name} ({})",
            attachment.declared_media_type
        ));
    }
    lines.join("\n")
}

/// First HTML leaf, else first plain-text leaf, else the first leaf.
pub fn select_preferred_part<'a>(parts: &[&'a BodyPart]) -> Result<&'a BodyPart, SimplifyError> {
    parts
        .iter()
        .find(|p| p.is_html())
        .or_else(|| parts.iter().find(|p| p.is_plain()))
        .or_else(|| parts.first())
        .copied()
        .ok_or(SimplifyError::NoBody)
}

fn kind_of(part: &BodyPart) -> BodyKind {
    if part.is_html() {
        BodyKind::Html
    } else {
        BodyKind::Plain
    }
}

/// Reduces `email` until its serialization fits `budget` under `tokenizer`.
pub fn simplify(
    email: &ParsedEmail,
    tokenizer: &dyn Tokenizer,
    budget: TokenBudget,
    options: &SimplifyOptions,
) -> Result<SimplifiedEmail, SimplifyError> {
    let header_block = header_block(email);
    let fit = Fit::new(&header_block, tokenizer, budget);
    let leaves = flatten_body_parts(email);

    let full_body = leaves
        .iter()
        .filter_map(|p| p.text())
        .collect::<Vec<_>>()
        .join("\n\n");
    let full_kind = if leaves.iter().any(|p| p.is_html()) {
        BodyKind::Html
    } else {
        BodyKind::Plain
    };
    if fit.admits(&full_body) {
        return Ok(SimplifiedEmail {
            header_block,
            body_text: full_body,
            body_kind: full_kind,
            reduction_log: Vec::new(),
        });
    }

    let mut log = alloc::vec![ReductionStep::OrganizeMultipart];
    let selected = match select_preferred_part(&leaves) {
        Ok(part) => part,
        Err(_) => return Err(fit.unreachable()),
    };
    let kind = kind_of(selected);
    let mut body = String::from(selected.text().unwrap_or_default());
    let done = |body: String, log: Vec<ReductionStep>, header_block: String| SimplifiedEmail {
        header_block,
        body_text: body,
        body_kind: kind,
        reduction_log: log,
    };
    if fit.admits(&body) {
        return Ok(done(body, log, header_block));
    }

    match kind {
        BodyKind::Html => {
            log.push(ReductionStep::PruneHtml);
            body = prune_html(&body, &options.keep_attributes);
            if fit.admits(&body) {
                return Ok(done(body, log, header_block));
            }
            log.push(ReductionStep::TrimHtmlCenter);
            body = trim_html_center(&body, &fit)?;
        }
        BodyKind::Plain => {
            log.push(ReductionStep::TrimPlainMiddle);
            body = trim_plain_middle(&body, &fit, &options.elision_marker)?;
        }
    }
    Ok(done(body, log, header_block))
}
