//! Core of the phishlens phishing-email analysis pipeline.
//!
//! Everything in this crate is a pure transformation over in-memory data and
//! builds without `std` (only `alloc` is required). File access, HTTP and
//! the command line live in the companion `phishlens` crate.
//!
//! The pipeline stages, in order:
//!
//! 1. [`ingest`] parses raw `.eml` bytes, decodes headers and bodies, strips
//!    noisy headers and replaces recipient addresses.
//! 2. [`tokens`] measures text under a named tokenizer.
//! 3. [`simplify`] reduces the email until it fits a token budget.
//! 4. [`prompt`] renders the reduced email into an analysis prompt.
//! 5. [`response`] turns a model reply (structured or free text) into a
//!    [`verdict::DetectionVerdict`].
//! 6. [`eval`] aggregates verdicts into confusion matrices and reports.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod eval;
pub mod html;
pub mod ingest;
pub mod mock;
pub mod pipeline;
pub mod prompt;
pub mod response;
pub mod simplify;
pub mod tokens;
pub mod verdict;

pub use eval::{
    compute_metrics, estimate_cost, histogram_scores, ConfusionMatrix, CostReport, EvalMetrics,
    Label, LatencyStats, Pricing, SampleRecord, ScoreHistogram,
};
pub use ingest::{
    anonymize_recipients, decode_header_value, flatten_body_parts, parse_eml, sanitize_headers,
    AttachmentRef, BodyPart, HeaderDenylist, HeaderField, ParseError, ParsedEmail, RawEmail,
};
pub use mock::MockRules;
pub use pipeline::{interpret, prepare, PipelineError, PrepareOptions, Prepared};
pub use prompt::{render_prompt, serialize_email, PromptStyle, PromptVariant, RenderedPrompt};
pub use response::{
    build_function_schema, extract_json_fallback, interpret_response, parse_structured,
    ExtractError, ModelOutput, RawModelResponse, ResponseSchema, VerdictSource,
};
pub use simplify::{simplify, BodyKind, SimplifiedEmail, SimplifyError, SimplifyOptions};
pub use tokens::{TokenBudget, Tokenizer, TokenizerId, TokenizerRegistry, UnknownTokenizer};
pub use verdict::{validate_verdict, verdict_to_json, DetectionVerdict, VerdictError};
