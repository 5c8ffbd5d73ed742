//! Function-calling schema and interpretation of model replies.
//!
//! Providers with structured output return the function arguments as a JSON
//! object ([`parse_structured`]). Other providers answer in free text, from
//! which [`extract_json_fallback`] recovers the verdict: first by locating a
//! JSON object, then by a keyword table.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::prompt::PromptVariant;
use crate::verdict::DetectionVerdict;

pub const FUNCTION_NAME: &str = "print_phishing_result";
pub const FUNCTION_DESCRIPTION: &str =
    "Outputs whether a given email is a phishing email or a legitimate email.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyType {
    Boolean,
    Number,
    String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaProperty {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub kind: PropertyType,
    pub description: &'static str,
}

const PROPERTIES: [SchemaProperty; 5] = [
    SchemaProperty {
        name: "is_phishing",
        kind: PropertyType::Boolean,
        description:
            "A boolean value indicating whether the email is phishing (true) or legitimate (false).",
    },
    SchemaProperty {
        name: "phishing_score",
        kind: PropertyType::Number,
        description: "Phishing risk confidence score as an integer on a scale from 0 to 10.",
    },
    SchemaProperty {
        name: "brand_impersonated",
        kind: PropertyType::String,
        description: "Brand name associated with the email, if applicable.",
    },
    SchemaProperty {
        name: "rationales",
        kind: PropertyType::String,
        description: "Detailed rationales for the determination, up to 500 words.",
    },
    SchemaProperty {
        name: "brief_reason",
        kind: PropertyType::String,
        description: "Brief reason for the determination.",
    },
];

/// The function declared to the provider.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResponseSchema {
    pub function_name: &'static str,
    pub description: &'static str,
    pub properties: Vec<SchemaProperty>,
}

impl ResponseSchema {
    pub fn has(&self, name: &str) -> bool {
        self.properties.iter().any(|p| p.name == name)
    }

    /// JSON Schema for the function parameters; every property is required.
    pub fn parameters_json(&self) -> Value {
        let mut properties = Map::new();
        for prop in &self.properties {
            let mut entry = Map::new();
            let kind = match prop.kind {
                PropertyType::Boolean => "boolean",
                PropertyType::Number => "number",
                PropertyType::String => "string",
            };
            entry.insert("type".into(), Value::String(kind.into()));
            entry.insert("description".into(), Value::String(prop.description.into()));
            properties.insert(prop.name.into(), Value::Object(entry));
        }
        let required = self
            .properties
            .iter()
            .map(|p| Value::String(p.name.into()))
            .collect();
        let mut root = Map::new();
        root.insert("type".into(), Value::String("object".into()));
        root.insert("properties".into(), Value::Object(properties));
        root.insert("required".into(), Value::Array(required));
        Value::Object(root)
    }
}

/// Five properties for normal prompts, `is_phishing` alone for simple ones.
pub fn build_function_schema(variant: PromptVariant) -> ResponseSchema {
    let properties = if variant.is_simple() {
        PROPERTIES[..1].to_vec()
    } else {
        PROPERTIES.to_vec()
    };
    ResponseSchema {
        function_name: FUNCTION_NAME,
        description: FUNCTION_DESCRIPTION,
        properties,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelOutput {
    /// Function-call arguments.
    Structured(Value),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawModelResponse {
    pub output: ModelOutput,
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// Submission to final reply, including retries.
    pub latency: Duration,
    /// Duration of each attempt, failed ones included.
    pub attempt_latencies: Vec<Duration>,
}

/// How a verdict was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    Structured,
    EmbeddedJson,
    Keyword,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("schema violation in field `{field}`")]
    SchemaViolation { field: String },
    #[error("response is free text, not structured arguments")]
    NotStructured,
    #[error("no verdict could be extracted from the response")]
    Unparseable,
}

fn violation(field: &str) -> ExtractError {
    ExtractError::SchemaViolation {
        field: field.to_string(),
    }
}

fn integral(value: &Value) -> Option<i64> {
    if let Some(i) = value.as_i64() {
        return Some(i);
    }
    let f = value.as_f64()?;
    let truncated = f as i64;
    (truncated as f64 == f).then_some(truncated)
}

/// Maps function arguments to a verdict. Keys outside the schema are
/// ignored; `null` counts as absent.
pub fn map_arguments(
    args: &Value,
    schema: &ResponseSchema,
) -> Result<DetectionVerdict, ExtractError> {
    let object = args.as_object().ok_or_else(|| violation("<root>"))?;
    let field = |name: &str| {
        object
            .get(name)
            .filter(|v| !v.is_null())
            .filter(|_| schema.has(name))
    };
    let string_field = |name: &str| -> Result<Option<String>, ExtractError> {
        match field(name) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(violation(name)),
        }
    };

    let is_phishing = match field("is_phishing") {
        Some(Value::Bool(b)) => *b,
        _ => return Err(violation("is_phishing")),
    };
    let phishing_score = match field("phishing_score") {
        None => None,
        Some(v) => Some(integral(v).ok_or_else(|| violation("phishing_score"))?),
    };
    let mut brand_impersonated = string_field("brand_impersonated")?;
    if brand_impersonated.is_none() && schema.has("brand_impersonated") {
        brand_impersonated = Some(String::new());
    }
    Ok(DetectionVerdict {
        is_phishing,
        phishing_score,
        brand_impersonated,
        rationales: string_field("rationales")?,
        brief_reason: string_field("brief_reason")?,
    })
}

/// Interprets a structured reply.
pub fn parse_structured(
    response: &RawModelResponse,
    schema: &ResponseSchema,
) -> Result<DetectionVerdict, ExtractError> {
    match &response.output {
        ModelOutput::Structured(args) => map_arguments(args, schema),
        ModelOutput::Text(_) => Err(ExtractError::NotStructured),
    }
}

/// Interprets any reply, structured or free text.
pub fn interpret_response(
    response: &RawModelResponse,
    schema: &ResponseSchema,
) -> Result<(DetectionVerdict, VerdictSource), ExtractError> {
    match &response.output {
        ModelOutput::Structured(args) => {
            Ok((map_arguments(args, schema)?, VerdictSource::Structured))
        }
        ModelOutput::Text(text) => extract_verdict(text, schema),
    }
}

/// Balanced `{...}` regions, outermost first and then nested ones, in order
/// of their opening brace. Braces inside quoted strings do not count.
fn brace_regions(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut regions = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut quote: Option<u8> = None;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == q {
                quote = None;
            }
            continue;
        }
        match b {
            b'"' if !stack.is_empty() => quote = Some(b),
            // an apostrophe only opens a string right after JSON punctuation
            b'\''
                if !stack.is_empty()
                    && prev_significant(bytes, i)
                        .is_some_and(|p| matches!(p, b'{' | b',' | b':' | b'[')) =>
            {
                quote = Some(b)
            }
            b'{' => stack.push(i),
            b'}' => {
                if let Some(open) = stack.pop() {
                    regions.push((stack.len(), open, i + 1));
                }
            }
            _ => {}
        }
    }
    regions.sort_by_key(|&(depth, open, _)| (depth, open));
    regions
        .into_iter()
        .map(|(_, open, close)| (open, close))
        .collect()
}

fn prev_significant(bytes: &[u8], before: usize) -> Option<u8> {
    bytes[..before]
        .iter()
        .rev()
        .copied()
        .find(|b| !b.is_ascii_whitespace())
}

/// Rewrites common JSON slips: single-quoted strings, unquoted keys,
/// trailing commas and Python literals.
pub fn normalize_relaxed_json(input: &str) -> String {
    let chars: Vec<char> = input.chars().collect();
    let mut out = String::with_capacity(input.len() + 8);
    let mut i = 0;
    let last_sig = |out: &String| out.chars().rev().find(|c| !c.is_whitespace());
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' => {
                out.push('"');
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    out.push(d);
                    i += 1;
                    if d == '\\' && i < chars.len() {
                        out.push(chars[i]);
                        i += 1;
                    } else if d == '"' {
                        break;
                    }
                }
            }
            '\'' => {
                out.push('"');
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    i += 1;
                    match d {
                        '\\' if i < chars.len() && chars[i] == '\'' => {
                            out.push('\'');
                            i += 1;
                        }
                        '\\' if i < chars.len() => {
                            out.push('\\');
                            out.push(chars[i]);
                            i += 1;
                        }
                        '"' => out.push_str("\\\""),
                        '\'' => break,
                        _ => out.push(d),
                    }
                }
                out.push('"');
            }
            ',' => {
                let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
                if !matches!(next, Some('}') | Some(']')) {
                    out.push(',');
                }
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let next = chars[i..].iter().find(|c| !c.is_whitespace());
                let is_key = matches!(last_sig(&out), Some('{') | Some(',')) && next == Some(&':');
                if is_key {
                    out.push('"');
                    out.push_str(&word);
                    out.push('"');
                } else {
                    match word.as_str() {
                        "True" => out.push_str("true"),
                        "False" => out.push_str("false"),
                        "None" => out.push_str("null"),
                        _ => out.push_str(&word),
                    }
                }
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

fn parse_object(candidate: &str) -> Option<Value> {
    serde_json::from_str::<Value>(candidate)
        .ok()
        .or_else(|| serde_json::from_str::<Value>(&normalize_relaxed_json(candidate)).ok())
        .filter(Value::is_object)
}

/// Converts string-typed booleans and numbers the way a careless model
/// writes them (`"true"`, `"8"`).
fn coerce_loose_types(value: &mut Value) {
    let Some(object) = value.as_object_mut() else {
        return;
    };
    if let Some(v) = object.get_mut("is_phishing") {
        if let Some(s) = v.as_str() {
            match s.trim().to_ascii_lowercase().as_str() {
                "true" | "yes" => *v = Value::Bool(true),
                "false" | "no" => *v = Value::Bool(false),
                _ => {}
            }
        }
    }
    if let Some(v) = object.get_mut("phishing_score") {
        if let Some(n) = v.as_str().and_then(|s| s.trim().parse::<i64>().ok()) {
            *v = Value::from(n);
        }
    }
}

fn extract_embedded_json(text: &str, schema: &ResponseSchema) -> Option<DetectionVerdict> {
    for (open, close) in brace_regions(text) {
        let candidate = &text[open..close];
        if !candidate.contains("is_phishing") {
            continue;
        }
        let Some(value) = parse_object(candidate) else {
            continue;
        };
        if let Ok(verdict) = map_arguments(&value, schema) {
            return Some(verdict);
        }
        let mut loose = value;
        coerce_loose_types(&mut loose);
        if let Ok(verdict) = map_arguments(&loose, schema) {
            return Some(verdict);
        }
    }
    None
}

/// Lowercases, drops quoting/markdown characters and collapses whitespace.
fn normalize_prose(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_space = true;
    for c in text.chars() {
        if matches!(c, '"' | '`' | '*' | '#' | '\u{201c}' | '\u{201d}') {
            continue;
        }
        if c.is_whitespace() {
            if !last_space {
                out.push(' ');
                last_space = true;
            }
            continue;
        }
        out.extend(c.to_lowercase());
        last_space = false;
    }
    out
}

const POSITIVE_PHRASES: &[&str] = &[
    "this is a phishing",
    "this email is a phishing",
    "this email is phishing",
    "this message is a phishing",
    "this is phishing",
    "is likely a phishing",
    "is likely phishing",
    "is most likely a phishing",
    "is highly likely to be a phishing",
    "is probably a phishing",
    "appears to be a phishing",
    "appears to be phishing",
    "seems to be a phishing",
    "is a phishing email",
    "is a phishing attempt",
    "is a phishing message",
    "is indeed a phishing",
    "is a clear phishing",
    "is a classic phishing",
    "is a typical phishing",
    "classified as phishing",
    "classify it as phishing",
    "classify this email as phishing",
    "should be considered phishing",
    "should be treated as phishing",
    "verdict: phishing",
    "verdict is phishing",
    "verdict: this is a phishing",
    "conclusion: phishing",
    "answer: phishing",
    "result: phishing",
];

const NEGATIVE_PHRASES: &[&str] = &[
    "not a phishing",
    "not phishing",
    "not likely phishing",
    "not likely to be phishing",
    "no signs of phishing",
    "no indication of phishing",
    "no indicators of phishing",
    "does not appear to be a phishing",
    "does not appear to be phishing",
    "isn't a phishing",
    "isn't phishing",
    "is legitimate",
    "is a legitimate",
    "is likely legitimate",
    "is most likely legitimate",
    "is likely a legitimate",
    "is probably legitimate",
    "appears to be legitimate",
    "appears to be a legitimate",
    "appears legitimate",
    "seems legitimate",
    "seems to be legitimate",
    "seems to be a legitimate",
    "is genuine",
    "is a genuine",
    "classified as legitimate",
    "classify it as legitimate",
    "classify this email as legitimate",
    "verdict: legitimate",
    "verdict is legitimate",
    "verdict: this is a legitimate",
    "conclusion: legitimate",
    "answer: legitimate",
    "result: legitimate",
];

fn find_all(haystack: &str, needle: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(rel) = haystack[from..].find(needle) {
        let at = from + rel;
        out.push((at, at + needle.len()));
        from = at + 1;
    }
    out
}

/// Reads a value after `key`: optional quotes/spaces, `:` or `=`, then a word.
fn key_values<'a>(prose: &'a str, keys: &[&str]) -> Vec<(usize, &'a str)> {
    let mut out = Vec::new();
    for key in keys {
        for (start, end) in find_all(prose, key) {
            let rest = prose[end..].trim_start_matches([' ', '\'']);
            let Some(rest) = rest.strip_prefix([':', '=']) else {
                continue;
            };
            let rest = rest.trim_start_matches([' ', '\'']);
            let word_len = rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '.' || c == '-'))
                .unwrap_or(rest.len());
            let word = rest[..word_len].trim_end_matches('.');
            if !word.is_empty() {
                out.push((start, word));
            }
        }
    }
    out.sort_by_key(|&(pos, _)| pos);
    out
}

fn keyword_verdict(text: &str) -> Option<DetectionVerdict> {
    let prose = normalize_prose(text);

    let explicit = key_values(&prose, &["is_phishing", "is phishing"])
        .into_iter()
        .filter_map(|(pos, word)| match word {
            "true" | "yes" => Some((pos, true)),
            "false" | "no" => Some((pos, false)),
            _ => None,
        })
        .next_back();

    let decision = explicit.map(|(_, d)| d).or_else(|| {
        let negatives: Vec<(usize, usize)> = NEGATIVE_PHRASES
            .iter()
            .flat_map(|p| find_all(&prose, p))
            .collect();
        let positives = POSITIVE_PHRASES
            .iter()
            .flat_map(|p| find_all(&prose, p))
            .filter(|&(s, e)| !negatives.iter().any(|&(ns, ne)| ns < e && s < ne));
        let mut matches: Vec<(usize, bool)> = positives
            .map(|(s, _)| (s, true))
            .chain(negatives.iter().map(|&(s, _)| (s, false)))
            .collect();
        matches.sort_by_key(|&(pos, _)| pos);
        // the closing statement carries the verdict
        matches.last().map(|&(_, d)| d)
    })?;

    let mut verdict = DetectionVerdict::bare(decision);
    verdict.phishing_score = key_values(&prose, &["phishing_score", "phishing score"])
        .into_iter()
        .filter_map(|(_, word)| word.parse::<i64>().ok())
        .next_back();
    Some(verdict)
}

/// Recovers a verdict from free text, reporting which strategy decided.
pub fn extract_verdict(
    text: &str,
    schema: &ResponseSchema,
) -> Result<(DetectionVerdict, VerdictSource), ExtractError> {
    if let Some(verdict) = extract_embedded_json(text, schema) {
        return Ok((verdict, VerdictSource::EmbeddedJson));
    }
    keyword_verdict(text)
        .map(|v| (v, VerdictSource::Keyword))
        .ok_or(ExtractError::Unparseable)
}

/// Recovers a verdict from free text: an embedded JSON object carrying
/// `is_phishing` if there is one, otherwise a keyword table.
pub fn extract_json_fallback(
    text: &str,
    schema: &ResponseSchema,
) -> Result<DetectionVerdict, ExtractError> {
    extract_verdict(text, schema).map(|(v, _)| v)
}
