//! Parsing raw `.eml` messages into a decoded, sanitized structure.
//!
//! [`parse_eml`] never fails on structurally odd input: broken multiparts,
//! unknown charsets and bad transfer encodings all degrade to text. The only
//! error is a message with no header/body separator at all.

mod codec;
mod encoded_word;
mod mime;
mod sanitize;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use codec::decode_charset;
pub use encoded_word::decode_header_value;
pub use sanitize::{
    anonymize_recipients, extract_addresses, is_plausible_address, sanitize_headers, HeaderDenylist,
};

use mime::{
    looks_like_header, parse_header_block, parse_param_header, split_entity, split_multipart,
};

/// Nesting depth past which multipart containers are kept as raw text.
const MAX_MULTIPART_DEPTH: usize = 32;

/// The bytes of one `.eml` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEmail {
    bytes: Vec<u8>,
    source_path: Option<String>,
}

impl RawEmail {
    pub fn new(bytes: Vec<u8>) -> Result<Self, ParseError> {
        if bytes.is_empty() {
            return Err(ParseError::Empty);
        }
        Ok(Self {
            bytes,
            source_path: None,
        })
    }

    pub fn with_source(mut self, path: impl Into<String>) -> Self {
        self.source_path = Some(path.into());
        self
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn source_path(&self) -> Option<&str> {
        self.source_path.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("email is empty")]
    Empty,
    #[error("malformed message: no header/body boundary found")]
    MalformedMessage,
}

/// A header with both its decoded and its original (still folded) value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaderField {
    pub name: String,
    pub value: String,
    pub raw_value: String,
}

impl HeaderField {
    pub fn new(name: impl Into<String>, value: impl Into<String>) -> Self {
        let value = value.into();
        Self {
            name: name.into(),
            raw_value: value.clone(),
            value,
        }
    }

    pub fn is_named(&self, name: &str) -> bool {
        self.name.eq_ignore_ascii_case(name)
    }
}

/// Either decoded text (leaf) or child parts (multipart container).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartContent {
    Text(String),
    Multipart(Vec<BodyPart>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyPart {
    pub media_type: String,
    pub charset: String,
    pub transfer_encoding: String,
    pub content: PartContent,
}

impl BodyPart {
    /// A decoded leaf holding `text`.
    pub fn leaf(media_type: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            media_type: media_type.into(),
            charset: "utf-8".into(),
            transfer_encoding: "8bit".into(),
            content: PartContent::Text(text.into()),
        }
    }

    pub fn multipart(media_type: impl Into<String>, children: Vec<BodyPart>) -> Self {
        Self {
            media_type: media_type.into(),
            charset: String::new(),
            transfer_encoding: "7bit".into(),
            content: PartContent::Multipart(children),
        }
    }

    pub fn is_html(&self) -> bool {
        self.media_type == "text/html"
    }

    pub fn is_plain(&self) -> bool {
        self.media_type == "text/plain"
    }

    /// Leaf text, or `None` for a container.
    pub fn text(&self) -> Option<&str> {
        match &self.content {
            PartContent::Text(text) => Some(text),
            PartContent::Multipart(_) => None,
        }
    }
}

/// An attachment reduced to its name; the payload is never kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachmentRef {
    pub filename: String,
    pub declared_media_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedEmail {
    pub headers: Vec<HeaderField>,
    pub body: BodyPart,
    pub attachments: Vec<AttachmentRef>,
}

impl ParsedEmail {
    /// First header with the given name, compared case-insensitively.
    pub fn header(&self, name: &str) -> Option<&HeaderField> {
        self.headers.iter().find(|h| h.is_named(name))
    }
}

fn find_header<'a>(headers: &'a [HeaderField], name: &str) -> Option<&'a HeaderField> {
    headers.iter().find(|h| h.is_named(name))
}

fn degraded_leaf(bytes: &[u8]) -> BodyPart {
    BodyPart {
        media_type: "text/plain".into(),
        charset: "utf-8".into(),
        transfer_encoding: "7bit".into(),
        content: PartContent::Text(String::from_utf8_lossy(bytes).into_owned()),
    }
}

/// Builds the body tree for one entity. Attachments are pushed to
/// `attachments` and yield `None`.
fn parse_entity(
    headers: &[HeaderField],
    body: &[u8],
    depth: usize,
    attachments: &mut Vec<AttachmentRef>,
) -> Option<BodyPart> {
    let content_type = find_header(headers, "Content-Type")
        .map(|h| parse_param_header(&h.raw_value))
        .filter(|ct| ct.value.contains('/'))
        .unwrap_or_else(|| parse_param_header("text/plain"));
    let disposition = find_header(headers, "Content-Disposition")
        .map(|h| parse_param_header(&h.raw_value))
        .unwrap_or_default();
    let transfer_encoding = find_header(headers, "Content-Transfer-Encoding")
        .map(|h| mime::unfold(&h.raw_value).trim().to_ascii_lowercase())
        .unwrap_or_else(|| "7bit".to_string());
    let media_type = content_type.value.clone();

    if media_type.starts_with("multipart/") {
        let split = content_type
            .param("boundary")
            .filter(|b| !b.is_empty() && depth < MAX_MULTIPART_DEPTH)
            .and_then(|boundary| split_multipart(body, boundary));
        let Some(raw_parts) = split else {
            return Some(degraded_leaf(body));
        };
        let children = raw_parts
            .into_iter()
            .filter_map(|part| {
                let (part_headers, part_body) = split_part(part);
                parse_entity(&part_headers, part_body, depth + 1, attachments)
            })
            .collect();
        return Some(BodyPart {
            media_type,
            charset: String::new(),
            transfer_encoding,
            content: PartContent::Multipart(children),
        });
    }

    let is_text = media_type.starts_with("text/");
    let is_message = media_type == "message/rfc822";
    if disposition.value == "attachment" || !(is_text || is_message) {
        let filename = disposition
            .param("filename")
            .or_else(|| content_type.param("name"))
            .map(decode_header_value)
            .unwrap_or_default();
        attachments.push(AttachmentRef {
            filename,
            declared_media_type: media_type,
        });
        return None;
    }

    let decoded = codec::decode_transfer(body, &transfer_encoding);
    let charset = content_type
        .param("charset")
        .unwrap_or("us-ascii")
        .to_string();
    let text = decode_charset(&decoded, &charset);
    Some(BodyPart {
        // an embedded message is presented to the reader as text
        media_type: if is_message {
            "text/plain".into()
        } else {
            media_type
        },
        charset,
        transfer_encoding,
        content: PartContent::Text(text),
    })
}

/// Splits a multipart child into headers and body. A child without a blank
/// line is all headers if it starts like one, otherwise all body.
fn split_part(part: &[u8]) -> (Vec<HeaderField>, &[u8]) {
    match split_entity(part) {
        Some((head, body)) => (parse_header_block(head), body),
        None => {
            let first_line = part.split(|&b| b == b'\n').next().unwrap_or_default();
            if looks_like_header(first_line) {
                (parse_header_block(part), &[])
            } else {
                (Vec::new(), part)
            }
        }
    }
}

/// Parses an RFC 5322 message, decoding headers, bodies and charsets.
pub fn parse_eml(raw: &RawEmail) -> Result<ParsedEmail, ParseError> {
    let (head, body) = split_entity(raw.bytes()).ok_or(ParseError::MalformedMessage)?;
    let headers = parse_header_block(head);
    let mut attachments = Vec::new();
    let body = parse_entity(&headers, body, 0, &mut attachments)
        .unwrap_or_else(|| BodyPart::multipart("multipart/mixed", Vec::new()));
    Ok(ParsedEmail {
        headers,
        body,
        attachments,
    })
}

/// Leaf parts in depth-first document order; containers are skipped.
pub fn flatten_body_parts(email: &ParsedEmail) -> Vec<&BodyPart> {
    fn walk<'a>(part: &'a BodyPart, out: &mut Vec<&'a BodyPart>) {
        match &part.content {
            PartContent::Text(_) => out.push(part),
            PartContent::Multipart(children) => children.iter().for_each(|c| walk(c, out)),
        }
    }
    let mut out = Vec::new();
    walk(&email.body, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ParsedEmail {
        parse_eml(&RawEmail::new(text.as_bytes().to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn minimal_message() {
        let email = parse("From: a@b\r\n\r\nhi");
        assert_eq!(email.headers.len(), 1);
        assert_eq!(email.headers[0].value, "a@b");
        let leaves = flatten_body_parts(&email);
        assert_eq!(leaves.len(), 1);
        assert!(leaves[0].is_plain());
        assert_eq!(leaves[0].text(), Some("hi"));
    }

    #[test]
    fn empty_bytes_rejected() {
        assert_eq!(RawEmail::new(Vec::new()), Err(ParseError::Empty));
    }

    #[test]
    fn missing_boundary_is_malformed() {
        let raw = RawEmail::new(b"From: a@b\r\nSubject: x".to_vec()).unwrap();
        assert_eq!(parse_eml(&raw), Err(ParseError::MalformedMessage));
    }

    #[test]
    fn encoded_subject_is_decoded() {
        let email = parse("Subject: =?UTF-8?B?U3ViamVjdDogU2VjdXJpdHkgQWxlcnQh?=\n\nbody");
        assert_eq!(
            email.header("subject").unwrap().value,
            "Subject: Security Alert!"
        );
    }

    #[test]
    fn multipart_without_boundary_degrades() {
        let email = parse("Content-Type: multipart/mixed\n\nraw text");
        assert_eq!(email.body, degraded_leaf(b"raw text"));
    }

    #[test]
    fn nested_multipart_routes_attachment() {
        let text = "Content-Type: multipart/mixed; boundary=outer\n\n\
--outer\n\
Content-Type: multipart/alternative; boundary=inner\n\n\
--inner\n\
Content-Type: text/plain\n\nplain\n\
--inner\n\
Content-Type: text/html\n\n<p>html</p>\n\
--inner--\n\
--outer\n\
Content-Type: application/pdf; name=\"invoice.pdf\"\n\
Content-Transfer-Encoding: base64\n\nJVBERi0xLjQK\n\
--outer--\n";
        let email = parse(text);
        let leaves = flatten_body_parts(&email);
        assert_eq!(leaves.len(), 2);
        assert_eq!(leaves[0].text(), Some("plain"));
        assert_eq!(leaves[1].text(), Some("<p>html</p>"));
        assert_eq!(
            email.attachments,
            [AttachmentRef {
                filename: "invoice.pdf".into(),
                declared_media_type: "application/pdf".into()
            }]
        );
    }

    #[test]
    fn text_attachment_is_not_body() {
        let text = "Content-Type: multipart/mixed; boundary=b\n\n--b\n\nbody\n--b\n\
Content-Type: text/plain\nContent-Disposition: attachment; filename=notes.txt\n\nsecret\n--b--\n";
        let email = parse(text);
        assert_eq!(flatten_body_parts(&email).len(), 1);
        assert_eq!(email.attachments[0].filename, "notes.txt");
    }

    #[test]
    fn quoted_printable_latin1_body() {
        let email = parse(
            "Content-Type: text/plain; charset=iso-8859-1\n\
Content-Transfer-Encoding: quoted-printable\n\ncaf=E9 =\nau lait",
        );
        assert_eq!(flatten_body_parts(&email)[0].text(), Some("café au lait"));
    }

    #[test]
    fn top_level_attachment_leaves_empty_body() {
        let email = parse("Content-Type: image/png\n\n\u{1}\u{2}");
        assert!(flatten_body_parts(&email).is_empty());
        assert_eq!(email.attachments.len(), 1);
    }
}
