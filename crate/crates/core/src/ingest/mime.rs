//! Low-level RFC 5322 / MIME structure: header blocks, parameters and
//! multipart boundaries.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::codec::{decode_charset, hex_digit};
use super::{decode_header_value, HeaderField};

/// One physical line: `(start, content_end, next_line_start)`. `content_end`
/// excludes the line terminator (`\n` or `\r\n`).
pub(crate) fn lines(bytes: &[u8]) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
    let mut pos = 0;
    core::iter::from_fn(move || {
        if pos >= bytes.len() {
            return None;
        }
        let start = pos;
        let (content_end, next) = match bytes[pos..].iter().position(|&b| b == b'\n') {
            Some(rel) => {
                let nl = pos + rel;
                let end = if nl > start && bytes[nl - 1] == b'\r' {
                    nl - 1
                } else {
                    nl
                };
                (end, nl + 1)
            }
            None => (bytes.len(), bytes.len()),
        };
        pos = next;
        Some((start, content_end, next))
    })
}

/// Splits an entity into its header bytes and body bytes at the first empty
/// line. Returns `None` when there is no empty line.
pub(crate) fn split_entity(bytes: &[u8]) -> Option<(&[u8], &[u8])> {
    for (start, end, next) in lines(bytes) {
        if start == end {
            return Some((&bytes[..start], &bytes[next..]));
        }
    }
    None
}

fn valid_header_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_graphic() && b != b':')
}

/// True when `line` has the shape `Name: value`.
pub(crate) fn looks_like_header(line: &[u8]) -> bool {
    match line.iter().position(|&b| b == b':') {
        Some(colon) => core::str::from_utf8(&line[..colon]).is_ok_and(valid_header_name),
        None => false,
    }
}

/// Parses a header block. Continuation lines are kept on their own line
/// (joined with `\n`) so folding survives decoding. Lines that are neither
/// headers nor continuations are dropped.
pub(crate) fn parse_header_block(block: &[u8]) -> Vec<HeaderField> {
    let text = String::from_utf8_lossy(block);
    let mut raw: Vec<(String, String)> = Vec::new();
    for line in text.split('\n') {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        if line.starts_with([' ', '\t']) {
            if let Some((_, value)) = raw.last_mut() {
                value.push('\n');
                value.push_str(line.trim_end());
            }
            continue;
        }
        let Some((name, value)) = line.split_once(':') else {
            continue;
        };
        if !valid_header_name(name) {
            continue;
        }
        raw.push((name.to_string(), value.trim().to_string()));
    }
    raw.into_iter()
        .map(|(name, raw_value)| HeaderField {
            value: decode_header_value(&raw_value),
            name,
            raw_value,
        })
        .collect()
}

/// Replaces folding line breaks with nothing, leaving the original
/// whitespace that followed them.
pub(crate) fn unfold(value: &str) -> String {
    value.replace(['\r', '\n'], "")
}

/// A parsed `type/subtype; key=value` header such as Content-Type or
/// Content-Disposition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct ParamHeader {
    pub value: String,
    pub params: Vec<(String, String)>,
}

impl ParamHeader {
    pub fn param(&self, name: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(key, _)| key.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

fn split_params(input: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut in_quotes = false;
    let mut escaped = false;
    let mut start = 0;
    for (idx, ch) in input.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match ch {
            '\\' if in_quotes => escaped = true,
            '"' => in_quotes = !in_quotes,
            ';' if !in_quotes => {
                out.push(&input[start..idx]);
                start = idx + 1;
            }
            _ => {}
        }
    }
    out.push(&input[start..]);
    out
}

fn unquote(value: &str) -> String {
    let value = value.trim();
    match value.strip_prefix('"') {
        Some(inner) => {
            let inner = inner.strip_suffix('"').unwrap_or(inner);
            let mut out = String::with_capacity(inner.len());
            let mut chars = inner.chars();
            while let Some(c) = chars.next() {
                if c == '\\' {
                    if let Some(next) = chars.next() {
                        out.push(next);
                    }
                } else {
                    out.push(c);
                }
            }
            out
        }
        None => value.to_string(),
    }
}

fn percent_decode(input: &str) -> Vec<u8> {
    let bytes = input.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if let (Some(hi), Some(lo)) = (
                bytes.get(i + 1).copied().and_then(hex_digit),
                bytes.get(i + 2).copied().and_then(hex_digit),
            ) {
                out.push(hi << 4 | lo);
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    out
}

/// Parses a parameterised header value, including RFC 2231 extended and
/// continued parameters (`name*=utf-8''...`, `name*0=...`).
pub(crate) fn parse_param_header(raw: &str) -> ParamHeader {
    let unfolded = unfold(raw);
    let mut pieces = split_params(&unfolded).into_iter();
    let value = pieces
        .next()
        .unwrap_or_default()
        .trim()
        .to_ascii_lowercase();

    // (name, section, extended, value)
    let mut sections: Vec<(String, u32, bool, String)> = Vec::new();
    for piece in pieces {
        let Some((key, val)) = piece.split_once('=') else {
            continue;
        };
        let key = key.trim().to_ascii_lowercase();
        if key.is_empty() {
            continue;
        }
        let (key, extended) = match key.strip_suffix('*') {
            Some(k) => (k.to_string(), true),
            None => (key, false),
        };
        let (name, section) = match key.split_once('*') {
            Some((n, idx)) => match idx.parse::<u32>() {
                Ok(idx) => (n.to_string(), idx),
                Err(_) => (key.clone(), 0),
            },
            None => (key, 0),
        };
        sections.push((name, section, extended, unquote(val)));
    }

    let mut params: Vec<(String, String)> = Vec::new();
    let mut names: Vec<&str> = Vec::new();
    for (name, ..) in &sections {
        if !names.contains(&name.as_str()) {
            names.push(name);
        }
    }
    for name in names {
        let mut parts: Vec<&(String, u32, bool, String)> =
            sections.iter().filter(|(n, ..)| n == name).collect();
        parts.sort_by_key(|(_, idx, ..)| *idx);
        let any_extended = parts.iter().any(|(_, _, ext, _)| *ext);
        let joined = if any_extended {
            let mut charset = String::new();
            let mut bytes = Vec::new();
            for (i, (_, _, ext, val)) in parts.iter().enumerate() {
                if *ext {
                    let mut payload = val.as_str();
                    if i == 0 {
                        let mut fields = val.splitn(3, '\'');
                        if let (Some(cs), Some(_lang), Some(rest)) =
                            (fields.next(), fields.next(), fields.next())
                        {
                            charset = cs.to_string();
                            payload = rest;
                        }
                    }
                    bytes.extend(percent_decode(payload));
                } else {
                    bytes.extend_from_slice(val.as_bytes());
                }
            }
            decode_charset(
                &bytes,
                if charset.is_empty() {
                    "utf-8"
                } else {
                    &charset
                },
            )
        } else {
            parts.iter().map(|(.., v)| v.as_str()).collect::<String>()
        };
        params.push((name.to_string(), joined));
    }
    ParamHeader { value, params }
}

/// Splits a multipart body on `--boundary` delimiter lines. Returns `None`
/// if no delimiter line is present at all. A missing close delimiter ends
/// the last part at the end of input.
pub(crate) fn split_multipart<'a>(body: &'a [u8], boundary: &str) -> Option<Vec<&'a [u8]>> {
    let delimiter = {
        let mut d = Vec::with_capacity(boundary.len() + 2);
        d.extend_from_slice(b"--");
        d.extend_from_slice(boundary.as_bytes());
        d
    };
    let mut parts = Vec::new();
    let mut current_start: Option<usize> = None;
    let mut seen = false;
    // end of the previous line's content, so the terminator before a
    // delimiter is not part of the body
    let mut prev_content_end = 0;
    for (start, end, next) in lines(body) {
        let line = &body[start..end];
        if let Some(rest) = line.strip_prefix(delimiter.as_slice()) {
            let closing = rest.starts_with(b"--");
            if closing || rest.iter().all(|b| b.is_ascii_whitespace()) {
                seen = true;
                if let Some(part_start) = current_start.take() {
                    let part_end = prev_content_end.max(part_start);
                    parts.push(&body[part_start..part_end]);
                }
                if closing {
                    return Some(parts);
                }
                current_start = Some(next);
                prev_content_end = next;
                continue;
            }
        }
        prev_content_end = end;
    }
    if !seen {
        return None;
    }
    if let Some(part_start) = current_start {
        parts.push(&body[part_start.min(body.len())..]);
    }
    Some(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn header_block_folding_and_junk() {
        let block = b"From mbox-line\r\nSubject: one\r\n  two\r\nnot a header\r\nX-A: 1\r\n";
        let headers = parse_header_block(block);
        assert_eq!(headers.len(), 2);
        assert_eq!(headers[0].name, "Subject");
        assert_eq!(headers[0].raw_value, "one\n  two");
        assert_eq!(headers[1].value, "1");
    }

    #[test]
    fn param_header_quoted_and_extended() {
        let ct = parse_param_header("Text/HTML; charset=\"UTF-8\"; name*=utf-8''caf%C3%A9.html");
        assert_eq!(ct.value, "text/html");
        assert_eq!(ct.param("charset"), Some("UTF-8"));
        assert_eq!(ct.param("NAME"), Some("café.html"));
    }

    #[test]
    fn param_header_continuations() {
        let cd = parse_param_header("attachment; filename*0=\"long\"; filename*1=\"name.pdf\"");
        assert_eq!(cd.value, "attachment");
        assert_eq!(cd.param("filename"), Some("longname.pdf"));
    }

    #[test]
    fn quoted_semicolon_stays_in_value() {
        let ct = parse_param_header("multipart/mixed; boundary=\"a;b\"");
        assert_eq!(ct.param("boundary"), Some("a;b"));
    }

    #[test]
    fn multipart_split() {
        let body = b"preamble\r\n--XX\r\nA: 1\r\n\r\none\r\n--XX\r\n\r\ntwo\r\n--XX--\r\nepilogue";
        let parts = split_multipart(body, "XX").unwrap();
        assert_eq!(parts, vec![&b"A: 1\r\n\r\none"[..], &b"\r\ntwo"[..]]);
        assert!(split_multipart(b"no delimiters", "XX").is_none());
    }

    #[test]
    fn multipart_without_close() {
        let parts = split_multipart(b"--b\n\nonly\n", "b").unwrap();
        assert_eq!(parts, vec![&b"\nonly\n"[..]]);
    }

    #[test]
    fn split_entity_finds_first_blank_line() {
        let (h, b) = split_entity(b"A: 1\n\nbody\n\nmore").unwrap();
        assert_eq!(h, b"A: 1\n");
        assert_eq!(b, b"body\n\nmore");
        assert!(split_entity(b"A: 1\nB: 2").is_none());
    }
}
