//! RFC 2047 encoded-word decoding for header values.

use alloc::string::String;
use alloc::vec::Vec;

use super::codec::{decode_base64_word, decode_charset, decode_q_word};

enum Segment<'a> {
    Literal(&'a str),
    Encoded { charset: &'a str, bytes: Vec<u8> },
}

/// Locates the next `=?charset?X?text?=` at or after `from`.
///
/// Returns `(start, end, charset, encoding, text)` with `end` exclusive.
fn next_word(input: &str, from: usize) -> Option<(usize, usize, &str, u8, &str)> {
    let mut search = from;
    while let Some(rel) = input[search..].find("=?") {
        let start = search + rel;
        if let Some(found) = word_at(input, start) {
            return Some(found);
        }
        search = start + 2;
    }
    None
}

fn word_at(input: &str, start: usize) -> Option<(usize, usize, &str, u8, &str)> {
    let rest = &input[start + 2..];
    let charset_len = rest.find('?')?;
    let charset = &rest[..charset_len];
    if charset.bytes().any(|b| b.is_ascii_whitespace()) {
        return None;
    }
    let rest = &rest[charset_len + 1..];
    let mut chars = rest.bytes();
    let encoding = chars.next()?.to_ascii_uppercase();
    if !(encoding == b'B' || encoding == b'Q') || chars.next()? != b'?' {
        return None;
    }
    let rest = &rest[2..];
    let text_len = rest.find("?=")?;
    let text = &rest[..text_len];
    if text.contains(['\n', '\r']) {
        return None;
    }
    let end = start + 2 + charset_len + 1 + 2 + text_len + 2;
    Some((start, end, charset, encoding, text))
}

/// Decodes every encoded-word in `raw` and passes other text through.
///
/// Whitespace (including folding) between two adjacent encoded-words is
/// dropped, and consecutive words sharing a charset are joined before the
/// charset conversion so multi-byte characters may straddle words. If any
/// `B` payload is not valid base64 the whole input is returned unchanged.
pub fn decode_header_value(raw: &str) -> String {
    if !raw.contains("=?") {
        return String::from(raw);
    }
    let mut segments: Vec<Segment<'_>> = Vec::new();
    let mut cursor = 0;
    while let Some((start, end, charset, encoding, text)) = next_word(raw, cursor) {
        if start > cursor {
            segments.push(Segment::Literal(&raw[cursor..start]));
        }
        let bytes = if encoding == b'B' {
            match decode_base64_word(text) {
                Some(bytes) => bytes,
                None => return String::from(raw),
            }
        } else {
            decode_q_word(text)
        };
        segments.push(Segment::Encoded { charset, bytes });
        cursor = end;
    }
    if cursor < raw.len() {
        segments.push(Segment::Literal(&raw[cursor..]));
    }

    let mut out = String::with_capacity(raw.len());
    let mut pending: Option<(&str, Vec<u8>)> = None;
    for (idx, segment) in segments.iter().enumerate() {
        match segment {
            Segment::Literal(text) => {
                let between_words = idx > 0
                    && matches!(segments.get(idx - 1), Some(Segment::Encoded { .. }))
                    && matches!(segments.get(idx + 1), Some(Segment::Encoded { .. }))
                    && text.chars().all(char::is_whitespace);
                if between_words {
                    continue;
                }
                if let Some((charset, bytes)) = pending.take() {
                    out.push_str(&decode_charset(&bytes, charset));
                }
                out.push_str(text);
            }
            Segment::Encoded { charset, bytes } => match &mut pending {
                Some((current, buf)) if current.eq_ignore_ascii_case(charset) => {
                    buf.extend_from_slice(bytes);
                }
                _ => {
                    if let Some((prev, buf)) = pending.take() {
                        out.push_str(&decode_charset(&buf, prev));
                    }
                    pending = Some((charset, bytes.clone()));
                }
            },
        }
    }
    if let Some((charset, bytes)) = pending {
        out.push_str(&decode_charset(&bytes, charset));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subject_example_decodes() {
        assert_eq!(
            decode_header_value("=?UTF-8?B?U3ViamVjdDogU2VjdXJpdHkgQWxlcnQh?="),
            "Subject: Security Alert!"
        );
    }

    #[test]
    fn plain_text_is_untouched() {
        assert_eq!(decode_header_value("Hello"), "Hello");
        assert_eq!(decode_header_value("a =? b"), "a =? b");
    }

    #[test]
    fn empty_charset_decodes_as_unknown() {
        assert_eq!(decode_header_value("=??q?abc?="), "abc");
    }

    #[test]
    fn latin1_q_word() {
        assert_eq!(decode_header_value("=?ISO-8859-1?Q?caf=E9?="), "café");
    }

    #[test]
    fn split_multibyte_sequence_across_words() {
        // "é" is C3 A9; each word carries one byte
        assert_eq!(
            decode_header_value("=?UTF-8?Q?caf=C3?= =?UTF-8?Q?=A9?="),
            "café"
        );
    }

    #[test]
    fn folded_words_join_without_whitespace() {
        assert_eq!(
            decode_header_value("=?UTF-8?Q?Security?=\n =?UTF-8?Q?_Alert?="),
            "Security Alert"
        );
    }

    #[test]
    fn bad_base64_falls_back_to_input() {
        let raw = "=?UTF-8?B?###?= tail";
        assert_eq!(decode_header_value(raw), raw);
    }
}
