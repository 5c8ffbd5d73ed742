//! Transfer-encoding and charset decoding shared by headers and bodies.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;

use base64::alphabet;
use base64::engine::{DecodePaddingMode, GeneralPurpose, GeneralPurposeConfig};
use base64::Engine;
use encoding_rs::Encoding;

const LENIENT_BASE64: GeneralPurpose = GeneralPurpose::new(
    &alphabet::STANDARD,
    GeneralPurposeConfig::new()
        .with_decode_padding_mode(DecodePaddingMode::Indifferent)
        .with_decode_allow_trailing_bits(true),
);

fn is_base64_symbol(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'+' || b == b'/'
}

/// Decodes a base64 body, ignoring line breaks, padding and stray bytes.
///
/// Returns `None` only when the remaining symbols cannot form whole bytes.
pub(crate) fn decode_base64_lenient(input: &[u8]) -> Option<Vec<u8>> {
    let mut symbols: Vec<u8> = input
        .iter()
        .copied()
        .filter(|&b| is_base64_symbol(b))
        .collect();
    if symbols.len() % 4 == 1 {
        // a single dangling symbol carries fewer than 8 bits
        symbols.pop();
    }
    LENIENT_BASE64.decode(&symbols).ok()
}

/// Decodes the payload of a `B` encoded-word. Unlike bodies, any byte outside
/// the base64 alphabet (other than trailing padding) is an error.
pub(crate) fn decode_base64_word(payload: &str) -> Option<Vec<u8>> {
    let trimmed = payload.trim_end_matches('=');
    if !trimmed.bytes().all(is_base64_symbol) || trimmed.len() % 4 == 1 {
        return None;
    }
    LENIENT_BASE64.decode(trimmed).ok()
}

pub(crate) fn hex_digit(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'a'..=b'f' => Some(b - b'a' + 10),
        b'A'..=b'F' => Some(b - b'A' + 10),
        _ => None,
    }
}

/// Decodes a quoted-printable body. Soft line breaks are removed and
/// malformed escapes are kept verbatim.
pub(crate) fn decode_quoted_printable(input: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(input.len());
    let mut i = 0;
    while i < input.len() {
        let b = input[i];
        if b != b'=' {
            out.push(b);
            i += 1;
            continue;
        }
        // soft line break, possibly with trailing whitespace before the newline
        let mut j = i + 1;
        while j < input.len() && (input[j] == b' ' || input[j] == b'\t') {
            j += 1;
        }
        if input.get(j) == Some(&b'\n') {
            i = j + 1;
            continue;
        }
        if input.get(j) == Some(&b'\r') && input.get(j + 1) == Some(&b'\n') {
            i = j + 2;
            continue;
        }
        if j == input.len() {
            i = j;
            continue;
        }
        match (
            input.get(i + 1).copied().and_then(hex_digit),
            input.get(i + 2).copied().and_then(hex_digit),
        ) {
            (Some(hi), Some(lo)) => {
                out.push(hi << 4 | lo);
                i += 3;
            }
            _ => {
                out.push(b'=');
                i += 1;
            }
        }
    }
    out
}

/// Decodes the payload of a `Q` encoded-word (`_` is a space).
pub(crate) fn decode_q_word(payload: &str) -> Vec<u8> {
    let bytes = payload.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'_' => {
                out.push(b' ');
                i += 1;
            }
            b'=' => match (
                bytes.get(i + 1).copied().and_then(hex_digit),
                bytes.get(i + 2).copied().and_then(hex_digit),
            ) {
                (Some(hi), Some(lo)) => {
                    out.push(hi << 4 | lo);
                    i += 3;
                }
                _ => {
                    out.push(b'=');
                    i += 1;
                }
            },
            b => {
                out.push(b);
                i += 1;
            }
        }
    }
    out
}

/// Applies a Content-Transfer-Encoding. Unknown encodings pass through.
pub(crate) fn decode_transfer(body: &[u8], encoding: &str) -> Vec<u8> {
    match encoding {
        "base64" => decode_base64_lenient(body).unwrap_or_else(|| body.to_owned()),
        "quoted-printable" => decode_quoted_printable(body),
        _ => body.to_owned(),
    }
}

/// Converts bytes in the labelled charset to Unicode.
///
/// Unknown labels, and labels that WHATWG maps to the "replacement"
/// encoding, fall back to UTF-8 with U+FFFD substitution.
pub fn decode_charset(bytes: &[u8], label: &str) -> String {
    let label = label.trim().trim_matches('"');
    // RFC 2231 language suffix: charset*lang
    let label = label.split('*').next().unwrap_or_default();
    match Encoding::for_label(label.as_bytes()) {
        Some(enc) if enc != encoding_rs::REPLACEMENT => {
            let (text, _) = enc.decode_with_bom_removal(bytes);
            text.into_owned()
        }
        _ => String::from_utf8_lossy(bytes).into_owned(),
    }
}
