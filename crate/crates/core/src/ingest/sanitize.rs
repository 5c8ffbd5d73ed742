//! Header removal and recipient anonymization.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ParsedEmail;

/// Headers that survive sanitization regardless of the denylist.
const PROTECTED: &[&str] = &[
    "From",
    "To",
    "Cc",
    "Reply-To",
    "Return-Path",
    "Subject",
    "Date",
    "Message-ID",
    "Received",
    "Authentication-Results",
    "Content-Type",
];

const DEFAULT_PATTERNS: &[&str] = &["X-*", "DKIM-Signature", "ARC-*"];

const RECIPIENT_HEADERS: &[&str] = &["To", "Cc", "Delivered-To"];

/// Case-insensitive glob patterns (`*` and `?`) naming headers to drop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderDenylist {
    patterns: Vec<String>,
}

impl Default for HeaderDenylist {
    fn default() -> Self {
        Self {
            patterns: DEFAULT_PATTERNS.iter().map(|p| p.to_string()).collect(),
        }
    }
}

impl HeaderDenylist {
    /// The default list plus `extra` patterns.
    pub fn with_extra<I, S>(extra: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list = Self::default();
        list.patterns.extend(extra.into_iter().map(Into::into));
        list
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn denies(&self, name: &str) -> bool {
        if PROTECTED.iter().any(|p| p.eq_ignore_ascii_case(name)) {
            return false;
        }
        // the X- rule is not configurable
        if name.len() >= 2 && name[..2].eq_ignore_ascii_case("x-") {
            return true;
        }
        self.patterns
            .iter()
            .any(|p| glob_match(p.as_bytes(), name.as_bytes()))
    }
}

fn glob_match(pattern: &[u8], name: &[u8]) -> bool {
    let (mut p, mut n) = (0, 0);
    let mut backtrack: Option<(usize, usize)> = None;
    while n < name.len() {
        match pattern.get(p) {
            Some(b'*') => {
                backtrack = Some((p, n));
                p += 1;
            }
            Some(&c) if c == b'?' || c.eq_ignore_ascii_case(&name[n]) => {
                p += 1;
                n += 1;
            }
            _ => match backtrack {
                Some((bp, bn)) => {
                    p = bp + 1;
                    n = bn + 1;
                    backtrack = Some((bp, bn + 1));
                }
                None => return false,
            },
        }
    }
    pattern[p..].iter().all(|&c| c == b'*')
}

/// Drops `X-*`, DKIM/ARC signatures and anything else the denylist names,
/// keeping the remaining headers in their original order.
pub fn sanitize_headers(mut email: ParsedEmail, denylist: &HeaderDenylist) -> ParsedEmail {
    email.headers.retain(|h| !denylist.denies(&h.name));
    email
}

/// Splits an address-list header into bare addresses, dropping display
/// names, comments and group labels.
pub fn extract_addresses(value: &str) -> Vec<String> {
    let mut elements: Vec<String> = Vec::new();
    let mut current = String::new();
    let (mut quoted, mut angle, mut comment) = (false, false, 0usize);
    for ch in value.chars() {
        match ch {
            '"' if comment == 0 => quoted = !quoted,
            '(' if !quoted => comment += 1,
            ')' if !quoted && comment > 0 => {
                comment -= 1;
                continue;
            }
            '<' if !quoted && comment == 0 => angle = true,
            '>' if !quoted && comment == 0 => angle = false,
            ',' | ';' if !quoted && !angle && comment == 0 => {
                elements.push(core::mem::take(&mut current));
                continue;
            }
            // group label "name:" before its members
            ':' if !quoted && !angle && comment == 0 => {
                current.clear();
                continue;
            }
            _ => {}
        }
        if comment == 0 && ch != '(' {
            current.push(ch);
        }
    }
    elements.push(current);

    elements
        .iter()
        .filter_map(|element| {
            if let (Some(open), Some(close)) = (element.find('<'), element.rfind('>')) {
                if open < close {
                    let inner = element[open + 1..close].trim();
                    return (!inner.is_empty()).then(|| inner.to_string());
                }
            }
            element
                .split(|c: char| c.is_whitespace() || c == '"')
                .find(|tok| tok.contains('@'))
                .map(|tok| tok.trim_matches(|c| c == '<' || c == '>').to_string())
        })
        .collect()
}

/// Rough syntactic check for `local@domain`.
pub fn is_plausible_address(address: &str) -> bool {
    match address.split_once('@') {
        Some((local, domain)) => {
            !local.is_empty()
                && !domain.is_empty()
                && !domain.contains('@')
                && !address
                    .chars()
                    .any(|c| c.is_whitespace() || c == '<' || c == '>' || c == ',')
        }
        None => false,
    }
}

fn replace_ascii_case_insensitive(haystack: &str, needle: &str, replacement: &str) -> String {
    if needle.is_empty() {
        return haystack.to_string();
    }
    let lower_hay = haystack.to_ascii_lowercase();
    let lower_needle = needle.to_ascii_lowercase();
    let mut out = String::with_capacity(haystack.len());
    let mut cursor = 0;
    while let Some(rel) = lower_hay[cursor..].find(&lower_needle) {
        let at = cursor + rel;
        out.push_str(&haystack[cursor..at]);
        out.push_str(replacement);
        cursor = at + needle.len();
    }
    out.push_str(&haystack[cursor..]);
    out
}

/// Replaces every To/Cc/Delivered-To recipient with the single `dummy`
/// address. Occurrences of those recipient addresses elsewhere in the
/// header block (e.g. `Received: ... for <alice@...>`) are replaced too.
pub fn anonymize_recipients(mut email: ParsedEmail, dummy: &str) -> ParsedEmail {
    let mut originals: Vec<String> = Vec::new();
    for header in &mut email.headers {
        if !RECIPIENT_HEADERS.iter().any(|n| header.is_named(n)) {
            continue;
        }
        let addresses = extract_addresses(&header.value);
        if addresses.is_empty() {
            continue;
        }
        originals.extend(addresses);
        extract_addresses(&header.raw_value)
            .into_iter()
            .for_each(|a| originals.push(a));
        header.value = dummy.to_string();
        header.raw_value = dummy.to_string();
    }
    originals.retain(|a| !a.eq_ignore_ascii_case(dummy));
    originals.sort();
    originals.dedup();
    // longest first so a short address never splits a longer one
    originals.sort_by_key(|a| core::cmp::Reverse(a.len()));
    if originals.is_empty() {
        return email;
    }
    for header in &mut email.headers {
        for address in &originals {
            header.value = replace_ascii_case_insensitive(&header.value, address, dummy);
            header.raw_value = replace_ascii_case_insensitive(&header.raw_value, address, dummy);
        }
    }
    email
}
