//! Markup pruning applied to HTML bodies before any content is dropped.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::html::{Document, NodeId, NodeKind, ROOT};

pub const DEFAULT_KEEP_ATTRIBUTES: &[&str] =
    &["src", "href", "alt", "title", "name", "id", "class"];

const REMOVED_ELEMENTS: &[&str] = &["script", "style"];
const UNWRAPPED_ELEMENTS: &[&str] = &["font", "strong", "b"];
const URL_REMAINDER_CHARS: usize = 10;

/// Shortens a URL to its scheme and authority plus the first ten
/// characters after the authority's delimiter.
///
/// `https://evil.example/abcdefghijKLMNOP?q=1` becomes
/// `https://evil.example/abcdefghij`. `data:` URLs keep ten characters
/// after the scheme; URLs without an authority are returned unchanged.
pub fn truncate_url(url: &str) -> String {
    let trimmed = url.trim();
    let authority_start = if let Some(idx) = trimmed.find("://") {
        let scheme = &trimmed[..idx];
        let valid_scheme = scheme
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic())
            && scheme
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
        if !valid_scheme {
            return url.to_string();
        }
        idx + 3
    } else if trimmed.starts_with("//") {
        2
    } else if trimmed.len() >= 5 && trimmed[..5].eq_ignore_ascii_case("data:") {
        return keep_chars(trimmed, 5, URL_REMAINDER_CHARS);
    } else {
        return url.to_string();
    };
    let rest = &trimmed[authority_start..];
    let authority_len = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let remainder_start = authority_start + authority_len;
    if remainder_start == trimmed.len() {
        return trimmed.to_string();
    }
    // keep the delimiter itself plus ten characters
    keep_chars(trimmed, remainder_start + 1, URL_REMAINDER_CHARS)
}

fn keep_chars(s: &str, prefix_len: usize, count: usize) -> String {
    let tail = &s[prefix_len..];
    let cut = tail
        .char_indices()
        .nth(count)
        .map_or(tail.len(), |(i, _)| i);
    s[..prefix_len + cut].to_string()
}

fn has_visible_text(text: &str) -> bool {
    !text.trim().is_empty()
}

/// Applies the five pruning rules in order:
///
/// 1. drop comments, declarations, `script` and `style`;
/// 2. drop attributes not in `keep_attributes`;
/// 3. drop elements with no text unless they (or a descendant) carry
///    `src` or `href`;
/// 4. unwrap `font`, `strong` and `b`;
/// 5. shorten `img[src]` and `a[href]` with [`truncate_url`].
pub fn prune_html<S: AsRef<str>>(html: &str, keep_attributes: &[S]) -> String {
    let mut doc = Document::parse(html);

    // rule 1
    for id in doc.preorder() {
        let remove = match &doc.node(id).kind {
            NodeKind::Comment(_) | NodeKind::Declaration(_) => true,
            NodeKind::Element { name, .. } => REMOVED_ELEMENTS.contains(&name.as_str()),
            _ => false,
        };
        if remove {
            doc.detach(id);
        }
    }

    // rule 2
    let order = doc.preorder();
    for &id in &order {
        if let NodeKind::Element { attrs, .. } = &mut doc.node_mut(id).kind {
            attrs.retain(|a| {
                keep_attributes
                    .iter()
                    .any(|k| k.as_ref().eq_ignore_ascii_case(&a.name))
            });
        }
    }

    // rule 3: a post-order pass computing "has text or link" per node
    let mut worth_keeping = alloc::vec![false; doc.len()];
    for &id in order.iter().rev() {
        let node = doc.node(id);
        worth_keeping[id] = match &node.kind {
            NodeKind::Text(text) => has_visible_text(text),
            NodeKind::Element { .. } => {
                doc.attribute(id, "src").is_some()
                    || doc.attribute(id, "href").is_some()
                    || node.children.iter().any(|&c| worth_keeping[c])
            }
            _ => true,
        };
    }
    let empty: Vec<NodeId> = order
        .iter()
        .copied()
        .filter(|&id| matches!(doc.node(id).kind, NodeKind::Element { .. }) && !worth_keeping[id])
        .collect();
    for id in empty {
        doc.detach(id);
    }

    // rule 4
    for id in doc.preorder() {
        if doc
            .element_name(id)
            .is_some_and(|n| UNWRAPPED_ELEMENTS.contains(&n))
        {
            doc.unwrap_node(id);
        }
    }

    // rule 5
    for id in doc.preorder() {
        let target = match doc.element_name(id) {
            Some("img") => "src",
            Some("a") => "href",
            _ => continue,
        };
        if let NodeKind::Element { attrs, .. } = &mut doc.node_mut(id).kind {
            for attr in attrs.iter_mut().filter(|a| a.name == target) {
                if let Some(value) = &attr.value {
                    attr.value = Some(truncate_url(value));
                }
            }
        }
    }

    debug_assert!(doc.node(ROOT).parent.is_none());
    doc.serialize()
}
