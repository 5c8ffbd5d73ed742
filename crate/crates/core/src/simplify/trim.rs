//! Middle-out removal of content until a body fits its budget.

use alloc::string::String;
use alloc::vec::Vec;

use super::{Fit, SimplifyError};
use crate::html::{Document, NodeId, NodeKind, ROOT};

/// Smallest `k` in `0..=max` for which `fits(k)` holds, assuming `fits` is
/// monotone (removing content never increases the token count).
fn first_fit(max: usize, fits: impl Fn(usize) -> bool) -> Option<usize> {
    if fits(0) {
        return Some(0);
    }
    if !fits(max) {
        return None;
    }
    let (mut lo, mut hi) = (0, max);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// The order in which elements are dropped from the centre of the document.
///
/// Candidates are non-root nodes with no element children (plus any
/// top-level text or markup), kept in document order. Each round removes
/// the candidate at index `len / 2`; a parent whose last element child is
/// removed becomes a candidate itself.
pub(crate) fn center_removal_order(doc: &Document) -> Vec<NodeId> {
    let order = doc.preorder();
    let mut rank = alloc::vec![usize::MAX; doc.len()];
    for (i, &id) in order.iter().enumerate() {
        rank[id] = i;
    }
    let is_element = |id: NodeId| matches!(doc.node(id).kind, NodeKind::Element { .. });
    let mut live_element_children = alloc::vec![0usize; doc.len()];
    for &id in &order {
        live_element_children[id] = doc
            .node(id)
            .children
            .iter()
            .filter(|&&c| is_element(c))
            .count();
    }
    let is_candidate = |id: NodeId, live: &[usize]| {
        id != ROOT && live[id] == 0 && (is_element(id) || doc.node(id).parent == Some(ROOT))
    };
    let mut candidates: Vec<NodeId> = order
        .iter()
        .copied()
        .filter(|&id| is_candidate(id, &live_element_children))
        .collect();

    let mut removal = Vec::with_capacity(candidates.len());
    while !candidates.is_empty() {
        let victim = candidates.remove(candidates.len() / 2);
        removal.push(victim);
        let Some(parent) = doc.node(victim).parent else {
            continue;
        };
        if parent == ROOT || !is_element(victim) {
            continue;
        }
        live_element_children[parent] -= 1;
        if is_candidate(parent, &live_element_children) {
            let pos = candidates.partition_point(|&c| rank[c] < rank[parent]);
            candidates.insert(pos, parent);
        }
    }
    removal
}

/// Removes HTML elements from the centre of the document until the email
/// fits. Fails if even an empty body does not fit.
pub fn trim_html_center(html: &str, fit: &Fit<'_>) -> Result<String, SimplifyError> {
    if fit.admits(html) {
        return Ok(String::from(html));
    }
    let doc = Document::parse(html);
    let removal = center_removal_order(&doc);
    let mut removed_at = alloc::vec![usize::MAX; doc.len()];
    for (step, &id) in removal.iter().enumerate() {
        removed_at[id] = step;
    }
    let render = |k: usize| doc.serialize_filtered(|id| removed_at[id] >= k);
    let k =
        first_fit(removal.len(), |k| fit.admits(&render(k))).ok_or_else(|| fit.unreachable())?;
    Ok(render(k))
}

/// Prefix/suffix line counts kept after each number of removals.
fn plain_removal_plan(n: usize) -> Vec<(usize, usize)> {
    let mut plan = Vec::with_capacity(n + 1);
    plan.push((n, 0));
    if n == 0 {
        return plan;
    }
    let (mut prefix, mut suffix) = (n / 2, n - n / 2 - 1);
    plan.push((prefix, suffix));
    while prefix + suffix > 0 {
        if (prefix + suffix) / 2 < prefix {
            prefix -= 1;
        } else {
            suffix -= 1;
        }
        plan.push((prefix, suffix));
    }
    plan
}

/// Deletes the middle line (index `n / 2` of the remaining lines) until the
/// email fits, putting a single `marker` line where lines were removed.
pub fn trim_plain_middle(text: &str, fit: &Fit<'_>, marker: &str) -> Result<String, SimplifyError> {
    if fit.admits(text) {
        return Ok(String::from(text));
    }
    let lines: Vec<&str> = text.split('\n').collect();
    let n = lines.len();
    let plan = plain_removal_plan(n);
    let render = |k: usize| {
        let (prefix, suffix) = plan[k];
        let mut kept: Vec<&str> = Vec::with_capacity(prefix + suffix + 1);
        kept.extend_from_slice(&lines[..prefix]);
        kept.push(marker);
        kept.extend_from_slice(&lines[n - suffix..]);
        kept.join("\n")
    };
    match first_fit(n, |k| k > 0 && fit.admits(&render(k))) {
        Some(k) => Ok(render(k)),
        None if fit.admits("") => Ok(String::new()),
        None => Err(fit.unreachable()),
    }
}
