//! A small error-recovering HTML parser and serializer.
//!
//! It is not a conforming HTML5 tree builder. It keeps source text verbatim
//! (entities are not decoded), lowercases tag and attribute names, and
//! closes unmatched elements at end of input. That is enough to prune email
//! markup and write it back out predictably.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub type NodeId = usize;

/// Index of the synthetic fragment root in every [`Document`].
pub const ROOT: NodeId = 0;

const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

const RAW_TEXT_ELEMENTS: &[&str] = &["script", "style"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    /// `None` for a bare attribute such as `<input disabled>`.
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Root,
    Element {
        name: String,
        attrs: Vec<Attribute>,
    },
    Text(String),
    Comment(String),
    /// `<!DOCTYPE ...>`, `<![CDATA[...]]>` or `<?...?>`, stored without the
    /// angle brackets.
    Declaration(String),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

/// An arena of nodes rooted at [`ROOT`].
#[derive(Debug, Clone)]
pub struct Document {
    nodes: Vec<Node>,
}

pub fn is_void(name: &str) -> bool {
    VOID_ELEMENTS.contains(&name)
}

impl Document {
    pub fn parse(input: &str) -> Self {
        Parser::new(input).run()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }

    pub fn element_name(&self, id: NodeId) -> Option<&str> {
        match &self.nodes[id].kind {
            NodeKind::Element { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn attribute(&self, id: NodeId, attr: &str) -> Option<&str> {
        match &self.nodes[id].kind {
            NodeKind::Element { attrs, .. } => attrs
                .iter()
                .find(|a| a.name == attr)
                .and_then(|a| a.value.as_deref()),
            _ => None,
        }
    }

    fn push(&mut self, parent: NodeId, kind: NodeKind) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            kind,
            parent: Some(parent),
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Detaches `id` (and so its subtree) from its parent.
    pub fn detach(&mut self, id: NodeId) {
        if let Some(parent) = self.nodes[id].parent.take() {
            self.nodes[parent].children.retain(|&c| c != id);
        }
    }

    /// Replaces `id` in its parent with its own children.
    pub fn unwrap_node(&mut self, id: NodeId) {
        let Some(parent) = self.nodes[id].parent.take() else {
            return;
        };
        let children = core::mem::take(&mut self.nodes[id].children);
        for &child in &children {
            self.nodes[child].parent = Some(parent);
        }
        let siblings = &mut self.nodes[parent].children;
        if let Some(pos) = siblings.iter().position(|&c| c == id) {
            siblings.splice(pos..=pos, children);
        }
    }

    /// Attached nodes in document (pre-)order, starting with the root.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = alloc::vec![ROOT];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    pub fn serialize(&self) -> String {
        self.serialize_filtered(|_| true)
    }

    /// Serializes attached nodes, skipping any subtree whose root fails `keep`.
    pub fn serialize_filtered(&self, keep: impl Fn(NodeId) -> bool) -> String {
        let mut out = String::new();
        self.write_children(ROOT, &mut out, &keep);
        out
    }

    fn write_children(&self, id: NodeId, out: &mut String, keep: &impl Fn(NodeId) -> bool) {
        for &child in &self.nodes[id].children {
            if keep(child) {
                self.write_node(child, out, keep);
            }
        }
    }

    fn write_node(&self, id: NodeId, out: &mut String, keep: &impl Fn(NodeId) -> bool) {
        match &self.nodes[id].kind {
            NodeKind::Root => self.write_children(id, out, keep),
            NodeKind::Text(text) => out.push_str(text),
            NodeKind::Comment(text) => {
                out.push_str("<!--");
                out.push_str(text);
                out.push_str("-->");
            }
            NodeKind::Declaration(text) => {
                out.push('<');
                out.push_str(text);
                out.push('>');
            }
            NodeKind::Element { name, attrs } => {
                out.push('<');
                out.push_str(name);
                for attr in attrs {
                    out.push(' ');
                    out.push_str(&attr.name);
                    if let Some(value) = &attr.value {
                        out.push_str("=\"");
                        out.push_str(&value.replace('"', "&quot;"));
                        out.push('"');
                    }
                }
                out.push('>');
                if is_void(name) {
                    return;
                }
                self.write_children(id, out, keep);
                out.push_str("</");
                out.push_str(name);
                out.push('>');
            }
        }
    }
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
    doc: Document,
    open: Vec<NodeId>,
    text_start: usize,
}

fn is_name_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'-' || b == b':' || b == b'_' || b == b'.'
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        let doc = Document {
            nodes: alloc::vec![Node {
                kind: NodeKind::Root,
                parent: None,
                children: Vec::new()
            }],
        };
        Self {
            input,
            pos: 0,
            doc,
            open: alloc::vec![ROOT],
            text_start: 0,
        }
    }

    fn current(&self) -> NodeId {
        *self.open.last().unwrap_or(&ROOT)
    }

    fn flush_text(&mut self, end: usize) {
        if end > self.text_start {
            let text = &self.input[self.text_start..end];
            let parent = self.current();
            // merge with a preceding text sibling
            if let Some(&last) = self.doc.nodes[parent].children.last() {
                if let NodeKind::Text(prev) = &mut self.doc.nodes[last].kind {
                    prev.push_str(text);
                    return;
                }
            }
            self.doc.push(parent, NodeKind::Text(text.to_string()));
        }
    }

    fn run(mut self) -> Document {
        let bytes = self.input.as_bytes();
        while let Some(rel) = self.input[self.pos..].find('<') {
            let lt = self.pos + rel;
            let next = bytes.get(lt + 1).copied();
            let consumed = match next {
                Some(b'!') | Some(b'?') => self.markup_declaration(lt),
                Some(b'/') => self.end_tag(lt),
                Some(b) if b.is_ascii_alphabetic() => self.start_tag(lt),
                _ => None,
            };
            match consumed {
                Some(end) => {
                    self.pos = end;
                    self.text_start = end;
                }
                None => self.pos = lt + 1,
            }
        }
        self.flush_text(self.input.len());
        self.doc
    }

    fn markup_declaration(&mut self, lt: usize) -> Option<usize> {
        let rest = &self.input[lt..];
        if let Some(body) = rest.strip_prefix("<!--") {
            self.flush_text(lt);
            let (text, end) = match body.find("-->") {
                Some(close) => (&body[..close], lt + 4 + close + 3),
                None => (body, self.input.len()),
            };
            let parent = self.current();
            self.doc.push(parent, NodeKind::Comment(text.to_string()));
            return Some(end);
        }
        let close = if rest.starts_with("<![CDATA[") {
            rest.find("]]>").map(|i| i + 2)
        } else {
            rest.find('>')
        }?;
        self.flush_text(lt);
        let parent = self.current();
        self.doc
            .push(parent, NodeKind::Declaration(rest[1..close].to_string()));
        Some(lt + close + 1)
    }

    fn end_tag(&mut self, lt: usize) -> Option<usize> {
        let bytes = self.input.as_bytes();
        let name_start = lt + 2;
        if !bytes.get(name_start)?.is_ascii_alphabetic() {
            return None;
        }
        let mut i = name_start;
        while i < bytes.len() && is_name_char(bytes[i]) {
            i += 1;
        }
        let name = self.input[name_start..i].to_ascii_lowercase();
        let close = self.input[i..].find('>')? + i;
        self.flush_text(lt);
        if let Some(depth) = self
            .open
            .iter()
            .rposition(|&id| self.doc.element_name(id) == Some(name.as_str()))
        {
            self.open.truncate(depth);
        }
        Some(close + 1)
    }

    fn start_tag(&mut self, lt: usize) -> Option<usize> {
        let bytes = self.input.as_bytes();
        let mut i = lt + 1;
        while i < bytes.len() && is_name_char(bytes[i]) {
            i += 1;
        }
        let name = self.input[lt + 1..i].to_ascii_lowercase();
        let mut attrs: Vec<Attribute> = Vec::new();
        let mut self_closing = false;
        loop {
            while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'/') {
                self_closing = bytes[i] == b'/';
                i += 1;
            }
            match bytes.get(i) {
                None => return None,
                Some(b'>') => {
                    i += 1;
                    break;
                }
                _ => {}
            }
            self_closing = false;
            let attr_start = i;
            while i < bytes.len()
                && !bytes[i].is_ascii_whitespace()
                && !matches!(bytes[i], b'=' | b'>' | b'/')
            {
                i += 1;
            }
            if i == attr_start {
                // a lone '=' or similar junk
                i += 1;
                continue;
            }
            let attr_name = self.input[attr_start..i].to_ascii_lowercase();
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                j += 1;
            }
            let mut value = None;
            if bytes.get(j) == Some(&b'=') {
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                match bytes.get(j) {
                    Some(&q) if q == b'"' || q == b'\'' => {
                        let close = self.input[j + 1..].find(q as char)? + j + 1;
                        value = Some(self.input[j + 1..close].to_string());
                        i = close + 1;
                    }
                    _ => {
                        let start = j;
                        while j < bytes.len() && !bytes[j].is_ascii_whitespace() && bytes[j] != b'>'
                        {
                            j += 1;
                        }
                        value = Some(self.input[start..j].to_string());
                        i = j;
                    }
                }
            }
            if !attrs.iter().any(|a| a.name == attr_name) {
                attrs.push(Attribute {
                    name: attr_name,
                    value,
                });
            }
        }

        self.flush_text(lt);
        let parent = self.current();
        let raw_text = RAW_TEXT_ELEMENTS.contains(&name.as_str());
        let void = is_void(&name);
        let id = self.doc.push(
            parent,
            NodeKind::Element {
                name: name.clone(),
                attrs,
            },
        );
        if raw_text && !self_closing {
            let closing = alloc::format!("</{name}");
            let lower = self.input[i..].to_ascii_lowercase();
            let (content_end, resume) = match lower.find(&closing) {
                Some(rel) => {
                    let end = i + rel;
                    let after = self.input[end..]
                        .find('>')
                        .map_or(self.input.len(), |g| end + g + 1);
                    (end, after)
                }
                None => (self.input.len(), self.input.len()),
            };
            if content_end > i {
                self.doc
                    .push(id, NodeKind::Text(self.input[i..content_end].to_string()));
            }
            return Some(resume);
        }
        if !void && !self_closing {
            self.open.push(id);
        }
        Some(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(input: &str) -> String {
        Document::parse(input).serialize()
    }

    #[test]
    fn well_formed_roundtrip() {
        assert_eq!(roundtrip("<div><p>Hi</p></div>"), "<div><p>Hi</p></div>");
        assert_eq!(
            roundtrip("<a href=\"x\">y</a> tail"),
            "<a href=\"x\">y</a> tail"
        );
    }

    #[test]
    fn names_lowercased_and_attrs_normalized() {
        assert_eq!(
            roundtrip("<DIV Class=a ID='b' hidden>t</DIV>"),
            "<div class=\"a\" id=\"b\" hidden>t</div>"
        );
    }

    #[test]
    fn unclosed_elements_close_at_end() {
        assert_eq!(roundtrip("<div><p>a"), "<div><p>a</p></div>");
        assert_eq!(roundtrip("a</span>b"), "ab");
    }

    #[test]
    fn void_and_self_closing() {
        assert_eq!(
            roundtrip("<br/>x<img src=a.png />y"),
            "<br>x<img src=\"a.png\">y"
        );
        assert_eq!(roundtrip("<p/>z"), "<p></p>z");
    }

    #[test]
    fn raw_text_and_comments() {
        let doc = Document::parse("<style>p > a {}</style><!-- c --><script>if (a<b) {}</script>");
        assert_eq!(
            doc.serialize(),
            "<style>p > a {}</style><!-- c --><script>if (a<b) {}</script>"
        );
        assert_eq!(doc.node(ROOT).children.len(), 3);
    }

    #[test]
    fn stray_angle_brackets_are_text() {
        assert_eq!(roundtrip("1 < 2 and <3 <"), "1 < 2 and <3 <");
        assert_eq!(roundtrip("<a href=\"x"), "<a href=\"x");
    }

    #[test]
    fn quoted_gt_inside_attribute() {
        assert_eq!(
            roundtrip("<a title=\"a>b\">t</a>"),
            "<a title=\"a>b\">t</a>"
        );
    }

    #[test]
    fn unwrap_and_detach() {
        let mut doc = Document::parse("<p>a<b>b</b>c</p>");
        let b = doc
            .preorder()
            .into_iter()
            .find(|&id| doc.element_name(id) == Some("b"))
            .unwrap();
        doc.unwrap_node(b);
        assert_eq!(doc.serialize(), "<p>abc</p>");
        let p = doc.node(ROOT).children[0];
        doc.detach(p);
        assert_eq!(doc.serialize(), "");
    }
}
