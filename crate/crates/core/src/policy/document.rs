//! Structured-document parsing into a `DocNode` tree.
//!
//! Input schema: a JSON tree of `{kind, title, text?, children[]}` records.
//! Ids are derived deterministically from titles (ordinal labels when a title
//! is missing) and encode the full ancestor path: segments `KIND:LABEL`
//! joined by `/`, e.g. `DOC:GDPR/CHAPTER:IV/SECTION:4/ARTICLE:37/POINT:1`.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DocKind {
    Document,
    Chapter,
    Section,
    Article,
    Point,
}

impl DocKind {
    pub fn parse(s: &str) -> Option<DocKind> {
        match s {
            "document" => Some(DocKind::Document),
            "chapter" => Some(DocKind::Chapter),
            "section" => Some(DocKind::Section),
            "article" => Some(DocKind::Article),
            "point" => Some(DocKind::Point),
            _ => None,
        }
    }

    /// Depth rank; children must rank strictly deeper than their parent.
    pub fn rank(self) -> u8 {
        match self {
            DocKind::Document => 0,
            DocKind::Chapter => 1,
            DocKind::Section => 2,
            DocKind::Article => 3,
            DocKind::Point => 4,
        }
    }

    /// Id segment prefix.
    pub fn prefix(self) -> &'static str {
        match self {
            DocKind::Document => "DOC",
            DocKind::Chapter => "CHAPTER",
            DocKind::Section => "SECTION",
            DocKind::Article => "ARTICLE",
            DocKind::Point => "POINT",
        }
    }
}

/// One node of the parsed document tree.
#[derive(Debug, Clone)]
pub struct DocNode {
    pub id: String,
    pub kind: DocKind,
    pub title: String,
    pub text: Option<String>,
    pub children: Vec<DocNode>,
}

impl DocNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Preorder traversal.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a DocNode, Option<&'a DocNode>)) {
        fn inner<'a>(
            node: &'a DocNode,
            parent: Option<&'a DocNode>,
            visit: &mut impl FnMut(&'a DocNode, Option<&'a DocNode>),
        ) {
            visit(node, parent);
            for child in &node.children {
                inner(child, Some(node), visit);
            }
        }
        inner(self, None, visit);
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(DocNode::node_count).sum::<usize>()
    }
}

/// Parse a Document Input Schema JSON string into a validated tree.
pub fn parse_document(raw: &str) -> Result<DocNode> {
    let value: Value = serde_json::from_str(raw)
        .map_err(|e| Error::schema("$", format!("not valid JSON: {e}")))?;
    let root = parse_node(&value, None, "$", 0)?;
    if root.kind != DocKind::Document {
        return Err(Error::schema("$", "root node must have kind `document`"));
    }
    Ok(root)
}

fn parse_node(value: &Value, parent: Option<&DocNode>, path: &str, position: usize) -> Result<DocNode> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::schema(path, "expected an object"))?;
    let kind_str = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::schema(path, "missing string field `kind`"))?;
    let kind = DocKind::parse(kind_str)
        .ok_or_else(|| Error::schema(path, format!("unknown kind `{kind_str}`")))?;

    if let Some(parent) = parent {
        if kind.rank() <= parent.kind.rank() {
            return Err(Error::schema(
                path,
                format!(
                    "kind `{kind_str}` cannot nest under `{}`",
                    parent.kind.prefix().to_lowercase()
                ),
            ));
        }
    }

    let title = obj
        .get("title")
        .and_then(Value::as_str)
        .unwrap_or("")
        .trim()
        .to_string();
    let text = obj
        .get("text")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string);

    let label = derive_label(&title, position);
    let id = match parent {
        Some(p) => format!("{}/{}:{}", p.id, kind.prefix(), label),
        None => format!("{}:{}", kind.prefix(), label),
    };

    let mut node = DocNode {
        id,
        kind,
        title,
        text,
        children: Vec::new(),
    };

    let empty = Vec::new();
    let children = obj.get("children").and_then(Value::as_array).unwrap_or(&empty);
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (i, child_value) in children.iter().enumerate() {
        let child_path = format!("{path}.children[{i}]");
        let child = parse_node(child_value, Some(&node), &child_path, i)?;
        let key = child.id.clone();
        if !seen.insert(key) {
            return Err(Error::Ambiguity {
                path: child_path,
                message: format!("duplicate sibling label `{}`", child.id),
            });
        }
        node.children.push(child);
    }

    if node.is_leaf() && node.kind != DocKind::Document && node.text.is_none() {
        return Err(Error::schema(path, "leaf node has no text"));
    }
    Ok(node)
}

/// Derive the id label from a title, falling back to the 1-based position.
///
/// "Article 37 - Designation" yields "37"; a bare token like "IV" passes
/// through; anything else is slugged to uppercase alphanumerics.
fn derive_label(title: &str, position: usize) -> String {
    static TITLED: OnceLock<Regex> = OnceLock::new();
    let re = TITLED.get_or_init(|| {
        Regex::new(r"(?i)^(?:document|doc|chapter|section|article|point|paragraph)\s+([A-Za-z0-9]+)")
            .expect("static regex")
    });

    if title.is_empty() {
        return (position + 1).to_string();
    }
    if let Some(caps) = re.captures(title) {
        return caps[1].to_ascii_uppercase();
    }
    if title.chars().all(|c| c.is_alphanumeric()) {
        return title.to_ascii_uppercase();
    }
    let mut slug = String::new();
    let mut last_sep = true;
    for c in title.chars() {
        if c.is_alphanumeric() {
            slug.push(c.to_ascii_uppercase());
            last_sep = false;
        } else if !last_sep {
            slug.push('_');
            last_sep = true;
        }
        if slug.len() >= 40 {
            break;
        }
    }
    let slug = slug.trim_end_matches('_').to_string();
    if slug.is_empty() {
        (position + 1).to_string()
    } else {
        slug
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn doc(v: Value) -> String {
        v.to_string()
    }

    #[test]
    fn five_node_tree() {
        let raw = doc(json!({
            "kind": "document", "title": "TestReg",
            "children": [{
                "kind": "chapter", "title": "Chapter I",
                "children": [{
                    "kind": "article", "title": "Article 1",
                    "children": [
                        {"kind": "point", "text": "First point."},
                        {"kind": "point", "text": "Second point."},
                    ]
                }]
            }]
        }));
        let tree = parse_document(&raw).unwrap();
        assert_eq!(tree.node_count(), 5);
        assert_eq!(tree.id, "DOC:TESTREG");
        let article = &tree.children[0].children[0];
        assert_eq!(article.id, "DOC:TESTREG/CHAPTER:I/ARTICLE:1");
        assert_eq!(article.children[0].id, "DOC:TESTREG/CHAPTER:I/ARTICLE:1/POINT:1");
    }

    #[test]
    fn empty_document_is_root_only() {
        let tree = parse_document(&doc(json!({"kind": "document", "title": "Empty"}))).unwrap();
        assert_eq!(tree.node_count(), 1);
        assert!(tree.is_leaf());
    }

    #[test]
    fn gdpr_shaped_leaf_id() {
        let raw = doc(json!({
            "kind": "document", "title": "GDPR",
            "children": [{
                "kind": "chapter", "title": "Chapter IV",
                "children": [{
                    "kind": "section", "title": "Section 4",
                    "children": [{
                        "kind": "article", "title": "Article 37",
                        "children": [{"kind": "point", "text": "The controller and the processor shall designate a data protection officer."}]
                    }]
                }]
            }]
        }));
        let tree = parse_document(&raw).unwrap();
        let mut leaf_id = None;
        tree.walk(&mut |n, _| {
            if n.is_leaf() {
                leaf_id = Some(n.id.clone());
            }
        });
        assert_eq!(
            leaf_id.as_deref(),
            Some("DOC:GDPR/CHAPTER:IV/SECTION:4/ARTICLE:37/POINT:1")
        );
    }

    #[test]
    fn duplicate_sibling_labels_rejected() {
        let raw = doc(json!({
            "kind": "document", "title": "D",
            "children": [
                {"kind": "article", "title": "Article 1", "text": "a"},
                {"kind": "article", "title": "Article 1", "text": "b"},
            ]
        }));
        let err = parse_document(&raw).unwrap_err();
        assert!(matches!(err, Error::Ambiguity { .. }), "{err}");
    }

    #[test]
    fn bad_nesting_named_in_error() {
        let raw = doc(json!({
            "kind": "document", "title": "D",
            "children": [{
                "kind": "article", "title": "Article 1",
                "children": [{"kind": "chapter", "title": "Chapter I", "text": "x"}]
            }]
        }));
        let err = parse_document(&raw).unwrap_err();
        match err {
            Error::Schema { path, .. } => assert!(path.contains("children[0].children[0]")),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn leaf_without_text_rejected() {
        let raw = doc(json!({
            "kind": "document", "title": "D",
            "children": [{"kind": "article", "title": "Article 1"}]
        }));
        assert!(parse_document(&raw).is_err());
    }

    #[test]
    fn untitled_points_get_ordinal_labels() {
        let raw = doc(json!({
            "kind": "document", "title": "D",
            "children": [{
                "kind": "article", "title": "Article 2",
                "children": [
                    {"kind": "point", "text": "a"},
                    {"kind": "point", "text": "b"},
                    {"kind": "point", "text": "c"},
                ]
            }]
        }));
        let tree = parse_document(&raw).unwrap();
        let points: Vec<String> = tree.children[0].children.iter().map(|c| c.id.clone()).collect();
        assert_eq!(
            points,
            vec![
                "DOC:D/ARTICLE:2/POINT:1",
                "DOC:D/ARTICLE:2/POINT:2",
                "DOC:D/ARTICLE:2/POINT:3"
            ]
        );
    }
}
