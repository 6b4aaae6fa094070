//! Policy graph: typed nodes and edges built from a regulatory document.
//!
//! The graph holds three node kinds — structure nodes mirroring the document
//! hierarchy, premise-marked nodes (definitional material), and compliance
//! units derived from clauses — connected by CONTAIN (hierarchy), DERIVES
//! (clause to unit), and REFERS (cross-reference) edges.

pub mod build;
pub mod document;
pub mod refs;

use std::collections::{BTreeSet, HashMap};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::util::canon;

pub use build::{BuildReport, PolicyGraphBuilder, PremiseClassifier, PremiseRuleClassifier};
pub use document::{parse_document, DocKind, DocNode};
pub use refs::explicit_refs;

/// Node role within the policy graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Structure,
    Premise,
    ComplianceUnit,
}

/// Compliance-unit typing: rules addressed to actors vs applicability rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuType {
    ActorCu,
    MetaCu,
}

/// Edge kinds. CONTAIN edges form the document tree; DERIVES links a clause
/// to its units; REFERS links a unit to a cross-referenced node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    CONTAIN,
    DERIVES,
    REFERS,
}

/// Boolean condition tree over text leaves.
///
/// Serialized as a bare string (leaf) or a single-key object with one of the
/// connectives `any`, `all`, `not`. Unknown connectives are rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CondTree {
    Leaf(String),
    Any(Vec<CondTree>),
    All(Vec<CondTree>),
    Not(Box<CondTree>),
}

impl CondTree {
    pub fn from_value(value: &Value) -> Result<CondTree> {
        match value {
            Value::String(s) => Ok(CondTree::Leaf(s.clone())),
            Value::Object(map) => {
                if map.len() != 1 {
                    return Err(Error::Invalid(format!(
                        "condition object must have exactly one connective, got {}",
                        map.len()
                    )));
                }
                let (key, inner) = map.iter().next().expect("len checked");
                match key.as_str() {
                    "any" | "all" => {
                        let items = inner.as_array().ok_or_else(|| {
                            Error::Invalid(format!("condition `{key}` expects an array"))
                        })?;
                        let parsed: Result<Vec<CondTree>> =
                            items.iter().map(CondTree::from_value).collect();
                        let parsed = parsed?;
                        if key == "any" {
                            Ok(CondTree::Any(parsed))
                        } else {
                            Ok(CondTree::All(parsed))
                        }
                    }
                    "not" => Ok(CondTree::Not(Box::new(CondTree::from_value(inner)?))),
                    other => Err(Error::Invalid(format!(
                        "unknown condition connective `{other}`"
                    ))),
                }
            }
            other => Err(Error::Invalid(format!(
                "condition must be a string or connective object, got {other}"
            ))),
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            CondTree::Leaf(s) => Value::String(s.clone()),
            CondTree::Any(items) => {
                serde_json::json!({"any": items.iter().map(CondTree::to_value).collect::<Vec<_>>()})
            }
            CondTree::All(items) => {
                serde_json::json!({"all": items.iter().map(CondTree::to_value).collect::<Vec<_>>()})
            }
            CondTree::Not(inner) => serde_json::json!({"not": inner.to_value()}),
        }
    }

    /// Flattened leaf texts, in tree order.
    pub fn leaves(&self) -> Vec<&str> {
        match self {
            CondTree::Leaf(s) => vec![s.as_str()],
            CondTree::Any(items) | CondTree::All(items) => {
                items.iter().flat_map(|c| c.leaves()).collect()
            }
            CondTree::Not(inner) => inner.leaves(),
        }
    }

    /// Deterministic prose rendering for plans and prompts.
    pub fn render(&self) -> String {
        match self {
            CondTree::Leaf(s) => s.clone(),
            CondTree::Any(items) => format!(
                "any of: {}",
                items.iter().map(|c| c.render()).collect::<Vec<_>>().join(" | ")
            ),
            CondTree::All(items) => format!(
                "all of: {}",
                items.iter().map(|c| c.render()).collect::<Vec<_>>().join(" | ")
            ),
            CondTree::Not(inner) => format!("not: {}", inner.render()),
        }
    }
}

impl Serialize for CondTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CondTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        CondTree::from_value(&value).map_err(D::Error::custom)
    }
}

/// Character span `[start, end)` into the source clause text.
pub type Span = [usize; 2];

/// Per-field character offsets into the source clause.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSpan {
    pub subject: Option<Span>,
    pub condition: Option<Span>,
    pub constraint: Option<Span>,
    pub context: Option<Span>,
}

impl CharSpan {
    fn fields(&self) -> [(&'static str, Option<Span>); 4] {
        [
            ("subject", self.subject),
            ("condition", self.condition),
            ("constraint", self.constraint),
            ("context", self.context),
        ]
    }

    /// All spans lie within `len` and no two overlap.
    pub fn validate(&self, len: usize) -> Result<()> {
        let mut present: Vec<(&str, Span)> = Vec::new();
        for (name, span) in self.fields() {
            if let Some([start, end]) = span {
                if start >= end || end > len {
                    return Err(Error::Invalid(format!(
                        "char_span.{name} [{start}, {end}) out of bounds for text of length {len}"
                    )));
                }
                present.push((name, [start, end]));
            }
        }
        for i in 0..present.len() {
            for j in i + 1..present.len() {
                let (na, [a0, a1]) = present[i];
                let (nb, [b0, b1]) = present[j];
                if a0 < b1 && b0 < a1 {
                    return Err(Error::Invalid(format!(
                        "char_span.{na} overlaps char_span.{nb}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The 4-tuple rule payload carried by compliance-unit nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceUnit {
    pub subject: String,
    pub condition: Option<CondTree>,
    pub constraint: Vec<String>,
    pub context: Option<String>,
    pub char_span: CharSpan,
    pub references: Vec<String>,
}

impl ComplianceUnit {
    /// Domain validation against the unit invariants.
    pub fn validate(&self, cu_type: CuType, source_len: usize) -> Result<()> {
        if self.subject.trim().is_empty() {
            return Err(Error::Invalid("compliance unit subject is empty".into()));
        }
        if cu_type == CuType::ActorCu && self.constraint.is_empty() {
            return Err(Error::Invalid(format!(
                "actor_cu `{}` has an empty constraint list",
                self.subject
            )));
        }
        self.char_span.validate(source_len)?;
        for token in &self.references {
            if refs::parse_ref_token(token).is_none() {
                return Err(Error::Invalid(format!(
                    "reference token `{token}` does not match the token grammar"
                )));
            }
        }
        Ok(())
    }
}

/// One node of the policy graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNode {
    pub id: String,
    pub kind: NodeKind,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attrs: Option<ComplianceUnit>,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub cu_type: Option<CuType>,
}

impl PolicyNode {
    /// Kind prefix of the last id segment ("ARTICLE", "POINT", ...).
    pub fn segment_kind(&self) -> &str {
        segment_kind(&self.id)
    }

    pub fn is_article(&self) -> bool {
        self.segment_kind() == "ARTICLE"
    }

    pub fn is_cu(&self) -> bool {
        self.kind == NodeKind::ComplianceUnit
    }
}

pub fn segment_kind(id: &str) -> &str {
    let last = id.rsplit('/').next().unwrap_or(id);
    last.split(':').next().unwrap_or("")
}

pub fn segment_label(id: &str) -> &str {
    let last = id.rsplit('/').next().unwrap_or(id);
    last.split_once(':').map(|(_, l)| l).unwrap_or("")
}

/// One typed edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyEdge {
    pub kind: EdgeKind,
    pub src: String,
    pub dst: String,
}

/// Immutable once built; safe to share across readers.
#[derive(Debug, Clone, Default)]
pub struct PolicyGraph {
    nodes: Vec<PolicyNode>,
    edges: Vec<PolicyEdge>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct PolicyGraphFile {
    nodes: Vec<PolicyNode>,
    edges: Vec<PolicyEdge>,
}

impl PolicyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assemble from parts without validation. Intended for tests and for
    /// noise-injection, whose outputs intentionally violate invariants.
    pub fn from_parts(nodes: Vec<PolicyNode>, edges: Vec<PolicyEdge>) -> Self {
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        Self {
            nodes,
            edges,
            index,
        }
    }

    pub fn add_node(&mut self, node: PolicyNode) -> Result<()> {
        if self.index.contains_key(&node.id) {
            return Err(Error::Ambiguity {
                path: node.id.clone(),
                message: "duplicate node id".to_string(),
            });
        }
        self.index.insert(node.id.clone(), self.nodes.len());
        self.nodes.push(node);
        Ok(())
    }

    /// Insert an edge unless the same (kind, src, dst) already exists.
    pub fn add_edge(&mut self, kind: EdgeKind, src: &str, dst: &str) -> bool {
        if self
            .edges
            .iter()
            .any(|e| e.kind == kind && e.src == src && e.dst == dst)
        {
            return false;
        }
        self.edges.push(PolicyEdge {
            kind,
            src: src.to_string(),
            dst: dst.to_string(),
        });
        true
    }

    pub fn node(&self, id: &str) -> Option<&PolicyNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut PolicyNode> {
        self.index.get(id).map(|&i| &mut self.nodes[i])
    }

    pub fn nodes(&self) -> &[PolicyNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[PolicyEdge] {
        &self.edges
    }

    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &PolicyEdge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    /// Compliance-unit nodes in insertion (document) order.
    pub fn cu_nodes(&self) -> impl Iterator<Item = &PolicyNode> {
        self.nodes.iter().filter(|n| n.is_cu())
    }

    /// The clause node a unit derives from.
    pub fn derives_parent(&self, cu_id: &str) -> Option<&str> {
        self.edges
            .iter()
            .find(|e| e.kind == EdgeKind::DERIVES && e.dst == cu_id)
            .map(|e| e.src.as_str())
    }

    /// CONTAIN parent of a structure node.
    pub fn contain_parent(&self, id: &str) -> Option<&str> {
        self.edges
            .iter()
            .find(|e| e.kind == EdgeKind::CONTAIN && e.dst == id)
            .map(|e| e.src.as_str())
    }

    /// Nearest enclosing article node id (for units: via DERIVES first).
    pub fn article_of(&self, id: &str) -> Result<&str> {
        let mut current = if self.node(id).is_some_and(PolicyNode::is_cu) {
            self.derives_parent(id)
                .ok_or_else(|| Error::UnknownNode(format!("{id} has no DERIVES parent")))?
        } else {
            self.node(id)
                .map(|n| n.id.as_str())
                .ok_or_else(|| Error::UnknownNode(id.to_string()))?
        };
        loop {
            if segment_kind(current) == "ARTICLE" {
                return Ok(current);
            }
            current = self
                .contain_parent(current)
                .ok_or_else(|| Error::UnknownNode(format!("{id} has no article ancestor")))?;
        }
    }

    /// Source clause text of a unit (its DERIVES parent's text).
    pub fn cu_source_text(&self, cu_id: &str) -> Option<&str> {
        let parent = self.derives_parent(cu_id)?;
        self.node(parent).and_then(|n| n.text.as_deref())
    }

    /// Article node ids marked premise.
    pub fn premise_articles(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Premise && n.is_article())
            .map(|n| n.id.as_str())
            .collect()
    }

    /// Validate the graph invariants: single CONTAIN root, acyclic CONTAIN
    /// tree with node-count − 1 edges over structure nodes, and exactly one
    /// DERIVES parent per compliance unit.
    pub fn validate(&self) -> Result<()> {
        for edge in &self.edges {
            for endpoint in [&edge.src, &edge.dst] {
                if self.node(endpoint).is_none() {
                    return Err(Error::UnknownNode(endpoint.clone()));
                }
            }
        }

        let structure_count = self.nodes.iter().filter(|n| !n.is_cu()).count();
        let contain_count = self.edges_of_kind(EdgeKind::CONTAIN).count();
        if structure_count > 0 && contain_count != structure_count - 1 {
            return Err(Error::Invalid(format!(
                "CONTAIN edge count {contain_count} != structure node count {structure_count} - 1"
            )));
        }
        let mut roots = 0;
        for node in self.nodes.iter().filter(|n| !n.is_cu()) {
            if self.contain_parent(&node.id).is_none() {
                roots += 1;
            }
        }
        if structure_count > 0 && roots != 1 {
            return Err(Error::Invalid(format!(
                "CONTAIN forest has {roots} roots, expected 1"
            )));
        }

        for cu in self.cu_nodes() {
            let parents = self
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::DERIVES && e.dst == cu.id)
                .count();
            if parents != 1 {
                return Err(Error::Invalid(format!(
                    "compliance unit {} has {parents} DERIVES parents, expected 1",
                    cu.id
                )));
            }
            if cu.attrs.is_none() || cu.cu_type.is_none() {
                return Err(Error::Invalid(format!(
                    "compliance unit {} is missing attrs or type",
                    cu.id
                )));
            }
        }

        let mut seen = BTreeSet::new();
        for edge in &self.edges {
            if !seen.insert((edge.kind, edge.src.clone(), edge.dst.clone())) {
                return Err(Error::Invalid(format!(
                    "duplicate edge {:?} {} -> {}",
                    edge.kind, edge.src, edge.dst
                )));
            }
        }
        Ok(())
    }

    /// Canonical pretty JSON (the Policy Graph File format).
    pub fn to_json(&self) -> Result<String> {
        canon::to_canonical_pretty(&PolicyGraphFile {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        })
    }

    /// Parse and validate a Policy Graph File.
    pub fn from_json(raw: &str) -> Result<Self> {
        let file: PolicyGraphFile = serde_json::from_str(raw)?;
        let mut graph = PolicyGraph::new();
        for node in file.nodes {
            graph.add_node(node)?;
        }
        for edge in file.edges {
            graph.edges.push(edge);
        }
        graph.validate()?;
        Ok(graph)
    }
}
