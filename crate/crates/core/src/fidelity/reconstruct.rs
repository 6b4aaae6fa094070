//! Graph-to-prose reconstruction.

use serde_json::{json, Value};

use crate::adapters::task::TASK_FIDELITY_RENDER;
use crate::adapters::ChatClient;
use crate::context::ContextGraph;
use crate::error::Result;
use crate::policy::{segment_kind, CondTree, EdgeKind, PolicyGraph};

/// Stored source texts of structure/premise nodes in document order.
///
/// Lossless with respect to the captured clause text, so rebuilding from the
/// output reproduces the graph.
pub fn reconstruct_policy_identity(graph: &PolicyGraph) -> String {
    let mut parts = Vec::new();
    for node in graph.nodes() {
        if node.is_cu() {
            continue;
        }
        if let Some(text) = &node.text {
            parts.push(text.clone());
        }
    }
    parts.join("\n")
}

/// Lossy template rendering: one passage per article built from its units.
///
/// Premise text passes through; units render as
/// `<subject> <constraint> where <condition> (<context>).` Orphaned units
/// (no DERIVES parent, e.g. after noise injection) are dropped.
pub fn reconstruct_policy_template(graph: &PolicyGraph) -> String {
    let mut passages: Vec<String> = Vec::new();
    for article in graph.nodes().iter().filter(|n| n.is_article()) {
        let mut lines: Vec<String> = Vec::new();
        if graph
            .nodes()
            .iter()
            .any(|n| n.kind == crate::policy::NodeKind::Premise && n.id == article.id)
        {
            for node in graph.nodes() {
                if (node.id == article.id || node.id.starts_with(&format!("{}/", article.id)))
                    && !node.is_cu()
                {
                    if let Some(text) = &node.text {
                        lines.push(text.clone());
                    }
                }
            }
        }
        for edge in graph.edges_of_kind(EdgeKind::DERIVES) {
            let under_article =
                edge.src == article.id || edge.src.starts_with(&format!("{}/", article.id));
            if !under_article {
                continue;
            }
            let Some(cu) = graph.node(&edge.dst) else {
                continue;
            };
            let Some(attrs) = cu.attrs.as_ref() else {
                continue;
            };
            let mut sentence = format!("{} {}", attrs.subject, attrs.constraint.join(", "));
            if let Some(condition) = &attrs.condition {
                sentence.push_str(&format!(" where {}", CondTree::render(condition)));
            }
            if let Some(context) = &attrs.context {
                sentence.push_str(&format!(" ({context})"));
            }
            sentence.push('.');
            lines.push(sentence);
        }
        if !lines.is_empty() {
            passages.push(format!("Article {}. {}", article_label(article), lines.join(" ")));
        }
    }
    passages.join("\n")
}

fn article_label(node: &crate::policy::PolicyNode) -> String {
    crate::policy::segment_label(&node.id).to_string()
}

/// One passage per relation plus isolated entities.
pub fn reconstruct_context_template(graph: &ContextGraph) -> String {
    let mut lines: Vec<String> = Vec::new();
    for relation in &graph.relations {
        let name = |id: &str| {
            graph
                .entity(id)
                .map(|e| e.name.clone())
                .unwrap_or_else(|| id.to_string())
        };
        lines.push(format!(
            "{} {} {}.",
            name(&relation.subj),
            relation.pred.replace('_', " "),
            name(&relation.obj)
        ));
    }
    for entity in &graph.entities {
        let mentioned = graph
            .relations
            .iter()
            .any(|r| r.subj == entity.id || r.obj == entity.id);
        if !mentioned {
            lines.push(format!("There is {}.", entity.name));
        }
    }
    lines.join("\n")
}

/// Adapter-backed renderer for live runs: ships article units to the model
/// and concatenates the returned passages.
pub struct ChatReconstructor<'a> {
    pub chat: &'a ChatClient,
}

impl ChatReconstructor<'_> {
    pub fn reconstruct_policy(&self, graph: &PolicyGraph) -> Result<String> {
        let mut units: Vec<Value> = Vec::new();
        for article in graph.nodes().iter().filter(|n| segment_kind(&n.id) == "ARTICLE") {
            let mut facts: Vec<String> = Vec::new();
            for node in graph.nodes() {
                if node.id.starts_with(&format!("{}/", article.id)) || node.id == article.id {
                    if let Some(text) = &node.text {
                        facts.push(text.clone());
                    }
                    if let Some(attrs) = &node.attrs {
                        facts.push(format!(
                            "{} {}",
                            attrs.subject,
                            attrs.constraint.join(", ")
                        ));
                    }
                }
            }
            units.push(json!({
                "heading": format!("Article {}", article_label(article)),
                "facts": facts,
            }));
        }
        if units.is_empty() {
            return Ok(String::new());
        }
        let outcome = self.chat.call(TASK_FIDELITY_RENDER, json!({ "units": units }))?;
        Ok(outcome.value["text"].as_str().unwrap_or_default().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::mock::PipelineMock;
    use crate::adapters::TaskCatalog;
    use crate::policy::{parse_document, PolicyGraphBuilder, PremiseRuleClassifier};
    use std::sync::Arc;

    fn built() -> PolicyGraph {
        let raw = serde_json::json!({
            "kind": "document", "title": "R",
            "children": [
                {"kind": "article", "title": "Article 37", "children": [
                    {"kind": "point", "text": "The controller and processor shall designate a data protection officer where core activities require monitoring."}
                ]}
            ]
        })
        .to_string();
        let tree = parse_document(&raw).unwrap();
        let chat = ChatClient::new(TaskCatalog::default(), Arc::new(PipelineMock::new()));
        PolicyGraphBuilder::new()
            .structure_pass(&tree, &PremiseRuleClassifier::default())
            .unwrap()
            .extract_units(&chat)
            .unwrap()
            .finish()
            .unwrap()
            .0
    }

    #[test]
    fn identity_returns_stored_text() {
        let graph = built();
        let text = reconstruct_policy_identity(&graph);
        assert!(text.contains("shall designate a data protection officer"));
    }

    #[test]
    fn empty_graph_renders_empty_text() {
        let graph = PolicyGraph::new();
        assert_eq!(reconstruct_policy_identity(&graph), "");
        assert_eq!(reconstruct_policy_template(&graph), "");
    }

    #[test]
    fn template_renders_unit_content() {
        let graph = built();
        let text = reconstruct_policy_template(&graph);
        assert!(text.contains("designate a data protection officer"));
        assert!(text.starts_with("Article 37."));
    }

    #[test]
    fn chat_renderer_under_mock_mentions_units() {
        let graph = built();
        let chat = ChatClient::new(TaskCatalog::default(), Arc::new(PipelineMock::new()));
        let reconstructor = ChatReconstructor { chat: &chat };
        let text = reconstructor.reconstruct_policy(&graph).unwrap();
        assert!(text.contains("designate a data protection officer"));
    }
}
