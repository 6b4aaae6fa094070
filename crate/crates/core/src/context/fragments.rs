//! Dense retrieval over policy fragments for hypernym grounding.
//!
//! Fragments come in two granularities: one per premise article (title plus
//! descendant text) and one per clause that yielded compliance units.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adapters::EmbeddingAdapter;
use crate::error::Result;
use crate::policy::{EdgeKind, NodeKind, PolicyGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FragmentKind {
    Premise,
    CuSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fragment {
    pub id: String,
    pub kind: FragmentKind,
    pub text: String,
}

/// Retrieval boundary so tests can substitute fixed fragment sets.
pub trait FragmentRetriever: Send + Sync {
    /// Top-m fragments for a query, best first; deterministic order.
    fn retrieve(&self, query: &str, m: usize) -> Result<Vec<Fragment>>;

    fn fragment(&self, id: &str) -> Option<&Fragment>;
}

/// Exhaustive cosine scoring over pre-embedded fragments.
pub struct DenseFragmentIndex {
    fragments: Vec<Fragment>,
    embeddings: Vec<Vec<f64>>,
    embedder: Arc<dyn EmbeddingAdapter>,
}

impl DenseFragmentIndex {
    pub fn build(policy: &PolicyGraph, embedder: Arc<dyn EmbeddingAdapter>) -> Result<Self> {
        let mut fragments: Vec<Fragment> = Vec::new();

        for article_id in policy.premise_articles() {
            let mut text = String::new();
            if let Some(node) = policy.node(article_id) {
                text.push_str(&node.label);
            }
            // Descendant text in document order.
            for node in policy.nodes() {
                if node.id.starts_with(&format!("{article_id}/")) || node.id == article_id {
                    if let Some(t) = &node.text {
                        text.push('\n');
                        text.push_str(t);
                    }
                }
            }
            fragments.push(Fragment {
                id: article_id.to_string(),
                kind: FragmentKind::Premise,
                text,
            });
        }

        for edge in policy.edges_of_kind(EdgeKind::DERIVES) {
            if fragments.iter().any(|f| f.id == edge.src) {
                continue;
            }
            if let Some(node) = policy.node(&edge.src) {
                if node.kind != NodeKind::Premise {
                    if let Some(text) = &node.text {
                        fragments.push(Fragment {
                            id: edge.src.clone(),
                            kind: FragmentKind::CuSource,
                            text: text.clone(),
                        });
                    }
                }
            }
        }

        let embeddings = if fragments.is_empty() {
            Vec::new()
        } else {
            let texts: Vec<String> = fragments.iter().map(|f| f.text.clone()).collect();
            embedder.embed(&texts)?
        };
        Ok(Self {
            fragments,
            embeddings,
            embedder,
        })
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }
}

impl FragmentRetriever for DenseFragmentIndex {
    fn retrieve(&self, query: &str, m: usize) -> Result<Vec<Fragment>> {
        if self.fragments.is_empty() || m == 0 {
            return Ok(Vec::new());
        }
        let q = self.embedder.embed_one(query)?;
        let mut scored: Vec<(f64, usize)> = self
            .embeddings
            .iter()
            .enumerate()
            .map(|(i, v)| (dot(&q, v), i))
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| self.fragments[a.1].id.cmp(&self.fragments[b.1].id))
        });
        Ok(scored
            .into_iter()
            .take(m)
            .map(|(_, i)| self.fragments[i].clone())
            .collect())
    }

    fn fragment(&self, id: &str) -> Option<&Fragment> {
        self.fragments.iter().find(|f| f.id == id)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fixed fragment list for tests.
pub struct StaticFragments(pub Vec<Fragment>);

impl FragmentRetriever for StaticFragments {
    fn retrieve(&self, _query: &str, m: usize) -> Result<Vec<Fragment>> {
        Ok(self.0.iter().take(m).cloned().collect())
    }

    fn fragment(&self, id: &str) -> Option<&Fragment> {
        self.0.iter().find(|f| f.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::mock::{HashEmbedder, PipelineMock};
    use crate::adapters::{ChatClient, TaskCatalog};
    use crate::policy::{parse_document, PolicyGraphBuilder, PremiseRuleClassifier};
    use serde_json::json;

    fn policy_with_premise() -> PolicyGraph {
        let raw = json!({
            "kind": "document", "title": "TestReg",
            "children": [
                {"kind": "article", "title": "Article 1 - Definitions",
                 "text": "'health record' means any client record describing medical care."},
                {"kind": "article", "title": "Article 2",
                 "children": [{"kind": "point", "text": "The operator shall encrypt health records."}]},
            ]
        })
        .to_string();
        let tree = parse_document(&raw).unwrap();
        let chat = ChatClient::new(TaskCatalog::default(), std::sync::Arc::new(PipelineMock::new()));
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
    fn index_holds_premise_and_cu_source_fragments() {
        let policy = policy_with_premise();
        let index =
            DenseFragmentIndex::build(&policy, Arc::new(HashEmbedder::default())).unwrap();
        assert_eq!(index.len(), 2);
        let premise = index.fragment("DOC:TESTREG/ARTICLE:1").unwrap();
        assert_eq!(premise.kind, FragmentKind::Premise);
        let cu_src = index.fragment("DOC:TESTREG/ARTICLE:2/POINT:1").unwrap();
        assert_eq!(cu_src.kind, FragmentKind::CuSource);
    }

    #[test]
    fn retrieve_ranks_relevant_fragment_first() {
        let policy = policy_with_premise();
        let index =
            DenseFragmentIndex::build(&policy, Arc::new(HashEmbedder::default())).unwrap();
        let got = index.retrieve("client record describing medical care", 1).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].id, "DOC:TESTREG/ARTICLE:1");
    }

    #[test]
    fn empty_policy_retrieves_nothing() {
        let policy = PolicyGraph::new();
        let index =
            DenseFragmentIndex::build(&policy, Arc::new(HashEmbedder::default())).unwrap();
        assert!(index.retrieve("anything", 5).unwrap().is_empty());
    }
}
