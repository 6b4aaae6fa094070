//! Candidate retrieval: anchors from the context graph, three-part
//! bi-encoder preselection over compliance units, cross-scorer reranking
//! into a CU Plan.
//!
//! The bi-encoder score for an anchor `a` and unit `c` is
//! `w_ent·cos(v_ent(a), v_subj(c)) + w_hyp·cos(v_hyp(a), v_subj(c)) +
//!  w_bonus·[H(a) ∩ Subj(c) ≠ ∅]`
//! with unit-normalized embeddings, where `H(a)` is the anchor's hypernym
//! label set and `Subj(c)` the normalized token set of the unit's subject.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::adapters::task::TASK_RERANK_SCORE;
use crate::adapters::{ChatClient, EmbeddingAdapter};
use crate::context::ContextGraph;
use crate::error::{AdapterError, Error, Result};
use crate::policy::{CondTree, PolicyGraph};
use crate::util::canon;
use crate::util::text::subject_contains_label;

/// Anchor grouping: actions by actor-typed entities, plus singletons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorGroup {
    Actor,
    Data,
    System,
}

/// A unit of evaluation grouping policy-relevant entities around an action.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Anchor {
    pub id: String,
    pub group: AnchorGroup,
    /// Member entity ids; the acting entity first.
    pub entity_ids: Vec<String>,
    /// Dominant action text ("" for singleton anchors).
    pub predicate: String,
    pub actor_type: String,
    pub object_type: String,
    /// Union of the members' hypernym labels.
    pub hypernyms: BTreeSet<String>,
}

/// Every entity with at least one hypernym or relation is covered by an
/// anchor; actor anchors are keyed by (acting entity, predicate), remaining
/// entities form singletons. The grouping rule is confined to this function.
pub fn extract_anchors(ctx: &ContextGraph) -> Vec<Anchor> {
    let mut anchors: Vec<Anchor> = Vec::new();
    let mut keyed: Vec<(String, String)> = Vec::new(); // (subj, pred) creation order

    let best_type = |entity_id: &str| -> String {
        ctx.entity(entity_id)
            .map(|e| {
                e.hypernym_labels()
                    .first()
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| e.etype.clone())
            })
            .unwrap_or_default()
    };

    for relation in &ctx.relations {
        let Some(subject) = ctx.entity(&relation.subj) else {
            continue;
        };
        if subject.etype != "actor" {
            continue;
        }
        let key = (relation.subj.clone(), relation.pred.clone());
        let idx = match keyed.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                keyed.push(key);
                anchors.push(Anchor {
                    id: format!("a{}", anchors.len() + 1),
                    group: AnchorGroup::Actor,
                    entity_ids: vec![relation.subj.clone()],
                    predicate: relation.pred.clone(),
                    actor_type: best_type(&relation.subj),
                    object_type: String::new(),
                    hypernyms: BTreeSet::new(),
                });
                anchors.len() - 1
            }
        };
        if !anchors[idx].entity_ids.contains(&relation.obj) {
            anchors[idx].entity_ids.push(relation.obj.clone());
        }
        if anchors[idx].object_type.is_empty() {
            anchors[idx].object_type = best_type(&relation.obj);
        }
    }

    // Singletons for uncovered entities that carry signal.
    let covered: BTreeSet<String> = anchors
        .iter()
        .flat_map(|a| a.entity_ids.iter().cloned())
        .collect();
    for entity in &ctx.entities {
        if covered.contains(&entity.id) {
            continue;
        }
        let in_relation = ctx
            .relations
            .iter()
            .any(|r| r.subj == entity.id || r.obj == entity.id);
        if entity.hypernym_labels().is_empty() && !in_relation {
            continue;
        }
        let group = if entity.etype == "actor" {
            AnchorGroup::Actor
        } else if entity.etype.contains("data") {
            AnchorGroup::Data
        } else {
            AnchorGroup::System
        };
        anchors.push(Anchor {
            id: format!("a{}", anchors.len() + 1),
            group,
            entity_ids: vec![entity.id.clone()],
            predicate: String::new(),
            actor_type: best_type(&entity.id),
            object_type: String::new(),
            hypernyms: BTreeSet::new(),
        });
    }

    for anchor in anchors.iter_mut() {
        for entity_id in &anchor.entity_ids {
            if let Some(entity) = ctx.entity(entity_id) {
                for label in entity.hypernym_labels() {
                    anchor.hypernyms.insert(label.to_string());
                }
            }
        }
    }
    anchors
}

/// Weights of the three bi-encoder score terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub w_ent: f64,
    pub w_hyp: f64,
    pub w_bonus: f64,
}

impl Default for ScoreWeights {
    /// Entity similarity dominates; the bonus is a tie-nudge.
    fn default() -> Self {
        Self {
            w_ent: 0.6,
            w_hyp: 0.3,
            w_bonus: 0.1,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The three-part score over pre-computed unit vectors.
pub fn bi_encoder_score(
    weights: &ScoreWeights,
    v_ent: &[f64],
    v_hyp: &[f64],
    v_subj: &[f64],
    hypernyms: &BTreeSet<String>,
    subject: &str,
) -> f64 {
    let overlap = hypernyms
        .iter()
        .any(|label| subject_contains_label(subject, label));
    weights.w_ent * dot(v_ent, v_subj)
        + weights.w_hyp * dot(v_hyp, v_subj)
        + weights.w_bonus * if overlap { 1.0 } else { 0.0 }
}

/// Pre-cached subject embeddings for every compliance unit.
pub struct SubjectIndex {
    entries: Vec<(String, String, Vec<f64>)>, // (cu_id, subject, embedding)
}

impl SubjectIndex {
    pub fn build(policy: &PolicyGraph, embedder: &dyn EmbeddingAdapter) -> Result<Self> {
        let mut ids = Vec::new();
        let mut subjects = Vec::new();
        for node in policy.cu_nodes() {
            let subject = node
                .attrs
                .as_ref()
                .map(|a| a.subject.clone())
                .unwrap_or_default();
            ids.push(node.id.clone());
            subjects.push(subject);
        }
        let embeddings = if subjects.is_empty() {
            Vec::new()
        } else {
            embedder.embed(&subjects)?
        };
        Ok(Self {
            entries: ids
                .into_iter()
                .zip(subjects)
                .zip(embeddings)
                .map(|((id, subject), embedding)| (id, subject, embedding))
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One scored unit from preselection (rerank score filled later).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub cu_id: String,
    pub bi_score: f64,
    pub rerank_score: Option<f64>,
}

/// Anchor-side embeddings, computed once per anchor: member entity names
/// joined by "; " and hypernym labels joined by "; ".
pub struct AnchorFeatures {
    pub v_ent: Vec<f64>,
    pub v_hyp: Vec<f64>,
}

impl AnchorFeatures {
    pub fn build(
        anchor: &Anchor,
        ctx: &ContextGraph,
        embedder: &dyn EmbeddingAdapter,
    ) -> Result<Self> {
        let names: Vec<String> = anchor
            .entity_ids
            .iter()
            .filter_map(|id| ctx.entity(id).map(|e| e.name.clone()))
            .collect();
        let ent_text = names.join("; ");
        let hyp_text = anchor
            .hypernyms
            .iter()
            .cloned()
            .collect::<Vec<_>>()
            .join("; ");
        let vectors = embedder.embed(&[ent_text, hyp_text])?;
        let mut it = vectors.into_iter();
        Ok(Self {
            v_ent: it.next().expect("two vectors requested"),
            v_hyp: it.next().expect("two vectors requested"),
        })
    }
}

/// Score every unit and keep the top `k1`, ties broken by ascending cu id.
pub fn preselect(
    anchor: &Anchor,
    ctx: &ContextGraph,
    subjects: &SubjectIndex,
    weights: &ScoreWeights,
    embedder: &dyn EmbeddingAdapter,
    k1: usize,
) -> Result<Vec<ScoredCandidate>> {
    if subjects.is_empty() {
        return Ok(Vec::new());
    }
    let features = AnchorFeatures::build(anchor, ctx, embedder).map_err(|e| {
        Error::Adapter(AdapterError::Embedding(format!("anchor {}: {e}", anchor.id)))
    })?;
    let mut scored: Vec<ScoredCandidate> = subjects
        .entries
        .iter()
        .map(|(cu_id, subject, v_subj)| ScoredCandidate {
            cu_id: cu_id.clone(),
            bi_score: bi_encoder_score(
                weights,
                &features.v_ent,
                &features.v_hyp,
                v_subj,
                &anchor.hypernyms,
                subject,
            ),
            rerank_score: None,
        })
        .collect();
    scored.sort_by(|a, b| {
        b.bi_score
            .partial_cmp(&a.bi_score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.cu_id.cmp(&b.cu_id))
    });
    scored.truncate(k1);
    Ok(scored)
}

/// Joint query/document relevance scoring boundary.
pub trait CrossScorer: Send + Sync {
    fn score(&self, query: &str, doc: &str) -> Result<f64>;
}

/// Cross-scorer backed by the chat adapter's scoring task.
pub struct ChatCrossScorer {
    pub chat: Arc<ChatClient>,
}

impl CrossScorer for ChatCrossScorer {
    fn score(&self, query: &str, doc: &str) -> Result<f64> {
        let outcome = self
            .chat
            .call(TASK_RERANK_SCORE, json!({"query": query, "doc": doc}))?;
        Ok(outcome.value["score"].as_f64().unwrap_or(0.0).clamp(0.0, 1.0))
    }
}

/// One plan item: the unit's rendered fields plus both scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanItem {
    pub cu_id: String,
    pub subject: String,
    pub condition: String,
    pub constraint: String,
    pub context: String,
    #[serde(default)]
    pub cu_type: String,
    pub bi_score: f64,
    pub rerank_score: Option<f64>,
}

/// The curated rule list handed to the judge for one anchor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CUPlan {
    pub anchor: String,
    /// Set when reranking fell back to bi-encoder order.
    pub degraded: bool,
    pub items: Vec<PlanItem>,
}

impl CUPlan {
    pub fn to_json(&self) -> Result<String> {
        canon::to_canonical_pretty(self)
    }
}

/// Query text `[predicate; actor_type; object_type]`.
pub fn anchor_query(anchor: &Anchor) -> String {
    format!(
        "{} ; {} ; {}",
        anchor.predicate, anchor.actor_type, anchor.object_type
    )
}

/// Document text `[subject; constraint; condition]`.
pub fn unit_document(subject: &str, constraint: &str, condition: &str) -> String {
    format!("{subject} ; {constraint} ; {condition}")
}

fn render_item(policy: &PolicyGraph, candidate: &ScoredCandidate) -> Result<PlanItem> {
    let node = policy
        .node(&candidate.cu_id)
        .ok_or_else(|| Error::UnknownNode(candidate.cu_id.clone()))?;
    let attrs = node
        .attrs
        .as_ref()
        .ok_or_else(|| Error::Invalid(format!("{} has no unit payload", candidate.cu_id)))?;
    Ok(PlanItem {
        cu_id: candidate.cu_id.clone(),
        subject: attrs.subject.clone(),
        condition: attrs
            .condition
            .as_ref()
            .map(CondTree::render)
            .unwrap_or_default(),
        constraint: attrs.constraint.join("; "),
        context: attrs.context.clone().unwrap_or_default(),
        cu_type: node
            .cu_type
            .map(|t| {
                serde_json::to_value(t)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default()
            })
            .unwrap_or_default(),
        bi_score: candidate.bi_score,
        rerank_score: candidate.rerank_score,
    })
}

/// Rerank candidates with the cross-scorer and keep the top `k`.
///
/// Without a scorer — or when the scorer fails — the plan falls back to
/// bi-encoder order and is flagged degraded.
pub fn rerank(
    policy: &PolicyGraph,
    anchor: &Anchor,
    candidates: &[ScoredCandidate],
    scorer: Option<&dyn CrossScorer>,
    k: usize,
) -> Result<CUPlan> {
    let mut items: Vec<PlanItem> = candidates
        .iter()
        .map(|c| render_item(policy, c))
        .collect::<Result<_>>()?;

    let mut degraded = scorer.is_none();
    if let Some(scorer) = scorer {
        let query = anchor_query(anchor);
        let mut scores: Vec<Option<f64>> = Vec::with_capacity(items.len());
        for item in &items {
            let doc = unit_document(&item.subject, &item.constraint, &item.condition);
            match scorer.score(&query, &doc) {
                Ok(s) => scores.push(Some(s)),
                Err(_) => {
                    degraded = true;
                    break;
                }
            }
        }
        if !degraded {
            for (item, score) in items.iter_mut().zip(scores) {
                item.rerank_score = score;
            }
            items.sort_by(|a, b| {
                b.rerank_score
                    .partial_cmp(&a.rerank_score)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.cu_id.cmp(&b.cu_id))
            });
        }
    }
    items.truncate(k);
    Ok(CUPlan {
        anchor: anchor.id.clone(),
        degraded,
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::mock::{HashEmbedder, PipelineMock};
    use crate::adapters::TaskCatalog;
    use crate::context::{Entity, HypernymEntry, Relation, Strength};
    use crate::policy::{parse_document, PolicyGraphBuilder, PremiseRuleClassifier};

    fn entity(id: &str, name: &str, etype: &str, hypernym: Option<&str>) -> Entity {
        Entity {
            id: id.into(),
            name: name.into(),
            etype: etype.into(),
            hypernym: hypernym.map(str::to_string),
            hypernyms: hypernym.map(|h| {
                vec![HypernymEntry {
                    label: h.to_string(),
                    score: 0.9,
                    strength: Strength::STRONG,
                }]
            }),
        }
    }

    fn relation(s: &str, p: &str, o: &str) -> Relation {
        Relation {
            subj: s.into(),
            pred: p.into(),
            obj: o.into(),
        }
    }

    #[test]
    fn anchor_takes_actor_hypernym_as_type() {
        let ctx = ContextGraph {
            entities: vec![
                entity("e1", "IT operations manager", "actor", Some("controller")),
                entity("e5", "patient discharge date", "data_item", Some("data concerning health")),
            ],
            relations: vec![relation("e1", "exports", "e5")],
            source: None,
        };
        let anchors = extract_anchors(&ctx);
        assert_eq!(anchors.len(), 1);
        assert_eq!(anchors[0].actor_type, "controller");
        assert_eq!(anchors[0].object_type, "data concerning health");
        assert_eq!(anchors[0].entity_ids, vec!["e1", "e5"]);
        assert!(anchors[0].hypernyms.contains("controller"));
        assert!(anchors[0].hypernyms.contains("data concerning health"));
    }

    #[test]
    fn lone_entity_forms_singleton_anchor() {
        let ctx = ContextGraph {
            entities: vec![entity("e1", "consent record", "data_item", Some("personal data"))],
            relations: vec![],
            source: None,
        };
        let anchors = extract_anchors(&ctx);
        assert_eq!(anchors.len(), 1);
        assert_eq!(anchors[0].group, AnchorGroup::Data);
        assert!(anchors[0].predicate.is_empty());
    }

    #[test]
    fn two_actors_two_predicates_four_anchors() {
        let ctx = ContextGraph {
            entities: vec![
                entity("e1", "operator", "actor", None),
                entity("e2", "vendor", "actor", None),
                entity("e3", "records", "data_item", None),
            ],
            relations: vec![
                relation("e1", "stores", "e3"),
                relation("e1", "shares", "e3"),
                relation("e2", "stores", "e3"),
                relation("e2", "shares", "e3"),
            ],
            source: None,
        };
        let anchors = extract_anchors(&ctx);
        assert_eq!(anchors.len(), 4);
    }

    #[test]
    fn entity_without_signal_is_not_anchored() {
        let ctx = ContextGraph {
            entities: vec![entity("e1", "misc note", "other", None)],
            relations: vec![],
            source: None,
        };
        assert!(extract_anchors(&ctx).is_empty());
    }

    #[test]
    fn score_hand_arithmetic() {
        // cos terms 0.5 and 0.4 with overlap at unit weights -> 1.9.
        let weights = ScoreWeights {
            w_ent: 1.0,
            w_hyp: 1.0,
            w_bonus: 1.0,
        };
        let v_subj = vec![1.0, 0.0];
        let v_ent = vec![0.5, (1.0f64 - 0.25).sqrt()];
        let v_hyp = vec![0.4, (1.0f64 - 0.16).sqrt()];
        let mut hypernyms = BTreeSet::new();
        hypernyms.insert("controller".to_string());
        let s = bi_encoder_score(
            &weights,
            &v_ent,
            &v_hyp,
            &v_subj,
            &hypernyms,
            "controller and processor",
        );
        assert!((s - 1.9).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_and_disjoint_scores_zero() {
        let weights = ScoreWeights::default();
        let s = bi_encoder_score(
            &weights,
            &[1.0, 0.0],
            &[1.0, 0.0],
            &[0.0, 1.0],
            &BTreeSet::new(),
            "processor",
        );
        assert_eq!(s, 0.0);
    }

    #[test]
    fn bonus_requires_token_boundary_overlap() {
        let weights = ScoreWeights {
            w_ent: 0.0,
            w_hyp: 0.0,
            w_bonus: 1.0,
        };
        let v = vec![1.0];
        let mut hypernyms = BTreeSet::new();
        hypernyms.insert("controller".to_string());
        assert_eq!(
            bi_encoder_score(&weights, &v, &v, &v, &hypernyms, "controller and processor"),
            1.0
        );
        assert_eq!(
            bi_encoder_score(&weights, &v, &v, &v, &hypernyms, "controllers only"),
            0.0
        );
    }

    fn built_policy() -> PolicyGraph {
        let raw = serde_json::json!({
            "kind": "document", "title": "TestReg",
            "children": [
                {"kind": "article", "title": "Article 2", "children": [
                    {"kind": "point", "text": "The operator shall keep a register of client records."},
                    {"kind": "point", "text": "The operator shall encrypt client records."},
                    {"kind": "point", "text": "The vendor shall report incidents."},
                ]},
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

    fn sample_ctx() -> ContextGraph {
        ContextGraph {
            entities: vec![
                entity("e1", "hospital operator", "actor", Some("operator")),
                entity("e2", "client records", "data_item", None),
            ],
            relations: vec![relation("e1", "encrypts", "e2")],
            source: None,
        }
    }

    #[test]
    fn preselect_matches_exhaustive_scoring() {
        let policy = built_policy();
        let embedder = HashEmbedder::default();
        let subjects = SubjectIndex::build(&policy, &embedder).unwrap();
        let ctx = sample_ctx();
        let anchors = extract_anchors(&ctx);
        let weights = ScoreWeights::default();

        let all = preselect(&anchors[0], &ctx, &subjects, &weights, &embedder, usize::MAX).unwrap();
        assert_eq!(all.len(), policy.cu_nodes().count());

        // Brute-force oracle: recompute every score independently and sort.
        let features = AnchorFeatures::build(&anchors[0], &ctx, &embedder).unwrap();
        let mut oracle: Vec<(String, f64)> = policy
            .cu_nodes()
            .map(|n| {
                let subject = &n.attrs.as_ref().unwrap().subject;
                let v_subj = embedder.embed_one(subject).unwrap();
                let s = bi_encoder_score(
                    &weights,
                    &features.v_ent,
                    &features.v_hyp,
                    &v_subj,
                    &anchors[0].hypernyms,
                    subject,
                );
                (n.id.clone(), s)
            })
            .collect();
        oracle.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        let got: Vec<(String, f64)> = all.iter().map(|c| (c.cu_id.clone(), c.bi_score)).collect();
        assert_eq!(got, oracle);

        // Truncation is a prefix of the full ranking.
        let top2 = preselect(&anchors[0], &ctx, &subjects, &weights, &embedder, 2).unwrap();
        assert_eq!(top2.len(), 2);
        assert_eq!(
            top2.iter().map(|c| &c.cu_id).collect::<Vec<_>>(),
            all.iter().take(2).map(|c| &c.cu_id).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rerank_without_scorer_is_degraded_bi_order() {
        let policy = built_policy();
        let embedder = HashEmbedder::default();
        let subjects = SubjectIndex::build(&policy, &embedder).unwrap();
        let ctx = sample_ctx();
        let anchors = extract_anchors(&ctx);
        let candidates = preselect(
            &anchors[0],
            &ctx,
            &subjects,
            &ScoreWeights::default(),
            &embedder,
            50,
        )
        .unwrap();
        let plan = rerank(&policy, &anchors[0], &candidates, None, 2).unwrap();
        assert!(plan.degraded);
        assert_eq!(plan.items.len(), 2);
        assert_eq!(plan.items[0].cu_id, candidates[0].cu_id);
        assert!(plan.items[0].rerank_score.is_none());
    }

    #[test]
    fn mock_scorer_permutation_defines_plan_order() {
        // Score by position of the rendered document: the mock ranks
        // candidates in reverse bi-encoder order.
        struct ByDoc {
            docs: Vec<String>,
        }
        impl CrossScorer for ByDoc {
            fn score(&self, _query: &str, doc: &str) -> Result<f64> {
                let pos = self.docs.iter().position(|d| d == doc).unwrap_or(0);
                Ok(pos as f64 / self.docs.len().max(1) as f64)
            }
        }

        let policy = built_policy();
        let embedder = HashEmbedder::default();
        let subjects = SubjectIndex::build(&policy, &embedder).unwrap();
        let ctx = sample_ctx();
        let anchors = extract_anchors(&ctx);
        let candidates = preselect(
            &anchors[0],
            &ctx,
            &subjects,
            &ScoreWeights::default(),
            &embedder,
            50,
        )
        .unwrap();

        let docs: Vec<String> = candidates
            .iter()
            .map(|c| {
                let attrs = policy.node(&c.cu_id).unwrap().attrs.as_ref().unwrap();
                unit_document(
                    &attrs.subject,
                    &attrs.constraint.join("; "),
                    &attrs
                        .condition
                        .as_ref()
                        .map(CondTree::render)
                        .unwrap_or_default(),
                )
            })
            .collect();
        let scorer = ByDoc { docs };
        let plan = rerank(&policy, &anchors[0], &candidates, Some(&scorer), 10).unwrap();
        assert!(!plan.degraded);
        let expected: Vec<&String> = candidates.iter().rev().map(|c| &c.cu_id).collect();
        let got: Vec<&String> = plan.items.iter().map(|i| &i.cu_id).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn scorer_failure_falls_back_degraded() {
        struct Failing;
        impl CrossScorer for Failing {
            fn score(&self, _: &str, _: &str) -> Result<f64> {
                Err(Error::Invalid("down".into()))
            }
        }
        let policy = built_policy();
        let embedder = HashEmbedder::default();
        let subjects = SubjectIndex::build(&policy, &embedder).unwrap();
        let ctx = sample_ctx();
        let anchors = extract_anchors(&ctx);
        let candidates = preselect(
            &anchors[0],
            &ctx,
            &subjects,
            &ScoreWeights::default(),
            &embedder,
            50,
        )
        .unwrap();
        let plan = rerank(&policy, &anchors[0], &candidates, Some(&Failing), 2).unwrap();
        assert!(plan.degraded);
        assert_eq!(plan.items[0].cu_id, candidates[0].cu_id);
    }

    #[test]
    fn single_candidate_plan_of_one() {
        let policy = built_policy();
        let embedder = HashEmbedder::default();
        let subjects = SubjectIndex::build(&policy, &embedder).unwrap();
        let ctx = sample_ctx();
        let anchors = extract_anchors(&ctx);
        let candidates = preselect(
            &anchors[0],
            &ctx,
            &subjects,
            &ScoreWeights::default(),
            &embedder,
            1,
        )
        .unwrap();
        let plan = rerank(&policy, &anchors[0], &candidates, None, 8).unwrap();
        assert_eq!(plan.items.len(), 1);
    }

    #[test]
    fn weight_scaling_preserves_argsort() {
        let policy = built_policy();
        let embedder = HashEmbedder::default();
        let subjects = SubjectIndex::build(&policy, &embedder).unwrap();
        let ctx = sample_ctx();
        let anchors = extract_anchors(&ctx);
        let base = ScoreWeights::default();
        let scaled = ScoreWeights {
            w_ent: base.w_ent * 3.5,
            w_hyp: base.w_hyp * 3.5,
            w_bonus: base.w_bonus * 3.5,
        };
        let a = preselect(&anchors[0], &ctx, &subjects, &base, &embedder, usize::MAX).unwrap();
        let b = preselect(&anchors[0], &ctx, &subjects, &scaled, &embedder, usize::MAX).unwrap();
        let ids_a: Vec<&String> = a.iter().map(|c| &c.cu_id).collect();
        let ids_b: Vec<&String> = b.iter().map(|c| &c.cu_id).collect();
        assert_eq!(ids_a, ids_b);
        for (x, y) in a.iter().zip(&b) {
            assert!((y.bi_score - 3.5 * x.bi_score).abs() < 1e-9);
        }
    }
}
