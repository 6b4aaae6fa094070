//! Compliance gate: evidence windows, listwise judgment, reference-closure
//! exception overrides, and violation-first aggregation to article level.

pub mod judge;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::context::{ContextGraph, Relation};
use crate::error::{Error, Result};
use crate::policy::{EdgeKind, PolicyGraph};
use crate::retrieval::Anchor;
use crate::util::canon;

pub use judge::{apply_overrides, gate_meta, judge_listwise};

/// Compliance labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "COMPLIANT")]
    Compliant,
    #[serde(rename = "NON_COMPLIANT")]
    NonCompliant,
    #[serde(rename = "INSUFFICIENT")]
    Insufficient,
    #[serde(rename = "NOT_APPLICABLE")]
    NotApplicable,
}

impl Label {
    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "COMPLIANT" => Some(Label::Compliant),
            "NON_COMPLIANT" => Some(Label::NonCompliant),
            "INSUFFICIENT" => Some(Label::Insufficient),
            "NOT_APPLICABLE" => Some(Label::NotApplicable),
            _ => None,
        }
    }
}

/// Per-unit verdict record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Judgment {
    pub anchor_id: String,
    pub cu_id: String,
    pub label: Label,
    pub score: f64,
    pub why: String,
    /// Ids of window entities/relations the rationale relies on.
    pub evid: Vec<String>,
    pub overridden: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overridden_by: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Local context subgraph around an anchor's member entities.
#[derive(Debug, Clone)]
pub struct EvidenceWindow {
    pub anchor_id: String,
    pub entity_ids: BTreeSet<String>,
    /// `(window relation id, relation)` — ids are stable `r<index>` keys into
    /// the scenario's relation list.
    pub relations: Vec<(String, Relation)>,
}

impl EvidenceWindow {
    /// All element ids valid as evidence.
    pub fn element_ids(&self) -> BTreeSet<String> {
        let mut ids = self.entity_ids.clone();
        for (rid, _) in &self.relations {
            ids.insert(rid.clone());
        }
        ids
    }
}

/// BFS over relations (undirected) from the anchor members to `radius` hops,
/// including every relation among the included entities.
pub fn evidence_window(ctx: &ContextGraph, anchor: &Anchor, radius: usize) -> EvidenceWindow {
    let mut included: BTreeSet<String> = anchor.entity_ids.iter().cloned().collect();
    let mut frontier: VecDeque<(String, usize)> =
        included.iter().map(|id| (id.clone(), 0)).collect();

    while let Some((id, depth)) = frontier.pop_front() {
        if depth >= radius {
            continue;
        }
        for relation in &ctx.relations {
            let neighbor = if relation.subj == id {
                Some(&relation.obj)
            } else if relation.obj == id {
                Some(&relation.subj)
            } else {
                None
            };
            if let Some(n) = neighbor {
                if included.insert(n.clone()) {
                    frontier.push_back((n.clone(), depth + 1));
                }
            }
        }
    }

    let relations: Vec<(String, Relation)> = ctx
        .relations
        .iter()
        .enumerate()
        .filter(|(_, r)| included.contains(&r.subj) && included.contains(&r.obj))
        .map(|(i, r)| (format!("r{}", i + 1), r.clone()))
        .collect();

    EvidenceWindow {
        anchor_id: anchor.id.clone(),
        entity_ids: included,
        relations,
    }
}

/// All compliance units reachable from `cu_id` over undirected REFERS and
/// DERIVES edges, any depth, excluding the unit itself. Traversal passes
/// through structure nodes.
pub fn reference_closure(policy: &PolicyGraph, cu_id: &str) -> Result<BTreeSet<String>> {
    if policy.node(cu_id).is_none() {
        return Err(Error::UnknownNode(cu_id.to_string()));
    }

    let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for edge in policy.edges() {
        if matches!(edge.kind, EdgeKind::REFERS | EdgeKind::DERIVES) {
            adjacency.entry(&edge.src).or_default().push(&edge.dst);
            adjacency.entry(&edge.dst).or_default().push(&edge.src);
        }
    }

    let mut visited: BTreeSet<&str> = BTreeSet::new();
    let mut queue: VecDeque<&str> = VecDeque::new();
    visited.insert(cu_id);
    queue.push_back(cu_id);
    while let Some(current) = queue.pop_front() {
        if let Some(neighbors) = adjacency.get(current) {
            for &n in neighbors {
                if visited.insert(n) {
                    queue.push_back(n);
                }
            }
        }
    }

    Ok(visited
        .into_iter()
        .filter(|id| *id != cu_id)
        .filter(|id| policy.node(id).is_some_and(|n| n.is_cu()))
        .map(str::to_string)
        .collect())
}

/// Article-level verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decision {
    pub article: String,
    pub label: Label,
    pub score: f64,
    pub cu_id: String,
    pub overridden: bool,
}

/// Violation-first aggregation: any NON_COMPLIANT judgment makes the article
/// NON_COMPLIANT via its highest-scoring violation; otherwise the overall
/// highest-scoring judgment wins. Ties break on ascending cu id.
pub fn aggregate_by_article(judgments: &[Judgment], policy: &PolicyGraph) -> Result<Vec<Decision>> {
    let mut by_article: BTreeMap<String, Vec<&Judgment>> = BTreeMap::new();
    for judgment in judgments {
        let article = policy.article_of(&judgment.cu_id)?;
        by_article.entry(article.to_string()).or_default().push(judgment);
    }

    let pick = |candidates: &[&Judgment]| -> Judgment {
        let mut best = candidates[0];
        for j in &candidates[1..] {
            let better = j.score > best.score
                || (j.score == best.score && j.cu_id < best.cu_id);
            if better {
                best = j;
            }
        }
        (*best).clone()
    };

    let mut decisions = Vec::new();
    for (article, group) in by_article {
        let violations: Vec<&Judgment> = group
            .iter()
            .copied()
            .filter(|j| j.label == Label::NonCompliant)
            .collect();
        let chosen = if violations.is_empty() {
            pick(&group)
        } else {
            pick(&violations)
        };
        decisions.push(Decision {
            article,
            label: chosen.label,
            score: chosen.score,
            cu_id: chosen.cu_id.clone(),
            overridden: chosen.overridden,
        });
    }
    Ok(decisions)
}

/// The Decision File: per-article verdicts plus the full audit trail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionFile {
    pub scenario_id: String,
    pub decisions: Vec<Decision>,
    pub judgments: Vec<Judgment>,
}

impl DecisionFile {
    pub fn to_json(&self) -> Result<String> {
        canon::to_canonical_pretty(self)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        Ok(serde_json::from_str(raw)?)
    }
}
