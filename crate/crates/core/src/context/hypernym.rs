//! Policy-guided hypernym proposals, aggregation, and top-N selection.
//!
//! Aggregation is max-pooling with a STRONG bonus, clamped at 1:
//! `score(h) = min(1, max over proposals r with label h of s(r) + beta·[STRONG(r)])`.
//! Selection keeps the N highest-scoring labels, ties broken STRONG before
//! WEAK, then lexicographically.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::adapters::task::TASK_CTX_HYPERNYM;
use crate::adapters::ChatClient;
use crate::error::Result;

use super::fragments::{FragmentKind, FragmentRetriever};
use super::{Entity, Strength};

/// One adapter-scored candidate mapping of an entity to a policy term.
#[derive(Debug, Clone, PartialEq)]
pub struct HypernymProposal {
    pub entity_id: String,
    pub label: String,
    pub frag_id: String,
    pub src: FragmentKind,
    pub score: f64,
    pub strength: Strength,
}

impl HypernymProposal {
    /// Strength follows the supporting fragment kind: STRONG iff premise.
    pub fn new(entity_id: &str, label: &str, frag_id: &str, src: FragmentKind, score: f64) -> Self {
        Self {
            entity_id: entity_id.to_string(),
            label: label.to_string(),
            frag_id: frag_id.to_string(),
            src,
            score,
            strength: if src == FragmentKind::Premise {
                Strength::STRONG
            } else {
                Strength::WEAK
            },
        }
    }
}

/// Retrieve top-M fragments for the entity and elicit scored proposals.
///
/// Scores are clamped into [0, 1] with a warning; unknown fragment ids are
/// dropped with a warning. An empty retriever yields no proposals and makes
/// no adapter call.
pub fn propose_hypernyms(
    entity: &Entity,
    retriever: &dyn FragmentRetriever,
    chat: &ChatClient,
    m: usize,
) -> Result<(Vec<HypernymProposal>, Vec<String>)> {
    let fragments = retriever.retrieve(&entity.name, m)?;
    if fragments.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }

    let payload = json!({
        "entity": {"id": entity.id, "name": entity.name, "type": entity.etype},
        "fragments": fragments
            .iter()
            .map(|f| json!({"frag_id": f.id, "kind": f.kind, "text": f.text}))
            .collect::<Vec<_>>(),
    });
    let outcome = chat.call(TASK_CTX_HYPERNYM, payload)?;

    let empty = Vec::new();
    let mut proposals = Vec::new();
    let mut warnings = Vec::new();
    for item in outcome
        .value
        .get("proposals")
        .and_then(Value::as_array)
        .unwrap_or(&empty)
    {
        let label = item.get("label").and_then(Value::as_str).unwrap_or("");
        let frag_id = item.get("frag_id").and_then(Value::as_str).unwrap_or("");
        let raw_score = item.get("score").and_then(Value::as_f64).unwrap_or(0.0);
        if label.is_empty() {
            warnings.push(format!("{}: empty hypernym label dropped", entity.id));
            continue;
        }
        let Some(fragment) = fragments.iter().find(|f| f.id == frag_id) else {
            warnings.push(format!(
                "{}: proposal `{label}` cites unknown fragment `{frag_id}`",
                entity.id
            ));
            continue;
        };
        let score = if (0.0..=1.0).contains(&raw_score) {
            raw_score
        } else {
            warnings.push(format!(
                "{}: score {raw_score} for `{label}` clamped into [0, 1]",
                entity.id
            ));
            raw_score.clamp(0.0, 1.0)
        };
        proposals.push(HypernymProposal::new(
            &entity.id,
            label,
            frag_id,
            fragment.kind,
            score,
        ));
    }
    Ok((proposals, warnings))
}

/// Max-pool proposal scores per label with the STRONG bonus, clamped at 1.
pub fn aggregate_hypernyms(proposals: &[HypernymProposal], beta: f64) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for p in proposals {
        let bonus = if p.strength == Strength::STRONG { beta } else { 0.0 };
        let boosted = (p.score + bonus).min(1.0);
        out.entry(p.label.clone())
            .and_modify(|s| *s = s.max(boosted))
            .or_insert(boosted);
    }
    out
}

/// Per-label max strength: STRONG when any contributing proposal is STRONG.
pub fn label_strengths(proposals: &[HypernymProposal]) -> BTreeMap<String, Strength> {
    let mut out: BTreeMap<String, Strength> = BTreeMap::new();
    for p in proposals {
        out.entry(p.label.clone())
            .and_modify(|s| {
                if p.strength == Strength::STRONG {
                    *s = Strength::STRONG;
                }
            })
            .or_insert(p.strength);
    }
    out
}

/// The N highest-scoring (label, score, strength) triples in total order:
/// score descending, STRONG before WEAK, then lexicographic label.
pub fn top_n_hypernyms(
    scores: &BTreeMap<String, f64>,
    strengths: &BTreeMap<String, Strength>,
    n: usize,
) -> Vec<(String, f64, Strength)> {
    let mut items: Vec<(String, f64, Strength)> = scores
        .iter()
        .map(|(label, &score)| {
            let strength = strengths.get(label).copied().unwrap_or(Strength::WEAK);
            (label.clone(), score, strength)
        })
        .collect();
    items.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.2.cmp(&b.2))
            .then_with(|| a.0.cmp(&b.0))
    });
    items.truncate(n);
    items
}

#[cfg(test)]
mod tests {
    use super::*;

    fn proposal(label: &str, score: f64, strength: Strength) -> HypernymProposal {
        HypernymProposal {
            entity_id: "e1".into(),
            label: label.into(),
            frag_id: "f1".into(),
            src: if strength == Strength::STRONG {
                FragmentKind::Premise
            } else {
                FragmentKind::CuSource
            },
            score,
            strength,
        }
    }

    #[test]
    fn aggregation_hand_example() {
        // max(0.6, 0.5 + 0.3) = 0.8
        let props = vec![
            proposal("controller", 0.6, Strength::WEAK),
            proposal("controller", 0.5, Strength::STRONG),
        ];
        let agg = aggregate_hypernyms(&props, 0.3);
        assert_eq!(agg.len(), 1);
        assert!((agg["controller"] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn aggregation_clamps_at_one() {
        let props = vec![proposal("controller", 0.9, Strength::STRONG)];
        let agg = aggregate_hypernyms(&props, 0.3);
        assert_eq!(agg["controller"], 1.0);
    }

    #[test]
    fn empty_proposals_empty_map() {
        assert!(aggregate_hypernyms(&[], 0.3).is_empty());
    }

    #[test]
    fn strong_beats_weak_on_score_tie() {
        let mut scores = BTreeMap::new();
        scores.insert("a".to_string(), 0.7);
        scores.insert("b".to_string(), 0.7);
        let mut strengths = BTreeMap::new();
        strengths.insert("a".to_string(), Strength::WEAK);
        strengths.insert("b".to_string(), Strength::STRONG);
        let top = top_n_hypernyms(&scores, &strengths, 2);
        assert_eq!(top[0].0, "b");
        assert_eq!(top[1].0, "a");
    }

    #[test]
    fn truncation_to_n() {
        let mut scores = BTreeMap::new();
        for (i, label) in ["a", "b", "c", "d", "e", "f", "g"].iter().enumerate() {
            scores.insert(label.to_string(), 0.9 - i as f64 * 0.1);
        }
        let top = top_n_hypernyms(&scores, &BTreeMap::new(), 5);
        assert_eq!(top.len(), 5);
    }

    #[test]
    fn final_tiebreak_is_lexicographic() {
        let mut scores = BTreeMap::new();
        scores.insert("y".to_string(), 0.5);
        scores.insert("x".to_string(), 0.5);
        let top = top_n_hypernyms(&scores, &BTreeMap::new(), 2);
        assert_eq!(top[0].0, "x");
        assert_eq!(top[1].0, "y");
    }
}
