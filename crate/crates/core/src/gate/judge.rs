//! Listwise judgment, exception overrides, and meta-scope gating.

use serde_json::{json, Value};

use crate::adapters::task::{TASK_JUDGE, TASK_JUDGE_REFS};
use crate::adapters::ChatClient;
use crate::context::ContextGraph;
use crate::error::{AdapterError, Result};
use crate::policy::{CondTree, CuType, PolicyGraph};
use crate::retrieval::{Anchor, CUPlan};

use super::{reference_closure, EvidenceWindow, Judgment, Label};

fn anchor_payload(anchor: &Anchor, ctx: &ContextGraph) -> Value {
    json!({
        "id": anchor.id,
        "group": anchor.group,
        "predicate": anchor.predicate,
        "actor_type": anchor.actor_type,
        "object_type": anchor.object_type,
        "entities": anchor
            .entity_ids
            .iter()
            .filter_map(|id| ctx.entity(id).map(|e| json!({"id": e.id, "name": e.name})))
            .collect::<Vec<_>>(),
        "hypernyms": anchor.hypernyms.iter().collect::<Vec<_>>(),
    })
}

fn window_payload(window: &EvidenceWindow, ctx: &ContextGraph) -> Value {
    json!({
        "entities": window
            .entity_ids
            .iter()
            .filter_map(|id| ctx.entity(id))
            .map(|e| {
                let hypernyms: Vec<Value> = e
                    .hypernyms
                    .as_ref()
                    .map(|list| {
                        list.iter()
                            .map(|h| json!({"label": h.label, "score": h.score, "strength": h.strength}))
                            .collect()
                    })
                    .unwrap_or_default();
                json!({"id": e.id, "name": e.name, "type": e.etype, "hypernyms": hypernyms})
            })
            .collect::<Vec<_>>(),
        "relations": window
            .relations
            .iter()
            .map(|(rid, r)| json!({"id": rid, "subj": r.subj, "pred": r.pred, "obj": r.obj}))
            .collect::<Vec<_>>(),
    })
}

fn plan_payload(plan: &CUPlan) -> Value {
    Value::Array(
        plan.items
            .iter()
            .map(|item| {
                json!({
                    "cu_id": item.cu_id,
                    "subject": item.subject,
                    "condition": item.condition,
                    "constraint": item.constraint,
                    "context": item.context,
                    "cu_type": item.cu_type,
                })
            })
            .collect(),
    )
}

/// Judge the whole plan against the window in one adapter call.
///
/// Exactly one judgment per plan item comes back, in plan order. A response
/// that violates that contract after the client's schema retry is replaced
/// by INSUFFICIENT fallbacks with score 0, flagged `judge-fallback`. Evidence
/// ids outside the window are dropped with an `evid-filtered` flag.
pub fn judge_listwise(
    window: &EvidenceWindow,
    plan: &CUPlan,
    anchor: &Anchor,
    ctx: &ContextGraph,
    chat: &ChatClient,
) -> Result<Vec<Judgment>> {
    if plan.items.is_empty() {
        return Ok(Vec::new());
    }
    let payload = json!({
        "anchor": anchor_payload(anchor, ctx),
        "window": window_payload(window, ctx),
        "plan": plan_payload(plan),
    });

    let fallback = |flag: &str| -> Vec<Judgment> {
        plan.items
            .iter()
            .map(|item| Judgment {
                anchor_id: anchor.id.clone(),
                cu_id: item.cu_id.clone(),
                label: Label::Insufficient,
                score: 0.0,
                why: "judgment unavailable".to_string(),
                evid: Vec::new(),
                overridden: false,
                overridden_by: None,
                flags: vec![flag.to_string()],
            })
            .collect()
    };

    let outcome = match chat.call(TASK_JUDGE, payload) {
        Ok(o) => o,
        Err(AdapterError::Schema { .. }) | Err(AdapterError::Truncated { .. }) => {
            return Ok(fallback("judge-fallback"));
        }
        Err(e) => return Err(e.into()),
    };

    let empty = Vec::new();
    let raw = outcome
        .value
        .get("judgments")
        .and_then(Value::as_array)
        .unwrap_or(&empty);

    // Cardinality and order contract: one judgment per plan item.
    let aligned = raw.len() == plan.items.len()
        && raw
            .iter()
            .zip(&plan.items)
            .all(|(j, item)| j.get("cu_id").and_then(Value::as_str) == Some(item.cu_id.as_str()));
    if !aligned {
        return Ok(fallback("judge-fallback"));
    }

    let window_ids = window.element_ids();
    let judgments = raw
        .iter()
        .map(|j| {
            let mut flags = Vec::new();
            let raw_score = j.get("score").and_then(Value::as_f64).unwrap_or(0.0);
            let score = if (0.0..=1.0).contains(&raw_score) {
                raw_score
            } else {
                flags.push("score-clamped".to_string());
                raw_score.clamp(0.0, 1.0)
            };
            let mut evid: Vec<String> = Vec::new();
            for id in j
                .get("evid")
                .and_then(Value::as_array)
                .unwrap_or(&empty)
                .iter()
                .filter_map(Value::as_str)
            {
                if window_ids.contains(id) {
                    evid.push(id.to_string());
                } else if !flags.contains(&"evid-filtered".to_string()) {
                    flags.push("evid-filtered".to_string());
                }
            }
            Judgment {
                anchor_id: anchor.id.clone(),
                cu_id: j["cu_id"].as_str().unwrap_or_default().to_string(),
                label: Label::parse(j["label"].as_str().unwrap_or_default())
                    .expect("label validated by schema"),
                score,
                why: j["why"].as_str().unwrap_or_default().to_string(),
                evid,
                overridden: false,
                overridden_by: None,
                flags,
            }
        })
        .collect();
    Ok(judgments)
}

fn closure_item(policy: &PolicyGraph, cu_id: &str) -> Option<Value> {
    let node = policy.node(cu_id)?;
    let attrs = node.attrs.as_ref()?;
    Some(json!({
        "cu_id": cu_id,
        "subject": attrs.subject,
        "constraint": attrs.constraint.join("; "),
        "condition": attrs.condition.as_ref().map(CondTree::render).unwrap_or_default(),
        "context": attrs.context.clone().unwrap_or_default(),
    }))
}

/// Exception-override pass over NON_COMPLIANT judgments.
///
/// For each violation with a non-empty reference closure, one adapter call
/// asks whether any closure unit is a valid exception given the window; an
/// affirmative answer naming a closure unit flips the label to COMPLIANT and
/// sets the overridden flag. Every other label is untouched, and no call is
/// made for violations with an empty closure. Adapter failures leave the
/// judgment unchanged, flagged `override-unevaluated`.
pub fn apply_overrides(
    judgments: Vec<Judgment>,
    policy: &PolicyGraph,
    window: &EvidenceWindow,
    ctx: &ContextGraph,
    chat: &ChatClient,
) -> Result<Vec<Judgment>> {
    let mut out = Vec::with_capacity(judgments.len());
    for mut judgment in judgments {
        if judgment.label != Label::NonCompliant {
            out.push(judgment);
            continue;
        }
        let closure = reference_closure(policy, &judgment.cu_id)?;
        if closure.is_empty() {
            out.push(judgment);
            continue;
        }

        let closure_items: Vec<Value> = closure
            .iter()
            .filter_map(|id| closure_item(policy, id))
            .collect();
        let violated = closure_item(policy, &judgment.cu_id).unwrap_or_else(|| {
            json!({"cu_id": judgment.cu_id, "why": judgment.why})
        });
        let payload = json!({
            "violated": violated,
            "closure": closure_items,
            "window": window_payload(window, ctx),
        });

        match chat.call(TASK_JUDGE_REFS, payload) {
            Ok(outcome) => {
                let affirmed = outcome.value["exception"].as_bool().unwrap_or(false);
                let by = outcome.value["exception_cu_id"].as_str().map(str::to_string);
                match (affirmed, by) {
                    (true, Some(by)) if closure.contains(&by) => {
                        judgment.label = Label::Compliant;
                        judgment.overridden = true;
                        judgment.overridden_by = Some(by);
                    }
                    (true, _) => {
                        judgment.flags.push("override-invalid-response".to_string());
                    }
                    (false, _) => {}
                }
            }
            Err(_) => {
                judgment.flags.push("override-unevaluated".to_string());
            }
        }
        out.push(judgment);
    }
    Ok(out)
}

/// Meta-scope gating (toggleable): a NOT_APPLICABLE meta-unit verdict
/// suppresses sibling actor-unit violations — units of the same article
/// judged in the same anchor — and meta-unit violations are never reported
/// as standalone violations.
pub fn gate_meta(judgments: Vec<Judgment>, policy: &PolicyGraph) -> Vec<Judgment> {
    let is_meta = |cu_id: &str| {
        policy
            .node(cu_id)
            .and_then(|n| n.cu_type)
            .map(|t| t == CuType::MetaCu)
            .unwrap_or(false)
    };
    let article_of = |cu_id: &str| policy.article_of(cu_id).map(str::to_string).ok();

    let suppressed: std::collections::BTreeSet<(String, String)> = judgments
        .iter()
        .filter(|j| is_meta(&j.cu_id) && j.label == Label::NotApplicable)
        .filter_map(|j| article_of(&j.cu_id).map(|a| (j.anchor_id.clone(), a)))
        .collect();

    judgments
        .into_iter()
        .map(|mut j| {
            if j.label != Label::NonCompliant {
                return j;
            }
            if is_meta(&j.cu_id) {
                j.label = Label::NotApplicable;
                j.score = 0.0;
                j.flags.push("meta-violation-excluded".to_string());
            } else if article_of(&j.cu_id)
                .is_some_and(|a| suppressed.contains(&(j.anchor_id.clone(), a)))
            {
                j.label = Label::NotApplicable;
                j.score = 0.0;
                j.flags.push("suppressed-by-meta".to_string());
            }
            j
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::mock::{MockChat, PipelineMock};
    use crate::adapters::TaskCatalog;
    use crate::context::{Entity, Relation};
    use crate::gate::evidence_window;
    use crate::policy::{CharSpan, ComplianceUnit, EdgeKind, NodeKind, PolicyNode};
    use crate::retrieval::{AnchorGroup, PlanItem};
    use std::collections::BTreeSet;
    use std::sync::Arc;

    fn test_ctx() -> ContextGraph {
        ContextGraph {
            entities: vec![
                Entity {
                    id: "e1".into(),
                    name: "clinic operator".into(),
                    etype: "actor".into(),
                    hypernym: Some("operator".into()),
                    hypernyms: None,
                },
                Entity {
                    id: "e2".into(),
                    name: "privacy officer".into(),
                    etype: "actor".into(),
                    hypernym: None,
                    hypernyms: None,
                },
            ],
            relations: vec![Relation {
                subj: "e1".into(),
                pred: "not_designated".into(),
                obj: "e2".into(),
            }],
            source: None,
        }
    }

    fn test_anchor() -> Anchor {
        let mut hypernyms = BTreeSet::new();
        hypernyms.insert("operator".to_string());
        Anchor {
            id: "a1".into(),
            group: AnchorGroup::Actor,
            entity_ids: vec!["e1".into(), "e2".into()],
            predicate: "not_designated".into(),
            actor_type: "operator".into(),
            object_type: "privacy officer".into(),
            hypernyms,
        }
    }

    fn plan_of(items: &[(&str, &str, &str)]) -> CUPlan {
        CUPlan {
            anchor: "a1".into(),
            degraded: false,
            items: items
                .iter()
                .map(|(cu_id, subject, constraint)| PlanItem {
                    cu_id: cu_id.to_string(),
                    subject: subject.to_string(),
                    condition: String::new(),
                    constraint: constraint.to_string(),
                    context: String::new(),
                    cu_type: "actor_cu".into(),
                    bi_score: 0.5,
                    rerank_score: None,
                })
                .collect(),
        }
    }

    fn pipeline_client() -> ChatClient {
        ChatClient::new(TaskCatalog::default(), Arc::new(PipelineMock::new()))
    }

    #[test]
    fn one_judgment_per_plan_item_in_order() {
        let ctx = test_ctx();
        let anchor = test_anchor();
        let window = evidence_window(&ctx, &anchor, 1);
        let plan = plan_of(&[
            ("cu1", "the operator", "shall designate a privacy officer"),
            ("cu2", "the operator", "shall keep a register"),
            ("cu3", "the vendor", "shall report incidents"),
        ]);
        let judgments =
            judge_listwise(&window, &plan, &anchor, &ctx, &pipeline_client()).unwrap();
        assert_eq!(judgments.len(), 3);
        let ids: Vec<&str> = judgments.iter().map(|j| j.cu_id.as_str()).collect();
        assert_eq!(ids, vec!["cu1", "cu2", "cu3"]);
    }

    #[test]
    fn negated_fact_yields_violation() {
        let ctx = test_ctx();
        let anchor = test_anchor();
        let window = evidence_window(&ctx, &anchor, 1);
        let plan = plan_of(&[("cu1", "the operator", "shall designate a privacy officer")]);
        let judgments =
            judge_listwise(&window, &plan, &anchor, &ctx, &pipeline_client()).unwrap();
        assert_eq!(judgments[0].label, Label::NonCompliant);
        assert_eq!(judgments[0].evid, vec!["r1"]);
    }

    #[test]
    fn bad_labels_fall_back_to_insufficient_with_flag() {
        let ctx = test_ctx();
        let anchor = test_anchor();
        let window = evidence_window(&ctx, &anchor, 1);
        let plan = plan_of(&[
            ("cu1", "the operator", "shall designate an officer"),
            ("cu2", "the operator", "shall keep a register"),
        ]);
        // Always emits an out-of-set label; schema validation rejects it
        // twice, so the fallback path fills INSUFFICIENT.
        let mock = MockChat::new().with_handler(TASK_JUDGE, |payload| {
            let n = payload["plan"].as_array().map(Vec::len).unwrap_or(0);
            let judgments: Vec<Value> = (0..n)
                .map(|i| {
                    json!({"cu_id": format!("cu{}", i + 1), "label": "MAYBE", "score": 0.5, "why": "", "evid": []})
                })
                .collect();
            Some(json!({ "judgments": judgments }))
        });
        let chat = ChatClient::new(TaskCatalog::default(), Arc::new(mock));
        let judgments = judge_listwise(&window, &plan, &anchor, &ctx, &chat).unwrap();
        assert_eq!(judgments.len(), 2);
        for j in &judgments {
            assert_eq!(j.label, Label::Insufficient);
            assert_eq!(j.score, 0.0);
            assert!(j.flags.contains(&"judge-fallback".to_string()));
        }
    }

    #[test]
    fn evid_outside_window_is_filtered() {
        let ctx = test_ctx();
        let anchor = test_anchor();
        let window = evidence_window(&ctx, &anchor, 1);
        let plan = plan_of(&[("cu1", "the operator", "shall designate an officer")]);
        let mock = MockChat::new().with_handler(TASK_JUDGE, |_| {
            Some(json!({"judgments": [
                {"cu_id": "cu1", "label": "COMPLIANT", "score": 0.9, "why": "", "evid": ["r1", "r99"]}
            ]}))
        });
        let chat = ChatClient::new(TaskCatalog::default(), Arc::new(mock));
        let judgments = judge_listwise(&window, &plan, &anchor, &ctx, &chat).unwrap();
        assert_eq!(judgments[0].evid, vec!["r1"]);
        assert!(judgments[0].flags.contains(&"evid-filtered".to_string()));
    }

    fn override_policy() -> PolicyGraph {
        let mut g = PolicyGraph::new();
        let structure = |id: &str| PolicyNode {
            id: id.into(),
            kind: NodeKind::Structure,
            label: String::new(),
            text: None,
            attrs: None,
            cu_type: None,
        };
        let cu = |id: &str, constraint: &str, condition: Option<&str>| PolicyNode {
            id: id.into(),
            kind: NodeKind::ComplianceUnit,
            label: String::new(),
            text: None,
            attrs: Some(ComplianceUnit {
                subject: "the operator".into(),
                condition: condition.map(|c| CondTree::Leaf(c.into())),
                constraint: vec![constraint.into()],
                context: None,
                char_span: CharSpan::default(),
                references: Vec::new(),
            }),
            cu_type: Some(CuType::ActorCu),
        };
        g.add_node(structure("DOC:R")).unwrap();
        g.add_node(structure("DOC:R/ARTICLE:3")).unwrap();
        g.add_node(structure("DOC:R/ARTICLE:4")).unwrap();
        g.add_node(cu("DOC:R/ARTICLE:3/CU:1", "shall encrypt client records", None))
            .unwrap();
        g.add_node(cu(
            "DOC:R/ARTICLE:4/CU:2",
            "the duty to encrypt shall not apply",
            Some("records are fully anonymised"),
        ))
        .unwrap();
        g.add_edge(EdgeKind::CONTAIN, "DOC:R", "DOC:R/ARTICLE:3");
        g.add_edge(EdgeKind::CONTAIN, "DOC:R", "DOC:R/ARTICLE:4");
        g.add_edge(EdgeKind::DERIVES, "DOC:R/ARTICLE:3", "DOC:R/ARTICLE:3/CU:1");
        g.add_edge(EdgeKind::DERIVES, "DOC:R/ARTICLE:4", "DOC:R/ARTICLE:4/CU:2");
        g.add_edge(EdgeKind::REFERS, "DOC:R/ARTICLE:3/CU:1", "DOC:R/ARTICLE:4");
        g
    }

    fn anonymised_ctx() -> ContextGraph {
        ContextGraph {
            entities: vec![
                Entity {
                    id: "e1".into(),
                    name: "operator".into(),
                    etype: "actor".into(),
                    hypernym: None,
                    hypernyms: None,
                },
                Entity {
                    id: "e2".into(),
                    name: "fully anonymised records".into(),
                    etype: "data_item".into(),
                    hypernym: None,
                    hypernyms: None,
                },
            ],
            relations: vec![Relation {
                subj: "e1".into(),
                pred: "not_encrypted".into(),
                obj: "e2".into(),
            }],
            source: None,
        }
    }

    fn violation(cu_id: &str) -> Judgment {
        Judgment {
            anchor_id: "a1".into(),
            cu_id: cu_id.into(),
            label: Label::NonCompliant,
            score: 0.8,
            why: "records were not encrypted".into(),
            evid: vec!["r1".into()],
            overridden: false,
            overridden_by: None,
            flags: Vec::new(),
        }
    }

    #[test]
    fn affirmed_exception_overrides_violation() {
        let policy = override_policy();
        let ctx = anonymised_ctx();
        let anchor = test_anchor();
        let window = evidence_window(&ctx, &anchor, 1);
        let mock = Arc::new(PipelineMock::new());
        let chat = ChatClient::new(TaskCatalog::default(), mock.clone());
        let out = apply_overrides(
            vec![violation("DOC:R/ARTICLE:3/CU:1")],
            &policy,
            &window,
            &ctx,
            &chat,
        )
        .unwrap();
        assert_eq!(out[0].label, Label::Compliant);
        assert!(out[0].overridden);
        assert_eq!(out[0].overridden_by.as_deref(), Some("DOC:R/ARTICLE:4/CU:2"));
        assert_eq!(mock.call_count(), 1);
    }

    #[test]
    fn compliant_judgment_untouched_no_call() {
        let policy = override_policy();
        let ctx = anonymised_ctx();
        let anchor = test_anchor();
        let window = evidence_window(&ctx, &anchor, 1);
        let mock = Arc::new(PipelineMock::new());
        let chat = ChatClient::new(TaskCatalog::default(), mock.clone());
        let mut ok = violation("DOC:R/ARTICLE:3/CU:1");
        ok.label = Label::Compliant;
        let out = apply_overrides(vec![ok], &policy, &window, &ctx, &chat).unwrap();
        assert_eq!(out[0].label, Label::Compliant);
        assert!(!out[0].overridden);
        assert_eq!(mock.call_count(), 0);
    }

    #[test]
    fn empty_closure_untouched_no_call() {
        let policy = override_policy();
        let ctx = anonymised_ctx();
        let anchor = test_anchor();
        let window = evidence_window(&ctx, &anchor, 1);
        let mock = Arc::new(PipelineMock::new());
        let chat = ChatClient::new(TaskCatalog::default(), mock.clone());
        // The exception unit itself has no outgoing references beyond its
        // derivation chain back to CU:1; use a violation on CU:2 whose
        // closure is {CU:1} (non-empty) — so instead check a detached unit.
        let mut g = policy.clone();
        g.add_node(PolicyNode {
            id: "DOC:R/ARTICLE:5/CU:9".into(),
            kind: NodeKind::ComplianceUnit,
            label: String::new(),
            text: None,
            attrs: Some(ComplianceUnit {
                subject: "the operator".into(),
                condition: None,
                constraint: vec!["shall log access".into()],
                context: None,
                char_span: CharSpan::default(),
                references: Vec::new(),
            }),
            cu_type: Some(CuType::ActorCu),
        })
        .unwrap();
        let out = apply_overrides(
            vec![violation("DOC:R/ARTICLE:5/CU:9")],
            &g,
            &window,
            &ctx,
            &chat,
        )
        .unwrap();
        assert_eq!(out[0].label, Label::NonCompliant);
        assert_eq!(mock.call_count(), 0);
    }

    #[test]
    fn adapter_failure_flags_override_unevaluated() {
        let policy = override_policy();
        let ctx = anonymised_ctx();
        let anchor = test_anchor();
        let window = evidence_window(&ctx, &anchor, 1);
        let chat = ChatClient::new(
            TaskCatalog::default(),
            Arc::new(crate::adapters::mock::FailingChat),
        );
        let out = apply_overrides(
            vec![violation("DOC:R/ARTICLE:3/CU:1")],
            &policy,
            &window,
            &ctx,
            &chat,
        )
        .unwrap();
        assert_eq!(out[0].label, Label::NonCompliant);
        assert!(out[0].flags.contains(&"override-unevaluated".to_string()));
    }

    #[test]
    fn exception_id_outside_closure_is_rejected() {
        let policy = override_policy();
        let ctx = anonymised_ctx();
        let anchor = test_anchor();
        let window = evidence_window(&ctx, &anchor, 1);
        let mock = MockChat::new().with_handler(TASK_JUDGE_REFS, |_| {
            Some(json!({"exception": true, "exception_cu_id": "DOC:R/ARTICLE:9/CU:404", "why": ""}))
        });
        let chat = ChatClient::new(TaskCatalog::default(), Arc::new(mock));
        let out = apply_overrides(
            vec![violation("DOC:R/ARTICLE:3/CU:1")],
            &policy,
            &window,
            &ctx,
            &chat,
        )
        .unwrap();
        assert_eq!(out[0].label, Label::NonCompliant);
        assert!(out[0]
            .flags
            .contains(&"override-invalid-response".to_string()));
    }

    #[test]
    fn meta_not_applicable_suppresses_sibling_violations() {
        let mut policy = override_policy();
        policy
            .add_node(PolicyNode {
                id: "DOC:R/ARTICLE:3/CU:META".into(),
                kind: NodeKind::ComplianceUnit,
                label: String::new(),
                text: None,
                attrs: Some(ComplianceUnit {
                    subject: "these rules".into(),
                    condition: None,
                    constraint: vec!["shall apply to active client records".into()],
                    context: None,
                    char_span: CharSpan::default(),
                    references: Vec::new(),
                }),
                cu_type: Some(CuType::MetaCu),
            })
            .unwrap();
        policy.add_edge(EdgeKind::DERIVES, "DOC:R/ARTICLE:3", "DOC:R/ARTICLE:3/CU:META");

        let mut meta = violation("DOC:R/ARTICLE:3/CU:META");
        meta.label = Label::NotApplicable;
        let actor = violation("DOC:R/ARTICLE:3/CU:1");

        let out = gate_meta(vec![meta, actor], &policy);
        assert_eq!(out[1].label, Label::NotApplicable);
        assert_eq!(out[1].score, 0.0);
        assert!(out[1].flags.contains(&"suppressed-by-meta".to_string()));
    }

    #[test]
    fn meta_violation_not_reported_standalone() {
        let mut policy = override_policy();
        policy
            .add_node(PolicyNode {
                id: "DOC:R/ARTICLE:3/CU:META".into(),
                kind: NodeKind::ComplianceUnit,
                label: String::new(),
                text: None,
                attrs: Some(ComplianceUnit {
                    subject: "these rules".into(),
                    condition: None,
                    constraint: vec!["shall apply to client records".into()],
                    context: None,
                    char_span: CharSpan::default(),
                    references: Vec::new(),
                }),
                cu_type: Some(CuType::MetaCu),
            })
            .unwrap();
        policy.add_edge(EdgeKind::DERIVES, "DOC:R/ARTICLE:3", "DOC:R/ARTICLE:3/CU:META");

        let meta_violation = violation("DOC:R/ARTICLE:3/CU:META");
        let out = gate_meta(vec![meta_violation], &policy);
        assert_eq!(out[0].label, Label::NotApplicable);
        assert!(out[0].flags.contains(&"meta-violation-excluded".to_string()));
        // Actor violations in other anchors are unaffected.
        let actor = violation("DOC:R/ARTICLE:3/CU:1");
        let out = gate_meta(vec![actor], &policy);
        assert_eq!(out[0].label, Label::NonCompliant);
    }
}
