//! Regenerates the canonical sample-payload fixtures.
//!
//! Run explicitly after changing the serialization format:
//! `cargo test -p compliance-core --test fixture_regen -- --ignored`

use std::path::PathBuf;

use compliance_core::context::{ContextGraph, Entity, Relation};
use compliance_core::policy::{
    CharSpan, ComplianceUnit, CondTree, CuType, NodeKind, PolicyNode,
};
use compliance_core::util::canon;

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn sample_cu_node() -> PolicyNode {
    let condition = CondTree::Any(vec![
        CondTree::Leaf(
            "processing is carried out by a public authority or body, except for courts acting in their judicial capacity".into(),
        ),
        CondTree::Leaf(
            "core activities consist of processing operations requiring regular and systematic monitoring of data subjects on a large scale".into(),
        ),
        CondTree::Leaf(
            "core activities consist of processing on a large scale of special categories of data (Art. 9) and personal data relating to criminal convictions and offences (Art. 10)".into(),
        ),
    ]);
    let attrs = ComplianceUnit {
        subject: "controller and processor".into(),
        condition: Some(condition.clone()),
        constraint: vec!["shall designate a data protection officer".into()],
        context: None,
        char_span: CharSpan {
            subject: Some([4, 25]),
            condition: Some([78, 478]),
            constraint: Some([26, 70]),
            context: None,
        },
        references: vec!["A9".into(), "A10".into()],
    };
    let label = canon::to_canonical_string(&serde_json::json!({
        "subject": attrs.subject,
        "condition": condition.to_value(),
    }))
    .unwrap();
    PolicyNode {
        id: "DOC:GDPR/CHAPTER:IV/SECTION:4/ARTICLE:37/POINT:1/CU:397313605152".into(),
        kind: NodeKind::ComplianceUnit,
        label,
        text: None,
        attrs: Some(attrs),
        cu_type: Some(CuType::ActorCu),
    }
}

pub fn sample_context_graph() -> ContextGraph {
    let entity = |id: &str, name: &str, etype: &str, hypernym: Option<&str>| Entity {
        id: id.into(),
        name: name.into(),
        etype: etype.into(),
        hypernym: hypernym.map(str::to_string),
        hypernyms: None,
    };
    ContextGraph {
        entities: vec![
            entity("e1", "IT operations manager", "actor", Some("controller")),
            entity("e2", "records export job", "system", None),
            entity("e3", "cloud region", "system", None),
            entity("e4", "weekly export file", "data_item", None),
            entity(
                "e5",
                "patient discharge date",
                "data_item",
                Some("data concerning health"),
            ),
        ],
        relations: vec![
            Relation {
                subj: "e2".into(),
                pred: "located_in".into(),
                obj: "e3".into(),
            },
            Relation {
                subj: "e4".into(),
                pred: "contains".into(),
                obj: "e5".into(),
            },
            Relation {
                subj: "e1".into(),
                pred: "operates".into(),
                obj: "e2".into(),
            },
        ],
        source: None,
    }
}

#[test]
#[ignore = "writes fixtures; run explicitly to regenerate"]
fn regenerate_canonical_fixtures() {
    let node_json = canon::to_canonical_pretty(&sample_cu_node()).unwrap();
    std::fs::write(fixture_path("listing1_cu_node.json"), node_json).unwrap();

    let ctx_json = sample_context_graph().to_json().unwrap();
    std::fs::write(fixture_path("listing2_context.json"), ctx_json).unwrap();
}
