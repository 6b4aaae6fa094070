//! Context graph: entities and relations extracted from scenario text, with
//! policy-vocabulary hypernym annotations.

pub mod build;
pub mod fragments;
pub mod hypernym;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::canon;

pub use build::{extract_er_triples, ContextBuildConfig, ContextGraphBuilder};
pub use fragments::{DenseFragmentIndex, Fragment, FragmentKind, FragmentRetriever};
pub use hypernym::{aggregate_hypernyms, propose_hypernyms, top_n_hypernyms, HypernymProposal};

/// STRONG proposals are backed by premise fragments; WEAK by anything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strength {
    STRONG,
    WEAK,
}

/// Ordered (label, score, strength) triples retained for one entity.
pub type RankedHypernyms = Vec<(String, f64, Strength)>;

/// One retained hypernym annotation on an entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypernymEntry {
    pub label: String,
    pub score: f64,
    pub strength: Strength,
}

/// A scenario entity. `hypernym` carries the single best label; `hypernyms`
/// the full retained list (absent on files that predate the extended field).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub name: String,
    #[serde(rename = "type")]
    pub etype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypernym: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypernyms: Option<Vec<HypernymEntry>>,
}

impl Entity {
    pub fn hypernym_labels(&self) -> Vec<&str> {
        match &self.hypernyms {
            Some(list) => list.iter().map(|h| h.label.as_str()).collect(),
            None => self.hypernym.as_deref().into_iter().collect(),
        }
    }
}

/// An ER triple between two entities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub subj: String,
    pub pred: String,
    pub obj: String,
}

/// The context graph for one scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextGraph {
    pub entities: Vec<Entity>,
    pub relations: Vec<Relation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl ContextGraph {
    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    /// Referential integrity and uniqueness checks; errors name the relation.
    pub fn validate(&self) -> Result<()> {
        let mut seen_ids = std::collections::BTreeSet::new();
        for entity in &self.entities {
            if !seen_ids.insert(&entity.id) {
                return Err(Error::Invalid(format!("duplicate entity id {}", entity.id)));
            }
            if let Some(list) = &entity.hypernyms {
                for pair in list.windows(2) {
                    if pair[1].score > pair[0].score {
                        return Err(Error::Invalid(format!(
                            "entity {} hypernym scores are not non-increasing",
                            entity.id
                        )));
                    }
                }
            }
        }
        let mut seen_rel = std::collections::BTreeSet::new();
        for relation in &self.relations {
            let name = format!("({}, {}, {})", relation.subj, relation.pred, relation.obj);
            for endpoint in [&relation.subj, &relation.obj] {
                if self.entity(endpoint).is_none() {
                    return Err(Error::DanglingRelation {
                        relation: name.clone(),
                        entity: endpoint.clone(),
                    });
                }
            }
            if !seen_rel.insert((&relation.subj, &relation.pred, &relation.obj)) {
                return Err(Error::Invalid(format!("duplicate relation {name}")));
            }
        }
        Ok(())
    }

    /// Canonical pretty JSON (the Context Graph File format).
    pub fn to_json(&self) -> Result<String> {
        canon::to_canonical_pretty(self)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let graph: ContextGraph = serde_json::from_str(raw)?;
        graph.validate()?;
        Ok(graph)
    }
}
