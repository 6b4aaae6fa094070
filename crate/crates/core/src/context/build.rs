//! ER-triple extraction and context graph assembly.

use serde_json::{json, Value};

use crate::adapters::task::TASK_CTX_EXTRACT;
use crate::adapters::ChatClient;
use crate::error::Result;
use crate::util::parallel::parallel_map;

use super::fragments::FragmentRetriever;
use super::hypernym::{aggregate_hypernyms, label_strengths, propose_hypernyms, top_n_hypernyms};
use super::{ContextGraph, Entity, HypernymEntry, RankedHypernyms, Relation};

/// Extract entities and relations from scenario text.
///
/// Empty text yields an empty graph with no adapter call. Relations with
/// dangling endpoints are dropped and reported in the returned warnings.
pub fn extract_er_triples(
    text: &str,
    chat: &ChatClient,
) -> Result<(Vec<Entity>, Vec<Relation>, Vec<String>)> {
    if text.trim().is_empty() {
        return Ok((Vec::new(), Vec::new(), Vec::new()));
    }
    let outcome = chat.call(TASK_CTX_EXTRACT, json!({ "text": text }))?;
    let empty = Vec::new();
    let mut warnings = Vec::new();

    let mut entities: Vec<Entity> = Vec::new();
    for item in outcome
        .value
        .get("entities")
        .and_then(Value::as_array)
        .unwrap_or(&empty)
    {
        let id = item.get("id").and_then(Value::as_str).unwrap_or("").to_string();
        if id.is_empty() {
            warnings.push("entity with empty id dropped".to_string());
            continue;
        }
        if entities.iter().any(|e| e.id == id) {
            warnings.push(format!("duplicate entity id {id} dropped"));
            continue;
        }
        entities.push(Entity {
            id,
            name: item.get("name").and_then(Value::as_str).unwrap_or("").to_string(),
            etype: item.get("type").and_then(Value::as_str).unwrap_or("").to_string(),
            hypernym: None,
            hypernyms: None,
        });
    }

    let mut relations: Vec<Relation> = Vec::new();
    for item in outcome
        .value
        .get("relations")
        .and_then(Value::as_array)
        .unwrap_or(&empty)
    {
        let relation = Relation {
            subj: item.get("subj").and_then(Value::as_str).unwrap_or("").to_string(),
            pred: item.get("pred").and_then(Value::as_str).unwrap_or("").to_string(),
            obj: item.get("obj").and_then(Value::as_str).unwrap_or("").to_string(),
        };
        let dangling = [&relation.subj, &relation.obj]
            .into_iter()
            .find(|id| !entities.iter().any(|e| &e.id == *id));
        if let Some(id) = dangling {
            warnings.push(format!(
                "relation ({}, {}, {}) dropped: unknown entity {id}",
                relation.subj, relation.pred, relation.obj
            ));
            continue;
        }
        if relations.contains(&relation) {
            warnings.push(format!(
                "duplicate relation ({}, {}, {}) dropped",
                relation.subj, relation.pred, relation.obj
            ));
            continue;
        }
        relations.push(relation);
    }

    Ok((entities, relations, warnings))
}

/// Assemble a context graph from parts, attaching the best hypernym per
/// entity and the full retained list.
pub fn build_context_graph(
    mut entities: Vec<Entity>,
    relations: Vec<Relation>,
    hypernyms: &[(String, RankedHypernyms)],
    source: Option<String>,
) -> Result<ContextGraph> {
    for (entity_id, list) in hypernyms {
        if let Some(entity) = entities.iter_mut().find(|e| &e.id == entity_id) {
            if list.is_empty() {
                entity.hypernym = None;
                entity.hypernyms = None;
            } else {
                entity.hypernym = Some(list[0].0.clone());
                entity.hypernyms = Some(
                    list.iter()
                        .map(|(label, score, strength)| HypernymEntry {
                            label: label.clone(),
                            score: *score,
                            strength: *strength,
                        })
                        .collect(),
                );
            }
        }
    }
    let graph = ContextGraph {
        entities,
        relations,
        source,
    };
    graph.validate()?;
    Ok(graph)
}

/// Knobs for context construction.
#[derive(Debug, Clone)]
pub struct ContextBuildConfig {
    /// Fragments consulted per entity.
    pub m: usize,
    /// Hypernyms retained per entity.
    pub n: usize,
    /// STRONG bonus.
    pub beta: f64,
    pub jobs: usize,
}

impl Default for ContextBuildConfig {
    fn default() -> Self {
        Self {
            m: 5,
            n: 5,
            beta: 0.3,
            jobs: 1,
        }
    }
}

/// End-to-end context construction for one scenario.
pub struct ContextGraphBuilder<'a> {
    pub chat: &'a ChatClient,
    pub retriever: &'a dyn FragmentRetriever,
    pub config: ContextBuildConfig,
}

impl ContextGraphBuilder<'_> {
    /// Extract triples, propose/aggregate/select hypernyms per entity
    /// (concurrently up to `jobs`, merged in entity order), and assemble.
    pub fn build(&self, text: &str, source: Option<String>) -> Result<(ContextGraph, Vec<String>)> {
        let (entities, relations, mut warnings) = extract_er_triples(text, self.chat)?;

        let outcomes = parallel_map(entities.clone(), self.config.jobs, |entity| {
            propose_hypernyms(entity, self.retriever, self.chat, self.config.m)
        });

        let mut per_entity: Vec<(String, RankedHypernyms)> = Vec::new();
        for (entity, outcome) in entities.iter().zip(outcomes) {
            let (proposals, mut warns) = outcome?;
            warnings.append(&mut warns);
            let scores = aggregate_hypernyms(&proposals, self.config.beta);
            let strengths = label_strengths(&proposals);
            let top = top_n_hypernyms(&scores, &strengths, self.config.n);
            per_entity.push((entity.id.clone(), top));
        }

        let graph = build_context_graph(entities, relations, &per_entity, source)?;
        Ok((graph, warnings))
    }
}
