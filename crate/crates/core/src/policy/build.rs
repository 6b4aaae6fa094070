//! Policy graph construction: structure pass, unit extraction, reference
//! linking.
//!
//! The builder is single-writer; the finished [`PolicyGraph`] is immutable.
//! Adapter batches may run concurrently up to the configured `jobs` limit —
//! results are merged in document order regardless of completion order, so
//! rebuilds from the same input are byte-identical under mock adapters.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use serde_json::{json, Value};

use crate::adapters::task::{TASK_CU_EXTRACT, TASK_CU_REFERENCE};
use crate::adapters::ChatClient;
use crate::error::{Error, Result};
use crate::util::canon;
use crate::util::parallel::parallel_map;

use super::document::{DocKind, DocNode};
use super::refs::{explicit_refs, RefResolver};
use super::{CharSpan, ComplianceUnit, CondTree, CuType, EdgeKind, NodeKind, PolicyGraph, PolicyNode};

/// Decides premise vs unit-bearing per article.
pub trait PremiseClassifier {
    /// `Ok(true)` marks the article premise. Errors leave it unclassified.
    fn classify(&self, article: &DocNode) -> Result<bool>;
}

/// Title-keyword classifier (case-insensitive substring match).
#[derive(Debug, Clone)]
pub struct PremiseRuleClassifier {
    pub keywords: Vec<String>,
}

impl Default for PremiseRuleClassifier {
    fn default() -> Self {
        Self {
            keywords: ["definition", "scope", "subject matter", "subject-matter", "objective"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl PremiseRuleClassifier {
    pub fn new(keywords: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            keywords: keywords.into_iter().map(Into::into).collect(),
        }
    }
}

impl PremiseClassifier for PremiseRuleClassifier {
    fn classify(&self, article: &DocNode) -> Result<bool> {
        let title = article.title.to_lowercase();
        Ok(self.keywords.iter().any(|k| title.contains(&k.to_lowercase())))
    }
}

/// What happened during a build; written alongside the graph file.
#[derive(Debug, Default, Clone, Serialize)]
pub struct BuildReport {
    pub premise_articles: Vec<String>,
    pub unclassified_articles: Vec<String>,
    pub skipped_cus: Vec<String>,
    pub unresolved_refs: Vec<String>,
    pub warnings: Vec<String>,
    pub adapter_calls: usize,
    pub implicit_refs_incomplete: bool,
    /// Set when a stage aborted and the graph is partial.
    pub partial: bool,
}

/// Single-writer builder over the three construction stages.
pub struct PolicyGraphBuilder {
    graph: PolicyGraph,
    report: BuildReport,
    /// Articles excluded from extraction (premise or unclassified), with all
    /// their descendants.
    excluded_subtrees: BTreeSet<String>,
    /// Leaf clause nodes eligible for extraction, in document order.
    extraction_points: Vec<String>,
    batch_size: usize,
    jobs: usize,
    structure_done: bool,
}

impl PolicyGraphBuilder {
    pub fn new() -> Self {
        Self {
            graph: PolicyGraph::new(),
            report: BuildReport::default(),
            excluded_subtrees: BTreeSet::new(),
            extraction_points: Vec::new(),
            batch_size: 8,
            jobs: 1,
            structure_done: false,
        }
    }

    pub fn batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    /// Structure pass: one node per document node, CONTAIN edges mirroring
    /// the tree, premise/unit marking at article granularity.
    pub fn structure_pass(
        mut self,
        tree: &DocNode,
        classifier: &dyn PremiseClassifier,
    ) -> Result<Self> {
        let mut article_marks: HashMap<String, Option<bool>> = HashMap::new();
        let mut order: Vec<(&DocNode, Option<&DocNode>)> = Vec::new();
        tree.walk(&mut |node, parent| order.push((node, parent)));

        for (node, _) in &order {
            if node.kind == DocKind::Article {
                match classifier.classify(node) {
                    Ok(is_premise) => {
                        article_marks.insert(node.id.clone(), Some(is_premise));
                    }
                    Err(e) => {
                        article_marks.insert(node.id.clone(), None);
                        self.report
                            .warnings
                            .push(format!("classifier failed on {}: {e}", node.id));
                    }
                }
            }
        }

        for (node, parent) in &order {
            // Premise marking propagates from the article to its subtree.
            let enclosing_article_mark = enclosing_article(node, &order)
                .and_then(|a| article_marks.get(a).copied())
                .flatten();
            let kind = match enclosing_article_mark {
                Some(true) => NodeKind::Premise,
                _ => NodeKind::Structure,
            };
            let label = if node.title.is_empty() {
                super::segment_label(&node.id).to_string()
            } else {
                node.title.clone()
            };
            self.graph.add_node(PolicyNode {
                id: node.id.clone(),
                kind,
                label,
                text: node.text.clone(),
                attrs: None,
                cu_type: None,
            })?;
            if let Some(parent) = parent {
                self.graph.add_edge(EdgeKind::CONTAIN, &parent.id, &node.id);
            }
        }

        for (id, mark) in &article_marks {
            match mark {
                Some(true) => {
                    self.report.premise_articles.push(id.clone());
                    self.excluded_subtrees.insert(id.clone());
                }
                None => {
                    self.report.unclassified_articles.push(id.clone());
                    self.excluded_subtrees.insert(id.clone());
                }
                Some(false) => {}
            }
        }
        self.report.premise_articles.sort();
        self.report.unclassified_articles.sort();

        // Eligible clause leaves, document order.
        for (node, _) in &order {
            if !node.is_leaf() || node.text.is_none() || node.kind == DocKind::Document {
                continue;
            }
            let excluded = self
                .excluded_subtrees
                .iter()
                .any(|prefix| node.id == *prefix || node.id.starts_with(&format!("{prefix}/")));
            if !excluded {
                self.extraction_points.push(node.id.clone());
            }
        }
        self.structure_done = true;
        Ok(self)
    }

    /// Extraction pass: one adapter call per batch of eligible clauses; each
    /// returned unit is validated, given a stable nonce id, and linked with a
    /// DERIVES edge. Invalid units are retried once with the whole batch,
    /// then skipped with a log entry.
    pub fn extract_units(mut self, chat: &ChatClient) -> Result<Self> {
        assert!(self.structure_done, "structure_pass must run first");

        let points: Vec<(String, String)> = self
            .extraction_points
            .iter()
            .map(|id| {
                let text = self
                    .graph
                    .node(id)
                    .and_then(|n| n.text.clone())
                    .unwrap_or_default();
                (id.clone(), text)
            })
            .collect();

        let batches: Vec<Vec<(String, String)>> = points
            .chunks(self.batch_size)
            .map(|c| c.to_vec())
            .collect();

        let outcomes = parallel_map(batches, self.jobs, |batch| {
            let items: Vec<Value> = batch
                .iter()
                .map(|(id, text)| json!({"point_id": id, "text": text}))
                .collect();
            let payload = json!({ "items": items });
            let mut calls = 0usize;
            let mut last: Result<Value> = Err(Error::Invalid("no attempt".into()));
            for attempt in 0..2 {
                calls += 1;
                match chat.call(TASK_CU_EXTRACT, payload.clone()) {
                    Ok(outcome) => {
                        let all_valid = invalid_cu_log(&outcome.value, batch).is_empty();
                        last = Ok(outcome.value);
                        if all_valid || attempt == 1 {
                            break;
                        }
                    }
                    Err(e) => {
                        last = Err(e.into());
                        break;
                    }
                }
            }
            (calls, last)
        });

        for (batch, (calls, outcome)) in points
            .chunks(self.batch_size)
            .zip(outcomes)
        {
            self.report.adapter_calls += calls;
            let value = match outcome {
                Ok(v) => v,
                Err(e) => {
                    self.report.partial = true;
                    return Err(e);
                }
            };
            // Units that are still invalid after the retry are skipped and
            // logged during the merge.
            self.merge_batch(batch, &value)?;
        }
        Ok(self)
    }

    fn merge_batch(&mut self, batch: &[(String, String)], response: &Value) -> Result<()> {
        let empty = Vec::new();
        let items = response.get("items").and_then(Value::as_array).unwrap_or(&empty);
        let by_point: HashMap<&str, &Value> = items
            .iter()
            .filter_map(|item| item.get("point_id").and_then(Value::as_str).map(|id| (id, item)))
            .collect();

        for (point_id, text) in batch {
            let Some(item) = by_point.get(point_id.as_str()) else {
                continue;
            };
            let cus = item.get("cus").and_then(Value::as_array).unwrap_or(&empty);
            for cu_value in cus {
                match parse_cu(cu_value, text.len()) {
                    Ok((unit, cu_type)) => {
                        let nonce = cu_nonce(point_id, &unit);
                        let cu_id = format!("{point_id}/CU:{nonce}");
                        if self.graph.node(&cu_id).is_some() {
                            self.report
                                .skipped_cus
                                .push(format!("{cu_id}: duplicate unit skipped"));
                            continue;
                        }
                        let label = cu_label(&unit);
                        self.graph.add_node(PolicyNode {
                            id: cu_id.clone(),
                            kind: NodeKind::ComplianceUnit,
                            label,
                            text: None,
                            attrs: Some(unit),
                            cu_type: Some(cu_type),
                        })?;
                        self.graph.add_edge(EdgeKind::DERIVES, point_id, &cu_id);
                    }
                    Err(e) => {
                        self.report.skipped_cus.push(format!("{point_id}: {e}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Reference pass: explicit tokens from each unit's source clause, plus
    /// adapter-resolved implicit references; REFERS edges to the finest
    /// existing target. Adapter failure leaves explicit references applied
    /// and marks the implicit pass incomplete.
    pub fn resolve_references(mut self, chat: &ChatClient) -> Result<Self> {
        let cus: Vec<(String, String, String)> = self
            .graph
            .cu_nodes()
            .map(|n| {
                let source = self.graph.cu_source_text(&n.id).unwrap_or("").to_string();
                let article_label = self
                    .graph
                    .article_of(&n.id)
                    .map(|a| super::segment_label(a).to_string())
                    .unwrap_or_default();
                (n.id.clone(), source, article_label)
            })
            .collect();

        let mut refs_by_cu: HashMap<String, Vec<String>> = HashMap::new();
        for (cu_id, source, _) in &cus {
            refs_by_cu.insert(cu_id.clone(), explicit_refs(source));
        }

        let batches: Vec<Vec<(String, String, String)>> = cus
            .chunks(self.batch_size)
            .map(|c| c.to_vec())
            .collect();
        let outcomes = parallel_map(batches, self.jobs, |batch| {
            let items: Vec<Value> = batch
                .iter()
                .map(|(cu_id, source, article_label)| {
                    json!({"cu_id": cu_id, "article_label": article_label, "source_text": source})
                })
                .collect();
            chat.call(TASK_CU_REFERENCE, json!({ "items": items }))
        });

        for outcome in outcomes {
            self.report.adapter_calls += 1;
            match outcome {
                Ok(chat_outcome) => {
                    let empty = Vec::new();
                    let items = chat_outcome
                        .value
                        .get("items")
                        .and_then(Value::as_array)
                        .unwrap_or(&empty);
                    for item in items {
                        let Some(cu_id) = item.get("cu_id").and_then(Value::as_str) else {
                            continue;
                        };
                        let Some(found) = refs_by_cu.get_mut(cu_id) else {
                            self.report
                                .warnings
                                .push(format!("reference response names unknown unit {cu_id}"));
                            continue;
                        };
                        for token in item
                            .get("references")
                            .and_then(Value::as_array)
                            .unwrap_or(&empty)
                            .iter()
                            .filter_map(Value::as_str)
                        {
                            if super::refs::parse_ref_token(token).is_none() {
                                self.report
                                    .warnings
                                    .push(format!("{cu_id}: implicit token `{token}` rejected"));
                                continue;
                            }
                            if !found.iter().any(|t| t == token) {
                                found.push(token.to_string());
                            }
                        }
                    }
                }
                Err(e) => {
                    self.report.implicit_refs_incomplete = true;
                    self.report
                        .warnings
                        .push(format!("implicit reference pass incomplete: {e}"));
                    break;
                }
            }
        }

        // Resolve tokens and materialize edges.
        let mut edges: Vec<(String, String)> = Vec::new();
        let mut unresolved: Vec<String> = Vec::new();
        {
            let resolver = RefResolver::new(&self.graph);
            for (cu_id, _, _) in &cus {
                for token in &refs_by_cu[cu_id] {
                    match resolver.resolve(token) {
                        Some(target) if target != cu_id => {
                            edges.push((cu_id.clone(), target.to_string()));
                        }
                        Some(_) => {}
                        None => unresolved.push(format!("{cu_id} -> {token}")),
                    }
                }
            }
        }
        for (src, dst) in edges {
            self.graph.add_edge(EdgeKind::REFERS, &src, &dst);
        }
        self.report.unresolved_refs.extend(unresolved);

        for (cu_id, tokens) in refs_by_cu {
            if let Some(node) = self.graph.node_mut(&cu_id) {
                if let Some(attrs) = node.attrs.as_mut() {
                    attrs.references = tokens;
                    node.label = cu_label(attrs);
                }
            }
        }
        Ok(self)
    }

    pub fn finish(self) -> Result<(PolicyGraph, BuildReport)> {
        self.graph.validate()?;
        Ok((self.graph, self.report))
    }

    /// Current (possibly partial) state; for abort reporting.
    pub fn into_partial(self) -> (PolicyGraph, BuildReport) {
        (self.graph, self.report)
    }

    pub fn graph(&self) -> &PolicyGraph {
        &self.graph
    }

    pub fn report(&self) -> &BuildReport {
        &self.report
    }
}

impl Default for PolicyGraphBuilder {
    fn default() -> Self {
        Self::new()
    }
}

fn enclosing_article<'a>(
    node: &'a DocNode,
    order: &[(&'a DocNode, Option<&'a DocNode>)],
) -> Option<&'a str> {
    let mut current = node;
    loop {
        if current.kind == DocKind::Article {
            return Some(&current.id);
        }
        let parent = order
            .iter()
            .find(|(n, _)| std::ptr::eq(*n, current))
            .and_then(|(_, p)| *p)?;
        current = parent;
    }
}

/// Log lines for units in `response` that fail domain validation.
fn invalid_cu_log(response: &Value, batch: &[(String, String)]) -> Vec<String> {
    let empty = Vec::new();
    let lens: HashMap<&str, usize> = batch.iter().map(|(id, t)| (id.as_str(), t.len())).collect();
    let mut logs = Vec::new();
    for item in response.get("items").and_then(Value::as_array).unwrap_or(&empty) {
        let point_id = item.get("point_id").and_then(Value::as_str).unwrap_or("?");
        let len = lens.get(point_id).copied().unwrap_or(usize::MAX);
        for cu in item.get("cus").and_then(Value::as_array).unwrap_or(&empty) {
            if let Err(e) = parse_cu(cu, len) {
                logs.push(format!("{point_id}: {e}"));
            }
        }
    }
    logs
}

fn parse_cu(value: &Value, source_len: usize) -> Result<(ComplianceUnit, CuType)> {
    let subject = value
        .get("subject")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();
    let cu_type = match value.get("cu_type").and_then(Value::as_str) {
        Some("actor_cu") => CuType::ActorCu,
        Some("meta_cu") => CuType::MetaCu,
        other => {
            return Err(Error::Invalid(format!(
                "cu_type must be actor_cu or meta_cu, got {other:?}"
            )))
        }
    };
    let condition = match value.get("condition") {
        None | Some(Value::Null) => None,
        Some(v) => Some(CondTree::from_value(v)?),
    };
    let constraint: Vec<String> = value
        .get("constraint")
        .and_then(Value::as_array)
        .map(|items| {
            items
                .iter()
                .filter_map(Value::as_str)
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();
    let context = value
        .get("context")
        .and_then(Value::as_str)
        .map(str::to_string);
    let char_span = match value.get("char_span") {
        None | Some(Value::Null) => CharSpan::default(),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::Invalid(format!("char_span: {e}")))?,
    };

    let unit = ComplianceUnit {
        subject,
        condition,
        constraint,
        context,
        char_span,
        references: Vec::new(),
    };
    unit.validate(cu_type, source_len)?;
    Ok((unit, cu_type))
}

/// Stable 12-digit nonce from (parent id, subject, constraint).
fn cu_nonce(parent_id: &str, unit: &ComplianceUnit) -> String {
    let key = format!(
        "{parent_id}\u{1}{}\u{1}{}",
        unit.subject,
        unit.constraint.join("\u{1}")
    );
    let h = canon::stable_hash64(key.as_bytes()) % 1_000_000_000_000;
    format!("{h}")
}

/// Node label: compact canonical JSON of the subject and condition.
fn cu_label(unit: &ComplianceUnit) -> String {
    let condition = unit
        .condition
        .as_ref()
        .map(CondTree::to_value)
        .unwrap_or(Value::Null);
    canon::to_canonical_string(&json!({
        "subject": unit.subject,
        "condition": condition,
    }))
    .unwrap_or_default()
}
