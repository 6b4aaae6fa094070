//! Deterministic mock adapters.
//!
//! [`MockChat`] serves exact fixtures and programmable handlers keyed by
//! `(task id, canonical payload)`. [`PipelineMock`] is a rule-based transport
//! that synthesizes plausible responses for every catalog task as a pure
//! function of the payload, so the whole pipeline runs offline and two runs
//! from the same input are byte-identical. [`HashEmbedder`] is a seeded
//! hash-projection embedding: same text, same unit vector.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::AdapterError;
use crate::util::canon::{payload_hash, stable_hash64};
use crate::util::rng::SplitMix64;
use crate::util::text::{sentences, tokens};

use super::{task, ChatRequest, ChatTransport, EmbeddingAdapter};

type Handler = Arc<dyn Fn(&Value) -> Option<Value> + Send + Sync>;

/// Fixture- and handler-backed chat transport for unit tests.
#[derive(Default)]
pub struct MockChat {
    fixtures: BTreeMap<(String, String), String>,
    handlers: BTreeMap<String, Handler>,
    calls: AtomicUsize,
}

impl MockChat {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a verbatim raw response for one `(task, payload)` pair.
    pub fn with_fixture(mut self, task_id: &str, payload: &Value, response: &str) -> Self {
        let hash = payload_hash(payload).expect("fixture payload must serialize");
        self.fixtures
            .insert((task_id.to_string(), hash), response.to_string());
        self
    }

    /// Register a pure handler for a task id; `None` falls through to error.
    pub fn with_handler(
        mut self,
        task_id: &str,
        f: impl Fn(&Value) -> Option<Value> + Send + Sync + 'static,
    ) -> Self {
        self.handlers.insert(task_id.to_string(), Arc::new(f));
        self
    }

    /// Number of completed transport calls.
    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatTransport for MockChat {
    fn complete(&self, req: &ChatRequest) -> Result<String, AdapterError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = (req.task_id.clone(), req.payload_hash.clone());
        if let Some(raw) = self.fixtures.get(&key) {
            return Ok(raw.clone());
        }
        if let Some(handler) = self.handlers.get(&req.task_id) {
            if let Some(v) = handler(&req.payload) {
                return Ok(v.to_string());
            }
        }
        Err(AdapterError::Transport {
            task: req.task_id.clone(),
            message: format!("no mock fixture for payload hash {}", req.payload_hash),
        })
    }
}

/// Transport that always fails; used to exercise degraded paths.
pub struct FailingChat;

impl ChatTransport for FailingChat {
    fn complete(&self, req: &ChatRequest) -> Result<String, AdapterError> {
        Err(AdapterError::Transport {
            task: req.task_id.clone(),
            message: "transport unavailable".to_string(),
        })
    }
}

// ---------------------------------------------------------------------------
// Seeded hash-projection embeddings
// ---------------------------------------------------------------------------

/// Deterministic embedding: unigram + bigram features hashed into a fixed
/// dimension. Bigram features make word order matter.
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self { dim: 64, seed: 0 }
    }
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }

    fn vector(&self, text: &str) -> Vec<f64> {
        let toks = tokens(text);
        let mut features: Vec<(String, f64)> = Vec::new();
        for t in &toks {
            features.push((t.clone(), 1.0));
        }
        for pair in toks.windows(2) {
            features.push((format!("{}_{}", pair[0], pair[1]), 0.5));
        }
        if features.is_empty() {
            features.push(("<empty>".to_string(), 1.0));
        }

        let mut acc = vec![0.0f64; self.dim];
        for (feature, weight) in features {
            let h = stable_hash64(format!("{}\u{1}{}", self.seed, feature).as_bytes());
            let mut rng = SplitMix64::new(h);
            for slot in acc.iter_mut() {
                *slot += weight * (rng.next_f64() * 2.0 - 1.0);
            }
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in acc.iter_mut() {
                *x /= norm;
            }
        }
        acc
    }
}

impl EmbeddingAdapter for HashEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, AdapterError> {
        if texts.is_empty() {
            return Err(AdapterError::Embedding(
                "embed() requires a non-empty input list".to_string(),
            ));
        }
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

// ---------------------------------------------------------------------------
// Rule-based pipeline mock
// ---------------------------------------------------------------------------

/// Heuristic transport covering every catalog task.
///
/// Responses are pure functions of the canonical payload. The rules are
/// intentionally naive — they exist to drive the pipeline deterministically,
/// not to be good at compliance.
#[derive(Default)]
pub struct PipelineMock {
    calls: AtomicUsize,
}

const MODALS: [&str; 6] = [
    "shall not",
    "must not",
    "may not",
    "shall",
    "must",
    "may",
];

const CONDITION_INTRO: [&str; 5] = [" where ", " if ", " unless ", " when ", " provided that "];

const VERBS: [&str; 40] = [
    "designated", "designate", "designates", "appointed", "appoint", "appoints", "exported",
    "export", "exports", "transferred", "transfer", "transfers", "processed", "process",
    "processes", "stored", "store", "stores", "encrypted", "encrypt", "encrypts", "anonymised",
    "anonymise", "anonymises", "anonymized", "anonymize", "collected", "collect", "collects",
    "sent", "send", "sends", "kept", "keep", "keeps", "maintained", "maintain", "maintains",
    "shared", "shares",
];

const SYSTEM_WORDS: [&str; 8] = [
    "platform", "system", "service", "database", "server", "software", "cloud", "application",
];

const ROLE_WORDS: [&str; 14] = [
    "officer", "authority", "processor", "controller", "vendor", "operator", "manager",
    "organisation", "organization", "provider", "firm", "company", "hospital", "clinic",
];

const DATA_WORDS: [&str; 16] = [
    "data", "record", "records", "file", "files", "register", "identifier", "identifiers",
    "information", "dataset", "log", "logs", "date", "dates", "code", "codes",
];

const STOPWORDS: [&str; 26] = [
    "shall", "must", "may", "not", "the", "a", "an", "to", "of", "and", "or", "be", "is", "are",
    "any", "all", "in", "on", "for", "with", "within", "it", "its", "their", "that", "this",
];

const EXCEPTION_MARKERS: [&str; 7] = [
    "shall not apply",
    "does not apply",
    "do not apply",
    "unless",
    "except",
    "exempt",
    "derogation",
];

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Crude suffix stem so inflected forms compare equal on both sides.
fn stem(token: &str) -> String {
    let t = token;
    if t.len() > 5 && t.ends_with("ing") {
        return t[..t.len() - 3].to_string();
    }
    if t.len() > 4 && t.ends_with("ed") {
        return t[..t.len() - 2].to_string();
    }
    if t.len() > 4 && t.ends_with("es") {
        return t[..t.len() - 2].to_string();
    }
    if t.len() > 3 && t.ends_with('s') {
        return t[..t.len() - 1].to_string();
    }
    if t.len() > 4 && t.ends_with('e') {
        return t[..t.len() - 1].to_string();
    }
    t.to_string()
}

fn stem_set(text: &str) -> Vec<String> {
    let mut out: Vec<String> = tokens(text)
        .into_iter()
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .map(|t| stem(&t))
        .collect();
    out.sort();
    out.dedup();
    out
}

fn overlap_count(a: &[String], b: &[String]) -> usize {
    a.iter().filter(|t| b.binary_search(t).is_ok()).count()
}

impl PipelineMock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn handle(&self, task_id: &str, payload: &Value) -> Result<Value, AdapterError> {
        match task_id {
            task::TASK_CU_EXTRACT => Ok(mock_cu_extract(payload)),
            task::TASK_CU_REFERENCE => Ok(mock_cu_reference(payload)),
            task::TASK_CTX_EXTRACT => Ok(mock_ctx_extract(payload)),
            task::TASK_CTX_HYPERNYM => Ok(mock_ctx_hypernym(payload)),
            task::TASK_JUDGE => Ok(mock_judge(payload)),
            task::TASK_JUDGE_REFS => Ok(mock_judge_refs(payload)),
            task::TASK_RERANK_SCORE => Ok(mock_rerank(payload)),
            task::TASK_FIDELITY_RENDER => Ok(mock_render(payload)),
            other => Err(AdapterError::UnknownTask(other.to_string())),
        }
    }
}

impl ChatTransport for PipelineMock {
    fn complete(&self, req: &ChatRequest) -> Result<String, AdapterError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self.handle(&req.task_id, &req.payload)?.to_string())
    }
}

fn str_field<'a>(v: &'a Value, key: &str) -> &'a str {
    v.get(key).and_then(Value::as_str).unwrap_or("")
}

/// Extract compliance units from clause text by modal-verb splitting.
fn mock_cu_extract(payload: &Value) -> Value {
    let empty = Vec::new();
    let items = payload
        .get("items")
        .and_then(Value::as_array)
        .unwrap_or(&empty);
    let out: Vec<Value> = items
        .iter()
        .map(|item| {
            let point_id = str_field(item, "point_id");
            let text = str_field(item, "text");
            json!({"point_id": point_id, "cus": extract_units(text)})
        })
        .collect();
    json!({ "items": out })
}

fn extract_units(text: &str) -> Vec<Value> {
    let mut cus = Vec::new();
    let mut offset = 0usize;
    for raw_sentence in text.split_inclusive(['.', ';']) {
        let sentence = raw_sentence.trim_end_matches(['.', ';']);
        if let Some(cu) = extract_unit_from_sentence(sentence, offset, text) {
            cus.push(cu);
        }
        offset += raw_sentence.len();
    }
    cus
}

fn extract_unit_from_sentence(sentence: &str, base: usize, full_text: &str) -> Option<Value> {
    let lower = sentence.to_lowercase();
    let (modal_pos, _modal) = MODALS
        .iter()
        .filter_map(|m| find_word(&lower, m).map(|p| (p, *m)))
        .min_by_key(|(p, _)| *p)?;

    let subject_raw = sentence[..modal_pos].trim();
    let subject = subject_raw
        .trim_start_matches(|c: char| c == '(' || c == ')' || c.is_numeric() || c == '.' || c == ' ')
        .trim();
    if subject.is_empty() {
        return None;
    }

    let remainder = &sentence[modal_pos..];
    let remainder_lower = &lower[modal_pos..];
    let intro = CONDITION_INTRO
        .iter()
        .filter_map(|w| remainder_lower.find(w).map(|p| (p, *w)))
        .min_by_key(|(p, _)| *p);

    let (constraint_text, condition) = match intro {
        Some((pos, word)) => {
            let clause = remainder[pos + word.len()..].trim().trim_end_matches(',');
            let cond = condition_tree(clause);
            (remainder[..pos].trim(), Some((cond, modal_pos + pos + word.len())))
        }
        None => (remainder.trim(), None),
    };

    let subject_start = base + find_sub(full_text, subject, base)?;
    let constraint_start = base + find_sub(full_text, constraint_text, base)?;
    let meta = is_meta(subject, constraint_text);

    let mut char_span = json!({
        "subject": [subject_start, subject_start + subject.len()],
        "constraint": [constraint_start, constraint_start + constraint_text.len()],
        "condition": null,
        "context": null,
    });
    let condition_value = match condition {
        Some((tree, clause_pos)) => {
            let clause_start = base + clause_pos;
            let clause_len = sentence.len() - clause_pos;
            char_span["condition"] = json!([clause_start, clause_start + clause_len]);
            tree
        }
        None => Value::Null,
    };

    Some(json!({
        "subject": subject,
        "condition": condition_value,
        "constraint": [constraint_text],
        "context": null,
        "char_span": char_span,
        "cu_type": if meta { "meta_cu" } else { "actor_cu" },
    }))
}

fn condition_tree(clause: &str) -> Value {
    let parts: Vec<&str> = clause
        .split("; or")
        .flat_map(|p| p.split(", or"))
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() > 1 {
        json!({ "any": parts })
    } else {
        Value::String(clause.to_string())
    }
}

fn is_meta(subject: &str, constraint: &str) -> bool {
    let s = subject.to_lowercase();
    let c = constraint.to_lowercase();
    s.starts_with("this ") || s.starts_with("these ") || c.contains("apply") || c.contains("applies")
}

fn find_word(haystack: &str, needle: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let abs = from + pos;
        let before_ok = abs == 0
            || !haystack[..abs]
                .chars()
                .next_back()
                .is_some_and(|c| c.is_alphanumeric());
        let after = abs + needle.len();
        let after_ok = after >= haystack.len()
            || !haystack[after..]
                .chars()
                .next()
                .is_some_and(|c| c.is_alphanumeric());
        if before_ok && after_ok {
            return Some(abs);
        }
        from = abs + needle.len();
    }
    None
}

/// Position of `needle` within `text[from..]`, relative to `from`.
fn find_sub(text: &str, needle: &str, from: usize) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    text[from..].find(needle)
}

/// Resolve "paragraph N" / "point N" mentions against the item's article.
fn mock_cu_reference(payload: &Value) -> Value {
    let empty = Vec::new();
    let items = payload
        .get("items")
        .and_then(Value::as_array)
        .unwrap_or(&empty);
    let re = regex::Regex::new(r"(?i)\b(?:paragraph|point)\s+(\d+)").expect("static regex");
    let out: Vec<Value> = items
        .iter()
        .map(|item| {
            let cu_id = str_field(item, "cu_id");
            let article_label = str_field(item, "article_label");
            let source = str_field(item, "source_text");
            let mut refs: Vec<String> = Vec::new();
            if article_label.chars().all(|c| c.is_ascii_digit()) && !article_label.is_empty() {
                for cap in re.captures_iter(source) {
                    let token = format!("A{article_label}.{}", &cap[1]);
                    if !refs.contains(&token) {
                        refs.push(token);
                    }
                }
            }
            json!({"cu_id": cu_id, "references": refs})
        })
        .collect();
    json!({ "items": out })
}

/// Naive subject-verb-object extraction over a fixed verb lexicon.
fn mock_ctx_extract(payload: &Value) -> Value {
    let text = str_field(payload, "text");
    let mut entities: Vec<(String, String, String)> = Vec::new(); // (id, name, type)
    let mut by_name: BTreeMap<String, String> = BTreeMap::new();
    let mut relations: Vec<(String, String, String)> = Vec::new();

    let intern = |name: &str,
                      etype: &str,
                      entities: &mut Vec<(String, String, String)>,
                      by_name: &mut BTreeMap<String, String>|
     -> String {
        let key = tokens(name).join(" ");
        if let Some(id) = by_name.get(&key) {
            return id.clone();
        }
        let id = format!("e{}", entities.len() + 1);
        entities.push((id.clone(), name.to_string(), etype.to_string()));
        by_name.insert(key, id.clone());
        id
    };

    for sentence in sentences(text) {
        let words: Vec<String> = sentence
            .split_whitespace()
            .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        let Some(verb_idx) = words.iter().position(|w| VERBS.contains(&w.as_str())) else {
            continue;
        };
        let negated = words[verb_idx.saturating_sub(3)..verb_idx]
            .iter()
            .any(|w| matches!(w.as_str(), "not" | "never" | "no" | "failed" | "fails" | "omitted"));

        let subject_words: Vec<&str> = words[..verb_idx]
            .iter()
            .map(String::as_str)
            .filter(|w| {
                !matches!(
                    *w,
                    "the" | "a" | "an" | "our" | "their" | "its" | "this" | "that" | "has"
                        | "have" | "had" | "is" | "are" | "was" | "were" | "does" | "do" | "did"
                        | "also" | "still" | "not" | "never" | "no" | "failed" | "fails"
                        | "omitted" | "to" | "yet"
                )
            })
            .collect();
        if subject_words.is_empty() {
            continue;
        }
        let subject_name = subject_words.join(" ");

        let tail: Vec<&str> = words[verb_idx + 1..].iter().map(String::as_str).collect();
        let prep_idx = tail.iter().position(|w| {
            matches!(
                *w,
                "to" | "into" | "onto" | "outside" | "from" | "within" | "without" | "under"
                    | "at" | "by" | "via"
            )
        });
        let object_words: Vec<&str> = match prep_idx {
            Some(p) => tail[..p].to_vec(),
            None => tail.clone(),
        }
        .into_iter()
        .filter(|w| !matches!(*w, "the" | "a" | "an" | "any" | "its" | "their" | "all"))
        .collect();

        let verb = &words[verb_idx];
        let predicate = if negated {
            format!("not_{verb}")
        } else {
            verb.clone()
        };

        let subj_id = intern(&subject_name, "actor", &mut entities, &mut by_name);
        if !object_words.is_empty() {
            let object_name = object_words.join(" ");
            let obj_id = intern(
                &object_name,
                classify_entity(&object_words),
                &mut entities,
                &mut by_name,
            );
            relations.push((subj_id.clone(), predicate.clone(), obj_id));
        }

        if let Some(p) = prep_idx {
            let prep = tail[p];
            let prep_obj: Vec<&str> = tail[p + 1..]
                .iter()
                .copied()
                .filter(|w| !matches!(*w, "the" | "a" | "an" | "any"))
                .collect();
            if matches!(prep, "to" | "into" | "onto" | "outside") && !prep_obj.is_empty() {
                let name = prep_obj.join(" ");
                let obj_id = intern(&name, classify_entity(&prep_obj), &mut entities, &mut by_name);
                relations.push((subj_id, format!("{predicate}_{prep}"), obj_id));
            }
        }
    }

    relations.dedup();
    json!({
        "entities": entities
            .iter()
            .map(|(id, name, etype)| json!({"id": id, "name": name, "type": etype}))
            .collect::<Vec<_>>(),
        "relations": relations
            .iter()
            .map(|(s, p, o)| json!({"subj": s, "pred": p, "obj": o}))
            .collect::<Vec<_>>(),
    })
}

fn classify_entity(words: &[&str]) -> &'static str {
    if words.iter().any(|w| SYSTEM_WORDS.contains(w)) {
        "system"
    } else if words.iter().any(|w| ROLE_WORDS.contains(w)) {
        "actor"
    } else if words.iter().any(|w| DATA_WORDS.contains(w)) {
        "data_item"
    } else {
        "other"
    }
}

/// Propose hypernyms from terms defined in the retrieved fragments.
fn mock_ctx_hypernym(payload: &Value) -> Value {
    let entity = payload.get("entity").cloned().unwrap_or(Value::Null);
    let entity_terms = stem_set(&format!(
        "{} {}",
        str_field(&entity, "name"),
        str_field(&entity, "type")
    ));
    let empty = Vec::new();
    let fragments = payload
        .get("fragments")
        .and_then(Value::as_array)
        .unwrap_or(&empty);

    let def_re = regex::Regex::new(r#"['"\u{2018}\u{201C}]([A-Za-z][A-Za-z ]{1,40})['"\u{2019}\u{201D}]\s+means([^.;]*)"#)
        .expect("static regex");

    let mut proposals: Vec<(f64, String, String)> = Vec::new();
    for frag in fragments {
        let frag_id = str_field(frag, "frag_id");
        let text = str_field(frag, "text");
        for cap in def_re.captures_iter(text) {
            let label = cap[1].trim().to_string();
            let definition = stem_set(&format!("{} {}", &cap[1], &cap[2]));
            let overlap = overlap_count(&entity_terms, &definition);
            if overlap == 0 {
                continue;
            }
            let score = round2(0.4 + 0.1 * (overlap.min(5) as f64));
            proposals.push((score, label, frag_id.to_string()));
        }
    }
    proposals.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    proposals.truncate(6);
    proposals.dedup_by(|a, b| a.1 == b.1 && a.2 == b.2);

    json!({
        "proposals": proposals
            .iter()
            .map(|(score, label, frag_id)| json!({"label": label, "frag_id": frag_id, "score": score}))
            .collect::<Vec<_>>(),
    })
}

fn window_relation_terms(rel: &Value, entities_by_id: &BTreeMap<String, Value>) -> Vec<String> {
    let mut text = String::new();
    for key in ["subj", "obj"] {
        if let Some(e) = entities_by_id.get(str_field(rel, key)) {
            text.push_str(str_field(e, "name"));
            text.push(' ');
        }
    }
    text.push_str(&str_field(rel, "pred").replace('_', " "));
    stem_set(&text)
}

/// Stems of the predicate's verb tokens, negation markers stripped.
fn relation_pred_stems(rel: &Value) -> Vec<String> {
    str_field(rel, "pred")
        .split('_')
        .filter(|w| !matches!(*w, "not" | "no" | "failed" | "to" | "has" | "have"))
        .map(stem)
        .collect()
}

fn relation_negated(rel: &Value) -> bool {
    let pred = str_field(rel, "pred");
    pred.starts_with("not_") || pred.contains("failed_to") || pred.starts_with("no_")
}

/// Listwise judgment: token overlap between window relations and rule text.
fn mock_judge(payload: &Value) -> Value {
    let empty = Vec::new();
    let window = payload.get("window").cloned().unwrap_or(Value::Null);
    let anchor = payload.get("anchor").cloned().unwrap_or(Value::Null);
    let plan = payload.get("plan").and_then(Value::as_array).unwrap_or(&empty);

    let entities_by_id: BTreeMap<String, Value> = window
        .get("entities")
        .and_then(Value::as_array)
        .unwrap_or(&empty)
        .iter()
        .map(|e| (str_field(e, "id").to_string(), e.clone()))
        .collect();
    let relations = window
        .get("relations")
        .and_then(Value::as_array)
        .unwrap_or(&empty);

    // Terms describing what this anchor is (names, types, hypernyms).
    let mut anchor_text = format!(
        "{} {}",
        str_field(&anchor, "actor_type"),
        str_field(&anchor, "object_type")
    );
    for e in anchor.get("entities").and_then(Value::as_array).unwrap_or(&empty) {
        anchor_text.push(' ');
        anchor_text.push_str(str_field(e, "name"));
    }
    for h in anchor.get("hypernyms").and_then(Value::as_array).unwrap_or(&empty) {
        anchor_text.push(' ');
        anchor_text.push_str(h.as_str().unwrap_or(""));
    }
    for e in entities_by_id.values() {
        for h in e.get("hypernyms").and_then(Value::as_array).unwrap_or(&empty) {
            anchor_text.push(' ');
            anchor_text.push_str(str_field(h, "label"));
        }
    }
    let anchor_terms = stem_set(&anchor_text);

    let judgments: Vec<Value> = plan
        .iter()
        .map(|item| {
            let cu_id = str_field(item, "cu_id");
            let constraint = str_field(item, "constraint");
            let rule_terms = stem_set(&format!(
                "{constraint} {}",
                str_field(item, "condition")
            ));
            let prohibition = {
                let c = constraint.to_lowercase();
                c.contains("shall not") || c.contains("must not") || c.contains("may not")
            };
            let subject_terms = stem_set(str_field(item, "subject"));
            let applicable = overlap_count(&subject_terms, &anchor_terms) > 0;

            // A relation bears on a rule only when its verb appears in the
            // rule text and the noun overlap is substantial.
            let mut contradicting: Vec<String> = Vec::new();
            let mut supporting: Vec<String> = Vec::new();
            let mut best_overlap = 0usize;
            for rel in relations {
                let pred_in_rule = relation_pred_stems(rel)
                    .iter()
                    .any(|p| rule_terms.binary_search(p).is_ok());
                if !pred_in_rule {
                    continue;
                }
                let rel_terms = window_relation_terms(rel, &entities_by_id);
                let o = overlap_count(&rel_terms, &rule_terms);
                if !(o >= 2 || rule_terms.len() <= 3) {
                    continue;
                }
                best_overlap = best_overlap.max(o);
                // A negated fact contradicts an obligation but satisfies a
                // prohibition, and vice versa.
                let contradicts = relation_negated(rel) != prohibition;
                if contradicts {
                    contradicting.push(str_field(rel, "id").to_string());
                } else {
                    supporting.push(str_field(rel, "id").to_string());
                }
            }

            let frac = if rule_terms.is_empty() {
                0.0
            } else {
                best_overlap as f64 / rule_terms.len() as f64
            };
            let (label, score, why, evid) = if !applicable {
                (
                    "NOT_APPLICABLE",
                    0.5,
                    "the rule's subject does not match this anchor".to_string(),
                    Vec::new(),
                )
            } else if !contradicting.is_empty() {
                (
                    "NON_COMPLIANT",
                    round2(0.6 + 0.3 * frac.min(1.0)),
                    format!("window relation {} contradicts the constraint", contradicting[0]),
                    contradicting,
                )
            } else if !supporting.is_empty() {
                (
                    "COMPLIANT",
                    round2(0.55 + 0.3 * frac.min(1.0)),
                    format!("window relation {} satisfies the constraint", supporting[0]),
                    supporting,
                )
            } else {
                (
                    "INSUFFICIENT",
                    0.5,
                    "the window does not state enough to decide".to_string(),
                    Vec::new(),
                )
            };
            json!({"cu_id": cu_id, "label": label, "score": score, "why": why, "evid": evid})
        })
        .collect();

    json!({ "judgments": judgments })
}

/// Exception check: a reachable rule with an exception marker whose condition
/// terms are present in the window overrides the violation.
fn mock_judge_refs(payload: &Value) -> Value {
    let empty = Vec::new();
    let window = payload.get("window").cloned().unwrap_or(Value::Null);
    let closure = payload
        .get("closure")
        .and_then(Value::as_array)
        .unwrap_or(&empty);

    let entities_by_id: BTreeMap<String, Value> = window
        .get("entities")
        .and_then(Value::as_array)
        .unwrap_or(&empty)
        .iter()
        .map(|e| (str_field(e, "id").to_string(), e.clone()))
        .collect();
    let mut window_text = String::new();
    for e in entities_by_id.values() {
        window_text.push_str(str_field(e, "name"));
        window_text.push(' ');
    }
    for rel in window.get("relations").and_then(Value::as_array).unwrap_or(&empty) {
        window_text.push_str(&str_field(rel, "pred").replace('_', " "));
        window_text.push(' ');
    }
    let window_terms = stem_set(&window_text);

    for item in closure {
        let text = format!(
            "{} {} {}",
            str_field(item, "constraint"),
            str_field(item, "condition"),
            str_field(item, "context")
        );
        let lower = text.to_lowercase();
        if !EXCEPTION_MARKERS.iter().any(|m| lower.contains(m)) {
            continue;
        }
        let cond_source = {
            let cond = str_field(item, "condition");
            if cond.is_empty() {
                str_field(item, "constraint").to_string()
            } else {
                cond.to_string()
            }
        };
        let required = stem_set(&cond_source);
        let o = overlap_count(&required, &window_terms);
        if o >= 2 || (o >= 1 && required.len() == 1) {
            return json!({
                "exception": true,
                "exception_cu_id": str_field(item, "cu_id"),
                "why": "a reachable rule's exception conditions are met by the window",
            });
        }
    }
    json!({"exception": false, "exception_cu_id": null, "why": "no reachable rule excuses the violation"})
}

fn mock_rerank(payload: &Value) -> Value {
    let q = stem_set(str_field(payload, "query"));
    let d = stem_set(str_field(payload, "doc"));
    let inter = overlap_count(&q, &d) as f64;
    let union = (q.len() + d.len()) as f64 - inter;
    let score = if union > 0.0 {
        (inter / union * 10000.0).round() / 10000.0
    } else {
        0.0
    };
    json!({ "score": score })
}

fn mock_render(payload: &Value) -> Value {
    let empty = Vec::new();
    let units = payload.get("units").and_then(Value::as_array).unwrap_or(&empty);
    let mut out = String::new();
    for unit in units {
        let heading = str_field(unit, "heading");
        if !heading.is_empty() {
            out.push_str(heading);
            out.push_str(". ");
        }
        for fact in unit.get("facts").and_then(Value::as_array).unwrap_or(&empty) {
            if let Some(s) = fact.as_str() {
                out.push_str(s);
                if !s.ends_with('.') {
                    out.push('.');
                }
                out.push(' ');
            }
        }
    }
    json!({"text": out.trim_end()})
}
