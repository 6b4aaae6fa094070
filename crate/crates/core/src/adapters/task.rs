//! Chat task catalog: prompt templates, output schemas, decoding defaults.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::error::AdapterError;

/// Task ids driven by the graph builders and the judgment gate.
pub const TASK_CU_EXTRACT: &str = "cu.extract";
pub const TASK_CU_REFERENCE: &str = "cu.reference";
pub const TASK_CTX_EXTRACT: &str = "ctx.extract";
pub const TASK_CTX_HYPERNYM: &str = "ctx.hypernym";
pub const TASK_JUDGE: &str = "judge";
pub const TASK_JUDGE_REFS: &str = "judge.refs";
/// Joint query/document relevance scoring for the reranker.
pub const TASK_RERANK_SCORE: &str = "rerank.score";
/// Graph-to-prose rendering for fidelity runs.
pub const TASK_FIDELITY_RENDER: &str = "fidelity.render";

/// Compliance labels a judge response may carry.
pub const JUDGE_LABELS: [&str; 4] = [
    "COMPLIANT",
    "NON_COMPLIANT",
    "INSUFFICIENT",
    "NOT_APPLICABLE",
];

/// Minimal JSON shape descriptor used to validate adapter responses.
#[derive(Debug, Clone)]
pub enum Shape {
    Any,
    Str,
    Num,
    Bool,
    Enum(Vec<String>),
    Nullable(Box<Shape>),
    Array(Box<Shape>),
    Object(Vec<Field>),
}

#[derive(Debug, Clone)]
pub struct Field {
    pub key: String,
    pub shape: Shape,
    pub required: bool,
}

impl Field {
    pub fn required(key: &str, shape: Shape) -> Self {
        Field {
            key: key.to_string(),
            shape,
            required: true,
        }
    }

    pub fn optional(key: &str, shape: Shape) -> Self {
        Field {
            key: key.to_string(),
            shape,
            required: false,
        }
    }
}

impl Shape {
    pub fn validate(&self, value: &Value) -> Result<(), String> {
        self.validate_at(value, "$")
    }

    fn validate_at(&self, value: &Value, path: &str) -> Result<(), String> {
        match self {
            Shape::Any => Ok(()),
            Shape::Str => value
                .is_string()
                .then_some(())
                .ok_or_else(|| format!("{path}: expected string")),
            Shape::Num => value
                .is_number()
                .then_some(())
                .ok_or_else(|| format!("{path}: expected number")),
            Shape::Bool => value
                .is_boolean()
                .then_some(())
                .ok_or_else(|| format!("{path}: expected boolean")),
            Shape::Enum(allowed) => match value.as_str() {
                Some(s) if allowed.iter().any(|a| a == s) => Ok(()),
                Some(s) => Err(format!(
                    "{path}: `{s}` is not one of {}",
                    allowed.join("|")
                )),
                None => Err(format!("{path}: expected enum string")),
            },
            Shape::Nullable(inner) => {
                if value.is_null() {
                    Ok(())
                } else {
                    inner.validate_at(value, path)
                }
            }
            Shape::Array(item) => match value.as_array() {
                Some(items) => {
                    for (i, v) in items.iter().enumerate() {
                        item.validate_at(v, &format!("{path}[{i}]"))?;
                    }
                    Ok(())
                }
                None => Err(format!("{path}: expected array")),
            },
            Shape::Object(fields) => match value.as_object() {
                Some(map) => {
                    for field in fields {
                        match map.get(&field.key) {
                            Some(v) => {
                                field
                                    .shape
                                    .validate_at(v, &format!("{path}.{}", field.key))?;
                            }
                            None if field.required => {
                                return Err(format!("{path}: missing key `{}`", field.key));
                            }
                            None => {}
                        }
                    }
                    Ok(())
                }
                None => Err(format!("{path}: expected object")),
            },
        }
    }
}

/// A registered chat task: template, output schema, decoding parameters.
#[derive(Debug, Clone)]
pub struct ChatTask {
    pub id: String,
    pub template: String,
    pub schema: Shape,
    pub temperature: f64,
    pub max_output_fraction: f64,
}

impl ChatTask {
    /// Placeholder names (`{{name}}`) appearing in the template.
    pub fn placeholders(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut rest = self.template.as_str();
        while let Some(start) = rest.find("{{") {
            let Some(end) = rest[start + 2..].find("}}") else {
                break;
            };
            let name = rest[start + 2..start + 2 + end].trim().to_string();
            if !name.is_empty() && !out.contains(&name) {
                out.push(name);
            }
            rest = &rest[start + 2 + end + 2..];
        }
        out
    }

    /// Render the template against a JSON object payload.
    ///
    /// String values are inserted verbatim; anything else is inserted as
    /// canonical JSON. Missing keys are a precondition error.
    pub fn render(&self, payload: &Value) -> Result<String, AdapterError> {
        let map = payload.as_object().ok_or_else(|| AdapterError::Schema {
            task: self.id.clone(),
            message: "payload must be a JSON object".to_string(),
        })?;
        let mut prompt = self.template.clone();
        for name in self.placeholders() {
            let value = map.get(&name).ok_or_else(|| AdapterError::MissingPlaceholder {
                task: self.id.clone(),
                name: name.clone(),
            })?;
            let rendered = match value {
                Value::String(s) => s.clone(),
                other => crate::util::canon::to_canonical_pretty(other)
                    .unwrap_or_else(|_| other.to_string()),
            };
            prompt = prompt.replace(&format!("{{{{{name}}}}}"), rendered.trim_end());
        }
        Ok(prompt)
    }
}

/// Catalog mapping task ids to their single registered template + schema.
#[derive(Debug, Clone)]
pub struct TaskCatalog {
    tasks: BTreeMap<String, ChatTask>,
}

impl TaskCatalog {
    pub fn get(&self, id: &str) -> Result<&ChatTask, AdapterError> {
        self.tasks
            .get(id)
            .ok_or_else(|| AdapterError::UnknownTask(id.to_string()))
    }

    pub fn task_ids(&self) -> Vec<&str> {
        self.tasks.keys().map(String::as_str).collect()
    }

    /// Replace the template text of a registered task (prompt overrides).
    pub fn override_template(&mut self, id: &str, template: &str) -> Result<(), AdapterError> {
        let task = self
            .tasks
            .get_mut(id)
            .ok_or_else(|| AdapterError::UnknownTask(id.to_string()))?;
        task.template = template.to_string();
        Ok(())
    }

    /// Append overlay text to a task's template (e.g. per-model emphasis).
    pub fn append_overlay(&mut self, id: &str, overlay: &str) -> Result<(), AdapterError> {
        let task = self
            .tasks
            .get_mut(id)
            .ok_or_else(|| AdapterError::UnknownTask(id.to_string()))?;
        task.template.push_str("\n\n");
        task.template.push_str(overlay);
        Ok(())
    }

    /// Override decoding parameters across every registered task.
    pub fn set_decoding(&mut self, temperature: Option<f64>, max_output_fraction: Option<f64>) {
        for task in self.tasks.values_mut() {
            if let Some(t) = temperature {
                task.temperature = t;
            }
            if let Some(f) = max_output_fraction {
                task.max_output_fraction = f;
            }
        }
    }
}

fn judge_label_enum() -> Shape {
    Shape::Enum(JUDGE_LABELS.iter().map(|s| s.to_string()).collect())
}

fn cu_shape() -> Shape {
    Shape::Object(vec![
        Field::required("subject", Shape::Str),
        Field::optional("condition", Shape::Nullable(Box::new(Shape::Any))),
        Field::required("constraint", Shape::Array(Box::new(Shape::Str))),
        Field::optional("context", Shape::Nullable(Box::new(Shape::Str))),
        Field::optional("char_span", Shape::Nullable(Box::new(Shape::Any))),
        Field::required(
            "cu_type",
            Shape::Enum(vec!["actor_cu".to_string(), "meta_cu".to_string()]),
        ),
    ])
}

impl Default for TaskCatalog {
    fn default() -> Self {
        let mut tasks = BTreeMap::new();
        let mut register = |id: &str, template: &str, schema: Shape| {
            tasks.insert(
                id.to_string(),
                ChatTask {
                    id: id.to_string(),
                    template: template.to_string(),
                    schema,
                    temperature: 0.0,
                    max_output_fraction: 0.8,
                },
            );
        };

        register(
            TASK_CU_EXTRACT,
            include_str!("../../templates/cu_extract.txt"),
            Shape::Object(vec![Field::required(
                "items",
                Shape::Array(Box::new(Shape::Object(vec![
                    Field::required("point_id", Shape::Str),
                    Field::required("cus", Shape::Array(Box::new(cu_shape()))),
                ]))),
            )]),
        );

        register(
            TASK_CU_REFERENCE,
            include_str!("../../templates/cu_reference.txt"),
            Shape::Object(vec![Field::required(
                "items",
                Shape::Array(Box::new(Shape::Object(vec![
                    Field::required("cu_id", Shape::Str),
                    Field::required("references", Shape::Array(Box::new(Shape::Str))),
                ]))),
            )]),
        );

        register(
            TASK_CTX_EXTRACT,
            include_str!("../../templates/ctx_extract.txt"),
            Shape::Object(vec![
                Field::required(
                    "entities",
                    Shape::Array(Box::new(Shape::Object(vec![
                        Field::required("id", Shape::Str),
                        Field::required("name", Shape::Str),
                        Field::required("type", Shape::Str),
                    ]))),
                ),
                // Optional so a response truncated after the entity list
                // still force-parses; absent means no relations found.
                Field::optional(
                    "relations",
                    Shape::Array(Box::new(Shape::Object(vec![
                        Field::required("subj", Shape::Str),
                        Field::required("pred", Shape::Str),
                        Field::required("obj", Shape::Str),
                    ]))),
                ),
            ]),
        );

        register(
            TASK_CTX_HYPERNYM,
            include_str!("../../templates/ctx_hypernym.txt"),
            Shape::Object(vec![Field::required(
                "proposals",
                Shape::Array(Box::new(Shape::Object(vec![
                    Field::required("label", Shape::Str),
                    Field::required("frag_id", Shape::Str),
                    Field::required("score", Shape::Num),
                ]))),
            )]),
        );

        register(
            TASK_JUDGE,
            include_str!("../../templates/judge.txt"),
            Shape::Object(vec![Field::required(
                "judgments",
                Shape::Array(Box::new(Shape::Object(vec![
                    Field::required("cu_id", Shape::Str),
                    Field::required("label", judge_label_enum()),
                    Field::required("score", Shape::Num),
                    Field::required("why", Shape::Str),
                    Field::required("evid", Shape::Array(Box::new(Shape::Str))),
                ]))),
            )]),
        );

        register(
            TASK_JUDGE_REFS,
            include_str!("../../templates/judge_refs.txt"),
            Shape::Object(vec![
                Field::required("exception", Shape::Bool),
                Field::required("exception_cu_id", Shape::Nullable(Box::new(Shape::Str))),
                Field::required("why", Shape::Str),
            ]),
        );

        register(
            TASK_RERANK_SCORE,
            include_str!("../../templates/rerank_score.txt"),
            Shape::Object(vec![Field::required("score", Shape::Num)]),
        );

        register(
            TASK_FIDELITY_RENDER,
            include_str!("../../templates/fidelity_render.txt"),
            Shape::Object(vec![Field::required("text", Shape::Str)]),
        );

        TaskCatalog { tasks }
    }
}
