//! Scenario records and the article-token grammar.
//!
//! Scenario files are a JSON array or JSON lines of records carrying the
//! text, free-form facts, and labels. Article tokens accept the compact
//! citation forms "Art.9(1)", "Art.5(1)(b)", "Arts.44-49", "Arts.12-14";
//! scoring happens at parent-article granularity, so every token normalizes
//! to one or more article numbers.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioLabels {
    pub violation: bool,
    #[serde(default)]
    pub violation_types: Vec<String>,
    #[serde(default)]
    pub articles: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lawful_basis: Option<Vec<String>>,
    #[serde(default)]
    pub risk_level: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub facts: BTreeMap<String, Value>,
    #[serde(default)]
    pub jurisdiction: Vec<String>,
    #[serde(default)]
    pub sector: String,
    #[serde(default)]
    pub language: String,
    pub labels: ScenarioLabels,
}

impl Scenario {
    /// Gold articles at parent-article granularity.
    pub fn gold_articles(&self) -> Result<BTreeSet<u32>> {
        normalize_articles(&self.labels.articles)
    }
}

fn token_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^Arts?\.\s*(\d+)(?:\s*[-\u{2013}]\s*(\d+))?((?:\((?:\d+[a-z]?|[a-z])\))*)$")
            .expect("static regex")
    })
}

/// Parse one article token into parent article numbers.
pub fn parse_article_token(token: &str) -> Result<Vec<u32>> {
    let caps = token_re()
        .captures(token.trim())
        .ok_or_else(|| Error::Invalid(format!("article token `{token}` not in grammar")))?;
    let first: u32 = caps[1]
        .parse()
        .map_err(|_| Error::Invalid(format!("article number out of range in `{token}`")))?;
    match caps.get(2) {
        Some(end) => {
            let last: u32 = end
                .as_str()
                .parse()
                .map_err(|_| Error::Invalid(format!("article number out of range in `{token}`")))?;
            if last < first {
                return Err(Error::Invalid(format!(
                    "descending article range in `{token}`"
                )));
            }
            Ok((first..=last).collect())
        }
        None => Ok(vec![first]),
    }
}

/// Normalize a token list to the set of parent article numbers.
pub fn normalize_articles(tokens: &[String]) -> Result<BTreeSet<u32>> {
    let mut out = BTreeSet::new();
    for token in tokens {
        for n in parse_article_token(token)? {
            out.insert(n);
        }
    }
    Ok(out)
}

/// Load and validate scenario records from a JSON array or JSON lines.
pub fn load_scenarios(raw: &str) -> Result<Vec<Scenario>> {
    let records: Vec<Value> = if raw.trim_start().starts_with('[') {
        serde_json::from_str(raw)?
    } else {
        raw.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?
    };

    let mut scenarios = Vec::with_capacity(records.len());
    for (index, record) in records.into_iter().enumerate() {
        let scenario: Scenario =
            serde_json::from_value(record).map_err(|e| Error::Scenario {
                index,
                message: e.to_string(),
            })?;
        scenario.gold_articles().map_err(|e| Error::Scenario {
            index,
            message: e.to_string(),
        })?;
        if scenario.id.is_empty() {
            return Err(Error::Scenario {
                index,
                message: "empty scenario id".to_string(),
            });
        }
        scenarios.push(scenario);
    }
    Ok(scenarios)
}
