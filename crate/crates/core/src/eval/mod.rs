//! Article-level multi-label evaluation of decision files against scenario
//! labels.

pub mod metrics;
pub mod scenarios;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gate::{DecisionFile, Label};
use crate::policy::segment_label;
use crate::util::canon;

pub use metrics::{
    chapter_recall_fpr, confusion_counts, f_beta, f_beta_with, gdpr_chapters, mcc, AverageMode,
    ChapterStats, ConfusionCounts, Counts,
};
pub use scenarios::{load_scenarios, normalize_articles, parse_article_token, Scenario};

/// Predicted articles of one decision file: every article whose aggregated
/// label is NON_COMPLIANT, at parent-article granularity.
pub fn predicted_articles(decisions: &DecisionFile) -> BTreeSet<u32> {
    decisions
        .decisions
        .iter()
        .filter(|d| d.label == Label::NonCompliant)
        .filter_map(|d| segment_label(&d.article).parse::<u32>().ok())
        .collect()
}

/// The metrics report emitted by evaluation runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_scenarios: usize,
    pub universe_size: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub micro_f2: f64,
    pub macro_f2: f64,
    pub mcc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_chapter: Option<BTreeMap<String, ChapterStats>>,
}

impl EvalReport {
    pub fn compute(
        preds: &BTreeMap<String, BTreeSet<u32>>,
        gold: &BTreeMap<String, BTreeSet<u32>>,
        universe: Option<BTreeSet<u32>>,
        chapters: Option<&BTreeMap<String, (u32, u32)>>,
    ) -> Result<EvalReport> {
        // Default universe: every article appearing in gold or predictions.
        let universe = universe.unwrap_or_else(|| {
            preds
                .values()
                .chain(gold.values())
                .flat_map(|s| s.iter().copied())
                .collect()
        });
        let counts = confusion_counts(preds, gold, &universe)?;
        let per_chapter = chapters.map(|c| chapter_recall_fpr(preds, gold, c));
        Ok(EvalReport {
            n_scenarios: gold.len(),
            universe_size: universe.len(),
            micro_f1: f_beta(&counts, 1.0, AverageMode::Micro),
            macro_f1: f_beta(&counts, 1.0, AverageMode::Macro),
            micro_f2: f_beta(&counts, 2.0, AverageMode::Micro),
            macro_f2: f_beta(&counts, 2.0, AverageMode::Macro),
            mcc: mcc(&counts.pooled),
            per_chapter,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        canon::to_canonical_pretty(self)
    }

    /// Human-readable table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "scenarios: {}   article universe: {}\n",
            self.n_scenarios, self.universe_size
        ));
        out.push_str(&format!(
            "{:<10} {:>8} {:>8}\n",
            "metric", "micro", "macro"
        ));
        out.push_str(&format!(
            "{:<10} {:>8.4} {:>8.4}\n",
            "F1", self.micro_f1, self.macro_f1
        ));
        out.push_str(&format!(
            "{:<10} {:>8.4} {:>8.4}\n",
            "F2", self.micro_f2, self.macro_f2
        ));
        out.push_str(&format!("{:<10} {:>8.4}\n", "MCC", self.mcc));
        if let Some(chapters) = &self.per_chapter {
            out.push_str(&format!(
                "\n{:<10} {:>8} {:>8}\n",
                "chapter", "recall", "FPR"
            ));
            for (name, stats) in chapters {
                out.push_str(&format!(
                    "{:<10} {:>8.4} {:>8.4}\n",
                    name, stats.recall, stats.fpr
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::Decision;

    #[test]
    fn predicted_articles_are_violations_only() {
        let file = DecisionFile {
            scenario_id: "s1".into(),
            decisions: vec![
                Decision {
                    article: "DOC:R/ARTICLE:3".into(),
                    label: Label::NonCompliant,
                    score: 0.8,
                    cu_id: "x".into(),
                    overridden: false,
                },
                Decision {
                    article: "DOC:R/ARTICLE:4".into(),
                    label: Label::Compliant,
                    score: 0.9,
                    cu_id: "y".into(),
                    overridden: false,
                },
            ],
            judgments: Vec::new(),
        };
        let preds = predicted_articles(&file);
        assert_eq!(preds.into_iter().collect::<Vec<_>>(), vec![3]);
    }
}
