//! Confusion counting, F-beta, MCC, and chapter-level any-hit statistics.
//!
//! Micro scores pool counts over the article universe before applying
//! `F_beta = (1+beta^2)·P·R / (beta^2·P + R)`; macro scores average
//! per-article F values. MCC runs once on the pooled counts of the flattened
//! article-by-scenario binary matrix. Every 0/0 resolves to 0.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub per_article: BTreeMap<u32, Counts>,
    pub pooled: Counts,
    pub n_scenarios: usize,
}

/// Exact set-match counting per article per scenario over the universe.
pub fn confusion_counts(
    preds: &BTreeMap<String, BTreeSet<u32>>,
    gold: &BTreeMap<String, BTreeSet<u32>>,
    universe: &BTreeSet<u32>,
) -> Result<ConfusionCounts> {
    if preds.keys().ne(gold.keys()) {
        return Err(Error::Invalid(
            "prediction and gold scenario ids differ".to_string(),
        ));
    }
    for (id, set) in preds.iter().chain(gold.iter()) {
        if let Some(outside) = set.iter().find(|a| !universe.contains(a)) {
            return Err(Error::Invalid(format!(
                "scenario {id}: article {outside} outside the universe"
            )));
        }
    }

    let mut per_article: BTreeMap<u32, Counts> = universe
        .iter()
        .map(|&a| (a, Counts::default()))
        .collect();
    for (id, gold_set) in gold {
        let pred_set = &preds[id];
        for (&article, counts) in per_article.iter_mut() {
            match (pred_set.contains(&article), gold_set.contains(&article)) {
                (true, true) => counts.tp += 1,
                (true, false) => counts.fp += 1,
                (false, true) => counts.fn_ += 1,
                (false, false) => counts.tn += 1,
            }
        }
    }

    let mut pooled = Counts::default();
    for counts in per_article.values() {
        pooled.tp += counts.tp;
        pooled.fp += counts.fp;
        pooled.fn_ += counts.fn_;
        pooled.tn += counts.tn;
    }
    Ok(ConfusionCounts {
        per_article,
        pooled,
        n_scenarios: gold.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageMode {
    Micro,
    Macro,
}

fn f_from_counts(counts: &Counts, beta: f64) -> f64 {
    let p = counts.precision();
    let r = counts.recall();
    let b2 = beta * beta;
    let den = b2 * p + r;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / den
    }
}

/// F-beta over the counts; micro pools first, macro averages per article.
pub fn f_beta(counts: &ConfusionCounts, beta: f64, mode: AverageMode) -> f64 {
    f_beta_with(counts, beta, mode, false)
}

/// Macro averaging optionally excludes articles with zero gold and zero
/// predictions (they contribute F = 0 otherwise).
pub fn f_beta_with(
    counts: &ConfusionCounts,
    beta: f64,
    mode: AverageMode,
    exclude_empty: bool,
) -> f64 {
    assert!(beta > 0.0, "beta must be positive");
    match mode {
        AverageMode::Micro => f_from_counts(&counts.pooled, beta),
        AverageMode::Macro => {
            let included: Vec<&Counts> = counts
                .per_article
                .values()
                .filter(|c| !exclude_empty || c.tp + c.fp + c.fn_ > 0)
                .collect();
            if included.is_empty() {
                return 0.0;
            }
            included.iter().map(|c| f_from_counts(c, beta)).sum::<f64>() / included.len() as f64
        }
    }
}

/// Matthews correlation on the pooled counts; 0 when any denominator factor
/// vanishes.
pub fn mcc(pooled: &Counts) -> f64 {
    let tp = pooled.tp as f64;
    let fp = pooled.fp as f64;
    let fn_ = pooled.fn_ as f64;
    let tn = pooled.tn as f64;
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if factors.contains(&0.0) {
        return 0.0;
    }
    (tp * tn - fp * fn_) / factors.iter().product::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChapterStats {
    pub recall: f64,
    pub fpr: f64,
}

/// GDPR chapter ranges (articles inclusive).
pub fn gdpr_chapters() -> BTreeMap<String, (u32, u32)> {
    [
        ("I", (1, 4)),
        ("II", (5, 11)),
        ("III", (12, 23)),
        ("IV", (24, 43)),
        ("V", (44, 50)),
        ("VI", (51, 59)),
        ("VII", (60, 76)),
        ("VIII", (77, 84)),
        ("IX", (85, 91)),
        ("X", (92, 93)),
        ("XI", (94, 99)),
    ]
    .into_iter()
    .map(|(name, range)| (name.to_string(), range))
    .collect()
}

/// Any-hit chapter classification: a chapter is positive for a scenario when
/// any of its articles is predicted (or gold). Recall and false positive
/// rate are computed over scenarios.
pub fn chapter_recall_fpr(
    preds: &BTreeMap<String, BTreeSet<u32>>,
    gold: &BTreeMap<String, BTreeSet<u32>>,
    chapters: &BTreeMap<String, (u32, u32)>,
) -> BTreeMap<String, ChapterStats> {
    let mut out = BTreeMap::new();
    for (name, &(lo, hi)) in chapters {
        let hit = |set: &BTreeSet<u32>| set.iter().any(|&a| a >= lo && a <= hi);
        let mut counts = Counts::default();
        for (id, gold_set) in gold {
            let predicted = preds.get(id).map(hit).unwrap_or(false);
            let actual = hit(gold_set);
            match (predicted, actual) {
                (true, true) => counts.tp += 1,
                (true, false) => counts.fp += 1,
                (false, true) => counts.fn_ += 1,
                (false, false) => counts.tn += 1,
            }
        }
        out.insert(
            name.clone(),
            ChapterStats {
                recall: counts.recall(),
                fpr: ratio(counts.fp, counts.fp + counts.tn),
            },
        );
    }
    out
}
