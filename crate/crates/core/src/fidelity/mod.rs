//! Graph-fidelity proxies: text reconstruction, semantic and structural
//! isomorphism scores, noise injection, and cycle-consistency runs.

pub mod noise;
pub mod reconstruct;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adapters::EmbeddingAdapter;
use crate::context::ContextGraph;
use crate::error::{Error, Result};
use crate::policy::{EdgeKind, NodeKind, PolicyGraph};
use crate::util::canon;
use crate::util::text::sentences;

pub use noise::{inject_noise, noise_sweep, NoiseConfig, NoiseMix, NoiseReport};
pub use reconstruct::{
    reconstruct_context_template, reconstruct_policy_identity, reconstruct_policy_template,
    ChatReconstructor,
};

/// Symmetric max-similarity between two sentence sets:
/// `½(mean over a of max_b cos(a,b) + mean over b of max_a cos(a,b))`
/// over unit-normalized sentence embeddings.
pub fn semantic_isomorphism(
    ta: &str,
    tb: &str,
    embedder: &dyn EmbeddingAdapter,
) -> Result<f64> {
    semantic_isomorphism_with(ta, tb, embedder, sentences)
}

/// Same with a caller-supplied sentence segmenter.
pub fn semantic_isomorphism_with(
    ta: &str,
    tb: &str,
    embedder: &dyn EmbeddingAdapter,
    segment: impl Fn(&str) -> Vec<String>,
) -> Result<f64> {
    let sa = segment(ta);
    let sb = segment(tb);
    if sa.is_empty() || sb.is_empty() {
        return Err(Error::Invalid(
            "semantic isomorphism requires non-empty sentence sets".to_string(),
        ));
    }
    let va = embedder.embed(&sa)?;
    let vb = embedder.embed(&sb)?;

    let max_cos = |x: &[f64], ys: &[Vec<f64>]| {
        ys.iter()
            .map(|y| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let forward: f64 = va.iter().map(|a| max_cos(a, &vb)).sum::<f64>() / va.len() as f64;
    let backward: f64 = vb.iter().map(|b| max_cos(b, &va)).sum::<f64>() / vb.len() as f64;
    Ok(0.5 * (forward + backward))
}

/// One comparable graph statistic.
#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    Count(&'static str, u64),
    Histogram(&'static str, Vec<f64>),
}

/// Graph families expose a declared statistic vector for structural scoring.
pub trait GraphStats {
    fn stats(&self) -> Vec<Statistic>;

    fn is_empty_graph(&self) -> bool;
}

fn degree_histogram(n_nodes: usize, degrees: &BTreeMap<String, usize>) -> Vec<f64> {
    if n_nodes == 0 {
        return Vec::new();
    }
    let max_degree = degrees.values().copied().max().unwrap_or(0);
    let mut hist = vec![0.0; max_degree + 1];
    for node_degree in degrees.values() {
        hist[*node_degree] += 1.0;
    }
    // Nodes with no edges at all never appear in `degrees`.
    hist[0] += (n_nodes - degrees.len()) as f64;
    let total: f64 = hist.iter().sum();
    for h in hist.iter_mut() {
        *h /= total;
    }
    hist
}

impl GraphStats for PolicyGraph {
    /// Node count per kind, edge count per kind, unit-type counts, and the
    /// L1-normalized undirected degree distribution.
    fn stats(&self) -> Vec<Statistic> {
        let count_kind = |kind: NodeKind| self.nodes().iter().filter(|n| n.kind == kind).count() as u64;
        let count_edge = |kind: EdgeKind| self.edges_of_kind(kind).count() as u64;
        let count_cu = |t: crate::policy::CuType| {
            self.nodes().iter().filter(|n| n.cu_type == Some(t)).count() as u64
        };
        let mut degrees: BTreeMap<String, usize> = BTreeMap::new();
        for edge in self.edges() {
            *degrees.entry(edge.src.clone()).or_default() += 1;
            *degrees.entry(edge.dst.clone()).or_default() += 1;
        }
        vec![
            Statistic::Count("nodes.structure", count_kind(NodeKind::Structure)),
            Statistic::Count("nodes.premise", count_kind(NodeKind::Premise)),
            Statistic::Count("nodes.compliance_unit", count_kind(NodeKind::ComplianceUnit)),
            Statistic::Count("edges.CONTAIN", count_edge(EdgeKind::CONTAIN)),
            Statistic::Count("edges.DERIVES", count_edge(EdgeKind::DERIVES)),
            Statistic::Count("edges.REFERS", count_edge(EdgeKind::REFERS)),
            Statistic::Count("cu.actor", count_cu(crate::policy::CuType::ActorCu)),
            Statistic::Count("cu.meta", count_cu(crate::policy::CuType::MetaCu)),
            Statistic::Histogram("degree", degree_histogram(self.nodes().len(), &degrees)),
        ]
    }

    fn is_empty_graph(&self) -> bool {
        self.nodes().is_empty()
    }
}

impl GraphStats for ContextGraph {
    /// Entity count, relation count, hypernym-entry count, degree histogram.
    fn stats(&self) -> Vec<Statistic> {
        let hypernym_entries: u64 = self
            .entities
            .iter()
            .map(|e| e.hypernym_labels().len() as u64)
            .sum();
        let mut degrees: BTreeMap<String, usize> = BTreeMap::new();
        for relation in &self.relations {
            *degrees.entry(relation.subj.clone()).or_default() += 1;
            *degrees.entry(relation.obj.clone()).or_default() += 1;
        }
        vec![
            Statistic::Count("entities", self.entities.len() as u64),
            Statistic::Count("relations", self.relations.len() as u64),
            Statistic::Count("hypernyms", hypernym_entries),
            Statistic::Histogram("degree", degree_histogram(self.entities.len(), &degrees)),
        ]
    }

    fn is_empty_graph(&self) -> bool {
        self.entities.is_empty()
    }
}

fn count_ratio(a: u64, b: u64) -> f64 {
    if a == 0 && b == 0 {
        1.0
    } else {
        a.min(b) as f64 / a.max(b) as f64
    }
}

fn histogram_similarity(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let len = a.len().max(b.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let l1: f64 = (0..len).map(|i| (get(a, i) - get(b, i)).abs()).sum();
    1.0 - 0.5 * l1
}

/// Mean of per-statistic similarities: count pairs score min/max (1 when
/// both zero), histograms score `1 − ½·L1`. One empty graph against a
/// non-empty one scores 0; two empty graphs score 1.
pub fn structural_isomorphism<G: GraphStats>(a: &G, b: &G) -> f64 {
    match (a.is_empty_graph(), b.is_empty_graph()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let sa = a.stats();
    let sb = b.stats();
    debug_assert_eq!(sa.len(), sb.len(), "same graph family expected");
    let mut total = 0.0;
    let mut n = 0usize;
    for (x, y) in sa.iter().zip(&sb) {
        total += match (x, y) {
            (Statistic::Count(_, ca), Statistic::Count(_, cb)) => count_ratio(*ca, *cb),
            (Statistic::Histogram(_, ha), Statistic::Histogram(_, hb)) => {
                histogram_similarity(ha, hb)
            }
            _ => 0.0,
        };
        n += 1;
    }
    if n == 0 {
        1.0
    } else {
        total / n as f64
    }
}

/// One row per iteration of the alternating build/reconstruct chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleRow {
    pub iteration: usize,
    pub semantic: f64,
    pub structural: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleReport {
    pub rows: Vec<CycleRow>,
}

impl CycleReport {
    pub fn to_json(&self) -> Result<String> {
        canon::to_canonical_pretty(self)
    }

    pub fn render_table(&self) -> String {
        let mut out = String::from("iter  semantic  structural\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{:<5} {:>8.4} {:>11.4}\n",
                row.iteration, row.semantic, row.structural
            ));
        }
        out
    }
}

/// Run the chain `T_k -> G_k -> T_{k+1}`, recording semantic(T0, Tk) and
/// structural(G0, G_{k-1}) per iteration.
pub fn cycle_consistency<G: GraphStats>(
    t0: &str,
    iterations: usize,
    mut build: impl FnMut(&str) -> Result<G>,
    mut reconstruct: impl FnMut(&G) -> Result<String>,
    embedder: &dyn EmbeddingAdapter,
) -> Result<CycleReport> {
    if iterations == 0 {
        return Err(Error::Invalid("cycle_consistency needs >= 1 iteration".into()));
    }
    let g0 = build(t0)?;
    let mut rows = Vec::with_capacity(iterations);
    let mut current_graph = None::<G>;
    let mut current_text = t0.to_string();

    for iteration in 1..=iterations {
        let graph = match current_graph.take() {
            Some(g) => g,
            None => build(&current_text)?,
        };
        let text = reconstruct(&graph)?;
        let semantic = semantic_isomorphism(t0, &text, embedder)?;
        let structural = structural_isomorphism(&g0, &graph);
        rows.push(CycleRow {
            iteration,
            semantic,
            structural,
        });
        current_text = text;
        current_graph = None;
        if iteration < iterations {
            current_graph = Some(build(&current_text)?);
        }
    }
    Ok(CycleReport { rows })
}
