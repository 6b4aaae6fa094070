//! Seeded graph corruption and the noise-sweep report.
//!
//! CONTAIN edges are exempt from deletion (destroying the hierarchy makes
//! reconstruction ill-posed); the eligible set is REFERS ∪ DERIVES. Counts
//! scale with both the noise fraction and the operator's mix proportion, so
//! a delete-only mix removes exactly `⌊δ·|E_eligible|⌋` edges.

use serde::{Deserialize, Serialize};

use crate::adapters::EmbeddingAdapter;
use crate::error::{Error, Result};
use crate::policy::{EdgeKind, PolicyEdge, PolicyGraph};
use crate::util::canon;
use crate::util::rng::SplitMix64;

use super::semantic_isomorphism;

/// Operator mix; proportions must sum to 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseMix {
    pub delete_edges: f64,
    pub add_spurious_edges: f64,
    pub alter_cu_attrs: f64,
}

impl NoiseMix {
    pub fn uniform() -> Self {
        Self {
            delete_edges: 1.0 / 3.0,
            add_spurious_edges: 1.0 / 3.0,
            alter_cu_attrs: 1.0 / 3.0,
        }
    }

    pub fn delete_only() -> Self {
        Self {
            delete_edges: 1.0,
            add_spurious_edges: 0.0,
            alter_cu_attrs: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Corruption fraction in [0, 1].
    pub delta: f64,
    pub mix: NoiseMix,
    pub seed: u64,
}

impl NoiseConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::Invalid(format!(
                "noise delta {} outside [0, 1]",
                self.delta
            )));
        }
        let sum = self.mix.delete_edges + self.mix.add_spurious_edges + self.mix.alter_cu_attrs;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!(
                "noise mix proportions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Corrupt a copy of the graph; the original is untouched.
pub fn inject_noise(graph: &PolicyGraph, cfg: &NoiseConfig) -> Result<PolicyGraph> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let mut nodes = graph.nodes().to_vec();
    let mut edges = graph.edges().to_vec();

    // Delete: uniformly chosen non-CONTAIN edges.
    let eligible: Vec<usize> = edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind != EdgeKind::CONTAIN)
        .map(|(i, _)| i)
        .collect();
    let delete_count =
        (cfg.delta * cfg.mix.delete_edges * eligible.len() as f64).floor() as usize;
    if delete_count > 0 {
        let chosen = rng.distinct_indices(eligible.len(), delete_count);
        let mut doomed: Vec<usize> = chosen.iter().map(|&i| eligible[i]).collect();
        doomed.sort_unstable_by(|a, b| b.cmp(a));
        for index in doomed {
            edges.remove(index);
        }
    }

    // Add: spurious REFERS edges between unit pairs not already linked.
    let cu_ids: Vec<String> = nodes
        .iter()
        .filter(|n| n.is_cu())
        .map(|n| n.id.clone())
        .collect();
    let add_count =
        (cfg.delta * cfg.mix.add_spurious_edges * eligible.len() as f64).floor() as usize;
    if add_count > 0 && cu_ids.len() >= 2 {
        let mut added = 0usize;
        let mut attempts = 0usize;
        while added < add_count && attempts < add_count * 20 + 20 {
            attempts += 1;
            let a = rng.index(cu_ids.len());
            let b = rng.index(cu_ids.len());
            if a == b {
                continue;
            }
            let (src, dst) = (&cu_ids[a], &cu_ids[b]);
            let linked = edges.iter().any(|e| {
                e.kind == EdgeKind::REFERS
                    && ((e.src == *src && e.dst == *dst) || (e.src == *dst && e.dst == *src))
            });
            if linked {
                continue;
            }
            edges.push(PolicyEdge {
                kind: EdgeKind::REFERS,
                src: src.clone(),
                dst: dst.clone(),
            });
            added += 1;
        }
    }

    // Alter: shuffle the words of one randomly chosen attr field per unit.
    let alter_count = (cfg.delta * cfg.mix.alter_cu_attrs * cu_ids.len() as f64).floor() as usize;
    if alter_count > 0 && !cu_ids.is_empty() {
        let chosen = rng.distinct_indices(cu_ids.len(), alter_count.min(cu_ids.len()));
        for index in chosen {
            let cu_id = &cu_ids[index];
            let node = nodes
                .iter_mut()
                .find(|n| &n.id == cu_id)
                .expect("cu id from this node list");
            let Some(attrs) = node.attrs.as_mut() else {
                continue;
            };
            // Candidate fields that actually carry text.
            let mut fields: Vec<usize> = vec![0]; // subject
            if !attrs.constraint.is_empty() {
                fields.push(1);
            }
            if attrs.context.is_some() {
                fields.push(2);
            }
            match fields[rng.index(fields.len())] {
                0 => attrs.subject = shuffle_words(&attrs.subject, &mut rng),
                1 => {
                    let i = rng.index(attrs.constraint.len());
                    attrs.constraint[i] = shuffle_words(&attrs.constraint[i], &mut rng);
                }
                _ => {
                    let context = attrs.context.take().unwrap_or_default();
                    attrs.context = Some(shuffle_words(&context, &mut rng));
                }
            }
        }
    }

    Ok(PolicyGraph::from_parts(nodes, edges))
}

fn shuffle_words(text: &str, rng: &mut SplitMix64) -> String {
    let mut words: Vec<&str> = text.split_whitespace().collect();
    rng.shuffle(&mut words);
    words.join(" ")
}

/// One row of the noise sweep: mean semantic similarity with a 95% CI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseRow {
    pub delta: f64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseReport {
    pub rows: Vec<NoiseRow>,
}

impl NoiseReport {
    pub fn to_json(&self) -> Result<String> {
        canon::to_canonical_pretty(self)
    }

    pub fn render_table(&self) -> String {
        let mut out = String::from("delta  mean_semantic  95%_CI\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{:<6.2} {:>13.4}  [{:.4}, {:.4}]\n",
                row.delta, row.mean, row.ci_low, row.ci_high
            ));
        }
        out
    }
}

/// Corrupt, reconstruct, and score once per (delta, seed); aggregate means
/// and normal-approximation confidence intervals over seeds per delta.
pub fn noise_sweep(
    graph: &PolicyGraph,
    t0: &str,
    deltas: &[f64],
    seeds: &[u64],
    mix: NoiseMix,
    mut reconstruct: impl FnMut(&PolicyGraph) -> Result<String>,
    embedder: &dyn EmbeddingAdapter,
) -> Result<NoiseReport> {
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut scores = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let corrupted = inject_noise(graph, &NoiseConfig { delta, mix, seed })?;
            let t1 = reconstruct(&corrupted)?;
            scores.push(semantic_isomorphism(t0, &t1, embedder)?);
        }
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let variance = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        let half_width = 1.96 * (variance / n).sqrt();
        rows.push(NoiseRow {
            delta,
            mean,
            ci_low: mean - half_width,
            ci_high: mean + half_width,
            n_seeds: scores.len(),
        });
    }
    Ok(NoiseReport { rows })
}
