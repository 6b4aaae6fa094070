//! End-to-end orchestration: document to policy graph, scenario to context
//! graph, anchors through the gate to a decision file.
//!
//! Anchors are judged independently and may run concurrently (`jobs`);
//! results merge in anchor order, so outputs are identical for any `jobs`
//! value under deterministic adapters.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adapters::{ChatClient, EmbeddingAdapter};
use crate::context::{ContextBuildConfig, ContextGraph, ContextGraphBuilder, DenseFragmentIndex};
use crate::error::Result;
use crate::gate::{
    aggregate_by_article, apply_overrides, evidence_window, gate_meta, judge_listwise,
    DecisionFile, Judgment,
};
use crate::policy::{
    parse_document, BuildReport, PolicyGraph, PolicyGraphBuilder, PremiseClassifier,
};
use crate::retrieval::{
    extract_anchors, preselect, rerank, ChatCrossScorer, CrossScorer, CUPlan, ScoreWeights,
    SubjectIndex,
};
use crate::util::parallel::parallel_map;

/// Pipeline knobs with their documented defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Plan size per anchor.
    pub k: usize,
    /// Preselection pool size.
    pub k1: usize,
    /// Hypernyms retained per entity.
    pub n: usize,
    /// Policy fragments consulted per entity.
    pub m: usize,
    /// STRONG hypernym bonus.
    pub beta: f64,
    /// Evidence window hops.
    pub radius: usize,
    pub weights: ScoreWeights,
    /// Items per extraction/reference batch.
    pub batch_size: usize,
    /// Concurrent adapter calls.
    pub jobs: usize,
    pub seed: u64,
    /// Meta-unit scope gating on aggregation inputs.
    pub meta_gating: bool,
    /// Cross-scorer reranking; off means degraded bi-encoder order.
    pub use_cross_scorer: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: 8,
            k1: 50,
            n: 5,
            m: 5,
            beta: 0.3,
            radius: 1,
            weights: ScoreWeights::default(),
            batch_size: 8,
            jobs: 1,
            seed: 0,
            meta_gating: true,
            use_cross_scorer: true,
        }
    }
}

/// Per-policy caches shared across scenarios.
pub struct PreparedPolicy {
    pub policy: PolicyGraph,
    pub fragments: DenseFragmentIndex,
    pub subjects: SubjectIndex,
}

/// Everything produced by judging one scenario.
pub struct JudgeOutcome {
    pub decisions: DecisionFile,
    pub plans: Vec<CUPlan>,
}

pub struct Pipeline {
    pub chat: Arc<ChatClient>,
    pub embedder: Arc<dyn EmbeddingAdapter>,
    pub config: PipelineConfig,
}

impl Pipeline {
    pub fn new(
        chat: Arc<ChatClient>,
        embedder: Arc<dyn EmbeddingAdapter>,
        config: PipelineConfig,
    ) -> Self {
        Self {
            chat,
            embedder,
            config,
        }
    }

    /// Document JSON to finished policy graph.
    pub fn build_policy(
        &self,
        doc_json: &str,
        classifier: &dyn PremiseClassifier,
    ) -> Result<(PolicyGraph, BuildReport)> {
        let tree = parse_document(doc_json)?;
        PolicyGraphBuilder::new()
            .batch_size(self.config.batch_size)
            .jobs(self.config.jobs)
            .structure_pass(&tree, classifier)?
            .extract_units(&self.chat)?
            .resolve_references(&self.chat)?
            .finish()
    }

    /// Build the per-policy retrieval caches once.
    pub fn prepare(&self, policy: PolicyGraph) -> Result<PreparedPolicy> {
        let fragments = DenseFragmentIndex::build(&policy, self.embedder.clone())?;
        let subjects = SubjectIndex::build(&policy, self.embedder.as_ref())?;
        Ok(PreparedPolicy {
            policy,
            fragments,
            subjects,
        })
    }

    /// Scenario text to context graph.
    pub fn build_context(
        &self,
        prepared: &PreparedPolicy,
        text: &str,
        scenario_id: Option<String>,
    ) -> Result<(ContextGraph, Vec<String>)> {
        let builder = ContextGraphBuilder {
            chat: &self.chat,
            retriever: &prepared.fragments,
            config: ContextBuildConfig {
                m: self.config.m,
                n: self.config.n,
                beta: self.config.beta,
                jobs: self.config.jobs,
            },
        };
        builder.build(text, scenario_id)
    }

    /// Judge one scenario's context graph into a decision file.
    pub fn judge(&self, prepared: &PreparedPolicy, ctx: &ContextGraph) -> Result<JudgeOutcome> {
        let anchors = extract_anchors(ctx);
        let scorer: Option<Box<dyn CrossScorer>> = if self.config.use_cross_scorer {
            Some(Box::new(ChatCrossScorer {
                chat: self.chat.clone(),
            }))
        } else {
            None
        };

        let per_anchor = parallel_map(anchors, self.config.jobs, |anchor| {
            let candidates = preselect(
                anchor,
                ctx,
                &prepared.subjects,
                &self.config.weights,
                self.embedder.as_ref(),
                self.config.k1,
            )?;
            let plan = rerank(
                &prepared.policy,
                anchor,
                &candidates,
                scorer.as_deref(),
                self.config.k,
            )?;
            let window = evidence_window(ctx, anchor, self.config.radius);
            let judgments = judge_listwise(&window, &plan, anchor, ctx, &self.chat)?;
            let judgments =
                apply_overrides(judgments, &prepared.policy, &window, ctx, &self.chat)?;
            Ok::<(CUPlan, Vec<Judgment>), crate::error::Error>((plan, judgments))
        });

        let mut plans = Vec::new();
        let mut judgments = Vec::new();
        for outcome in per_anchor {
            let (plan, mut anchor_judgments) = outcome?;
            plans.push(plan);
            judgments.append(&mut anchor_judgments);
        }

        let judgments = if self.config.meta_gating {
            gate_meta(judgments, &prepared.policy)
        } else {
            judgments
        };
        let decisions = aggregate_by_article(&judgments, &prepared.policy)?;
        Ok(JudgeOutcome {
            decisions: DecisionFile {
                scenario_id: ctx.source.clone().unwrap_or_default(),
                decisions,
                judgments,
            },
            plans,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::mock::{HashEmbedder, PipelineMock};
    use crate::adapters::TaskCatalog;
    use crate::policy::PremiseRuleClassifier;
    use serde_json::json;

    fn mini_doc() -> String {
        json!({
            "kind": "document", "title": "MiniReg",
            "children": [
                {"kind": "article", "title": "Article 1 - Definitions",
                 "text": "'client record' means any stored information describing a client."},
                {"kind": "article", "title": "Article 2", "children": [
                    {"kind": "point", "text": "The operator shall designate a records officer."}
                ]},
                {"kind": "article", "title": "Article 3", "children": [
                    {"kind": "point", "text": "The operator shall encrypt client records and follow Article 4."}
                ]},
                {"kind": "article", "title": "Article 4",
                 "text": "The duty in Article 3 shall not apply where records are fully anonymised."},
            ]
        })
        .to_string()
    }

    fn pipeline(jobs: usize) -> Pipeline {
        let chat = Arc::new(ChatClient::new(
            TaskCatalog::default(),
            Arc::new(PipelineMock::new()),
        ));
        let config = PipelineConfig {
            jobs,
            ..PipelineConfig::default()
        };
        Pipeline::new(chat, Arc::new(HashEmbedder::default()), config)
    }

    #[test]
    fn full_run_produces_decisions() {
        let p = pipeline(1);
        let (policy, report) = p
            .build_policy(&mini_doc(), &PremiseRuleClassifier::default())
            .unwrap();
        assert_eq!(report.premise_articles.len(), 1);
        assert!(policy.cu_nodes().count() >= 3);

        let prepared = p.prepare(policy).unwrap();
        let (ctx, _) = p
            .build_context(
                &prepared,
                "The clinic operator has not designated a records officer. The operator stores client records.",
                Some("s1".into()),
            )
            .unwrap();
        assert!(!ctx.entities.is_empty());

        let outcome = p.judge(&prepared, &ctx).unwrap();
        assert_eq!(outcome.decisions.scenario_id, "s1");
        assert!(!outcome.decisions.judgments.is_empty());
        assert!(!outcome.decisions.decisions.is_empty());
    }

    #[test]
    fn byte_identical_across_jobs_and_runs() {
        let run = |jobs: usize| {
            let p = pipeline(jobs);
            let (policy, _) = p
                .build_policy(&mini_doc(), &PremiseRuleClassifier::default())
                .unwrap();
            let policy_json = policy.to_json().unwrap();
            let prepared = p.prepare(policy).unwrap();
            let (ctx, _) = p
                .build_context(
                    &prepared,
                    "The clinic operator exports client records to an overseas platform. The operator has not encrypted client records.",
                    Some("s1".into()),
                )
                .unwrap();
            let ctx_json = ctx.to_json().unwrap();
            let outcome = p.judge(&prepared, &ctx).unwrap();
            (policy_json, ctx_json, outcome.decisions.to_json().unwrap())
        };
        let a = run(1);
        let b = run(1);
        let c = run(4);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}
