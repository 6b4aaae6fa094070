//! Record a full pipeline run into a cassette, then replay it with no inner
//! transport: outputs must match byte for byte.

use std::sync::Arc;

use compliance_core::adapters::mock::{HashEmbedder, PipelineMock};
use compliance_core::adapters::{
    Cassette, CassetteChat, CassetteEmbed, CassetteMode, ChatClient, ChatTransport,
    EmbeddingAdapter, TaskCatalog,
};
use compliance_core::pipeline::{Pipeline, PipelineConfig};
use compliance_core::policy::PremiseRuleClassifier;

fn fixture(name: &str) -> String {
    let path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

fn run_pipeline(chat: Arc<ChatClient>, embedder: Arc<dyn EmbeddingAdapter>) -> (String, String, String) {
    let pipeline = Pipeline::new(chat, embedder, PipelineConfig::default());
    let (policy, _) = pipeline
        .build_policy(&fixture("mini_regulation.json"), &PremiseRuleClassifier::default())
        .unwrap();
    let policy_json = policy.to_json().unwrap();
    let prepared = pipeline.prepare(policy).unwrap();
    let (ctx, _) = pipeline
        .build_context(
            &prepared,
            "The operator has not encrypted archived client records. The operator stores fully anonymised client records for research.",
            Some("s2".into()),
        )
        .unwrap();
    let ctx_json = ctx.to_json().unwrap();
    let decisions = pipeline.judge(&prepared, &ctx).unwrap().decisions.to_json().unwrap();
    (policy_json, ctx_json, decisions)
}

#[test]
fn record_then_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cassette.json");

    let recorded = {
        let cassette = Cassette::open(CassetteMode::Record, &path).unwrap();
        let chat_transport: Arc<dyn ChatTransport> =
            Arc::new(CassetteChat::record(cassette.clone(), Arc::new(PipelineMock::new())));
        let embedder: Arc<dyn EmbeddingAdapter> = Arc::new(CassetteEmbed::record(
            cassette.clone(),
            Arc::new(HashEmbedder::default()),
        ));
        let chat = Arc::new(ChatClient::new(TaskCatalog::default(), chat_transport));
        let out = run_pipeline(chat, embedder);
        cassette.flush().unwrap();
        assert!(!cassette.is_empty());
        out
    };

    // Replay has no inner transport: any miss would error, so equality here
    // proves zero non-cassette calls.
    let replayed = {
        let cassette = Cassette::open(CassetteMode::Replay, &path).unwrap();
        let chat_transport: Arc<dyn ChatTransport> = Arc::new(CassetteChat::replay(cassette.clone()));
        let embedder: Arc<dyn EmbeddingAdapter> = Arc::new(CassetteEmbed::replay(cassette));
        let chat = Arc::new(ChatClient::new(TaskCatalog::default(), chat_transport));
        run_pipeline(chat, embedder)
    };

    assert_eq!(recorded, replayed);
}
