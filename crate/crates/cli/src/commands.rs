//! Command implementations and exit-code classification.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use compliance_core::context::ContextGraph;
use compliance_core::error::{AdapterError, Error as CoreError};
use compliance_core::eval::{gdpr_chapters, load_scenarios, predicted_articles, EvalReport};
use compliance_core::fidelity::{
    cycle_consistency, noise_sweep, reconstruct_policy_identity, reconstruct_policy_template,
    NoiseMix,
};
use compliance_core::gate::DecisionFile;
use compliance_core::pipeline::Pipeline;
use compliance_core::policy::{
    parse_document, PolicyGraph, PolicyGraphBuilder, PremiseRuleClassifier,
};
use compliance_core::util::canon;

use crate::adapters::{self, Adapters};
use crate::config::{config_error, AdapterArgs, ConfigError, KnobArgs};

/// 2 = configuration, 3 = adapter/transport, 4 = data.
pub fn classify_exit(error: &anyhow::Error) -> u8 {
    for cause in error.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<AdapterError>().is_some() {
            return 3;
        }
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::Adapter(_) => 3,
                _ => 4,
            };
        }
        if cause.downcast_ref::<clap::Error>().is_some() {
            return 2;
        }
    }
    4
}

/// Write via a temp file in the target directory, then rename.
fn atomic_write(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp-write");
    std::fs::write(&tmp, content).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move into place: {}", path.display()))?;
    Ok(())
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn classifier_from(keywords: &[String]) -> PremiseRuleClassifier {
    if keywords.is_empty() {
        PremiseRuleClassifier::default()
    } else {
        PremiseRuleClassifier::new(keywords.iter().cloned())
    }
}

fn setup(
    adapter_args: &AdapterArgs,
    knobs: &KnobArgs,
) -> Result<(Pipeline, Adapters, PremiseRuleClassifier)> {
    let resolved = knobs.resolve().map_err(|e| config_error(format!("{e:#}")))?;
    let built = adapters::build(adapter_args, &resolved)?;
    let pipeline = Pipeline::new(
        built.chat.clone(),
        built.embedder.clone(),
        resolved.pipeline.clone(),
    );
    Ok((pipeline, built, classifier_from(&resolved.premise_keywords)))
}

pub fn build_policy(
    doc: &Path,
    out: &Path,
    report: Option<&Path>,
    adapter_args: &AdapterArgs,
    knobs: &KnobArgs,
) -> Result<()> {
    let (pipeline, adapters, classifier) = setup(adapter_args, knobs)?;
    let raw = read_file(doc)?;
    let (graph, build_report) = pipeline.build_policy(&raw, &classifier)?;
    atomic_write(out, &graph.to_json()?)?;

    let report_path = report
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_report_path(out));
    atomic_write(&report_path, &canon::to_canonical_pretty(&build_report)?)?;
    adapters.flush()?;
    println!(
        "policy graph: {} nodes, {} edges -> {}",
        graph.nodes().len(),
        graph.edges().len(),
        out.display()
    );
    Ok(())
}

fn default_report_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "build".to_string());
    name.push_str(".report.json");
    out.with_file_name(name)
}

pub fn build_context(
    policy: &Path,
    scenarios: &Path,
    out_dir: &Path,
    adapter_args: &AdapterArgs,
    knobs: &KnobArgs,
) -> Result<()> {
    let (pipeline, adapters, _) = setup(adapter_args, knobs)?;
    let graph = PolicyGraph::from_json(&read_file(policy)?)?;
    let records = load_scenarios(&read_file(scenarios)?)?;
    let prepared = pipeline.prepare(graph)?;

    let mut all_warnings: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for scenario in &records {
        let (ctx, warnings) =
            pipeline.build_context(&prepared, &scenario.text, Some(scenario.id.clone()))?;
        atomic_write(
            &out_dir.join(format!("ctx_{}.json", scenario.id)),
            &ctx.to_json()?,
        )?;
        if !warnings.is_empty() {
            all_warnings.insert(scenario.id.clone(), warnings);
        }
    }
    if !all_warnings.is_empty() {
        atomic_write(
            &out_dir.join("ctx_build_report.json"),
            &canon::to_canonical_pretty(&all_warnings)?,
        )?;
    }
    adapters.flush()?;
    println!(
        "context graphs: {} scenarios -> {}",
        records.len(),
        out_dir.display()
    );
    Ok(())
}

fn sorted_files_with_prefix(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "json")
                && p.file_name()
                    .is_some_and(|n| n.to_string_lossy().starts_with(prefix))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn judge(
    policy: &Path,
    context_dir: &Path,
    out_dir: &Path,
    dump_plans: Option<&Path>,
    adapter_args: &AdapterArgs,
    knobs: &KnobArgs,
) -> Result<()> {
    let (pipeline, adapters, _) = setup(adapter_args, knobs)?;
    let graph = PolicyGraph::from_json(&read_file(policy)?)?;
    let prepared = pipeline.prepare(graph)?;

    let ctx_files = sorted_files_with_prefix(context_dir, "ctx_")?;
    if ctx_files.is_empty() {
        bail!("no ctx_*.json files under {}", context_dir.display());
    }
    for path in &ctx_files {
        let ctx = ContextGraph::from_json(&read_file(path)?)?;
        let id = ctx
            .source
            .clone()
            .or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().trim_start_matches("ctx_").to_string())
            })
            .ok_or_else(|| anyhow!("context graph {} has no scenario id", path.display()))?;
        let outcome = pipeline.judge(&prepared, &ctx)?;
        atomic_write(
            &out_dir.join(format!("decision_{id}.json")),
            &outcome.decisions.to_json()?,
        )?;
        if let Some(plan_dir) = dump_plans {
            atomic_write(
                &plan_dir.join(format!("plans_{id}.json")),
                &canon::to_canonical_pretty(&outcome.plans)?,
            )?;
        }
    }
    adapters.flush()?;
    println!(
        "decisions: {} scenarios -> {}",
        ctx_files.len(),
        out_dir.display()
    );
    Ok(())
}

fn parse_universe(spec: &str) -> Result<Option<BTreeSet<u32>>> {
    if spec == "observed" {
        return Ok(None);
    }
    let (lo, hi) = spec
        .split_once('-')
        .ok_or_else(|| config_error(format!("universe must be `observed` or `LO-HI`, got `{spec}`")))?;
    let lo: u32 = lo.trim().parse().map_err(|_| config_error("bad universe bound"))?;
    let hi: u32 = hi.trim().parse().map_err(|_| config_error("bad universe bound"))?;
    if hi < lo {
        return Err(config_error("universe range is descending"));
    }
    Ok(Some((lo..=hi).collect()))
}

pub fn evaluate(
    scenarios: &Path,
    decisions_dir: &Path,
    out: &Path,
    universe: &str,
    chapters: bool,
) -> Result<()> {
    let records = load_scenarios(&read_file(scenarios)?)?;
    let mut gold: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
    for scenario in &records {
        gold.insert(scenario.id.clone(), scenario.gold_articles()?);
    }

    let mut preds: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
    for path in sorted_files_with_prefix(decisions_dir, "decision_")? {
        let file = DecisionFile::from_json(&read_file(&path)?)?;
        if !gold.contains_key(&file.scenario_id) {
            bail!(
                "decision file {} names unknown scenario `{}`",
                path.display(),
                file.scenario_id
            );
        }
        preds.insert(file.scenario_id.clone(), predicted_articles(&file));
    }
    for id in gold.keys() {
        if !preds.contains_key(id) {
            eprintln!("warning: no decision file for scenario {id}; treating as no predictions");
            preds.insert(id.clone(), BTreeSet::new());
        }
    }

    let universe = parse_universe(universe)?;
    let chapter_map = chapters.then(gdpr_chapters);
    let report = EvalReport::compute(&preds, &gold, universe, chapter_map.as_ref())?;
    atomic_write(out, &report.to_json()?)?;
    print!("{}", report.render_table());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn fidelity(
    doc: &Path,
    out: &Path,
    mode: &str,
    iterations: usize,
    reconstructor: &str,
    deltas: &[f64],
    seeds: usize,
    adapter_args: &AdapterArgs,
    knobs: &KnobArgs,
) -> Result<()> {
    let (pipeline, adapters, classifier) = setup(adapter_args, knobs)?;
    let raw = read_file(doc)?;

    match mode {
        "cycle" => {
            let identity = match reconstructor {
                "identity" => true,
                "template" => false,
                other => return Err(config_error(format!("unknown reconstructor `{other}`"))),
            };
            // Rebuilds treat each prose line as one article's text.
            let chat = pipeline.chat.clone();
            let batch = pipeline.config.batch_size;
            let build = |text: &str| -> compliance_core::error::Result<PolicyGraph> {
                let children: Vec<serde_json::Value> = text
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .enumerate()
                    .map(|(i, line)| {
                        serde_json::json!({
                            "kind": "article",
                            "title": format!("Article {}", i + 1),
                            "text": line,
                        })
                    })
                    .collect();
                let doc_json = serde_json::json!({
                    "kind": "document", "title": "CYCLE", "children": children,
                })
                .to_string();
                let tree = parse_document(&doc_json)?;
                let builder = PolicyGraphBuilder::new()
                    .batch_size(batch)
                    .structure_pass(&tree, &PremiseRuleClassifier::default())?;
                let builder = if identity {
                    builder
                } else {
                    builder.extract_units(&chat)?
                };
                Ok(builder.finish()?.0)
            };

            let (g0, t0) = if identity {
                let tree = parse_document(&raw)?;
                let g0 = PolicyGraphBuilder::new()
                    .structure_pass(&tree, &classifier)?
                    .finish()?
                    .0;
                let t0 = reconstruct_policy_identity(&g0);
                (g0, t0)
            } else {
                let (g0, _) = pipeline.build_policy(&raw, &classifier)?;
                let t0 = reconstruct_policy_template(&g0);
                (g0, t0)
            };
            drop(g0);

            let report = cycle_consistency(
                &t0,
                iterations,
                build,
                |g| {
                    Ok(if identity {
                        reconstruct_policy_identity(g)
                    } else {
                        reconstruct_policy_template(g)
                    })
                },
                pipeline.embedder.as_ref(),
            )?;
            atomic_write(out, &report.to_json()?)?;
            print!("{}", report.render_table());
        }
        "noise" => {
            let (g0, _) = pipeline.build_policy(&raw, &classifier)?;
            let t0 = reconstruct_policy_template(&g0);
            let seed_list: Vec<u64> = (0..seeds as u64).collect();
            let report = noise_sweep(
                &g0,
                &t0,
                deltas,
                &seed_list,
                NoiseMix::uniform(),
                |g| Ok(reconstruct_policy_template(g)),
                pipeline.embedder.as_ref(),
            )?;
            atomic_write(out, &report.to_json()?)?;
            print!("{}", report.render_table());
        }
        other => return Err(config_error(format!("unknown fidelity mode `{other}`"))),
    }
    adapters.flush()?;
    Ok(())
}
