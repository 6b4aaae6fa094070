//! End-to-end CLI acceptance: determinism of every artifact across repeated
//! runs and `--jobs` settings (criterion 6), plus exit-code and metrics
//! checks on the bundled fixtures.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_compliance")
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Every file under `dir`, keyed by relative name.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.insert(
                path.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&path).unwrap(),
            );
        }
    }
    out
}

fn pipeline_run(root: &Path, jobs: &str) -> BTreeMap<String, Vec<u8>> {
    let policy = root.join("policy.json");
    let ctx = root.join("ctx");
    let dec = root.join("dec");
    let doc = fixture("mini_regulation.json");
    let scenarios = fixture("scenarios.json");

    run_ok(&[
        "build-policy",
        "--doc",
        doc.to_str().unwrap(),
        "--out",
        policy.to_str().unwrap(),
        "--jobs",
        jobs,
    ]);
    run_ok(&[
        "build-context",
        "--policy",
        policy.to_str().unwrap(),
        "--scenarios",
        scenarios.to_str().unwrap(),
        "--out-dir",
        ctx.to_str().unwrap(),
        "--jobs",
        jobs,
    ]);
    run_ok(&[
        "judge",
        "--policy",
        policy.to_str().unwrap(),
        "--context-dir",
        ctx.to_str().unwrap(),
        "--out-dir",
        dec.to_str().unwrap(),
        "--jobs",
        jobs,
    ]);

    let mut files = BTreeMap::new();
    files.insert(
        "policy.json".to_string(),
        std::fs::read(&policy).unwrap(),
    );
    for (name, bytes) in snapshot(&ctx) {
        files.insert(format!("ctx/{name}"), bytes);
    }
    for (name, bytes) in snapshot(&dec) {
        files.insert(format!("dec/{name}"), bytes);
    }
    files
}

#[test]
fn criterion_6_end_to_end_determinism() {
    let started = Instant::now();
    let budget = Duration::from_secs(30);

    let dirs: Vec<tempfile::TempDir> = (0..4).map(|_| tempfile::tempdir().unwrap()).collect();
    let first = pipeline_run(dirs[0].path(), "1");
    // The policy graph must carry the premise marking and a reference chain.
    let policy_text = String::from_utf8(first["policy.json"].clone()).unwrap();
    assert!(policy_text.contains("\"premise\""));
    assert!(policy_text.contains("REFERS"));
    assert_eq!(
        first.iter().filter(|(k, _)| k.starts_with("dec/")).count(),
        5,
        "five scenarios, five decision files"
    );

    // Three runs at jobs=1 plus one at jobs=4: all byte-identical.
    for (i, dir) in dirs.iter().enumerate().skip(1) {
        let jobs = if i == 3 { "4" } else { "1" };
        let files = pipeline_run(dir.path(), jobs);
        assert_eq!(
            files.keys().collect::<Vec<_>>(),
            first.keys().collect::<Vec<_>>(),
            "file sets differ on run {i}"
        );
        for (name, bytes) in &files {
            assert_eq!(
                bytes, &first[name],
                "{name} differs on run {i} (jobs={jobs})"
            );
        }
    }

    let elapsed = started.elapsed();
    if elapsed > budget {
        println!("ACCEPTANCE 6: FAIL (over budget: {elapsed:.2?})");
        panic!("criterion 6 exceeded its runtime budget");
    }
    println!(
        "ACCEPTANCE 6: PASS ({elapsed:.2?}) — byte-identical policy/context/decision files across runs and --jobs"
    );
}

#[test]
fn evaluate_reports_hand_computed_micro_f1() {
    // Pooled TP=2 FP=1 FN=1 over the observed universe: micro-F1 = 2/3.
    let dir = tempfile::tempdir().unwrap();
    let scenarios = dir.path().join("scenarios.json");
    std::fs::write(
        &scenarios,
        r#"[{"id": "s1", "text": "t", "labels": {"violation": true, "articles": ["Art.1", "Art.2", "Art.4"], "risk_level": "low"}}]"#,
    )
    .unwrap();
    let dec_dir = dir.path().join("dec");
    std::fs::create_dir_all(&dec_dir).unwrap();
    std::fs::write(
        dec_dir.join("decision_s1.json"),
        r#"{"scenario_id": "s1", "decisions": [
            {"article": "DOC:R/ARTICLE:1", "label": "NON_COMPLIANT", "score": 0.9, "cu_id": "x", "overridden": false},
            {"article": "DOC:R/ARTICLE:2", "label": "NON_COMPLIANT", "score": 0.9, "cu_id": "x", "overridden": false},
            {"article": "DOC:R/ARTICLE:3", "label": "NON_COMPLIANT", "score": 0.9, "cu_id": "x", "overridden": false}
        ], "judgments": []}"#,
    )
    .unwrap();
    let report_path = dir.path().join("report.json");
    run_ok(&[
        "evaluate",
        "--scenarios",
        scenarios.to_str().unwrap(),
        "--decisions-dir",
        dec_dir.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let micro_f1 = report["micro_f1"].as_f64().unwrap();
    assert!((micro_f1 - 2.0 / 3.0).abs() < 1e-9, "got {micro_f1}");
}

#[test]
fn exit_codes_distinguish_error_classes() {
    // Config error: replay without a cassette.
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "build-policy",
        "--doc",
        fixture("mini_regulation.json").to_str().unwrap(),
        "--out",
        dir.path().join("p.json").to_str().unwrap(),
        "--adapter",
        "replay",
    ]);
    assert_eq!(out.status.code(), Some(2), "missing --cassette is a config error");

    // Adapter error: replay cassette file that does not exist.
    let out = run(&[
        "build-policy",
        "--doc",
        fixture("mini_regulation.json").to_str().unwrap(),
        "--out",
        dir.path().join("p.json").to_str().unwrap(),
        "--adapter",
        "replay",
        "--cassette",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "missing cassette file is an adapter error");

    // Data error: malformed document.
    let bad_doc = dir.path().join("bad.json");
    std::fs::write(&bad_doc, r#"{"kind": "chapter", "title": "X"}"#).unwrap();
    let out = run(&[
        "build-policy",
        "--doc",
        bad_doc.to_str().unwrap(),
        "--out",
        dir.path().join("p.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "malformed document is a data error");
}

#[test]
fn replay_round_trip_with_recorded_cassette() {
    // Record against the deterministic mock by driving the cassette API
    // through the core crate is covered in unit tests; here, replay with an
    // empty cassette must miss with exit 3.
    let dir = tempfile::tempdir().unwrap();
    let cassette = dir.path().join("cassette.json");
    std::fs::write(&cassette, "{\"chat\": {}, \"embed\": {}}\n").unwrap();
    let out = run(&[
        "build-policy",
        "--doc",
        fixture("mini_regulation.json").to_str().unwrap(),
        "--out",
        dir.path().join("p.json").to_str().unwrap(),
        "--adapter",
        "replay",
        "--cassette",
        cassette.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("replay miss"), "diagnostics name the miss: {stderr}");
}

#[test]
fn fidelity_cycle_fixed_point_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("cycle.json");
    run_ok(&[
        "fidelity",
        "--doc",
        fixture("mini_regulation.json").to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
        "--mode",
        "cycle",
        "--iterations",
        "5",
        "--reconstructor",
        "identity",
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert!((row["semantic"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        assert!((row["structural"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn fidelity_noise_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("noise.json");
    run_ok(&[
        "fidelity",
        "--doc",
        fixture("mini_regulation.json").to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
        "--mode",
        "noise",
        "--deltas",
        "0.1,0.5",
        "--seeds",
        "3",
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row["n_seeds"].as_u64(), Some(3));
        assert!(row["ci_low"].as_f64().unwrap() <= row["mean"].as_f64().unwrap());
    }
}

#[test]
fn help_enumerates_every_knob_with_defaults() {
    for command in ["build-policy", "build-context", "judge", "fidelity"] {
        let out = run(&[command, "--help"]);
        assert!(out.status.success());
        let help = String::from_utf8_lossy(&out.stdout);
        for knob in [
            "--k ", "--k1", "--n ", "--m ", "--beta", "--radius", "--w-ent", "--w-hyp",
            "--w-bonus", "--batch-size", "--jobs", "--seed", "--config", "--adapter",
        ] {
            assert!(help.contains(knob.trim()), "{command} help missing {knob}");
        }
        // Documented defaults surface in the help text.
        for default in ["default: 8", "default: 50", "default: 5", "default: 0.3", "default: 1"] {
            assert!(help.contains(default), "{command} help missing `{default}`");
        }
    }
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    // The file pins beta out of range; it must win over the flag and fail
    // validation, proving the precedence order.
    std::fs::write(&config, "beta = 7.5\n").unwrap();
    let out = run(&[
        "build-policy",
        "--doc",
        fixture("mini_regulation.json").to_str().unwrap(),
        "--out",
        dir.path().join("p.json").to_str().unwrap(),
        "--beta",
        "0.3",
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("beta"), "{stderr}");

    // A valid override is accepted.
    std::fs::write(&config, "k = 3\njobs = 2\n").unwrap();
    run_ok(&[
        "build-policy",
        "--doc",
        fixture("mini_regulation.json").to_str().unwrap(),
        "--out",
        dir.path().join("p.json").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
}

#[test]
fn judge_can_dump_plans() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("policy.json");
    let ctx = dir.path().join("ctx");
    let dec = dir.path().join("dec");
    let plans = dir.path().join("plans");
    run_ok(&[
        "build-policy",
        "--doc",
        fixture("mini_regulation.json").to_str().unwrap(),
        "--out",
        policy.to_str().unwrap(),
    ]);
    run_ok(&[
        "build-context",
        "--policy",
        policy.to_str().unwrap(),
        "--scenarios",
        fixture("scenarios.json").to_str().unwrap(),
        "--out-dir",
        ctx.to_str().unwrap(),
    ]);
    run_ok(&[
        "judge",
        "--policy",
        policy.to_str().unwrap(),
        "--context-dir",
        ctx.to_str().unwrap(),
        "--out-dir",
        dec.to_str().unwrap(),
        "--dump-plans",
        plans.to_str().unwrap(),
    ]);
    let plan_files = snapshot(&plans);
    assert_eq!(plan_files.len(), 5);
    let any = plan_files.values().next().unwrap();
    let parsed: serde_json::Value = serde_json::from_slice(any).unwrap();
    let first_plan = &parsed.as_array().unwrap()[0];
    assert!(first_plan["items"].as_array().unwrap().len() <= 8);
}
