//! Batch CLI for the compliance graph pipeline.
//!
//! Exit codes: 0 success, 2 configuration error, 3 adapter/transport error,
//! 4 data error.

mod adapters;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{AdapterArgs, KnobArgs};

#[derive(Parser)]
#[command(
    name = "compliance",
    about = "Build policy/context graphs, judge scenarios, and score decisions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a structured regulatory document into a policy graph file.
    BuildPolicy {
        /// Document input JSON.
        #[arg(long)]
        doc: PathBuf,
        /// Policy graph output path.
        #[arg(long)]
        out: PathBuf,
        /// Build report output path (default: <out>.report.json).
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        adapter: AdapterArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// Build one context graph file per scenario.
    BuildContext {
        /// Policy graph file.
        #[arg(long)]
        policy: PathBuf,
        /// Scenario file (JSON array or JSON lines).
        #[arg(long)]
        scenarios: PathBuf,
        /// Output directory for ctx_<id>.json files.
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        adapter: AdapterArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// Judge context graphs against the policy graph into decision files.
    Judge {
        /// Policy graph file.
        #[arg(long)]
        policy: PathBuf,
        /// Directory of context graph files.
        #[arg(long)]
        context_dir: PathBuf,
        /// Output directory for decision_<id>.json files.
        #[arg(long)]
        out_dir: PathBuf,
        /// Also dump per-anchor plan files for audit.
        #[arg(long)]
        dump_plans: Option<PathBuf>,
        #[command(flatten)]
        adapter: AdapterArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// Score decision files against scenario labels.
    Evaluate {
        /// Scenario file carrying gold labels.
        #[arg(long)]
        scenarios: PathBuf,
        /// Directory of decision files.
        #[arg(long)]
        decisions_dir: PathBuf,
        /// Metrics report output path.
        #[arg(long)]
        out: PathBuf,
        /// Article universe: "observed" or an inclusive range like "1-99".
        #[arg(long, default_value = "observed")]
        universe: String,
        /// Include per-chapter any-hit recall/FPR.
        #[arg(long)]
        chapters: bool,
    },
    /// Cycle-consistency and noise-injection fidelity reports.
    Fidelity {
        /// Document input JSON.
        #[arg(long)]
        doc: PathBuf,
        /// Report output path.
        #[arg(long)]
        out: PathBuf,
        /// cycle | noise
        #[arg(long, default_value = "cycle")]
        mode: String,
        /// Iterations for cycle mode.
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        /// Reconstruction: identity | template.
        #[arg(long, default_value = "identity")]
        reconstructor: String,
        /// Comma-separated noise fractions for noise mode.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.03, 0.05, 0.10, 0.20])]
        deltas: Vec<f64>,
        /// Seeds per delta for noise mode.
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[command(flatten)]
        adapter: AdapterArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::BuildPolicy {
            doc,
            out,
            report,
            adapter,
            knobs,
        } => commands::build_policy(&doc, &out, report.as_deref(), &adapter, &knobs),
        Command::BuildContext {
            policy,
            scenarios,
            out_dir,
            adapter,
            knobs,
        } => commands::build_context(&policy, &scenarios, &out_dir, &adapter, &knobs),
        Command::Judge {
            policy,
            context_dir,
            out_dir,
            dump_plans,
            adapter,
            knobs,
        } => commands::judge(
            &policy,
            &context_dir,
            &out_dir,
            dump_plans.as_deref(),
            &adapter,
            &knobs,
        ),
        Command::Evaluate {
            scenarios,
            decisions_dir,
            out,
            universe,
            chapters,
        } => commands::evaluate(&scenarios, &decisions_dir, &out, &universe, chapters),
        Command::Fidelity {
            doc,
            out,
            mode,
            iterations,
            reconstructor,
            deltas,
            seeds,
            adapter,
            knobs,
        } => commands::fidelity(
            &doc,
            &out,
            &mode,
            iterations,
            &reconstructor,
            &deltas,
            seeds,
            &adapter,
            &knobs,
        ),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(commands::classify_exit(&error))
        }
    }
}
