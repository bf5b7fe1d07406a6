//! Command-line interface: ask a single question live, evaluate stored
//! predictions, compute query statistics, or run a full benchmark.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use kbqa::agent::{run_agent, AgentOutcome, RunEvent};
use kbqa::bench::{
    evaluate_predictions, load_dataset, run_benchmark, DatasetSource, GoldStore, Prediction,
    ReplayEnv, Report, RunMode,
};
use kbqa::config::{AppConfig, ProviderKind};
use kbqa::eval::ScoringMode;
use kbqa::kb::{render_observation, KnowledgeBase, MemoryKb, WikidataClient};
use kbqa::llm::{ChatProvider, LlmGateway, OpenAiProvider, RecordingProvider, ReplayProvider};
use kbqa::stats::aggregate_stats;

#[derive(Parser)]
#[command(name = "kbqa", version, about = "Question answering over Wikidata: agent, evaluator, and query statistics")]
struct Cli {
    /// Path to a TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the agent live on one question and print the full trace.
    Ask {
        question: String,
        /// Record the policy/prune transcript to this file.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Write the full run trace (question, config, steps, resets,
        /// outcome) as one JSON document.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Score stored predictions against gold results.
    Evaluate {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// JSON file with `{id, sparql}` or `{id, table}` records.
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = "id")]
        mode: ScoringMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-query complexity statistics over a dataset.
    Stats {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Print only the JSON summary (the default prints both the aligned
        /// text row and the JSON).
        #[arg(long)]
        json: bool,
    },
    /// Run the agent over a dataset and report macro EM/F1.
    RunBenchmark {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Replay transcripts from this directory (one `<id>.jsonl` each).
        #[arg(long, conflicts_with = "live")]
        replay: Option<PathBuf>,
        /// Canned knowledge-base fixture for replay mode.
        #[arg(long, requires = "replay")]
        kb_fixture: Option<PathBuf>,
        /// Run against the live services.
        #[arg(long)]
        live: bool,
        #[arg(long, default_value = "id")]
        mode: ScoringMode,
        #[arg(long)]
        parallelism: Option<usize>,
        /// Checkpoint file; interrupted runs resume from it.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Write the full report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset file.
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset flavor: spinach-dev, spinach-test, qald, wwq, custom.
    #[arg(long, default_value = "custom")]
    source: DatasetSource,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => AppConfig::load(path).map_err(|e| anyhow!(e))?,
        None => AppConfig::default(),
    };
    match cli.command {
        Command::Ask { question, record, trace_out } => {
            ask(&config, &question, record.as_deref(), trace_out.as_deref())
        }
        Command::Evaluate { dataset, predictions, mode, out } => {
            evaluate(&config, &dataset, &predictions, mode, out.as_deref())
        }
        Command::Stats { dataset, json } => stats(&dataset, json),
        Command::RunBenchmark {
            dataset,
            replay,
            kb_fixture,
            live,
            mode,
            parallelism,
            checkpoint,
            out,
        } => benchmark(
            &config,
            &dataset,
            replay.as_deref(),
            kb_fixture.as_deref(),
            live,
            mode,
            parallelism,
            checkpoint.as_deref(),
            out.as_deref(),
        ),
    }
}

fn live_client(config: &AppConfig) -> Result<WikidataClient> {
    let kb_config = config.kb.clone().with_env_overrides();
    WikidataClient::new(kb_config).context("building the Wikidata client")
}

fn live_provider(config: &AppConfig) -> Result<Arc<dyn ChatProvider>> {
    match config.llm.provider {
        ProviderKind::Openai => Ok(Arc::new(OpenAiProvider::new(
            config.llm.endpoint.clone(),
            config.llm.model.clone(),
            &config.llm.api_key_env,
            config.llm.timeout(),
            config.llm.max_retries,
        )?)),
        ProviderKind::Replay => {
            let dir = config
                .llm
                .transcript_dir
                .as_ref()
                .ok_or_else(|| anyhow!("replay provider needs llm.transcript_dir"))?;
            Ok(Arc::new(ReplayProvider::from_file(&dir.join("transcript.jsonl"))?))
        }
    }
}

fn ask(
    config: &AppConfig,
    question: &str,
    record: Option<&Path>,
    trace_out: Option<&Path>,
) -> Result<()> {
    let client = live_client(config)?;
    let provider = live_provider(config)?;
    let provider: Arc<dyn ChatProvider> = match record {
        Some(path) => {
            struct Shared(Arc<dyn ChatProvider>);
            impl ChatProvider for Shared {
                fn complete(
                    &self,
                    prompt: &str,
                    sampling: &kbqa::llm::SamplingParams,
                ) -> std::result::Result<String, kbqa::llm::ProviderError> {
                    self.0.complete(prompt, sampling)
                }
            }
            Arc::new(RecordingProvider::create(Shared(provider), path)?)
        }
        None => provider,
    };
    let gateway = LlmGateway::new(provider, config.llm.budget());
    let outcome = run_agent(question, &config.agent, &client, &gateway)?;
    print_trace(&outcome);
    if let Some(path) = trace_out {
        let trace = kbqa::agent::RunTrace { config: config.agent.clone(), outcome };
        std::fs::write(path, serde_json::to_string_pretty(&trace)?)
            .with_context(|| path.display().to_string())?;
        println!("trace written to {}", path.display());
    }
    Ok(())
}

fn print_trace(outcome: &AgentOutcome) {
    for event in &outcome.journal {
        match event {
            RunEvent::Step(step) => {
                println!("Thought: {}", step.thought);
                println!("Action: {}", step.action);
                if !step.observation.is_empty() {
                    println!("Observation: {}", step.observation);
                }
                println!();
            }
            RunEvent::Reset { to_index, reason } => {
                println!("[state reset to step {to_index}: {reason:?}]\n");
            }
        }
    }
    println!("stop reason: {:?}", outcome.stop_reason);
    println!("actions taken: {}", outcome.actions_taken);
    match (&outcome.final_sparql, &outcome.final_result) {
        (Some(query), Some(result)) => {
            println!("\nfinal SPARQL:\n{query}\n");
            println!(
                "final results:\n{}",
                render_observation(&kbqa::kb::Observation::Sparql(result.clone()))
            );
        }
        _ => println!("\nno final query produced"),
    }
}

fn evaluate(
    config: &AppConfig,
    dataset: &DatasetArgs,
    predictions_path: &Path,
    mode: ScoringMode,
    out: Option<&Path>,
) -> Result<()> {
    let examples = load_dataset(&dataset.dataset, dataset.source)?;
    let text = std::fs::read_to_string(predictions_path)
        .with_context(|| predictions_path.display().to_string())?;
    let predictions: Vec<Prediction> = match serde_json::from_str(&text) {
        Ok(p) => p,
        Err(_) => text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()
            .context("parsing predictions (expected a JSON array or JSON lines)")?,
    };
    let client = live_client(config)?;
    let gold = GoldStore::new(config.bench.gold_cache_dir.clone(), mode)?;
    let report = evaluate_predictions(&examples, &predictions, &client, &client, &gold, mode)?;
    emit_report(&report, out)
}

fn stats(dataset: &DatasetArgs, json_only: bool) -> Result<()> {
    let examples = load_dataset(&dataset.dataset, dataset.source)?;
    let summary = aggregate_stats(examples.iter().map(|e| e.gold_sparql.as_str()));
    if !json_only {
        println!("{}", summary.text_table());
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn benchmark(
    config: &AppConfig,
    dataset: &DatasetArgs,
    replay: Option<&Path>,
    kb_fixture: Option<&Path>,
    live: bool,
    mode: ScoringMode,
    parallelism: Option<usize>,
    checkpoint: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let examples = load_dataset(&dataset.dataset, dataset.source)?;
    let parallelism = parallelism.unwrap_or(config.bench.parallelism);
    let gold = GoldStore::new(config.bench.gold_cache_dir.clone(), mode)?;

    let report = match (replay, live) {
        (Some(dir), false) => {
            let kb = match kb_fixture {
                Some(path) => MemoryKb::load(path)?,
                None => MemoryKb::default(),
            };
            let env = ReplayEnv { kb, transcript_dir: dir.to_path_buf() };
            run_benchmark(
                &examples,
                &env,
                &config.agent,
                &gold,
                RunMode::Replay,
                mode,
                parallelism,
                checkpoint,
            )?
        }
        (None, true) => {
            let client = live_client(config)?;
            let provider = live_provider(config)?;
            struct LiveEnv {
                client: WikidataClient,
                provider: Arc<dyn ChatProvider>,
                budget: Option<u32>,
            }
            impl kbqa::bench::BenchEnv for LiveEnv {
                fn kb(&self) -> &dyn KnowledgeBase {
                    &self.client
                }
                fn labels(&self) -> &dyn kbqa::eval::LabelLookup {
                    &self.client
                }
                fn provider(
                    &self,
                    _example: &kbqa::bench::DatasetExample,
                ) -> std::result::Result<Arc<dyn ChatProvider>, kbqa::bench::BenchError>
                {
                    Ok(self.provider.clone())
                }
                fn llm_budget(&self) -> Option<u32> {
                    self.budget
                }
            }
            let env = LiveEnv { client, provider, budget: config.llm.budget() };
            run_benchmark(
                &examples,
                &env,
                &config.agent,
                &gold,
                RunMode::Live,
                mode,
                parallelism,
                checkpoint,
            )?
        }
        _ => bail!("choose exactly one of --replay DIR or --live"),
    };
    emit_report(&report, out)
}

fn emit_report(report: &Report, out: Option<&Path>) -> Result<()> {
    println!("{}", report.text_summary());
    let json = serde_json::to_string_pretty(report)?;
    match out {
        Some(path) => {
            std::fs::write(path, &json).with_context(|| path.display().to_string())?;
            println!("report written to {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}
