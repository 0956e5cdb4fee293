mod analyze;
mod bundle;
mod ingest;
mod label;
mod run;
mod train_eval;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use revsent::client::ModelEndpoint;
use revsent::config::RunConfig;

use crate::run::RunContext;

/// Sentiment analytics for bilingual (English/Bangla) app-store reviews.
#[derive(Debug, Parser)]
#[command(name = "revsent", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parent directory for run directories.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run directory name under --out; defaults to `<UTC timestamp>-seed<seed>`.
    /// An existing directory is reused, which is how stages are chained.
    #[arg(long, global = true)]
    run_name: Option<String>,
    /// Fail on rejected input records instead of skipping them.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Args, Default)]
struct SourceArgs {
    /// Line-delimited model label files.
    #[arg(long = "labels-file", conflicts_with = "endpoint")]
    labels_files: Vec<PathBuf>,
    /// Base URL of the inference sidecar.
    #[arg(long)]
    endpoint: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and clean a review dump.
    Ingest {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Split, attach model labels and build the consensus training set.
    Label {
        /// Defaults to corpus.jsonl in the run directory.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        source: SourceArgs,
        /// Model id whose labels drive consensus.
        #[arg(long)]
        model_id: Option<String>,
    },
    /// Fit the four classifiers and evaluate them on the held-out set.
    TrainEval {
        /// Defaults to consensus.jsonl in the run directory.
        #[arg(long)]
        train: Option<PathBuf>,
        /// Defaults to test.jsonl in the run directory.
        #[arg(long)]
        test: Option<PathBuf>,
        /// External predictions to compare against.
        #[command(flatten)]
        source: SourceArgs,
    },
    /// App ranking, aspect profiles and monthly trends.
    Analyze {
        /// Defaults to consensus.jsonl in the run directory.
        #[arg(long)]
        consensus: Option<PathBuf>,
        #[arg(long, conflicts_with = "endpoint")]
        absa_file: Option<PathBuf>,
        #[arg(long)]
        endpoint: Option<String>,
        /// Ingest stats for corpus-wide average ratings; defaults to
        /// stats.json in the run directory when present.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Bundle every stage report of a run into one document.
    Report {
        /// Run directory; defaults to the one named by --out/--run-name.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// All stages in order within one run directory.
    Run {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, conflicts_with = "endpoint")]
        absa_file: Option<PathBuf>,
        #[arg(long)]
        model_id: Option<String>,
    },
}

fn set_endpoint(config: &mut RunConfig, url: Option<String>) {
    if let Some(base_url) = url {
        let endpoint = config.endpoint.take().unwrap_or_default();
        config.endpoint = Some(ModelEndpoint { base_url, ..endpoint });
        config.labels_files.clear();
        config.absa_file = None;
    }
}

fn apply_sources(config: &mut RunConfig, source: SourceArgs) {
    if !source.labels_files.is_empty() {
        config.labels_files = source.labels_files;
        config.endpoint = None;
    }
    set_endpoint(config, source.endpoint);
}

fn apply_absa(config: &mut RunConfig, absa_file: Option<PathBuf>) {
    if absa_file.is_some() {
        config.absa_file = absa_file;
        config.endpoint = None;
    }
}

fn effective_config(global: &GlobalArgs, command: &mut Command) -> revsent::Result<RunConfig> {
    let mut config = match &global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    if let Some(out) = &global.out {
        config.out_dir = out.clone();
    }
    config.strict |= global.strict;
    match command {
        Command::Ingest { input } | Command::Run { input, .. } if input.is_some() => {
            config.input = input.clone();
        }
        _ => {}
    }
    match command {
        Command::Label { source, model_id, .. } => {
            apply_sources(&mut config, std::mem::take(source));
            if model_id.is_some() {
                config.consensus_model = model_id.take();
            }
        }
        Command::TrainEval { source, .. } => apply_sources(&mut config, std::mem::take(source)),
        Command::Analyze { absa_file, endpoint, .. } => {
            apply_absa(&mut config, absa_file.take());
            set_endpoint(&mut config, endpoint.take());
        }
        Command::Run {
            source,
            absa_file,
            model_id,
            ..
        } => {
            apply_sources(&mut config, std::mem::take(source));
            apply_absa(&mut config, absa_file.take());
            if model_id.is_some() {
                config.consensus_model = model_id.take();
            }
        }
        Command::Ingest { .. } | Command::Report { .. } => {}
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: Cli) -> revsent::Result<()> {
    let Cli { global, mut command } = cli;
    let config = effective_config(&global, &mut command)?;
    if let Command::Report { from: Some(dir) } = &command {
        return bundle::run(&RunContext::existing(config, dir.clone())?);
    }
    let ctx = RunContext::open(config, global.run_name.as_deref())?;
    match command {
        Command::Ingest { .. } => ingest::run(&ctx),
        Command::Label { corpus, .. } => label::run(&ctx, corpus),
        Command::TrainEval { train, test, .. } => train_eval::run(&ctx, train, test),
        Command::Analyze { consensus, stats, .. } => analyze::run(&ctx, consensus, stats),
        Command::Report { .. } => bundle::run(&ctx),
        Command::Run { .. } => {
            ingest::run(&ctx)?;
            label::run(&ctx, None)?;
            train_eval::run(&ctx, None, None)?;
            analyze::run(&ctx, None, None)?;
            bundle::run(&ctx)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
