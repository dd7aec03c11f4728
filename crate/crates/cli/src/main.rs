use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rulesmith::{AuthFailure, PipelineConfig, Stage};

#[derive(Parser)]
#[command(
    name = "rulesmith",
    version,
    about = "Mine, rank and apply logical rules over a knowledge graph"
)]
struct Cli {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key (repeatable)
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Directory holding train.txt, valid.txt and test.txt
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Load the graph and report entity, relation and triple counts
    Ingest,
    /// Sample closed paths and write rule samples per relation
    Sample,
    /// Ask the chat backend for candidate rules
    Generate,
    /// Score candidate rules against the training graph
    Rank,
    /// Answer completion queries with the ranked rules
    Reason,
    /// Filtered MRR and Hits@N over the test split
    Eval,
    /// ingest, sample, generate, rank and eval in one run
    Pipeline,
}

fn overrides(cli: &Cli) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for s in &cli.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got {s:?}"))?;
        out.push((k.to_string(), v.to_string()));
    }
    if let Some(d) = &cli.data {
        out.push(("data_dir".into(), d.display().to_string()));
    }
    if let Some(o) = &cli.out {
        out.push(("out_dir".into(), o.display().to_string()));
    }
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stage = match cli.command {
        Command::Ingest => Stage::Ingest,
        Command::Sample => Stage::Sample,
        Command::Generate => Stage::Generate,
        Command::Rank => Stage::Rank,
        Command::Reason => Stage::Reason,
        Command::Eval => Stage::Eval,
        Command::Pipeline => Stage::Pipeline,
    };
    let result = overrides(&cli)
        .and_then(|o| PipelineConfig::resolve(cli.config.as_deref(), &o))
        .and_then(|cfg| rulesmith::run(stage, &cfg));
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<AuthFailure>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
