//! The `rulesmith` pipeline: ingest, sample, generate, rank, reason and eval stages
//! over a directory of `train.txt`/`valid.txt`/`test.txt` triples.

pub mod config;
pub mod manifest;
pub mod stages;

use anyhow::{Context, Result};
use log::warn;

pub use config::{Backend, PipelineConfig};
pub use stages::AuthFailure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Sample,
    Generate,
    Rank,
    Reason,
    Eval,
    Pipeline,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Sample => "sample",
            Stage::Generate => "generate",
            Stage::Rank => "rank",
            Stage::Reason => "reason",
            Stage::Eval => "eval",
            Stage::Pipeline => "pipeline",
        }
    }
}

/// Runs `stage` inside a thread pool bounded by `cfg.parallelism`, then rewrites the
/// manifest. Returns the text printed to stdout.
pub fn run(stage: Stage, cfg: &PipelineConfig) -> Result<String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .context("building thread pool")?;
    pool.install(|| run_in_pool(stage, cfg))
}

fn run_in_pool(stage: Stage, cfg: &PipelineConfig) -> Result<String> {
    let Some(kg) = stages::load(cfg)? else {
        return Ok(String::new());
    };
    let mut out = String::new();
    let result = (|| -> Result<()> {
        if matches!(stage, Stage::Ingest | Stage::Pipeline) {
            out.push_str(&stages::ingest(cfg, &kg)?);
        }
        if matches!(stage, Stage::Sample | Stage::Pipeline) {
            let n = stages::sample(cfg, &kg)?;
            out.push_str(&format!("samples={n}\n"));
        }
        if matches!(stage, Stage::Generate | Stage::Pipeline) {
            out.push_str(&stages::generate(cfg, &kg)?.to_kv(cfg));
        }
        if matches!(stage, Stage::Rank | Stage::Pipeline) {
            out.push_str(&stages::rank(cfg, &kg)?);
        }
        if matches!(stage, Stage::Reason) {
            let n = stages::reason(cfg, &kg)?;
            out.push_str(&format!("queries_answered={n}\n"));
        }
        if matches!(stage, Stage::Eval | Stage::Pipeline) {
            if kg.split(rulesmith_core::Split::Test).is_empty() {
                warn!("test split is empty; skipping evaluation");
            } else {
                out.push_str(&stages::eval(cfg, &kg)?.to_kv());
            }
        }
        Ok(())
    })();
    // partial outputs are still recorded
    if cfg.out_dir.exists() {
        manifest::write(cfg, stage.as_str())?;
    }
    result.map(|_| out)
}
