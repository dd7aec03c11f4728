//! Pipeline configuration: defaults, `key=value` files and command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use rulesmith_core::eval::{EvalConfig, UnrankedPolicy};
use rulesmith_core::generator::{CostRates, GenerationConfig};
use rulesmith_core::{Measure, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Echo,
    Replay,
    Live,
}

impl Backend {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "echo" => Ok(Backend::Echo),
            "replay" => Ok(Backend::Replay),
            "live" => Ok(Backend::Live),
            other => bail!("unknown backend {other:?} (expected echo, replay or live)"),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Backend::Echo => "echo",
            Backend::Replay => "replay",
            Backend::Live => "live",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub max_len: usize,
    pub k: usize,
    pub d: usize,
    pub seed_count: usize,
    pub path_cap: usize,
    pub rng_seed: u64,
    pub backend: Backend,
    pub replay_file: Option<PathBuf>,
    pub record_file: Option<PathBuf>,
    pub model: String,
    pub endpoint: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub min_request_interval_ms: u64,
    pub measure: Measure,
    pub top_n: usize,
    pub parallelism: usize,
    pub hits_at: Vec<usize>,
    pub unranked: UnrankedPolicy,
    pub input_rate: f64,
    pub output_rate: f64,
    pub queries_file: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let gen = GenerationConfig::default();
        PipelineConfig {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            max_len: 3,
            k: 50,
            d: 10,
            seed_count: 100,
            path_cap: 100,
            rng_seed: 0,
            backend: Backend::Echo,
            replay_file: None,
            record_file: None,
            model: gen.model,
            endpoint: gen.endpoint,
            temperature: 0.0,
            max_retries: 3,
            min_request_interval_ms: 0,
            measure: Measure::Pca,
            top_n: 10,
            parallelism: 1,
            hits_at: vec![1, 10],
            unranked: UnrankedPolicy::Midpoint,
            input_rate: gen.rates.input_per_1k,
            output_rate: gen.rates.output_per_1k,
            queries_file: None,
        }
    }
}

fn positive(key: &str, v: &str) -> Result<usize> {
    let n: usize = v
        .parse()
        .with_context(|| format!("{key}: expected a positive integer, got {v:?}"))?;
    if n == 0 {
        bail!("{key} must be at least 1");
    }
    Ok(n)
}

fn optional_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl PipelineConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "data_dir" | "data" => self.data_dir = PathBuf::from(v),
            "out_dir" | "out" => self.out_dir = PathBuf::from(v),
            "max_len" => self.max_len = positive(key, v)?,
            "k" => self.k = positive(key, v)?,
            "d" => self.d = positive(key, v)?,
            "seed_count" => self.seed_count = positive(key, v)?,
            "path_cap" => self.path_cap = positive(key, v)?,
            "rng_seed" | "seed" => self.rng_seed = v.parse().with_context(|| format!("rng_seed: {v:?}"))?,
            "backend" => self.backend = Backend::parse(v)?,
            "replay_file" => self.replay_file = optional_path(v),
            "record_file" => self.record_file = optional_path(v),
            "model" => self.model = v.to_string(),
            "endpoint" => self.endpoint = v.to_string(),
            "temperature" => self.temperature = v.parse().with_context(|| format!("temperature: {v:?}"))?,
            "max_retries" => self.max_retries = v.parse().with_context(|| format!("max_retries: {v:?}"))?,
            "min_request_interval_ms" => {
                self.min_request_interval_ms = v.parse().with_context(|| format!("min_request_interval_ms: {v:?}"))?
            }
            "measure" => self.measure = v.parse().map_err(|e: String| anyhow!(e))?,
            "top_n" => self.top_n = positive(key, v)?,
            "parallelism" => self.parallelism = positive(key, v)?,
            "hits_at" => {
                self.hits_at = v
                    .split(',')
                    .map(|n| positive(key, n.trim()))
                    .collect::<Result<Vec<_>>>()?;
                self.hits_at.sort_unstable();
                self.hits_at.dedup();
            }
            "unranked" => {
                self.unranked = match v {
                    "midpoint" => UnrankedPolicy::Midpoint,
                    "worst" => UnrankedPolicy::WorstCase,
                    other => bail!("unranked: expected midpoint or worst, got {other:?}"),
                }
            }
            "input_rate" => self.input_rate = v.parse().with_context(|| format!("input_rate: {v:?}"))?,
            "output_rate" => self.output_rate = v.parse().with_context(|| format!("output_rate: {v:?}"))?,
            "queries_file" | "queries" => self.queries_file = optional_path(v),
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))?;
            self.set(k, v).with_context(|| format!("config line {}", i + 1))?;
        }
        Ok(())
    }

    /// Defaults, then the optional file, then the overrides.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            max_len: self.max_len,
            seed_count: self.seed_count,
            rng_seed: self.rng_seed,
            path_cap: self.path_cap,
        }
    }

    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            k: self.k,
            d: self.d,
            max_len: self.max_len,
            model: self.model.clone(),
            endpoint: self.endpoint.clone(),
            temperature: self.temperature,
            max_retries: self.max_retries,
            rng_seed: self.rng_seed,
            parallelism: self.parallelism,
            min_request_interval: Duration::from_millis(self.min_request_interval_ms),
            rates: CostRates {
                input_per_1k: self.input_rate,
                output_per_1k: self.output_rate,
            },
            ..Default::default()
        }
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            hits_at: self.hits_at.clone(),
            unranked: self.unranked,
        }
    }

    /// Settings that determine outputs, as sorted `key=value` pairs. The output
    /// directory is left out so runs into different directories compare equal.
    pub fn to_kv(&self) -> BTreeMap<&'static str, String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        BTreeMap::from([
            ("data_dir", self.data_dir.display().to_string()),
            ("max_len", self.max_len.to_string()),
            ("k", self.k.to_string()),
            ("d", self.d.to_string()),
            ("seed_count", self.seed_count.to_string()),
            ("path_cap", self.path_cap.to_string()),
            ("rng_seed", self.rng_seed.to_string()),
            ("backend", self.backend.as_str().to_string()),
            ("replay_file", path(&self.replay_file)),
            ("model", self.model.clone()),
            ("endpoint", self.endpoint.clone()),
            ("temperature", self.temperature.to_string()),
            ("max_retries", self.max_retries.to_string()),
            ("measure", self.measure.to_string()),
            ("top_n", self.top_n.to_string()),
            (
                "hits_at",
                self.hits_at.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
            ),
            (
                "unranked",
                match self.unranked {
                    UnrankedPolicy::Midpoint => "midpoint",
                    UnrankedPolicy::WorstCase => "worst",
                }
                .to_string(),
            ),
            ("input_rate", self.input_rate.to_string()),
            ("output_rate", self.output_rate.to_string()),
            ("queries_file", path(&self.queries_file)),
        ])
    }
}
