//! Rule generation: prompt construction from rule samples, multi-query batching, chat
//! backends and collection of candidate rules from model responses.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, BufRead, Write};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use log::{info, warn};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::kg::{KnowledgeGraph, RelationId};
use crate::rule::{extract_rule_lines, parse_rule_for, verbalize, Rule};
use crate::sampler::stream_rng;

/// Environment variable holding the bearer token for the live backend.
pub const API_KEY_ENV: &str = "RULESMITH_API_KEY";

const SAMPLES_MARKER: &str = "Now we have the following rules:";

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    /// Samples per query.
    pub k: usize,
    /// Number of queries.
    pub d: usize,
    pub max_len: usize,
    pub model: String,
    pub endpoint: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub rng_seed: u64,
    pub parallelism: usize,
    pub min_request_interval: Duration,
    pub backoff_base: Duration,
    pub rates: CostRates,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            k: 50,
            d: 10,
            max_len: 3,
            model: "gpt-3.5-turbo-0613".to_string(),
            endpoint: "https://api.openai.com/v1".to_string(),
            temperature: 0.0,
            max_retries: 3,
            rng_seed: 0,
            parallelism: 1,
            min_request_interval: Duration::ZERO,
            backoff_base: Duration::from_millis(500),
            rates: CostRates::default(),
        }
    }
}

/// Prices per 1000 tokens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRates {
    pub input_per_1k: f64,
    pub output_per_1k: f64,
}

impl Default for CostRates {
    fn default() -> Self {
        CostRates {
            input_per_1k: 0.001,
            output_per_1k: 0.002,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Usage {
    pub requests: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl Usage {
    pub fn add(&mut self, other: Usage) {
        self.requests += other.requests;
        self.input_tokens += other.input_tokens;
        self.output_tokens += other.output_tokens;
    }
}

pub fn estimate_cost(usage: &Usage, rates: &CostRates) -> f64 {
    usage.input_tokens as f64 / 1000.0 * rates.input_per_1k + usage.output_tokens as f64 / 1000.0 * rates.output_per_1k
}

/// Rough token count for backends that do not report usage (4 bytes per token).
pub fn approx_tokens(text: &str) -> u64 {
    (text.len() as u64).div_ceil(4)
}

/// Hex SHA-256 of a prompt; the key of replay fixtures.
pub fn query_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

fn relation_list(kg: &KnowledgeGraph) -> String {
    let mut names: Vec<String> = kg.relations().map(|r| verbalize(kg.relation_name(r))).collect();
    names.sort();
    names.join(", ")
}

/// Fills the rule-generation template for `target` with verbalized samples.
pub fn build_prompt(kg: &KnowledgeGraph, target: RelationId, samples: &[&Rule]) -> String {
    let vocab = kg.vocab();
    let mut block = String::new();
    for s in samples {
        block.push_str(&s.verbalized(vocab).to_string());
        block.push('\n');
    }
    format!(
        "Logical rules define the relationship between two entities: X and Y. Each rule is written in the form of a logical implication, which states that if the conditions on the right-hand side (rule body) are satisfied, then the statement on the left-hand side (rule head) holds true.\n\n\
{SAMPLES_MARKER}\n\
{block}\n\
Based on the above rules, please generate as many of the most important rules for the rule head: \"{head}(X,Y)\" as possible. Please only select predicates form: {relations}. Return the rules only without any explanations.",
        head = verbalize(kg.relation_name(target)),
        relations = relation_list(kg),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBatch {
    pub target: RelationId,
    pub queries: Vec<String>,
    /// Indexes into the sample pool used by each query.
    pub sample_ids: Vec<Vec<usize>>,
}

/// Splits the sample pool into `d` queries of `min(k, pool)` samples each, drawn
/// without replacement within a query and independently across queries.
pub fn build_batch(
    kg: &KnowledgeGraph,
    target: RelationId,
    pool: &[Rule],
    k: usize,
    d: usize,
    rng_seed: u64,
) -> PromptBatch {
    let mut batch = PromptBatch {
        target,
        queries: Vec::new(),
        sample_ids: Vec::new(),
    };
    if pool.is_empty() {
        return batch;
    }
    let mut rng = stream_rng(rng_seed, (1 << 32) | target.0 as u64);
    let take = k.min(pool.len());
    for _ in 0..d {
        let mut ids = index::sample(&mut rng, pool.len(), take).into_vec();
        ids.sort_unstable();
        let chosen: Vec<&Rule> = ids.iter().map(|&i| &pool[i]).collect();
        batch.queries.push(build_prompt(kg, target, &chosen));
        batch.sample_ids.push(ids);
    }
    batch
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub content: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("no recorded response for query {0}")]
    ReplayMiss(String),
    #[error("unexpected response: {0}")]
    Protocol(String),
}

/// A chat-completion provider. Implementations must tolerate concurrent calls.
pub trait ChatBackend: Sync {
    fn complete(&self, prompt: &str) -> Result<Completion, BackendError>;
}

/// Offline backend that answers with the rule samples embedded in the prompt.
#[derive(Debug, Default, Clone, Copy)]
pub struct EchoBackend;

impl ChatBackend for EchoBackend {
    fn complete(&self, prompt: &str) -> Result<Completion, BackendError> {
        let content = prompt
            .lines()
            .skip_while(|l| *l != SAMPLES_MARKER)
            .skip(1)
            .take_while(|l| !l.trim().is_empty())
            .collect::<Vec<_>>()
            .join("\n");
        Ok(Completion {
            input_tokens: approx_tokens(prompt),
            output_tokens: approx_tokens(&content),
            content,
        })
    }
}

/// Offline backend serving recorded responses keyed by [`query_hash`].
#[derive(Debug, Default, Clone)]
pub struct ReplayBackend {
    responses: HashMap<String, String>,
}

impl ReplayBackend {
    /// Reads `hash<TAB>base64(response)` lines.
    pub fn from_reader<R: BufRead>(reader: R) -> io::Result<Self> {
        let mut responses = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || io::Error::new(io::ErrorKind::InvalidData, format!("fixture line {}", i + 1));
            let (hash, payload) = line.split_once('\t').ok_or_else(bad)?;
            let bytes = B64.decode(payload.trim()).map_err(|_| bad())?;
            let text = String::from_utf8(bytes).map_err(|_| bad())?;
            responses.insert(hash.to_string(), text);
        }
        Ok(ReplayBackend { responses })
    }

    pub fn insert(&mut self, prompt: &str, response: &str) {
        self.responses.insert(query_hash(prompt), response.to_string());
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, prompt: &str) -> Result<Completion, BackendError> {
        let hash = query_hash(prompt);
        let content = self
            .responses
            .get(&hash)
            .cloned()
            .ok_or(BackendError::ReplayMiss(hash))?;
        Ok(Completion {
            input_tokens: approx_tokens(prompt),
            output_tokens: approx_tokens(&content),
            content,
        })
    }
}

/// Wraps a backend and keeps every successful exchange as a replay fixture line.
pub struct RecordingBackend<B> {
    inner: B,
    records: Mutex<BTreeMap<String, String>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend {
            inner,
            records: Mutex::new(BTreeMap::new()),
        }
    }

    /// Fixture lines sorted by hash.
    pub fn write_fixture<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (hash, text) in self.records.lock().unwrap().iter() {
            writeln!(w, "{hash}\t{}", B64.encode(text.as_bytes()))?;
        }
        Ok(())
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, prompt: &str) -> Result<Completion, BackendError> {
        let c = self.inner.complete(prompt)?;
        self.records
            .lock()
            .unwrap()
            .insert(query_hash(prompt), c.content.clone());
        Ok(c)
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct ChatUsage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

/// OpenAI-compatible `POST {endpoint}/chat/completions` client with retry and
/// request pacing.
pub struct LiveBackend {
    client: reqwest::blocking::Client,
    url: String,
    api_key: String,
    model: String,
    temperature: f64,
    max_retries: u32,
    backoff_base: Duration,
    min_interval: Duration,
    last_request: Mutex<Option<Instant>>,
}

impl LiveBackend {
    /// Reads the API key from [`API_KEY_ENV`].
    pub fn from_env(cfg: &GenerationConfig) -> Result<Self, BackendError> {
        let key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::Auth(format!("{API_KEY_ENV} is not set")))?;
        Self::new(cfg, key)
    }

    pub fn new(cfg: &GenerationConfig, api_key: String) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(LiveBackend {
            client,
            url: format!("{}/chat/completions", cfg.endpoint.trim_end_matches('/')),
            api_key,
            model: cfg.model.clone(),
            temperature: cfg.temperature,
            max_retries: cfg.max_retries,
            backoff_base: cfg.backoff_base,
            min_interval: cfg.min_request_interval,
            last_request: Mutex::new(None),
        })
    }

    fn pace(&self) {
        let mut last = self.last_request.lock().unwrap();
        if let Some(t) = *last {
            let elapsed = t.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn attempt(&self, prompt: &str) -> Result<Completion, (bool, BackendError)> {
        self.pace();
        let body = ChatRequest {
            model: &self.model,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: self.temperature,
        };
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| (true, BackendError::Transport(e.to_string())))?;
        let status = resp.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err((false, BackendError::Auth(format!("HTTP {status}"))));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err((true, BackendError::Transport(format!("HTTP {status}"))));
        }
        if !status.is_success() {
            return Err((false, BackendError::Protocol(format!("HTTP {status}"))));
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| (false, BackendError::Protocol(e.to_string())))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| {
                (
                    false,
                    BackendError::Protocol("missing choices[0].message.content".into()),
                )
            })?;
        let (input_tokens, output_tokens) = match parsed.usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => (approx_tokens(prompt), approx_tokens(&content)),
        };
        Ok(Completion {
            content,
            input_tokens,
            output_tokens,
        })
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&self, prompt: &str) -> Result<Completion, BackendError> {
        let mut attempt = 0;
        loop {
            match self.attempt(prompt) {
                Ok(c) => return Ok(c),
                Err((true, e)) if attempt < self.max_retries => {
                    let delay = self.backoff_base * 2u32.saturating_pow(attempt);
                    warn!("{e}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err((_, e)) => return Err(e),
            }
        }
    }
}

/// Rules proposed for one target, plus everything that was rejected.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateRuleSet {
    pub target: Option<RelationId>,
    /// Deduplicated, sorted by canonical text.
    pub rules: Vec<Rule>,
    /// `(line, error class)`, deduplicated and sorted.
    pub rejected: Vec<(String, String)>,
    pub usage: Usage,
    pub queries: usize,
    pub failed_queries: usize,
    pub empty_queries: usize,
}

impl CandidateRuleSet {
    pub fn is_partial(&self) -> bool {
        self.failed_queries > 0
    }

    pub fn write_rules<W: Write>(&self, kg: &KnowledgeGraph, mut w: W) -> io::Result<()> {
        for r in &self.rules {
            writeln!(w, "{}", r.display(kg.vocab()))?;
        }
        Ok(())
    }

    /// `error class<TAB>line`.
    pub fn write_rejections<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (line, kind) in &self.rejected {
            writeln!(w, "{kind}\t{line}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("{failed} of {total} queries failed: {message}")]
    Transport {
        message: String,
        failed: usize,
        total: usize,
        partial: Box<CandidateRuleSet>,
    },
}

/// Parses a response into accepted rules and rejections.
pub fn collect_rules(
    kg: &KnowledgeGraph,
    target: RelationId,
    max_len: usize,
    response: &str,
) -> (Vec<Rule>, Vec<(String, String)>) {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for line in extract_rule_lines(response) {
        match parse_rule_for(&line, kg.vocab(), max_len, target) {
            Ok(rule) => ok.push(rule),
            Err(e) => bad.push((line, e.kind().to_string())),
        }
    }
    (ok, bad)
}

/// Runs the `d` queries for `target` against `backend` and merges the parsed rules.
pub fn generate(
    kg: &KnowledgeGraph,
    target: RelationId,
    samples: &[Rule],
    cfg: &GenerationConfig,
    backend: &dyn ChatBackend,
) -> Result<CandidateRuleSet, GenerateError> {
    let batch = build_batch(kg, target, samples, cfg.k, cfg.d, cfg.rng_seed);
    let run =
        || -> Vec<Result<Completion, BackendError>> { batch.queries.par_iter().map(|q| backend.complete(q)).collect() };
    let results = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };

    let mut rules = BTreeSet::new();
    let mut rejected = BTreeSet::new();
    let mut set = CandidateRuleSet {
        target: Some(target),
        queries: batch.queries.len(),
        ..Default::default()
    };
    let mut last_error = None;
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(c) => {
                set.usage.add(Usage {
                    requests: 1,
                    input_tokens: c.input_tokens,
                    output_tokens: c.output_tokens,
                });
                let (ok, bad) = collect_rules(kg, target, cfg.max_len, &c.content);
                if ok.is_empty() {
                    info!("query {i} for {} returned no parseable rules", kg.relation_name(target));
                    set.empty_queries += 1;
                }
                rules.extend(ok);
                rejected.extend(bad);
            }
            Err(BackendError::Auth(m)) => return Err(GenerateError::Auth(m)),
            Err(e) => {
                warn!("query {i} for {} failed: {e}", kg.relation_name(target));
                set.failed_queries += 1;
                last_error = Some(e.to_string());
            }
        }
    }
    let vocab = kg.vocab();
    let mut rules: Vec<Rule> = rules.into_iter().collect();
    rules.sort_by_cached_key(|r| r.display(vocab).to_string());
    set.rules = rules;
    set.rejected = rejected.into_iter().collect();
    match last_error {
        Some(message) => Err(GenerateError::Transport {
            message,
            failed: set.failed_queries,
            total: set.queries,
            partial: Box::new(set),
        }),
        None => Ok(set),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{KgBuilder, Split};
    use crate::rule::print_rule;

    fn family() -> KnowledgeGraph {
        let mut b = KgBuilder::new();
        for (h, r, t) in [
            ("ann", "wife", "bob"),
            ("bob", "husband", "ann"),
            ("bob", "father", "cid"),
            ("ann", "mother", "cid"),
            ("cid", "brother", "dan"),
        ] {
            b.add(Split::Train, h, r, t).unwrap();
        }
        b.build().unwrap()
    }

    fn rule(kg: &KnowledgeGraph, head: &str, body: &[&str]) -> Rule {
        Rule::new(
            kg.relation(head).unwrap(),
            body.iter().map(|b| kg.relation(b).unwrap()).collect(),
        )
    }

    #[test]
    fn prompt_follows_template() {
        let kg = family();
        let husband = kg.relation("husband").unwrap();
        let s = rule(&kg, "husband", &["inv_wife"]);
        let prompt = build_prompt(&kg, husband, &[&s]);
        assert!(prompt.starts_with("Logical rules define the relationship between two entities: X and Y."));
        assert!(prompt.contains("Now we have the following rules:\nhusband(X,Y) <- inv_wife(X,Y)\n\n"));
        assert!(prompt.contains("for the rule head: \"husband(X,Y)\" as possible."));
        assert!(prompt.ends_with("Return the rules only without any explanations."));
        let listed = prompt
            .split("Please only select predicates form: ")
            .nth(1)
            .unwrap()
            .split(". Return")
            .next()
            .unwrap();
        let mut expected: Vec<String> = kg.relations().map(|r| kg.relation_name(r).to_string()).collect();
        expected.sort();
        assert_eq!(listed.split(", ").collect::<Vec<_>>(), expected);
        assert_eq!(prompt.matches("<-").count(), 1);
    }

    #[test]
    fn batch_shapes() {
        let kg = family();
        let husband = kg.relation("husband").unwrap();
        let pool: Vec<Rule> = ["inv_wife", "father", "mother", "brother"]
            .iter()
            .map(|b| rule(&kg, "husband", &[b]))
            .collect();
        let b = build_batch(&kg, husband, &pool, 2, 5, 1);
        assert_eq!(b.queries.len(), 5);
        for ids in &b.sample_ids {
            assert_eq!(ids.len(), 2);
            assert!(ids[0] < ids[1]);
        }
        let big = build_batch(&kg, husband, &pool, 50, 2, 1);
        assert!(big.sample_ids.iter().all(|ids| ids.len() == 4));
        assert_eq!(b, build_batch(&kg, husband, &pool, 2, 5, 1));
        assert!(build_batch(&kg, husband, &[], 2, 5, 1).queries.is_empty());
    }

    struct Canned(&'static str);

    impl ChatBackend for Canned {
        fn complete(&self, _: &str) -> Result<Completion, BackendError> {
            Ok(Completion {
                content: self.0.to_string(),
                input_tokens: 10,
                output_tokens: 5,
            })
        }
    }

    #[test]
    fn figure_response_is_parsed_and_hallucination_kept() {
        let kg = family();
        let husband = kg.relation("husband").unwrap();
        let pool = vec![rule(&kg, "husband", &["inv_wife"])];
        let backend = Canned(
            "husband(X,Y) <- inv_wife(X,Y)\nhusband(X,Y) <- husband(X,Z_1) & brother(Z_1, Y)\nhusband(X,Y) <- spouse(X,Y)\nwife(X,Y) <- inv_husband(X,Y)",
        );
        let cfg = GenerationConfig {
            d: 3,
            ..Default::default()
        };
        let set = generate(&kg, husband, &pool, &cfg, &backend).unwrap();
        let texts: Vec<_> = set.rules.iter().map(|r| print_rule(r, kg.vocab())).collect();
        assert_eq!(
            texts,
            [
                "husband(X,Y) <- husband(X,Z_1) & brother(Z_1,Y)",
                "husband(X,Y) <- inv_wife(X,Y)"
            ]
        );
        let kinds: Vec<_> = set.rejected.iter().map(|(_, k)| k.as_str()).collect();
        assert_eq!(kinds, ["VocabularyError", "HeadMismatchError"]);
        assert_eq!(
            set.usage,
            Usage {
                requests: 3,
                input_tokens: 30,
                output_tokens: 15
            }
        );
        assert!(set.rules.iter().all(|r| r.head == husband));
    }

    #[test]
    fn echo_returns_samples() {
        let kg = family();
        let husband = kg.relation("husband").unwrap();
        let pool = vec![
            rule(&kg, "husband", &["inv_wife"]),
            rule(&kg, "husband", &["father", "inv_mother"]),
        ];
        let set = generate(&kg, husband, &pool, &GenerationConfig::default(), &EchoBackend).unwrap();
        let mut expected = pool.clone();
        expected.sort_by_key(|r| print_rule(r, kg.vocab()));
        assert_eq!(set.rules, expected);
        assert!(set.rejected.is_empty());
    }

    #[test]
    fn replay_round_trip() {
        let kg = family();
        let husband = kg.relation("husband").unwrap();
        let pool = vec![rule(&kg, "husband", &["inv_wife"])];
        let cfg = GenerationConfig {
            d: 2,
            ..Default::default()
        };
        let rec = RecordingBackend::new(EchoBackend);
        let first = generate(&kg, husband, &pool, &cfg, &rec).unwrap();
        let mut fixture = Vec::new();
        rec.write_fixture(&mut fixture).unwrap();
        let replay = ReplayBackend::from_reader(fixture.as_slice()).unwrap();
        assert_eq!(replay.len(), 1);
        let second = generate(&kg, husband, &pool, &cfg, &replay).unwrap();
        assert_eq!(first, second);

        let other = GenerationConfig {
            k: 1,
            d: 1,
            rng_seed: 99,
            ..Default::default()
        };
        let pool2 = vec![rule(&kg, "husband", &["father"])];
        let err = generate(&kg, husband, &pool2, &other, &ReplayBackend::default()).unwrap_err();
        assert!(matches!(
            err,
            GenerateError::Transport {
                failed: 1,
                total: 1,
                ..
            }
        ));
    }

    #[test]
    fn cost() {
        let r = CostRates::default();
        assert_eq!(
            estimate_cost(
                &Usage {
                    requests: 1,
                    input_tokens: 1_000_000,
                    output_tokens: 0
                },
                &r
            ),
            1.0
        );
        assert_eq!(estimate_cost(&Usage::default(), &r), 0.0);
    }
}
