//! Pipeline stages. Every stage reads its inputs from and writes its outputs to the
//! output directory, so a full pipeline run and a manual run of the stages produce
//! the same files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rulesmith_core::generator::{
    self, estimate_cost, CandidateRuleSet, ChatBackend, EchoBackend, GenerateError, LiveBackend, RecordingBackend,
    ReplayBackend, Usage,
};
use rulesmith_core::ranker::{read_ranked, write_ranked};
use rulesmith_core::reasoner::write_answers;
use rulesmith_core::rule::parse_rule_for;
use rulesmith_core::sampler::write_samples;
use rulesmith_core::{
    abstract_to_samples, answer, evaluate, parse_rule, rank_rules, rule_set_report, sample_closed_paths,
    CompletionQuery, EvalReport, KnowledgeGraph, RelationId, Rule, ScoredRule, Split,
};

use crate::config::{Backend, PipelineConfig};

pub const SAMPLES_DIR: &str = "samples";
pub const CANDIDATES_DIR: &str = "candidates";
pub const RANKED_DIR: &str = "ranked";
pub const INGEST_REPORT: &str = "ingest_report.txt";
pub const GENERATE_REPORT: &str = "generate_report.txt";
pub const RULE_REPORT: &str = "rule_report.txt";
pub const ANSWERS: &str = "answers.tsv";
pub const EVAL_REPORT: &str = "eval_report.txt";
pub const EVAL_PER_RELATION: &str = "eval_per_relation.tsv";

/// The API key was missing or rejected. The binary maps this to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("authentication failed{}: {message}", relation.as_ref().map(|r| format!(" for relation {r}")).unwrap_or_default())]
pub struct AuthFailure {
    /// `None` when the key was missing before any query was sent.
    pub relation: Option<String>,
    pub message: String,
}

/// Percent-encodes every byte outside `[A-Za-z0-9_.-]` so any relation name maps to
/// a distinct, portable file name.
pub fn file_stem(relation: &str) -> String {
    let mut s = String::with_capacity(relation.len());
    for b in relation.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-') {
            s.push(b as char);
        } else {
            write!(s, "%{b:02X}").unwrap();
        }
    }
    s
}

fn rel_file(cfg: &PipelineConfig, dir: &str, kg: &KnowledgeGraph, r: RelationId, ext: &str) -> PathBuf {
    cfg.out_dir
        .join(dir)
        .join(format!("{}.{ext}", file_stem(kg.relation_name(r))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// Loads the graph, or `None` with a warning when it holds no facts at all.
pub fn load(cfg: &PipelineConfig) -> Result<Option<KnowledgeGraph>> {
    let kg = KnowledgeGraph::load_dir(&cfg.data_dir)
        .with_context(|| format!("loading knowledge graph from {}", cfg.data_dir.display()))?;
    if kg.report().forward_triples() == 0 {
        warn!("knowledge graph in {} is empty; nothing to do", cfg.data_dir.display());
        return Ok(None);
    }
    Ok(Some(kg))
}

pub fn ingest(cfg: &PipelineConfig, kg: &KnowledgeGraph) -> Result<String> {
    let text = kg.report().to_kv();
    write_text(&cfg.out_dir.join(INGEST_REPORT), &text)?;
    Ok(text)
}

/// One sample file per relation, inverse relations included.
pub fn sample(cfg: &PipelineConfig, kg: &KnowledgeGraph) -> Result<usize> {
    let scfg = cfg.sampler();
    let mut total = 0;
    for r in kg.relations() {
        let samples = abstract_to_samples(&sample_closed_paths(kg, r, &scfg));
        let path = rel_file(cfg, SAMPLES_DIR, kg, r, "tsv");
        let mut w = create(&path)?;
        write_samples(kg, &samples, &mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing samples for relation {}", kg.relation_name(r)))?;
        info!("{}: {} samples", kg.relation_name(r), samples.len());
        total += samples.len();
    }
    Ok(total)
}

fn read_samples(cfg: &PipelineConfig, kg: &KnowledgeGraph, r: RelationId) -> Result<Vec<Rule>> {
    let path = rel_file(cfg, SAMPLES_DIR, kg, r, "tsv");
    let name = kg.relation_name(r);
    let file = File::open(&path).with_context(|| format!("relation {name}: missing samples {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let text = line.split('\t').next().unwrap_or_default();
        let rule = parse_rule_for(text, kg.vocab(), cfg.max_len, r)
            .with_context(|| format!("relation {name}: {}:{}", path.display(), i + 1))?;
        out.push(rule);
    }
    Ok(out)
}

#[derive(Debug, Default)]
pub struct GenerateSummary {
    pub usage: Usage,
    pub cost: f64,
    pub rules: usize,
    pub rejected: usize,
    pub queries: usize,
    pub failed_queries: usize,
    pub empty_queries: usize,
}

impl GenerateSummary {
    pub fn to_kv(&self, cfg: &PipelineConfig) -> String {
        format!(
            "model={}\nrequests={}\ninput_tokens={}\noutput_tokens={}\ninput_rate_per_1k={}\noutput_rate_per_1k={}\nestimated_cost_usd={:.6}\nqueries={}\nfailed_queries={}\nempty_queries={}\nrules={}\nrejected={}\n",
            cfg.model,
            self.usage.requests,
            self.usage.input_tokens,
            self.usage.output_tokens,
            cfg.input_rate,
            cfg.output_rate,
            self.cost,
            self.queries,
            self.failed_queries,
            self.empty_queries,
            self.rules,
            self.rejected
        )
    }
}

fn write_candidates(cfg: &PipelineConfig, kg: &KnowledgeGraph, r: RelationId, set: &CandidateRuleSet) -> Result<()> {
    let mut w = create(&rel_file(cfg, CANDIDATES_DIR, kg, r, "rules"))?;
    set.write_rules(kg, &mut w).and_then(|_| w.flush())?;
    let mut w = create(&rel_file(cfg, CANDIDATES_DIR, kg, r, "rejected"))?;
    set.write_rejections(&mut w).and_then(|_| w.flush())?;
    Ok(())
}

fn generate_with(cfg: &PipelineConfig, kg: &KnowledgeGraph, backend: &dyn ChatBackend) -> Result<GenerateSummary> {
    let gcfg = cfg.generation();
    let mut summary = GenerateSummary::default();
    let mut failed = Vec::new();
    for r in kg.relations() {
        let samples = read_samples(cfg, kg, r)?;
        let name = kg.relation_name(r);
        let set = match generator::generate(kg, r, &samples, &gcfg, backend) {
            Ok(set) => set,
            Err(GenerateError::Auth(message)) => {
                return Err(AuthFailure {
                    relation: Some(name.to_string()),
                    message,
                }
                .into())
            }
            Err(GenerateError::Transport {
                message,
                failed: n,
                total,
                partial,
            }) => {
                warn!("relation {name}: {n} of {total} queries failed ({message}); writing partial candidates");
                failed.push(format!("{name} ({n}/{total} queries: {message})"));
                *partial
            }
        };
        write_candidates(cfg, kg, r, &set)?;
        summary.usage.add(set.usage);
        summary.rules += set.rules.len();
        summary.rejected += set.rejected.len();
        summary.queries += set.queries;
        summary.failed_queries += set.failed_queries;
        summary.empty_queries += set.empty_queries;
    }
    summary.cost = estimate_cost(&summary.usage, &gcfg.rates);
    write_text(&cfg.out_dir.join(GENERATE_REPORT), &summary.to_kv(cfg))?;
    if !failed.is_empty() {
        bail!("generation failed for relation(s): {}", failed.join(", "));
    }
    Ok(summary)
}

pub fn generate(cfg: &PipelineConfig, kg: &KnowledgeGraph) -> Result<GenerateSummary> {
    let gcfg = cfg.generation();
    let backend: Box<dyn ChatBackend> = match cfg.backend {
        Backend::Echo => Box::new(EchoBackend),
        Backend::Replay => {
            let Some(path) = &cfg.replay_file else {
                bail!("backend=replay needs replay_file");
            };
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Box::new(
                ReplayBackend::from_reader(BufReader::new(file))
                    .with_context(|| format!("reading {}", path.display()))?,
            )
        }
        Backend::Live => match LiveBackend::from_env(&gcfg) {
            Ok(b) => Box::new(b),
            Err(generator::BackendError::Auth(message)) => {
                return Err(AuthFailure {
                    relation: None,
                    message,
                }
                .into())
            }
            Err(e) => return Err(e.into()),
        },
    };
    match &cfg.record_file {
        None => generate_with(cfg, kg, backend.as_ref()),
        Some(path) => {
            let recorder = RecordingBackend::new(Dyn(backend));
            let result = generate_with(cfg, kg, &recorder);
            let mut w = create(path)?;
            recorder.write_fixture(&mut w).and_then(|_| w.flush())?;
            result
        }
    }
}

/// Lets a boxed backend sit inside the generic recorder.
struct Dyn(Box<dyn ChatBackend>);

impl ChatBackend for Dyn {
    fn complete(&self, prompt: &str) -> Result<generator::Completion, generator::BackendError> {
        self.0.complete(prompt)
    }
}

fn read_candidates(cfg: &PipelineConfig, kg: &KnowledgeGraph, r: RelationId) -> Result<Option<Vec<Rule>>> {
    let path = rel_file(cfg, CANDIDATES_DIR, kg, r, "rules");
    if !path.exists() {
        return Ok(None);
    }
    let name = kg.relation_name(r);
    let file = File::open(&path).with_context(|| format!("relation {name}: opening {}", path.display()))?;
    let mut rules = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rule = parse_rule(&line, kg.vocab(), cfg.max_len)
            .with_context(|| format!("relation {name}: {}:{}", path.display(), i + 1))?;
        if rule.head != r {
            bail!(
                "relation {name}: {}:{}: rule head does not match the file",
                path.display(),
                i + 1
            );
        }
        rules.push(rule);
    }
    Ok(Some(rules))
}

pub fn rank(cfg: &PipelineConfig, kg: &KnowledgeGraph) -> Result<String> {
    let mut all = Vec::new();
    for r in kg.relations() {
        let Some(candidates) = read_candidates(cfg, kg, r)? else {
            warn!("relation {}: no candidate file", kg.relation_name(r));
            continue;
        };
        let ranked = rank_rules(kg, &candidates, cfg.measure);
        let mut w = create(&rel_file(cfg, RANKED_DIR, kg, r, "tsv"))?;
        write_ranked(kg, &ranked, &mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing ranked rules for relation {}", kg.relation_name(r)))?;
        all.extend(ranked);
    }
    let report = rule_set_report(kg, &all);
    if report.empty {
        warn!("no candidate rule has support in the training graph");
    }
    let text = format!("measure={}\n{}", cfg.measure, report.to_kv());
    write_text(&cfg.out_dir.join(RULE_REPORT), &text)?;
    Ok(text)
}

/// Scored rules keyed by head relation. Relations without a ranked file are absent.
pub fn read_rules(cfg: &PipelineConfig, kg: &KnowledgeGraph) -> Result<HashMap<RelationId, Vec<ScoredRule>>> {
    let mut out = HashMap::new();
    for r in kg.relations() {
        let path = rel_file(cfg, RANKED_DIR, kg, r, "tsv");
        if !path.exists() {
            continue;
        }
        let name = kg.relation_name(r);
        let file = File::open(&path).with_context(|| format!("relation {name}: opening {}", path.display()))?;
        let rules = read_ranked(kg, BufReader::new(file), cfg.max_len, cfg.measure)
            .with_context(|| format!("relation {name}: {}", path.display()))?;
        if let Some(bad) = rules.iter().find(|s| s.rule.head != r) {
            bail!(
                "relation {name}: rule {} in {} has another head",
                bad.rule.display(kg.vocab()),
                path.display()
            );
        }
        out.insert(r, rules);
    }
    Ok(out)
}

/// `subject<TAB>relation` lines; a relation named `inv_r` asks for heads of `r`.
fn read_queries(kg: &KnowledgeGraph, path: &Path) -> Result<Vec<CompletionQuery>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(s), Some(r), None) = (cols.next(), cols.next(), cols.next()) else {
            bail!("{}:{}: expected subject<TAB>relation", path.display(), i + 1);
        };
        let subject = kg
            .entity(s.trim())
            .with_context(|| format!("{}:{}: unknown entity {s:?}", path.display(), i + 1))?;
        let relation = kg
            .relation(r.trim())
            .with_context(|| format!("{}:{}: unknown relation {r:?}", path.display(), i + 1))?;
        out.push(CompletionQuery::tail(subject, relation));
    }
    Ok(out)
}

/// Answers the queries file, or by default the head and tail queries of every
/// test fact.
pub fn reason(cfg: &PipelineConfig, kg: &KnowledgeGraph) -> Result<usize> {
    let rules = read_rules(cfg, kg)?;
    let mut queries = match &cfg.queries_file {
        Some(path) => read_queries(kg, path)?,
        None => kg
            .split(Split::Test)
            .iter()
            .flat_map(|t| {
                [
                    CompletionQuery::tail(t.head, t.relation),
                    CompletionQuery::head(t.relation, t.tail),
                ]
            })
            .collect(),
    };
    if cfg.queries_file.is_none() {
        queries.sort_by_key(|q| (q.relation, q.subject));
        queries.dedup();
    }
    let results: Vec<_> = {
        use rayon::prelude::*;
        queries
            .par_iter()
            .map(|q| {
                answer(
                    kg,
                    rules.get(&q.relation).map_or(&[][..], Vec::as_slice),
                    *q,
                    Some(cfg.top_n),
                )
            })
            .collect()
    };
    let mut w = create(&cfg.out_dir.join(ANSWERS))?;
    for (q, res) in queries.iter().zip(&results) {
        write_answers(kg, *q, res, &mut w)?;
    }
    w.flush()?;
    Ok(queries.len())
}

pub fn eval(cfg: &PipelineConfig, kg: &KnowledgeGraph) -> Result<EvalReport> {
    let rules = read_rules(cfg, kg)?;
    for r in kg.relations() {
        if !rules.contains_key(&r) && kg.split(Split::Test).iter().any(|t| t.relation.base() == r.base()) {
            warn!(
                "relation {}: no ranked rule file; its queries count as unanswered",
                kg.relation_name(r)
            );
        }
    }
    let report = evaluate(kg, &rules, &cfg.eval());
    write_text(&cfg.out_dir.join(EVAL_REPORT), &report.to_kv())?;
    write_text(&cfg.out_dir.join(EVAL_PER_RELATION), &report.per_relation_tsv())?;
    Ok(report)
}
