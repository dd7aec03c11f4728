//! Rule mining over knowledge graphs: closed-path sampling, LLM-driven rule
//! generation, grounded rule ranking and rule-based knowledge-graph completion.

pub mod eval;
pub mod generator;
pub mod kg;
pub mod ranker;
pub mod reasoner;
pub mod rule;
pub mod sampler;

pub use eval::{evaluate, rule_set_report, EvalConfig, EvalReport, UnrankedPolicy};
pub use generator::{generate, CandidateRuleSet, ChatBackend, GenerationConfig};
pub use kg::{EntityId, KgBuilder, KgError, KnowledgeGraph, RelationId, Split, Triple};
pub use ranker::{rank_rules, score_rule, Measure, RankedRule, RuleQuality, ScoredRule};
pub use reasoner::{answer, CompletionQuery, QueryResult};
pub use rule::{parse_rule, print_rule, verbalize, Rule, RuleError};
pub use sampler::{abstract_to_samples, sample_closed_paths, ClosedPath, RuleSample, SamplerConfig};
