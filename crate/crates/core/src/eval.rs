//! Filtered head/tail prediction evaluation and rule-set statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use log::warn;
use rayon::prelude::*;

use crate::kg::{EntityId, KnowledgeGraph, RelationId, Split};
use crate::ranker::{RankedRule, ScoredRule};
use crate::reasoner::{answer, CompletionQuery};

/// Rank given to a true answer that no rule reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnrankedPolicy {
    /// Midpoint of the unscored part of the filtered pool.
    #[default]
    Midpoint,
    /// Last position of the filtered pool.
    WorstCase,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub hits_at: Vec<usize>,
    pub unranked: UnrankedPolicy,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            hits_at: vec![1, 10],
            unranked: UnrankedPolicy::Midpoint,
        }
    }
}

/// Running MRR / Hits@N over a set of query ranks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub queries: usize,
    pub reciprocal_sum: f64,
    pub hits: BTreeMap<usize, usize>,
}

impl Metrics {
    fn new(hits_at: &[usize]) -> Self {
        Metrics {
            hits: hits_at.iter().map(|&n| (n, 0)).collect(),
            ..Default::default()
        }
    }

    fn add(&mut self, rank: f64) {
        self.queries += 1;
        self.reciprocal_sum += 1.0 / rank;
        for (&n, count) in self.hits.iter_mut() {
            if rank <= n as f64 {
                *count += 1;
            }
        }
    }

    pub fn mrr(&self) -> f64 {
        if self.queries == 0 {
            0.0
        } else {
            self.reciprocal_sum / self.queries as f64
        }
    }

    pub fn hits_at(&self, n: usize) -> f64 {
        match (self.hits.get(&n), self.queries) {
            (Some(&c), q) if q > 0 => c as f64 / q as f64,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Tail,
    Head,
}

/// The filtered rank of one masked test answer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryOutcome {
    pub relation: RelationId,
    pub direction: Direction,
    pub rank: f64,
    pub unanswered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub all: Metrics,
    pub tail: Metrics,
    pub head: Metrics,
    /// Keyed by forward relation name.
    pub per_relation: BTreeMap<String, Metrics>,
    pub unanswered: usize,
    pub unranked: UnrankedPolicy,
}

impl EvalReport {
    pub fn mrr(&self) -> f64 {
        self.all.mrr()
    }

    pub fn hits_at(&self, n: usize) -> f64 {
        self.all.hits_at(n)
    }

    pub fn queries(&self) -> usize {
        self.all.queries
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let policy = match self.unranked {
            UnrankedPolicy::Midpoint => "midpoint",
            UnrankedPolicy::WorstCase => "worst",
        };
        writeln!(s, "protocol=filtered").unwrap();
        writeln!(s, "ties=average").unwrap();
        writeln!(s, "unranked_rank={policy}").unwrap();
        writeln!(s, "queries={}", self.all.queries).unwrap();
        writeln!(s, "unanswered={}", self.unanswered).unwrap();
        for (prefix, m) in [("", &self.all), ("tail_", &self.tail), ("head_", &self.head)] {
            writeln!(s, "{prefix}mrr={:.6}", m.mrr()).unwrap();
            for &n in m.hits.keys() {
                writeln!(s, "{prefix}hits@{n}={:.6}", m.hits_at(n)).unwrap();
            }
        }
        s
    }

    /// `relation<TAB>queries<TAB>mrr<TAB>hits@N...` with a header line.
    pub fn per_relation_tsv(&self) -> String {
        let mut s = String::from("relation\tqueries\tmrr");
        for n in self.all.hits.keys() {
            write!(s, "\thits@{n}").unwrap();
        }
        s.push('\n');
        for (name, m) in &self.per_relation {
            write!(s, "{name}\t{}\t{:.6}", m.queries, m.mrr()).unwrap();
            for &n in m.hits.keys() {
                write!(s, "\t{:.6}", m.hits_at(n)).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

/// Known answers of `(subject, relation, ·)` over train, valid and test.
pub struct FilterIndex {
    known: HashMap<(EntityId, RelationId), HashSet<EntityId>>,
}

impl FilterIndex {
    pub fn new(kg: &KnowledgeGraph) -> Self {
        let mut known: HashMap<(EntityId, RelationId), HashSet<EntityId>> = HashMap::new();
        for split in [Split::Train, Split::Valid, Split::Test] {
            for t in kg.split(split) {
                known.entry((t.head, t.relation)).or_default().insert(t.tail);
                known.entry((t.tail, t.relation.inverse())).or_default().insert(t.head);
            }
        }
        FilterIndex { known }
    }

    pub fn known(&self, subject: EntityId, relation: RelationId) -> Option<&HashSet<EntityId>> {
        self.known.get(&(subject, relation))
    }
}

/// Filtered rank of `truth` for one query.
pub fn filtered_rank(
    kg: &KnowledgeGraph,
    filter: &FilterIndex,
    rules: Option<&[ScoredRule]>,
    query: CompletionQuery,
    truth: EntityId,
    policy: UnrankedPolicy,
) -> f64 {
    let known = filter.known(query.subject, query.relation);
    let is_filtered = |e: EntityId| e != truth && known.is_some_and(|k| k.contains(&e));
    let filtered_out = known.map_or(0, |k| k.len() - usize::from(k.contains(&truth)));
    let pool = (kg.num_entities() - filtered_out) as f64;
    let Some(rules) = rules else {
        return pool;
    };
    let result = answer(kg, rules, query, None);
    let candidates: Vec<f64> = result
        .ranked
        .iter()
        .filter(|(e, _)| !is_filtered(*e))
        .map(|&(_, s)| s)
        .collect();
    match result.scores.get(&truth) {
        Some(&target) => {
            let greater = candidates.iter().filter(|&&s| s > target).count() as f64;
            let tied = candidates.iter().filter(|&&s| s == target).count() as f64 - 1.0;
            greater + 1.0 + tied / 2.0
        }
        None => match policy {
            UnrankedPolicy::Midpoint => (pool + 1.0 + candidates.len() as f64) / 2.0,
            UnrankedPolicy::WorstCase => pool,
        },
    }
}

/// Masks the head and the tail of every test fact and ranks the true entity among
/// the rule-derived candidates, filtering all other known answers.
pub fn evaluate(
    kg: &KnowledgeGraph,
    rules_by_relation: &HashMap<RelationId, Vec<ScoredRule>>,
    cfg: &EvalConfig,
) -> EvalReport {
    let filter = FilterIndex::new(kg);
    let test = kg.split(Split::Test);
    if test.is_empty() {
        warn!("empty test split");
    }
    let outcomes: Vec<QueryOutcome> = test
        .par_iter()
        .flat_map_iter(|t| {
            [
                (CompletionQuery::tail(t.head, t.relation), t.tail, Direction::Tail),
                (CompletionQuery::head(t.relation, t.tail), t.head, Direction::Head),
            ]
            .into_iter()
            .map(|(q, truth, direction)| {
                let rules = rules_by_relation.get(&q.relation).map(Vec::as_slice);
                QueryOutcome {
                    relation: t.relation,
                    direction,
                    rank: filtered_rank(kg, &filter, rules, q, truth, cfg.unranked),
                    unanswered: rules.is_none(),
                }
            })
            .collect::<Vec<_>>()
        })
        .collect();
    summarize(kg, &outcomes, cfg)
}

pub fn summarize(kg: &KnowledgeGraph, outcomes: &[QueryOutcome], cfg: &EvalConfig) -> EvalReport {
    let mut report = EvalReport {
        all: Metrics::new(&cfg.hits_at),
        tail: Metrics::new(&cfg.hits_at),
        head: Metrics::new(&cfg.hits_at),
        per_relation: BTreeMap::new(),
        unanswered: 0,
        unranked: cfg.unranked,
    };
    for o in outcomes {
        report.all.add(o.rank);
        match o.direction {
            Direction::Tail => report.tail.add(o.rank),
            Direction::Head => report.head.add(o.rank),
        }
        report
            .per_relation
            .entry(kg.relation_name(o.relation.base()).to_string())
            .or_insert_with(|| Metrics::new(&cfg.hits_at))
            .add(o.rank);
        if o.unanswered {
            report.unanswered += 1;
        }
    }
    if report.unanswered > 0 {
        warn!("{} queries had no rule set", report.unanswered);
    }
    report
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleSetStats {
    pub rules: usize,
    pub mean_support: f64,
    pub mean_coverage: f64,
    pub mean_confidence: f64,
    pub mean_pca: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleSetReport {
    pub overall: RuleSetStats,
    /// Keyed by head relation name.
    pub per_relation: BTreeMap<String, RuleSetStats>,
    pub empty: bool,
}

impl RuleSetReport {
    pub fn to_kv(&self) -> String {
        let o = &self.overall;
        let mut s = format!(
            "rules={}\nrelations_with_rules={}\nmean_support={:.6}\nmean_coverage={:.6}\nmean_confidence={:.6}\nmean_pca_confidence={:.6}\n",
            o.rules,
            self.per_relation.len(),
            o.mean_support,
            o.mean_coverage,
            o.mean_confidence,
            o.mean_pca
        );
        if self.empty {
            s.push_str("warning=empty rule set\n");
        }
        s
    }
}

fn stats<'a>(rules: impl Iterator<Item = &'a RankedRule>) -> RuleSetStats {
    let mut st = RuleSetStats::default();
    for r in rules {
        st.rules += 1;
        st.mean_support += r.quality.support as f64;
        st.mean_coverage += r.quality.coverage().value();
        st.mean_confidence += r.quality.confidence().value();
        st.mean_pca += r.quality.pca_confidence().value();
    }
    if st.rules > 0 {
        let n = st.rules as f64;
        st.mean_support /= n;
        st.mean_coverage /= n;
        st.mean_confidence /= n;
        st.mean_pca /= n;
    }
    st
}

/// Mean quality measures over a rule set, overall and per head relation.
pub fn rule_set_report(kg: &KnowledgeGraph, rules: &[RankedRule]) -> RuleSetReport {
    let mut by_head: BTreeMap<String, Vec<&RankedRule>> = BTreeMap::new();
    for r in rules {
        by_head
            .entry(kg.relation_name(r.rule.head).to_string())
            .or_default()
            .push(r);
    }
    if rules.is_empty() {
        warn!("rule set report over an empty rule set");
    }
    RuleSetReport {
        overall: stats(rules.iter()),
        per_relation: by_head.into_iter().map(|(k, v)| (k, stats(v.into_iter()))).collect(),
        empty: rules.is_empty(),
    }
}
