//! Rule application for completion queries.
//!
//! The score of a candidate `y` for `(x, r, ?)` is the sum, over every rule for `r`
//! and every path instantiating that rule's body from `x` to `y`, of the rule's score.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use log::{debug, warn};

use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::ranker::ScoredRule;

/// Cap on per-endpoint path counts.
pub const GROUNDING_CAP: u64 = u32::MAX as u64;

/// Tail prediction `(subject, relation, ?)`. Head prediction is expressed through
/// the inverse relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompletionQuery {
    pub subject: EntityId,
    pub relation: RelationId,
}

impl CompletionQuery {
    pub fn tail(subject: EntityId, relation: RelationId) -> Self {
        CompletionQuery { subject, relation }
    }

    /// `(?, relation, object)` rewritten as `(object, inv_relation, ?)`.
    pub fn head(relation: RelationId, object: EntityId) -> Self {
        CompletionQuery {
            subject: object,
            relation: relation.inverse(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryResult {
    pub scores: BTreeMap<EntityId, f64>,
    /// Score descending, then entity id ascending.
    pub ranked: Vec<(EntityId, f64)>,
}

/// Number of paths instantiating `body` from `source`, per endpoint.
pub fn path_counts(kg: &KnowledgeGraph, body: &[RelationId], source: EntityId) -> HashMap<EntityId, u64> {
    let mut current: HashMap<EntityId, u64> = HashMap::from([(source, 1)]);
    let mut saturated = false;
    for &r in body {
        let mut next: HashMap<EntityId, u64> = HashMap::new();
        for (&e, &c) in &current {
            for &t in kg.successors(e, r) {
                let slot = next.entry(t).or_default();
                let sum = slot.saturating_add(c);
                if sum > GROUNDING_CAP {
                    saturated = true;
                }
                *slot = sum.min(GROUNDING_CAP);
            }
        }
        if next.is_empty() {
            return next;
        }
        current = next;
    }
    if saturated {
        warn!("grounding count saturated at {GROUNDING_CAP}");
    }
    current
}

/// Distinct intermediate-entity assignments instantiating `body` from `x` to `y`.
pub fn grounding_count(kg: &KnowledgeGraph, body: &[RelationId], x: EntityId, y: EntityId) -> u64 {
    path_counts(kg, body, x).get(&y).copied().unwrap_or(0)
}

/// Scores every entity reachable by some rule body and ranks them. `top_n` truncates
/// the ranked list only; `scores` always holds every positive score.
pub fn answer(kg: &KnowledgeGraph, rules: &[ScoredRule], query: CompletionQuery, top_n: Option<usize>) -> QueryResult {
    if rules.is_empty() {
        debug!("no rules for relation {}", kg.relation_name(query.relation));
    }
    let mut scores: BTreeMap<EntityId, f64> = BTreeMap::new();
    for sr in rules {
        debug_assert_eq!(sr.rule.head, query.relation);
        if sr.score <= 0.0 {
            continue;
        }
        let mut counts: Vec<(EntityId, u64)> = path_counts(kg, &sr.rule.body, query.subject).into_iter().collect();
        counts.sort_unstable();
        for (e, c) in counts {
            *scores.entry(e).or_default() += sr.score * c as f64;
        }
    }
    scores.retain(|_, s| *s > 0.0);
    let mut ranked: Vec<(EntityId, f64)> = scores.iter().map(|(&e, &s)| (e, s)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    if let Some(n) = top_n {
        ranked.truncate(n);
    }
    QueryResult { scores, ranked }
}

/// `subject<TAB>relation<TAB>answer<TAB>score<TAB>rank` lines for one query.
pub fn write_answers<W: Write>(
    kg: &KnowledgeGraph,
    query: CompletionQuery,
    result: &QueryResult,
    mut w: W,
) -> io::Result<()> {
    for (i, (e, s)) in result.ranked.iter().enumerate() {
        writeln!(
            w,
            "{}\t{}\t{}\t{:.6}\t{}",
            kg.entity_name(query.subject),
            kg.relation_name(query.relation),
            kg.entity_name(*e),
            s,
            i + 1
        )?;
    }
    Ok(())
}
