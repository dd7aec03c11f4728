//! Grounds rules against the train facts and scores them by support, coverage,
//! confidence and PCA confidence.
//!
//! All counts use pair semantics: a body is "satisfied" once per distinct `(x, y)`
//! endpoint pair, regardless of how many intermediate assignments connect them.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::rule::{parse_rule, Rule, RuleError};

/// An exact non-negative ratio; a zero denominator reads as 0.
#[derive(Debug, Clone, Copy)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        Fraction { num, den }
    }

    pub fn value(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }

    fn normalized(self) -> (u64, u64) {
        if self.den == 0 || self.num == 0 {
            (0, 1)
        } else {
            (self.num, self.den)
        }
    }
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = self.normalized();
        let (c, d) = other.normalized();
        a as u128 * d as u128 == c as u128 * b as u128
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = self.normalized();
        let (c, d) = other.normalized();
        (a as u128 * d as u128).cmp(&(c as u128 * b as u128))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Raw grounding counts of a rule; the measures are derived from these.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RuleQuality {
    /// Body pairs that are also head facts.
    pub support: u64,
    /// Distinct head pairs.
    pub head_pairs: u64,
    /// Distinct body pairs.
    pub body_pairs: u64,
    /// Body pairs whose source has at least one head fact.
    pub pca_pairs: u64,
}

impl RuleQuality {
    pub fn coverage(&self) -> Fraction {
        Fraction::new(self.support, self.head_pairs)
    }

    pub fn confidence(&self) -> Fraction {
        Fraction::new(self.support, self.body_pairs)
    }

    pub fn pca_confidence(&self) -> Fraction {
        Fraction::new(self.support, self.pca_pairs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Measure {
    None,
    Coverage,
    Confidence,
    #[default]
    Pca,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::None, Measure::Coverage, Measure::Confidence, Measure::Pca];

    pub fn score(self, q: &RuleQuality) -> f64 {
        match self {
            Measure::None => 1.0,
            Measure::Coverage => q.coverage().value(),
            Measure::Confidence => q.confidence().value(),
            Measure::Pca => q.pca_confidence().value(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::None => "none",
            Measure::Coverage => "coverage",
            Measure::Confidence => "confidence",
            Measure::Pca => "pca",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Measure::None),
            "coverage" => Ok(Measure::Coverage),
            "confidence" => Ok(Measure::Confidence),
            "pca" | "pca_confidence" => Ok(Measure::Pca),
            other => Err(format!("unknown ranking measure {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedRule {
    pub rule: Rule,
    pub quality: RuleQuality,
    pub score: f64,
}

/// Scratch space reused across sources: a visited stamp per entity.
struct Frontier {
    stamp: Vec<u32>,
    epoch: u32,
    current: Vec<EntityId>,
    next: Vec<EntityId>,
}

impl Frontier {
    fn new(n: usize) -> Self {
        Frontier {
            stamp: vec![0; n],
            epoch: 0,
            current: Vec::new(),
            next: Vec::new(),
        }
    }

    fn bump(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    /// Distinct endpoints reachable from `source` along `body`. Result left in `current`.
    fn reach(&mut self, kg: &KnowledgeGraph, source: EntityId, body: &[RelationId]) {
        self.current.clear();
        self.current.push(source);
        for &r in body {
            self.bump();
            self.next.clear();
            for &e in &self.current {
                for &t in kg.successors(e, r) {
                    let s = &mut self.stamp[t.index()];
                    if *s != self.epoch {
                        *s = self.epoch;
                        self.next.push(t);
                    }
                }
            }
            std::mem::swap(&mut self.current, &mut self.next);
            if self.current.is_empty() {
                break;
            }
        }
    }
}

fn reversed_inverse(body: &[RelationId]) -> Vec<RelationId> {
    body.iter().rev().map(|r| r.inverse()).collect()
}

/// Calls `f(x, y)` once for every distinct body pair. Composition starts from
/// whichever end of the body has fewer distinct entities.
fn for_each_body_pair<F>(kg: &KnowledgeGraph, body: &[RelationId], mut f: F)
where
    F: FnMut(EntityId, EntityId),
{
    if body.is_empty() {
        return;
    }
    let first = body[0];
    let last_inv = body[body.len() - 1].inverse();
    let forward = kg.relation_heads(first).len() <= kg.relation_heads(last_inv).len();
    let mut frontier = Frontier::new(kg.num_entities());
    if forward {
        for &x in kg.relation_heads(first) {
            frontier.reach(kg, x, body);
            for &y in &frontier.current {
                f(x, y);
            }
        }
    } else {
        let rev = reversed_inverse(body);
        for &y in kg.relation_heads(last_inv) {
            frontier.reach(kg, y, &rev);
            for &x in &frontier.current {
                f(x, y);
            }
        }
    }
}

/// The distinct `(x, y)` pairs connected by `body` in the train facts, sorted.
pub fn body_pairs(kg: &KnowledgeGraph, body: &[RelationId]) -> Vec<(EntityId, EntityId)> {
    let mut out = Vec::new();
    for_each_body_pair(kg, body, |x, y| out.push((x, y)));
    out.sort_unstable();
    out
}

/// Support, coverage, confidence and PCA confidence counts of `rule`.
pub fn score_rule(kg: &KnowledgeGraph, rule: &Rule) -> RuleQuality {
    let head = rule.head;
    let mut q = RuleQuality {
        head_pairs: kg.relation_size(head) as u64,
        ..Default::default()
    };
    for_each_body_pair(kg, &rule.body, |x, y| {
        q.body_pairs += 1;
        let known = kg.successors(x, head);
        if !known.is_empty() {
            q.pca_pairs += 1;
            if known.binary_search(&y).is_ok() {
                q.support += 1;
            }
        }
    });
    q
}

/// Scores every candidate, drops zero-support rules and sorts by `measure`
/// (descending), then support (descending), then canonical text.
pub fn rank_rules(kg: &KnowledgeGraph, candidates: &[Rule], measure: Measure) -> Vec<RankedRule> {
    let mut ranked: Vec<(RankedRule, String)> = candidates
        .par_iter()
        .map(|rule| {
            let quality = score_rule(kg, rule);
            (
                RankedRule {
                    rule: rule.clone(),
                    quality,
                    score: measure.score(&quality),
                },
                rule.display(kg.vocab()).to_string(),
            )
        })
        .filter(|(r, _)| r.quality.support > 0)
        .collect();
    ranked.sort_by(|(a, at), (b, bt)| {
        b.score
            .total_cmp(&a.score)
            .then(b.quality.support.cmp(&a.quality.support))
            .then_with(|| at.cmp(bt))
    });
    ranked.dedup_by(|(_, a), (_, b)| a == b);
    ranked.into_iter().map(|(r, _)| r).collect()
}

/// `rule<TAB>support<TAB>coverage<TAB>confidence<TAB>pca`, measures with 6 decimals.
pub fn write_ranked<W: Write>(kg: &KnowledgeGraph, rules: &[RankedRule], mut w: W) -> io::Result<()> {
    for r in rules {
        let q = &r.quality;
        writeln!(
            w,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}",
            r.rule.display(kg.vocab()),
            q.support,
            q.coverage().value(),
            q.confidence().value(),
            q.pca_confidence().value()
        )?;
    }
    Ok(())
}

/// A rule with the score it contributes during reasoning.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRule {
    pub rule: Rule,
    pub score: f64,
}

impl From<&RankedRule> for ScoredRule {
    fn from(r: &RankedRule) -> Self {
        ScoredRule {
            rule: r.rule.clone(),
            score: r.score,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RankedFileError {
    #[error("line {line}: {source}")]
    Rule { line: usize, source: RuleError },
    #[error("line {line}: expected 5 tab-separated columns")]
    Columns { line: usize },
    #[error("line {line}: bad number {text:?}")]
    Number { line: usize, text: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads a ranked-rules file, taking each rule's score from the column of `measure`.
pub fn read_ranked<R: BufRead>(
    kg: &KnowledgeGraph,
    reader: R,
    max_len: usize,
    measure: Measure,
) -> Result<Vec<ScoredRule>, RankedFileError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(RankedFileError::Columns { line: i + 1 });
        }
        let rule =
            parse_rule(cols[0], kg.vocab(), max_len).map_err(|source| RankedFileError::Rule { line: i + 1, source })?;
        let col = match measure {
            Measure::None => None,
            Measure::Coverage => Some(cols[2]),
            Measure::Confidence => Some(cols[3]),
            Measure::Pca => Some(cols[4]),
        };
        let score = match col {
            None => 1.0,
            Some(text) => text.trim().parse::<f64>().map_err(|_| RankedFileError::Number {
                line: i + 1,
                text: text.to_string(),
            })?,
        };
        out.push(ScoredRule { rule, score });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::tests::appendix_kg;
    use crate::kg::{KgBuilder, Split};

    #[test]
    fn appendix_worked_example() {
        let kg = appendix_kg();
        let plays = kg.relation("playsFor").unwrap();
        let aff = kg.relation("isAffiliatedTo").unwrap();
        let q = score_rule(&kg, &Rule::new(plays, vec![aff]));
        assert_eq!(q.support, 1);
        assert_eq!(q.coverage(), Fraction::new(1, 2));
        assert_eq!(q.confidence(), Fraction::new(1, 3));
        assert_eq!(q.pca_confidence(), Fraction::new(1, 2));
    }

    #[test]
    fn appendix_body_pairs() {
        let kg = appendix_kg();
        let aff = kg.relation("isAffiliatedTo").unwrap();
        let pairs: Vec<_> = body_pairs(&kg, &[aff])
            .into_iter()
            .map(|(x, y)| (kg.entity_name(x), kg.entity_name(y)))
            .collect();
        assert_eq!(pairs, [("Alex", "Club 1"), ("Alex", "Club 2"), ("Bob", "Club 3")]);
        let plays = kg.relation("playsFor").unwrap();
        assert!(body_pairs(&kg, &[aff, plays]).is_empty());
    }

    #[test]
    fn self_body_is_perfect() {
        let kg = appendix_kg();
        let aff = kg.relation("isAffiliatedTo").unwrap();
        let q = score_rule(&kg, &Rule::new(aff, vec![aff]));
        assert_eq!(q.support, 3);
        for m in [q.coverage(), q.confidence(), q.pca_confidence()] {
            assert_eq!(m, Fraction::new(1, 1));
        }
    }

    #[test]
    fn zero_denominators_score_zero() {
        let mut b = KgBuilder::new();
        b.add(Split::Train, "a", "r", "b").unwrap();
        b.add(Split::Test, "a", "h", "b").unwrap();
        let kg = b.build().unwrap();
        let h = kg.relation("h").unwrap();
        let r = kg.relation("r").unwrap();
        let q = score_rule(&kg, &Rule::new(h, vec![r]));
        assert_eq!(
            q,
            RuleQuality {
                support: 0,
                head_pairs: 0,
                body_pairs: 1,
                pca_pairs: 0
            }
        );
        assert_eq!(q.coverage().value(), 0.0);
        assert_eq!(q.pca_confidence().value(), 0.0);
    }

    #[test]
    fn ranking_prunes_and_orders() {
        let kg = appendix_kg();
        let plays = kg.relation("playsFor").unwrap();
        let aff = kg.relation("isAffiliatedTo").unwrap();
        let hallucinated = Rule::new(plays, vec![aff, aff]);
        let good = Rule::new(plays, vec![aff]);
        let ranked = rank_rules(&kg, &[hallucinated, good.clone()], Measure::Pca);
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].rule, good);
        assert_eq!(ranked[0].score, 0.5);
        assert!(rank_rules(&kg, &[], Measure::Pca).is_empty());
        let none = rank_rules(&kg, &[good], Measure::None);
        assert_eq!(none[0].score, 1.0);
    }

    #[test]
    fn ranked_file_round_trip() {
        let kg = appendix_kg();
        let plays = kg.relation("playsFor").unwrap();
        let aff = kg.relation("isAffiliatedTo").unwrap();
        let ranked = rank_rules(&kg, &[Rule::new(plays, vec![aff])], Measure::Pca);
        let mut buf = Vec::new();
        write_ranked(&kg, &ranked, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "playsFor(X,Y) <- isAffiliatedTo(X,Y)\t1\t0.500000\t0.333333\t0.500000\n"
        );
        let back = read_ranked(&kg, buf.as_slice(), 3, Measure::Confidence).unwrap();
        assert_eq!(back[0].rule, ranked[0].rule);
        assert_eq!(back[0].score, 0.333333);
    }

    #[test]
    fn measure_names() {
        for m in Measure::ALL {
            assert_eq!(m.as_str().parse::<Measure>().unwrap(), m);
        }
        assert!("support".parse::<Measure>().is_err());
    }
}
