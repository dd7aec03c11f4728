//! Chain-shaped Horn rules `h(X,Y) <- r1(X,Z_1) & ... & rL(Z_{L-1},Y)`: parsing,
//! canonical printing and prompt verbalization.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::kg::{RelationId, Vocabulary, INVERSE_PREFIX};

/// A chain rule. Only the relation sequence is stored; the variable chain is implied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub head: RelationId,
    pub body: Vec<RelationId>,
}

impl Rule {
    pub fn new(head: RelationId, body: Vec<RelationId>) -> Self {
        debug_assert!(!body.is_empty());
        Rule { head, body }
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    /// Canonical text form, using the vocabulary's raw relation names.
    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> RuleDisplay<'a> {
        RuleDisplay {
            rule: self,
            vocab,
            verbalized: false,
        }
    }

    /// Same shape as [`Rule::display`] but with verbalized relation names.
    pub fn verbalized<'a>(&'a self, vocab: &'a Vocabulary) -> RuleDisplay<'a> {
        RuleDisplay {
            rule: self,
            vocab,
            verbalized: true,
        }
    }
}

pub struct RuleDisplay<'a> {
    rule: &'a Rule,
    vocab: &'a Vocabulary,
    verbalized: bool,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |r: RelationId| -> String {
            let raw = self.vocab.name(r);
            if self.verbalized {
                verbalize(raw)
            } else {
                raw.to_string()
            }
        };
        write!(f, "{}(X,Y) <- ", name(self.rule.head))?;
        let n = self.rule.body.len();
        for (i, &r) in self.rule.body.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            let from = chain_var(i, n);
            let to = chain_var(i + 1, n);
            write!(f, "{}({from},{to})", name(r))?;
        }
        Ok(())
    }
}

fn chain_var(i: usize, len: usize) -> String {
    if i == 0 {
        "X".to_string()
    } else if i == len {
        "Y".to_string()
    } else {
        format!("Z_{i}")
    }
}

/// Canonical text of a rule.
pub fn print_rule(rule: &Rule, vocab: &Vocabulary) -> String {
    rule.display(vocab).to_string()
}

/// Display form of a relation name for prompts: underscores and slashes become
/// single spaces, while a leading `inv_` marker is kept verbatim.
pub fn verbalize(name: &str) -> String {
    match name.strip_prefix(INVERSE_PREFIX) {
        Some(base) => format!("{INVERSE_PREFIX}{}", verbalize_base(base)),
        None => verbalize_base(name),
    }
}

fn verbalize_base(name: &str) -> String {
    name.split(['_', '/', ' ', '\t'])
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lookup key used to match relation names written by a model against the
/// vocabulary: inverse flag plus the lowercased verbalized base name.
pub(crate) fn verbalize_key(name: &str) -> (bool, String) {
    let trimmed = name.trim();
    let lower = trimmed.to_lowercase();
    match lower.strip_prefix(INVERSE_PREFIX) {
        Some(base) => (true, verbalize_base(base)),
        None => (false, verbalize_base(&lower)),
    }
}

/// Error classes for rejected rule lines. Every variant carries the offending line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("grammar error: {line}")]
    Grammar { line: String },
    #[error("unknown relation {name:?}: {line}")]
    Vocabulary { line: String, name: String },
    #[error("broken variable chain: {line}")]
    Chain { line: String },
    #[error("body length {len} exceeds {max}: {line}")]
    Length { line: String, len: usize, max: usize },
    #[error("head does not match target: {line}")]
    HeadMismatch { line: String },
}

impl RuleError {
    pub fn kind(&self) -> &'static str {
        match self {
            RuleError::Grammar { .. } => "GrammarError",
            RuleError::Vocabulary { .. } => "VocabularyError",
            RuleError::Chain { .. } => "ChainError",
            RuleError::Length { .. } => "LengthError",
            RuleError::HeadMismatch { .. } => "HeadMismatchError",
        }
    }

    pub fn line(&self) -> &str {
        match self {
            RuleError::Grammar { line }
            | RuleError::Vocabulary { line, .. }
            | RuleError::Chain { line }
            | RuleError::Length { line, .. }
            | RuleError::HeadMismatch { line } => line,
        }
    }
}

struct Atom<'a> {
    name: &'a str,
    from: &'a str,
    to: &'a str,
}

const IMPLICATIONS: [&str; 2] = ["<-", "←"];

fn split_implication(line: &str) -> Option<(&str, &str)> {
    IMPLICATIONS
        .iter()
        .filter_map(|tok| line.find(tok).map(|i| (i, tok.len())))
        .min_by_key(|&(i, _)| i)
        .map(|(i, n)| (&line[..i], &line[i + n..]))
}

fn is_variable(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_atom(text: &str) -> Option<Atom<'_>> {
    let text = text.trim();
    let open = text.find('(')?;
    let inner = text[open + 1..].strip_suffix(')')?;
    let name = text[..open].trim();
    if name.is_empty() || name.contains([')', '(', ',']) {
        return None;
    }
    let (from, to) = inner.split_once(',')?;
    let (from, to) = (from.trim(), to.trim());
    if !is_variable(from) || !is_variable(to) {
        return None;
    }
    Some(Atom { name, from, to })
}

/// Parses one rule line against `vocab`, enforcing the chain topology and a maximum
/// body length. Both `<-`/`←` and `&`/`∧` are accepted.
pub fn parse_rule(line: &str, vocab: &Vocabulary, max_len: usize) -> Result<Rule, RuleError> {
    let grammar = || RuleError::Grammar { line: line.to_string() };
    let (head_text, body_text) = split_implication(line).ok_or_else(grammar)?;
    let head = parse_atom(head_text).ok_or_else(grammar)?;
    if body_text.trim().is_empty() {
        return Err(grammar());
    }
    let body = body_text
        .split(['&', '∧'])
        .map(|a| parse_atom(a).ok_or_else(grammar))
        .collect::<Result<Vec<_>, _>>()?;

    if body.len() > max_len {
        return Err(RuleError::Length {
            line: line.to_string(),
            len: body.len(),
            max: max_len,
        });
    }

    let chain_ok = {
        let (x, y) = (head.from, head.to);
        let mut seen: HashSet<&str> = HashSet::from([x, y]);
        let mut ok = x != y && body[0].from == x && body[body.len() - 1].to == y;
        for pair in body.windows(2) {
            let z = pair[0].to;
            ok &= pair[1].from == z && seen.insert(z);
        }
        ok
    };
    if !chain_ok {
        return Err(RuleError::Chain { line: line.to_string() });
    }

    let resolve = |name: &str| {
        vocab.resolve(name).ok_or_else(|| RuleError::Vocabulary {
            line: line.to_string(),
            name: name.to_string(),
        })
    };
    let head_id = resolve(head.name)?;
    let body_ids = body.iter().map(|a| resolve(a.name)).collect::<Result<Vec<_>, _>>()?;
    Ok(Rule::new(head_id, body_ids))
}

/// As [`parse_rule`], additionally requiring the head to be `target`.
pub fn parse_rule_for(line: &str, vocab: &Vocabulary, max_len: usize, target: RelationId) -> Result<Rule, RuleError> {
    let rule = parse_rule(line, vocab, max_len)?;
    if rule.head != target {
        return Err(RuleError::HeadMismatch { line: line.to_string() });
    }
    Ok(rule)
}

/// Picks candidate rule lines out of a free-text model response: every line holding
/// an implication token, with list markers and trailing periods removed.
pub fn extract_rule_lines(response: &str) -> Vec<String> {
    response
        .lines()
        .filter(|l| split_implication(l).is_some())
        .map(|l| {
            let mut s = l.trim();
            s = s.trim_start_matches(['-', '*', '•']).trim_start();
            let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
            if digits > 0 {
                let rest = &s[digits..];
                if let Some(r) = rest.strip_prefix(['.', ')', ':']) {
                    s = r.trim_start();
                }
            }
            s = s.trim_matches('`').trim();
            s.trim_end_matches(['.', ';']).trim_end().to_string()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{KgBuilder, KnowledgeGraph, Split};
    use proptest::prelude::*;

    fn family() -> KnowledgeGraph {
        let mut b = KgBuilder::new();
        for r in ["husband", "wife", "father", "mother", "brother"] {
            b.add(Split::Train, "a", r, "b").unwrap();
        }
        b.build().unwrap()
    }

    fn names(kg: &KnowledgeGraph, rule: &Rule) -> (String, Vec<String>) {
        (
            kg.relation_name(rule.head).to_string(),
            rule.body.iter().map(|&r| kg.relation_name(r).to_string()).collect(),
        )
    }

    #[test]
    fn parses_inverse_length_one() {
        let kg = family();
        let rule = parse_rule("husband(X,Y) <- inv_wife(X,Y)", kg.vocab(), 3).unwrap();
        assert_eq!(names(&kg, &rule), ("husband".into(), vec!["inv_wife".into()]));
    }

    #[test]
    fn parses_length_two() {
        let kg = family();
        let rule = parse_rule("father(X,Y) <- husband(X,Z_1) & mother(Z_1,Y)", kg.vocab(), 3).unwrap();
        assert_eq!(
            names(&kg, &rule),
            ("father".into(), vec!["husband".into(), "mother".into()])
        );
    }

    #[test]
    fn unicode_tokens_and_loose_spacing() {
        let kg = family();
        let a = parse_rule("father ( X , Y ) ← husband(X, Z1) ∧ mother(Z1 ,Y)", kg.vocab(), 3).unwrap();
        let b = parse_rule("father(X,Y)<-husband(X,Z_1)&mother(Z_1,Y)", kg.vocab(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn broken_chain() {
        let kg = family();
        let err = parse_rule("husband(X,Y) <- wife(Y,Z_1) & brother(X,Z_1)", kg.vocab(), 3).unwrap_err();
        assert_eq!(err.kind(), "ChainError");
    }

    #[test]
    fn repeated_intermediate_is_chain_error() {
        let kg = family();
        let err = parse_rule("husband(X,Y) <- wife(X,Z) & brother(Z,Z) & mother(Z,Y)", kg.vocab(), 3).unwrap_err();
        assert_eq!(err.kind(), "ChainError");
    }

    #[test]
    fn error_classes() {
        let kg = family();
        let v = kg.vocab();
        assert_eq!(
            parse_rule("husband(X,Y) <- uncle(X,Y)", v, 3).unwrap_err().kind(),
            "VocabularyError"
        );
        assert_eq!(parse_rule("husband(X,Y) <-", v, 3).unwrap_err().kind(), "GrammarError");
        assert_eq!(parse_rule("husband(X,Y)", v, 3).unwrap_err().kind(), "GrammarError");
        assert_eq!(
            parse_rule(
                "treats(X,Y) <- prevents(X,Z_1) & inv_treats(Z_1,Z_2) & , treats(Z_2,Y)",
                v,
                3
            )
            .unwrap_err()
            .kind(),
            "GrammarError"
        );
        let long = "husband(X,Y) <- wife(X,A) & wife(A,B) & wife(B,C) & wife(C,Y)";
        assert_eq!(parse_rule(long, v, 3).unwrap_err().kind(), "LengthError");
        let err = parse_rule_for("wife(X,Y) <- inv_husband(X,Y)", v, 3, kg.relation("husband").unwrap()).unwrap_err();
        assert_eq!(err.kind(), "HeadMismatchError");
        assert_eq!(err.line(), "wife(X,Y) <- inv_husband(X,Y)");
    }

    #[test]
    fn prints_canonical() {
        let mut b = KgBuilder::new();
        for r in ["GrandMother", "Mother", "Father"] {
            b.add(Split::Train, "a", r, "b").unwrap();
        }
        let kg = b.build().unwrap();
        let gm = kg.relation("GrandMother").unwrap();
        let rule = Rule::new(gm, vec![kg.relation("Mother").unwrap(), kg.relation("Father").unwrap()]);
        assert_eq!(
            print_rule(&rule, kg.vocab()),
            "GrandMother(X,Y) <- Mother(X,Z_1) & Father(Z_1,Y)"
        );
        let short = Rule::new(gm, vec![kg.relation("Mother").unwrap()]);
        assert_eq!(print_rule(&short, kg.vocab()), "GrandMother(X,Y) <- Mother(X,Y)");
    }

    #[test]
    fn verbalization() {
        assert_eq!(verbalize("_member_meronym"), "member meronym");
        assert_eq!(verbalize("husband"), "husband");
        assert_eq!(verbalize("inv_wife"), "inv_wife");
        assert_eq!(verbalize("inv__has_part"), "inv_has part");
        assert_eq!(verbalize("/people/person/nationality"), "people person nationality");
    }

    #[test]
    fn verbalized_names_parse_back() {
        let mut b = KgBuilder::new();
        b.add(Split::Train, "a", "_member_meronym", "b").unwrap();
        b.add(Split::Train, "a", "_hypernym", "b").unwrap();
        let kg = b.build().unwrap();
        let rule = Rule::new(
            kg.relation("_hypernym").unwrap(),
            vec![
                kg.relation("_member_meronym").unwrap(),
                kg.relation("inv__member_meronym").unwrap(),
            ],
        );
        let text = rule.verbalized(kg.vocab()).to_string();
        assert_eq!(
            text,
            "hypernym(X,Y) <- member meronym(X,Z_1) & inv_member meronym(Z_1,Y)"
        );
        assert_eq!(parse_rule(&text, kg.vocab(), 3).unwrap(), rule);
        assert_eq!(
            parse_rule("Hypernym(X,Y) <- inv__member_meronym(X,Y)", kg.vocab(), 3)
                .unwrap()
                .body,
            vec![kg.relation("inv__member_meronym").unwrap()]
        );
    }

    #[test]
    fn extracts_rule_lines_from_chatter() {
        let response = "Sure! Here are the rules:\n1. husband(X,Y) <- inv_wife(X,Y).\n- father(X,Y) <- husband(X,Z_1) & mother(Z_1,Y)\nThese rules capture...";
        assert_eq!(
            extract_rule_lines(response),
            [
                "husband(X,Y) <- inv_wife(X,Y)",
                "father(X,Y) <- husband(X,Z_1) & mother(Z_1,Y)"
            ]
        );
    }

    #[test]
    fn exhaustive_round_trip() {
        let mut b = KgBuilder::new();
        for r in ["r0", "r1", "r2", "r3", "r4"] {
            b.add(Split::Train, "a", r, "b").unwrap();
        }
        let kg = b.build().unwrap();
        let rels: Vec<_> = kg.relations().collect();
        let mut count = 0;
        for &h in &rels {
            let mut bodies: Vec<Vec<RelationId>> = rels.iter().map(|&r| vec![r]).collect();
            for _ in 0..3 {
                for body in &bodies {
                    let rule = Rule::new(h, body.clone());
                    let text = print_rule(&rule, kg.vocab());
                    assert_eq!(parse_rule(&text, kg.vocab(), 3).unwrap(), rule, "{text}");
                    count += 1;
                }
                bodies = bodies
                    .iter()
                    .flat_map(|b| rels.iter().map(move |&r| [b.as_slice(), &[r]].concat()))
                    .collect();
            }
        }
        assert_eq!(count, 10 * (10 + 100 + 1000));
    }

    proptest! {
        #[test]
        fn parser_never_panics(s in "\\PC{0,80}") {
            let kg = family();
            let _ = parse_rule(&s, kg.vocab(), 3);
        }

        #[test]
        fn print_parse_identity(head in 0u32..10, body in proptest::collection::vec(0u32..10, 1..=3)) {
            let kg = family();
            let rule = Rule::new(RelationId(head), body.into_iter().map(RelationId).collect());
            let text = print_rule(&rule, kg.vocab());
            prop_assert_eq!(parse_rule(&text, kg.vocab(), 3).unwrap(), rule);
        }
    }
}
