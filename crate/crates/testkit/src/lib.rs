//! Test support: exhaustive reference evaluators and synthetic knowledge graphs.
//!
//! The oracles here read raw train triples into a dense boolean tensor and enumerate
//! every entity pair and every intermediate assignment. They share no code with the
//! indexed grounding used by the library.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rulesmith_core::{KgBuilder, KnowledgeGraph, RelationId, Rule, Split};

/// Dense `[relation][head][tail]` fact tensor over the augmented train split.
pub struct DenseKg {
    pub n: usize,
    pub rels: usize,
    facts: Vec<bool>,
}

impl DenseKg {
    pub fn new(kg: &KnowledgeGraph) -> Self {
        let n = kg.num_entities();
        let rels = kg.num_relations();
        let mut facts = vec![false; rels * n * n];
        for t in kg.split(Split::Train) {
            let (h, r, tl) = (t.head.0 as usize, t.relation.0 as usize, t.tail.0 as usize);
            facts[(r * n + h) * n + tl] = true;
            // inverse sits at r ^ 1
            facts[((r ^ 1) * n + tl) * n + h] = true;
        }
        DenseKg { n, rels, facts }
    }

    #[inline]
    pub fn fact(&self, h: usize, r: usize, t: usize) -> bool {
        self.facts[(r * self.n + h) * self.n + t]
    }

    /// Number of assignments `z_1..z_{L-1}` making every body atom a fact.
    pub fn assignments(&self, body: &[usize], x: usize, y: usize) -> u64 {
        fn go(kg: &DenseKg, body: &[usize], from: usize, y: usize) -> u64 {
            match body {
                [] => 0,
                [last] => u64::from(kg.fact(from, *last, y)),
                [r, rest @ ..] => (0..kg.n)
                    .filter(|&z| kg.fact(from, *r, z))
                    .map(|z| go(kg, rest, z, y))
                    .sum(),
            }
        }
        go(self, body, x, y)
    }

    pub fn body_holds(&self, body: &[usize], x: usize, y: usize) -> bool {
        self.assignments(body, x, y) > 0
    }
}

/// `(support, head_pairs, body_pairs, pca_pairs)` by exhaustive enumeration.
pub fn oracle_quality(kg: &DenseKg, head: usize, body: &[usize]) -> (u64, u64, u64, u64) {
    let (mut support, mut heads, mut bodies, mut pca) = (0, 0, 0, 0);
    for x in 0..kg.n {
        let x_has_head = (0..kg.n).any(|y| kg.fact(x, head, y));
        for y in 0..kg.n {
            let h = kg.fact(x, head, y);
            heads += u64::from(h);
            if kg.body_holds(body, x, y) {
                bodies += 1;
                support += u64::from(h);
                pca += u64::from(x_has_head);
            }
        }
    }
    (support, heads, bodies, pca)
}

/// Per-answer score: every rule contributes its score once per body grounding.
pub fn oracle_answer(kg: &DenseKg, rules: &[(Vec<usize>, f64)], x: usize) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    for y in 0..kg.n {
        let mut s = 0.0;
        for (body, score) in rules {
            for _ in 0..kg.assignments(body, x, y) {
                s += score;
            }
        }
        if s > 0.0 {
            out.insert(y, s);
        }
    }
    out
}

/// Every closed path `(head, relations, entities)` of length `1..=max_len` for every
/// fact of `target`, excluding the single seed edge and immediate backtracking.
pub fn oracle_closed_paths(kg: &DenseKg, target: usize, max_len: usize) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    fn dfs(
        kg: &DenseKg,
        target: usize,
        goal: usize,
        max_len: usize,
        rels: &mut Vec<usize>,
        ents: &mut Vec<usize>,
        out: &mut BTreeSet<(Vec<usize>, Vec<usize>)>,
    ) {
        if rels.len() == max_len {
            return;
        }
        let here = *ents.last().unwrap();
        for r in 0..kg.rels {
            for z in 0..kg.n {
                if !kg.fact(here, r, z) {
                    continue;
                }
                if let (Some(&pr), Some(&pe)) = (rels.last(), ents.len().checked_sub(2).map(|i| &ents[i])) {
                    if r == pr ^ 1 && z == pe {
                        continue;
                    }
                }
                rels.push(r);
                ents.push(z);
                if z == goal && !(rels.len() == 1 && r == target) {
                    out.insert((rels.clone(), ents.clone()));
                }
                dfs(kg, target, goal, max_len, rels, ents, out);
                rels.pop();
                ents.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    for h in 0..kg.n {
        for t in 0..kg.n {
            if kg.fact(h, target, t) {
                dfs(kg, target, t, max_len, &mut Vec::new(), &mut vec![h], &mut out);
            }
        }
    }
    out
}

/// A random train-only KG with `2..=max_entities` entities, `1..=max_relations`
/// forward relations and up to `max_triples` facts.
pub fn random_kg(rng: &mut impl Rng, max_entities: usize, max_relations: usize, max_triples: usize) -> KnowledgeGraph {
    let n = rng.gen_range(2..=max_entities);
    let rels = rng.gen_range(1..=max_relations);
    let triples = rng.gen_range(1..=max_triples);
    let mut b = KgBuilder::new();
    // make every relation exist so relation ids are stable
    for r in 0..rels {
        b.add(Split::Train, "e0", &format!("r{r}"), "e1").unwrap();
    }
    for _ in 0..triples {
        let h = rng.gen_range(0..n);
        let t = rng.gen_range(0..n);
        let r = rng.gen_range(0..rels);
        b.add(Split::Train, &format!("e{h}"), &format!("r{r}"), &format!("e{t}"))
            .unwrap();
    }
    b.build().unwrap()
}

pub fn random_body(rng: &mut impl Rng, relations: usize, max_len: usize) -> Vec<RelationId> {
    let len = rng.gen_range(1..=max_len);
    (0..len)
        .map(|_| RelationId(rng.gen_range(0..relations) as u32))
        .collect()
}

pub fn ids(body: &[RelationId]) -> Vec<usize> {
    body.iter().map(|r| r.index()).collect()
}

/// A graph with three planted rules for `target` plus distractor relations.
pub struct PlantedKg {
    pub kg: KnowledgeGraph,
    pub target: RelationId,
    /// Distractor rules for `target` and `inv_target`.
    pub noise: Vec<Rule>,
}

/// Builds a graph whose target relation `h` is predicted by:
/// `h <- a` (high precision, many facts from sources with no `h` fact),
/// `h <- b & c` and `h <- inv_g`, plus a moderately precise decoy relation `d` and
/// ten uninformative relations `n0..n9`. 20% of `h` facts are held out as test.
pub fn planted_kg(seed: u64) -> PlantedKg {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let people = 300;
    let with_head = 150;
    let mut b = KgBuilder::new();
    let p = |i: usize| format!("p{i}");
    let mut truth = Vec::new();
    for x in 0..with_head {
        let k = rng.gen_range(1..=2);
        for _ in 0..k {
            let y = rng.gen_range(0..people);
            if y != x {
                truth.push((x, y));
            }
        }
    }
    truth.sort_unstable();
    truth.dedup();
    let mut mid = 0;
    for &(x, y) in &truth {
        let test = rng.gen_bool(0.2);
        let split = if test { Split::Test } else { Split::Train };
        b.add(split, &p(x), "h", &p(y)).unwrap();
        if rng.gen_bool(0.8) {
            b.add(Split::Train, &p(x), "a", &p(y)).unwrap();
        }
        if rng.gen_bool(0.6) {
            let m = format!("m{mid}");
            mid += 1;
            b.add(Split::Train, &p(x), "b", &m).unwrap();
            b.add(Split::Train, &m, "c", &p(y)).unwrap();
        }
        if rng.gen_bool(0.6) {
            b.add(Split::Train, &p(y), "g", &p(x)).unwrap();
        }
        // decoy: one random edge per true pair, plus the true edge sometimes
        let z = rng.gen_range(0..people);
        b.add(Split::Train, &p(x), "d", &p(z)).unwrap();
        if rng.gen_bool(0.5) {
            b.add(Split::Train, &p(x), "d", &p(y)).unwrap();
        }
    }
    // a-facts from sources with no head facts: soft negatives for `h <- a`
    for x in with_head..people {
        for _ in 0..3 {
            let y = rng.gen_range(0..people);
            b.add(Split::Train, &p(x), "a", &p(y)).unwrap();
        }
    }
    for n in 0..10 {
        for _ in 0..400 {
            let x = rng.gen_range(0..people);
            let y = rng.gen_range(0..people);
            b.add(Split::Train, &p(x), &format!("n{n}"), &p(y)).unwrap();
        }
    }
    let kg = b.build().unwrap();
    let target = kg.relation("h").unwrap();
    let mut noise = Vec::new();
    for name in ["d", "n0", "n1", "n2", "n3", "n4", "n5", "n6", "n7", "n8", "n9"] {
        let r = kg.relation(name).unwrap();
        noise.push(Rule::new(target, vec![r]));
        noise.push(Rule::new(target.inverse(), vec![r.inverse()]));
    }
    for (a, c) in [("n0", "n1"), ("n2", "n3")] {
        let (a, c) = (kg.relation(a).unwrap(), kg.relation(c).unwrap());
        noise.push(Rule::new(target, vec![a, c]));
        noise.push(Rule::new(target.inverse(), vec![c.inverse(), a.inverse()]));
    }
    PlantedKg { kg, target, noise }
}

/// A train-only graph with `triples` facts over `entities` entities and `relations`
/// forward relations; entity popularity is skewed so some hubs exist.
pub fn synthetic_kg(triples: usize, entities: usize, relations: usize, seed: u64) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..entities).map(|i| format!("E{i}")).collect();
    let rel_names: Vec<String> = (0..relations).map(|i| format!("R{i}")).collect();
    let pick = |rng: &mut ChaCha8Rng| {
        let u: f64 = rng.gen();
        ((u * u) * entities as f64) as usize % entities
    };
    let mut b = KgBuilder::new();
    let mut added = 0;
    while added < triples {
        let h = pick(&mut rng);
        let t = rng.gen_range(0..entities);
        let r = rng.gen_range(0..relations);
        b.add(Split::Train, &names[h], &rel_names[r], &names[t]).unwrap();
        added += 1;
    }
    b.build().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_on_appendix() {
        let mut b = KgBuilder::new();
        for (h, r, t) in [
            ("Alex", "isAffiliatedTo", "Club 1"),
            ("Alex", "isAffiliatedTo", "Club 2"),
            ("Bob", "isAffiliatedTo", "Club 3"),
            ("Alex", "playsFor", "Club 1"),
            ("Charlie", "playsFor", "Club 2"),
        ] {
            b.add(Split::Train, h, r, t).unwrap();
        }
        let kg = b.build().unwrap();
        let d = DenseKg::new(&kg);
        let plays = kg.relation("playsFor").unwrap().index();
        let aff = kg.relation("isAffiliatedTo").unwrap().index();
        assert_eq!(oracle_quality(&d, plays, &[aff]), (1, 2, 3, 2));
    }
}
