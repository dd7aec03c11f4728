//! Closed-path sampling: breadth-first enumeration of relation paths that connect the
//! two endpoints of a seed fact, abstracted into variable-form rule samples.

use std::collections::{BTreeMap, HashSet};
use std::io::{self, Write};

use log::debug;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use crate::rule::Rule;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedPath {
    pub seed: Triple,
    pub relations: Vec<RelationId>,
    pub entities: Vec<EntityId>,
}

impl ClosedPath {
    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

/// A deduplicated rule sample with the number of closed paths that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSample {
    pub rule: Rule,
    pub multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub max_len: usize,
    pub seed_count: usize,
    pub rng_seed: u64,
    /// Upper bound on paths kept per seed fact.
    pub path_cap: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            max_len: 3,
            seed_count: 100,
            rng_seed: 0,
            path_cap: 100,
        }
    }
}

/// Per-target rng stream derived from the global seed.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples up to `seed_count` facts of `target` uniformly without replacement and
/// returns every closed path of length `1..=max_len` between each seed's endpoints,
/// in breadth-first order. The seed edge itself is never returned as a path.
pub fn sample_closed_paths(kg: &KnowledgeGraph, target: RelationId, cfg: &SamplerConfig) -> Vec<ClosedPath> {
    if cfg.max_len == 0 || target.index() >= kg.num_relations() {
        return Vec::new();
    }
    let facts: Vec<(EntityId, EntityId)> = kg.relation_pairs(target).collect();
    if facts.is_empty() {
        return Vec::new();
    }
    let amount = cfg.seed_count.min(facts.len());
    let mut rng = stream_rng(cfg.rng_seed, target.0 as u64);
    let mut picked = index::sample(&mut rng, facts.len(), amount).into_vec();
    picked.sort_unstable();

    picked
        .par_iter()
        .map(|&i| {
            let (h, t) = facts[i];
            paths_for_seed(kg, Triple::new(h, target, t), cfg.max_len, cfg.path_cap)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Entities that reach `target` in at most `k` steps, for `k = 0..levels`.
fn backward_reach(kg: &KnowledgeGraph, target: EntityId, levels: usize) -> Vec<HashSet<EntityId>> {
    let mut out = Vec::with_capacity(levels);
    let mut current: HashSet<EntityId> = HashSet::from([target]);
    let mut frontier = vec![target];
    out.push(current.clone());
    for _ in 1..levels {
        let mut next = Vec::new();
        for &e in &frontier {
            // x -r-> e exists iff e -inv_r-> x exists
            for &(_, x) in kg.out_edges(e) {
                if current.insert(x) {
                    next.push(x);
                }
            }
        }
        frontier = next;
        out.push(current.clone());
    }
    out
}

fn paths_for_seed(kg: &KnowledgeGraph, seed: Triple, max_len: usize, cap: usize) -> Vec<ClosedPath> {
    let reach = backward_reach(kg, seed.tail, max_len);
    let mut found = Vec::new();
    // partial paths: (entities, relations)
    let mut layer: Vec<(Vec<EntityId>, Vec<RelationId>)> = vec![(vec![seed.head], Vec::new())];
    for depth in 1..=max_len {
        let remaining = max_len - depth;
        let mut next = Vec::new();
        for (ents, rels) in &layer {
            let here = *ents.last().unwrap();
            for &(r, x) in kg.out_edges(here) {
                // no immediate backtrack over the edge just walked
                if let Some(&prev_r) = rels.last() {
                    if r == prev_r.inverse() && x == ents[ents.len() - 2] {
                        continue;
                    }
                }
                if !reach[remaining].contains(&x) {
                    continue;
                }
                let mut e2 = ents.clone();
                e2.push(x);
                let mut r2 = rels.clone();
                r2.push(r);
                if x == seed.tail && !(depth == 1 && r == seed.relation) {
                    found.push(ClosedPath {
                        seed,
                        relations: r2.clone(),
                        entities: e2.clone(),
                    });
                    if found.len() >= cap {
                        debug!(
                            "path cap {cap} reached for seed ({}, {}, {})",
                            kg.entity_name(seed.head),
                            kg.relation_name(seed.relation),
                            kg.entity_name(seed.tail)
                        );
                        return found;
                    }
                }
                if remaining > 0 {
                    next.push((e2, r2));
                }
            }
        }
        layer = next;
    }
    found
}

/// Drops entities from closed paths and deduplicates by `(head, body)`, sorted by body.
pub fn abstract_to_samples(paths: &[ClosedPath]) -> Vec<RuleSample> {
    let mut counts: BTreeMap<(Vec<RelationId>, RelationId), usize> = BTreeMap::new();
    for p in paths {
        *counts.entry((p.relations.clone(), p.seed.relation)).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|((body, head), multiplicity)| RuleSample {
            rule: Rule::new(head, body),
            multiplicity,
        })
        .collect()
}

/// One sample per line: canonical rule text, a tab, and the multiplicity.
pub fn write_samples<W: Write>(kg: &KnowledgeGraph, samples: &[RuleSample], mut w: W) -> io::Result<()> {
    for s in samples {
        writeln!(w, "{}\t{}", s.rule.display(kg.vocab()), s.multiplicity)?;
    }
    Ok(())
}
