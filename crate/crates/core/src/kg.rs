//! Knowledge-graph storage: interning, inverse augmentation and adjacency indexes.
//!
//! Relations are laid out in pairs: the forward relation `r` has an even id and its
//! inverse `inv_r` sits at `r + 1`, so inversion is a single xor. Only the train split
//! is indexed; valid and test facts are kept as plain triple lists for evaluation.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::rule::verbalize_key;

/// Prefix reserved for inverse relations.
pub const INVERSE_PREFIX: &str = "inv_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// The opposite direction of this relation. `r.inverse().inverse() == r`.
    #[inline]
    pub fn inverse(self) -> RelationId {
        RelationId(self.0 ^ 1)
    }

    #[inline]
    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    /// The forward form of this relation.
    #[inline]
    pub fn base(self) -> RelationId {
        RelationId(self.0 & !1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple { head, relation, tail }
    }

    pub fn inverse(self) -> Triple {
        Triple::new(self.tail, self.relation.inverse(), self.head)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Error)]
pub enum KgError {
    #[error("{split}:{line}: expected 3 tab-separated fields, found {found}")]
    FieldCount { split: Split, line: usize, found: usize },
    #[error("{split}:{line}: empty entity or relation name")]
    EmptyName { split: Split, line: usize },
    #[error("{split}:{line}: relation name {name:?} uses the reserved prefix \"inv_\"")]
    ReservedPrefix { split: Split, line: usize, name: String },
    #[error("relation names {first:?} and {second:?} verbalize identically")]
    VerbalizationCollision { first: String, second: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Name table for the augmented relation vocabulary.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    names: Vec<String>,
    by_name: HashMap<String, RelationId>,
    by_key: HashMap<(bool, String), RelationId>,
}

impl Vocabulary {
    /// Registers a forward relation and its inverse, returning the forward id.
    fn intern_forward(&mut self, name: &str) -> RelationId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = RelationId(self.names.len() as u32);
        let inverse = format!("{INVERSE_PREFIX}{name}");
        self.by_name.insert(name.to_string(), id);
        self.by_name.insert(inverse.clone(), id.inverse());
        self.names.push(name.to_string());
        self.names.push(inverse);
        id
    }

    fn build_keys(&mut self) -> Result<(), KgError> {
        self.by_key.clear();
        for (i, name) in self.names.iter().enumerate() {
            let id = RelationId(i as u32);
            if let Some(prev) = self.by_key.insert(verbalize_key(name), id) {
                return Err(KgError::VerbalizationCollision {
                    first: self.names[prev.index()].clone(),
                    second: name.clone(),
                });
            }
        }
        Ok(())
    }

    /// Number of relations including inverses.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn forward_count(&self) -> usize {
        self.names.len() / 2
    }

    pub fn name(&self, id: RelationId) -> &str {
        &self.names[id.index()]
    }

    /// Exact lookup by canonical name.
    pub fn get(&self, name: &str) -> Option<RelationId> {
        self.by_name.get(name).copied()
    }

    /// Lookup tolerant to case, spaces vs underscores and slashes.
    pub fn resolve(&self, name: &str) -> Option<RelationId> {
        self.get(name)
            .or_else(|| self.by_key.get(&verbalize_key(name)).copied())
    }

    pub fn ids(&self) -> impl Iterator<Item = RelationId> + '_ {
        (0..self.names.len() as u32).map(RelationId)
    }
}

#[derive(Debug, Clone, Default)]
struct EntityTable {
    names: Vec<String>,
    by_name: HashMap<String, EntityId>,
}

impl EntityTable {
    fn intern(&mut self, name: &str) -> EntityId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = EntityId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        id
    }
}

/// Train facts of one relation, grouped by head: `tails[offsets[i]..offsets[i + 1]]`
/// are the sorted successors of `heads[i]`.
#[derive(Debug, Clone, Default)]
struct Adjacency {
    heads: Vec<EntityId>,
    offsets: Vec<usize>,
    tails: Vec<EntityId>,
}

impl Adjacency {
    fn from_sorted_pairs(pairs: &[(EntityId, EntityId)]) -> Self {
        let mut adj = Adjacency {
            heads: Vec::new(),
            offsets: vec![0],
            tails: Vec::with_capacity(pairs.len()),
        };
        for &(h, t) in pairs {
            if adj.heads.last() != Some(&h) {
                if !adj.heads.is_empty() {
                    adj.offsets.push(adj.tails.len());
                }
                adj.heads.push(h);
            }
            adj.tails.push(t);
        }
        if !adj.heads.is_empty() {
            adj.offsets.push(adj.tails.len());
        }
        adj
    }

    fn successors(&self, e: EntityId) -> &[EntityId] {
        match self.heads.binary_search(&e) {
            Ok(i) => &self.tails[self.offsets[i]..self.offsets[i + 1]],
            Err(_) => &[],
        }
    }

    fn pairs(&self) -> impl Iterator<Item = (EntityId, EntityId)> + '_ {
        self.heads.iter().enumerate().flat_map(move |(i, &h)| {
            self.tails[self.offsets[i]..self.offsets[i + 1]]
                .iter()
                .map(move |&t| (h, t))
        })
    }
}

/// Counts produced while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub entities: usize,
    pub forward_relations: usize,
    pub relations: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub duplicates_dropped: usize,
}

impl LoadReport {
    pub fn forward_triples(&self) -> usize {
        self.train + self.valid + self.test
    }

    pub fn directed_triples(&self) -> usize {
        2 * self.forward_triples()
    }

    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        format!(
            "entities={}\nforward_relations={}\nrelations={}\ntrain_triples={}\nvalid_triples={}\ntest_triples={}\nforward_triples={}\ndirected_triples={}\nduplicates_dropped={}\n",
            self.entities,
            self.forward_relations,
            self.relations,
            self.train,
            self.valid,
            self.test,
            self.forward_triples(),
            self.directed_triples(),
            self.duplicates_dropped
        )
    }
}

/// Accumulates named triples before freezing them into a [`KnowledgeGraph`].
#[derive(Debug, Default)]
pub struct KgBuilder {
    entities: EntityTable,
    relations: Vocabulary,
    splits: [Vec<Triple>; 3],
    seen: [HashSet<Triple>; 3],
    duplicates: usize,
}

impl KgBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(split: Split) -> usize {
        match split {
            Split::Train => 0,
            Split::Valid => 1,
            Split::Test => 2,
        }
    }

    /// Adds a forward fact. Relation names carrying the inverse prefix are rejected.
    pub fn add(&mut self, split: Split, head: &str, relation: &str, tail: &str) -> Result<(), KgError> {
        self.add_at(split, 0, head, relation, tail)
    }

    fn add_at(&mut self, split: Split, line: usize, head: &str, relation: &str, tail: &str) -> Result<(), KgError> {
        if head.is_empty() || relation.is_empty() || tail.is_empty() {
            return Err(KgError::EmptyName { split, line });
        }
        if relation.starts_with(INVERSE_PREFIX) {
            return Err(KgError::ReservedPrefix {
                split,
                line,
                name: relation.to_string(),
            });
        }
        let h = self.entities.intern(head);
        let r = self.relations.intern_forward(relation);
        let t = self.entities.intern(tail);
        let triple = Triple::new(h, r, t);
        let slot = Self::slot(split);
        if self.seen[slot].insert(triple) {
            self.splits[slot].push(triple);
        } else {
            self.duplicates += 1;
        }
        Ok(())
    }

    /// Reads `head<TAB>relation<TAB>tail` lines. Blank lines are skipped.
    pub fn read_tsv<R: BufRead>(&mut self, split: Split, reader: R, path: &str) -> Result<(), KgError> {
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| KgError::Io {
                path: path.to_string(),
                source,
            })?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(KgError::FieldCount {
                    split,
                    line: i + 1,
                    found: fields.len(),
                });
            }
            self.add_at(split, i + 1, fields[0], fields[1], fields[2])?;
        }
        Ok(())
    }

    pub fn read_file(&mut self, split: Split, path: &Path) -> Result<(), KgError> {
        let file = fs::File::open(path).map_err(|source| KgError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.read_tsv(split, BufReader::new(file), &path.display().to_string())
    }

    pub fn build(mut self) -> Result<KnowledgeGraph, KgError> {
        self.relations.build_keys()?;
        let n_rel = self.relations.len();
        let mut per_relation: Vec<Vec<(EntityId, EntityId)>> = vec![Vec::new(); n_rel];
        let mut entity_edges: Vec<(EntityId, RelationId, EntityId)> = Vec::with_capacity(self.splits[0].len() * 2);
        for &t in &self.splits[0] {
            per_relation[t.relation.index()].push((t.head, t.tail));
            per_relation[t.relation.inverse().index()].push((t.tail, t.head));
            entity_edges.push((t.head, t.relation, t.tail));
            entity_edges.push((t.tail, t.relation.inverse(), t.head));
        }
        let index = per_relation
            .into_iter()
            .map(|mut pairs| {
                pairs.sort_unstable();
                Adjacency::from_sorted_pairs(&pairs)
            })
            .collect();

        entity_edges.sort_unstable();
        let n_ent = self.entities.names.len();
        let mut edge_offsets = vec![0usize; n_ent + 1];
        for &(h, _, _) in &entity_edges {
            edge_offsets[h.index() + 1] += 1;
        }
        for i in 0..n_ent {
            edge_offsets[i + 1] += edge_offsets[i];
        }
        let edges = entity_edges.into_iter().map(|(_, r, t)| (r, t)).collect();

        let report = LoadReport {
            entities: n_ent,
            forward_relations: self.relations.forward_count(),
            relations: n_rel,
            train: self.splits[0].len(),
            valid: self.splits[1].len(),
            test: self.splits[2].len(),
            duplicates_dropped: self.duplicates,
        };
        let [train, valid, test] = self.splits;
        Ok(KnowledgeGraph {
            entities: self.entities,
            relations: self.relations,
            train,
            valid,
            test,
            index,
            edge_offsets,
            edges,
            report,
        })
    }
}

/// An immutable, inverse-augmented knowledge graph.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    entities: EntityTable,
    relations: Vocabulary,
    train: Vec<Triple>,
    valid: Vec<Triple>,
    test: Vec<Triple>,
    index: Vec<Adjacency>,
    edge_offsets: Vec<usize>,
    edges: Vec<(RelationId, EntityId)>,
    report: LoadReport,
}

impl KnowledgeGraph {
    /// Loads the three TSV splits. Entities and relations are interned in first-seen
    /// order across train, valid, then test.
    pub fn load(train: &Path, valid: &Path, test: &Path) -> Result<Self, KgError> {
        let mut b = KgBuilder::new();
        b.read_file(Split::Train, train)?;
        b.read_file(Split::Valid, valid)?;
        b.read_file(Split::Test, test)?;
        b.build()
    }

    /// Loads `train.txt`, `valid.txt` and `test.txt` from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self, KgError> {
        Self::load(&dir.join("train.txt"), &dir.join("valid.txt"), &dir.join("test.txt"))
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.relations
    }

    pub fn num_entities(&self) -> usize {
        self.entities.names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_name(&self, e: EntityId) -> &str {
        &self.entities.names[e.index()]
    }

    pub fn entity(&self, name: &str) -> Option<EntityId> {
        self.entities.by_name.get(name).copied()
    }

    pub fn relation_name(&self, r: RelationId) -> &str {
        self.relations.name(r)
    }

    pub fn relation(&self, name: &str) -> Option<RelationId> {
        self.relations.get(name)
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> {
        (0..self.num_entities() as u32).map(EntityId)
    }

    pub fn relations(&self) -> impl Iterator<Item = RelationId> {
        (0..self.num_relations() as u32).map(RelationId)
    }

    /// Forward facts of a split, in load order.
    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    /// Sorted, duplicate-free tails of `(e, r, ·)` in the train split.
    pub fn successors(&self, e: EntityId, r: RelationId) -> &[EntityId] {
        self.index[r.index()].successors(e)
    }

    pub fn has_fact(&self, h: EntityId, r: RelationId, t: EntityId) -> bool {
        self.successors(h, r).binary_search(&t).is_ok()
    }

    /// Distinct `(head, tail)` train pairs of `r`, sorted.
    pub fn relation_pairs(&self, r: RelationId) -> impl Iterator<Item = (EntityId, EntityId)> + '_ {
        self.index[r.index()].pairs()
    }

    pub fn relation_size(&self, r: RelationId) -> usize {
        self.index[r.index()].tails.len()
    }

    /// Distinct entities with at least one outgoing `r` edge, sorted.
    pub fn relation_heads(&self, r: RelationId) -> &[EntityId] {
        &self.index[r.index()].heads
    }

    /// All augmented out-edges of `e` as `(relation, tail)`, sorted.
    pub fn out_edges(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        &self.edges[self.edge_offsets[e.index()]..self.edge_offsets[e.index() + 1]]
    }

    /// Writes a split back out in the input TSV format.
    pub fn write_split<W: Write>(&self, split: Split, mut w: W) -> std::io::Result<()> {
        for t in self.split(split) {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.entity_name(t.head),
                self.relation_name(t.relation),
                self.entity_name(t.tail)
            )?;
        }
        Ok(())
    }
}
