//! Knowledge-graph data model: vocabularies, counted triple multisets,
//! TSV ingestion, session splits and filtered negative sampling.
//!
//! Triples carry observation counts. A unique triple `(bowl, atLocation,
//! cabinet)` seen 22 times across environments is stored once with count 22;
//! the counts later drive both training frequency and ground-truth ranks.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
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
}

impl From<usize> for EntityId {
    fn from(i: usize) -> Self {
        EntityId(i as u32)
    }
}

impl From<usize> for RelationId {
    fn from(i: usize) -> Self {
        RelationId(i as u32)
    }
}

/// Ordered name table with contiguous indices starting at zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `name`, appending it if unseen.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), i);
        i
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(names: Vec<String>) -> Self {
        let mut v = Vocabulary::new();
        for n in &names {
            v.intern(n);
        }
        v
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.names
    }
}

impl<S: AsRef<str>> FromIterator<S> for Vocabulary {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut v = Vocabulary::new();
        for n in iter {
            v.intern(n.as_ref());
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: impl Into<EntityId>, relation: impl Into<RelationId>, tail: impl Into<EntityId>) -> Self {
        Triple {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }

    pub fn touches(&self, e: EntityId) -> bool {
        self.head == e || self.tail == e
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.head.0, self.relation.0, self.tail.0)
    }
}

/// Multiset of triples: every stored count is at least one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountedTripleSet {
    counts: BTreeMap<Triple, u64>,
}

impl CountedTripleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `count` observations. A zero count is ignored.
    pub fn add(&mut self, triple: Triple, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(triple).or_insert(0) += count;
    }

    pub fn count(&self, triple: &Triple) -> u64 {
        self.counts.get(triple).copied().unwrap_or(0)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.counts.contains_key(triple)
    }

    /// Number of unique triples.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Sum of all observation counts.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Triple, u64)> + '_ {
        self.counts.iter().map(|(t, &c)| (t, c))
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> + '_ {
        self.counts.keys()
    }

    pub fn extend_from(&mut self, other: &CountedTripleSet) {
        for (t, c) in other.iter() {
            self.add(*t, c);
        }
    }

    pub fn unique_set(&self) -> HashSet<Triple> {
        self.counts.keys().copied().collect()
    }

    /// Keeps only triples satisfying `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&Triple) -> bool) -> CountedTripleSet {
        CountedTripleSet {
            counts: self
                .counts
                .iter()
                .filter(|(t, _)| keep(t))
                .map(|(t, c)| (*t, *c))
                .collect(),
        }
    }
}

impl FromIterator<(Triple, u64)> for CountedTripleSet {
    fn from_iter<I: IntoIterator<Item = (Triple, u64)>>(iter: I) -> Self {
        let mut s = CountedTripleSet::new();
        for (t, c) in iter {
            s.add(t, c);
        }
        s
    }
}

/// A counted triple set together with the vocabularies that name its indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    pub entities: Vocabulary,
    pub relations: Vocabulary,
    pub triples: CountedTripleSet,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an observation by name, interning unseen names.
    pub fn add_named(&mut self, head: &str, relation: &str, tail: &str, count: u64) -> Triple {
        let h = self.entities.intern(head);
        let r = self.relations.intern(relation);
        let t = self.entities.intern(tail);
        let triple = Triple::new(h, r, t);
        self.triples.add(triple, count);
        triple
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entities.get(name).map(EntityId::from)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations.get(name).map(RelationId::from)
    }

    /// Total observation count per entity (an entity in both endpoints of a
    /// triple counts that triple twice).
    pub fn entity_observations(&self) -> Vec<u64> {
        let mut obs = vec![0u64; self.entities.len()];
        for (t, c) in self.triples.iter() {
            obs[t.head.index()] += c;
            obs[t.tail.index()] += c;
        }
        obs
    }

    /// Writes the TSV form `head<TAB>relation<TAB>tail<TAB>count`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (t, c) in self.triples.iter() {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                self.entities.name(t.head.index()),
                self.relations.name(t.relation.index()),
                self.entities.name(t.tail.index()),
                c
            )?;
        }
        Ok(())
    }

    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(File::create(path)?);
        self.write_tsv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Loads a triple TSV file. See [`parse_triples`].
pub fn load_triples(path: impl AsRef<Path>) -> Result<KnowledgeGraph> {
    let path = path.as_ref();
    let f = File::open(path)?;
    parse_triples(BufReader::new(f), path)
}

/// Parses `head<TAB>relation<TAB>tail[<TAB>count]` lines.
///
/// Blank lines and lines starting with `#` are skipped. Vocabularies are
/// built in first-appearance order and repeated triples have their counts
/// summed.
pub fn parse_triples<R: Read>(reader: BufReader<R>, origin: &Path) -> Result<KnowledgeGraph> {
    let mut kg = KnowledgeGraph::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let count = match cols.len() {
            3 => 1,
            4 => {
                let raw = cols[3].trim();
                let c: i64 = raw
                    .parse()
                    .map_err(|_| Error::parse(origin, lineno, format!("count `{raw}` is not an integer")))?;
                if c <= 0 {
                    return Err(Error::parse(origin, lineno, format!("count must be positive, got {c}")));
                }
                c as u64
            }
            n => {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("expected 3 or 4 tab-separated columns, found {n}"),
                ))
            }
        };
        let (h, r, t) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
        if h.is_empty() || r.is_empty() || t.is_empty() {
            return Err(Error::parse(origin, lineno, "empty head, relation or tail"));
        }
        kg.add_named(h, r, t, count);
    }
    Ok(kg)
}

/// Train/valid/test partition over unique triples, with its own vocabularies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub entities: Vocabulary,
    pub relations: Vocabulary,
    pub train: CountedTripleSet,
    pub valid: CountedTripleSet,
    pub test: CountedTripleSet,
}

impl DatasetSplit {
    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    /// Union of train, valid and test.
    pub fn all(&self) -> CountedTripleSet {
        let mut all = self.train.clone();
        all.extend_from(&self.valid);
        all.extend_from(&self.test);
        all
    }

    /// Unique triples of train and valid, removed from rankings in the
    /// filtered evaluation setting.
    pub fn filter_set(&self) -> HashSet<Triple> {
        self.train.triples().chain(self.valid.triples()).copied().collect()
    }
}

/// Fractions of unique triples assigned to train and valid; test gets the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.8, valid: 0.1 }
    }
}

/// Result of withholding OOKB entities from a knowledge graph.
///
/// `d1` indexes entities as `d0`'s vocabulary followed by the OOKB entities in
/// the order given, so a session-1 model is the session-0 model with rows
/// appended.
#[derive(Debug, Clone)]
pub struct SessionSplit {
    pub d0: DatasetSplit,
    pub d1: DatasetSplit,
    /// Triples joining an OOKB entity to a known entity, in `d1` indices.
    pub insert_triples: CountedTripleSet,
    /// OOKB entities in `d1` indices (`d0.num_entities()..`).
    pub ookb: Vec<EntityId>,
}

impl SessionSplit {
    pub fn known_count(&self) -> usize {
        self.d0.num_entities()
    }
}

/// Splits `kg` into a session-0 dataset without the `ookb` entities and a
/// session-1 dataset that contains everything.
///
/// Each unique triple is assigned to train/valid/test once, by a seeded
/// shuffle of the whole graph, so the session-1 splits subsume session 0.
pub fn split_for_session(
    kg: &KnowledgeGraph,
    ookb: &[EntityId],
    ratios: SplitRatios,
    seed: u64,
) -> Result<SessionSplit> {
    let n = kg.entities.len();
    let mut is_ookb = vec![false; n];
    for &e in ookb {
        if e.index() >= n {
            return Err(Error::invalid(format!("OOKB entity {} is outside the vocabulary", e.0)));
        }
        if is_ookb[e.index()] {
            return Err(Error::invalid(format!("OOKB entity {} listed twice", e.0)));
        }
        is_ookb[e.index()] = true;
    }
    if !(0.0..=1.0).contains(&ratios.train) || ratios.valid < 0.0 || ratios.train + ratios.valid > 1.0 {
        return Err(Error::invalid("split ratios must be non-negative and sum to at most 1"));
    }

    // Session-0 vocabulary keeps the original order minus the OOKB entities.
    let mut remap = vec![u32::MAX; n];
    let mut d0_entities = Vocabulary::new();
    for i in 0..n {
        if !is_ookb[i] {
            remap[i] = d0_entities.intern(kg.entities.name(i)) as u32;
        }
    }
    if d0_entities.is_empty() && n > 0 {
        return Err(Error::invalid("OOKB set covers every entity; session 0 would be empty"));
    }
    let mut d1_entities = d0_entities.clone();
    let mut ookb_d1 = Vec::with_capacity(ookb.len());
    for &e in ookb {
        let j = d1_entities.intern(kg.entities.name(e.index()));
        remap[e.index()] = j as u32;
        ookb_d1.push(EntityId::from(j));
    }

    let mut unique: Vec<(Triple, u64)> = kg.triples.iter().map(|(t, c)| (*t, c)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    unique.shuffle(&mut rng);
    let total = unique.len();
    let n_train = (ratios.train * total as f64).round() as usize;
    let n_valid = ((ratios.valid * total as f64).round() as usize).min(total - n_train.min(total));

    let mut d0 = DatasetSplit {
        entities: d0_entities,
        relations: kg.relations.clone(),
        ..Default::default()
    };
    let mut d1 = DatasetSplit {
        entities: d1_entities,
        relations: kg.relations.clone(),
        ..Default::default()
    };
    let mut insert_triples = CountedTripleSet::new();

    for (pos, (t, c)) in unique.into_iter().enumerate() {
        let mapped = Triple {
            head: EntityId(remap[t.head.index()]),
            relation: t.relation,
            tail: EntityId(remap[t.tail.index()]),
        };
        let (h_new, t_new) = (is_ookb[t.head.index()], is_ookb[t.tail.index()]);
        let part = |s: &mut DatasetSplit| {
            if pos < n_train {
                s.train.add(mapped, c)
            } else if pos < n_train + n_valid {
                s.valid.add(mapped, c)
            } else {
                s.test.add(mapped, c)
            }
        };
        part(&mut d1);
        if !h_new && !t_new {
            part(&mut d0);
        } else if h_new != t_new {
            insert_triples.add(mapped, c);
        }
    }

    Ok(SessionSplit {
        d0,
        d1,
        insert_triples,
        ookb: ookb_d1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// Sign used inside the logistic loss: +1 for positives, −1 for negatives.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabeledExample {
    pub triple: Triple,
    pub label: Label,
}

impl LabeledExample {
    pub fn positive(triple: Triple) -> Self {
        LabeledExample {
            triple,
            label: Label::Positive,
        }
    }

    pub fn negative(triple: Triple) -> Self {
        LabeledExample {
            triple,
            label: Label::Negative,
        }
    }
}

const MAX_REJECTIONS: usize = 64;

/// Corrupts one endpoint of a positive triple, rejecting any corruption that
/// is a known training positive.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    known: HashSet<Triple>,
    num_entities: usize,
}

impl NegativeSampler {
    pub fn new(known: HashSet<Triple>, num_entities: usize) -> Self {
        NegativeSampler { known, num_entities }
    }

    pub fn for_split(split: &DatasetSplit) -> Self {
        Self::new(split.train.unique_set(), split.num_entities())
    }

    fn is_valid(&self, positive: &Triple, cand: &Triple) -> bool {
        cand != positive && !self.known.contains(cand)
    }

    fn corrupt(positive: &Triple, head_side: bool, e: EntityId) -> Triple {
        if head_side {
            Triple { head: e, ..*positive }
        } else {
            Triple { tail: e, ..*positive }
        }
    }

    /// Draws one negative. Uniform coin for the side, uniform entity for the
    /// replacement; after repeated rejections the valid corruptions are
    /// enumerated so degenerate graphs terminate.
    pub fn sample_one<R: Rng + ?Sized>(&self, positive: &Triple, rng: &mut R) -> Result<Triple> {
        if self.num_entities == 0 {
            return Err(Error::Sampling("empty entity vocabulary".into()));
        }
        for _ in 0..MAX_REJECTIONS {
            let head_side = rng.gen_bool(0.5);
            let e = EntityId::from(rng.gen_range(0..self.num_entities));
            let cand = Self::corrupt(positive, head_side, e);
            if self.is_valid(positive, &cand) {
                return Ok(cand);
            }
        }
        let valid: Vec<Triple> = [true, false]
            .into_iter()
            .flat_map(|side| (0..self.num_entities).map(move |i| Self::corrupt(positive, side, EntityId::from(i))))
            .filter(|c| self.is_valid(positive, c))
            .collect();
        valid
            .choose(rng)
            .copied()
            .ok_or_else(|| Error::Sampling(format!("no valid corruption of {positive}")))
    }

    pub fn sample<R: Rng + ?Sized>(&self, positive: &Triple, ratio: usize, rng: &mut R) -> Result<Vec<LabeledExample>> {
        (0..ratio)
            .map(|_| self.sample_one(positive, rng).map(LabeledExample::negative))
            .collect()
    }
}

/// `ratio` filtered negatives for `positive`, checked against `split.train`.
pub fn sample_negatives<R: Rng + ?Sized>(
    positive: &Triple,
    ratio: usize,
    split: &DatasetSplit,
    rng: &mut R,
) -> Result<Vec<LabeledExample>> {
    NegativeSampler::for_split(split).sample(positive, ratio, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(s: &str) -> Result<KnowledgeGraph> {
        parse_triples(BufReader::new(Cursor::new(s.to_owned())), Path::new("<mem>"))
    }

    #[test]
    fn parses_count_column() {
        let kg = parse("bowl\tatLocation\tcabinet\t22\n").unwrap();
        assert_eq!(kg.triples.len(), 1);
        assert_eq!(kg.triples.total(), 22);
        assert_eq!(kg.entities.names(), &["bowl", "cabinet"]);
    }

    #[test]
    fn empty_input() {
        let kg = parse("").unwrap();
        assert!(kg.triples.is_empty());
        assert!(kg.entities.is_empty());
        assert!(kg.relations.is_empty());
    }

    #[test]
    fn repeated_lines_aggregate() {
        let kg = parse("# comment\na\tr\tb\t3\n\na\tr\tb\t4\n").unwrap();
        assert_eq!(kg.triples.len(), 1);
        assert_eq!(kg.triples.total(), 7);
    }

    #[test]
    fn count_defaults_to_one() {
        let kg = parse("a\tr\tb\n").unwrap();
        assert_eq!(kg.triples.total(), 1);
    }

    #[test]
    fn malformed_lines_report_line_number() {
        match parse("a\tr\tb\t1\na\tr\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("a\tr\tb\t0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse("a\tr\tb\t-2\n").is_err());
        assert!(parse("a\tr\tb\tx\n").is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let kg = parse("a\tr\tb\t3\nb\ts\tc\t1\n").unwrap();
        let mut buf = Vec::new();
        kg.write_tsv(&mut buf).unwrap();
        let back = parse(&String::from_utf8(buf).unwrap()).unwrap();
        assert_eq!(back, kg);
    }

    fn two_triple_kg() -> KnowledgeGraph {
        let mut kg = KnowledgeGraph::new();
        kg.add_named("a", "r", "b", 1);
        kg.add_named("a", "r", "c", 1);
        kg
    }

    #[test]
    fn empty_ookb_gives_identical_sessions() {
        let kg = two_triple_kg();
        let s = split_for_session(&kg, &[], SplitRatios::default(), 3).unwrap();
        assert_eq!(s.d0, s.d1);
        assert!(s.insert_triples.is_empty());
    }

    #[test]
    fn withholding_one_entity() {
        let kg = two_triple_kg();
        let c = kg.entity_id("c").unwrap();
        let s = split_for_session(&kg, &[c], SplitRatios::default(), 3).unwrap();
        let d0 = s.d0.all();
        assert_eq!(d0.len(), 1);
        let (t, _) = d0.iter().next().unwrap();
        assert_eq!(s.d0.entities.name(t.head.index()), "a");
        assert_eq!(s.d0.entities.name(t.tail.index()), "b");
        assert_eq!(s.insert_triples.len(), 1);
        let (ins, _) = s.insert_triples.iter().next().unwrap();
        assert_eq!(s.d1.entities.name(ins.tail.index()), "c");
        assert_eq!(s.ookb, vec![EntityId(2)]);
        assert_eq!(s.d1.all().len(), 2);
    }

    #[test]
    fn ookb_covering_everything_is_rejected() {
        let kg = two_triple_kg();
        let all: Vec<EntityId> = (0..3).map(EntityId::from).collect();
        assert!(matches!(
            split_for_session(&kg, &all, SplitRatios::default(), 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn negatives_with_zero_ratio() {
        let kg = two_triple_kg();
        let s = split_for_session(&kg, &[], SplitRatios { train: 1.0, valid: 0.0 }, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = *s.d0.train.triples().next().unwrap();
        assert!(sample_negatives(&t, 0, &s.d0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn single_entity_cannot_be_corrupted() {
        let sampler = NegativeSampler::new([Triple::new(0usize, 0usize, 0usize)].into_iter().collect(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sampler.sample_one(&Triple::new(0usize, 0usize, 0usize), &mut rng),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn only_tail_corruptions_when_heads_are_all_positive() {
        // Entities 0,1,2. Every (x, r, 2) is a positive, so corrupting the
        // head of (0, r, 2) never yields a negative.
        let known: HashSet<Triple> = (0..3usize).map(|h| Triple::new(h, 0usize, 2usize)).collect();
        let sampler = NegativeSampler::new(known.clone(), 3);
        let pos = Triple::new(0usize, 0usize, 2usize);

        // Brute-force enumeration of every valid corruption.
        let mut oracle = HashSet::new();
        for e in 0..3usize {
            for cand in [Triple::new(e, 0usize, 2usize), Triple::new(0usize, 0usize, e)] {
                if cand != pos && !known.contains(&cand) {
                    oracle.insert(cand);
                }
            }
        }
        assert_eq!(
            oracle,
            [Triple::new(0usize, 0usize, 0usize), Triple::new(0usize, 0usize, 1usize)]
                .into_iter()
                .collect()
        );

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let negs = sampler.sample(&pos, 200, &mut rng).unwrap();
        assert_eq!(negs.len(), 200);
        for n in &negs {
            assert_eq!(n.label, Label::Negative);
            assert!(oracle.contains(&n.triple));
            assert_eq!(n.triple.head, pos.head);
        }
    }
}
