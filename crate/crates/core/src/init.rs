//! Initializers for out-of-knowledge-base (OOKB) entities.
//!
//! Semantic methods pick a set of indicator entities among the entities the
//! previous model already knows and place the new entity at the centroid of
//! their vectors:
//!
//! - **ES** ranks known entities by word-vector cosine to the new entity's name.
//! - **RS** maps each known endpoint of an insert triple through the relation
//!   (or its inverse, when the new entity is the head), averages the results
//!   per relation, and ranks known entities by summed cosine to those centroids.
//! - **ERS** runs RS over a preliminary ES candidate set.
//!
//! The baselines draw coordinates uniformly: `±6/sqrt(d)` (Xavier) or within
//! each dimension's range over the known rows (informed uniform).

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{CountedTripleSet, EntityId, RelationId};
use crate::model::{xavier_bound, EmbeddingModel};
use crate::wordvec::{cosine, WordVectorTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    Xavier,
    InformedUniform,
    Es,
    Rs,
    Ers,
}

impl InitMethod {
    pub const ALL: [InitMethod; 5] = [
        InitMethod::Xavier,
        InitMethod::InformedUniform,
        InitMethod::Es,
        InitMethod::Rs,
        InitMethod::Ers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InitMethod::Xavier => "xavier",
            InitMethod::InformedUniform => "informed_uniform",
            InitMethod::Es => "es",
            InitMethod::Rs => "rs",
            InitMethod::Ers => "ers",
        }
    }

    pub fn is_semantic(self) -> bool {
        matches!(self, InitMethod::Es | InitMethod::Rs | InitMethod::Ers)
    }
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xavier" => Ok(InitMethod::Xavier),
            "informed_uniform" | "informed-uniform" | "iu" => Ok(InitMethod::InformedUniform),
            "es" => Ok(InitMethod::Es),
            "rs" => Ok(InitMethod::Rs),
            "ers" => Ok(InitMethod::Ers),
            other => Err(Error::invalid(format!(
                "unknown initialization method `{other}` (expected xavier, informed_uniform, es, rs or ers)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    pub method: InitMethod,
    pub k_es: usize,
    pub k_rs: usize,
    pub k_ers: usize,
    pub k_ers_preliminary: usize,
    pub seed: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            method: InitMethod::Es,
            k_es: 8,
            k_rs: 18,
            k_ers: 9,
            k_ers_preliminary: 30,
            seed: 0,
        }
    }
}

impl InitConfig {
    pub fn with_method(method: InitMethod) -> Self {
        InitConfig {
            method,
            ..Default::default()
        }
    }

    /// Sets the indicator-set size used by `method`.
    pub fn with_k(mut self, method: InitMethod, k: usize) -> Self {
        match method {
            InitMethod::Es => self.k_es = k,
            InitMethod::Rs => self.k_rs = k,
            InitMethod::Ers => {
                self.k_ers = k;
                self.k_ers_preliminary = self.k_ers_preliminary.max(k);
            }
            _ => {}
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_es == 0 || self.k_rs == 0 || self.k_ers == 0 {
            return Err(Error::Config("indicator set sizes must be positive".into()));
        }
        if self.k_ers > self.k_ers_preliminary {
            return Err(Error::Config(format!(
                "k_ers ({}) exceeds the ERS preliminary set size ({})",
                self.k_ers, self.k_ers_preliminary
            )));
        }
        Ok(())
    }
}

/// Indicator entities with the score that selected them, best first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSet {
    pub entries: Vec<(EntityId, f64)>,
}

impl IndicatorSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.entries.iter().map(|(e, _)| *e)
    }
}

/// Top `k` by score, ties to the lower entity index.
fn top_k(mut scored: Vec<(EntityId, f64)>, k: usize) -> IndicatorSet {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    IndicatorSet { entries: scored }
}

/// Mean of the indicated entity rows.
pub fn centroid_init(indicators: &IndicatorSet, model: &EmbeddingModel) -> Result<Vec<f64>> {
    if indicators.is_empty() {
        return Err(Error::invalid("centroid of an empty indicator set"));
    }
    let mut acc = vec![0.0; model.dim()];
    for e in indicators.entities() {
        if e.index() >= model.num_entities() {
            return Err(Error::invalid(format!("indicator entity {} not in model", e.0)));
        }
        for (a, x) in acc.iter_mut().zip(model.entity(e)) {
            *a += x;
        }
    }
    let n = indicators.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Word vectors of known entities, resolved once and reused across queries.
#[derive(Debug, Clone)]
pub struct KnownWordVectors {
    vectors: Vec<(EntityId, Vec<f64>)>,
    missing: usize,
}

impl KnownWordVectors {
    pub fn resolve<'a>(known: impl IntoIterator<Item = (EntityId, &'a str)>, table: &WordVectorTable) -> Self {
        let mut vectors = Vec::new();
        let mut missing = 0;
        for (e, name) in known {
            match table.entity_vector(name) {
                Some(v) => vectors.push((e, v)),
                None => missing += 1,
            }
        }
        KnownWordVectors { vectors, missing }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Known entities without a word vector.
    pub fn missing(&self) -> usize {
        self.missing
    }
}

/// ES indicators: the `k` known entities whose word vectors are closest to
/// the OOKB name's. `None` when the OOKB name has no word vector.
pub fn es_indicators(ookb_name: &str, known: &KnownWordVectors, table: &WordVectorTable, k: usize) -> Option<IndicatorSet> {
    let query = table.entity_vector(ookb_name)?;
    if known.len() < k {
        log::warn!(
            "ES for `{ookb_name}`: only {} known entities have word vectors, wanted {k}",
            known.len()
        );
    }
    let scored = known
        .vectors
        .iter()
        .map(|(e, v)| (*e, v.iter().zip(&query).map(|(a, b)| a * b).sum::<f64>()))
        .collect();
    Some(top_k(scored, k))
}

/// Per-relation mean of the resultant vectors for one OOKB entity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultantCentroids {
    /// Relation → (centroid, total observation weight).
    pub by_relation: BTreeMap<RelationId, (Vec<f64>, u64)>,
    /// Insert triples skipped because the relation map was singular.
    pub skipped: usize,
}

impl ResultantCentroids {
    pub fn is_empty(&self) -> bool {
        self.by_relation.is_empty()
    }
}

/// Resultant vectors of the insert triples touching `ookb`.
///
/// For `(h, r, ookb)` the resultant is `v_h^T W_r`; for `(ookb, r, t)` it is
/// `v_t^T W_r^{-1}`. Triples are weighted by observation count. Triples whose
/// other endpoint is not a known row of `model`, and self-loops, are ignored.
pub fn rs_resultants(model: &EmbeddingModel, insert_triples: &CountedTripleSet, ookb: EntityId) -> ResultantCentroids {
    let known = model.num_entities();
    let mut sums: BTreeMap<RelationId, (Vec<f64>, u64)> = BTreeMap::new();
    let mut skipped = 0;
    for (t, count) in insert_triples.iter() {
        let alpha = if t.tail == ookb && t.head != ookb && t.head.index() < known {
            Ok(model.map_row(model.entity(t.head), t.relation))
        } else if t.head == ookb && t.tail != ookb && t.tail.index() < known {
            model.map_row_inverse(model.entity(t.tail), t.relation)
        } else {
            continue;
        };
        match alpha {
            Ok(alpha) => {
                let entry = sums
                    .entry(t.relation)
                    .or_insert_with(|| (vec![0.0; model.dim()], 0));
                let w = count as f64;
                for (s, a) in entry.0.iter_mut().zip(&alpha) {
                    *s += w * a;
                }
                entry.1 += count;
            }
            Err(e) => {
                log::warn!("skipping insert triple {t}: {e}");
                skipped += 1;
            }
        }
    }
    for (sum, w) in sums.values_mut() {
        let w = *w as f64;
        sum.iter_mut().for_each(|x| *x /= w);
    }
    ResultantCentroids {
        by_relation: sums,
        skipped,
    }
}

/// RS score of one candidate: summed cosine to each relation centroid. A zero
/// vector contributes zero.
pub fn rs_score(vector: &[f64], centroids: &ResultantCentroids) -> f64 {
    centroids
        .by_relation
        .values()
        .map(|(c, _)| cosine(vector, c).unwrap_or(0.0))
        .sum()
}

/// RS indicators among `candidates`. `None` when there are no centroids.
pub fn rs_indicators(
    model: &EmbeddingModel,
    centroids: &ResultantCentroids,
    candidates: &[EntityId],
    k: usize,
) -> Option<IndicatorSet> {
    if centroids.is_empty() {
        return None;
    }
    let scored = candidates
        .iter()
        .map(|&e| (e, rs_score(model.entity(e), centroids)))
        .collect();
    Some(top_k(scored, k))
}

/// Coordinates uniform in `±6/sqrt(dim)`.
pub fn xavier_init<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let b = xavier_bound(dim);
    (0..dim).map(|_| rng.gen_range(-b..=b)).collect()
}

/// Per-dimension `[min, max]` over the first `known` rows.
pub fn known_ranges(model: &EmbeddingModel, known: usize) -> Vec<(f64, f64)> {
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); model.dim()];
    for e in 0..known {
        for (r, &x) in ranges.iter_mut().zip(model.entity(EntityId::from(e))) {
            r.0 = r.0.min(x);
            r.1 = r.1.max(x);
        }
    }
    ranges
}

/// Coordinate `j` uniform in `[min_j, max_j]` over the given ranges.
pub fn iu_init<R: Rng + ?Sized>(ranges: &[(f64, f64)], rng: &mut R) -> Vec<f64> {
    ranges
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
        .collect()
}

/// One OOKB entity to insert.
#[derive(Debug, Clone, PartialEq)]
pub struct OokbEntity {
    pub name: String,
}

/// What happened to one OOKB entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitRecord {
    pub entity: String,
    pub requested: InitMethod,
    pub used: InitMethod,
    pub fallbacks: Vec<String>,
    /// Indicator entity names with their selection scores.
    pub indicators: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InitReport {
    pub records: Vec<InitRecord>,
}

impl InitReport {
    pub fn fallback_count(&self) -> usize {
        self.records.iter().filter(|r| r.requested != r.used).count()
    }

    /// Tab-separated: `entity requested used fallbacks indicators`, where
    /// indicators are `name:score` joined by `;`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "entity\trequested\tused\tfallbacks\tindicators")?;
        for r in &self.records {
            let ind: Vec<String> = r.indicators.iter().map(|(n, s)| format!("{n}:{s:.6}")).collect();
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                r.entity,
                r.requested,
                r.used,
                r.fallbacks.join(";"),
                ind.join(";")
            )?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_tsv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Builds the session-`n` model skeleton from the session-`n-1` model.
///
/// Known rows and relation maps are copied unchanged and each OOKB entity is
/// appended as a new row, in the order given; its id in the result is
/// `previous.num_entities() + position`. `insert_triples` must use those ids.
/// Every OOKB entity is initialized against the previously known entities
/// only, so no new entity serves as another's indicator.
pub fn initialize_ookb(
    previous: &EmbeddingModel,
    cfg: &InitConfig,
    ookb: &[OokbEntity],
    insert_triples: &CountedTripleSet,
    table: Option<&WordVectorTable>,
) -> Result<(EmbeddingModel, InitReport)> {
    cfg.validate()?;
    let known = previous.num_entities();
    if known == 0 && !ookb.is_empty() {
        return Err(Error::invalid("cannot initialize OOKB entities against an empty model"));
    }
    for o in ookb {
        if previous.entity_names().get(&o.name).is_some() {
            return Err(Error::invalid(format!("OOKB entity `{}` is already known", o.name)));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ranges = known_ranges(previous, known);
    let known_ids: Vec<EntityId> = (0..known).map(EntityId::from).collect();
    let known_words = table.map(|t| {
        KnownWordVectors::resolve(
            known_ids.iter().map(|&e| (e, previous.entity_names().name(e.index()))),
            t,
        )
    });

    let mut next = previous.clone();
    let mut report = InitReport::default();
    for (pos, o) in ookb.iter().enumerate() {
        let id = EntityId::from(known + pos);
        let mut fallbacks = Vec::new();
        let es = |k: usize, fallbacks: &mut Vec<String>| -> Option<IndicatorSet> {
            match (table, &known_words) {
                (Some(t), Some(kw)) => {
                    let r = es_indicators(&o.name, kw, t, k);
                    if r.is_none() {
                        fallbacks.push("no word vector for entity name".to_owned());
                    }
                    r.filter(|s| !s.is_empty())
                }
                _ => {
                    fallbacks.push("no word-vector table".to_owned());
                    None
                }
            }
        };
        let rs = |candidates: &[EntityId], k: usize, fallbacks: &mut Vec<String>| -> Option<IndicatorSet> {
            let centroids = rs_resultants(previous, insert_triples, id);
            let r = rs_indicators(previous, &centroids, candidates, k);
            if r.is_none() {
                fallbacks.push("no usable insert triples".to_owned());
            }
            r
        };

        let chosen: Option<(InitMethod, IndicatorSet)> = match cfg.method {
            InitMethod::Xavier | InitMethod::InformedUniform => None,
            InitMethod::Es => es(cfg.k_es, &mut fallbacks).map(|s| (InitMethod::Es, s)),
            InitMethod::Rs => rs(&known_ids, cfg.k_rs, &mut fallbacks)
                .map(|s| (InitMethod::Rs, s))
                .or_else(|| es(cfg.k_es, &mut fallbacks).map(|s| (InitMethod::Es, s))),
            InitMethod::Ers => match es(cfg.k_ers_preliminary, &mut fallbacks) {
                Some(pre) => {
                    let cands: Vec<EntityId> = pre.entities().collect();
                    match rs(&cands, cfg.k_ers, &mut fallbacks) {
                        Some(s) => Some((InitMethod::Ers, s)),
                        None => Some((InitMethod::Es, top_k(pre.entries, cfg.k_es))),
                    }
                }
                None => None,
            },
        };

        let (used, vector, indicators) = match (cfg.method, chosen) {
            (_, Some((m, set))) => {
                let v = centroid_init(&set, previous)?;
                let names = set
                    .entries
                    .iter()
                    .map(|(e, s)| (previous.entity_names().name(e.index()).to_owned(), *s))
                    .collect();
                (m, v, names)
            }
            (InitMethod::Xavier, None) => (InitMethod::Xavier, xavier_init(previous.dim(), &mut rng), Vec::new()),
            (_, None) => (InitMethod::InformedUniform, iu_init(&ranges, &mut rng), Vec::new()),
        };
        if used != cfg.method {
            log::info!(
                "OOKB `{}`: {} fell back to {} ({})",
                o.name,
                cfg.method,
                used,
                fallbacks.join("; ")
            );
        }
        next.push_entity(&o.name, &vector)?;
        report.records.push(InitRecord {
            entity: o.name.clone(),
            requested: cfg.method,
            used,
            fallbacks,
            indicators,
        });
    }
    Ok((next, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Triple, Vocabulary};
    use crate::model::BlockLayout;

    fn vocab(prefix: &str, n: usize) -> Vocabulary {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn model_with_rows(rows: &[&[f64]]) -> EmbeddingModel {
        let d = rows[0].len();
        let mut m = EmbeddingModel::zeros(
            BlockLayout::new(d, d % 2).unwrap(),
            vocab("e", rows.len()),
            vocab("r", 1),
        );
        for (i, r) in rows.iter().enumerate() {
            m.entity_mut(EntityId::from(i)).copy_from_slice(r);
        }
        m
    }

    #[test]
    fn centroid_cases() {
        let m = model_with_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let one = IndicatorSet { entries: vec![(EntityId(1), 0.0)] };
        assert_eq!(centroid_init(&one, &m).unwrap(), vec![0.0, 1.0]);
        let both = IndicatorSet {
            entries: vec![(EntityId(0), 0.0), (EntityId(1), 0.0)],
        };
        assert_eq!(centroid_init(&both, &m).unwrap(), vec![0.5, 0.5]);
        assert!(centroid_init(&IndicatorSet::default(), &m).is_err());
    }

    #[test]
    fn top_k_breaks_ties_by_index() {
        let s = top_k(vec![(EntityId(3), 1.0), (EntityId(1), 1.0), (EntityId(2), 2.0)], 2);
        assert_eq!(s.entries, vec![(EntityId(2), 2.0), (EntityId(1), 1.0)]);
    }

    #[test]
    fn method_names_parse() {
        for m in InitMethod::ALL {
            assert_eq!(m.name().parse::<InitMethod>().unwrap(), m);
        }
        assert_eq!("IU".parse::<InitMethod>().unwrap(), InitMethod::InformedUniform);
        assert!("bogus".parse::<InitMethod>().is_err());
    }

    #[test]
    fn ers_preliminary_must_cover_k() {
        let cfg = InitConfig {
            k_ers: 31,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(InitConfig::default().with_k(InitMethod::Ers, 32).validate().is_ok());
    }

    #[test]
    fn identity_map_resultants() {
        let m = model_with_rows(&[&[1.0, 2.0], &[3.0, -1.0]]);
        let ookb = EntityId(2);
        let tail_new: CountedTripleSet = [(Triple::new(0usize, 0usize, 2usize), 1)].into_iter().collect();
        let c = rs_resultants(&m, &tail_new, ookb);
        assert_eq!(c.by_relation[&RelationId(0)].0, vec![1.0, 2.0]);
        let head_new: CountedTripleSet = [(Triple::new(2usize, 0usize, 1usize), 1)].into_iter().collect();
        let c = rs_resultants(&m, &head_new, ookb);
        assert_eq!(c.by_relation[&RelationId(0)].0, vec![3.0, -1.0]);
    }

    #[test]
    fn resultant_centroid_weights_by_count() {
        let m = model_with_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let ins: CountedTripleSet = [
            (Triple::new(0usize, 0usize, 2usize), 3),
            (Triple::new(1usize, 0usize, 2usize), 1),
        ]
        .into_iter()
        .collect();
        let c = rs_resultants(&m, &ins, EntityId(2));
        let (v, w) = &c.by_relation[&RelationId(0)];
        assert_eq!(*w, 4);
        assert_eq!(v, &vec![0.75, 0.25]);
    }

    #[test]
    fn singular_relation_is_skipped() {
        let mut m = model_with_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        m.relation_mut(RelationId(0)).copy_from_slice(&[0.0, 0.0]);
        let ins: CountedTripleSet = [(Triple::new(2usize, 0usize, 1usize), 1)].into_iter().collect();
        let c = rs_resultants(&m, &ins, EntityId(2));
        assert!(c.is_empty());
        assert_eq!(c.skipped, 1);
        assert!(rs_indicators(&m, &c, &[EntityId(0)], 1).is_none());
    }

    #[test]
    fn rs_prefers_candidate_aligned_with_centroid() {
        let m = model_with_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.7, 0.7]]);
        let ins: CountedTripleSet = [(Triple::new(1usize, 0usize, 3usize), 1)].into_iter().collect();
        let c = rs_resultants(&m, &ins, EntityId(3));
        let all = [EntityId(0), EntityId(1), EntityId(2)];
        let s = rs_indicators(&m, &c, &all, 3).unwrap();
        assert_eq!(s.entries[0].0, EntityId(1));
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn es_exact_match_ranks_first() {
        let mut t = WordVectorTable::new(3);
        t.insert("cup", &[1.0, 0.1, 0.0]).unwrap();
        t.insert("plate", &[0.0, 1.0, 0.0]).unwrap();
        t.insert("sofa", &[0.0, 0.0, 1.0]).unwrap();
        t.insert("mug", &[1.0, 0.1, 0.0]).unwrap();
        let known = KnownWordVectors::resolve(
            [(EntityId(0), "plate"), (EntityId(1), "sofa"), (EntityId(2), "cup")],
            &t,
        );
        let s = es_indicators("mug", &known, &t, 2).unwrap();
        assert_eq!(s.entries[0].0, EntityId(2));
        assert!((s.entries[0].1 - 1.0).abs() < 1e-12);
        let all = es_indicators("mug", &known, &t, 3).unwrap();
        assert_eq!(all.len(), 3);
        assert!(all.entries.windows(2).all(|w| w[0].1 >= w[1].1));
        assert!(es_indicators("spaceship", &known, &t, 2).is_none());
        // Asking for more than exists returns what is available.
        assert_eq!(es_indicators("mug", &known, &t, 10).unwrap().len(), 3);
    }

    #[test]
    fn empty_ookb_leaves_model_unchanged() {
        let m = model_with_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let (next, report) = initialize_ookb(&m, &InitConfig::default(), &[], &CountedTripleSet::new(), None).unwrap();
        assert_eq!(next, m);
        assert!(report.records.is_empty());
    }

    #[test]
    fn degenerate_iu_range_copies_row() {
        let m = model_with_rows(&[&[0.3, -0.2], &[0.3, -0.2]]);
        let cfg = InitConfig::with_method(InitMethod::InformedUniform);
        let (next, _) = initialize_ookb(
            &m,
            &cfg,
            &[OokbEntity { name: "x".into() }],
            &CountedTripleSet::new(),
            None,
        )
        .unwrap();
        assert_eq!(next.entity(EntityId(2)), &[0.3, -0.2]);
    }

    #[test]
    fn fallback_chain_without_inputs() {
        let m = model_with_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        for method in [InitMethod::Es, InitMethod::Rs, InitMethod::Ers] {
            let (next, report) = initialize_ookb(
                &m,
                &InitConfig::with_method(method),
                &[OokbEntity { name: "x".into() }],
                &CountedTripleSet::new(),
                None,
            )
            .unwrap();
            assert_eq!(report.records[0].used, InitMethod::InformedUniform);
            assert!(!report.records[0].fallbacks.is_empty());
            let v = next.entity(EntityId(2));
            assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn rs_falls_back_to_es_when_word_vectors_exist() {
        let m = model_with_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let mut t = WordVectorTable::new(2);
        t.insert("e0", &[1.0, 0.0]).unwrap();
        t.insert("e1", &[0.0, 1.0]).unwrap();
        t.insert("x", &[0.1, 1.0]).unwrap();
        let cfg = InitConfig {
            method: InitMethod::Rs,
            k_es: 1,
            ..Default::default()
        };
        let (next, report) = initialize_ookb(
            &m,
            &cfg,
            &[OokbEntity { name: "x".into() }],
            &CountedTripleSet::new(),
            Some(&t),
        )
        .unwrap();
        assert_eq!(report.records[0].used, InitMethod::Es);
        assert_eq!(next.entity(EntityId(2)), &[0.0, 1.0]);
    }

    #[test]
    fn report_tsv_has_one_row_per_entity() {
        let m = model_with_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let (_, report) = initialize_ookb(
            &m,
            &InitConfig::with_method(InitMethod::Xavier),
            &[OokbEntity { name: "x".into() }, OokbEntity { name: "y".into() }],
            &CountedTripleSet::new(),
            None,
        )
        .unwrap();
        let mut buf = Vec::new();
        report.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn already_known_name_is_rejected() {
        let m = model_with_rows(&[&[1.0, 0.0]]);
        assert!(initialize_ookb(
            &m,
            &InitConfig::default(),
            &[OokbEntity { name: "e0".into() }],
            &CountedTripleSet::new(),
            None
        )
        .is_err());
    }
}
