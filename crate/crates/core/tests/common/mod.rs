//! Independent reference implementations used by the oracle and acceptance
//! tests. Nothing here calls the library's scoring, ranking or inversion
//! code; dense linear algebra goes through nalgebra.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use isi::kg::{CountedTripleSet, DatasetSplit, EntityId, RelationId, Triple, Vocabulary};
use isi::model::{BlockLayout, EmbeddingModel};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Model with entity and relation parameters uniform in `[-1, 1]`.
pub fn random_model<R: Rng>(rng: &mut R, dim: usize, scalars: usize, entities: usize, relations: usize) -> EmbeddingModel {
    let layout = BlockLayout::new(dim, scalars).unwrap();
    let ev: Vocabulary = (0..entities).map(|i| format!("e{i}")).collect();
    let rv: Vocabulary = (0..relations).map(|i| format!("r{i}")).collect();
    let mut m = EmbeddingModel::zeros(layout, ev, rv);
    for e in 0..entities {
        for x in m.entity_mut(EntityId::from(e)) {
            *x = rng.gen_range(-1.0..1.0);
        }
    }
    for r in 0..relations {
        for x in m.relation_mut(RelationId::from(r)) {
            *x = rng.gen_range(-1.0..1.0);
        }
    }
    m
}

/// Dense `W_r`: the first `scalars` diagonal entries, then 2x2 blocks
/// `[[a, -c], [c, a]]` from consecutive parameter pairs.
pub fn dense_relation(params: &[f64], scalars: usize) -> DMatrix<f64> {
    let d = params.len();
    let mut w = DMatrix::zeros(d, d);
    for i in 0..scalars {
        w[(i, i)] = params[i];
    }
    let mut i = scalars;
    while i + 1 < d {
        let (a, c) = (params[i], params[i + 1]);
        w[(i, i)] = a;
        w[(i, i + 1)] = -c;
        w[(i + 1, i)] = c;
        w[(i + 1, i + 1)] = a;
        i += 2;
    }
    w
}

pub fn dense_score(model: &EmbeddingModel, h: EntityId, r: RelationId, t: EntityId) -> f64 {
    let w = dense_relation(model.relation(r), model.layout().scalars);
    let vh = DVector::from_column_slice(model.entity(h));
    let vt = DVector::from_column_slice(model.entity(t));
    (vh.transpose() * w * vt)[(0, 0)]
}

/// Row vector `v^T W` through the dense matrix.
pub fn dense_row_times(v: &[f64], w: &DMatrix<f64>) -> Vec<f64> {
    let row = DVector::from_column_slice(v).transpose() * w;
    row.iter().copied().collect()
}

/// Filtered rank by sorting: drop filtered candidates other than the
/// target, sort by descending score, and average the 1-based positions of
/// every candidate scoring exactly the target's score.
pub fn brute_force_rank(scores: &[f64], target: usize, filtered: impl Fn(usize) -> bool) -> f64 {
    let mut kept: Vec<f64> = (0..scores.len())
        .filter(|&i| i == target || !filtered(i))
        .map(|i| scores[i])
        .collect();
    kept.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let st = scores[target];
    let positions: Vec<usize> = kept
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == st)
        .map(|(p, _)| p + 1)
        .collect();
    positions.iter().sum::<usize>() as f64 / positions.len() as f64
}

/// Ground-truth rank by sorting the observed completions of a query by
/// count (filtered like the predictions); ties share the best position.
pub fn brute_force_ground_truth(completions: &[(usize, u64)], target: usize, filtered: impl Fn(usize) -> bool) -> usize {
    let mut kept: Vec<(usize, u64)> = completions
        .iter()
        .copied()
        .filter(|&(e, _)| e == target || !filtered(e))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1));
    let tc = kept.iter().find(|c| c.0 == target).unwrap().1;
    kept.iter().position(|c| c.1 == tc).unwrap() + 1
}

/// One (query, answer) evaluation computed the slow way.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleQuery {
    pub ground_truth: usize,
    pub predicted: f64,
    pub weight: f64,
}

/// Count-weighted filtered MRR* over the test triples of `split` with
/// ground truth from `full`, visiting test triples in the split's order and
/// the tail query before the head query.
pub fn brute_force_mrr_star(model: &EmbeddingModel, split: &DatasetSplit, full: &CountedTripleSet) -> (Option<f64>, Vec<OracleQuery>) {
    let n = model.num_entities();
    let filter: HashSet<Triple> = split.train.triples().chain(split.valid.triples()).copied().collect();
    let mut out = Vec::new();
    for (t, count) in split.test.iter() {
        let r = t.relation;
        // tail query
        let tail_scores: Vec<f64> = (0..n).map(|e| dense_score(model, t.head, r, EntityId::from(e))).collect();
        let tail_comps: Vec<(usize, u64)> = full
            .iter()
            .filter(|(x, _)| x.head == t.head && x.relation == r)
            .map(|(x, c)| (x.tail.index(), c))
            .collect();
        let tail_filtered = |e: usize| filter.contains(&Triple::new(t.head, r, EntityId::from(e)));
        out.push(OracleQuery {
            ground_truth: brute_force_ground_truth(&tail_comps, t.tail.index(), tail_filtered),
            predicted: brute_force_rank(&tail_scores, t.tail.index(), tail_filtered),
            weight: count as f64,
        });
        // head query
        let head_scores: Vec<f64> = (0..n).map(|e| dense_score(model, EntityId::from(e), r, t.tail)).collect();
        let head_comps: Vec<(usize, u64)> = full
            .iter()
            .filter(|(x, _)| x.tail == t.tail && x.relation == r)
            .map(|(x, c)| (x.head.index(), c))
            .collect();
        let head_filtered = |e: usize| filter.contains(&Triple::new(EntityId::from(e), r, t.tail));
        out.push(OracleQuery {
            ground_truth: brute_force_ground_truth(&head_comps, t.head.index(), head_filtered),
            predicted: brute_force_rank(&head_scores, t.head.index(), head_filtered),
            weight: count as f64,
        });
    }
    if out.is_empty() {
        return (None, out);
    }
    let num: f64 = out
        .iter()
        .map(|q| q.weight * (1.0 / ((q.ground_truth as f64 - q.predicted).abs() + 1.0)))
        .sum();
    let den: f64 = out.iter().map(|q| q.weight).sum();
    (Some(num / den), out)
}

/// Random graph over `entities` entities and `relations` relations with
/// counts in `1..=max_count`, split into train/valid/test by a coin per
/// unique triple. Test is never empty.
pub fn random_split<R: Rng>(rng: &mut R, entities: usize, relations: usize, triples: usize, max_count: u64) -> (DatasetSplit, CountedTripleSet) {
    let mut seen: HashMap<Triple, u64> = HashMap::new();
    while seen.len() < triples {
        let t = Triple::new(
            rng.gen_range(0..entities),
            rng.gen_range(0..relations),
            rng.gen_range(0..entities),
        );
        seen.entry(t).or_insert_with(|| rng.gen_range(1..=max_count));
    }
    let mut keys: Vec<Triple> = seen.keys().copied().collect();
    keys.sort();
    let mut split = DatasetSplit {
        entities: (0..entities).map(|i| format!("e{i}")).collect(),
        relations: (0..relations).map(|i| format!("r{i}")).collect(),
        ..Default::default()
    };
    for (i, t) in keys.iter().enumerate() {
        let c = seen[t];
        let u: f64 = rng.gen();
        if i == 0 || u < 0.3 {
            split.test.add(*t, c);
        } else if u < 0.4 {
            split.valid.add(*t, c);
        } else {
            split.train.add(*t, c);
        }
    }
    let full = split.all();
    (split, full)
}

/// Per-dimension `[min, max]` over the first `known` entity rows, computed
/// with an explicit fold.
pub fn coordinate_ranges(model: &EmbeddingModel, known: usize) -> Vec<(f64, f64)> {
    (0..model.dim())
        .map(|j| {
            (0..known)
                .map(|e| model.entity(EntityId::from(e))[j])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
        })
        .collect()
}

pub fn within_ranges(v: &[f64], ranges: &[(f64, f64)], slack: f64) -> bool {
    v.iter()
        .zip(ranges)
        .all(|(x, (lo, hi))| *x >= lo - slack && *x <= hi + slack)
}
