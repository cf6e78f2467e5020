//! Ranking evaluation with count-derived ground truth.
//!
//! Every test triple yields a tail query `(h, r, ?)` and a head query
//! `(?, r, t)`. The ground-truth rank of the held-out answer comes from how
//! often each completion of the query was observed; the predicted rank comes
//! from model scores. Both rankings are filtered: other completions that are
//! train/valid positives are dropped before ranking.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{CountedTripleSet, DatasetSplit, EntityId, RelationId, Triple};
use crate::model::EmbeddingModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Query {
    /// `(head, relation, ?)`
    Tail { head: EntityId, relation: RelationId },
    /// `(?, relation, tail)`
    Head { relation: RelationId, tail: EntityId },
}

impl Query {
    pub fn relation(&self) -> RelationId {
        match *self {
            Query::Tail { relation, .. } | Query::Head { relation, .. } => relation,
        }
    }

    pub fn anchor(&self) -> EntityId {
        match *self {
            Query::Tail { head, .. } => head,
            Query::Head { tail, .. } => tail,
        }
    }

    /// The triple formed by answering the query with `candidate`.
    pub fn complete(&self, candidate: EntityId) -> Triple {
        match *self {
            Query::Tail { head, relation } => Triple {
                head,
                relation,
                tail: candidate,
            },
            Query::Head { relation, tail } => Triple {
                head: candidate,
                relation,
                tail,
            },
        }
    }

    /// Tail and head queries that `t` answers.
    pub fn pair_for(t: &Triple) -> [(Query, EntityId); 2] {
        [
            (
                Query::Tail {
                    head: t.head,
                    relation: t.relation,
                },
                t.tail,
            ),
            (
                Query::Head {
                    relation: t.relation,
                    tail: t.tail,
                },
                t.head,
            ),
        ]
    }
}

/// 1-based competition ranks (1, 2, 2, 4) for values sorted best-first by
/// `better`; equal values share a rank.
fn competition_ranks(sorted_counts: &[u64]) -> Vec<usize> {
    let mut ranks = Vec::with_capacity(sorted_counts.len());
    for (i, c) in sorted_counts.iter().enumerate() {
        if i > 0 && sorted_counts[i - 1] == *c {
            ranks.push(ranks[i - 1]);
        } else {
            ranks.push(i + 1);
        }
    }
    ranks
}

/// Ground-truth ranks of a query's observed completions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRanking {
    /// `(candidate, count, rank)` sorted by rank, then entity index.
    pub entries: Vec<(EntityId, u64, usize)>,
}

impl GroundTruthRanking {
    pub fn from_counts(mut completions: Vec<(EntityId, u64)>) -> Self {
        completions.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let counts: Vec<u64> = completions.iter().map(|c| c.1).collect();
        let ranks = competition_ranks(&counts);
        GroundTruthRanking {
            entries: completions
                .into_iter()
                .zip(ranks)
                .map(|((e, c), r)| (e, c, r))
                .collect(),
        }
    }

    pub fn rank_of(&self, e: EntityId) -> Option<usize> {
        self.entries.iter().find(|x| x.0 == e).map(|x| x.2)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Ranks every observed completion of `query` by descending count.
pub fn ground_truth_ranks(full: &CountedTripleSet, query: &Query) -> GroundTruthRanking {
    let completions = full
        .iter()
        .filter_map(|(t, c)| match *query {
            Query::Tail { head, relation } if t.head == head && t.relation == relation => Some((t.tail, c)),
            Query::Head { relation, tail } if t.tail == tail && t.relation == relation => Some((t.head, c)),
            _ => None,
        })
        .collect();
    GroundTruthRanking::from_counts(completions)
}

/// Index from query to its observed completions.
#[derive(Debug, Clone, Default)]
pub struct QueryIndex {
    completions: HashMap<Query, Vec<(EntityId, u64)>>,
}

impl QueryIndex {
    pub fn build(full: &CountedTripleSet) -> Self {
        let mut completions: HashMap<Query, Vec<(EntityId, u64)>> = HashMap::new();
        for (t, c) in full.iter() {
            for (q, ans) in Query::pair_for(t) {
                completions.entry(q).or_default().push((ans, c));
            }
        }
        QueryIndex { completions }
    }

    pub fn completions(&self, q: &Query) -> &[(EntityId, u64)] {
        self.completions.get(q).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Ground-truth rank of `target` after dropping every other completion
    /// that is a filtered positive. `None` if `target` is not a completion.
    pub fn filtered_rank(&self, q: &Query, target: EntityId, filter: &HashSet<Triple>) -> Option<usize> {
        let comps = self.completions(q);
        let target_count = comps.iter().find(|c| c.0 == target)?.1;
        let better = comps
            .iter()
            .filter(|(e, c)| *e != target && *c > target_count && !filter.contains(&q.complete(*e)))
            .count();
        Some(better + 1)
    }
}

/// Predicted rank of `target` among `scores`, skipping candidates for which
/// `excluded` is true (except the target). Ties count half: the target
/// takes the mean of the positions it shares.
pub fn rank_among(scores: &[f64], target: EntityId, mut excluded: impl FnMut(EntityId) -> bool) -> f64 {
    let st = scores[target.index()];
    let mut higher = 0usize;
    let mut ties = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        let e = EntityId::from(i);
        if e == target || excluded(e) {
            continue;
        }
        if s > st {
            higher += 1;
        } else if s == st {
            ties += 1;
        }
    }
    1.0 + higher as f64 + ties as f64 / 2.0
}

/// Scores of every entity as the answer to `query`.
pub fn candidate_scores(model: &EmbeddingModel, query: &Query) -> Vec<f64> {
    match *query {
        Query::Tail { head, relation } => model.score_tails(head, relation),
        Query::Head { relation, tail } => model.score_heads(relation, tail),
    }
}

/// Filtered predicted ranks of `targets` for one query.
pub fn predicted_ranks(
    model: &EmbeddingModel,
    query: &Query,
    filter: &HashSet<Triple>,
    targets: &[EntityId],
) -> Vec<(EntityId, f64)> {
    let scores = candidate_scores(model, query);
    targets
        .iter()
        .map(|&t| (t, rank_among(&scores, t, |e| filter.contains(&query.complete(e)))))
        .collect()
}

/// Mean reciprocal rank.
pub fn mrr(ranks: &[f64]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::invalid("MRR of an empty rank list"));
    }
    Ok(ranks.iter().map(|r| 1.0 / r).sum::<f64>() / ranks.len() as f64)
}

/// One ground-truth/predicted rank pair with its aggregation weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankPair {
    pub ground_truth: f64,
    pub predicted: f64,
    pub weight: f64,
}

/// Reciprocal-rank term that rewards matching the ground-truth rank.
#[inline]
pub fn mrr_star_term(ground_truth: f64, predicted: f64) -> f64 {
    1.0 / ((ground_truth - predicted).abs() + 1.0)
}

/// Weighted MRR*: `sum w / (|R_G - R_P| + 1) / sum w`, in `(0, 1]`.
pub fn mrr_star(pairs: &[RankPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("MRR* of an empty rank list"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for p in pairs {
        if p.ground_truth < 1.0 || p.predicted < 1.0 || !(p.weight > 0.0) {
            return Err(Error::invalid("ranks must be >= 1 and weights positive"));
        }
        num += p.weight * mrr_star_term(p.ground_truth, p.predicted);
        den += p.weight;
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryWeighting {
    /// Each (query, answer) pair weighted by the answer triple's count.
    #[default]
    Count,
    Uniform,
}

/// Which test triples take part in an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Restriction {
    #[default]
    All,
    /// Both endpoints have index below the bound (the previously known
    /// entities of a session).
    EntitiesBelow(usize),
    /// At least one endpoint has index at or above the bound.
    TouchingAtOrAbove(usize),
}

impl Restriction {
    pub fn admits(&self, t: &Triple) -> bool {
        match *self {
            Restriction::All => true,
            Restriction::EntitiesBelow(n) => t.head.index() < n && t.tail.index() < n,
            Restriction::TouchingAtOrAbove(n) => t.head.index() >= n || t.tail.index() >= n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query: Query,
    pub answer: EntityId,
    pub ground_truth: usize,
    pub predicted: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Weighted MRR* in `(0, 1]`; `None` when no test triple was admitted.
    pub mrr_star: Option<f64>,
    pub per_query: Vec<QueryResult>,
}

impl Evaluation {
    /// MRR* in percentage points.
    pub fn percent(&self) -> Option<f64> {
        self.mrr_star.map(|m| 100.0 * m)
    }
}

/// Precomputed pieces shared by repeated evaluations of one split.
#[derive(Debug, Clone)]
pub struct Evaluator {
    index: QueryIndex,
    filter: HashSet<Triple>,
    test: Vec<(Triple, u64)>,
    weighting: QueryWeighting,
}

impl Evaluator {
    /// Ground truth from `full` (counts over every environment), filter from
    /// the split's train and valid sets, queries from its test set.
    pub fn new(split: &DatasetSplit, full: &CountedTripleSet, weighting: QueryWeighting) -> Self {
        Evaluator {
            index: QueryIndex::build(full),
            filter: split.filter_set(),
            test: split.test.iter().map(|(t, c)| (*t, c)).collect(),
            weighting,
        }
    }

    pub fn evaluate(&self, model: &EmbeddingModel, restriction: Restriction) -> Evaluation {
        let mut per_query = Vec::new();
        let mut score_cache: HashMap<Query, Vec<f64>> = HashMap::new();
        for (t, count) in &self.test {
            if !restriction.admits(t) {
                continue;
            }
            let weight = match self.weighting {
                QueryWeighting::Count => *count as f64,
                QueryWeighting::Uniform => 1.0,
            };
            for (q, answer) in Query::pair_for(t) {
                let Some(gt) = self.index.filtered_rank(&q, answer, &self.filter) else {
                    log::debug!("query {q:?} has no observed completion; skipped");
                    continue;
                };
                let scores = score_cache.entry(q).or_insert_with(|| candidate_scores(model, &q));
                let predicted = rank_among(scores, answer, |e| self.filter.contains(&q.complete(e)));
                per_query.push(QueryResult {
                    query: q,
                    answer,
                    ground_truth: gt,
                    predicted,
                    weight,
                });
            }
        }
        let pairs: Vec<RankPair> = per_query
            .iter()
            .map(|r| RankPair {
                ground_truth: r.ground_truth as f64,
                predicted: r.predicted,
                weight: r.weight,
            })
            .collect();
        Evaluation {
            mrr_star: mrr_star(&pairs).ok(),
            per_query,
        }
    }
}

/// One-shot form of [`Evaluator::evaluate`].
pub fn evaluate_split(
    model: &EmbeddingModel,
    split: &DatasetSplit,
    full: &CountedTripleSet,
    weighting: QueryWeighting,
    restriction: Restriction,
) -> Evaluation {
    Evaluator::new(split, full, weighting).evaluate(model, restriction)
}
