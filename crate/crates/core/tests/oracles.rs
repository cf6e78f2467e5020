//! Library results against the slow reference implementations in `common`.

mod common;

use std::collections::HashSet;

use isi::eval::{rank_among, mrr_star, mrr_star_term, Evaluator, QueryWeighting, RankPair, Restriction};
use isi::init::{
    centroid_init, es_indicators, initialize_ookb, iu_init, known_ranges, rs_resultants, xavier_init, IndicatorSet,
    InitConfig, InitMethod, KnownWordVectors, OokbEntity,
};
use isi::kg::{CountedTripleSet, EntityId, LabeledExample, RelationId, Triple};
use isi::model::{loss, xavier_bound, BlockLayout, DecayTargets, EmbeddingModel, RelationDecay, Regularization};
use isi::wordvec::WordVectorTable;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `ln(1 + e^{-m})` written out directly, then the penalty over touched rows.
fn scalar_loss(model: &EmbeddingModel, batch: &[LabeledExample], wd: f64) -> f64 {
    let mut total = 0.0;
    let mut ents = HashSet::new();
    let mut rels = HashSet::new();
    for ex in batch {
        let t = ex.triple;
        let m = ex.label.sign() * dense_score(model, t.head, t.relation, t.tail);
        total += (1.0 + (-m).exp()).ln();
        ents.insert(t.head);
        ents.insert(t.tail);
        rels.insert(t.relation);
    }
    let s = model.layout().scalars;
    for e in ents {
        total += 0.5 * wd * model.entity(e).iter().map(|x| x * x).sum::<f64>();
    }
    for r in rels {
        let p = model.relation(r);
        let mut sq = 0.0;
        for (i, x) in p.iter().enumerate() {
            // identity: every scalar 1, every block a = 1, c = 0
            let target = if i < s || (i - s) % 2 == 0 { 1.0 } else { 0.0 };
            sq += (x - target) * (x - target);
        }
        total += 0.5 * wd * sq;
    }
    total
}

fn random_batch(r: &mut ChaCha8Rng, n_e: usize, n_r: usize, len: usize) -> Vec<LabeledExample> {
    (0..len)
        .map(|_| {
            let t = Triple::new(r.gen_range(0..n_e), r.gen_range(0..n_r), r.gen_range(0..n_e));
            if r.gen_bool(0.5) {
                LabeledExample::positive(t)
            } else {
                LabeledExample::negative(t)
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn score_matches_dense_matrix(seed in any::<u64>(), half in 1usize..6, scalars in 0usize..4) {
        let dim = 2 * half + scalars % 2;
        let scalars = scalars.min(dim) - (dim - scalars.min(dim)) % 2;
        let mut r = rng(seed);
        let m = random_model(&mut r, dim, scalars, 6, 3);
        for _ in 0..20 {
            let (h, rel, t) = (EntityId::from(r.gen_range(0..6)), RelationId::from(r.gen_range(0..3)), EntityId::from(r.gen_range(0..6)));
            let a = m.score(h, rel, t);
            let b = dense_score(&m, h, rel, t);
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn relation_maps_match_dense_and_invert(seed in any::<u64>(), dim in 2usize..12) {
        let mut r = rng(seed);
        let scalars = dim % 2;
        let m = random_model(&mut r, dim, scalars, 4, 2);
        for rel in 0..2 {
            let rel = RelationId::from(rel);
            let w = dense_relation(m.relation(rel), scalars);
            let v: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
            let fwd = m.map_row(&v, rel);
            for (a, b) in fwd.iter().zip(dense_row_times(&v, &w)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            // Uniform [-1, 1] parameters can put a block near singular; only
            // compare when nalgebra agrees the map is comfortably invertible.
            if let Some(inv) = w.clone().try_inverse() {
                if inv.norm() < 1e4 {
                    let back = m.map_row_inverse(&fwd, rel).unwrap();
                    for (a, b) in back.iter().zip(&v) {
                        prop_assert!((a - b).abs() < 1e-7 * (1.0 + inv.norm()));
                    }
                    let dense_inv = dense_row_times(&v, &inv);
                    let lib_inv = m.map_row_inverse(&v, rel).unwrap();
                    for (a, b) in lib_inv.iter().zip(dense_inv) {
                        prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn loss_matches_scalar_oracle(seed in any::<u64>(), wd in 0.0f64..0.1) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 6, 2, 5, 2);
        let batch = random_batch(&mut r, 5, 2, 12);
        let reg = Regularization { weight_decay: wd, targets: DecayTargets { entities: true, relations: RelationDecay::ToIdentity } };
        let a = loss(&m, &batch, reg).unwrap();
        let b = scalar_loss(&m, &batch, wd);
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn rank_matches_sorting(scores in prop::collection::vec(0i32..6, 1..25), target_pick in any::<prop::sample::Index>(), mask in any::<u32>()) {
        // Few distinct values, so ties are common.
        let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
        let target = target_pick.index(scores.len());
        let filtered = |i: usize| i != target && mask >> (i % 32) & 1 == 1;
        let lib = rank_among(&scores, EntityId::from(target), |e| filtered(e.index()));
        let oracle = brute_force_rank(&scores, target, filtered);
        prop_assert_eq!(lib, oracle);
        let raw = rank_among(&scores, EntityId::from(target), |_| false);
        prop_assert!(lib <= raw);
    }

    #[test]
    fn mrr_star_bounds(pairs in prop::collection::vec((1usize..20, 1.0f64..20.0, 0.5f64..5.0), 1..30)) {
        let rp: Vec<RankPair> = pairs.iter().map(|&(g, p, w)| RankPair { ground_truth: g as f64, predicted: p, weight: w }).collect();
        let m = mrr_star(&rp).unwrap();
        prop_assert!(m > 0.0 && m <= 1.0);
        let exact: Vec<RankPair> = rp.iter().map(|q| RankPair { predicted: q.ground_truth, ..*q }).collect();
        prop_assert_eq!(mrr_star(&exact).unwrap(), 1.0);
    }

    #[test]
    fn evaluator_matches_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(3..12);
        let triples = r.gen_range(4..30).min(2 * n * n);
        let (split, full) = random_split(&mut r, n, 2, triples, 4);
        let m = random_model(&mut r, 4, 2, n, 2);
        let lib = Evaluator::new(&split, &full, QueryWeighting::Count).evaluate(&m, Restriction::All);
        let (oracle, queries) = brute_force_mrr_star(&m, &split, &full);
        prop_assert_eq!(lib.mrr_star, oracle);
        prop_assert_eq!(lib.per_query.len(), queries.len());
        for (a, b) in lib.per_query.iter().zip(&queries) {
            prop_assert_eq!(a.ground_truth, b.ground_truth);
            prop_assert_eq!(a.predicted, b.predicted);
        }
    }

    #[test]
    fn positive_rescaling_keeps_mrr_star(seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut r = rng(seed);
        let (split, full) = random_split(&mut r, 8, 2, 20, 3);
        let m = random_model(&mut r, 4, 2, 8, 2);
        let mut scaled = m.clone();
        for e in 0..8 {
            scaled.entity_mut(EntityId::from(e)).iter_mut().for_each(|x| *x *= c);
        }
        let ev = Evaluator::new(&split, &full, QueryWeighting::Count);
        prop_assert_eq!(ev.evaluate(&m, Restriction::All).mrr_star, ev.evaluate(&scaled, Restriction::All).mrr_star);
    }

    #[test]
    fn centroid_is_row_mean(seed in any::<u64>(), k in 1usize..6) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 6, 2, 8, 1);
        let ids: Vec<usize> = (0..k).map(|_| r.gen_range(0..8)).collect();
        let set = IndicatorSet { entries: ids.iter().map(|&i| (EntityId::from(i), 0.0)).collect() };
        let lib = centroid_init(&set, &m).unwrap();
        let sum = ids.iter().fold(DVector::zeros(6), |acc: DVector<f64>, &i| acc + DVector::from_column_slice(m.entity(EntityId::from(i))));
        let mean = sum / k as f64;
        for (a, b) in lib.iter().zip(mean.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn xavier_samples_are_uniform_within_bound() {
    let dim = 100;
    let bound = xavier_bound(dim);
    assert!((bound - 0.6).abs() < 1e-12);
    let mut r = rng(3);
    let xs: Vec<f64> = (0..1000).flat_map(|_| xavier_init(dim, &mut r)).collect();
    assert!(xs.iter().all(|x| x.abs() <= bound));
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    assert!(mean.abs() < 0.01, "mean {mean}");
    // uniform on [-b, b] has variance b^2/3
    assert!((var - bound * bound / 3.0).abs() < 0.01, "variance {var}");
}

#[test]
fn informed_uniform_stays_in_known_ranges() {
    let mut r = rng(4);
    let m = random_model(&mut r, 10, 4, 12, 2);
    let ranges = known_ranges(&m, 12);
    assert_eq!(ranges, coordinate_ranges(&m, 12));
    for _ in 0..500 {
        assert!(within_ranges(&iu_init(&ranges, &mut r), &ranges, 0.0));
    }
}

fn word_table(names: &[&str], r: &mut ChaCha8Rng) -> WordVectorTable {
    let mut t = WordVectorTable::new(5);
    for n in names {
        let v: Vec<f64> = (0..5).map(|_| r.gen_range(-1.0..1.0)).collect();
        t.insert(n, &v).unwrap();
    }
    t
}

fn cosine_oracle(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (DVector::from_column_slice(a), DVector::from_column_slice(b));
    a.dot(&b) / (a.norm() * b.norm())
}

#[test]
fn es_picks_the_nearest_word_vectors() {
    let names = ["mug", "bowl", "plate", "apple", "egg", "sink", "fridge", "spoon"];
    for seed in 0..20 {
        let mut r = rng(seed);
        let table = word_table(&names, &mut r);
        let known: Vec<(EntityId, &str)> = names[1..].iter().enumerate().map(|(i, n)| (EntityId::from(i), *n)).collect();
        let kw = KnownWordVectors::resolve(known.iter().copied(), &table);
        let got = es_indicators("mug", &kw, &table, 3).unwrap();
        let q = table.get("mug").unwrap();
        let mut sims: Vec<(usize, f64)> = known.iter().map(|(e, n)| (e.index(), cosine_oracle(q, table.get(n).unwrap()))).collect();
        sims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let want: Vec<usize> = sims[..3].iter().map(|s| s.0).collect();
        let have: Vec<usize> = got.entities().map(|e| e.index()).collect();
        assert_eq!(have, want, "seed {seed}");
    }
}

#[test]
fn rs_resultants_match_dense_oracle() {
    let mut r = rng(8);
    let mut m = random_model(&mut r, 6, 2, 5, 2);
    m.push_entity("new", &[0.0; 6]).unwrap();
    let ookb = EntityId::from(5);
    let mut inserts = CountedTripleSet::new();
    inserts.add(Triple::new(0, 0, 5), 2);
    inserts.add(Triple::new(1, 0, 5), 1);
    inserts.add(Triple::new(5, 1, 2), 3);
    let c = rs_resultants(&m, &inserts, ookb);
    let w0 = dense_relation(m.relation(RelationId::from(0)), 2);
    let w1 = dense_relation(m.relation(RelationId::from(1)), 2);
    let a0 = dense_row_times(m.entity(EntityId::from(0)), &w0);
    let a1 = dense_row_times(m.entity(EntityId::from(1)), &w0);
    let want0: Vec<f64> = a0.iter().zip(&a1).map(|(x, y)| (2.0 * x + y) / 3.0).collect();
    let want1 = dense_row_times(m.entity(EntityId::from(2)), &w1.try_inverse().unwrap());
    let (got0, n0) = &c.by_relation[&RelationId::from(0)];
    let (got1, n1) = &c.by_relation[&RelationId::from(1)];
    assert_eq!((*n0, *n1), (3, 3));
    for (a, b) in got0.iter().zip(&want0).chain(got1.iter().zip(&want1)) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn every_initializer_lands_inside_the_known_hull_box() {
    let names = ["mug", "bowl", "plate", "apple", "egg", "sink", "fridge", "spoon", "cup"];
    let mut r = rng(9);
    let table = word_table(&names, &mut r);
    let layout = BlockLayout::balanced(8).unwrap();
    let ev = names[..8].iter().map(|s| s.to_string()).collect();
    let rv = ["atLocation", "madeOf"].iter().map(|s| s.to_string()).collect();
    let m0 = EmbeddingModel::random(layout, ev, rv, &mut r);
    let mut inserts = CountedTripleSet::new();
    inserts.add(Triple::new(8, 0, 5), 2);
    inserts.add(Triple::new(1, 1, 8), 1);
    let ranges = coordinate_ranges(&m0, 8);
    for method in InitMethod::ALL {
        let cfg = InitConfig { seed: 2, ..InitConfig::with_method(method) }.with_k(method, 3);
        let (m1, report) = initialize_ookb(&m0, &cfg, &[OokbEntity { name: "cup".into() }], &inserts, Some(&table)).unwrap();
        assert_eq!(report.records[0].used, method, "{method} fell back");
        for e in 0..8 {
            assert_eq!(m1.entity(EntityId::from(e)), m0.entity(EntityId::from(e)));
        }
        assert_eq!(m1.relation_params(), m0.relation_params());
        let v = m1.entity(EntityId::from(8));
        if method == InitMethod::Xavier {
            assert!(v.iter().all(|x| x.abs() <= xavier_bound(8)));
        } else {
            assert!(within_ranges(v, &ranges, 1e-12), "{method}");
        }
    }
}

#[test]
fn mrr_star_term_values() {
    assert_eq!(mrr_star_term(3.0, 3.0), 1.0);
    assert_eq!(mrr_star_term(1.0, 3.0), 1.0 / 3.0);
    assert_eq!(mrr_star_term(4.0, 2.5), 1.0 / 2.5);
}
