//! ANALOGY embedding model.
//!
//! Each relation is a block-diagonal normal map on `R^d`: `scalars` diagonal
//! entries followed by `(d - scalars) / 2` blocks `[[a, -c], [c, a]]`. Both
//! block kinds commute with their transposes, so every relation matrix is
//! normal by construction. Relation parameters are stored per relation as
//! `scalars` diagonal values followed by the `(a, c)` pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, LabeledExample, RelationId, Triple, Vocabulary};

/// Determinant or scalar magnitude below which a relation block is treated
/// as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub dim: usize,
    pub scalars: usize,
}

impl BlockLayout {
    pub fn new(dim: usize, scalars: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        if scalars > dim || (dim - scalars) % 2 != 0 {
            return Err(Error::invalid(format!(
                "cannot split dimension {dim} into {scalars} scalars plus 2x2 blocks"
            )));
        }
        Ok(BlockLayout { dim, scalars })
    }

    /// Half scalar entries, half 2x2 blocks (rounded so the blocks fit).
    pub fn balanced(dim: usize) -> Result<Self> {
        let mut scalars = dim / 2;
        if (dim - scalars) % 2 != 0 {
            scalars += 1;
        }
        Self::new(dim, scalars)
    }

    pub fn blocks(&self) -> usize {
        (self.dim - self.scalars) / 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    layout: BlockLayout,
    entity_names: Vocabulary,
    relation_names: Vocabulary,
    /// Row-major `|E| x dim`.
    entities: Vec<f64>,
    /// Row-major `|R| x dim`.
    relations: Vec<f64>,
}

impl EmbeddingModel {
    /// Model with all-zero entities and identity relation maps.
    pub fn zeros(layout: BlockLayout, entity_names: Vocabulary, relation_names: Vocabulary) -> Self {
        let d = layout.dim;
        let mut relations = vec![0.0; relation_names.len() * d];
        for row in relations.chunks_mut(d) {
            row[..layout.scalars].fill(1.0);
            for b in 0..layout.blocks() {
                row[layout.scalars + 2 * b] = 1.0;
            }
        }
        EmbeddingModel {
            layout,
            entities: vec![0.0; entity_names.len() * d],
            entity_names,
            relation_names,
            relations,
        }
    }

    /// Fresh session-0 parameters: entity coordinates uniform in
    /// `±6/sqrt(d)`, relation maps at identity plus uniform noise of ±0.01.
    pub fn random<R: Rng + ?Sized>(
        layout: BlockLayout,
        entity_names: Vocabulary,
        relation_names: Vocabulary,
        rng: &mut R,
    ) -> Self {
        let mut m = Self::zeros(layout, entity_names, relation_names);
        let bound = xavier_bound(layout.dim);
        for x in m.entities.iter_mut() {
            *x = rng.gen_range(-bound..=bound);
        }
        for x in m.relations.iter_mut() {
            *x += rng.gen_range(-0.01..=0.01);
        }
        m
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn num_entities(&self) -> usize {
        self.entity_names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relation_names.len()
    }

    pub fn entity_names(&self) -> &Vocabulary {
        &self.entity_names
    }

    pub fn relation_names(&self) -> &Vocabulary {
        &self.relation_names
    }

    pub fn entity(&self, e: EntityId) -> &[f64] {
        let d = self.layout.dim;
        &self.entities[e.index() * d..(e.index() + 1) * d]
    }

    pub fn entity_mut(&mut self, e: EntityId) -> &mut [f64] {
        let d = self.layout.dim;
        &mut self.entities[e.index() * d..(e.index() + 1) * d]
    }

    pub fn entity_matrix(&self) -> &[f64] {
        &self.entities
    }

    pub fn relation(&self, r: RelationId) -> &[f64] {
        let d = self.layout.dim;
        &self.relations[r.index() * d..(r.index() + 1) * d]
    }

    pub fn relation_mut(&mut self, r: RelationId) -> &mut [f64] {
        let d = self.layout.dim;
        &mut self.relations[r.index() * d..(r.index() + 1) * d]
    }

    pub fn relation_params(&self) -> &[f64] {
        &self.relations
    }

    /// Appends a named entity row and returns its id.
    pub fn push_entity(&mut self, name: &str, vector: &[f64]) -> Result<EntityId> {
        if vector.len() != self.layout.dim {
            return Err(Error::invalid(format!(
                "entity vector has dimension {}, model has {}",
                vector.len(),
                self.layout.dim
            )));
        }
        if self.entity_names.get(name).is_some() {
            return Err(Error::invalid(format!("entity `{name}` already in the model")));
        }
        let id = self.entity_names.intern(name);
        self.entities.extend_from_slice(vector);
        Ok(EntityId::from(id))
    }

    fn check_triple(&self, t: &Triple) -> Result<()> {
        if t.head.index() >= self.num_entities() || t.tail.index() >= self.num_entities() {
            return Err(Error::invalid(format!("entity index out of range in {t}")));
        }
        if t.relation.index() >= self.num_relations() {
            return Err(Error::invalid(format!("relation index out of range in {t}")));
        }
        Ok(())
    }

    /// `<v_h^T W_r, v_t>`, computed blockwise.
    pub fn score(&self, h: EntityId, r: RelationId, t: EntityId) -> f64 {
        bilinear(self.layout, self.entity(h), self.relation(r), self.entity(t))
    }

    pub fn try_score(&self, triple: &Triple) -> Result<f64> {
        self.check_triple(triple)?;
        Ok(self.score(triple.head, triple.relation, triple.tail))
    }

    /// Dense `dim x dim` row-major matrix of relation `r`.
    pub fn relation_matrix(&self, r: RelationId) -> Vec<f64> {
        let d = self.layout.dim;
        let p = self.relation(r);
        let mut m = vec![0.0; d * d];
        for i in 0..self.layout.scalars {
            m[i * d + i] = p[i];
        }
        for b in 0..self.layout.blocks() {
            let i = self.layout.scalars + 2 * b;
            let (a, c) = (p[i], p[i + 1]);
            m[i * d + i] = a;
            m[i * d + i + 1] = -c;
            m[(i + 1) * d + i] = c;
            m[(i + 1) * d + i + 1] = a;
        }
        m
    }

    /// Row vector `v^T W_r`.
    pub fn map_row(&self, v: &[f64], r: RelationId) -> Vec<f64> {
        let p = self.relation(r);
        let mut out = vec![0.0; self.layout.dim];
        let s = self.layout.scalars;
        for i in 0..s {
            out[i] = v[i] * p[i];
        }
        for b in 0..self.layout.blocks() {
            let i = s + 2 * b;
            let (a, c) = (p[i], p[i + 1]);
            out[i] = v[i] * a + v[i + 1] * c;
            out[i + 1] = -v[i] * c + v[i + 1] * a;
        }
        out
    }

    /// Row vector `v^T W_r^{-1}`, inverting each block exactly. Fails when a
    /// scalar or block determinant is below [`SINGULAR_TOLERANCE`].
    pub fn map_row_inverse(&self, v: &[f64], r: RelationId) -> Result<Vec<f64>> {
        let p = self.relation(r);
        let mut out = vec![0.0; self.layout.dim];
        let s = self.layout.scalars;
        for i in 0..s {
            if p[i].abs() < SINGULAR_TOLERANCE {
                return Err(Error::Numerical(format!(
                    "relation {} has a singular scalar entry at {i}",
                    r.0
                )));
            }
            out[i] = v[i] / p[i];
        }
        for b in 0..self.layout.blocks() {
            let i = s + 2 * b;
            let (a, c) = (p[i], p[i + 1]);
            let det = a * a + c * c;
            if det < SINGULAR_TOLERANCE {
                return Err(Error::Numerical(format!("relation {} has a singular block {b}", r.0)));
            }
            // [[a, -c], [c, a]]^{-1} = [[a, c], [-c, a]] / det
            out[i] = (v[i] * a - v[i + 1] * c) / det;
            out[i + 1] = (v[i] * c + v[i + 1] * a) / det;
        }
        Ok(out)
    }

    pub fn all_finite(&self) -> bool {
        self.entities.iter().chain(&self.relations).all(|x| x.is_finite())
    }

    /// Scores of every entity as the tail of `(h, r, ?)`.
    pub fn score_tails(&self, h: EntityId, r: RelationId) -> Vec<f64> {
        let q = self.map_row(self.entity(h), r);
        self.entities.chunks(self.layout.dim).map(|row| dot(&q, row)).collect()
    }

    /// Scores of every entity as the head of `(?, r, t)`.
    pub fn score_heads(&self, r: RelationId, t: EntityId) -> Vec<f64> {
        // <v_h^T W, v_t> = <v_h, W v_t>; W v_t = (v_t^T W^T) and W^T flips c.
        let p = self.relation(r);
        let v = self.entity(t);
        let s = self.layout.scalars;
        let mut q = vec![0.0; self.layout.dim];
        for i in 0..s {
            q[i] = p[i] * v[i];
        }
        for b in 0..self.layout.blocks() {
            let i = s + 2 * b;
            let (a, c) = (p[i], p[i + 1]);
            q[i] = a * v[i] - c * v[i + 1];
            q[i + 1] = c * v[i] + a * v[i + 1];
        }
        self.entities.chunks(self.layout.dim).map(|row| dot(&q, row)).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        };
        serde_json::to_writer(&mut w, &ck).map_err(|e| Error::Checkpoint(e.to_string()))?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let r = BufReader::new(File::open(path)?);
        let ck: Checkpoint = serde_json::from_reader(r).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        ck.model.validate()?;
        Ok(ck.model)
    }

    fn validate(&self) -> Result<()> {
        let d = self.layout.dim;
        BlockLayout::new(d, self.layout.scalars)?;
        if self.entities.len() != self.entity_names.len() * d || self.relations.len() != self.relation_names.len() * d {
            return Err(Error::Checkpoint("parameter shapes do not match vocabularies".into()));
        }
        if !self.all_finite() {
            return Err(Error::Checkpoint("non-finite parameters".into()));
        }
        Ok(())
    }
}

const CHECKPOINT_FORMAT: &str = "isi-analogy-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    model: EmbeddingModel,
}

pub fn xavier_bound(dim: usize) -> f64 {
    6.0 / (dim as f64).sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn bilinear(layout: BlockLayout, h: &[f64], p: &[f64], t: &[f64]) -> f64 {
    let s = layout.scalars;
    let mut acc = 0.0;
    for i in 0..s {
        acc += h[i] * p[i] * t[i];
    }
    for b in 0..layout.blocks() {
        let i = s + 2 * b;
        let (a, c) = (p[i], p[i + 1]);
        acc += a * (h[i] * t[i] + h[i + 1] * t[i + 1]) + c * (h[i + 1] * t[i] - h[i] * t[i + 1]);
    }
    acc
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Where the L2 penalty pulls relation maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationDecay {
    Off,
    /// `wd/2 * ||p||^2`.
    ToZero,
    /// `wd/2 * ||p - p_I||^2` where `p_I` parameterizes the identity map.
    ToIdentity,
}

/// Which parameter groups receive the L2 penalty.
///
/// Relations default to decaying toward the identity: decaying them toward
/// zero shrinks coordinates that no triple uses until `W_r` is numerically
/// singular, and its inverse is then useless for initializing new entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecayTargets {
    pub entities: bool,
    pub relations: RelationDecay,
}

impl Default for DecayTargets {
    fn default() -> Self {
        DecayTargets {
            entities: true,
            relations: RelationDecay::ToIdentity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub weight_decay: f64,
    pub targets: DecayTargets,
}

impl Regularization {
    pub fn none() -> Self {
        Regularization {
            weight_decay: 0.0,
            targets: DecayTargets::default(),
        }
    }

    /// L2 penalty on every touched entity row and relation map.
    pub fn l2(weight_decay: f64) -> Self {
        Regularization {
            weight_decay,
            targets: DecayTargets {
                entities: true,
                relations: RelationDecay::ToZero,
            },
        }
    }
}

/// Sparse gradient: only rows touched by the batch are non-zero.
#[derive(Debug, Clone)]
pub struct Gradients {
    dim: usize,
    entity: Vec<f64>,
    relation: Vec<f64>,
    entity_touched: Vec<bool>,
    relation_touched: Vec<bool>,
    entity_list: Vec<usize>,
    relation_list: Vec<usize>,
}

impl Gradients {
    pub fn for_model(model: &EmbeddingModel) -> Self {
        let d = model.dim();
        Gradients {
            dim: d,
            entity: vec![0.0; model.num_entities() * d],
            relation: vec![0.0; model.num_relations() * d],
            entity_touched: vec![false; model.num_entities()],
            relation_touched: vec![false; model.num_relations()],
            entity_list: Vec::new(),
            relation_list: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        let d = self.dim;
        for &e in &self.entity_list {
            self.entity[e * d..(e + 1) * d].fill(0.0);
            self.entity_touched[e] = false;
        }
        for &r in &self.relation_list {
            self.relation[r * d..(r + 1) * d].fill(0.0);
            self.relation_touched[r] = false;
        }
        self.entity_list.clear();
        self.relation_list.clear();
    }

    fn touch_entity(&mut self, e: usize) {
        if !self.entity_touched[e] {
            self.entity_touched[e] = true;
            self.entity_list.push(e);
        }
    }

    fn touch_relation(&mut self, r: usize) {
        if !self.relation_touched[r] {
            self.relation_touched[r] = true;
            self.relation_list.push(r);
        }
    }

    /// Gradient row of an entity, `None` when the batch did not touch it.
    pub fn entity(&self, e: EntityId) -> Option<&[f64]> {
        let d = self.dim;
        self.entity_touched
            .get(e.index())
            .copied()
            .unwrap_or(false)
            .then(|| &self.entity[e.index() * d..(e.index() + 1) * d])
    }

    pub fn relation(&self, r: RelationId) -> Option<&[f64]> {
        let d = self.dim;
        self.relation_touched
            .get(r.index())
            .copied()
            .unwrap_or(false)
            .then(|| &self.relation[r.index() * d..(r.index() + 1) * d])
    }

    pub fn touched_entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.entity_list.iter().map(|&e| EntityId::from(e))
    }

    pub fn touched_relations(&self) -> impl Iterator<Item = RelationId> + '_ {
        self.relation_list.iter().map(|&r| RelationId::from(r))
    }

    pub fn norm(&self) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for &e in &self.entity_list {
            acc += self.entity[e * d..(e + 1) * d].iter().map(|x| x * x).sum::<f64>();
        }
        for &r in &self.relation_list {
            acc += self.relation[r * d..(r + 1) * d].iter().map(|x| x * x).sum::<f64>();
        }
        acc.sqrt()
    }
}

/// Batch loss: `sum_i -ln sigmoid(y_i * score_i)` plus `wd/2 * ||theta||^2`
/// over each parameter row the batch touches (each row counted once).
pub fn loss(model: &EmbeddingModel, batch: &[LabeledExample], reg: Regularization) -> Result<f64> {
    let mut g = Gradients::for_model(model);
    loss_and_gradients(model, batch, reg, &mut g)
}

/// Analytic gradient of [`loss`].
pub fn gradients(model: &EmbeddingModel, batch: &[LabeledExample], reg: Regularization) -> Result<Gradients> {
    let mut g = Gradients::for_model(model);
    loss_and_gradients(model, batch, reg, &mut g)?;
    Ok(g)
}

/// Accumulates into a cleared `grads` and returns the loss.
pub fn loss_and_gradients(
    model: &EmbeddingModel,
    batch: &[LabeledExample],
    reg: Regularization,
    grads: &mut Gradients,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("loss of an empty batch"));
    }
    grads.clear();
    let layout = model.layout;
    let d = layout.dim;
    let s = layout.scalars;
    let mut total = 0.0;
    for ex in batch {
        let t = &ex.triple;
        model.check_triple(t)?;
        let y = ex.label.sign();
        let (hi, ri, ti) = (t.head.index(), t.relation.index(), t.tail.index());
        let vh = model.entity(t.head);
        let vt = model.entity(t.tail);
        let p = model.relation(t.relation);
        let score = bilinear(layout, vh, p, vt);
        total += softplus(-y * score);
        // d/dscore of softplus(-y*score)
        let coef = -y * sigmoid(-y * score);

        grads.touch_entity(hi);
        grads.touch_entity(ti);
        grads.touch_relation(ri);
        let gr = &mut grads.relation[ri * d..(ri + 1) * d];
        for i in 0..s {
            gr[i] += coef * vh[i] * vt[i];
        }
        for b in 0..layout.blocks() {
            let i = s + 2 * b;
            gr[i] += coef * (vh[i] * vt[i] + vh[i + 1] * vt[i + 1]);
            gr[i + 1] += coef * (vh[i + 1] * vt[i] - vh[i] * vt[i + 1]);
        }
        // Head gradient W_r v_t, tail gradient W_r^T v_h. Written through
        // separate passes so h == t accumulates correctly.
        {
            let gh = &mut grads.entity[hi * d..(hi + 1) * d];
            for i in 0..s {
                gh[i] += coef * p[i] * vt[i];
            }
            for b in 0..layout.blocks() {
                let i = s + 2 * b;
                let (a, c) = (p[i], p[i + 1]);
                gh[i] += coef * (a * vt[i] - c * vt[i + 1]);
                gh[i + 1] += coef * (c * vt[i] + a * vt[i + 1]);
            }
        }
        {
            let gt = &mut grads.entity[ti * d..(ti + 1) * d];
            for i in 0..s {
                gt[i] += coef * p[i] * vh[i];
            }
            for b in 0..layout.blocks() {
                let i = s + 2 * b;
                let (a, c) = (p[i], p[i + 1]);
                gt[i] += coef * (a * vh[i] + c * vh[i + 1]);
                gt[i + 1] += coef * (-c * vh[i] + a * vh[i + 1]);
            }
        }
    }

    if reg.weight_decay != 0.0 {
        let wd = reg.weight_decay;
        if reg.targets.entities {
            for &e in &grads.entity_list {
                let v = &model.entities[e * d..(e + 1) * d];
                total += 0.5 * wd * v.iter().map(|x| x * x).sum::<f64>();
                for (g, x) in grads.entity[e * d..(e + 1) * d].iter_mut().zip(v) {
                    *g += wd * x;
                }
            }
        }
        if reg.targets.relations != RelationDecay::Off {
            let to_identity = reg.targets.relations == RelationDecay::ToIdentity;
            for &r in &grads.relation_list {
                let v = &model.relations[r * d..(r + 1) * d];
                let g = &mut grads.relation[r * d..(r + 1) * d];
                for i in 0..d {
                    let anchor = if to_identity && (i < s || (i - s) % 2 == 0) { 1.0 } else { 0.0 };
                    let x = v[i] - anchor;
                    total += 0.5 * wd * x * x;
                    g[i] += wd * x;
                }
            }
        }
    }
    Ok(total)
}

impl EmbeddingModel {
    /// `theta <- theta - lr * grad` on touched rows.
    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        let d = self.layout.dim;
        for &e in &grads.entity_list {
            for (x, g) in self.entities[e * d..(e + 1) * d]
                .iter_mut()
                .zip(&grads.entity[e * d..(e + 1) * d])
            {
                *x -= lr * g;
            }
        }
        for &r in &grads.relation_list {
            for (x, g) in self.relations[r * d..(r + 1) * d]
                .iter_mut()
                .zip(&grads.relation[r * d..(r + 1) * d])
            {
                *x -= lr * g;
            }
        }
    }
}
