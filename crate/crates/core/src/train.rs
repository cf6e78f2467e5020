//! Mini-batch SGD with filtered negative sampling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{DatasetSplit, LabeledExample, NegativeSampler, Triple};
use crate::model::{loss_and_gradients, DecayTargets, EmbeddingModel, Gradients, Regularization};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub decay_targets: DecayTargets,
    pub negative_ratio: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Batch gradients longer than this are rescaled to this norm. `None`
    /// applies every step as computed.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            weight_decay: 1e-3,
            decay_targets: DecayTargets::default(),
            negative_ratio: 9,
            max_epochs: 100,
            batch_size: 4,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Session-1 fine-tuning settings: same objective, lower learning rate,
    /// 150-epoch cap.
    pub fn fine_tuning() -> Self {
        TrainConfig {
            learning_rate: 2e-3,
            max_epochs: 150,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config("clip_norm must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn regularization(&self) -> Regularization {
        Regularization {
            weight_decay: self.weight_decay,
            targets: self.decay_targets,
        }
    }
}

/// Returned by the per-epoch callback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochControl {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss per labeled example over the epoch.
    pub mean_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
    pub stopped_early: bool,
}

/// Trains `model` on `split.train`.
///
/// Every observation is one positive: a triple with count `c` appears `c`
/// times per epoch. Positives are shuffled, batched, and each is paired with
/// `negative_ratio` corruptions. After epoch `k` (1-based) the callback
/// receives `k` and the current model and may stop training.
pub fn train<F>(model: &mut EmbeddingModel, split: &DatasetSplit, cfg: &TrainConfig, mut on_epoch: F) -> Result<TrainLog>
where
    F: FnMut(usize, &EmbeddingModel) -> EpochControl,
{
    cfg.validate()?;
    if model.num_entities() != split.num_entities() || model.num_relations() != split.num_relations() {
        return Err(Error::VocabularyMismatch(format!(
            "model has {} entities / {} relations, split has {} / {}",
            model.num_entities(),
            model.num_relations(),
            split.num_entities(),
            split.num_relations()
        )));
    }
    if model.entity_names() != &split.entities || model.relation_names() != &split.relations {
        return Err(Error::VocabularyMismatch(
            "model and split name their entities or relations differently".into(),
        ));
    }

    let mut log = TrainLog::default();
    if cfg.max_epochs == 0 {
        return Ok(log);
    }

    let mut positives: Vec<Triple> = Vec::with_capacity(split.train.total() as usize);
    for (t, c) in split.train.iter() {
        positives.extend(std::iter::repeat(*t).take(c as usize));
    }
    if positives.is_empty() {
        return Err(Error::invalid("training split has no triples"));
    }

    let sampler = NegativeSampler::for_split(split);
    let reg = cfg.regularization();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut grads = Gradients::for_model(model);
    let mut batch: Vec<LabeledExample> = Vec::with_capacity(cfg.batch_size * (1 + cfg.negative_ratio));

    for epoch in 1..=cfg.max_epochs {
        positives.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut examples = 0usize;
        for (bi, chunk) in positives.chunks(cfg.batch_size).enumerate() {
            batch.clear();
            for p in chunk {
                batch.push(LabeledExample::positive(*p));
                for _ in 0..cfg.negative_ratio {
                    batch.push(LabeledExample::negative(sampler.sample_one(p, &mut rng)?));
                }
            }
            let l = loss_and_gradients(model, &batch, reg, &mut grads)?;
            if !l.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss {l} at epoch {epoch}, batch {bi} (first triple {})",
                    batch[0].triple
                )));
            }
            let mut lr = cfg.learning_rate;
            if let Some(c) = cfg.clip_norm {
                let n = grads.norm();
                if n > c {
                    lr *= c / n;
                }
            }
            model.apply_gradients(&grads, lr);
            epoch_loss += l;
            examples += batch.len();
        }
        if !model.all_finite() {
            return Err(Error::Numerical(format!("parameters diverged during epoch {epoch}")));
        }
        log.epochs.push(EpochStats {
            epoch,
            mean_loss: epoch_loss / examples as f64,
        });
        if on_epoch(epoch, model) == EpochControl::Stop {
            log.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    Ok(log)
}
