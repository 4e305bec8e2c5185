//! Minibatch training with Adam, and candidate ranking.

use super::catalog::{Catalog, EncodedSample, Resolver};
use super::config::TrainConfig;
use super::network::{CatVocab, DenseStats, KdcnModel};
use crate::error::{Error, Result};
use crate::eval::auc;
use crate::numeric::{streams, Adam, RngStream};
use crate::pretrain::PretrainCheckpoint;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Sample-weighted mean of the batch losses seen during the epoch.
    pub train_loss: f64,
    /// `None` when the validation split lacks one of the classes.
    pub valid_auc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: KdcnModel,
    pub history: Vec<EpochRecord>,
}

/// Builds a model from the training split and trains it for
/// `cfg.epochs`, shuffling once per epoch.
pub fn fit(
    train: &[EncodedSample],
    valid: &[EncodedSample],
    ckpt: &PretrainCheckpoint,
    cfg: &TrainConfig,
    rng: &RngStream,
) -> Result<FitOutcome> {
    cfg.validate()?;
    let first = train.first().ok_or_else(|| Error::Training("no training samples".into()))?;
    let (n_cat, n_dense) = (first.categories.len(), first.dense.len());
    let kg = ckpt.entities();
    let layout = KdcnModel::layout_for(cfg, ckpt.dim(), n_cat, n_dense);
    let mut model = KdcnModel::init(
        cfg,
        kg,
        CatVocab::build(train),
        layout,
        DenseStats::fit(train, n_dense),
        &rng.substream(streams::INIT),
    )?;
    let adam = Adam::with_lr(cfg.lr);
    let mut shuffle_rng = rng.substream(streams::SHUFFLE);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut params = std::mem::take(&mut model.params);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&EncodedSample> = chunk.iter().map(|&i| &train[i]).collect();
            let loss = model.batch_loss_and_grad(&mut params, &batch, kg)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!("non-finite loss at epoch {epoch}, batch {b}")));
            }
            adam.step(&mut params)?;
            total += loss * batch.len() as f64;
        }
        model.params = params;
        let valid_auc = if valid.is_empty() {
            None
        } else {
            let scores = model.predict(valid, kg)?;
            let labels: Vec<u8> = valid.iter().map(|s| s.label as u8).collect();
            auc(&scores, &labels).ok()
        };
        history.push(EpochRecord { epoch, train_loss: total / train.len() as f64, valid_auc });
    }
    Ok(FitOutcome { model, history })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedItem {
    pub item: String,
    pub p: f64,
}

/// Scores every candidate for `user` under `query` and sorts by
/// descending probability, ties by ascending entity id.
pub fn rank_candidates(
    user: &str,
    query: &str,
    candidates: &[String],
    model: &KdcnModel,
    ckpt: &PretrainCheckpoint,
    catalog: &Catalog,
    resolver: &Resolver,
) -> Result<Vec<RankedItem>> {
    if candidates.len() > model.config.n_cand {
        return Err(Error::Config(format!(
            "{} candidates exceed the cap of {}",
            candidates.len(),
            model.config.n_cand
        )));
    }
    let encoded = candidates
        .iter()
        .map(|c| resolver.encode(&catalog.make_sample(user, query, c, 0)?))
        .collect::<Result<Vec<_>>>()?;
    let probs = model.predict(&encoded, ckpt.entities())?;
    let mut ranked: Vec<(u32, RankedItem)> = encoded
        .iter()
        .zip(candidates)
        .zip(probs)
        .map(|((e, name), p)| (e.item.0, RankedItem { item: name.clone(), p }))
        .collect();
    ranked.sort_by(|a, b| b.1.p.total_cmp(&a.1.p).then(a.0.cmp(&b.0)));
    Ok(ranked.into_iter().map(|(_, r)| r).collect())
}
