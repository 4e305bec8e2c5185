//! Joint training of the structural encoder and the translation scorer.
//!
//! Every batch rebuilds the layer plan (fresh neighbor draws in sampled
//! mode), encodes all entities, corrupts each positive triple, and applies
//! one Adam step on the summed margin loss of the batch.

use super::checkpoint::PretrainCheckpoint;
use super::config::{EncoderMode, PretrainConfig};
use super::encoder::{self, LayerPlan, PretrainParams};
use super::transe::{hinge, negative_sample, score_direction, translation_residual};
use crate::ckg::{Graph, Relation, Triple, TripleSet};
use crate::error::{dim_err, Error, Result};
use crate::numeric::{axpy, streams, Adam, ParamStore, RngStream, Tensor2D};

pub const ENTITY_SLOT: &str = "entity";
pub const RELATION_SLOT: &str = "relation";

pub fn gcn_slot(layer: usize) -> String {
    format!("gcn.{layer}")
}

/// Uniform in [−6/√d, 6/√d] for every table, each drawn from its own
/// named stream.
pub fn init_params(n_entities: usize, cfg: &PretrainConfig, rng: &RngStream) -> PretrainParams {
    let bound = 6.0 / (cfg.dim as f64).sqrt();
    let table = |name: &str, rows: usize| {
        let mut r = rng.named(name);
        let data = (0..rows * cfg.dim).map(|_| r.uniform_range(-bound, bound)).collect();
        Tensor2D::from_vec(rows, cfg.dim, data).expect("length matches shape")
    };
    PretrainParams {
        entity_table: table(ENTITY_SLOT, n_entities),
        relation_table: table(RELATION_SLOT, Relation::COUNT),
        gcn_weights: (0..cfg.layers).map(|l| table(&gcn_slot(l), cfg.dim)).collect(),
    }
}

pub fn params_to_store(p: &PretrainParams) -> ParamStore {
    let mut s = ParamStore::new();
    s.insert(ENTITY_SLOT, p.entity_table.clone());
    s.insert(RELATION_SLOT, p.relation_table.clone());
    for (l, w) in p.gcn_weights.iter().enumerate() {
        s.insert(gcn_slot(l), w.clone());
    }
    s
}

pub fn params_from_store(s: &ParamStore, layers: usize) -> PretrainParams {
    PretrainParams {
        entity_table: s.value(ENTITY_SLOT).clone(),
        relation_table: s.value(RELATION_SLOT).clone(),
        gcn_weights: (0..layers).map(|l| s.value(&gcn_slot(l)).clone()).collect(),
    }
}

fn layer_count(s: &ParamStore) -> usize {
    (0..).take_while(|&l| s.contains(&gcn_slot(l))).count()
}

/// A positive triple and one of its corruptions.
pub type TriplePair = (Triple, Triple);

fn pair_loss(out: &Tensor2D, rel: &Tensor2D, (pos, neg): &TriplePair, margin: f64) -> (f64, [Vec<f64>; 2]) {
    let residual = |t: &Triple| translation_residual(out.row(t.head.index()), rel.row(t.relation.index()), out.row(t.tail.index()));
    let rp = residual(pos);
    let rn = residual(neg);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (hinge(norm(&rp) + margin - norm(&rn)), [rp, rn])
}

/// Summed margin loss of `pairs` under the parameters in `store`.
pub fn batch_loss(store: &ParamStore, plan: &LayerPlan, pairs: &[TriplePair], margin: f64) -> Result<f64> {
    let layers = layer_count(store);
    let weights: Vec<&Tensor2D> = (0..layers).map(|l| store.value(&gcn_slot(l))).collect();
    let cache = encoder::forward(store.value(ENTITY_SLOT), &weights, plan)?;
    let rel = store.value(RELATION_SLOT);
    Ok(pairs.iter().map(|p| pair_loss(cache.output(), rel, p, margin).0).sum())
}

/// Like [`batch_loss`], and accumulates the analytic gradient of every slot
/// into `store`.
pub fn batch_loss_and_grad(store: &mut ParamStore, plan: &LayerPlan, pairs: &[TriplePair], margin: f64) -> Result<f64> {
    let layers = layer_count(store);
    let entity = store.value(ENTITY_SLOT);
    let weights: Vec<&Tensor2D> = (0..layers).map(|l| store.value(&gcn_slot(l))).collect();
    if plan.layers() != layers {
        return Err(dim_err("layer plan vs gcn weights", (plan.layers(), 0), (layers, 0)));
    }
    let cache = encoder::forward(entity, &weights, plan)?;
    let out = cache.output();
    let rel = store.value(RELATION_SLOT);
    let mut d_out = Tensor2D::zeros(out.rows(), out.cols());
    let mut d_rel = Tensor2D::zeros(rel.rows(), rel.cols());
    let mut total = 0.0;
    for pair in pairs {
        let (loss, [rp, rn]) = pair_loss(out, rel, pair, margin);
        total += loss;
        if loss <= 0.0 {
            continue;
        }
        for (t, sign, residual) in [(&pair.0, 1.0, &rp), (&pair.1, -1.0, &rn)] {
            let dir = score_direction(residual);
            axpy(d_out.row_mut(t.head.index()), sign, &dir);
            axpy(d_out.row_mut(t.tail.index()), -sign, &dir);
            axpy(d_rel.row_mut(t.relation.index()), sign, &dir);
        }
    }
    let (d_entity, d_weights) = encoder::backward(&cache, &weights, plan, d_out)?;
    store.grad_mut(ENTITY_SLOT).add_scaled(&d_entity, 1.0)?;
    store.grad_mut(RELATION_SLOT).add_scaled(&d_rel, 1.0)?;
    for (l, dw) in d_weights.iter().enumerate() {
        store.grad_mut(&gcn_slot(l)).add_scaled(dw, 1.0)?;
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    pub checkpoint: PretrainCheckpoint,
    /// Mean pair loss of every epoch.
    pub epoch_losses: Vec<f64>,
    pub params: PretrainParams,
}

/// Trains on `triples` (which also filter negative samples) over the
/// structure of `g`. Draws come from independent substreams of `rng`.
pub fn pretrain(triples: &TripleSet, g: &Graph, cfg: &PretrainConfig, rng: &RngStream) -> Result<PretrainOutcome> {
    cfg.validate()?;
    if g.n_entities() != triples.n_entities() {
        return Err(Error::Dimension(format!(
            "graph has {} entities, triple set {}",
            g.n_entities(),
            triples.n_entities()
        )));
    }
    let init = init_params(g.n_entities(), cfg, &rng.substream(streams::INIT));
    let mut store = params_to_store(&init);
    let adam = Adam::with_lr(cfg.lr);
    let mut neighbor_rng = rng.substream(streams::NEIGHBORS);
    let mut negative_rng = rng.substream(streams::NEGATIVES);
    let mut shuffle_rng = rng.substream(streams::SHUFFLE);
    let fixed_plan = match cfg.mode {
        EncoderMode::Full => Some(LayerPlan::build(g, cfg, &mut neighbor_rng)?),
        EncoderMode::Sampled => None,
    };

    let positives = triples.triples();
    let mut order: Vec<usize> = (0..positives.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut batch_index = 0usize;
    for epoch in 0..cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_total = 0.0;
        let mut epoch_pairs = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let mut pairs = Vec::with_capacity(chunk.len() * cfg.negatives_per_positive);
            for &i in chunk {
                for _ in 0..cfg.negatives_per_positive {
                    pairs.push((positives[i], negative_sample(positives[i], triples, &mut negative_rng)?));
                }
            }
            let sampled;
            let plan = match &fixed_plan {
                Some(p) => p,
                None => {
                    sampled = LayerPlan::build(g, cfg, &mut neighbor_rng)?;
                    &sampled
                }
            };
            let loss = batch_loss_and_grad(&mut store, plan, &pairs, cfg.margin)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!("non-finite pretraining loss at epoch {epoch}, batch {batch_index}")));
            }
            adam.step(&mut store)?;
            epoch_total += loss;
            epoch_pairs += pairs.len();
            batch_index += 1;
        }
        epoch_losses.push(if epoch_pairs == 0 { 0.0 } else { epoch_total / epoch_pairs as f64 });
    }

    let params = params_from_store(&store, cfg.layers);
    let entities = encoder::encode_entities(&params, g, cfg, &mut neighbor_rng)?;
    Ok(PretrainOutcome {
        checkpoint: PretrainCheckpoint::new(entities, params.relation_table.clone())?,
        epoch_losses,
        params,
    })
}
