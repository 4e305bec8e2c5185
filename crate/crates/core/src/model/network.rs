//! The ranker: feature blocks, cross and deep networks, logits.
//!
//! Parameter slots:
//!
//! | slot | shape |
//! |---|---|
//! | `cat.table` | n_cat × cat_dim |
//! | `conv.w{N}`, `conv.b{N}` | F × (d·N), 1 × F |
//! | `attn.{h}.ma`, `attn.{h}.mb`, `attn.{h}.wv` | (d/H) × d |
//! | `cross.{i}.w`, `cross.{i}.b` | 1 × \|f\| |
//! | `deep.{i}.w`, `deep.{i}.b` | in × out, 1 × out |
//! | `logits.w` | 1 × (\|x_c\| + \|x_d\|) |
//! | `kg.entities` | n_e × d, only when fine-tuning the graph table |
//!
//! Disabled blocks have no slots and no columns in `f`. Each slot is drawn
//! from its own named stream, so switching a block off leaves every other
//! slot's initial value unchanged.

use std::collections::HashMap;

use super::catalog::EncodedSample;
use super::config::TrainConfig;
use super::layers::{
    cross_backward, cross_forward_batch, deep_backward, deep_forward_batch, log_loss, log_loss_logit_grad, CrossLayer,
    probability, DenseLayer,
};
use crate::error::{Error, Result};
use crate::features::{
    behavior_matrix, behavior_matrix_backward, dialogue_backward, dialogue_forward, user_state_backward,
    user_state_traced, AttentionHead, AttentionParams, ConvBank, ConvParams, DialogueCache, FeatureLayout,
    UserStateTrace,
};
use crate::numeric::{sigmoid_scalar, ParamStore, RngStream, Tensor2D};

pub const KG_SLOT: &str = "kg.entities";
pub const CAT_SLOT: &str = "cat.table";
pub const LOGITS_SLOT: &str = "logits.w";
/// Reserved categorical row for values unseen in training.
pub const UNKNOWN_CATEGORY: &str = "<unk>";
/// Largest batch evaluated at once during prediction.
pub const PREDICT_CHUNK: usize = 512;

/// Field-qualified categorical values; row 0 is the unknown value.
#[derive(Debug, Clone, PartialEq)]
pub struct CatVocab {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for CatVocab {
    fn default() -> Self {
        Self::from_names(vec![UNKNOWN_CATEGORY.to_owned()])
    }
}

impl CatVocab {
    fn key(field: usize, value: &str) -> String {
        format!("{field}:{value}")
    }

    pub fn from_names(names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Self { names, index }
    }

    /// Values in first-seen order over `samples`.
    pub fn build(samples: &[EncodedSample]) -> Self {
        let mut v = Self::default();
        for s in samples {
            for (f, c) in s.categories.iter().enumerate() {
                let k = Self::key(f, c);
                if !v.index.contains_key(&k) {
                    v.index.insert(k.clone(), v.names.len());
                    v.names.push(k);
                }
            }
        }
        v
    }

    pub fn id(&self, field: usize, value: &str) -> usize {
        self.index.get(&Self::key(field, value)).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Standardization of the dense block, fitted on training samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl DenseStats {
    /// Zero-variance columns get unit scale.
    pub fn fit(samples: &[EncodedSample], n_dense: usize) -> Self {
        let n = samples.len().max(1) as f64;
        let mut mean = vec![0.0; n_dense];
        for s in samples {
            mean.iter_mut().zip(&s.dense).for_each(|(m, x)| *m += x / n);
        }
        let mut var = vec![0.0; n_dense];
        for s in samples {
            var.iter_mut().zip(&s.dense).zip(&mean).for_each(|((v, x), m)| *v += (x - m) * (x - m) / n);
        }
        let std = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdcnModel {
    pub config: TrainConfig,
    pub layout: FeatureLayout,
    pub kg_dim: usize,
    pub params: ParamStore,
    pub cat_vocab: CatVocab,
    pub dense_stats: DenseStats,
}

fn conv_w(n: usize) -> String {
    format!("conv.w{n}")
}
fn conv_b(n: usize) -> String {
    format!("conv.b{n}")
}
fn attn(h: usize, part: &str) -> String {
    format!("attn.{h}.{part}")
}
fn cross_w(i: usize) -> String {
    format!("cross.{i}.w")
}
fn cross_b(i: usize) -> String {
    format!("cross.{i}.b")
}
fn deep_w(i: usize) -> String {
    format!("deep.{i}.w")
}
fn deep_b(i: usize) -> String {
    format!("deep.{i}.b")
}

fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut RngStream) -> Tensor2D {
    Tensor2D::from_vec(rows, cols, (0..rows * cols).map(|_| rng.uniform_range(-bound, bound)).collect())
        .expect("length matches shape")
}

fn xavier(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut RngStream) -> Tensor2D {
    uniform(rows, cols, (6.0 / (fan_in + fan_out) as f64).sqrt(), rng)
}

/// Per-sample record for the feature-block backward passes.
struct SampleCache {
    cat_ids: Vec<usize>,
    user: Option<(UserStateTrace, crate::features::BehaviorLog)>,
    dialogue: Option<DialogueCache>,
}

struct ForwardCache {
    f: Tensor2D,
    cross: Option<(Tensor2D, super::layers::CrossCache)>,
    deep: Option<(Tensor2D, super::layers::DeepCache)>,
    z: Vec<f64>,
    samples: Vec<SampleCache>,
}

impl KdcnModel {
    /// Layout implied by `config` for the given data widths.
    pub fn layout_for(config: &TrainConfig, kg_dim: usize, n_cat_fields: usize, n_dense: usize) -> FeatureLayout {
        let m = &config.model;
        let a = &config.ablation;
        FeatureLayout {
            n_cat_fields,
            cat_dim: m.cat_dim,
            n_dense,
            u_len: if a.use_user_state { m.conv_widths.len() * m.filters } else { 0 },
            d_len: if a.use_dialogue { (m.m_q + m.n_t) * kg_dim } else { 0 },
        }
    }

    /// Initial parameters. `kg_table` seeds the graph slot when fine-tuning.
    pub fn init(
        config: &TrainConfig,
        kg_table: &Tensor2D,
        cat_vocab: CatVocab,
        layout: FeatureLayout,
        dense_stats: DenseStats,
        rng: &RngStream,
    ) -> Result<Self> {
        config.validate()?;
        let m = &config.model;
        let a = &config.ablation;
        let d = kg_table.cols();
        if a.use_dialogue && d % m.heads != 0 {
            return Err(Error::Config(format!("{} attention heads do not divide embedding dim {d}", m.heads)));
        }
        let mut params = ParamStore::new();
        let mut add = |name: String, make: &dyn Fn(&mut RngStream) -> Tensor2D| {
            let mut r = rng.named(&name);
            params.insert(name, make(&mut r));
        };
        if layout.n_cat_fields > 0 {
            let bound = (3.0 / m.cat_dim as f64).sqrt();
            add(CAT_SLOT.into(), &|r| uniform(cat_vocab.len(), m.cat_dim, bound, r));
        }
        if a.use_user_state {
            for &n in &m.conv_widths {
                add(conv_w(n), &|r| xavier(m.filters, d * n, d * n, m.filters, r));
                add(conv_b(n), &|_| Tensor2D::zeros(1, m.filters));
            }
        }
        if a.use_dialogue {
            let dh = d / m.heads;
            for h in 0..m.heads {
                for part in ["ma", "mb", "wv"] {
                    add(attn(h, part), &|r| xavier(dh, d, d, dh, r));
                }
            }
        }
        let width = layout.width();
        if a.use_cross {
            for i in 0..m.cross_layers {
                add(cross_w(i), &|r| xavier(1, width, width, 1, r));
                add(cross_b(i), &|_| Tensor2D::zeros(1, width));
            }
        }
        let mut logit_len = if a.use_cross { width } else { 0 };
        if a.use_deep {
            let mut fan_in = width;
            for (i, &w) in m.deep_widths.iter().enumerate() {
                add(deep_w(i), &|r| xavier(fan_in, w, fan_in, w, r));
                add(deep_b(i), &|_| Tensor2D::zeros(1, w));
                fan_in = w;
            }
            logit_len += fan_in;
        }
        add(LOGITS_SLOT.into(), &|r| xavier(1, logit_len, logit_len, 1, r));
        if config.finetune_kg {
            params.insert(KG_SLOT, kg_table.clone());
        }
        Ok(Self { config: config.clone(), layout, kg_dim: d, params, cat_vocab, dense_stats })
    }

    /// Checks that `params` holds exactly the slots and shapes `config`
    /// implies.
    pub fn check_slots(&self) -> Result<()> {
        let n_e = if self.params.contains(KG_SLOT) { self.params.value(KG_SLOT).rows() } else { 0 };
        let reference = Self::init(
            &self.config,
            &Tensor2D::zeros(n_e, self.kg_dim),
            self.cat_vocab.clone(),
            self.layout,
            self.dense_stats.clone(),
            &RngStream::new(0),
        )?;
        let names = |p: &ParamStore| p.iter().map(|(n, s)| (n.to_owned(), s.value.shape())).collect::<Vec<_>>();
        let (mut want, mut have) = (names(&reference.params), names(&self.params));
        want.sort();
        have.sort();
        if want != have {
            return Err(Error::Schema(format!("expected slots {want:?}, found {have:?}")));
        }
        if self.dense_stats.mean.len() != self.layout.n_dense || self.dense_stats.std.len() != self.layout.n_dense {
            return Err(Error::Schema("dense statistics do not match the dense width".into()));
        }
        Ok(())
    }

    fn conv_params(&self, p: &ParamStore) -> ConvParams {
        ConvParams {
            banks: self
                .config
                .model
                .conv_widths
                .iter()
                .map(|&n| ConvBank { width: n, filters: p.value(&conv_w(n)).clone(), bias: p.value(&conv_b(n)).clone() })
                .collect(),
        }
    }

    fn attention_params(&self, p: &ParamStore) -> AttentionParams {
        AttentionParams {
            heads: (0..self.config.model.heads)
                .map(|h| AttentionHead {
                    m_a: p.value(&attn(h, "ma")).clone(),
                    m_b: p.value(&attn(h, "mb")).clone(),
                    w_v: p.value(&attn(h, "wv")).clone(),
                })
                .collect(),
        }
    }

    fn cross_layers<'a>(&self, p: &'a ParamStore) -> Vec<CrossLayer<'a>> {
        if !self.config.ablation.use_cross {
            return Vec::new();
        }
        (0..self.config.model.cross_layers)
            .map(|i| CrossLayer { w: p.value(&cross_w(i)), b: p.value(&cross_b(i)) })
            .collect()
    }

    fn deep_layers<'a>(&self, p: &'a ParamStore) -> Vec<DenseLayer<'a>> {
        if !self.config.ablation.use_deep {
            return Vec::new();
        }
        (0..self.config.model.deep_widths.len())
            .map(|i| DenseLayer { w: p.value(&deep_w(i)), b: p.value(&deep_b(i)) })
            .collect()
    }

    /// The table feature blocks read entity embeddings from.
    pub fn kg_table<'a>(&self, p: &'a ParamStore, frozen: &'a Tensor2D) -> &'a Tensor2D {
        if self.config.finetune_kg {
            p.value(KG_SLOT)
        } else {
            frozen
        }
    }

    fn forward(&self, p: &ParamStore, batch: &[&EncodedSample], frozen_kg: &Tensor2D) -> Result<ForwardCache> {
        let layout = &self.layout;
        let kg = self.kg_table(p, frozen_kg);
        if kg.cols() != self.kg_dim {
            return Err(Error::Dimension(format!("graph table dim {} vs model dim {}", kg.cols(), self.kg_dim)));
        }
        let conv = self.config.ablation.use_user_state.then(|| self.conv_params(p));
        let attention = self.config.ablation.use_dialogue.then(|| self.attention_params(p));
        let empty = Tensor2D::zeros(0, layout.cat_dim);
        let cat_table = if layout.n_cat_fields > 0 { p.value(CAT_SLOT) } else { &empty };
        let m = &self.config.model;
        let mut f = Tensor2D::zeros(batch.len(), layout.width());
        let mut samples = Vec::with_capacity(batch.len());
        for (r, s) in batch.iter().enumerate() {
            if s.categories.len() != layout.n_cat_fields {
                return Err(Error::Schema(format!(
                    "sample has {} categorical fields, model expects {}",
                    s.categories.len(),
                    layout.n_cat_fields
                )));
            }
            if s.dense.len() != layout.n_dense {
                return Err(Error::Schema(format!(
                    "sample has {} dense features, model expects {}",
                    s.dense.len(),
                    layout.n_dense
                )));
            }
            let row = f.row_mut(r);
            let cat_ids: Vec<usize> = s.categories.iter().enumerate().map(|(i, c)| self.cat_vocab.id(i, c)).collect();
            for (i, &c) in cat_ids.iter().enumerate() {
                row[i * layout.cat_dim..(i + 1) * layout.cat_dim].copy_from_slice(cat_table.row(c));
            }
            row[layout.dense_offset()..layout.u_offset()].copy_from_slice(&self.dense_stats.apply(&s.dense));
            let user = match &conv {
                Some(cp) => {
                    let b = behavior_matrix(&s.behaviors, kg)?;
                    let (u, trace) = user_state_traced(&b, cp)?;
                    row[layout.u_offset()..layout.d_offset()].copy_from_slice(&u);
                    Some((trace, s.behaviors.clone()))
                }
                None => None,
            };
            let dialogue = match &attention {
                Some(ap) => {
                    let (out, cache) = dialogue_forward(&s.dialogue, kg, ap, m.m_q, m.n_t)?;
                    row[layout.d_offset()..].copy_from_slice(out.data());
                    Some(cache)
                }
                None => None,
            };
            samples.push(SampleCache { cat_ids, user, dialogue });
        }

        let cross_layers = self.cross_layers(p);
        let cross = if self.config.ablation.use_cross { Some(cross_forward_batch(&f, &cross_layers)?) } else { None };
        let deep = if self.config.ablation.use_deep {
            Some(deep_forward_batch(&f, &self.deep_layers(p), m.activation)?)
        } else {
            None
        };
        let w = p.value(LOGITS_SLOT).data();
        let c_len = cross.as_ref().map_or(0, |(x, _)| x.cols());
        let mut z = vec![0.0; batch.len()];
        for (r, zr) in z.iter_mut().enumerate() {
            let mut acc = 0.0;
            if let Some((xc, _)) = &cross {
                acc += crate::numeric::dot(xc.row(r), &w[..c_len]);
            }
            if let Some((xd, _)) = &deep {
                acc += crate::numeric::dot(xd.row(r), &w[c_len..]);
            }
            *zr = acc;
        }
        Ok(ForwardCache { f, cross, deep, z, samples })
    }

    pub fn batch_loss(&self, p: &ParamStore, batch: &[&EncodedSample], frozen_kg: &Tensor2D) -> Result<f64> {
        let cache = self.forward(p, batch, frozen_kg)?;
        let probs: Vec<f64> = cache.z.iter().map(|&z| sigmoid_scalar(z)).collect();
        let labels: Vec<f64> = batch.iter().map(|s| s.label).collect();
        log_loss(&probs, &labels)
    }

    /// Mean log loss of `batch`; adds its gradient to every slot of `p`.
    pub fn batch_loss_and_grad(&self, p: &mut ParamStore, batch: &[&EncodedSample], frozen_kg: &Tensor2D) -> Result<f64> {
        let cache = self.forward(p, batch, frozen_kg)?;
        let n = batch.len();
        let probs: Vec<f64> = cache.z.iter().map(|&z| sigmoid_scalar(z)).collect();
        let labels: Vec<f64> = batch.iter().map(|s| s.label).collect();
        let loss = log_loss(&probs, &labels)?;
        let dz: Vec<f64> = probs.iter().zip(&labels).map(|(&p, &y)| log_loss_logit_grad(p, y, n)).collect();

        let layout = self.layout;
        let w_logits = p.value(LOGITS_SLOT).clone();
        let mut d_logits = Tensor2D::zeros(1, w_logits.cols());
        let mut d_f = Tensor2D::zeros(n, layout.width());
        let mut grads: Vec<(String, Tensor2D)> = Vec::new();
        let c_len = cache.cross.as_ref().map_or(0, |(x, _)| x.cols());

        if let Some((xc, cc)) = &cache.cross {
            let mut d_xc = Tensor2D::zeros(n, c_len);
            for r in 0..n {
                d_logits.data_mut()[..c_len].iter_mut().zip(xc.row(r)).for_each(|(a, x)| *a += dz[r] * x);
                d_xc.row_mut(r).iter_mut().zip(&w_logits.data()[..c_len]).for_each(|(a, w)| *a = dz[r] * w);
            }
            let layers = self.cross_layers(p);
            let (df, lg) = cross_backward(&cache.f, &layers, cc, &d_xc)?;
            d_f.add_scaled(&df, 1.0)?;
            for (i, (dw, db)) in lg.into_iter().enumerate() {
                grads.push((cross_w(i), dw));
                grads.push((cross_b(i), db));
            }
        }
        if let Some((xd, dc)) = &cache.deep {
            let d_len = xd.cols();
            let mut d_xd = Tensor2D::zeros(n, d_len);
            for r in 0..n {
                d_logits.data_mut()[c_len..].iter_mut().zip(xd.row(r)).for_each(|(a, x)| *a += dz[r] * x);
                d_xd.row_mut(r).iter_mut().zip(&w_logits.data()[c_len..]).for_each(|(a, w)| *a = dz[r] * w);
            }
            let layers = self.deep_layers(p);
            let (df, lg) = deep_backward(&cache.f, &layers, self.config.model.activation, dc, &d_xd)?;
            d_f.add_scaled(&df, 1.0)?;
            for (i, (dw, db)) in lg.into_iter().enumerate() {
                grads.push((deep_w(i), dw));
                grads.push((deep_b(i), db));
            }
        }
        grads.push((LOGITS_SLOT.into(), d_logits));

        let m = &self.config.model;
        let mut d_cat = (layout.n_cat_fields > 0).then(|| Tensor2D::zeros(self.cat_vocab.len(), layout.cat_dim));
        let mut d_kg = self.config.finetune_kg.then(|| Tensor2D::zeros(p.value(KG_SLOT).rows(), self.kg_dim));
        let conv = self.config.ablation.use_user_state.then(|| self.conv_params(p));
        let mut d_conv = conv.as_ref().map(ConvParams::zeros_like);
        let attention = self.config.ablation.use_dialogue.then(|| self.attention_params(p));
        let mut d_attn = attention.as_ref().map(AttentionParams::zeros_like);
        for (r, sc) in cache.samples.iter().enumerate() {
            let g = d_f.row(r);
            if let Some(dc) = d_cat.as_mut() {
                for (i, &c) in sc.cat_ids.iter().enumerate() {
                    let src = &g[i * layout.cat_dim..(i + 1) * layout.cat_dim];
                    dc.row_mut(c).iter_mut().zip(src).for_each(|(a, b)| *a += b);
                }
            }
            if let (Some((trace, log)), Some(cp), Some(dcv)) = (&sc.user, &conv, d_conv.as_mut()) {
                let d_u = &g[layout.u_offset()..layout.d_offset()];
                let d_b = user_state_backward(trace, cp, d_u, dcv, log.k());
                if let Some(dk) = d_kg.as_mut() {
                    behavior_matrix_backward(log, &d_b, dk);
                }
            }
            if let (Some(dcache), Some(ap), Some(da)) = (&sc.dialogue, &attention, d_attn.as_mut()) {
                let d_out = Tensor2D::from_vec(m.m_q + m.n_t, self.kg_dim, g[layout.d_offset()..].to_vec())?;
                dialogue_backward(dcache, ap, &d_out, da, d_kg.as_mut())?;
            }
        }
        if let Some(dc) = d_cat {
            grads.push((CAT_SLOT.into(), dc));
        }
        if let Some(dcv) = d_conv {
            for bank in dcv.banks {
                grads.push((conv_w(bank.width), bank.filters));
                grads.push((conv_b(bank.width), bank.bias));
            }
        }
        if let Some(da) = d_attn {
            for (h, head) in da.heads.into_iter().enumerate() {
                grads.push((attn(h, "ma"), head.m_a));
                grads.push((attn(h, "mb"), head.m_b));
                grads.push((attn(h, "wv"), head.w_v));
            }
        }
        if let Some(dk) = d_kg {
            grads.push((KG_SLOT.into(), dk));
        }
        for (name, g) in grads {
            p.grad_mut(&name).add_scaled(&g, 1.0)?;
        }
        Ok(loss)
    }

    /// Click probabilities under the model's own parameters.
    pub fn predict(&self, samples: &[EncodedSample], frozen_kg: &Tensor2D) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(samples.len());
        for chunk in samples.chunks(PREDICT_CHUNK) {
            let refs: Vec<&EncodedSample> = chunk.iter().collect();
            let cache = self.forward(&self.params, &refs, frozen_kg)?;
            out.extend(cache.z.iter().map(|&z| probability(z)));
        }
        Ok(out)
    }

    /// Feature vectors `f` of `samples`, one per row.
    pub fn features(&self, samples: &[EncodedSample], frozen_kg: &Tensor2D) -> Result<Tensor2D> {
        let refs: Vec<&EncodedSample> = samples.iter().collect();
        Ok(self.forward(&self.params, &refs, frozen_kg)?.f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::{Activation, Ablation};
    use crate::model::fixture::{fixture, tiny_config};
    use crate::model::layers::{cross_forward, deep_forward, logit_probability};
    use crate::numeric::finite_diff_check;

    fn build(cfg: &TrainConfig, data: &[EncodedSample], kg: &Tensor2D, seed: u64) -> KdcnModel {
        let n_cat = data[0].categories.len();
        let n_dense = data[0].dense.len();
        let layout = KdcnModel::layout_for(cfg, kg.cols(), n_cat, n_dense);
        let stats = DenseStats::fit(data, n_dense);
        KdcnModel::init(cfg, kg, CatVocab::build(data), layout, stats, &RngStream::new(seed)).unwrap()
    }

    #[test]
    fn every_slot_matches_finite_differences() {
        let fx = fixture(10, 1);
        let kg = fx.ckpt.entities();
        let batch: Vec<&EncodedSample> = fx.encoded.iter().collect();
        assert_eq!(batch.len(), 10);
        for activation in [Activation::Relu, Activation::Sigmoid] {
            let mut cfg = tiny_config();
            cfg.finetune_kg = true;
            cfg.model.activation = activation;
            let model = build(&cfg, &fx.encoded, kg, 5);
            let mut p = model.params.clone();
            let loss = model.batch_loss_and_grad(&mut p, &batch, kg).unwrap();
            assert!(loss.is_finite() && loss > 0.0);
            let names: Vec<String> = p.names().map(String::from).collect();
            assert_eq!(names.len(), 1 + 4 + 6 + 4 + 4 + 1 + 1);
            for name in names {
                let check =
                    finite_diff_check(|s| model.batch_loss(s, &batch, kg).unwrap(), &mut p, &name, 1e-5).unwrap();
                assert!(check.max_rel_error < 1e-4, "{activation:?} {name}: {check:?}");
            }
        }
    }

    #[test]
    fn predictions_are_probabilities() {
        let fx = fixture(40, 2);
        let kg = fx.ckpt.entities();
        let mut model = build(&tiny_config(), &fx.encoded, kg, 3);
        let p = model.predict(&fx.encoded, kg).unwrap();
        assert!(p.iter().all(|&p| p > 0.0 && p < 1.0));
        let w = model.params.value_mut(LOGITS_SLOT);
        *w = w.scale(-1.0);
        let q = model.predict(&fx.encoded, kg).unwrap();
        for (a, b) in p.iter().zip(&q) {
            assert!((a + b - 1.0).abs() < 1e-12);
        }
        model.params.value_mut(LOGITS_SLOT).fill(0.0);
        assert!(model.predict(&fx.encoded, kg).unwrap().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn features_follow_the_layout() {
        let fx = fixture(6, 3);
        let kg = fx.ckpt.entities();
        let cfg = tiny_config();
        let model = build(&cfg, &fx.encoded, kg, 4);
        let f = model.features(&fx.encoded, kg).unwrap();
        let l = model.layout;
        assert_eq!(l.width(), 3 * 3 + 3 + 2 * 3 + 6 * 4);
        for (r, s) in fx.encoded.iter().enumerate() {
            let row = f.row(r);
            let table = model.params.value(CAT_SLOT);
            for (i, c) in s.categories.iter().enumerate() {
                assert_eq!(&row[i * 3..i * 3 + 3], table.row(model.cat_vocab.id(i, c)));
            }
            assert_eq!(&row[l.dense_offset()..l.u_offset()], model.dense_stats.apply(&s.dense).as_slice());
            assert!(row[l.u_offset()..l.d_offset()].iter().all(|&u| u >= 0.0));
        }
    }

    #[test]
    fn unseen_categories_share_the_unknown_row() {
        let fx = fixture(8, 4);
        let v = CatVocab::build(&fx.encoded);
        assert_eq!(v.id(0, "never-seen"), 0);
        assert_eq!(v.names()[0], UNKNOWN_CATEGORY);
        assert_eq!(v.id(0, &fx.encoded[0].categories[0]), 1);
    }

    /// Feature vector of the categorical and dense blocks only, composed
    /// from the single-vector layer functions.
    fn dcn_oracle(model: &KdcnModel, s: &EncodedSample) -> f64 {
        let p = &model.params;
        let mut f = Vec::new();
        for (i, c) in s.categories.iter().enumerate() {
            f.extend_from_slice(p.value(CAT_SLOT).row(model.cat_vocab.id(i, c)));
        }
        f.extend(model.dense_stats.apply(&s.dense));
        let m = &model.config.model;
        let cross: Vec<CrossLayer> = (0..m.cross_layers)
            .map(|i| CrossLayer { w: p.value(&cross_w(i)), b: p.value(&cross_b(i)) })
            .collect();
        let deep: Vec<DenseLayer> = (0..m.deep_widths.len())
            .map(|i| DenseLayer { w: p.value(&deep_w(i)), b: p.value(&deep_b(i)) })
            .collect();
        let xc = cross_forward(&f, &cross).unwrap();
        let xd = deep_forward(&f, &deep, m.activation).unwrap();
        logit_probability(&xc, &xd, p.value(LOGITS_SLOT).data()).unwrap()
    }

    #[test]
    fn disabled_blocks_are_absent() {
        let mut fx = fixture(30, 5);
        let mut cfg = tiny_config();
        cfg.ablation = Ablation { use_user_state: false, use_dialogue: false, ..Ablation::default() };
        let kg = fx.ckpt.entities().clone();
        let model = build(&cfg, &fx.encoded, &kg, 6);
        assert!(model.params.names().all(|n| !n.starts_with("conv") && !n.starts_with("attn")));
        assert_eq!(model.layout.width(), 3 * 3 + 3);

        let p = model.predict(&fx.encoded, &kg).unwrap();
        for (s, &pi) in fx.encoded.iter().zip(&p) {
            assert!((dcn_oracle(&model, s) - pi).abs() < 1e-12);
        }
        let other_kg = kg.map(|x| 3.0 * x + 1.0);
        for s in &mut fx.encoded {
            s.dialogue = crate::features::DialogueInput::new(vec![], vec![], 3, 3);
            s.behaviors = crate::features::BehaviorLog::new(vec![vec![]; 4]);
        }
        let q = model.predict(&fx.encoded, &other_kg).unwrap();
        assert_eq!(p.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), q.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        let mut p1 = model.params.clone();
        let mut p2 = model.params.clone();
        let batch: Vec<&EncodedSample> = fx.encoded.iter().collect();
        let l1 = model.batch_loss_and_grad(&mut p1, &batch, &kg).unwrap();
        let l2 = model.batch_loss_and_grad(&mut p2, &batch, &other_kg).unwrap();
        assert_eq!(l1.to_bits(), l2.to_bits());
        assert_eq!(p1, p2);
    }

    #[test]
    fn switching_a_block_off_keeps_other_initial_values() {
        let fx = fixture(10, 6);
        let kg = fx.ckpt.entities();
        let full = build(&tiny_config(), &fx.encoded, kg, 7);
        let mut cfg = tiny_config();
        cfg.ablation.use_user_state = false;
        let partial = build(&cfg, &fx.encoded, kg, 7);
        for name in ["cat.table", "attn.0.ma", "attn.1.wv"] {
            assert_eq!(full.params.value(name), partial.params.value(name));
        }
    }

    #[test]
    fn shape_errors() {
        let fx = fixture(5, 7);
        let kg = fx.ckpt.entities();
        let model = build(&tiny_config(), &fx.encoded, kg, 8);
        let mut bad = fx.encoded[0].clone();
        bad.dense.push(1.0);
        assert!(matches!(model.predict(&[bad], kg), Err(Error::Schema(_))));
        let narrow = Tensor2D::zeros(kg.rows(), 2);
        assert!(matches!(model.predict(&fx.encoded, &narrow), Err(Error::Dimension(_))));
        let mut cfg = tiny_config();
        cfg.model.heads = 3;
        let layout = KdcnModel::layout_for(&cfg, 4, 3, 3);
        let r = KdcnModel::init(&cfg, kg, CatVocab::default(), layout, DenseStats::fit(&fx.encoded, 3), &RngStream::new(0));
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
