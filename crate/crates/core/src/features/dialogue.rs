//! Dialogue interaction: multi-head self-attention over the query and title
//! keyword embeddings, laid out in fixed slots and zero-padded.
//!
//! Query keywords occupy rows `0..n_q` and title keywords rows
//! `m_q..m_q + n_t` of the `(m_q + n_t)×d` output; other rows stay zero.
//! Attention runs over the real rows only, which is the same as masking
//! pad positions out of the softmax.

use crate::ckg::EntityId;
use crate::error::{dim_err, Error, Result};
use crate::numeric::{ops::softmax_in_place, Tensor2D};

use super::keywords::dedup_capped;

#[derive(Debug, Clone, PartialEq)]
pub struct DialogueInput {
    pub query_keywords: Vec<EntityId>,
    pub title_keywords: Vec<EntityId>,
}

impl DialogueInput {
    /// Deduplicates each list and applies the caps.
    pub fn new(query: impl IntoIterator<Item = EntityId>, title: impl IntoIterator<Item = EntityId>, m_q: usize, n_t: usize) -> Self {
        Self {
            query_keywords: dedup_capped(query, m_q),
            title_keywords: dedup_capped(title, n_t),
        }
    }

    fn len(&self) -> usize {
        self.query_keywords.len() + self.title_keywords.len()
    }
}

/// Projections of one head, each `(d/H)×d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionHead {
    pub m_a: Tensor2D,
    pub m_b: Tensor2D,
    pub w_v: Tensor2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub heads: Vec<AttentionHead>,
}

impl AttentionParams {
    pub fn zeros_like(&self) -> Self {
        let z = |t: &Tensor2D| Tensor2D::zeros(t.rows(), t.cols());
        Self {
            heads: self
                .heads
                .iter()
                .map(|h| AttentionHead { m_a: z(&h.m_a), m_b: z(&h.m_b), w_v: z(&h.w_v) })
                .collect(),
        }
    }
}

/// Row-softmax of `logits` applied to `values`: returns (weights, output).
pub fn attend(logits: &Tensor2D, values: &Tensor2D) -> Result<(Tensor2D, Tensor2D)> {
    let mut a = logits.clone();
    for r in 0..a.rows() {
        softmax_in_place(a.row_mut(r));
    }
    let out = a.matmul(values)?;
    Ok((a, out))
}

#[derive(Debug, Clone)]
struct HeadCache {
    q: Tensor2D,
    k: Tensor2D,
    v: Tensor2D,
    a: Tensor2D,
}

#[derive(Debug, Clone)]
pub struct DialogueCache {
    ids: Vec<EntityId>,
    slots: Vec<usize>,
    x: Tensor2D,
    heads: Vec<HeadCache>,
}

impl DialogueCache {
    /// Attention weights of head `h` over the real positions.
    pub fn weights(&self, h: usize) -> &Tensor2D {
        &self.heads[h].a
    }
}

fn check_heads(params: &AttentionParams, d: usize) -> Result<usize> {
    let h = params.heads.len();
    if h == 0 || d % h != 0 {
        return Err(Error::Dimension(format!("{h} attention heads do not divide embedding dim {d}")));
    }
    let dh = d / h;
    for head in &params.heads {
        for t in [&head.m_a, &head.m_b, &head.w_v] {
            if t.shape() != (dh, d) {
                return Err(dim_err("attention projection", t.shape(), (dh, d)));
            }
        }
    }
    Ok(dh)
}

pub fn dialogue_interaction(
    input: &DialogueInput,
    table: &Tensor2D,
    params: &AttentionParams,
    m_q: usize,
    n_t: usize,
) -> Result<Tensor2D> {
    Ok(dialogue_forward(input, table, params, m_q, n_t)?.0)
}

pub fn dialogue_forward(
    input: &DialogueInput,
    table: &Tensor2D,
    params: &AttentionParams,
    m_q: usize,
    n_t: usize,
) -> Result<(Tensor2D, DialogueCache)> {
    let d = table.cols();
    let dh = check_heads(params, d)?;
    if input.query_keywords.len() > m_q || input.title_keywords.len() > n_t {
        return Err(Error::Dimension(format!(
            "{} query / {} title keywords exceed caps {m_q} / {n_t}",
            input.query_keywords.len(),
            input.title_keywords.len()
        )));
    }
    let ids: Vec<EntityId> = input.query_keywords.iter().chain(&input.title_keywords).copied().collect();
    let slots: Vec<usize> = (0..input.query_keywords.len())
        .chain((0..input.title_keywords.len()).map(|i| m_q + i))
        .collect();
    let m = input.len();
    let mut x = Tensor2D::zeros(m, d);
    for (r, id) in ids.iter().enumerate() {
        if id.index() >= table.rows() {
            return Err(Error::Lookup(format!("keyword id {} outside the embedding table", id.0)));
        }
        x.row_mut(r).copy_from_slice(table.row(id.index()));
    }
    let mut out = Tensor2D::zeros(m_q + n_t, d);
    let mut heads = Vec::with_capacity(params.heads.len());
    for (h, head) in params.heads.iter().enumerate() {
        let q = x.matmul_nt(&head.m_a)?;
        let k = x.matmul_nt(&head.m_b)?;
        let v = x.matmul_nt(&head.w_v)?;
        let (a, o) = attend(&q.matmul_nt(&k)?, &v)?;
        for (r, &slot) in slots.iter().enumerate() {
            out.row_mut(slot)[h * dh..(h + 1) * dh].copy_from_slice(o.row(r));
        }
        heads.push(HeadCache { q, k, v, a });
    }
    Ok((out, DialogueCache { ids, slots, x, heads }))
}

/// Accumulates projection gradients into `grads` and adds the gradient
/// w.r.t. the gathered keyword embeddings onto `d_table` rows when given.
pub fn dialogue_backward(
    cache: &DialogueCache,
    params: &AttentionParams,
    d_out: &Tensor2D,
    grads: &mut AttentionParams,
    d_table: Option<&mut Tensor2D>,
) -> Result<()> {
    let m = cache.ids.len();
    if m == 0 {
        return Ok(());
    }
    let d = cache.x.cols();
    let dh = d / params.heads.len();
    let mut d_x = Tensor2D::zeros(m, d);
    for (h, (head, hc)) in params.heads.iter().zip(&cache.heads).enumerate() {
        let mut d_o = Tensor2D::zeros(m, dh);
        for (r, &slot) in cache.slots.iter().enumerate() {
            d_o.row_mut(r).copy_from_slice(&d_out.row(slot)[h * dh..(h + 1) * dh]);
        }
        let d_a = d_o.matmul_nt(&hc.v)?;
        let d_v = hc.a.matmul_tn(&d_o)?;
        let mut d_l = Tensor2D::zeros(m, m);
        for i in 0..m {
            let (a, g) = (hc.a.row(i), d_a.row(i));
            let s: f64 = a.iter().zip(g).map(|(a, g)| a * g).sum();
            for (o, (a, g)) in d_l.row_mut(i).iter_mut().zip(a.iter().zip(g)) {
                *o = a * (g - s);
            }
        }
        let d_q = d_l.matmul(&hc.k)?;
        let d_k = d_l.matmul_tn(&hc.q)?;
        let g = &mut grads.heads[h];
        g.m_a.add_scaled(&d_q.matmul_tn(&cache.x)?, 1.0)?;
        g.m_b.add_scaled(&d_k.matmul_tn(&cache.x)?, 1.0)?;
        g.w_v.add_scaled(&d_v.matmul_tn(&cache.x)?, 1.0)?;
        d_x.add_scaled(&d_q.matmul(&head.m_a)?, 1.0)?;
        d_x.add_scaled(&d_k.matmul(&head.m_b)?, 1.0)?;
        d_x.add_scaled(&d_v.matmul(&head.w_v)?, 1.0)?;
    }
    if let Some(dt) = d_table {
        for (r, id) in cache.ids.iter().enumerate() {
            crate::numeric::axpy(dt.row_mut(id.index()), 1.0, d_x.row(r));
        }
    }
    Ok(())
}
