//! Cross network, deep network, logits and the log loss.
//!
//! Batched forms take one sample per row.

use super::config::Activation;
use crate::error::{dim_err, Error, Result};
use crate::numeric::{dot, relu_scalar, sigmoid_scalar, Tensor2D};

/// Probabilities are clamped to `[P_CLAMP, 1 − P_CLAMP]`, both when reported
/// and inside the loss.
pub const P_CLAMP: f64 = 1e-12;

/// `σ(z)` kept strictly inside (0, 1).
#[inline]
pub fn probability(z: f64) -> f64 {
    sigmoid_scalar(z).clamp(P_CLAMP, 1.0 - P_CLAMP)
}

#[derive(Debug, Clone, Copy)]
pub struct CrossLayer<'a> {
    /// 1×n.
    pub w: &'a Tensor2D,
    /// 1×n.
    pub b: &'a Tensor2D,
}

#[derive(Debug, Clone, Copy)]
pub struct DenseLayer<'a> {
    /// in×out.
    pub w: &'a Tensor2D,
    /// 1×out.
    pub b: &'a Tensor2D,
}

fn add_row(x: &mut Tensor2D, row: &[f64]) {
    for r in 0..x.rows() {
        x.row_mut(r).iter_mut().zip(row).for_each(|(a, b)| *a += b);
    }
}

fn col_sums(x: &Tensor2D) -> Tensor2D {
    let mut out = Tensor2D::zeros(1, x.cols());
    for r in 0..x.rows() {
        out.data_mut().iter_mut().zip(x.row(r)).for_each(|(a, b)| *a += b);
    }
    out
}

#[derive(Debug, Clone)]
pub struct CrossCache {
    inputs: Vec<Tensor2D>,
    s: Vec<Vec<f64>>,
}

/// `x ← f·(x·w) + b + x` per layer, starting from `x = f`.
pub fn cross_forward_batch(f: &Tensor2D, layers: &[CrossLayer]) -> Result<(Tensor2D, CrossCache)> {
    let n = f.cols();
    let mut x = f.clone();
    let mut inputs = Vec::with_capacity(layers.len());
    let mut all_s = Vec::with_capacity(layers.len());
    for l in layers {
        if l.w.shape() != (1, n) || l.b.shape() != (1, n) {
            return Err(dim_err("cross layer vs feature width", l.w.shape(), (1, n)));
        }
        let s: Vec<f64> = (0..x.rows()).map(|r| dot(x.row(r), l.w.data())).collect();
        let mut next = x.clone();
        for r in 0..x.rows() {
            let (fr, sr) = (f.row(r), s[r]);
            next.row_mut(r).iter_mut().zip(fr).zip(l.b.data()).for_each(|((o, fv), b)| *o += fv * sr + b);
        }
        inputs.push(std::mem::replace(&mut x, next));
        all_s.push(s);
    }
    Ok((x, CrossCache { inputs, s: all_s }))
}

/// Returns `∂/∂f` and `(∂w, ∂b)` per layer.
pub fn cross_backward(
    f: &Tensor2D,
    layers: &[CrossLayer],
    cache: &CrossCache,
    d_out: &Tensor2D,
) -> Result<(Tensor2D, Vec<(Tensor2D, Tensor2D)>)> {
    let mut g = d_out.clone();
    let mut d_f = Tensor2D::zeros(f.rows(), f.cols());
    let mut grads = Vec::with_capacity(layers.len());
    for (i, l) in layers.iter().enumerate().rev() {
        let x = &cache.inputs[i];
        let s = &cache.s[i];
        let db = col_sums(&g);
        let mut dw = Tensor2D::zeros(1, f.cols());
        for r in 0..f.rows() {
            let ds = dot(g.row(r), f.row(r));
            d_f.row_mut(r).iter_mut().zip(g.row(r)).for_each(|(a, gv)| *a += gv * s[r]);
            dw.data_mut().iter_mut().zip(x.row(r)).for_each(|(a, xv)| *a += ds * xv);
            g.row_mut(r).iter_mut().zip(l.w.data()).for_each(|(a, wv)| *a += ds * wv);
        }
        grads.push((dw, db));
    }
    grads.reverse();
    d_f.add_scaled(&g, 1.0)?;
    Ok((d_f, grads))
}

fn activate(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Relu => relu_scalar(x),
        Activation::Sigmoid => sigmoid_scalar(x),
    }
}

/// Derivative expressed through the activation's output.
fn activate_grad(a: Activation, y: f64) -> f64 {
    match a {
        Activation::Relu => {
            if y > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Sigmoid => y * (1.0 - y),
    }
}

#[derive(Debug, Clone)]
pub struct DeepCache {
    outputs: Vec<Tensor2D>,
}

pub fn deep_forward_batch(x: &Tensor2D, layers: &[DenseLayer], act: Activation) -> Result<(Tensor2D, DeepCache)> {
    let mut outputs: Vec<Tensor2D> = Vec::with_capacity(layers.len());
    for (i, l) in layers.iter().enumerate() {
        let input = if i == 0 { x } else { &outputs[i - 1] };
        if l.b.shape() != (1, l.w.cols()) {
            return Err(dim_err("deep bias vs weight", l.b.shape(), l.w.shape()));
        }
        let mut h = input.matmul(l.w)?;
        add_row(&mut h, l.b.data());
        outputs.push(h.map(|v| activate(act, v)));
    }
    let out = outputs.last().cloned().unwrap_or_else(|| x.clone());
    Ok((out, DeepCache { outputs }))
}

pub fn deep_backward(
    x: &Tensor2D,
    layers: &[DenseLayer],
    act: Activation,
    cache: &DeepCache,
    d_out: &Tensor2D,
) -> Result<(Tensor2D, Vec<(Tensor2D, Tensor2D)>)> {
    let mut g = d_out.clone();
    let mut grads = Vec::with_capacity(layers.len());
    for (i, l) in layers.iter().enumerate().rev() {
        let input = if i == 0 { x } else { &cache.outputs[i - 1] };
        let pre = g.zip_map(&cache.outputs[i], |g, y| g * activate_grad(act, y))?;
        grads.push((input.matmul_tn(&pre)?, col_sums(&pre)));
        g = pre.matmul_nt(l.w)?;
    }
    grads.reverse();
    Ok((g, grads))
}

pub fn cross_forward(f: &[f64], layers: &[CrossLayer]) -> Result<Vec<f64>> {
    Ok(cross_forward_batch(&Tensor2D::row_vector(f.to_vec()), layers)?.0.into_data())
}

pub fn deep_forward(f: &[f64], layers: &[DenseLayer], act: Activation) -> Result<Vec<f64>> {
    Ok(deep_forward_batch(&Tensor2D::row_vector(f.to_vec()), layers, act)?.0.into_data())
}

/// `σ([x_c, x_d] · w)` without a bias.
pub fn logit_probability(x_c: &[f64], x_d: &[f64], w: &[f64]) -> Result<f64> {
    if x_c.len() + x_d.len() != w.len() {
        return Err(Error::Dimension(format!(
            "logits weight of length {} for outputs of length {} + {}",
            w.len(),
            x_c.len(),
            x_d.len()
        )));
    }
    let (wc, wd) = w.split_at(x_c.len());
    Ok(probability(dot(x_c, wc) + dot(x_d, wd)))
}

/// Mean binary cross-entropy.
pub fn log_loss(p: &[f64], y: &[f64]) -> Result<f64> {
    if p.len() != y.len() {
        return Err(Error::Pairing(format!("{} probabilities vs {} labels", p.len(), y.len())));
    }
    if p.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / p.len() as f64)
}

/// Gradient of [`log_loss`] w.r.t. the pre-sigmoid logit of one sample;
/// zero where the clamp is active.
pub fn log_loss_logit_grad(p: f64, y: f64, n: usize) -> f64 {
    if p < P_CLAMP || p > 1.0 - P_CLAMP {
        0.0
    } else {
        (p - y) / n as f64
    }
}
