//! Structural encoder: a stack of GCN layers `X' = σ(P · X · W)` where `P`
//! is either the dense normalized adjacency or a sparse sampled-mean
//! operator rebuilt for every batch.

use super::config::{EncoderMode, Normalization, PretrainConfig};
use crate::ckg::graph::draw_from;
use crate::ckg::{mean_adjacency, normalized_adjacency, EntityId, Graph};
use crate::error::{dim_err, Result};
use crate::numeric::{axpy, sigmoid, RngStream, Tensor2D};

/// Trainable pretraining tables.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainParams {
    /// Layer-0 input `E`, n_e×d.
    pub entity_table: Tensor2D,
    /// One row per schema relation, 9×d.
    pub relation_table: Tensor2D,
    /// One d×d matrix per layer.
    pub gcn_weights: Vec<Tensor2D>,
}

/// Neighbor mixing operator for one layer.
#[derive(Debug, Clone)]
pub enum Propagation {
    Dense(Tensor2D),
    /// Row i lists (column, weight) pairs.
    Sparse(Vec<Vec<(u32, f64)>>),
}

impl Propagation {
    pub fn n(&self) -> usize {
        match self {
            Propagation::Dense(a) => a.rows(),
            Propagation::Sparse(rows) => rows.len(),
        }
    }

    /// `P · x`.
    pub fn apply(&self, x: &Tensor2D) -> Result<Tensor2D> {
        match self {
            Propagation::Dense(a) => a.matmul(x),
            Propagation::Sparse(rows) => {
                if rows.len() != x.rows() {
                    return Err(dim_err("sparse propagation", (rows.len(), rows.len()), x.shape()));
                }
                let mut out = Tensor2D::zeros(x.rows(), x.cols());
                for (i, row) in rows.iter().enumerate() {
                    let o = out.row_mut(i);
                    for &(j, w) in row {
                        axpy(o, w, x.row(j as usize));
                    }
                }
                Ok(out)
            }
        }
    }

    /// `Pᵀ · g`.
    pub fn apply_transpose(&self, g: &Tensor2D) -> Result<Tensor2D> {
        match self {
            Propagation::Dense(a) => a.matmul_tn(g),
            Propagation::Sparse(rows) => {
                if rows.len() != g.rows() {
                    return Err(dim_err("sparse propagation", (rows.len(), rows.len()), g.shape()));
                }
                let mut out = Tensor2D::zeros(g.rows(), g.cols());
                for (i, row) in rows.iter().enumerate() {
                    for &(j, w) in row {
                        let src = g.row(i);
                        axpy(out.row_mut(j as usize), w, src);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Propagation operators for every layer of one forward pass.
#[derive(Debug, Clone)]
pub struct LayerPlan {
    props: Vec<Propagation>,
    layers: usize,
}

impl LayerPlan {
    /// The same operator for every layer.
    pub fn shared(p: Propagation, layers: usize) -> Self {
        Self { props: vec![p], layers }
    }

    pub fn per_layer(props: Vec<Propagation>) -> Self {
        let layers = props.len();
        Self { props, layers }
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn layer(&self, l: usize) -> &Propagation {
        &self.props[l.min(self.props.len() - 1)]
    }

    /// Builds the plan prescribed by `cfg`: one dense matrix in full mode,
    /// or fresh neighbor draws for each layer in sampled mode.
    pub fn build(g: &Graph, cfg: &PretrainConfig, rng: &mut RngStream) -> Result<Self> {
        match cfg.mode {
            EncoderMode::Full => {
                let a = match cfg.normalization {
                    Normalization::Symmetric => normalized_adjacency(g, cfg.self_loops)?,
                    Normalization::Mean => mean_adjacency(g, cfg.self_loops)?,
                };
                Ok(Self::shared(Propagation::Dense(a), cfg.layers))
            }
            EncoderMode::Sampled => {
                let props = (0..cfg.layers)
                    .map(|_| sampled_mean(g, cfg.fanout, cfg.self_loops, cfg.pad_small_neighborhoods, rng))
                    .collect();
                Ok(Self::per_layer(props))
            }
        }
    }
}

/// Sparse mean over sampled neighborhoods. Up to `fanout` neighbors are
/// drawn and the entity itself is always added when `self_loops`.
/// Neighborhoods no larger than `fanout` are used whole unless `pad` is set.
pub fn sampled_mean(g: &Graph, fanout: usize, self_loops: bool, pad: bool, rng: &mut RngStream) -> Propagation {
    let rows = (0..g.n_entities())
        .map(|i| {
            let e = EntityId::from_index(i);
            let neighbors = g.neighbors(e);
            let mut draws = if neighbors.is_empty() && self_loops {
                Vec::new()
            } else {
                draw_from(neighbors, e, fanout, pad, rng)
            };
            if self_loops {
                draws.push(e);
            }
            let w = 1.0 / draws.len() as f64;
            let mut row: Vec<(u32, f64)> = Vec::with_capacity(draws.len());
            for d in draws {
                match row.iter_mut().find(|(j, _)| *j == d.0) {
                    Some(entry) => entry.1 += w,
                    None => row.push((d.0, w)),
                }
            }
            row
        })
        .collect();
    Propagation::Sparse(rows)
}

/// One GCN layer, `σ(a_norm · x · w)`.
pub fn gcn_layer(x: &Tensor2D, a_norm: &Tensor2D, w: &Tensor2D) -> Result<Tensor2D> {
    if a_norm.rows() != a_norm.cols() || a_norm.cols() != x.rows() {
        return Err(dim_err("gcn adjacency vs features", a_norm.shape(), x.shape()));
    }
    if x.cols() != w.rows() {
        return Err(dim_err("gcn features vs weight", x.shape(), w.shape()));
    }
    Ok(sigmoid(&a_norm.matmul(x)?.matmul(w)?))
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    /// `P_l · X_l` for each layer.
    mixed: Vec<Tensor2D>,
    /// `X_{l+1}` for each layer; the last one is the encoder output.
    outputs: Vec<Tensor2D>,
}

impl EncoderCache {
    pub fn output(&self) -> &Tensor2D {
        self.outputs.last().expect("encoder has at least one layer")
    }
}

pub fn forward(entity_table: &Tensor2D, weights: &[&Tensor2D], plan: &LayerPlan) -> Result<EncoderCache> {
    debug_assert_eq!(weights.len(), plan.layers());
    let mut mixed = Vec::with_capacity(weights.len());
    let mut outputs: Vec<Tensor2D> = Vec::with_capacity(weights.len());
    for (l, w) in weights.iter().enumerate() {
        let input = if l == 0 { entity_table } else { &outputs[l - 1] };
        let p = plan.layer(l);
        if p.n() != input.rows() {
            return Err(dim_err("propagation vs features", (p.n(), p.n()), input.shape()));
        }
        let m = p.apply(input)?;
        let out = sigmoid(&m.matmul(w)?);
        mixed.push(m);
        outputs.push(out);
    }
    Ok(EncoderCache { mixed, outputs })
}

/// Backpropagates `d_out` (gradient w.r.t. the encoder output). Returns the
/// gradient w.r.t. the entity table and each layer weight.
pub fn backward(
    cache: &EncoderCache,
    weights: &[&Tensor2D],
    plan: &LayerPlan,
    d_out: Tensor2D,
) -> Result<(Tensor2D, Vec<Tensor2D>)> {
    let mut d_weights = vec![Tensor2D::zeros(0, 0); weights.len()];
    let mut grad = d_out;
    for l in (0..weights.len()).rev() {
        let pre = grad.zip_map(&cache.outputs[l], |g, y| g * y * (1.0 - y))?;
        d_weights[l] = cache.mixed[l].matmul_tn(&pre)?;
        let d_mixed = pre.matmul_nt(weights[l])?;
        grad = plan.layer(l).apply_transpose(&d_mixed)?;
    }
    Ok((grad, d_weights))
}

/// Runs the encoder once with a freshly built plan.
pub fn encode_entities(params: &PretrainParams, g: &Graph, cfg: &PretrainConfig, rng: &mut RngStream) -> Result<Tensor2D> {
    if params.gcn_weights.len() != cfg.layers {
        return Err(crate::Error::Config(format!(
            "{} gcn weights for {} configured layers",
            params.gcn_weights.len(),
            cfg.layers
        )));
    }
    if params.entity_table.rows() != g.n_entities() {
        return Err(dim_err(
            "entity table vs graph",
            params.entity_table.shape(),
            (g.n_entities(), cfg.dim),
        ));
    }
    let plan = LayerPlan::build(g, cfg, rng)?;
    let weights: Vec<&Tensor2D> = params.gcn_weights.iter().collect();
    let cache = forward(&params.entity_table, &weights, &plan)?;
    Ok(cache.outputs.into_iter().last().expect("at least one layer"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_zero_input() {
        let out = gcn_layer(&Tensor2D::zeros(1, 3), &Tensor2D::identity(1), &Tensor2D::identity(3)).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.5));
    }

    #[test]
    fn two_node_hand_product() {
        let a = Tensor2D::filled(2, 2, 0.5);
        let x = Tensor2D::identity(2);
        let out = gcn_layer(&x, &a, &Tensor2D::identity(2)).unwrap();
        let expected = 1.0 / (1.0 + (-0.5f64).exp());
        for v in out.data() {
            assert!((v - expected).abs() < 1e-15);
        }
        assert!((expected - 0.6225).abs() < 1e-4);
    }

    #[test]
    fn symmetric_graph_identical_rows() {
        let a = Tensor2D::filled(2, 2, 0.5);
        let x = Tensor2D::from_rows(&[vec![0.3, -0.2], vec![0.3, -0.2]]).unwrap();
        let w = Tensor2D::from_rows(&[vec![1.0, 2.0], vec![-0.5, 0.1]]).unwrap();
        let out = gcn_layer(&x, &a, &w).unwrap();
        assert_eq!(out.row(0), out.row(1));
    }

    #[test]
    fn shape_errors() {
        let a = Tensor2D::identity(2);
        assert!(gcn_layer(&Tensor2D::zeros(3, 2), &a, &Tensor2D::identity(2)).is_err());
        assert!(gcn_layer(&Tensor2D::zeros(2, 2), &a, &Tensor2D::identity(3)).is_err());
    }

    #[test]
    fn isolated_nodes_do_not_mix() {
        let g = Graph::from_edges(3, []);
        let cfg = PretrainConfig {
            dim: 2,
            layers: 1,
            mode: EncoderMode::Full,
            ..PretrainConfig::default()
        };
        let params = PretrainParams {
            entity_table: Tensor2D::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0], vec![0.5, 0.5]]).unwrap(),
            relation_table: Tensor2D::zeros(9, 2),
            gcn_weights: vec![Tensor2D::from_rows(&[vec![0.2, -0.4], vec![1.0, 0.3]]).unwrap()],
        };
        let out = encode_entities(&params, &g, &cfg, &mut RngStream::new(0)).unwrap();
        let direct = sigmoid(&params.entity_table.matmul(&params.gcn_weights[0]).unwrap());
        assert!(out.max_abs_diff(&direct) < 1e-15);
    }

    #[test]
    fn sparse_transpose_matches_dense() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]);
        let p = sampled_mean(&g, 10, true, false, &mut RngStream::new(0));
        let dense = mean_adjacency(&g, true).unwrap();
        let x = Tensor2D::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0], vec![2.0, -2.0]]).unwrap();
        assert!(p.apply(&x).unwrap().max_abs_diff(&dense.matmul(&x).unwrap()) < 1e-15);
        assert!(p.apply_transpose(&x).unwrap().max_abs_diff(&dense.matmul_tn(&x).unwrap()) < 1e-15);
    }
}
