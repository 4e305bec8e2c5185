use super::store::{EntityId, TripleSet};
use crate::error::{Error, Result};
use crate::numeric::{RngStream, Tensor2D};

/// Largest entity count for which a dense n×n adjacency is built.
pub const DENSE_GUARD: usize = 10_000;

/// Undirected structural view of a triple set: relation direction and type
/// are discarded, parallel edges collapse.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<EntityId>>,
}

impl Graph {
    pub fn from_triples(triples: &TripleSet) -> Self {
        Self::from_edges(
            triples.n_entities(),
            triples.triples().iter().map(|t| (t.head.index(), t.tail.index())),
        )
    }

    /// Builds from an undirected edge list; self-edges are ignored.
    pub fn from_edges(n_entities: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n_entities];
        for (a, b) in edges {
            if a == b {
                continue;
            }
            adjacency[a].push(EntityId::from_index(b));
            adjacency[b].push(EntityId::from_index(a));
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Self { adjacency }
    }

    pub fn n_entities(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, e: EntityId) -> &[EntityId] {
        &self.adjacency[e.index()]
    }

    pub fn degree(&self, e: EntityId) -> usize {
        self.adjacency[e.index()].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Neighbor list of `e`, with `e` itself merged in when `self_loops`.
    pub fn closed_neighborhood(&self, e: EntityId, self_loops: bool) -> Vec<EntityId> {
        let mut out = self.adjacency[e.index()].clone();
        if self_loops {
            let pos = out.binary_search(&e).unwrap_or_else(|p| p);
            out.insert(pos, e);
        }
        out
    }

    fn check_dense(&self) -> Result<()> {
        if self.n_entities() > DENSE_GUARD {
            return Err(Error::Capacity(format!(
                "dense adjacency over {} entities exceeds the guard of {DENSE_GUARD}",
                self.n_entities()
            )));
        }
        Ok(())
    }

    fn check_entity(&self, e: EntityId) -> Result<()> {
        if e.index() >= self.n_entities() {
            return Err(Error::Index(format!(
                "entity {e} out of range for a graph of {} entities",
                self.n_entities()
            )));
        }
        Ok(())
    }
}

/// Dense `D^{-1/2} Â D^{-1/2}` with `Â = A (+ I when self_loops)`. Rows of
/// entities with zero degree in `Â` are all zero.
pub fn normalized_adjacency(g: &Graph, self_loops: bool) -> Result<Tensor2D> {
    g.check_dense()?;
    let n = g.n_entities();
    let loop_w = if self_loops { 1.0 } else { 0.0 };
    let inv_sqrt: Vec<f64> = g
        .adjacency
        .iter()
        .map(|a| {
            let d = a.len() as f64 + loop_w;
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut m = Tensor2D::zeros(n, n);
    for i in 0..n {
        if self_loops {
            m[(i, i)] = inv_sqrt[i] * inv_sqrt[i];
        }
        for &j in &g.adjacency[i] {
            m[(i, j.index())] = inv_sqrt[i] * inv_sqrt[j.index()];
        }
    }
    Ok(m)
}

/// Dense row-stochastic `D^{-1} Â`: row i is the uniform mean over the
/// closed neighborhood of i. Zero-degree rows are all zero.
pub fn mean_adjacency(g: &Graph, self_loops: bool) -> Result<Tensor2D> {
    g.check_dense()?;
    let n = g.n_entities();
    let mut m = Tensor2D::zeros(n, n);
    for i in 0..n {
        let hood = g.closed_neighborhood(EntityId::from_index(i), self_loops);
        if hood.is_empty() {
            continue;
        }
        let w = 1.0 / hood.len() as f64;
        for j in hood {
            m[(i, j.index())] = w;
        }
    }
    Ok(m)
}

/// Draws exactly `fanout` neighbors of `entity`:
/// uniform without replacement when degree ≥ fanout, with replacement when
/// 0 < degree < fanout, and `entity` itself repeated when isolated.
pub fn sample_neighbors(g: &Graph, entity: EntityId, fanout: usize, rng: &mut RngStream) -> Result<Vec<EntityId>> {
    g.check_entity(entity)?;
    if fanout == 0 {
        return Err(Error::Config("fanout must be at least 1".into()));
    }
    Ok(draw_from(g.neighbors(entity), entity, fanout, true, rng))
}

/// Draws `fanout` ids from `pool`. When `pool` is no larger than `fanout`
/// the whole pool is returned if `pad` is false, otherwise it is topped up
/// with replacement to exactly `fanout`.
pub(crate) fn draw_from(pool: &[EntityId], fallback: EntityId, fanout: usize, pad: bool, rng: &mut RngStream) -> Vec<EntityId> {
    if pool.is_empty() {
        return vec![fallback; fanout];
    }
    if pool.len() > fanout {
        return rng
            .sample_indices(pool.len(), fanout)
            .into_iter()
            .map(|i| pool[i])
            .collect();
    }
    if pool.len() == fanout || !pad {
        return pool.to_vec();
    }
    (0..fanout).map(|_| pool[rng.below(pool.len())]).collect()
}
