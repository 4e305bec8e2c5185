//! Per-behavior mean item embeddings.

use crate::ckg::EntityId;
use crate::error::{Error, Result};
use crate::numeric::{axpy, Tensor2D};

/// Behavior kinds, in column order of the behavior matrix.
pub const BEHAVIOR_KINDS: [&str; 4] = ["click", "purchase", "cart", "favorite"];

/// One item list per behavior kind.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BehaviorLog {
    pub behaviors: Vec<Vec<EntityId>>,
}

impl BehaviorLog {
    pub fn new(behaviors: Vec<Vec<EntityId>>) -> Self {
        Self { behaviors }
    }

    pub fn k(&self) -> usize {
        self.behaviors.len()
    }
}

fn check_id(id: EntityId, table: &Tensor2D) -> Result<()> {
    if id.index() >= table.rows() {
        return Err(Error::Lookup(format!("item id {} outside the {}-row embedding table", id.0, table.rows())));
    }
    Ok(())
}

/// Mean embedding of `items`; the zero vector for an empty list.
pub fn behavior_vector(items: &[EntityId], table: &Tensor2D) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; table.cols()];
    for &id in items {
        check_id(id, table)?;
        axpy(&mut acc, 1.0, table.row(id.index()));
    }
    if !items.is_empty() {
        let inv = 1.0 / items.len() as f64;
        acc.iter_mut().for_each(|x| *x *= inv);
    }
    Ok(acc)
}

/// The d×k matrix whose column i is the mean embedding of behavior i.
pub fn behavior_matrix(log: &BehaviorLog, table: &Tensor2D) -> Result<Tensor2D> {
    let d = table.cols();
    let k = log.k();
    let mut b = Tensor2D::zeros(d, k);
    for (c, items) in log.behaviors.iter().enumerate() {
        let v = behavior_vector(items, table)?;
        for (r, x) in v.into_iter().enumerate() {
            b.data_mut()[r * k + c] = x;
        }
    }
    Ok(b)
}

/// Scatters the gradient of a behavior matrix back onto the rows of the
/// embedding table.
pub fn behavior_matrix_backward(log: &BehaviorLog, d_b: &Tensor2D, d_table: &mut Tensor2D) {
    let k = log.k();
    for (c, items) in log.behaviors.iter().enumerate() {
        if items.is_empty() {
            continue;
        }
        let inv = 1.0 / items.len() as f64;
        for &id in items {
            let row = d_table.row_mut(id.index());
            for (r, g) in row.iter_mut().enumerate() {
                *g += inv * d_b.data()[r * k + c];
            }
        }
    }
}
