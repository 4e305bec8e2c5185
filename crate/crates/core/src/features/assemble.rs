//! The fixed-order feature vector `[cat embeddings, dense, u, d]`.

use crate::error::{Error, Result};
use crate::numeric::Tensor2D;

/// Widths of the feature blocks. A block of width zero is absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub n_cat_fields: usize,
    pub cat_dim: usize,
    pub n_dense: usize,
    pub u_len: usize,
    pub d_len: usize,
}

impl FeatureLayout {
    pub fn cat_len(&self) -> usize {
        self.n_cat_fields * self.cat_dim
    }

    pub fn width(&self) -> usize {
        self.cat_len() + self.n_dense + self.u_len + self.d_len
    }

    pub fn dense_offset(&self) -> usize {
        self.cat_len()
    }

    pub fn u_offset(&self) -> usize {
        self.dense_offset() + self.n_dense
    }

    pub fn d_offset(&self) -> usize {
        self.u_offset() + self.u_len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    /// Row of the categorical table for each field.
    pub cat_ids: Vec<usize>,
    pub dense: Vec<f64>,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
}

/// Concatenates the bundle, looking categorical ids up in `cat_table`.
pub fn assemble_features(bundle: &FeatureBundle, cat_table: &Tensor2D, layout: &FeatureLayout) -> Result<Vec<f64>> {
    let block = |name: &str, got: usize, want: usize| {
        if got == want {
            Ok(())
        } else {
            Err(Error::Schema(format!("{name} block has length {got}, layout expects {want}")))
        }
    };
    block("categorical", bundle.cat_ids.len(), layout.n_cat_fields)?;
    block("dense", bundle.dense.len(), layout.n_dense)?;
    block("user-state", bundle.u.len(), layout.u_len)?;
    block("dialogue", bundle.d.len(), layout.d_len)?;
    if layout.n_cat_fields > 0 && cat_table.cols() != layout.cat_dim {
        return Err(Error::Schema(format!(
            "categorical table has dim {}, layout expects {}",
            cat_table.cols(),
            layout.cat_dim
        )));
    }
    let mut f = Vec::with_capacity(layout.width());
    for &c in &bundle.cat_ids {
        if c >= cat_table.rows() {
            return Err(Error::Lookup(format!("categorical id {c} outside a {}-row table", cat_table.rows())));
        }
        f.extend_from_slice(cat_table.row(c));
    }
    f.extend_from_slice(&bundle.dense);
    f.extend_from_slice(&bundle.u);
    f.extend_from_slice(&bundle.d);
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> FeatureLayout {
        FeatureLayout { n_cat_fields: 2, cat_dim: 3, n_dense: 2, u_len: 4, d_len: 5 }
    }

    #[test]
    fn zero_bundle_and_width() {
        let l = layout();
        let b = FeatureBundle { cat_ids: vec![0, 0], dense: vec![0.0; 2], u: vec![0.0; 4], d: vec![0.0; 5] };
        let f = assemble_features(&b, &Tensor2D::zeros(1, 3), &l).unwrap();
        assert_eq!(f.len(), 2 * 3 + 2 + 4 + 5);
        assert!(f.iter().all(|&x| x == 0.0));
        assert_eq!((l.dense_offset(), l.u_offset(), l.d_offset()), (6, 8, 12));
    }

    #[test]
    fn order_and_errors() {
        let l = FeatureLayout { n_cat_fields: 1, cat_dim: 1, n_dense: 1, u_len: 1, d_len: 1 };
        let table = Tensor2D::from_rows(&[vec![9.0], vec![8.0]]).unwrap();
        let b = FeatureBundle { cat_ids: vec![1], dense: vec![2.0], u: vec![3.0], d: vec![4.0] };
        assert_eq!(assemble_features(&b, &table, &l).unwrap(), vec![8.0, 2.0, 3.0, 4.0]);
        let short = FeatureBundle { dense: vec![], ..b.clone() };
        assert!(matches!(assemble_features(&short, &table, &l), Err(Error::Schema(_))));
        let bad = FeatureBundle { cat_ids: vec![2], ..b };
        assert!(matches!(assemble_features(&bad, &table, &l), Err(Error::Lookup(_))));
    }
}
