//! Elementwise and row-wise primitives shared by every layer.

use super::Tensor2D;
use crate::error::{Error, Result};

/// Logistic function, branching on sign so `exp` never overflows.
#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Tensor2D) -> Tensor2D {
    x.map(sigmoid_scalar)
}

#[inline]
pub fn relu_scalar(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// In-place max-subtracted softmax of one row.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

pub fn softmax_rows(m: &Tensor2D) -> Result<Tensor2D> {
    if m.cols() == 0 {
        return Err(Error::Dimension("softmax over zero columns".into()));
    }
    let mut out = m.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    Ok(out)
}

/// Valid 1-D convolution along the column (sequence) axis with a full-height
/// window: `b` is d×k, `filter` is d×N, output has k−N+1 positions.
pub fn conv_seq(b: &Tensor2D, filter: &Tensor2D, bias: f64) -> Result<Vec<f64>> {
    if filter.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "conv filter height {} vs input height {}",
            filter.rows(),
            b.rows()
        )));
    }
    conv_positions(b, filter.data(), filter.cols(), bias)
}

/// [`conv_seq`] on a flattened d×width filter.
pub fn conv_positions(b: &Tensor2D, filter: &[f64], width: usize, bias: f64) -> Result<Vec<f64>> {
    let (d, k) = b.shape();
    if width == 0 || width > k {
        return Err(Error::Dimension(format!(
            "conv window of width {width} over a sequence of length {k}"
        )));
    }
    debug_assert_eq!(filter.len(), d * width);
    let positions = k - width + 1;
    let mut out = vec![bias; positions];
    for r in 0..d {
        let b_row = b.row(r);
        let f_row = &filter[r * width..(r + 1) * width];
        for (t, o) in out.iter_mut().enumerate() {
            *o += b_row[t..t + width]
                .iter()
                .zip(f_row)
                .map(|(x, w)| x * w)
                .sum::<f64>();
        }
    }
    Ok(out)
}
