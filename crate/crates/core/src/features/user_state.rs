//! User state: convolutions over the behavior matrix, ReLU, max-pool.

use crate::error::{Error, Result};
use crate::numeric::{ops::conv_positions, Tensor2D};

/// One bank of filters sharing a window width.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBank {
    pub width: usize,
    /// F×(d·width); row f is filter f flattened row-major from d×width.
    pub filters: Tensor2D,
    /// 1×F.
    pub bias: Tensor2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub banks: Vec<ConvBank>,
}

impl ConvParams {
    /// Length of the user-state vector.
    pub fn output_len(&self) -> usize {
        self.banks.iter().map(|b| b.filters.rows()).sum()
    }

    pub fn max_width(&self) -> usize {
        self.banks.iter().map(|b| b.width).max().unwrap_or(0)
    }

    /// Zero gradients shaped like `self`.
    pub fn zeros_like(&self) -> Self {
        Self {
            banks: self
                .banks
                .iter()
                .map(|b| ConvBank {
                    width: b.width,
                    filters: Tensor2D::zeros(b.filters.rows(), b.filters.cols()),
                    bias: Tensor2D::zeros(1, b.bias.cols()),
                })
                .collect(),
        }
    }
}

/// Appends zero columns to `b` until it has at least `min_cols`.
pub fn pad_columns(b: &Tensor2D, min_cols: usize) -> Tensor2D {
    if b.cols() >= min_cols {
        return b.clone();
    }
    let mut out = Tensor2D::zeros(b.rows(), min_cols);
    for r in 0..b.rows() {
        out.row_mut(r)[..b.cols()].copy_from_slice(b.row(r));
    }
    out
}

/// Forward record: the padded input and, per output unit, the winning
/// position (`None` when the pooled value is clipped to zero).
#[derive(Debug, Clone)]
pub struct UserStateTrace {
    pub input: Tensor2D,
    pub argmax: Vec<Option<usize>>,
}

pub fn user_state(b: &Tensor2D, params: &ConvParams) -> Result<Vec<f64>> {
    Ok(user_state_traced(b, params)?.0)
}

pub fn user_state_traced(b: &Tensor2D, params: &ConvParams) -> Result<(Vec<f64>, UserStateTrace)> {
    let input = pad_columns(b, params.max_width());
    let d = input.rows();
    let mut u = Vec::with_capacity(params.output_len());
    let mut argmax = Vec::with_capacity(params.output_len());
    for bank in &params.banks {
        if bank.filters.cols() != d * bank.width || bank.bias.cols() != bank.filters.rows() {
            return Err(Error::Dimension(format!(
                "conv bank of width {} has filters {}x{} and bias 1x{} for input height {d}",
                bank.width,
                bank.filters.rows(),
                bank.filters.cols(),
                bank.bias.cols()
            )));
        }
        for f in 0..bank.filters.rows() {
            let z = conv_positions(&input, bank.filters.row(f), bank.width, bank.bias.data()[f])?;
            let (best_t, best) = z
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (t, &v)| if v > acc.1 { (t, v) } else { acc });
            if best > 0.0 {
                u.push(best);
                argmax.push(Some(best_t));
            } else {
                u.push(0.0);
                argmax.push(None);
            }
        }
    }
    Ok((u, UserStateTrace { input, argmax }))
}

/// Accumulates parameter gradients into `grads` and returns the gradient
/// w.r.t. the unpadded input.
pub fn user_state_backward(
    trace: &UserStateTrace,
    params: &ConvParams,
    d_u: &[f64],
    grads: &mut ConvParams,
    input_cols: usize,
) -> Tensor2D {
    let x = &trace.input;
    let (d, k) = x.shape();
    let mut d_x = Tensor2D::zeros(d, k);
    let mut unit = 0;
    for (bank, g_bank) in params.banks.iter().zip(&mut grads.banks) {
        let n = bank.width;
        for f in 0..bank.filters.rows() {
            let g = d_u[unit];
            if let (Some(t), true) = (trace.argmax[unit], g != 0.0) {
                g_bank.bias.data_mut()[f] += g;
                let w = bank.filters.row(f);
                let gw = g_bank.filters.row_mut(f);
                for r in 0..d {
                    for c in 0..n {
                        gw[r * n + c] += g * x.data()[r * k + t + c];
                        d_x.data_mut()[r * k + t + c] += g * w[r * n + c];
                    }
                }
            }
            unit += 1;
        }
    }
    if input_cols == k {
        return d_x;
    }
    let mut out = Tensor2D::zeros(d, input_cols);
    for r in 0..d {
        out.row_mut(r).copy_from_slice(&d_x.row(r)[..input_cols]);
    }
    out
}
