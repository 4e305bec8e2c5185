use super::ParamStore;
use crate::error::{Error, Result};

/// Result of comparing an analytic gradient against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Flat index of the worst coordinate.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Central-difference check of the gradient stored in `store` for `slot`.
///
/// Each coordinate is perturbed by ±`eps` and restored afterwards. The
/// error per coordinate is |a−n| / max(1e-8, |a|+|n|).
pub fn finite_diff_check<F>(mut loss: F, store: &mut ParamStore, slot: &str, eps: f64) -> Result<GradCheck>
where
    F: FnMut(&ParamStore) -> f64,
{
    if !store.contains(slot) {
        return Err(Error::Lookup(format!("no parameter slot named {slot}")));
    }
    let analytic = store.grad(slot).clone();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    for i in 0..analytic.len() {
        let original = store.value(slot).data()[i];
        store.value_mut(slot).data_mut()[i] = original + eps;
        let up = loss(store);
        store.value_mut(slot).data_mut()[i] = original - eps;
        let down = loss(store);
        store.value_mut(slot).data_mut()[i] = original;

        let numeric = (up - down) / (2.0 * eps);
        let a = analytic.data()[i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        if rel > report.max_rel_error || !rel.is_finite() {
            report = GradCheck {
                max_rel_error: rel,
                worst_index: i,
                analytic: a,
                numeric,
            };
        }
    }
    Ok(report)
}
