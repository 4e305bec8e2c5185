//! Ranking metrics and the comparison report.

use std::io::Write;

use crate::error::{Error, Result};

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
///
/// Pairs are counted exactly in integers (twice the tie-weighted count) and
/// divided once, so the result is bit-equal to brute-force pair counting.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Pairing(format!("{} scores vs {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("AUC of NaN scores is undefined".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u128;
    let n_neg = labels.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric("AUC needs at least one positive and one negative label".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut doubled: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        doubled += pos * (2 * neg_below + neg);
        neg_below += neg;
        i = j;
    }
    Ok(doubled as f64 / (2 * n_pos * n_neg) as f64)
}

/// First 1-based epoch whose loss is at most `threshold`.
pub fn epochs_to_threshold(history: &[f64], threshold: f64) -> Option<usize> {
    history.iter().position(|&l| l <= threshold).map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub config: String,
    pub test_auc: f64,
    pub final_train_loss: f64,
    pub epochs_to_threshold: Option<usize>,
    pub wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn new(mut rows: Vec<ReportRow>) -> Self {
        rows.sort_by(|a, b| a.config.cmp(&b.config));
        Self { rows }
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    /// CSV with AUC to 4 decimals. The timing column appears only when
    /// `with_timing` is set, as wall time differs between runs.
    pub fn write_csv(&self, mut w: impl Write, with_timing: bool) -> Result<()> {
        write!(w, "config,test_auc,final_train_loss,epochs_to_threshold")?;
        if with_timing {
            write!(w, ",wall_seconds")?;
        }
        writeln!(w)?;
        for r in &self.rows {
            let ett = r.epochs_to_threshold.map_or_else(String::new, |e| e.to_string());
            write!(w, "{},{:.4},{:.6},{ett}", r.config, r.test_auc, r.final_train_loss)?;
            if with_timing {
                write!(w, ",{:.3}", r.wall_seconds.unwrap_or(0.0))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, with_timing).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("report is UTF-8")
    }
}
