use crate::error::{Error, Result};

/// How each GCN layer mixes neighbor rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderMode {
    /// Dense normalized adjacency over the whole graph.
    Full,
    /// Per-entity mean over at most `fanout` sampled neighbors.
    Sampled,
}

/// Normalization of the dense adjacency used in [`EncoderMode::Full`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `D^{-1/2} Â D^{-1/2}`.
    Symmetric,
    /// `D^{-1} Â`, the dense counterpart of sampled mean aggregation.
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainConfig {
    pub dim: usize,
    pub layers: usize,
    pub fanout: usize,
    pub margin: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub mode: EncoderMode,
    pub normalization: Normalization,
    pub self_loops: bool,
    /// In sampled mode, top up neighborhoods smaller than `fanout` by
    /// drawing with replacement instead of using them whole.
    pub pad_small_neighborhoods: bool,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            layers: 2,
            fanout: 10,
            margin: 1.0,
            lr: 1e-4,
            batch_size: 512,
            epochs: 5,
            negatives_per_positive: 1,
            mode: EncoderMode::Sampled,
            normalization: Normalization::Symmetric,
            self_loops: true,
            pad_small_neighborhoods: false,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.dim == 0 {
            return bad("pretrain dim must be at least 1");
        }
        if self.layers == 0 {
            return bad("pretrain layers must be at least 1");
        }
        if self.fanout == 0 {
            return bad("pretrain fanout must be at least 1");
        }
        if !(self.margin > 0.0) {
            return bad("pretrain margin must be positive");
        }
        if self.batch_size == 0 {
            return bad("pretrain batch_size must be at least 1");
        }
        if self.negatives_per_positive == 0 {
            return bad("negatives_per_positive must be at least 1");
        }
        if !(self.lr > 0.0) {
            return bad("pretrain lr must be positive");
        }
        Ok(())
    }
}
