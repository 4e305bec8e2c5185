use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            _ => None,
        }
    }
}

/// Architecture of the ranker.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub cat_dim: usize,
    pub cross_layers: usize,
    pub deep_widths: Vec<usize>,
    pub activation: Activation,
    pub heads: usize,
    pub conv_widths: Vec<usize>,
    /// Filters per conv width.
    pub filters: usize,
    /// Query keyword cap.
    pub m_q: usize,
    /// Title keyword cap.
    pub n_t: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            cat_dim: 8,
            cross_layers: 4,
            deep_widths: vec![512, 512],
            activation: Activation::Relu,
            heads: 4,
            conv_widths: vec![2, 4],
            filters: 8,
            m_q: 8,
            n_t: 8,
        }
    }
}

/// Which feature blocks and sub-networks are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ablation {
    pub use_user_state: bool,
    pub use_dialogue: bool,
    pub use_cross: bool,
    pub use_deep: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Self { use_user_state: true, use_dialogue: true, use_cross: true, use_deep: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub ablation: Ablation,
    /// Train the knowledge-graph entity table along with the ranker.
    pub finetune_kg: bool,
    /// Largest candidate list accepted for ranking.
    pub n_cand: usize,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            batch_size: 512,
            epochs: 10,
            ablation: Ablation::default(),
            finetune_kg: false,
            n_cand: 50,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let a = &self.ablation;
        if !a.use_cross && !a.use_deep {
            return bad("at least one of use_cross and use_deep must be on".into());
        }
        if !(self.lr > 0.0) {
            return bad(format!("train lr must be positive, got {}", self.lr));
        }
        if self.batch_size == 0 {
            return bad("train batch_size must be at least 1".into());
        }
        if self.n_cand == 0 {
            return bad("n_cand must be at least 1".into());
        }
        let m = &self.model;
        if a.use_deep && (m.deep_widths.is_empty() || m.deep_widths.contains(&0)) {
            return bad("deep network needs at least one layer of nonzero width".into());
        }
        if a.use_dialogue && (m.heads == 0 || m.m_q + m.n_t == 0) {
            return bad("dialogue block needs at least one head and one keyword slot".into());
        }
        if a.use_user_state && (m.filters == 0 || m.conv_widths.is_empty() || m.conv_widths.contains(&0)) {
            return bad("user-state block needs filters and nonzero conv widths".into());
        }
        Ok(())
    }
}

/// Named configurations compared in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Kdcn,
    Dcn,
    CrossOnly,
    DeepOnly,
    Lr,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Kdcn, Variant::Dcn, Variant::CrossOnly, Variant::DeepOnly, Variant::Lr];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Kdcn => "kdcn",
            Variant::Dcn => "dcn",
            Variant::CrossOnly => "cross-only",
            Variant::DeepOnly => "deep-only",
            Variant::Lr => "lr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }

    /// `base` with this variant's blocks switched off.
    pub fn apply(self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        let a = &mut cfg.ablation;
        *a = Ablation::default();
        match self {
            Variant::Kdcn => {}
            Variant::Dcn => {
                a.use_user_state = false;
                a.use_dialogue = false;
            }
            Variant::CrossOnly => a.use_deep = false,
            Variant::DeepOnly => a.use_cross = false,
            Variant::Lr => {
                a.use_deep = false;
                cfg.model.cross_layers = 0;
            }
        }
        cfg
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
