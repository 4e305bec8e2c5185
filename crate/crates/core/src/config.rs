//! Flat `key=value` run configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Keys are namespaced by stage:
//!
//! | key | default |
//! |---|---|
//! | `seed` | 0 |
//! | `world.n_users`, `world.n_items`, `world.n_categories`, `world.n_sellers` | 300, 800, 20, 30 |
//! | `world.n_tags`, `world.n_keywords`, `world.n_sessions` | 12, 120, 600 |
//! | `world.n_properties`, `world.values_per_property`, `world.n_clusters` | 8, 5, 4 |
//! | `world.affinity_strength`, `world.noise_std` | 3.0, 0.5 |
//! | `data.n_samples` | 20000 |
//! | `pretrain.dim`, `pretrain.layers`, `pretrain.fanout`, `pretrain.margin` | 64, 2, 10, 1.0 |
//! | `pretrain.lr`, `pretrain.batch_size`, `pretrain.epochs` | 1e-4, 512, 5 |
//! | `pretrain.negatives_per_positive` | 1 |
//! | `pretrain.mode` (`full` or `sampled`) | sampled |
//! | `pretrain.normalization` (`symmetric` or `mean`) | symmetric |
//! | `pretrain.self_loops`, `pretrain.pad_small_neighborhoods` | true, false |
//! | `train.lr`, `train.batch_size`, `train.epochs` | 1e-4, 512, 10 |
//! | `train.finetune_kg`, `train.n_cand` | false, 50 |
//! | `train.use_user_state`, `train.use_dialogue`, `train.use_cross`, `train.use_deep` | true |
//! | `train.variants` (comma list of `kdcn`, `dcn`, `cross-only`, `deep-only`, `lr`) | all five |
//! | `model.cat_dim`, `model.cross_layers`, `model.deep_widths` | 8, 4, 512,512 |
//! | `model.activation` (`relu` or `sigmoid`), `model.heads` | relu, 4 |
//! | `model.conv_widths`, `model.filters`, `model.m_q`, `model.n_t` | 2,4, 8, 8, 8 |
//!
//! The `train.use_*` flags are overridden per variant when training a
//! variant list.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::datagen::WorldConfig;
use crate::error::{Error, Result};
use crate::model::{Activation, TrainConfig, Variant};
use crate::pretrain::{EncoderMode, Normalization, PretrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub world: WorldConfig,
    pub n_samples: usize,
    pub pretrain: PretrainConfig,
    pub train: TrainConfig,
    pub variants: Vec<Variant>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            world: WorldConfig::default(),
            n_samples: 20_000,
            pretrain: PretrainConfig::default(),
            train: TrainConfig::default(),
            variants: Variant::ALL.to_vec(),
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

fn list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s.trim())).collect()
}

fn join<T: Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn unknown(key: &str) -> Error {
    Error::Config(format!("unknown configuration key {key:?}"))
}

/// Applies one `train.*` or `model.*` setting.
pub fn set_train_key(cfg: &mut TrainConfig, key: &str, value: &str) -> Result<()> {
    let m = &mut cfg.model;
    let a = &mut cfg.ablation;
    match key {
        "train.lr" => cfg.lr = num(key, value)?,
        "train.batch_size" => cfg.batch_size = num(key, value)?,
        "train.epochs" => cfg.epochs = num(key, value)?,
        "train.finetune_kg" => cfg.finetune_kg = flag(key, value)?,
        "train.n_cand" => cfg.n_cand = num(key, value)?,
        "train.use_user_state" => a.use_user_state = flag(key, value)?,
        "train.use_dialogue" => a.use_dialogue = flag(key, value)?,
        "train.use_cross" => a.use_cross = flag(key, value)?,
        "train.use_deep" => a.use_deep = flag(key, value)?,
        "model.cat_dim" => m.cat_dim = num(key, value)?,
        "model.cross_layers" => m.cross_layers = num(key, value)?,
        "model.deep_widths" => m.deep_widths = list(key, value)?,
        "model.activation" => {
            m.activation = Activation::parse(value)
                .ok_or_else(|| Error::Config(format!("{key}: expected relu or sigmoid, got {value:?}")))?
        }
        "model.heads" => m.heads = num(key, value)?,
        "model.conv_widths" => m.conv_widths = list(key, value)?,
        "model.filters" => m.filters = num(key, value)?,
        "model.m_q" => m.m_q = num(key, value)?,
        "model.n_t" => m.n_t = num(key, value)?,
        _ => return Err(unknown(key)),
    }
    Ok(())
}

pub fn train_pairs(cfg: &TrainConfig) -> Vec<(String, String)> {
    let m = &cfg.model;
    let a = &cfg.ablation;
    [
        ("train.lr", cfg.lr.to_string()),
        ("train.batch_size", cfg.batch_size.to_string()),
        ("train.epochs", cfg.epochs.to_string()),
        ("train.finetune_kg", cfg.finetune_kg.to_string()),
        ("train.n_cand", cfg.n_cand.to_string()),
        ("train.use_user_state", a.use_user_state.to_string()),
        ("train.use_dialogue", a.use_dialogue.to_string()),
        ("train.use_cross", a.use_cross.to_string()),
        ("train.use_deep", a.use_deep.to_string()),
        ("model.cat_dim", m.cat_dim.to_string()),
        ("model.cross_layers", m.cross_layers.to_string()),
        ("model.deep_widths", join(&m.deep_widths)),
        ("model.activation", m.activation.as_str().to_owned()),
        ("model.heads", m.heads.to_string()),
        ("model.conv_widths", join(&m.conv_widths)),
        ("model.filters", m.filters.to_string()),
        ("model.m_q", m.m_q.to_string()),
        ("model.n_t", m.n_t.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect()
}

/// Splits `key=value`, trimming both sides; `None` for blank and comment lines.
pub fn split_line(line: &str) -> Option<std::result::Result<(&str, &str), String>> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return None;
    }
    Some(match line.split_once('=') {
        Some((k, v)) => Ok((k.trim(), v.trim())),
        None => Err(format!("expected key=value, got {line:?}")),
    })
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let w = &mut self.world;
        let p = &mut self.pretrain;
        match key {
            "seed" => self.seed = num(key, value)?,
            "world.n_users" => w.n_users = num(key, value)?,
            "world.n_items" => w.n_items = num(key, value)?,
            "world.n_categories" => w.n_categories = num(key, value)?,
            "world.n_sellers" => w.n_sellers = num(key, value)?,
            "world.n_tags" => w.n_tags = num(key, value)?,
            "world.n_keywords" => w.n_keywords = num(key, value)?,
            "world.n_sessions" => w.n_sessions = num(key, value)?,
            "world.n_properties" => w.n_properties = num(key, value)?,
            "world.values_per_property" => w.values_per_property = num(key, value)?,
            "world.n_clusters" => w.n_clusters = num(key, value)?,
            "world.affinity_strength" => w.affinity_strength = num(key, value)?,
            "world.noise_std" => w.noise_std = num(key, value)?,
            "data.n_samples" => self.n_samples = num(key, value)?,
            "pretrain.dim" => p.dim = num(key, value)?,
            "pretrain.layers" => p.layers = num(key, value)?,
            "pretrain.fanout" => p.fanout = num(key, value)?,
            "pretrain.margin" => p.margin = num(key, value)?,
            "pretrain.lr" => p.lr = num(key, value)?,
            "pretrain.batch_size" => p.batch_size = num(key, value)?,
            "pretrain.epochs" => p.epochs = num(key, value)?,
            "pretrain.negatives_per_positive" => p.negatives_per_positive = num(key, value)?,
            "pretrain.mode" => {
                p.mode = match value {
                    "full" => EncoderMode::Full,
                    "sampled" => EncoderMode::Sampled,
                    _ => return Err(Error::Config(format!("{key}: expected full or sampled, got {value:?}"))),
                }
            }
            "pretrain.normalization" => {
                p.normalization = match value {
                    "symmetric" => Normalization::Symmetric,
                    "mean" => Normalization::Mean,
                    _ => return Err(Error::Config(format!("{key}: expected symmetric or mean, got {value:?}"))),
                }
            }
            "pretrain.self_loops" => p.self_loops = flag(key, value)?,
            "pretrain.pad_small_neighborhoods" => p.pad_small_neighborhoods = flag(key, value)?,
            "train.variants" => {
                self.variants = value
                    .split(',')
                    .map(|s| Variant::parse(s.trim()).ok_or_else(|| Error::Config(format!("{key}: unknown variant {s:?}"))))
                    .collect::<Result<_>>()?
            }
            _ => set_train_key(&mut self.train, key, value)?,
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            match split_line(line) {
                None => {}
                Some(Err(message)) => return Err(Error::Parse { line: line_no, message }),
                Some(Ok((k, v))) => cfg.set(k, v).map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?,
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.pretrain.validate()?;
        self.train.validate()?;
        if self.variants.is_empty() {
            return Err(Error::Config("train.variants must name at least one variant".into()));
        }
        for v in &self.variants {
            v.apply(&self.train).validate()?;
        }
        Ok(())
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        let w = &self.world;
        let p = &self.pretrain;
        let mut out: Vec<(String, String)> = [
            ("seed", self.seed.to_string()),
            ("world.n_users", w.n_users.to_string()),
            ("world.n_items", w.n_items.to_string()),
            ("world.n_categories", w.n_categories.to_string()),
            ("world.n_sellers", w.n_sellers.to_string()),
            ("world.n_tags", w.n_tags.to_string()),
            ("world.n_keywords", w.n_keywords.to_string()),
            ("world.n_sessions", w.n_sessions.to_string()),
            ("world.n_properties", w.n_properties.to_string()),
            ("world.values_per_property", w.values_per_property.to_string()),
            ("world.n_clusters", w.n_clusters.to_string()),
            ("world.affinity_strength", w.affinity_strength.to_string()),
            ("world.noise_std", w.noise_std.to_string()),
            ("data.n_samples", self.n_samples.to_string()),
            ("pretrain.dim", p.dim.to_string()),
            ("pretrain.layers", p.layers.to_string()),
            ("pretrain.fanout", p.fanout.to_string()),
            ("pretrain.margin", p.margin.to_string()),
            ("pretrain.lr", p.lr.to_string()),
            ("pretrain.batch_size", p.batch_size.to_string()),
            ("pretrain.epochs", p.epochs.to_string()),
            ("pretrain.negatives_per_positive", p.negatives_per_positive.to_string()),
            ("pretrain.mode", match p.mode {
                EncoderMode::Full => "full",
                EncoderMode::Sampled => "sampled",
            }
            .to_owned()),
            ("pretrain.normalization", match p.normalization {
                Normalization::Symmetric => "symmetric",
                Normalization::Mean => "mean",
            }
            .to_owned()),
            ("pretrain.self_loops", p.self_loops.to_string()),
            ("pretrain.pad_small_neighborhoods", p.pad_small_neighborhoods.to_string()),
            ("train.variants", self.variants.iter().map(|v| v.name()).collect::<Vec<_>>().join(",")),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect();
        out.extend(train_pairs(&self.train));
        out
    }

    pub fn to_text(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// World settings with the run seed.
    pub fn world_config(&self) -> WorldConfig {
        WorldConfig { seed: self.seed, ..self.world.clone() }
    }
}
