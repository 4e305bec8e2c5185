//! The K-DCN ranker: cross and deep towers over the assembled feature vector.

mod catalog;
mod config;
#[cfg(test)]
mod fixture;
mod io;
pub mod layers;
mod network;
mod train;

pub use catalog::{Catalog, EncodedSample, ItemInfo, Resolver, UserInfo, NO_TAG};
pub use config::{Ablation, Activation, ModelConfig, TrainConfig, Variant};
pub use io::{load_model, model_to_bytes, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use layers::{CrossLayer, DenseLayer, P_CLAMP};
pub use network::{CatVocab, DenseStats, KdcnModel, CAT_SLOT, KG_SLOT, LOGITS_SLOT, PREDICT_CHUNK, UNKNOWN_CATEGORY};
pub use train::{fit, rank_candidates, EpochRecord, FitOutcome, RankedItem};
