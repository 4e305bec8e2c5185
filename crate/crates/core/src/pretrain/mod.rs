//! Joint structural and translational pretraining of entity embeddings.

pub mod checkpoint;
pub mod config;
pub mod encoder;
pub mod eval;
pub mod trainer;
pub mod transe;

pub use checkpoint::{export_checkpoint, load_checkpoint, PretrainCheckpoint};
pub use config::{EncoderMode, Normalization, PretrainConfig};
pub use encoder::{encode_entities, gcn_layer, sampled_mean, LayerPlan, PretrainParams, Propagation};
pub use eval::{hits_at_k, holdout_split, tail_rank};
pub use trainer::{
    batch_loss, batch_loss_and_grad, gcn_slot, init_params, params_from_store, params_to_store, pretrain, PretrainOutcome,
    TriplePair, ENTITY_SLOT, RELATION_SLOT,
};
pub use transe::{margin_loss, negative_sample, transe_score, MAX_CORRUPTION_ATTEMPTS};
