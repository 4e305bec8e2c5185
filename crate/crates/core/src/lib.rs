//! Knowledge-enhanced deep cross network (K-DCN) for conversational
//! recommendation.
//!
//! The pipeline has two stages:
//!
//! 1. Build a conversation knowledge graph ([`ckg`]) from user profiles, item
//!    listings and chat session logs, then jointly pretrain entity embeddings
//!    with a GCN structural encoder and a TransE semantic scorer
//!    ([`pretrain`]).
//! 2. Fine-tune a deep cross network CTR ranker ([`model`]) whose input is
//!    extended with a convolutional user-state vector and an attention-based
//!    dialogue-interaction block built from the pretrained embeddings
//!    ([`features`]).
//!
//! [`datagen`] produces seeded synthetic worlds with a planted click model and
//! [`eval`] holds metrics and reports. Everything is `f64` and deterministic
//! for a given seed.

pub mod ckg;
pub mod cli;
pub mod config;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod features;
pub mod model;
pub mod numeric;
pub mod pipeline;
pub mod pretrain;

pub use error::{Error, Result};
pub use numeric::{ParamStore, RngStream, Tensor2D};
