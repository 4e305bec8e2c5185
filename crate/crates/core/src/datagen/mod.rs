//! Seeded synthetic worlds with a planted click model.

mod samples;
mod world;

pub use samples::{generate_samples, ClickModel, GeneratedSample, SampleSplits};
pub use world::{
    category_name, generate_world, intention_name, item_name, keyword_name, seller_name, tag_name, user_name,
    ItemTruth, UserTruth, World, WorldConfig, FILLER_WORDS,
};
