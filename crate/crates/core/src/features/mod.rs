//! Knowledge-derived feature blocks and their assembly into one vector.

pub mod assemble;
pub mod behavior;
pub mod dialogue;
pub mod keywords;
pub mod sample;
pub mod user_state;

pub use assemble::{assemble_features, FeatureBundle, FeatureLayout};
pub use behavior::{behavior_matrix, behavior_matrix_backward, behavior_vector, BehaviorLog, BEHAVIOR_KINDS};
pub use dialogue::{
    attend, dialogue_backward, dialogue_forward, dialogue_interaction, AttentionHead, AttentionParams, DialogueCache,
    DialogueInput,
};
pub use keywords::{dedup_capped, extract_keywords, tokenize, KeywordVocab};
pub use sample::{load_samples, read_samples, save_samples, write_samples, Sample};
pub use user_state::{pad_columns, user_state, user_state_backward, user_state_traced, ConvBank, ConvParams, UserStateTrace};
