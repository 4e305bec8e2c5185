//! Conversation knowledge graph: schema, triple storage, event ingestion,
//! structural graph view and TSV persistence.

pub mod events;
pub mod graph;
pub mod schema;
pub mod store;
pub mod tsv;

pub use events::{ingest_events, read_events, write_events, Event, PropertyValue};
pub use graph::{mean_adjacency, normalized_adjacency, sample_neighbors, Graph, DENSE_GUARD};
pub use schema::{EntityKind, Relation};
pub use store::{EntityId, Triple, TripleSet, Vocabulary};
pub use tsv::{load_triples, load_vocab, read_triples, read_vocab, save_triples, save_vocab, write_triples, write_vocab};
