//! Raw platform events and their conversion into schema triples.
//!
//! `events.jsonl` holds one JSON object per line, discriminated by `type`:
//!
//! ```text
//! {"type":"user_profile","user":"u1","tags":["female"],"behaviors":[["i1"],[],[],[]]}
//! {"type":"item_listing","item":"i1","category":"dress","seller":"s1",
//!  "properties":[{"property":"color","value":"red"}],
//!  "title":"red summer dress","price":59.0,"sales":120.0,"rating":4.5}
//! {"type":"session_log","user":"u1","session":"q1","seller":"s1",
//!  "intention":"buy_dress","keywords":["dress","summer"]}
//! ```
//!
//! Required fields: `user`+`tags` for profiles; `item`, `category`, `seller`
//! for listings; every field for session logs. `behaviors`, `properties`,
//! `title`, `price`, `sales` and `rating` are optional and only `properties`
//! contributes triples.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::schema::Relation;
use super::store::TripleSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyValue {
    pub property: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    UserProfile {
        user: String,
        tags: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        behaviors: Vec<Vec<String>>,
    },
    ItemListing {
        item: String,
        category: String,
        seller: String,
        #[serde(default)]
        properties: Vec<PropertyValue>,
        #[serde(default)]
        title: String,
        #[serde(default)]
        price: f64,
        #[serde(default)]
        sales: f64,
        #[serde(default)]
        rating: f64,
    },
    SessionLog {
        user: String,
        session: String,
        seller: String,
        intention: String,
        keywords: Vec<String>,
    },
}

impl Event {
    /// Appends this event's triples to `out`.
    pub fn emit_triples(&self, out: &mut TripleSet) {
        match self {
            Event::UserProfile { user, tags, .. } => {
                for tag in tags {
                    out.insert(user, Relation::UserHasTag, tag);
                }
            }
            Event::ItemListing {
                item,
                category,
                seller,
                properties,
                ..
            } => {
                out.insert(item, Relation::ItemBelongsToCategory, category);
                out.insert(seller, Relation::SellerHasItem, item);
                for pv in properties {
                    out.insert(item, Relation::ItemHasValue, &pv.value);
                    out.insert(&pv.property, Relation::PropertyHasValue, &pv.value);
                }
            }
            Event::SessionLog {
                user,
                session,
                seller,
                intention,
                keywords,
            } => {
                out.insert(user, Relation::UserCreatedSession, session);
                out.insert(session, Relation::SessionRelatesToSeller, seller);
                out.insert(session, Relation::SessionHasIntention, intention);
                for kw in keywords {
                    out.insert(intention, Relation::IntentionHasKeyword, kw);
                }
            }
        }
    }
}

/// Builds the deduplicated triple set of an event stream.
pub fn ingest_events(events: &[Event]) -> TripleSet {
    let mut out = TripleSet::new();
    for e in events {
        e.emit_triples(&mut out);
    }
    out
}

/// Parses JSONL events; blank lines are skipped, errors carry the 1-based
/// line number.
pub fn read_events(reader: impl BufRead) -> Result<Vec<Event>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| Error::Ingestion {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(event);
    }
    Ok(out)
}

pub fn write_events(mut writer: impl Write, events: &[Event]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut writer, e).map_err(|e| Error::Format(e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
