//! Item and user side information, and the translation of named samples
//! into entity ids.

use std::collections::{BTreeMap, HashMap};

use crate::ckg::{EntityId, EntityKind, Event, Vocabulary};
use crate::error::{Error, Result};
use crate::features::{extract_keywords, BehaviorLog, DialogueInput, KeywordVocab, Sample};

/// Placeholder for a user without tags in the categorical fields.
pub const NO_TAG: &str = "none";

#[derive(Debug, Clone, PartialEq)]
pub struct ItemInfo {
    pub category: String,
    pub seller: String,
    pub title: String,
    pub price: f64,
    pub sales: f64,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UserInfo {
    pub tags: Vec<String>,
    pub behaviors: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Catalog {
    pub items: BTreeMap<String, ItemInfo>,
    pub users: BTreeMap<String, UserInfo>,
}

impl Catalog {
    /// Later events for the same item or user replace earlier ones.
    pub fn from_events(events: &[Event]) -> Self {
        let mut c = Self::default();
        for e in events {
            match e {
                Event::UserProfile { user, tags, behaviors } => {
                    c.users.insert(user.clone(), UserInfo { tags: tags.clone(), behaviors: behaviors.clone() });
                }
                Event::ItemListing { item, category, seller, title, price, sales, rating, .. } => {
                    c.items.insert(
                        item.clone(),
                        ItemInfo {
                            category: category.clone(),
                            seller: seller.clone(),
                            title: title.clone(),
                            price: *price,
                            sales: *sales,
                            rating: *rating,
                        },
                    );
                }
                Event::SessionLog { .. } => {}
            }
        }
        c
    }

    pub fn item(&self, name: &str) -> Result<&ItemInfo> {
        self.items.get(name).ok_or_else(|| Error::Lookup(format!("unknown item {name:?}")))
    }

    pub fn user(&self, name: &str) -> Result<&UserInfo> {
        self.users.get(name).ok_or_else(|| Error::Lookup(format!("unknown user {name:?}")))
    }

    /// The sample a user would see for `item` under `query`.
    pub fn make_sample(&self, user: &str, query: &str, item: &str, label: u8) -> Result<Sample> {
        let u = self.user(user)?;
        let it = self.item(item)?;
        Ok(Sample {
            user_id: user.to_owned(),
            behaviors: u.behaviors.clone(),
            query: Some(query.to_owned()),
            query_keywords: None,
            candidate_item: item.to_owned(),
            categories: vec![
                it.category.clone(),
                it.seller.clone(),
                u.tags.first().cloned().unwrap_or_else(|| NO_TAG.to_owned()),
            ],
            dense: vec![it.price, it.sales, it.rating],
            label,
        })
    }
}

/// A sample with every name replaced by entity ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSample {
    pub item: EntityId,
    pub behaviors: BehaviorLog,
    pub dialogue: DialogueInput,
    pub categories: Vec<String>,
    pub dense: Vec<f64>,
    pub label: f64,
}

/// Maps sample names onto the knowledge-graph vocabulary.
#[derive(Debug, Clone)]
pub struct Resolver {
    items: HashMap<String, EntityId>,
    keywords: KeywordVocab,
    titles: HashMap<EntityId, Vec<EntityId>>,
    m_q: usize,
    n_t: usize,
}

impl Resolver {
    pub fn new(vocab: &Vocabulary, catalog: &Catalog, m_q: usize, n_t: usize) -> Self {
        let keywords = KeywordVocab::from_vocabulary(vocab);
        let items: HashMap<String, EntityId> =
            vocab.ids_of_kind(EntityKind::Item).into_iter().map(|id| (vocab.name(id).to_owned(), id)).collect();
        let titles = catalog
            .items
            .iter()
            .filter_map(|(name, info)| items.get(name).map(|&id| (id, extract_keywords(&info.title, &keywords, n_t))))
            .collect();
        Self { items, keywords, titles, m_q, n_t }
    }

    pub fn item_id(&self, name: &str) -> Result<EntityId> {
        self.items.get(name).copied().ok_or_else(|| Error::Lookup(format!("item {name:?} is not in the knowledge graph")))
    }

    pub fn query_keywords(&self, s: &Sample) -> Vec<EntityId> {
        match (&s.query_keywords, &s.query) {
            (Some(list), _) => {
                let ids = list.iter().filter_map(|k| self.keywords.get(&k.to_lowercase()));
                crate::features::dedup_capped(ids, self.m_q)
            }
            (None, Some(q)) => extract_keywords(q, &self.keywords, self.m_q),
            (None, None) => Vec::new(),
        }
    }

    pub fn encode(&self, s: &Sample) -> Result<EncodedSample> {
        let item = self.item_id(&s.candidate_item)?;
        let behaviors = s
            .behaviors
            .iter()
            .map(|list| list.iter().map(|n| self.item_id(n)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let title = self.titles.get(&item).cloned().unwrap_or_default();
        Ok(EncodedSample {
            item,
            behaviors: BehaviorLog::new(behaviors),
            dialogue: DialogueInput::new(self.query_keywords(s), title, self.m_q, self.n_t),
            categories: s.categories.clone(),
            dense: s.dense.clone(),
            label: s.label as f64,
        })
    }

    pub fn encode_all(&self, samples: &[Sample]) -> Result<Vec<EncodedSample>> {
        samples.iter().map(|s| self.encode(s)).collect()
    }
}
