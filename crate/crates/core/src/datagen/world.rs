//! A seeded e-commerce world with planted preference structure.
//!
//! Every tag prefers two categories and every user inherits the
//! preferences of their tags. Sellers fall into `n_clusters` clusters
//! (`seller s` in cluster `s mod n_clusters`) and every user belongs to one
//! cluster. Each category owns a pool of keywords; item titles and
//! shopping intentions draw from their category's pool.

use std::collections::BTreeSet;

use crate::ckg::{ingest_events, Event, PropertyValue, TripleSet};
use crate::error::{Error, Result};
use crate::features::BEHAVIOR_KINDS;
use crate::model::Catalog;
use crate::numeric::{streams, RngStream};

/// Words mixed into generated queries that are never keywords.
pub const FILLER_WORDS: [&str; 8] = ["please", "find", "me", "a", "good", "cheap", "for", "want"];

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub n_categories: usize,
    pub n_sellers: usize,
    pub n_tags: usize,
    pub n_keywords: usize,
    pub n_sessions: usize,
    pub n_properties: usize,
    pub values_per_property: usize,
    pub n_clusters: usize,
    pub seed: u64,
    /// α in the click model.
    pub affinity_strength: f64,
    pub noise_std: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n_users: 300,
            n_items: 800,
            n_categories: 20,
            n_sellers: 30,
            n_tags: 12,
            n_keywords: 120,
            n_sessions: 600,
            n_properties: 8,
            values_per_property: 5,
            n_clusters: 4,
            seed: 0,
            affinity_strength: 3.0,
            noise_std: 0.5,
        }
    }
}

impl WorldConfig {
    /// One of everything.
    pub fn minimal(seed: u64) -> Self {
        Self {
            n_users: 1,
            n_items: 1,
            n_categories: 1,
            n_sellers: 1,
            n_tags: 1,
            n_keywords: 1,
            n_sessions: 1,
            n_properties: 1,
            values_per_property: 1,
            n_clusters: 1,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_users", self.n_users),
            ("n_items", self.n_items),
            ("n_categories", self.n_categories),
            ("n_sellers", self.n_sellers),
            ("n_tags", self.n_tags),
            ("n_keywords", self.n_keywords),
            ("n_sessions", self.n_sessions),
            ("n_properties", self.n_properties),
            ("values_per_property", self.values_per_property),
            ("n_clusters", self.n_clusters),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("world {name} must be at least 1")));
            }
        }
        if !(self.noise_std >= 0.0) || !self.affinity_strength.is_finite() {
            return Err(Error::Config("world noise_std must be ≥ 0 and affinity_strength finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserTruth {
    pub tags: Vec<usize>,
    pub cluster: usize,
    /// Union of the tags' preferred categories, ascending.
    pub preferred: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemTruth {
    pub category: usize,
    pub seller: usize,
    pub title_keywords: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct World {
    pub config: WorldConfig,
    pub events: Vec<Event>,
    pub triples: TripleSet,
    pub users: Vec<UserTruth>,
    pub items: Vec<ItemTruth>,
    /// Two preferred categories per tag.
    pub tag_prefs: Vec<[usize; 2]>,
    /// Keyword indices owned by each category.
    pub keyword_pools: Vec<Vec<usize>>,
    /// Items a user's behavior and near candidates are drawn from.
    pub near_items: Vec<Vec<usize>>,
    /// Category intended by each session.
    pub session_intentions: Vec<(usize, usize)>,
}

pub fn user_name(i: usize) -> String {
    format!("u{i}")
}
pub fn item_name(i: usize) -> String {
    format!("i{i}")
}
pub fn category_name(i: usize) -> String {
    format!("c{i}")
}
pub fn seller_name(i: usize) -> String {
    format!("s{i}")
}
pub fn tag_name(i: usize) -> String {
    format!("t{i}")
}
pub fn keyword_name(i: usize) -> String {
    format!("k{i}")
}
pub fn intention_name(c: usize) -> String {
    format!("buy_c{c}")
}

impl World {
    pub fn seller_cluster(&self, seller: usize) -> usize {
        seller % self.config.n_clusters
    }

    /// Whether one of the user's tags prefers `category`.
    pub fn tag_match(&self, user: usize, category: usize) -> bool {
        self.users[user].preferred.binary_search(&category).is_ok()
    }

    pub fn cluster_match(&self, user: usize, item: usize) -> bool {
        self.seller_cluster(self.items[item].seller) == self.users[user].cluster
    }

    pub fn catalog(&self) -> Catalog {
        Catalog::from_events(&self.events)
    }
}

fn pick_distinct(rng: &mut RngStream, pool: &[usize], lo: usize, hi: usize) -> Vec<usize> {
    let k = (lo + rng.below(hi - lo + 1)).min(pool.len());
    let mut idx = rng.sample_indices(pool.len(), k);
    idx.sort_unstable();
    idx.into_iter().map(|i| pool[i]).collect()
}

pub fn generate_world(cfg: &WorldConfig) -> Result<World> {
    cfg.validate()?;
    let mut rng = RngStream::new(cfg.seed).substream(streams::WORLD);
    let nc = cfg.n_categories;

    let keyword_pools: Vec<Vec<usize>> = (0..nc).map(|c| (0..cfg.n_keywords).filter(|k| k % nc == c).collect()).collect();
    let keyword_pools: Vec<Vec<usize>> = keyword_pools
        .into_iter()
        .enumerate()
        .map(|(c, p)| if p.is_empty() { vec![c % cfg.n_keywords] } else { p })
        .collect();
    let tag_prefs: Vec<[usize; 2]> = (0..cfg.n_tags)
        .map(|_| {
            let a = rng.below(nc);
            let b = if nc > 1 { (a + 1 + rng.below(nc - 1)) % nc } else { a };
            [a, b]
        })
        .collect();

    let mut events = Vec::new();
    let mut items = Vec::with_capacity(cfg.n_items);
    // Per category: one planted value per property, used 70% of the time.
    let typical_values: Vec<Vec<usize>> =
        (0..nc).map(|_| (0..cfg.n_properties).map(|_| rng.below(cfg.values_per_property)).collect()).collect();
    let price_levels: Vec<f64> = (0..nc).map(|_| 10.0 + 190.0 * rng.uniform()).collect();
    for i in 0..cfg.n_items {
        let category = if i < nc { i } else { rng.below(nc) };
        let seller = if i < cfg.n_sellers { i } else { rng.below(cfg.n_sellers) };
        let title_keywords = pick_distinct(&mut rng, &keyword_pools[category], 3, 6);
        let properties = (0..cfg.n_properties)
            .map(|p| {
                let v = if rng.bernoulli(0.7) { typical_values[category][p] } else { rng.below(cfg.values_per_property) };
                PropertyValue { property: format!("p{p}"), value: format!("p{p}_v{v}") }
            })
            .collect();
        let title = title_keywords.iter().map(|&k| keyword_name(k)).collect::<Vec<_>>().join(" ");
        let price = (price_levels[category] * (1.0 + 0.3 * rng.normal())).max(1.0);
        let sales = (3.0 + 1.5 * rng.normal()).exp().round();
        let rating = ((3.0 + 2.0 * rng.uniform()) * 100.0).round() / 100.0;
        events.push(Event::ItemListing {
            item: item_name(i),
            category: category_name(category),
            seller: seller_name(seller),
            properties,
            title: format!("{title} {}", category_name(category)),
            price: (price * 100.0).round() / 100.0,
            sales,
            rating,
        });
        items.push(ItemTruth { category, seller, title_keywords });
    }

    let mut users = Vec::with_capacity(cfg.n_users);
    let all_tags: Vec<usize> = (0..cfg.n_tags).collect();
    for u in 0..cfg.n_users {
        let tags = if u < cfg.n_tags { vec![u] } else { pick_distinct(&mut rng, &all_tags, 1, 3) };
        let preferred: BTreeSet<usize> = tags.iter().flat_map(|&t| tag_prefs[t]).collect();
        users.push(UserTruth { tags, cluster: rng.below(cfg.n_clusters), preferred: preferred.into_iter().collect() });
    }
    let mut world = World {
        config: cfg.clone(),
        events: Vec::new(),
        triples: TripleSet::new(),
        users,
        items,
        tag_prefs,
        keyword_pools,
        near_items: Vec::new(),
        session_intentions: Vec::new(),
    };
    world.near_items = (0..cfg.n_users)
        .map(|u| {
            let near: Vec<usize> = (0..cfg.n_items)
                .filter(|&i| world.cluster_match(u, i) && world.tag_match(u, world.items[i].category))
                .collect();
            if near.is_empty() {
                (0..cfg.n_items).filter(|&i| world.cluster_match(u, i) || world.tag_match(u, world.items[i].category)).collect()
            } else {
                near
            }
        })
        .collect();

    let behavior_ranges = [(4, 8), (1, 3), (1, 4), (0, 3)];
    debug_assert_eq!(behavior_ranges.len(), BEHAVIOR_KINDS.len());
    let mut profiles = Vec::with_capacity(cfg.n_users);
    for u in 0..cfg.n_users {
        let behaviors = behavior_ranges
            .iter()
            .map(|&(lo, hi)| {
                let n = lo + rng.below(hi - lo + 1);
                (0..n).map(|_| item_name(world.draw_biased_item(u, 0.75, &mut rng))).collect()
            })
            .collect();
        profiles.push(Event::UserProfile {
            user: user_name(u),
            tags: world.users[u].tags.iter().map(|&t| tag_name(t)).collect(),
            behaviors,
        });
    }

    let cluster_sellers: Vec<Vec<usize>> =
        (0..cfg.n_clusters).map(|c| (0..cfg.n_sellers).filter(|s| s % cfg.n_clusters == c).collect()).collect();
    for q in 0..cfg.n_sessions {
        let u = if q < cfg.n_users { q } else { rng.below(cfg.n_users) };
        let truth = &world.users[u];
        let category = if rng.bernoulli(0.8) { truth.preferred[rng.below(truth.preferred.len())] } else { rng.below(nc) };
        let sellers = &cluster_sellers[truth.cluster];
        let seller = if sellers.is_empty() { rng.below(cfg.n_sellers) } else { sellers[rng.below(sellers.len())] };
        world.session_intentions.push((u, category));
        events.push(Event::SessionLog {
            user: user_name(u),
            session: format!("q{q}"),
            seller: seller_name(seller),
            intention: intention_name(category),
            keywords: world.keyword_pools[category].iter().map(|&k| keyword_name(k)).collect(),
        });
    }
    profiles.append(&mut events);
    world.events = profiles;
    world.triples = ingest_events(&world.events);
    Ok(world)
}

impl World {
    /// An item from the user's near set with probability `bias`, otherwise
    /// uniform over all items.
    pub fn draw_biased_item(&self, user: usize, bias: f64, rng: &mut RngStream) -> usize {
        let near = &self.near_items[user];
        if !near.is_empty() && rng.bernoulli(bias) {
            near[rng.below(near.len())]
        } else {
            rng.below(self.config.n_items)
        }
    }
}
