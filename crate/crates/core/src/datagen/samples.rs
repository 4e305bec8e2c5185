//! Labeled samples from the planted click model.

use super::world::{item_name, keyword_name, user_name, World, FILLER_WORDS};
use crate::features::Sample;
use crate::numeric::{sigmoid_scalar, RngStream};

/// `p = σ(α·(affinity − offset) + ε)`, `ε ~ N(0, noise_std²)`, where
/// `affinity = w_tag·[tag prefers category] + w_query·|query ∩ title|
/// + w_cluster·[seller in user's cluster]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickModel {
    pub w_tag: f64,
    pub w_query: f64,
    pub w_cluster: f64,
    pub alpha: f64,
    pub noise_std: f64,
    /// Centers the logit so the base rate stays near one half.
    pub offset: f64,
}

impl ClickModel {
    pub fn new(alpha: f64, noise_std: f64) -> Self {
        Self { w_tag: 1.0, w_query: 0.5, w_cluster: 1.0, alpha, noise_std, offset: 1.5 }
    }

    pub fn from_world(world: &World) -> Self {
        Self::new(world.config.affinity_strength, world.config.noise_std)
    }

    pub fn affinity(&self, world: &World, user: usize, query: &[usize], item: usize) -> f64 {
        let it = &world.items[item];
        let overlap = query.iter().filter(|k| it.title_keywords.contains(k)).count();
        let tag = world.tag_match(user, it.category) as u8 as f64;
        let cluster = world.cluster_match(user, item) as u8 as f64;
        self.w_tag * tag + self.w_query * overlap as f64 + self.w_cluster * cluster
    }

    pub fn click_probability(&self, affinity: f64, noise: f64) -> f64 {
        sigmoid_scalar(self.alpha * (affinity - self.offset) + noise)
    }
}

/// A sample with the ground truth it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSample {
    pub sample: Sample,
    pub affinity: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SampleSplits {
    pub train: Vec<GeneratedSample>,
    pub valid: Vec<GeneratedSample>,
    pub test: Vec<GeneratedSample>,
}

impl SampleSplits {
    /// `⌊0.8n⌋`, `⌊0.1n⌋` and the rest, in generation order.
    pub fn split(mut all: Vec<GeneratedSample>) -> Self {
        let n = all.len();
        let n_train = n * 8 / 10;
        let n_valid = n / 10;
        let test = all.split_off(n_train + n_valid);
        let valid = all.split_off(n_train);
        Self { train: all, valid, test }
    }

    pub fn samples(part: &[GeneratedSample]) -> Vec<Sample> {
        part.iter().map(|g| g.sample.clone()).collect()
    }

    pub fn all(&self) -> impl Iterator<Item = &GeneratedSample> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }
}

pub fn generate_samples(world: &World, n: usize, click: &ClickModel, rng: &mut RngStream) -> SampleSplits {
    let catalog = world.catalog();
    let cfg = &world.config;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let user = rng.below(cfg.n_users);
        let truth = &world.users[user];
        let category = if rng.bernoulli(0.7) { truth.preferred[rng.below(truth.preferred.len())] } else { rng.below(cfg.n_categories) };
        let pool = &world.keyword_pools[category];
        let k = (2 + rng.below(3)).min(pool.len());
        let mut query: Vec<usize> = rng.sample_indices(pool.len(), k).into_iter().map(|i| pool[i]).collect();
        query.sort_unstable();
        let mut words: Vec<String> = query.iter().map(|&k| keyword_name(k)).collect();
        for _ in 0..rng.below(3) {
            let at = rng.below(words.len() + 1);
            words.insert(at, FILLER_WORDS[rng.below(FILLER_WORDS.len())].to_owned());
        }
        let item = world.draw_biased_item(user, 0.5, rng);
        let affinity = click.affinity(world, user, &query, item);
        let noise = click.noise_std * rng.normal();
        let label = rng.bernoulli(click.click_probability(affinity, noise)) as u8;
        let sample = catalog
            .make_sample(&user_name(user), &words.join(" "), &item_name(item), label)
            .expect("generated names exist in the catalog");
        out.push(GeneratedSample { sample, affinity });
    }
    SampleSplits::split(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_world, WorldConfig};
    use crate::eval::auc;

    fn small() -> WorldConfig {
        WorldConfig { n_users: 100, n_items: 300, n_sessions: 200, ..WorldConfig::default() }
    }

    #[test]
    fn split_arithmetic() {
        let w = generate_world(&small()).unwrap();
        let click = ClickModel::from_world(&w);
        let s = generate_samples(&w, 0, &click, &mut RngStream::new(0));
        assert!(s.train.is_empty() && s.valid.is_empty() && s.test.is_empty());
        let s = generate_samples(&w, 57, &click, &mut RngStream::new(0));
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (45, 5, 7));
    }

    #[test]
    fn zero_strength_is_a_fair_coin() {
        let w = generate_world(&small()).unwrap();
        let s = generate_samples(&w, 10_000, &ClickModel::new(0.0, 0.5), &mut RngStream::new(1));
        let rate = s.all().filter(|g| g.sample.label == 1).count() as f64 / 10_000.0;
        assert!((rate - 0.5).abs() < 0.03, "{rate}");
    }

    #[test]
    fn signal_knob() {
        let w = generate_world(&small()).unwrap();
        let strong = generate_samples(&w, 5000, &ClickModel::new(4.0, 0.5), &mut RngStream::new(2));
        let scores: Vec<f64> = strong.test.iter().map(|g| g.affinity).collect();
        let labels: Vec<u8> = strong.test.iter().map(|g| g.sample.label).collect();
        let a = auc(&scores, &labels).unwrap();
        assert!(a >= 0.85, "oracle AUC {a}");

        let flat = generate_samples(&w, 5000, &ClickModel::new(0.0, 0.5), &mut RngStream::new(3));
        let scores: Vec<f64> = flat.test.iter().map(|g| g.affinity).collect();
        let labels: Vec<u8> = flat.test.iter().map(|g| g.sample.label).collect();
        let a = auc(&scores, &labels).unwrap();
        assert!((a - 0.5).abs() < 0.052, "chance AUC {a}");
    }
}
