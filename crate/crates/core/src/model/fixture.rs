//! Small worlds and configs shared by the model tests.

use super::{Catalog, EncodedSample, ModelConfig, Resolver, TrainConfig};
use crate::datagen::{generate_samples, generate_world, ClickModel, WorldConfig};
use crate::features::Sample;
use crate::numeric::{RngStream, Tensor2D};
use crate::pretrain::PretrainCheckpoint;

pub(crate) const DIM: usize = 4;

pub(crate) struct Fixture {
    pub catalog: Catalog,
    pub resolver: Resolver,
    pub ckpt: PretrainCheckpoint,
    pub encoded: Vec<EncodedSample>,
}

pub(crate) fn tiny_config() -> TrainConfig {
    TrainConfig {
        lr: 1e-2,
        batch_size: 8,
        epochs: 2,
        model: ModelConfig {
            cat_dim: 3,
            cross_layers: 2,
            deep_widths: vec![5, 3],
            heads: 2,
            conv_widths: vec![2, 4],
            filters: 3,
            m_q: 3,
            n_t: 3,
            ..ModelConfig::default()
        },
        ..TrainConfig::default()
    }
}

fn random_table(rows: usize, cols: usize, rng: &mut RngStream) -> Tensor2D {
    Tensor2D::from_vec(rows, cols, (0..rows * cols).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap()
}

pub(crate) fn fixture(n_samples: usize, seed: u64) -> Fixture {
    let cfg = WorldConfig {
        n_users: 12,
        n_items: 30,
        n_categories: 4,
        n_sellers: 5,
        n_tags: 3,
        n_keywords: 20,
        n_sessions: 15,
        n_properties: 2,
        values_per_property: 2,
        n_clusters: 2,
        seed,
        ..WorldConfig::default()
    };
    let world = generate_world(&cfg).unwrap();
    let catalog = world.catalog();
    let m = &tiny_config().model;
    let resolver = Resolver::new(world.triples.vocab(), &catalog, m.m_q, m.n_t);
    let mut rng = RngStream::new(seed ^ 0x5eed);
    let n_e = world.triples.n_entities();
    let ckpt =
        PretrainCheckpoint::new(random_table(n_e, DIM, &mut rng), random_table(9, DIM, &mut rng)).unwrap();
    let splits = generate_samples(&world, n_samples, &ClickModel::from_world(&world), &mut rng);
    let samples: Vec<Sample> = splits.all().map(|g| g.sample.clone()).collect();
    let encoded = resolver.encode_all(&samples).unwrap();
    Fixture { catalog, resolver, ckpt, encoded }
}
