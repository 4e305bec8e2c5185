//! Filtered tail-prediction Hits@K over sampled candidate lists.

use super::transe::transe_score;
use crate::ckg::{EntityId, Triple, TripleSet};
use crate::error::{Error, Result};
use crate::numeric::{RngStream, Tensor2D};

/// Moves a `test_fraction` share of the triples (chosen uniformly) out of
/// the set. The returned training set keeps the full vocabulary.
pub fn holdout_split(set: &TripleSet, test_fraction: f64, rng: &mut RngStream) -> (TripleSet, Vec<Triple>) {
    let n = set.len();
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let picked = rng.sample_indices(n, n_test.min(n));
    let mut is_test = vec![false; n];
    for i in picked {
        is_test[i] = true;
    }
    let triples = set.triples();
    let train = set.with_triples(triples.iter().zip(&is_test).filter(|(_, t)| !**t).map(|(x, _)| *x));
    let mut test: Vec<Triple> = triples.iter().zip(&is_test).filter(|(_, t)| **t).map(|(x, _)| *x).collect();
    test.sort_by_key(|t| (t.head.0, t.relation.index(), t.tail.0));
    (train, test)
}

/// Rank (1-based) of the true tail among itself and `n_candidates − 1`
/// uniformly drawn entities `e` for which `(h, r, e)` is not in `known`.
/// Candidates scoring strictly better than the true tail push it down.
pub fn tail_rank(
    triple: Triple,
    entities: &Tensor2D,
    relations: &Tensor2D,
    known: &TripleSet,
    n_candidates: usize,
    rng: &mut RngStream,
) -> Result<usize> {
    let n_e = entities.rows();
    let h = entities.row(triple.head.index());
    let r = relations.row(triple.relation.index());
    let truth = transe_score(h, r, entities.row(triple.tail.index()))?;
    let mut rank = 1;
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn + 1 < n_candidates {
        attempts += 1;
        if attempts > 100 * n_candidates {
            return Err(Error::Sampling(format!("too few corruptions for tail of {triple:?}")));
        }
        let e = EntityId::from_index(rng.below(n_e));
        let c = Triple { tail: e, ..triple };
        if e == triple.tail || known.contains(&c) {
            continue;
        }
        drawn += 1;
        if transe_score(h, r, entities.row(e.index()))? < truth {
            rank += 1;
        }
    }
    Ok(rank)
}

/// Share of `test` triples whose true tail ranks within the top `k`.
pub fn hits_at_k(
    test: &[Triple],
    entities: &Tensor2D,
    relations: &Tensor2D,
    known: &TripleSet,
    k: usize,
    n_candidates: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Metric("Hits@K needs at least one test triple".into()));
    }
    let mut hits = 0usize;
    for &t in test {
        if tail_rank(t, entities, relations, known, n_candidates, rng)? <= k {
            hits += 1;
        }
    }
    Ok(hits as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ckg::Relation;

    #[test]
    fn perfect_embedding_ranks_first() {
        let mut ts = TripleSet::new();
        for i in 0..30 {
            ts.insert(&format!("p{i}"), Relation::PropertyHasValue, &format!("v{i}"));
        }
        let n = ts.n_entities();
        // Entity i sits at (i, 0); the relation translates by +1.
        let entities = Tensor2D::from_vec(n, 2, (0..n).flat_map(|i| [i as f64, 0.0]).collect()).unwrap();
        let mut relations = Tensor2D::zeros(9, 2);
        relations.row_mut(Relation::PropertyHasValue.index())[0] = 1.0;
        let test = ts.triples().to_vec();
        let h = hits_at_k(&test, &entities, &relations, &ts, 1, 20, &mut RngStream::new(0)).unwrap();
        assert_eq!(h, 1.0);
    }

    #[test]
    fn holdout_partitions() {
        let mut ts = TripleSet::new();
        for i in 0..50 {
            ts.insert(&format!("u{i}"), Relation::UserHasTag, &format!("t{}", i % 7));
        }
        let (train, test) = holdout_split(&ts, 0.2, &mut RngStream::new(1));
        assert_eq!(test.len(), 10);
        assert_eq!(train.len(), 40);
        assert_eq!(train.n_entities(), ts.n_entities());
        assert!(test.iter().all(|t| !train.contains(t) && ts.contains(t)));
    }
}
