//! Translation scoring, filtered negative sampling and the margin loss.

use crate::ckg::{EntityId, Triple, TripleSet};
use crate::error::{Error, Result};
use crate::numeric::RngStream;

/// Attempts allowed before [`negative_sample`] gives up.
pub const MAX_CORRUPTION_ATTEMPTS: usize = 100;

/// `‖h + r − t‖₂`; lower means more plausible.
pub fn transe_score(h: &[f64], r: &[f64], t: &[f64]) -> Result<f64> {
    if h.len() != r.len() || r.len() != t.len() {
        return Err(Error::Dimension(format!(
            "transe operands of length {}, {}, {}",
            h.len(),
            r.len(),
            t.len()
        )));
    }
    Ok(translation_residual(h, r, t).iter().map(|x| x * x).sum::<f64>().sqrt())
}

pub(crate) fn translation_residual(h: &[f64], r: &[f64], t: &[f64]) -> Vec<f64> {
    h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t).collect()
}

/// Unit direction of the residual, the gradient of the score w.r.t. `h`
/// (and `r`; its negation for `t`). Zero at the zero residual.
pub(crate) fn score_direction(residual: &[f64]) -> Vec<f64> {
    let norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; residual.len()];
    }
    residual.iter().map(|x| x / norm).collect()
}

/// `Σ max(0, pos + γ − neg)` over paired scores.
pub fn margin_loss(pos: &[f64], neg: &[f64], margin: f64) -> Result<f64> {
    if pos.len() != neg.len() {
        return Err(Error::Pairing(format!(
            "{} positive scores vs {} negative scores",
            pos.len(),
            neg.len()
        )));
    }
    Ok(pos.iter().zip(neg).map(|(p, n)| hinge(p + margin - n)).sum())
}

#[inline]
pub(crate) fn hinge(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Replaces the head or the tail (probability ½ each) with a uniformly drawn
/// entity, redrawing until the corrupted triple is not in `known`.
pub fn negative_sample(triple: Triple, known: &TripleSet, rng: &mut RngStream) -> Result<Triple> {
    let n = known.n_entities();
    if n == 0 {
        return Err(Error::Sampling("cannot corrupt a triple in an empty graph".into()));
    }
    for _ in 0..MAX_CORRUPTION_ATTEMPTS {
        let replace_head = rng.bernoulli(0.5);
        let e = EntityId::from_index(rng.below(n));
        let candidate = if replace_head {
            Triple { head: e, ..triple }
        } else {
            Triple { tail: e, ..triple }
        };
        if !known.contains(&candidate) {
            return Ok(candidate);
        }
    }
    Err(Error::Sampling(format!(
        "no unseen corruption of ({}, {}, {}) after {MAX_CORRUPTION_ATTEMPTS} attempts",
        triple.head, triple.relation, triple.tail
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ckg::Relation;

    #[test]
    fn score_examples() {
        assert_eq!(transe_score(&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        let s = transe_score(&[1.0, 2.0], &[3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert!((s - 52f64.sqrt()).abs() < 1e-15);
        assert!((s - 7.2111).abs() < 1e-4);
        let (h, r, t) = ([0.3, -1.2, 2.0], [0.5, 0.5, -0.1], [1.0, 0.0, 0.7]);
        let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
        let a = transe_score(&h, &r, &t).unwrap();
        let b = transe_score(&t, &neg_r, &h).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(transe_score(&[1.0], &[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn margin_examples() {
        assert_eq!(margin_loss(&[0.5], &[2.0], 1.0).unwrap(), 0.0);
        assert_eq!(margin_loss(&[2.0], &[1.0], 1.0).unwrap(), 2.0);
        assert_eq!(margin_loss(&[0.3, 1.7], &[0.3, 1.7], 1.0).unwrap(), 2.0);
        assert!(matches!(margin_loss(&[1.0], &[], 1.0), Err(Error::Pairing(_))));
    }

    fn two_entity_set() -> TripleSet {
        // Corruption draws from all entities regardless of kind.
        let mut s = TripleSet::new();
        s.insert("a", Relation::PropertyHasValue, "b");
        s
    }

    #[test]
    fn exhaustive_two_entity_corruption() {
        let s = two_entity_set();
        let t = s.triples()[0];
        let (a, b) = (t.head, t.tail);
        let allowed = [
            Triple { head: b, relation: t.relation, tail: b },
            Triple { head: a, relation: t.relation, tail: a },
        ];
        let mut rng = RngStream::new(11);
        for _ in 0..200 {
            let c = negative_sample(t, &s, &mut rng).unwrap();
            assert!(allowed.contains(&c), "{c:?}");
            assert_eq!(c.relation, t.relation);
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let s = two_entity_set();
        let t = s.triples()[0];
        let run = || {
            let mut rng = RngStream::new(4);
            (0..10).map(|_| negative_sample(t, &s, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn saturated_graph_fails() {
        let s = two_entity_set();
        let t = s.triples()[0];
        let ids: Vec<_> = s.vocab().iter().map(|(id, _, _)| id).collect();
        let every = ids
            .iter()
            .flat_map(|&h| ids.iter().map(move |&tl| Triple { head: h, relation: t.relation, tail: tl }));
        let full = s.with_triples(every);
        assert!(matches!(negative_sample(t, &full, &mut RngStream::new(0)), Err(Error::Sampling(_))));
    }
}
