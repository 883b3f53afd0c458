//! Finite probability distributions with exact rational weights.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{q_ratio, Q};

/// A finite distribution. Probabilities sum to exactly one and zero-mass
/// outcomes are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactDist<T: Ord> {
    masses: BTreeMap<T, Q>,
}

impl<T: Ord + Clone> ExactDist<T> {
    pub fn point(outcome: T) -> Self {
        let mut masses = BTreeMap::new();
        masses.insert(outcome, Q::one());
        ExactDist { masses }
    }

    /// Builds a distribution from (outcome, mass) pairs; repeated outcomes are
    /// merged. Fails unless all masses are non-negative and sum to one.
    pub fn from_masses(items: impl IntoIterator<Item = (T, Q)>) -> Result<Self> {
        let mut masses: BTreeMap<T, Q> = BTreeMap::new();
        let mut total = Q::zero();
        for (k, p) in items {
            if p.is_negative() {
                return Err(Error::domain("negative probability mass"));
            }
            total += &p;
            if p.is_zero() {
                continue;
            }
            *masses.entry(k).or_insert_with(Q::zero) += p;
        }
        if !total.is_one() {
            return Err(Error::domain(format!("masses sum to {total}, not 1")));
        }
        Ok(ExactDist { masses })
    }

    /// Normalizes integer tallies into a distribution.
    pub fn from_counts(counts: impl IntoIterator<Item = (T, u64)>) -> Result<Self> {
        let counts: Vec<(T, u64)> = counts.into_iter().collect();
        let total: u64 = counts.iter().map(|(_, c)| *c).sum();
        if total == 0 {
            return Err(Error::domain("cannot normalize an empty tally"));
        }
        Self::from_masses(counts.into_iter().map(|(k, c)| (k, q_ratio(c, total))))
    }

    pub fn prob(&self, outcome: &T) -> Q {
        self.masses.get(outcome).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Q)> {
        self.masses.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.masses.keys()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Pushforward along `f`.
    pub fn map<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> ExactDist<U> {
        let mut masses: BTreeMap<U, Q> = BTreeMap::new();
        for (k, p) in &self.masses {
            *masses.entry(f(k)).or_insert_with(Q::zero) += p;
        }
        ExactDist { masses }
    }

    /// `(1/2) * sum |p - q|` over the union of supports.
    pub fn tv_distance(&self, other: &ExactDist<T>) -> Q {
        let mut sum = Q::zero();
        for (k, p) in &self.masses {
            sum += (p - other.prob(k)).abs();
        }
        for (k, q) in &other.masses {
            if !self.masses.contains_key(k) {
                sum += q;
            }
        }
        sum / Q::from_integer(2.into())
    }

    /// Expectation of a rational-valued function.
    pub fn expect(&self, mut f: impl FnMut(&T) -> Q) -> Q {
        self.masses.iter().map(|(k, p)| f(k) * p).sum()
    }
}

/// Accumulates exact masses without the sum-to-one check; for traversals that
/// build a distribution piece by piece.
#[derive(Clone, Debug, Default)]
pub(crate) struct MassAccumulator<T: Ord> {
    masses: BTreeMap<T, Q>,
}

impl<T: Ord + Clone> MassAccumulator<T> {
    pub(crate) fn new() -> Self {
        MassAccumulator {
            masses: BTreeMap::new(),
        }
    }

    pub(crate) fn add(&mut self, outcome: T, mass: Q) {
        if mass.is_zero() {
            return;
        }
        *self.masses.entry(outcome).or_insert_with(Q::zero) += mass;
    }

    pub(crate) fn finish(self) -> Result<ExactDist<T>> {
        ExactDist::from_masses(self.masses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tv_examples() {
        let d = ExactDist::from_masses([(0, q_ratio(1, 2)), (1, q_ratio(1, 2))]).unwrap();
        assert!(d.tv_distance(&d).is_zero());
        let a = ExactDist::point(0);
        let b = ExactDist::point(1);
        assert!(a.tv_distance(&b).is_one());
        let e = ExactDist::from_masses([(0, q_ratio(3, 4)), (1, q_ratio(1, 4))]).unwrap();
        assert_eq!(d.tv_distance(&e), q_ratio(1, 4));
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(ExactDist::from_masses([(0, q_ratio(1, 2))]).is_err());
        assert!(ExactDist::<u8>::from_counts([]).is_err());
        let d = ExactDist::from_counts([(1, 0), (2, 3)]).unwrap();
        assert_eq!(d.len(), 1);
    }

    proptest! {
        #[test]
        fn tv_is_a_symmetric_bounded_metric(a in prop::collection::vec(0u64..5, 4),
                                           b in prop::collection::vec(0u64..5, 4)) {
            prop_assume!(a.iter().sum::<u64>() > 0 && b.iter().sum::<u64>() > 0);
            let da = ExactDist::from_counts(a.iter().copied().enumerate()).unwrap();
            let db = ExactDist::from_counts(b.iter().copied().enumerate()).unwrap();
            let t = da.tv_distance(&db);
            prop_assert_eq!(&t, &db.tv_distance(&da));
            prop_assert!(t >= Q::zero() && t <= Q::one());
        }
    }
}
