//! Finite linear combinations with exact rational coefficients.

use std::collections::btree_map::{self, BTreeMap};

use num_traits::Zero;

use crate::scalar::{self, Q};

/// A finite formal sum `Σ cᵢ·kᵢ` over an ordered basis. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinComb<K: Ord> {
    terms: BTreeMap<K, Q>,
}

impl<K: Ord> Default for LinComb<K> {
    fn default() -> Self {
        LinComb { terms: BTreeMap::new() }
    }
}

impl<K: Ord + Clone> LinComb<K> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(key: K) -> Self {
        Self::term(key, Q::from_integer(1.into()))
    }

    pub fn term(key: K, coef: Q) -> Self {
        let mut out = Self::zero();
        out.add_term(key, coef);
        out
    }

    pub fn add_term(&mut self, key: K, coef: Q) {
        if coef.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            btree_map::Entry::Vacant(e) => {
                e.insert(coef);
            }
            btree_map::Entry::Occupied(mut e) => {
                scalar::add_assign(e.get_mut(), coef);
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, scale: &Q) {
        if scale.is_zero() {
            return;
        }
        for (k, c) in &other.terms {
            self.add_term(k.clone(), scalar::mul(c, scale));
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (k, c) in &other.terms {
            self.add_term(k.clone(), c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &Self) {
        for (k, c) in &other.terms {
            self.add_term(k.clone(), -c.clone());
        }
    }

    pub fn scaled(&self, scale: &Q) -> Self {
        if scale.is_zero() {
            return Self::zero();
        }
        LinComb {
            terms: self.terms.iter().map(|(k, c)| (k.clone(), scalar::mul(c, scale))).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        LinComb {
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c.clone())).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coef(&self, key: &K) -> Q {
        self.terms.get(key).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> btree_map::Iter<'_, K, Q> {
        self.terms.iter()
    }

    pub fn keys(&self) -> btree_map::Keys<'_, K, Q> {
        self.terms.keys()
    }

    pub fn first(&self) -> Option<(&K, &Q)> {
        self.terms.iter().next()
    }

    /// Applies a linear map defined on basis elements.
    pub fn map_linear<L: Ord + Clone>(&self, mut f: impl FnMut(&K) -> LinComb<L>) -> LinComb<L> {
        let mut out = LinComb::zero();
        for (k, c) in &self.terms {
            out.add_scaled(&f(k), c);
        }
        out
    }

    /// Keeps only the terms whose key satisfies `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&K) -> bool) -> Self {
        LinComb {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    pub(crate) fn range_from(&self, key: &K) -> impl Iterator<Item = (&K, &Q)> {
        self.terms
            .range((std::ops::Bound::Excluded(key.clone()), std::ops::Bound::Unbounded))
    }
}

impl<K: Ord + Clone> FromIterator<(K, Q)> for LinComb<K> {
    fn from_iter<I: IntoIterator<Item = (K, Q)>>(iter: I) -> Self {
        let mut out = Self::zero();
        for (k, c) in iter {
            out.add_term(k, c);
        }
        out
    }
}

impl<'a, K: Ord> IntoIterator for &'a LinComb<K> {
    type Item = (&'a K, &'a Q);
    type IntoIter = btree_map::Iter<'a, K, Q>;

    fn into_iter(self) -> Self::IntoIter {
        self.terms.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    #[test]
    fn cancellation_drops_terms() {
        let mut x = LinComb::term("a", q(2));
        x.add_term("a", q(-2));
        assert!(x.is_zero());
        x.add_term("b", q(0));
        assert!(x.is_zero());
    }

    #[test]
    fn scaling_by_zero_is_zero() {
        let x = LinComb::term(1u8, q(3));
        assert!(x.scaled(&q(0)).is_zero());
        assert_eq!(x.scaled(&q(2)).coef(&1), q(6));
    }
}
