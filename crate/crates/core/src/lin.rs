//! Sparse finite linear combinations with rational coefficients.

use std::collections::btree_map::{self, BTreeMap};

use num_traits::{One, Zero};

use crate::exactlin::Rational;

/// A finite formal sum `sum c_k * k` with no stored zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lin<K: Ord> {
    terms: BTreeMap<K, Rational>,
}

impl<K: Ord> Default for Lin<K> {
    fn default() -> Self {
        Lin { terms: BTreeMap::new() }
    }
}

impl<K: Ord + Clone> Lin<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(k: K, c: Rational) -> Self {
        let mut l = Self::new();
        l.add_term(k, c);
        l
    }

    pub fn basis(k: K) -> Self {
        Self::single(k, Rational::one())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, K, Rational> {
        self.terms.iter()
    }

    pub fn keys(&self) -> btree_map::Keys<'_, K, Rational> {
        self.terms.keys()
    }

    pub fn coeff(&self, k: &K) -> Rational {
        self.terms.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn get(&self, k: &K) -> Option<&Rational> {
        self.terms.get(k)
    }

    pub fn add_term(&mut self, k: K, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(k) {
            btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_term_ref(&mut self, k: &K, c: &Rational) {
        if c.is_zero() {
            return;
        }
        if let Some(v) = self.terms.get_mut(k) {
            *v += c;
            if v.is_zero() {
                self.terms.remove(k);
            }
        } else {
            self.terms.insert(k.clone(), c.clone());
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Lin<K>, c: &Rational) {
        if c.is_zero() {
            return;
        }
        for (k, v) in other.iter() {
            self.add_term_ref(k, &(v * c));
        }
    }

    pub fn add_assign(&mut self, other: &Lin<K>) {
        for (k, v) in other.iter() {
            self.add_term_ref(k, v);
        }
    }

    pub fn sub_assign(&mut self, other: &Lin<K>) {
        for (k, v) in other.iter() {
            self.add_term_ref(k, &-v);
        }
    }

    pub fn scaled(&self, c: &Rational) -> Lin<K> {
        if c.is_zero() {
            return Lin::new();
        }
        Lin { terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect() }
    }

    pub fn neg(&self) -> Lin<K> {
        Lin { terms: self.terms.iter().map(|(k, v)| (k.clone(), -v)).collect() }
    }

    pub fn filter(&self, mut keep: impl FnMut(&K) -> bool) -> Lin<K> {
        Lin {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Linear extension of a basis map.
    pub fn map_basis<L: Ord + Clone>(&self, mut f: impl FnMut(&K) -> Lin<L>) -> Lin<L> {
        let mut out = Lin::new();
        for (k, v) in self.iter() {
            out.add_assign_scaled(&f(k), v);
        }
        out
    }

    /// Relabel keys; colliding keys are summed.
    pub fn map_keys<L: Ord + Clone>(&self, mut f: impl FnMut(&K) -> L) -> Lin<L> {
        let mut out = Lin::new();
        for (k, v) in self.iter() {
            out.add_term(f(k), v.clone());
        }
        out
    }

    pub fn into_terms(self) -> BTreeMap<K, Rational> {
        self.terms
    }
}

impl<K: Ord + Clone> FromIterator<(K, Rational)> for Lin<K> {
    fn from_iter<I: IntoIterator<Item = (K, Rational)>>(iter: I) -> Self {
        let mut l = Lin::new();
        for (k, c) in iter {
            l.add_term(k, c);
        }
        l
    }
}

impl<'a, K: Ord> IntoIterator for &'a Lin<K> {
    type Item = (&'a K, &'a Rational);
    type IntoIter = btree_map::Iter<'a, K, Rational>;
    fn into_iter(self) -> Self::IntoIter {
        self.terms.iter()
    }
}
