//! Benefit-ordered queue of enrichment triples, at most one per
//! (object, predicate) pair.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::scalar::Scalar;

/// One unit of enrichment work.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triple<T> {
    pub object: usize,
    pub predicate: usize,
    /// Function index within the predicate's tag type.
    pub function: usize,
    pub benefit: T,
    pub esp_before: T,
    pub esp_delta_est: T,
    /// Estimated cost used for the benefit.
    pub cost: T,
}

#[derive(Clone, Copy, Debug)]
struct Key<T> {
    benefit: T,
    cost: T,
    object: usize,
    predicate: usize,
}

impl<T: Scalar> Ord for Key<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .benefit
            .total_cmp_s(&self.benefit)
            .then_with(|| self.cost.total_cmp_s(&other.cost))
            .then_with(|| self.object.cmp(&other.object))
            .then_with(|| self.predicate.cmp(&other.predicate))
    }
}

impl<T: Scalar> PartialOrd for Key<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> PartialEq for Key<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Key<T> {}

fn key<T: Copy>(t: &Triple<T>) -> Key<T> {
    Key { benefit: t.benefit, cost: t.cost, object: t.object, predicate: t.predicate }
}

#[derive(Clone, Debug)]
pub struct PlanQueue<T> {
    entries: BTreeMap<(usize, usize), Triple<T>>,
    order: BTreeSet<Key<T>>,
}

impl<T: Scalar> Default for PlanQueue<T> {
    fn default() -> Self {
        PlanQueue { entries: BTreeMap::new(), order: BTreeSet::new() }
    }
}

impl<T: Scalar> PlanQueue<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts a triple, replacing any triple for the same (object, predicate).
    pub fn push(&mut self, triple: Triple<T>) {
        if let Some(old) = self.entries.insert((triple.object, triple.predicate), triple) {
            self.order.remove(&key(&old));
        }
        self.order.insert(key(&triple));
    }

    pub fn peek(&self) -> Option<&Triple<T>> {
        self.order.first().map(|k| &self.entries[&(k.object, k.predicate)])
    }

    pub fn pop(&mut self) -> Option<Triple<T>> {
        let k = self.order.pop_first()?;
        self.entries.remove(&(k.object, k.predicate))
    }

    pub fn remove(&mut self, object: usize, predicate: usize) -> Option<Triple<T>> {
        let t = self.entries.remove(&(object, predicate))?;
        self.order.remove(&key(&t));
        Some(t)
    }

    /// Removes every triple of `object`, returning how many were dropped.
    pub fn remove_object(&mut self, object: usize) -> usize {
        let preds: Vec<usize> = self.entries.range((object, 0)..(object + 1, 0)).map(|(k, _)| k.1).collect();
        for p in &preds {
            self.remove(object, *p);
        }
        preds.len()
    }

    pub fn contains_object(&self, object: usize) -> bool {
        self.entries.range((object, 0)..(object + 1, 0)).next().is_some()
    }

    pub fn get(&self, object: usize, predicate: usize) -> Option<&Triple<T>> {
        self.entries.get(&(object, predicate))
    }

    /// Triples in priority order.
    pub fn iter(&self) -> impl Iterator<Item = &Triple<T>> + '_ {
        self.order.iter().map(move |k| &self.entries[&(k.object, k.predicate)])
    }

    /// Triples keyed by (object, predicate), for content comparison.
    pub fn contents(&self) -> &BTreeMap<(usize, usize), Triple<T>> {
        &self.entries
    }

    pub fn total_benefit(&self) -> T {
        self.entries.values().map(|t| t.benefit).sum()
    }
}

impl<T: Scalar> PartialEq for PlanQueue<T> {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(object: usize, predicate: usize, benefit: f64, cost: f64) -> Triple<f64> {
        Triple { object, predicate, function: 0, benefit, esp_before: 0.5, esp_delta_est: 0.1, cost }
    }

    #[test]
    fn order_and_ties() {
        let mut q = PlanQueue::new();
        q.push(t(3, 0, 0.5, 2.0));
        q.push(t(1, 0, 0.5, 1.0));
        q.push(t(0, 0, 0.5, 1.0));
        q.push(t(2, 1, 0.9, 5.0));
        let order: Vec<usize> = std::iter::from_fn(|| q.pop()).map(|t| t.object).collect();
        assert_eq!(order, vec![2, 0, 1, 3]);
    }

    #[test]
    fn replace_and_remove() {
        let mut q = PlanQueue::new();
        q.push(t(1, 0, 0.2, 1.0));
        q.push(t(1, 1, 0.3, 1.0));
        q.push(t(1, 0, 0.7, 1.0));
        assert_eq!(q.len(), 2);
        assert_eq!(q.peek().unwrap().benefit, 0.7);
        assert_eq!(q.remove_object(1), 2);
        assert!(q.is_empty());
        assert!(q.pop().is_none());
    }
}
