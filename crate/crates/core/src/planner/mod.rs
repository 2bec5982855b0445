//! Per-epoch plan generation: candidate selection, next-function lookup,
//! ESP-gain estimation and the benefit-ordered triple queue.

pub mod decision;
pub mod queue;

use std::collections::BTreeSet;

pub use decision::{BucketEntry, DecisionTable, DEFAULT_BUCKETS};
pub use queue::{PlanQueue, Triple};

use crate::model::{Expression, StateVector};
use crate::probability::{entropy_roots, esp_value};
use crate::scalar::Scalar;
use crate::table::ObjectTable;

/// Smallest uncertainty and probability distance from 0 or 1 used when
/// estimating.
pub const EPSILON: f64 = 1e-6;

/// Objects outside the current answer.
pub fn select_candidates<I: Ord + Clone>(all_ids: &[I], answer: &[I]) -> Vec<I> {
    let inside: BTreeSet<&I> = answer.iter().collect();
    all_ids.iter().filter(|i| !inside.contains(i)).cloned().collect()
}

/// Relative benefit of raising an ESP `esp` by `esp_delta` at cost `cost`.
pub fn triple_benefit<T: Scalar>(esp: T, esp_delta: T, cost: T) -> T {
    esp * (esp + esp_delta) / cost
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EspEstimate<T> {
    pub p_hat: T,
    pub esp_hat: T,
    /// Estimated ESP gain, never negative.
    pub esp_delta: T,
}

/// Estimates the object's ESP after the uncertainty of one predicate changes
/// by `delta_h`, holding the other predicates fixed and taking the inverse
/// entropy root that raises the ESP.
pub fn estimate_esp<T: Scalar>(
    expr: &Expression,
    leaf_probs: &[T],
    predicate: usize,
    h: T,
    delta_h: T,
) -> EspEstimate<T> {
    let eps = T::lit(EPSILON);
    let h_hat = (h + delta_h).max(eps).min(T::one());
    let (lo, hi) = entropy_roots(h_hat).expect("clamped uncertainty lies in [0, 1]");
    let clamp = |p: T| p.max(eps).min(T::one() - eps);
    let current = esp_value(expr, leaf_probs);
    let mut probs = leaf_probs.to_vec();
    probs[predicate] = clamp(hi);
    let esp_hi = esp_value(expr, &probs);
    probs[predicate] = clamp(lo);
    let esp_lo = esp_value(expr, &probs);
    let (p_hat, esp_hat) = if esp_lo > esp_hi { (clamp(lo), esp_lo) } else { (clamp(hi), esp_hi) };
    EspEstimate { p_hat, esp_hat, esp_delta: (esp_hat - current).max(T::zero()) }
}

#[derive(Clone, Debug)]
pub struct Planner<T> {
    pub table: DecisionTable,
    /// Estimated cost of each function, per tag type.
    pub costs: Vec<Vec<T>>,
    /// Quality of each function, per tag type.
    pub qualities: Vec<Vec<T>>,
}

impl<T: Scalar> Planner<T> {
    pub fn new(table: DecisionTable, costs: Vec<Vec<T>>, qualities: Vec<Vec<T>>) -> Self {
        Planner { table, costs, qualities }
    }

    /// Next function for a predicate in `state` with uncertainty `h`, and the
    /// expected uncertainty change. Unseen rows fall back to the cheapest
    /// unexecuted function with a change of `-h·(1-q)`.
    pub fn next_function(&self, tag_type: usize, tag: usize, state: StateVector, h: T) -> Option<(usize, T)> {
        if state.is_full() {
            return None;
        }
        if let Some(e) = self.table.get(tag_type, tag, state, h.to_f64_lossy()) {
            if !state.is_set(e.next) {
                return Some((e.next, T::lit(e.delta)));
            }
        }
        let costs = &self.costs[tag_type];
        let f = state
            .unexecuted()
            .min_by(|a, b| costs[*a].total_cmp_s(&costs[*b]).then(a.cmp(b)))?;
        Some((f, -h * (T::one() - self.qualities[tag_type][f])))
    }

    /// Triple for one (object, predicate) pair, if any function remains.
    pub fn triple_for(&self, table: &ObjectTable<T>, expr: &Expression, object: usize, predicate: usize) -> Option<Triple<T>> {
        let pred = &expr.predicates[predicate];
        let h = table.uncertainty(object, predicate);
        let (function, delta_h) =
            self.next_function(pred.tag_type_index, pred.tag_index, table.state(object, predicate), h)?;
        let est = estimate_esp(expr, table.leaf_probs(object), predicate, h, delta_h);
        let cost = self.costs[pred.tag_type_index][function];
        let esp = table.esp(object);
        Some(Triple {
            object,
            predicate,
            function,
            benefit: triple_benefit(esp, est.esp_delta, cost),
            esp_before: esp,
            esp_delta_est: est.esp_delta,
            cost,
        })
    }

    /// Pushes the triples of `object` into `queue`, returning how many.
    fn push_object(&self, queue: &mut PlanQueue<T>, table: &ObjectTable<T>, expr: &Expression, object: usize) -> usize {
        let mut n = 0;
        for r in 0..table.n_predicates() {
            if let Some(t) = self.triple_for(table, expr, object, r) {
                queue.push(t);
                n += 1;
            }
        }
        n
    }

    /// Builds a queue holding one triple per candidate and predicate with an
    /// available function. Returns the queue and the number of triples built.
    pub fn generate_plan(
        &self,
        table: &ObjectTable<T>,
        expr: &Expression,
        candidates: impl IntoIterator<Item = usize>,
    ) -> (PlanQueue<T>, usize) {
        let mut queue = PlanQueue::new();
        let mut n = 0;
        for o in candidates {
            n += self.push_object(&mut queue, table, expr, o);
        }
        (queue, n)
    }

    /// Rebuilds the triples of `touched` objects: objects inside the answer
    /// lose theirs, the others get fresh triples. Returns triples rebuilt.
    pub fn update_queue(
        &self,
        queue: &mut PlanQueue<T>,
        table: &ObjectTable<T>,
        expr: &Expression,
        touched: &BTreeSet<usize>,
        inside: &[bool],
    ) -> usize {
        let mut n = 0;
        for &o in touched {
            queue.remove_object(o);
            if !inside[o] {
                n += self.push_object(queue, table, expr, o);
            }
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EnrichmentFunctionSpec, Schema, ScoreModelKind, TagType};
    use crate::probability::entropy;

    fn schema(types: &[(&str, &[&str])]) -> Schema {
        Schema::new(
            types
                .iter()
                .map(|(id, tags)| TagType {
                    id: id.to_string(),
                    tags: tags.iter().map(|t| t.to_string()).collect(),
                    functions: (0..4)
                        .map(|j| EnrichmentFunctionSpec {
                            id: format!("{id}_f{}", j + 1),
                            tag_type: id.to_string(),
                            quality: 0.7,
                            cost: 1.0 + j as f64,
                            model: ScoreModelKind::Binormal,
                            cost_jitter: 0.0,
                        })
                        .collect(),
                    priors: None,
                })
                .collect(),
        )
        .unwrap()
    }

    fn planner(table: DecisionTable) -> Planner<f64> {
        Planner::new(
            table,
            vec![vec![1.0, 2.0, 3.0, 4.0]; 2],
            vec![vec![0.6, 0.7, 0.8, 0.9]; 2],
        )
    }

    fn table3() -> DecisionTable {
        let mut t = DecisionTable::default();
        let s1 = StateVector::from_bits(&[false, false, false, true]);
        let s2 = StateVector::from_bits(&[false, false, true, true]);
        t.insert(0, 0, s1, 9, BucketEntry { next: 2, delta: -0.22, support: 10 }).unwrap();
        t.insert(0, 0, s2, 9, BucketEntry { next: 1, delta: -0.28, support: 10 }).unwrap();
        t
    }

    #[test]
    fn candidates() {
        let all = ["o1", "o2", "o3", "o4", "o5"];
        assert_eq!(select_candidates(&all, &["o1", "o4", "o5"]), vec!["o2", "o3"]);
        assert_eq!(select_candidates(&all, &[]), all.to_vec());
        assert!(select_candidates(&all, &all).is_empty());
    }

    #[test]
    fn benefit_formula() {
        assert!((triple_benefit(0.3, 0.48, 2.0) - 0.117_f64).abs() < 1e-12);
        assert_eq!(triple_benefit(0.0, 0.9, 1.0), 0.0);
    }

    #[test]
    fn next_function_lookup() {
        let p = planner(table3());
        let s1 = StateVector::from_bits(&[false, false, false, true]);
        let s2 = StateVector::from_bits(&[false, false, true, true]);
        assert_eq!(p.next_function(0, 0, s1, 0.92), Some((2, -0.22)));
        assert_eq!(p.next_function(0, 0, s2, 0.93), Some((1, -0.28)));
        assert_eq!(p.next_function(0, 0, StateVector::from_bits(&[true; 4]), 0.5), None);
    }

    #[test]
    fn next_function_fallback() {
        let p = planner(table3());
        let s = StateVector::from_bits(&[true, false, false, true]);
        let (f, d) = p.next_function(0, 0, s, 0.5).unwrap();
        assert_eq!(f, 1);
        assert!((d + 0.5 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn estimate_single_predicate() {
        let s = schema(&[("Person", &["John", "Mary"])]);
        let e = Expression::parse(r#"Person("John")"#, &s).unwrap();
        let est = estimate_esp(&e, &[0.7_f64], 0, 0.92, -0.28);
        assert!((est.p_hat - 0.84).abs() < 0.01, "{}", est.p_hat);
        assert_eq!(est.esp_hat, est.p_hat);
        assert!((est.esp_delta - (est.p_hat - 0.7)).abs() < 1e-12);
    }

    #[test]
    fn estimate_conjunction() {
        let s = schema(&[("Person", &["John"]), ("Place", &["Home"])]);
        let e = Expression::parse(r#"Person("John") AND Place("Home")"#, &s).unwrap();
        let h = entropy(0.84_f64);
        let est = estimate_esp(&e, &[0.7_f64, 0.9], 0, entropy(0.7), h - entropy(0.7));
        assert!((est.esp_hat - 0.756).abs() < 1e-6);
        assert!((est.esp_delta - 0.126).abs() < 1e-6);
    }

    #[test]
    fn plan_generation_counts() {
        let s = schema(&[("Person", &["John"]), ("Place", &["Home"])]);
        let e = Expression::parse(r#"Person("John") AND Place("Home")"#, &s).unwrap();
        let mut t = ObjectTable::<f64>::new(3, &e, &s);
        let q = vec![vec![0.6, 0.7, 0.8, 0.9]; 2];
        for r in 0..2 {
            for f in 0..4 {
                t.record(2, r, f, 0.5, &q[0], &e).unwrap();
            }
        }
        let p = planner(DecisionTable::default());
        let (queue, n) = p.generate_plan(&t, &e, [0, 1]);
        assert_eq!((queue.len(), n), (4, 4));
        let (queue, n) = p.generate_plan(&t, &e, [2]);
        assert_eq!((queue.len(), n), (0, 0));
    }
}
