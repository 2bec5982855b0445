//! Per-object enrichment state: state vectors, function outputs, predicate
//! probabilities, uncertainties and ESPs.

use crate::error::Result;
use crate::model::{Expression, Schema, StateVector};
use crate::probability::{combine_predicate_probability, entropy, esp_value};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectTable<T> {
    n_objects: usize,
    n_predicates: usize,
    /// Number of functions of each predicate's tag type.
    widths: Vec<usize>,
    /// Offset of each predicate inside an object's output row.
    offsets: Vec<usize>,
    row_len: usize,
    states: Vec<StateVector>,
    outputs: Vec<Option<T>>,
    probs: Vec<T>,
    uncertainty: Vec<T>,
    esp: Vec<T>,
}

impl<T: Scalar> ObjectTable<T> {
    /// Empty table: no function executed, probabilities 0.5, uncertainty 1, ESP 0.
    pub fn new(n_objects: usize, expr: &Expression, schema: &Schema) -> Self {
        let widths: Vec<usize> = expr
            .predicates
            .iter()
            .map(|p| schema.tag_types[p.tag_type_index].functions.len())
            .collect();
        let mut offsets = Vec::with_capacity(widths.len());
        let mut acc = 0;
        for w in &widths {
            offsets.push(acc);
            acc += w;
        }
        let m = widths.len();
        let states = (0..n_objects).flat_map(|_| widths.iter().map(|w| StateVector::empty(*w))).collect();
        ObjectTable {
            n_objects,
            n_predicates: m,
            widths,
            offsets,
            row_len: acc,
            states,
            outputs: vec![None; n_objects * acc],
            probs: vec![T::lit(0.5); n_objects * m],
            uncertainty: vec![T::one(); n_objects * m],
            esp: vec![T::zero(); n_objects],
        }
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn n_predicates(&self) -> usize {
        self.n_predicates
    }

    fn idx(&self, object: usize, predicate: usize) -> usize {
        object * self.n_predicates + predicate
    }

    pub fn state(&self, object: usize, predicate: usize) -> StateVector {
        self.states[self.idx(object, predicate)]
    }

    pub fn prob(&self, object: usize, predicate: usize) -> T {
        self.probs[self.idx(object, predicate)]
    }

    pub fn uncertainty(&self, object: usize, predicate: usize) -> T {
        self.uncertainty[self.idx(object, predicate)]
    }

    pub fn esp(&self, object: usize) -> T {
        self.esp[object]
    }

    pub fn esps(&self) -> &[T] {
        &self.esp
    }

    pub fn leaf_probs(&self, object: usize) -> &[T] {
        let s = object * self.n_predicates;
        &self.probs[s..s + self.n_predicates]
    }

    pub fn output(&self, object: usize, predicate: usize, function: usize) -> Option<T> {
        self.outputs[object * self.row_len + self.offsets[predicate] + function]
    }

    /// Whether any (predicate, function) pair of `object` is still unexecuted.
    pub fn has_unexecuted(&self, object: usize) -> bool {
        (0..self.n_predicates).any(|r| !self.state(object, r).is_full())
    }

    /// Records one function output and recomputes probability, uncertainty and ESP.
    ///
    /// `qualities[j]` is the combine weight of function `j` of the predicate's tag type.
    pub fn record(
        &mut self,
        object: usize,
        predicate: usize,
        function: usize,
        output: T,
        qualities: &[T],
        expr: &Expression,
    ) -> Result<()> {
        let i = self.idx(object, predicate);
        self.states[i] = self.states[i].mark_executed(function)?;
        let base = object * self.row_len + self.offsets[predicate];
        self.outputs[base + function] = Some(output);

        let pairs: Vec<(T, T)> = (0..self.widths[predicate])
            .filter_map(|j| self.outputs[base + j].map(|f| (f, qualities[j])))
            .collect();
        let p = combine_predicate_probability(&pairs, expr.predicates[predicate].op)?;
        self.probs[i] = p;
        self.uncertainty[i] = entropy(p);
        self.esp[object] = esp_value(expr, self.leaf_probs(object));
        Ok(())
    }

    /// Recomputes probabilities, uncertainties and ESPs from the stored outputs.
    pub fn recomputed(&self, qualities: &[Vec<T>], expr: &Expression) -> Result<ObjectTable<T>> {
        let mut t = self.clone();
        for o in 0..self.n_objects {
            for r in 0..self.n_predicates {
                let base = o * self.row_len + self.offsets[r];
                let q = &qualities[expr.predicates[r].tag_type_index];
                let pairs: Vec<(T, T)> =
                    (0..self.widths[r]).filter_map(|j| self.outputs[base + j].map(|f| (f, q[j]))).collect();
                if pairs.is_empty() {
                    continue;
                }
                let p = combine_predicate_probability(&pairs, expr.predicates[r].op)?;
                let i = self.idx(o, r);
                t.probs[i] = p;
                t.uncertainty[i] = entropy(p);
            }
            t.esp[o] = esp_value(expr, t.leaf_probs(o));
        }
        Ok(t)
    }
}
