//! Learning of costs, qualities, seed functions and decision tables from
//! recorded function outputs.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Simulator;
use crate::model::{EnrichmentFunctionSpec, Object, Op, Schema, StateVector};
use crate::planner::{BucketEntry, DecisionTable, Planner};
use crate::probability::{combine_predicate_probability, entropy};
use crate::scalar::Scalar;

/// Orders sampled when a tag type has more functions than this.
const MAX_EXHAUSTIVE_FUNCTIONS: usize = 4;
const SAMPLED_ORDERS: usize = 24;

/// Index of the function with the highest quality/cost ratio; ties go to the
/// cheaper function, then the lower index.
pub fn seed_index(qualities: &[f64], costs: &[f64]) -> usize {
    (0..qualities.len())
        .min_by(|&a, &b| {
            let ra = qualities[a] / costs[a];
            let rb = qualities[b] / costs[b];
            rb.total_cmp(&ra).then(costs[a].total_cmp(&costs[b])).then(a.cmp(&b))
        })
        .expect("tag type has at least one function")
}

pub fn seed_function(functions: &[EnrichmentFunctionSpec]) -> &EnrichmentFunctionSpec {
    let q: Vec<f64> = functions.iter().map(|f| f.quality).collect();
    let c: Vec<f64> = functions.iter().map(|f| f.cost).collect();
    &functions[seed_index(&q, &c)]
}

/// Area under the ROC curve by the trapezoid rule; tied scores form one
/// diagonal segment. Returns 0.5 when one class is absent.
pub fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let pos = labels.iter().filter(|l| **l).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return 0.5;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp, mut area) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < idx.len() {
        let (tp0, fp0) = (tp, fp);
        let s = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == s {
            if labels[idx[i]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        area += (fp - fp0) / neg * (tp + tp0) / (2.0 * pos);
    }
    area
}

/// Outputs and costs of every function on every (object, tag) of its tag type.
#[derive(Clone, Debug)]
pub struct ValidationSet {
    tag_counts: Vec<usize>,
    n_objects: usize,
    /// `[tag type][function][object * tags + tag]`
    outputs: Vec<Vec<Vec<f64>>>,
    costs: Vec<Vec<Vec<f64>>>,
    labels: Vec<Vec<bool>>,
}

impl ValidationSet {
    /// Runs every function of every tag type on the labelled objects.
    pub fn record(schema: &Schema, objects: &[Object], sim: &Simulator) -> Self {
        let mut outputs = Vec::new();
        let mut costs = Vec::new();
        let mut labels = Vec::new();
        for tt in &schema.tag_types {
            labels.push(
                objects
                    .iter()
                    .flat_map(|o| tt.tags.iter().map(move |t| o.truth.get(&tt.id) == Some(t)))
                    .collect(),
            );
            let mut outs = Vec::new();
            let mut cs = Vec::new();
            for f in &tt.functions {
                let (o, c): (Vec<f64>, Vec<f64>) = objects
                    .iter()
                    .flat_map(|o| tt.tags.iter().enumerate().map(move |(k, t)| sim.evaluate(f, o, t, tt.prior(k))))
                    .map(|e| (e.prob, e.cost))
                    .unzip();
                outs.push(o);
                cs.push(c);
            }
            outputs.push(outs);
            costs.push(cs);
        }
        ValidationSet {
            tag_counts: schema.tag_types.iter().map(|t| t.tags.len()).collect(),
            n_objects: objects.len(),
            outputs,
            costs,
            labels,
        }
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn output(&self, tag_type: usize, function: usize, object: usize, tag: usize) -> f64 {
        self.outputs[tag_type][function][object * self.tag_counts[tag_type] + tag]
    }

    /// Mean charged cost.
    pub fn learn_cost(&self, tag_type: usize, function: usize) -> f64 {
        let c = &self.costs[tag_type][function];
        if c.is_empty() {
            return f64::NAN;
        }
        c.iter().sum::<f64>() / c.len() as f64
    }

    /// ROC area of the outputs, computed per tag and averaged over the tags
    /// that have both positive and negative objects. Outputs for different
    /// tags are calibrated to different base rates, so they are not pooled.
    pub fn learn_quality_auc(&self, tag_type: usize, function: usize) -> f64 {
        let k = self.tag_counts[tag_type];
        let out = &self.outputs[tag_type][function];
        let lab = &self.labels[tag_type];
        let mut areas = Vec::new();
        for tag in 0..k {
            let s: Vec<f64> = out.iter().skip(tag).step_by(k).copied().collect();
            let l: Vec<bool> = lab.iter().skip(tag).step_by(k).copied().collect();
            if l.iter().any(|x| *x) && l.iter().any(|x| !*x) {
                areas.push(auc(&s, &l));
            }
        }
        if areas.is_empty() {
            return 0.5;
        }
        areas.iter().sum::<f64>() / areas.len() as f64
    }

    /// Uncertainty of the quality-weighted combination of the outputs in `state`.
    pub fn uncertainty(&self, qualities: &[f64], tag_type: usize, object: usize, tag: usize, state: StateVector) -> Option<f64> {
        let pairs: Vec<(f64, f64)> =
            state.executed().map(|f| (self.output(tag_type, f, object, tag), qualities[f])).collect();
        combine_predicate_probability(&pairs, Op::Equal).ok().map(entropy)
    }
}

/// Learns a decision table from validation outputs, for the listed tag types.
/// `qualities[t][j]` weights function `j` of tag type `t`.
pub fn learn_decision_table(
    schema: &Schema,
    validation: &ValidationSet,
    qualities: &[Vec<f64>],
    tag_types: &[usize],
    buckets: usize,
    seed: u64,
) -> DecisionTable {
    learn_decision_table_from(schema, tag_types, validation.n_objects(), buckets, seed, |o, tt, tag, s| {
        validation.uncertainty(&qualities[tt], tt, o, tag, s)
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn execution_orders(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    if n <= MAX_EXHAUSTIVE_FUNCTIONS {
        return permutations(n);
    }
    (0..SAMPLED_ORDERS)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            p
        })
        .collect()
}

/// Learns a decision table from an uncertainty oracle
/// `h(object, tag_type, tag, state)`, which returns `None` for unobserved states.
///
/// Functions are replayed on each object in several orders. Every visited
/// (state, next function) pair contributes the observed uncertainty change
/// to the bucket of the state's uncertainty; each bucket keeps the function
/// with the largest mean reduction.
pub fn learn_decision_table_from(
    schema: &Schema,
    tag_types: &[usize],
    n_objects: usize,
    buckets: usize,
    seed: u64,
    h: impl Fn(usize, usize, usize, StateVector) -> Option<f64>,
) -> DecisionTable {
    let mut table = DecisionTable::new(buckets);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &tt in tag_types {
        let t = &schema.tag_types[tt];
        let nf = t.functions.len();
        let orders = execution_orders(nf, &mut rng);
        // (tag, state, bucket) -> per function (sum, count)
        let mut acc: BTreeMap<(usize, StateVector, usize), Vec<(f64, usize)>> = BTreeMap::new();
        for tag in 0..t.tags.len() {
            for o in 0..n_objects {
                let mut seen = BTreeSet::new();
                for order in &orders {
                    let mut state = StateVector::empty(nf);
                    for k in 0..nf.saturating_sub(1) {
                        state = state.mark_executed(order[k]).expect("order indexes functions");
                        let f = order[k + 1];
                        if !seen.insert((state, f)) {
                            continue;
                        }
                        let (Some(h0), Some(h1)) = (h(o, tt, tag, state), h(o, tt, tag, state.mark_executed(f).unwrap()))
                        else {
                            continue;
                        };
                        let e = acc.entry((tag, state, table.bucket_of(h0))).or_insert_with(|| vec![(0.0, 0); nf]);
                        e[f].0 += h1 - h0;
                        e[f].1 += 1;
                    }
                }
            }
        }
        for ((tag, state, bucket), stats) in acc {
            let best = stats
                .iter()
                .enumerate()
                .filter(|(_, (_, n))| *n > 0)
                .map(|(f, (s, n))| (f, s / *n as f64, *n))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            if let Some((next, mean, support)) = best {
                table
                    .insert(tt, tag, state, bucket, BucketEntry { next, delta: mean.min(0.0), support })
                    .expect("learned entry names an unexecuted function");
            }
        }
    }
    table
}

/// Costs, qualities and decision table the planner works from.
#[derive(Clone, Debug)]
pub struct LearnedParams {
    /// `[tag type][function]`
    pub costs: Vec<Vec<f64>>,
    pub qualities: Vec<Vec<f64>>,
    pub table: DecisionTable,
}

impl LearnedParams {
    /// Configured costs and qualities with an empty table.
    pub fn configured(schema: &Schema, buckets: usize) -> Self {
        LearnedParams {
            costs: schema.tag_types.iter().map(|t| t.functions.iter().map(|f| f.cost).collect()).collect(),
            qualities: schema.tag_types.iter().map(|t| t.functions.iter().map(|f| f.quality).collect()).collect(),
            table: DecisionTable::new(buckets),
        }
    }

    /// Mean costs, ROC-area qualities and a decision table learned from a
    /// validation set for the listed tag types; other tag types keep their
    /// configured values.
    pub fn offline(schema: &Schema, validation: &ValidationSet, tag_types: &[usize], buckets: usize, seed: u64) -> Self {
        let mut p = LearnedParams::configured(schema, buckets);
        if validation.n_objects() == 0 {
            return p;
        }
        for &tt in tag_types {
            for j in 0..schema.tag_types[tt].functions.len() {
                p.costs[tt][j] = validation.learn_cost(tt, j);
                p.qualities[tt][j] = validation.learn_quality_auc(tt, j);
            }
        }
        p.table = learn_decision_table(schema, validation, &p.qualities, tag_types, buckets, seed);
        p
    }

    pub fn planner<T: Scalar>(&self) -> Planner<T> {
        let conv = |v: &Vec<Vec<f64>>| v.iter().map(|r| r.iter().map(|x| T::lit(*x)).collect()).collect();
        Planner::new(self.table.clone(), conv(&self.costs), conv(&self.qualities))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ScoreModelKind, TagType};

    fn f(id: &str, q: f64, c: f64) -> EnrichmentFunctionSpec {
        EnrichmentFunctionSpec {
            id: id.into(),
            tag_type: "T".into(),
            quality: q,
            cost: c,
            model: ScoreModelKind::Binormal,
            cost_jitter: 0.0,
        }
    }

    fn schema(n: usize) -> Schema {
        Schema::new(vec![TagType {
            id: "T".into(),
            tags: vec!["a".into()],
            functions: (0..n).map(|j| f(&format!("f{j}"), 0.7, 1.0)).collect(),
            priors: None,
        }])
        .unwrap()
    }

    #[test]
    fn seed_rules() {
        assert_eq!(seed_function(&[f("a", 0.6, 1.0), f("b", 0.9, 10.0)]).id, "a");
        assert_eq!(seed_function(&[f("a", 0.6, 1.0)]).id, "a");
        assert_eq!(seed_function(&[f("a", 0.8, 2.0), f("b", 0.4, 1.0)]).id, "b");
    }

    #[test]
    fn auc_cases() {
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]), 1.0);
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[true, true, false, false]), 0.0);
        assert_eq!(auc(&[0.5; 4], &[true, false, true, false]), 0.5);
        assert!((auc(&[0.9, 0.7, 0.8, 0.1], &[true, true, false, false]) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn two_function_oracle() {
        // Function 1 halves uncertainty, function 0 leaves it unchanged.
        let s = schema(2);
        let base = |o: usize| 0.05 + 0.9 * (o as f64) / 99.0;
        let t = learn_decision_table_from(&s, &[0], 100, 10, 0, |o, _, _, st| {
            Some(if st.is_set(1) { base(o) / 2.0 } else { base(o) })
        });
        let st = StateVector::from_bits(&[true, false]);
        let row = t.row(0, 0, st).unwrap();
        for (b, e) in row.iter().enumerate() {
            let e = e.unwrap();
            assert_eq!(e.next, 1);
            let (lo, hi) = t.bucket_bounds(b);
            assert!(-e.delta >= lo / 2.0 - 1e-9 && -e.delta <= hi / 2.0 + 1e-9);
        }
        assert!(t.row(0, 0, StateVector::from_bits(&[true, true])).is_none());
        assert!(t.entries().all(|e| e.4.delta <= 0.0));
    }

    #[test]
    fn many_functions_use_sampled_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(execution_orders(4, &mut rng).len(), 24);
        assert_eq!(execution_orders(3, &mut rng).len(), 6);
        let o = execution_orders(6, &mut rng);
        assert_eq!(o.len(), SAMPLED_ORDERS);
        assert!(o.iter().all(|p| p.iter().collect::<BTreeSet<_>>().len() == 6));
    }
}
