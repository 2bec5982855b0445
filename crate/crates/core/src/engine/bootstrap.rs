//! Learning planner parameters from the first part of the first epoch when
//! no validation set exists.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::clock::{to_ticks, to_units};
use super::session::Session;
use crate::error::Result;
use crate::model::{Op, StateVector};
use crate::probability::{combine_predicate_probability, entropy};
use crate::scalar::Scalar;
use crate::sim::{learn_decision_table_from, LearnedParams};

/// Runs functions on a random sample of objects within `fraction · epoch`
/// units, then learns mean costs and a decision table from the observed
/// outputs. Qualities keep their current values. The calls are charged to
/// the session and installed as its planner.
pub fn online_bootstrap<T: Scalar>(
    s: &mut Session<T>,
    fraction: f64,
    epoch: f64,
    buckets: usize,
    seed: u64,
) -> Result<LearnedParams> {
    let mut remaining = to_ticks(fraction.max(0.0) * epoch);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..s.n_objects()).collect();
    order.shuffle(&mut rng);

    let schema = s.schema().clone();
    let expr = s.expression().clone();
    let mut cost_obs: BTreeMap<(usize, usize), (u64, usize)> = BTreeMap::new();
    let mut sampled = Vec::new();
    'outer: for &o in &order {
        let mut any = false;
        for r in 0..expr.predicates.len() {
            let tt = expr.predicates[r].tag_type_index;
            let todo: Vec<usize> = s.table().state(o, r).unexecuted().collect();
            for f in todo {
                let c = s.charge(o, r, f);
                if c > remaining {
                    if any {
                        sampled.push(o);
                    }
                    break 'outer;
                }
                s.execute(o, r, f)?;
                remaining -= c;
                any = true;
                let e = cost_obs.entry((tt, f)).or_insert((0, 0));
                e.0 += c;
                e.1 += 1;
            }
        }
        if any {
            sampled.push(o);
        }
    }

    let qualities: Vec<Vec<f64>> =
        s.planner().qualities.iter().map(|r| r.iter().map(|x| x.to_f64_lossy()).collect()).collect();
    let mut params = LearnedParams {
        costs: s.planner().costs.iter().map(|r| r.iter().map(|x| x.to_f64_lossy()).collect()).collect(),
        qualities: qualities.clone(),
        table: s.planner().table.clone(),
    };
    for ((tt, f), (sum, n)) in &cost_obs {
        params.costs[*tt][*f] = to_units(*sum) / *n as f64;
    }

    // Observed output rows per (tag type, tag).
    let mut rows: BTreeMap<(usize, usize), Vec<Vec<Option<f64>>>> = BTreeMap::new();
    for &o in &sampled {
        for (r, p) in expr.predicates.iter().enumerate() {
            let width = schema.tag_types[p.tag_type_index].functions.len();
            let row = (0..width).map(|f| s.table().output(o, r, f).map(|x| x.to_f64_lossy())).collect();
            rows.entry((p.tag_type_index, p.tag_index)).or_default().push(row);
        }
    }
    let n = rows.values().map(|v| v.len()).max().unwrap_or(0);
    let tag_types = expr.tag_types();
    params.table = learn_decision_table_from(&schema, &tag_types, n, params.table.buckets(), seed, |o, tt, tag, st: StateVector| {
        let row = rows.get(&(tt, tag))?.get(o)?;
        let pairs: Option<Vec<(f64, f64)>> = st.executed().map(|f| row[f].map(|x| (x, qualities[tt][f]))).collect();
        combine_predicate_probability(&pairs?, Op::Equal).ok().map(entropy)
    });
    if buckets != params.table.buckets() {
        log::warn!("bootstrap keeps the existing bucket count {}", params.table.buckets());
    }
    s.set_planner(params.planner());
    s.select();
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{GenSpec, Workload};
    use crate::planner::DEFAULT_BUCKETS;
    use crate::sim::LearnedParams;

    fn cold_session() -> Session<f64> {
        let mut g = GenSpec::standard(0.5, 11);
        g.n = 400;
        g.n_validation = 0;
        let w = Workload::generate(&g).unwrap();
        w.session(&LearnedParams::configured(&w.schema, DEFAULT_BUCKETS), 11, 1.0).unwrap()
    }

    #[test]
    fn spends_within_its_share_and_learns() {
        let mut s = cold_session();
        assert!(s.planner().table.is_empty());
        let before = s.clock_ticks();
        let p = online_bootstrap(&mut s, 0.5, 20.0, DEFAULT_BUCKETS, 3).unwrap();
        let spent = s.clock_ticks() - before;
        assert!(spent <= to_ticks(10.0) && spent > to_ticks(9.0), "{spent}");
        assert_eq!(spent, s.exec_total_ticks());
        // Without jitter the observed mean cost is the configured cost.
        for (j, c) in [0.003, 0.01, 0.09, 0.25].iter().enumerate() {
            assert!((p.costs[0][j] - c).abs() < 1e-9, "{j}");
        }
        assert!(!s.planner().table.is_empty());
        assert!(s.is_consistent().unwrap());
    }

    #[test]
    fn zero_share_changes_nothing() {
        let mut s = cold_session();
        let before = s.clock_ticks();
        let p = online_bootstrap(&mut s, 0.0, 5.0, DEFAULT_BUCKETS, 3).unwrap();
        assert_eq!(s.clock_ticks(), before);
        assert!(p.table.is_empty());
    }
}
