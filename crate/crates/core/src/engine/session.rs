//! Enrichment state shared by the progressive engine and the baselines:
//! objects, function outputs, answer set, logical clock and timeline.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::clock::{to_ticks, to_units};
use crate::answer::{select_answer_set, Alpha, AnswerSelection};
use crate::error::{Error, Result};
use crate::harness::metrics::true_f_measures;
use crate::model::{Expression, Object, Schema};
use crate::planner::Planner;
use crate::scalar::Scalar;
use crate::sim::{seed_index, Simulator};
use crate::table::ObjectTable;

/// Logical cost of building or refreshing a plan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanCostModel {
    /// Fixed cost per plan refresh.
    pub base: f64,
    /// Cost per triple built or ordered.
    pub per_triple: f64,
}

impl Default for PlanCostModel {
    fn default() -> Self {
        PlanCostModel { base: 1e-4, per_triple: 1e-6 }
    }
}

impl PlanCostModel {
    pub fn ticks(&self, triples: usize) -> u64 {
        to_ticks(self.base + self.per_triple * triples as f64)
    }
}

/// State after one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochReport<T> {
    /// 0 for the point right after initialization.
    pub epoch: usize,
    pub clock_ticks: u64,
    pub t0_ticks: u64,
    pub triples_executed: usize,
    pub exec_ticks: u64,
    /// Block loads charged this epoch.
    pub io_ticks: u64,
    pub expected_f: T,
    /// Object indices in the answer.
    pub answer: Vec<usize>,
    pub precision: f64,
    pub recall: f64,
    pub true_f: f64,
}

impl<T: Scalar> EpochReport<T> {
    pub fn clock(&self) -> f64 {
        to_units(self.clock_ticks)
    }

    pub fn t0(&self) -> f64 {
        to_units(self.t0_ticks)
    }
}

/// Per-query enrichment state with its logical clock.
#[derive(Clone, Debug)]
pub struct Session<T> {
    pub(crate) schema: Schema,
    pub(crate) expr: Expression,
    pub(crate) objects: Vec<Object>,
    pub(crate) sim: Simulator,
    pub(crate) planner: Planner<T>,
    pub(crate) alpha: Alpha<T>,
    pub(crate) table: ObjectTable<T>,
    pub(crate) answer: AnswerSelection<T, usize>,
    pub(crate) inside: Vec<bool>,
    pub(crate) truth: Vec<bool>,
    pub(crate) clock: u64,
    pub(crate) init_ticks: u64,
    pub(crate) t0_total: u64,
    pub(crate) exec_total: u64,
    pub(crate) io_total: u64,
    pub(crate) epoch: usize,
    pub(crate) timeline: Vec<EpochReport<T>>,
    pub(crate) initial_order: Vec<usize>,
    pub(crate) min_charge: u64,
}

impl<T: Scalar> Session<T> {
    /// Runs the seed function of each predicate's tag type on every object,
    /// charging its cost, and selects the initial answer.
    ///
    /// `objects` must already satisfy the precise conditions.
    pub fn initialize(
        schema: Schema,
        expr: Expression,
        objects: Vec<Object>,
        sim: Simulator,
        planner: Planner<T>,
        alpha: Alpha<T>,
    ) -> Result<Self> {
        for tt in expr.tag_types() {
            if schema.tag_types[tt].functions.is_empty() {
                return Err(Error::NoFunctions(schema.tag_types[tt].id.clone()));
            }
        }
        let n = objects.len();
        let truth = objects
            .iter()
            .map(|o| expr.holds(|tt| o.truth.get(tt).cloned()))
            .collect();
        let min_charge = expr
            .predicates
            .iter()
            .flat_map(|p| schema.tag_types[p.tag_type_index].functions.iter())
            .map(|f| to_ticks(f.cost * (1.0 - f.cost_jitter)))
            .min()
            .unwrap_or(0);
        let table = ObjectTable::new(n, &expr, &schema);
        let mut s = Session {
            answer: select_answer_set(&[], alpha),
            inside: vec![false; n],
            table,
            schema,
            expr,
            objects,
            sim,
            planner,
            alpha,
            truth,
            clock: 0,
            init_ticks: 0,
            t0_total: 0,
            exec_total: 0,
            io_total: 0,
            epoch: 0,
            timeline: Vec::new(),
            initial_order: Vec::new(),
            min_charge,
        };
        for r in 0..s.expr.predicates.len() {
            let tt = s.expr.predicates[r].tag_type_index;
            let q: Vec<f64> = s.planner.qualities[tt].iter().map(|x| x.to_f64_lossy()).collect();
            let c: Vec<f64> = s.planner.costs[tt].iter().map(|x| x.to_f64_lossy()).collect();
            let seed = seed_index(&q, &c);
            for o in 0..n {
                let cost = s.charge(o, r, seed);
                let out = s.output(o, r, seed, None);
                s.record(o, r, seed, out)?;
                s.init_ticks += cost;
            }
        }
        s.clock = s.init_ticks;
        s.select();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| s.table.esp(*b).total_cmp_s(&s.table.esp(*a)).then(a.cmp(b)));
        s.initial_order = order;
        let report = s.report(0, 0, 0);
        s.timeline.push(report);
        Ok(s)
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_predicates(&self) -> usize {
        self.expr.predicates.len()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    pub fn objects(&self) -> &[Object] {
        &self.objects
    }

    pub fn planner(&self) -> &Planner<T> {
        &self.planner
    }

    pub fn set_planner(&mut self, planner: Planner<T>) {
        self.planner = planner;
    }

    pub fn table(&self) -> &ObjectTable<T> {
        &self.table
    }

    pub fn answer(&self) -> &AnswerSelection<T, usize> {
        &self.answer
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    pub fn truth(&self) -> &[bool] {
        &self.truth
    }

    pub fn alpha(&self) -> Alpha<T> {
        self.alpha
    }

    pub fn clock_ticks(&self) -> u64 {
        self.clock
    }

    pub fn init_ticks(&self) -> u64 {
        self.init_ticks
    }

    pub fn t0_total_ticks(&self) -> u64 {
        self.t0_total
    }

    pub fn exec_total_ticks(&self) -> u64 {
        self.exec_total
    }

    pub fn io_total_ticks(&self) -> u64 {
        self.io_total
    }

    pub fn timeline(&self) -> &[EpochReport<T>] {
        &self.timeline
    }

    /// Object indices by initial ESP, descending (ties by index).
    pub fn initial_order(&self) -> &[usize] {
        &self.initial_order
    }

    /// Lower bound on the charge of any function call.
    pub fn min_charge(&self) -> u64 {
        self.min_charge
    }

    /// Ticks a call of function `function` on (object, predicate) will cost.
    pub fn charge(&self, object: usize, predicate: usize, function: usize) -> u64 {
        let p = &self.expr.predicates[predicate];
        let spec = &self.schema.tag_types[p.tag_type_index].functions[function];
        to_ticks(self.sim.charge(spec, &self.objects[object], &p.tag))
    }

    fn output(&self, object: usize, predicate: usize, function: usize, payload: Option<&Object>) -> T {
        let p = &self.expr.predicates[predicate];
        let tt = &self.schema.tag_types[p.tag_type_index];
        let spec = &tt.functions[function];
        T::lit(self.sim.probability(spec, payload.unwrap_or(&self.objects[object]), &p.tag, tt.prior(p.tag_index)))
    }

    fn record(&mut self, object: usize, predicate: usize, function: usize, out: T) -> Result<()> {
        let tt = self.expr.predicates[predicate].tag_type_index;
        self.table.record(object, predicate, function, out, &self.planner.qualities[tt], &self.expr)
    }

    /// Runs one function, updating state and clock. Returns the ticks charged.
    pub fn execute(&mut self, object: usize, predicate: usize, function: usize) -> Result<u64> {
        self.execute_on(object, predicate, function, None)
    }

    /// Like [`Session::execute`], reading the object from `payload` when given.
    pub fn execute_on(&mut self, object: usize, predicate: usize, function: usize, payload: Option<&Object>) -> Result<u64> {
        if self.table.state(object, predicate).is_set(function) {
            return Err(Error::Config(format!(
                "function {function} already executed on object {object}, predicate {predicate}"
            )));
        }
        let cost = self.charge(object, predicate, function);
        let out = self.output(object, predicate, function, payload);
        self.record(object, predicate, function, out)?;
        self.clock += cost;
        self.exec_total += cost;
        Ok(cost)
    }

    /// Charges plan-generation time.
    pub fn charge_plan(&mut self, ticks: u64) {
        self.clock += ticks;
        self.t0_total += ticks;
    }

    /// Charges block I/O.
    pub fn charge_io(&mut self, ticks: u64) {
        self.clock += ticks;
        self.io_total += ticks;
    }

    /// Charges initialization work beyond the seed functions.
    pub fn charge_init(&mut self, ticks: u64) {
        self.clock += ticks;
        self.init_ticks += ticks;
        if self.timeline.len() == 1 {
            self.timeline[0].clock_ticks = self.clock;
        }
    }

    /// Re-selects the answer; returns objects whose membership changed.
    pub fn select(&mut self) -> BTreeSet<usize> {
        let esps: Vec<(usize, T)> = self.table.esps().iter().copied().enumerate().collect();
        self.answer = select_answer_set(&esps, self.alpha);
        let mut inside = vec![false; self.objects.len()];
        for o in &self.answer.answer_ids {
            inside[*o] = true;
        }
        let changed = (0..inside.len()).filter(|o| inside[*o] != self.inside[*o]).collect();
        self.inside = inside;
        changed
    }

    pub(crate) fn report(&self, epoch: usize, t0: u64, triples: usize) -> EpochReport<T> {
        let m = true_f_measures(&self.answer.answer_ids, &self.truth, self.alpha.value().to_f64_lossy());
        let exec_before: u64 = self.timeline.iter().map(|r| r.exec_ticks).sum();
        let io_before: u64 = self.timeline.iter().map(|r| r.io_ticks).sum();
        EpochReport {
            epoch,
            clock_ticks: self.clock,
            t0_ticks: t0,
            triples_executed: triples,
            exec_ticks: self.exec_total - exec_before.min(self.exec_total),
            io_ticks: self.io_total - io_before.min(self.io_total),
            expected_f: self.answer.expected_f,
            answer: self.answer.answer_ids.clone(),
            precision: m.precision,
            recall: m.recall,
            true_f: m.f_alpha,
        }
    }

    pub(crate) fn push_report(&mut self, t0: u64, triples: usize) -> EpochReport<T> {
        self.epoch += 1;
        let r = self.report(self.epoch, t0, triples);
        self.timeline.push(r.clone());
        r
    }

    /// Whether cached uncertainties and ESPs equal a recomputation from the
    /// stored outputs.
    pub fn is_consistent(&self) -> Result<bool> {
        Ok(self.table.recomputed(&self.planner.qualities, &self.expr)? == self.table)
    }

    /// Elapsed cost since the end of initialization.
    pub fn elapsed(&self) -> f64 {
        to_units(self.clock - self.init_ticks)
    }
}
