//! Epoch drivers: the progressive planner and the three baselines.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::session::{PlanCostModel, Session};
use crate::error::Result;
use crate::planner::{PlanQueue, Triple};
use crate::scalar::Scalar;

/// Work done inside one epoch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Executed {
    pub triples: usize,
    pub objects: BTreeSet<usize>,
}

impl Executed {
    pub(crate) fn add(&mut self, object: usize) {
        self.triples += 1;
        self.objects.insert(object);
    }
}

/// Chooses and runs enrichment work epoch by epoch.
pub trait Driver<T: Scalar> {
    /// Prepares the epoch's plan. Returns its cost in ticks and whether any
    /// work remains.
    fn plan(&mut self, s: &Session<T>, cost: &PlanCostModel) -> (u64, bool);

    /// Runs work whose charges fit in `budget` ticks. When nothing fits, one
    /// call costing at most `hard_limit` may run on its own.
    fn execute(&mut self, s: &mut Session<T>, budget: u64, hard_limit: u64) -> Result<Executed>;

    /// Called after answer re-selection with the objects that were executed
    /// or changed membership.
    fn selected(&mut self, _s: &Session<T>, _touched: &BTreeSet<usize>) {}
}

/// The benefit-driven planner.
#[derive(Clone, Debug)]
pub struct Progressive<T> {
    queue: PlanQueue<T>,
    /// Objects to rebuild at the next refresh; `None` before the first plan.
    pending: Option<BTreeSet<usize>>,
}

impl<T: Scalar> Default for Progressive<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Progressive<T> {
    pub fn new() -> Self {
        Progressive { queue: PlanQueue::new(), pending: None }
    }

    pub fn queue(&self) -> &PlanQueue<T> {
        &self.queue
    }

    /// Brings the queue up to date with the session. Returns triples built.
    pub fn refresh(&mut self, s: &Session<T>) -> usize {
        match self.pending.take() {
            None => {
                let candidates = (0..s.n_objects()).filter(|o| !s.inside()[*o]);
                let (q, n) = s.planner().generate_plan(s.table(), s.expression(), candidates);
                self.queue = q;
                self.pending = Some(BTreeSet::new());
                n
            }
            Some(touched) => {
                self.pending = Some(BTreeSet::new());
                s.planner().update_queue(&mut self.queue, s.table(), s.expression(), &touched, s.inside())
            }
        }
    }

    pub(crate) fn queue_mut(&mut self) -> &mut PlanQueue<T> {
        &mut self.queue
    }

    /// Objects awaiting a rebuild.
    pub fn pending(&self) -> Option<&BTreeSet<usize>> {
        self.pending.as_ref()
    }

    fn run(&mut self, s: &mut Session<T>, t: &Triple<T>, done: &mut Executed) -> Result<()> {
        s.execute(t.object, t.predicate, t.function)?;
        done.add(t.object);
        Ok(())
    }
}

impl<T: Scalar> Driver<T> for Progressive<T> {
    fn plan(&mut self, s: &Session<T>, cost: &PlanCostModel) -> (u64, bool) {
        let built = self.refresh(s);
        (cost.ticks(built), !self.queue.is_empty())
    }

    fn execute(&mut self, s: &mut Session<T>, budget: u64, hard_limit: u64) -> Result<Executed> {
        let mut done = Executed::default();
        let mut remaining = budget;
        let mut aside = Vec::new();
        while let Some(t) = self.queue.pop() {
            if remaining < s.min_charge() {
                aside.push(t);
                break;
            }
            let c = s.charge(t.object, t.predicate, t.function);
            if c <= remaining {
                self.run(s, &t, &mut done)?;
                remaining -= c;
            } else {
                aside.push(t);
            }
        }
        for t in aside {
            self.queue.push(t);
        }
        if done.triples == 0 {
            let first = self
                .queue
                .iter()
                .find(|t| s.charge(t.object, t.predicate, t.function) <= hard_limit)
                .copied();
            if let Some(t) = first {
                self.queue.remove(t.object, t.predicate);
                self.run(s, &t, &mut done)?;
            }
        }
        Ok(done)
    }

    fn selected(&mut self, _s: &Session<T>, touched: &BTreeSet<usize>) {
        if let Some(p) = self.pending.as_mut() {
            p.extend(touched.iter().copied());
        }
    }
}

/// A fixed order of (object, predicate, function) calls.
#[derive(Clone, Debug)]
pub struct Sequential {
    steps: Vec<(usize, usize, usize)>,
    cursor: usize,
    ordered: bool,
}

/// Function indices of a tag type by quality/cost, descending.
pub(crate) fn by_ratio<T: Scalar>(s: &Session<T>, tag_type: usize) -> Vec<usize> {
    let q = &s.planner().qualities[tag_type];
    let c = &s.planner().costs[tag_type];
    let mut f: Vec<usize> = (0..q.len()).collect();
    f.sort_by(|a, b| (q[*b] / c[*b]).total_cmp_s(&(q[*a] / c[*a])).then(c[*a].total_cmp_s(&c[*b])).then(a.cmp(b)));
    f
}

/// (tag type, function) pairs of the query by quality/cost, descending.
pub(crate) fn function_order<T: Scalar>(s: &Session<T>) -> Vec<(usize, usize)> {
    let mut funcs: Vec<(usize, usize)> = Vec::new();
    for tt in s.expression().tag_types() {
        funcs.extend(by_ratio(s, tt).into_iter().map(|f| (tt, f)));
    }
    let p = s.planner();
    funcs.sort_by(|a, b| {
        let ra = p.qualities[a.0][a.1] / p.costs[a.0][a.1];
        let rb = p.qualities[b.0][b.1] / p.costs[b.0][b.1];
        rb.total_cmp_s(&ra).then(a.cmp(b))
    });
    funcs
}

impl Sequential {
    pub fn new(steps: Vec<(usize, usize, usize)>) -> Self {
        Sequential { steps, cursor: 0, ordered: false }
    }

    /// Each function in decreasing quality/cost order, applied to every
    /// object in decreasing initial ESP order.
    pub fn function_major<T: Scalar>(s: &Session<T>) -> Self {
        let mut steps = Vec::new();
        for (tt, f) in function_order(s) {
            for &o in s.initial_order() {
                for (r, pred) in s.expression().predicates.iter().enumerate() {
                    if pred.tag_type_index == tt {
                        steps.push((o, r, f));
                    }
                }
            }
        }
        Sequential::new(steps)
    }

    /// Objects in decreasing initial ESP order, each fully enriched.
    pub fn object_major<T: Scalar>(s: &Session<T>) -> Self {
        let mut steps = Vec::new();
        for &o in s.initial_order() {
            for (r, pred) in s.expression().predicates.iter().enumerate() {
                for f in by_ratio(s, pred.tag_type_index) {
                    steps.push((o, r, f));
                }
            }
        }
        Sequential::new(steps)
    }

    pub fn steps(&self) -> &[(usize, usize, usize)] {
        &self.steps
    }

    fn skip_done<T: Scalar>(&mut self, s: &Session<T>) {
        while let Some(&(o, r, f)) = self.steps.get(self.cursor) {
            if !s.table().state(o, r).is_set(f) {
                break;
            }
            self.cursor += 1;
        }
    }
}

impl<T: Scalar> Driver<T> for Sequential {
    fn plan(&mut self, s: &Session<T>, cost: &PlanCostModel) -> (u64, bool) {
        self.skip_done(s);
        let t0 = if self.ordered { 0 } else { cost.ticks(s.n_objects()) };
        self.ordered = true;
        (t0, self.cursor < self.steps.len())
    }

    fn execute(&mut self, s: &mut Session<T>, budget: u64, hard_limit: u64) -> Result<Executed> {
        let mut done = Executed::default();
        let mut remaining = budget;
        loop {
            self.skip_done(s);
            let Some(&(o, r, f)) = self.steps.get(self.cursor) else { break };
            let c = s.charge(o, r, f);
            let fits = c <= remaining || (done.triples == 0 && c <= hard_limit);
            if !fits {
                break;
            }
            s.execute(o, r, f)?;
            done.add(o);
            remaining = remaining.saturating_sub(c);
            self.cursor += 1;
        }
        Ok(done)
    }
}

/// Uniformly random unexecuted (object, predicate, function) calls.
#[derive(Clone, Debug)]
pub struct RandomTriples {
    pool: Vec<(usize, usize, usize)>,
    next: Option<(usize, usize, usize)>,
    rng: ChaCha8Rng,
}

impl RandomTriples {
    pub fn new<T: Scalar>(s: &Session<T>, seed: u64) -> Self {
        let mut pool = Vec::new();
        for o in 0..s.n_objects() {
            for r in 0..s.n_predicates() {
                pool.extend(s.table().state(o, r).unexecuted().map(|f| (o, r, f)));
            }
        }
        RandomTriples { pool, next: None, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn draw(&mut self) -> Option<(usize, usize, usize)> {
        if let Some(t) = self.next.take() {
            return Some(t);
        }
        if self.pool.is_empty() {
            return None;
        }
        let i = self.rng.random_range(0..self.pool.len());
        Some(self.pool.swap_remove(i))
    }
}

impl<T: Scalar> Driver<T> for RandomTriples {
    fn plan(&mut self, _s: &Session<T>, cost: &PlanCostModel) -> (u64, bool) {
        (cost.ticks(0), self.next.is_some() || !self.pool.is_empty())
    }

    fn execute(&mut self, s: &mut Session<T>, budget: u64, hard_limit: u64) -> Result<Executed> {
        let mut done = Executed::default();
        let mut remaining = budget;
        while let Some((o, r, f)) = self.draw() {
            let c = s.charge(o, r, f);
            let fits = c <= remaining || (done.triples == 0 && c <= hard_limit);
            if !fits {
                self.next = Some((o, r, f));
                break;
            }
            s.execute(o, r, f)?;
            done.add(o);
            remaining = remaining.saturating_sub(c);
        }
        Ok(done)
    }
}
