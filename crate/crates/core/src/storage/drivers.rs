//! Epoch drivers for data that lives in blocks on disk.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::blocks::{enumerate_disk_plans, partition_blocks, BlockBenefits, BlockQueues, DiskPlan, Eviction, Layout};
use super::store::BlockStore;
use crate::engine::drivers::{by_ratio, function_order};
use crate::engine::{to_ticks, Driver, Executed, PlanCostModel, Progressive, Session};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskConfig {
    /// Objects per block.
    pub block_size: usize,
    /// Blocks that fit in memory at once.
    pub capacity: usize,
    /// Cost units to load one block.
    pub load_cost: f64,
}

impl DiskConfig {
    /// Twenty blocks, four of them in memory, loads at 0.002 units per object.
    pub fn for_objects(n: usize) -> Self {
        let block_size = n.div_ceil(20).max(1);
        DiskConfig { block_size, capacity: 4, load_cost: 0.002 * block_size as f64 }
    }
}

/// Blocks, their residency and payloads, shared by all disk drivers.
#[derive(Debug)]
pub struct Disk<T> {
    pub layout: Layout,
    pub queues: BlockQueues,
    pub store: BlockStore,
    pub benefits: BlockBenefits<T>,
    eviction: Eviction,
}

impl<T: Scalar> Disk<T> {
    /// Cuts the session's objects into blocks by initial ESP, spills them
    /// to `dir` and charges one load per block to initialization. Every
    /// block starts on disk.
    pub fn attach(s: &mut Session<T>, cfg: &DiskConfig, dir: &Path, eviction: Eviction) -> Result<Self> {
        let layout = Layout::new(partition_blocks(s.initial_order(), cfg.block_size)?, s.n_objects())?;
        let store = BlockStore::create(dir, &layout.blocks, s.objects())?;
        let load = to_ticks(cfg.load_cost);
        s.charge_init(load * layout.len() as u64);
        let queues = BlockQueues::new(layout.len(), cfg.capacity, load)?;
        let candidates = (0..s.n_objects()).filter(|o| !s.inside()[*o]);
        let (q, _) = s.planner().generate_plan(s.table(), s.expression(), candidates);
        let benefits = BlockBenefits::rebuild(&layout, &q);
        Ok(Disk { layout, queues, store, benefits, eviction })
    }

    /// Block ids by benefit, descending, ties by id.
    pub fn blocks_by_benefit(&self) -> Vec<usize> {
        let mut b: Vec<usize> = (0..self.layout.len()).collect();
        b.sort_by(|x, y| self.benefits.get(*y).total_cmp_s(&self.benefits.get(*x)).then(x.cmp(y)));
        b
    }

    fn load_ticks(&self, block: usize) -> u64 {
        if self.queues.is_resident(block) {
            0
        } else {
            self.queues.load_cost()
        }
    }

    /// Loads `block`, evicting one other block when memory is full.
    fn ensure_resident(&mut self, block: usize, s: &mut Session<T>, keep: &[usize]) -> Result<()> {
        if self.queues.is_resident(block) {
            return Ok(());
        }
        if let Some(v) = self.queues.victim(self.eviction, &self.benefits, keep) {
            self.queues.flush(v);
            self.store.flush(v);
        }
        self.queues.load(block)?;
        self.store.load(block)?;
        s.charge_io(self.queues.load_cost());
        Ok(())
    }

    /// Runs one call on a resident object, reading it from its block.
    fn run(&mut self, s: &mut Session<T>, object: usize, predicate: usize, function: usize) -> Result<u64> {
        let b = self.layout.block_of(object);
        if !self.queues.is_resident(b) {
            return Err(Error::Config(format!("object {object} is in block {b}, which is on disk")));
        }
        let payload = self
            .store
            .payload(b, self.layout.slot(object))
            .ok_or_else(|| Error::Config(format!("block {b} is resident but not materialized")))?;
        s.execute_on(object, predicate, function, Some(payload))
    }
}

/// Flushes and loads the plan's blocks and charges the loads.
pub fn apply_disk_plan<T: Scalar>(plan: &DiskPlan<T>, disk: &mut Disk<T>, s: &mut Session<T>) -> Result<()> {
    disk.queues.apply(plan)?;
    for b in &plan.flushes {
        disk.store.flush(*b);
    }
    for b in &plan.loads {
        disk.store.load(*b)?;
    }
    s.charge_io(plan.load_ticks);
    Ok(())
}

/// The benefit-driven planner choosing block swaps each epoch.
#[derive(Debug)]
pub struct DiskProgressive<T> {
    inner: Progressive<T>,
    pub disk: Disk<T>,
}

impl<T: Scalar> DiskProgressive<T> {
    pub fn new(s: &mut Session<T>, cfg: &DiskConfig, dir: &Path) -> Result<Self> {
        Ok(DiskProgressive { inner: Progressive::new(), disk: Disk::attach(s, cfg, dir, Eviction::LeastBenefit)? })
    }

    pub fn progressive(&self) -> &Progressive<T> {
        &self.inner
    }
}

impl<T: Scalar> Driver<T> for DiskProgressive<T> {
    fn plan(&mut self, s: &Session<T>, cost: &PlanCostModel) -> (u64, bool) {
        let touched = self.inner.pending().cloned();
        let built = self.inner.refresh(s);
        match touched {
            None => self.disk.benefits = BlockBenefits::rebuild(&self.disk.layout, self.inner.queue()),
            Some(t) => {
                self.disk.benefits.update(&self.disk.layout, self.inner.queue(), t);
            }
        }
        (cost.ticks(built), !self.inner.queue().is_empty())
    }

    fn execute(&mut self, s: &mut Session<T>, budget: u64, hard_limit: u64) -> Result<Executed> {
        let mut done = Executed::default();
        let d = &self.disk;
        let plan = enumerate_disk_plans(&d.queues, &d.benefits, &d.layout, self.inner.queue(), budget, |t| {
            s.charge(t.object, t.predicate, t.function)
        });
        if !plan.triples.is_empty() {
            apply_disk_plan(&plan, &mut self.disk, s)?;
            for t in &plan.triples {
                self.inner.queue_mut().remove(t.object, t.predicate);
                self.disk.run(s, t.object, t.predicate, t.function)?;
                done.add(t.object);
            }
            return Ok(done);
        }
        let first = self
            .inner
            .queue()
            .iter()
            .find(|t| {
                let c = s.charge(t.object, t.predicate, t.function);
                c.saturating_add(self.disk.load_ticks(self.disk.layout.block_of(t.object))) <= hard_limit
            })
            .copied();
        if let Some(t) = first {
            self.disk.ensure_resident(self.disk.layout.block_of(t.object), s, &[])?;
            self.inner.queue_mut().remove(t.object, t.predicate);
            self.disk.run(s, t.object, t.predicate, t.function)?;
            done.add(t.object);
        }
        Ok(done)
    }

    fn selected(&mut self, s: &Session<T>, touched: &std::collections::BTreeSet<usize>) {
        self.inner.selected(s, touched);
    }
}

/// A fixed order of calls, loading blocks on demand and evicting the block
/// loaded longest ago.
#[derive(Debug)]
pub struct DiskSequential<T> {
    steps: Vec<(usize, usize, usize)>,
    cursor: usize,
    ordered: bool,
    pub disk: Disk<T>,
}

impl<T: Scalar> DiskSequential<T> {
    /// Each function in decreasing quality/cost order, swept over the blocks
    /// in decreasing benefit order.
    pub fn function_major(s: &mut Session<T>, cfg: &DiskConfig, dir: &Path) -> Result<Self> {
        let disk = Disk::attach(s, cfg, dir, Eviction::OldestLoaded)?;
        let order = disk.blocks_by_benefit();
        let mut steps = Vec::new();
        for (tt, f) in function_order(s) {
            for &b in &order {
                for &o in &disk.layout.blocks[b].objects {
                    for (r, p) in s.expression().predicates.iter().enumerate() {
                        if p.tag_type_index == tt {
                            steps.push((o, r, f));
                        }
                    }
                }
            }
        }
        Ok(DiskSequential { steps, cursor: 0, ordered: false, disk })
    }

    /// Loads memory-sized groups of blocks in decreasing benefit order and
    /// fully enriches their objects by decreasing initial ESP.
    pub fn object_major(s: &mut Session<T>, cfg: &DiskConfig, dir: &Path) -> Result<Self> {
        let disk = Disk::attach(s, cfg, dir, Eviction::OldestLoaded)?;
        let mut rank = vec![0; s.n_objects()];
        for (i, &o) in s.initial_order().iter().enumerate() {
            rank[o] = i;
        }
        let mut steps = Vec::new();
        for group in disk.blocks_by_benefit().chunks(cfg.capacity.max(1)) {
            let mut objects: Vec<usize> = group.iter().flat_map(|b| disk.layout.blocks[*b].objects.iter().copied()).collect();
            objects.sort_by_key(|o| rank[*o]);
            for o in objects {
                for (r, p) in s.expression().predicates.iter().enumerate() {
                    for f in by_ratio(s, p.tag_type_index) {
                        steps.push((o, r, f));
                    }
                }
            }
        }
        Ok(DiskSequential { steps, cursor: 0, ordered: false, disk })
    }

    pub fn steps(&self) -> &[(usize, usize, usize)] {
        &self.steps
    }

    fn skip_done(&mut self, s: &Session<T>) {
        while let Some(&(o, r, f)) = self.steps.get(self.cursor) {
            if !s.table().state(o, r).is_set(f) {
                break;
            }
            self.cursor += 1;
        }
    }
}

impl<T: Scalar> Driver<T> for DiskSequential<T> {
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
            let b = self.disk.layout.block_of(o);
            let c = s.charge(o, r, f) + self.disk.load_ticks(b);
            let fits = c <= remaining || (done.triples == 0 && c <= hard_limit);
            if !fits {
                break;
            }
            self.disk.ensure_resident(b, s, &[])?;
            self.disk.run(s, o, r, f)?;
            done.add(o);
            remaining = remaining.saturating_sub(c);
            self.cursor += 1;
        }
        Ok(done)
    }
}

/// Each epoch picks random blocks, loads the missing ones in place of the
/// least beneficial resident blocks, then runs random calls on them.
#[derive(Debug)]
pub struct DiskRandom<T> {
    /// Unexecuted calls per block.
    pools: Vec<Vec<(usize, usize, usize)>>,
    rng: ChaCha8Rng,
    pub disk: Disk<T>,
}

impl<T: Scalar> DiskRandom<T> {
    pub fn new(s: &mut Session<T>, cfg: &DiskConfig, dir: &Path, seed: u64) -> Result<Self> {
        let disk = Disk::attach(s, cfg, dir, Eviction::LeastBenefit)?;
        let pools = disk
            .layout
            .blocks
            .iter()
            .map(|b| {
                let mut pool = Vec::new();
                for &o in &b.objects {
                    for r in 0..s.n_predicates() {
                        pool.extend(s.table().state(o, r).unexecuted().map(|f| (o, r, f)));
                    }
                }
                pool
            })
            .collect();
        Ok(DiskRandom { pools, rng: ChaCha8Rng::seed_from_u64(seed), disk })
    }

    /// Uniform draw over the calls of `blocks`: (block, position).
    fn draw(&mut self, blocks: &[usize]) -> Option<(usize, usize)> {
        let total: usize = blocks.iter().map(|b| self.pools[*b].len()).sum();
        if total == 0 {
            return None;
        }
        let mut i = self.rng.random_range(0..total);
        for &b in blocks {
            if i < self.pools[b].len() {
                return Some((b, i));
            }
            i -= self.pools[b].len();
        }
        None
    }
}

impl<T: Scalar> Driver<T> for DiskRandom<T> {
    fn plan(&mut self, _s: &Session<T>, cost: &PlanCostModel) -> (u64, bool) {
        (cost.ticks(0), self.pools.iter().any(|p| !p.is_empty()))
    }

    fn execute(&mut self, s: &mut Session<T>, budget: u64, hard_limit: u64) -> Result<Executed> {
        let mut done = Executed::default();
        let open: Vec<usize> = (0..self.pools.len()).filter(|b| !self.pools[*b].is_empty()).collect();
        let k = self.disk.queues.capacity().min(open.len());
        let chosen: Vec<usize> = open.choose_multiple(&mut self.rng, k).copied().collect();
        let mut remaining = budget;
        for &b in &chosen {
            let load = self.disk.load_ticks(b);
            if load > 0 && load <= remaining {
                self.disk.ensure_resident(b, s, &chosen)?;
                remaining -= load;
            }
        }
        let active: Vec<usize> = chosen.iter().copied().filter(|b| self.disk.queues.is_resident(*b)).collect();
        let mut blocked = None;
        while let Some((b, i)) = self.draw(&active) {
            let (o, r, f) = self.pools[b][i];
            let c = s.charge(o, r, f);
            if c > remaining {
                blocked = Some((b, i));
                break;
            }
            self.pools[b].swap_remove(i);
            self.disk.run(s, o, r, f)?;
            done.add(o);
            remaining -= c;
        }
        if done.triples == 0 {
            let spent = budget - remaining;
            let pick = blocked.or_else(|| chosen.first().map(|b| (*b, 0)));
            if let Some((b, i)) = pick {
                let (o, r, f) = self.pools[b][i];
                let c = s.charge(o, r, f) + self.disk.load_ticks(b);
                if spent.saturating_add(c) <= hard_limit {
                    self.disk.ensure_resident(b, s, &chosen)?;
                    self.pools[b].swap_remove(i);
                    self.disk.run(s, o, r, f)?;
                    done.add(o);
                }
            }
        }
        Ok(done)
    }
}
