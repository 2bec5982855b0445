//! Fixed-size object blocks, block benefits, residency queues and the
//! per-epoch choice of how many blocks to swap.

use crate::error::{Error, Result};
use crate::planner::{PlanQueue, Triple};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub id: usize,
    /// Object indices, in the order the block was cut.
    pub objects: Vec<usize>,
}

/// Cuts `order` into contiguous chunks of `block_size`; the last may be short.
pub fn partition_blocks(order: &[usize], block_size: usize) -> Result<Vec<Block>> {
    if block_size == 0 {
        return Err(Error::Config("block size must be positive".into()));
    }
    Ok(order
        .chunks(block_size)
        .enumerate()
        .map(|(id, c)| Block { id, objects: c.to_vec() })
        .collect())
}

/// Blocks plus the reverse lookup from object to (block, slot).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub blocks: Vec<Block>,
    block_of: Vec<usize>,
    slot: Vec<usize>,
}

impl Layout {
    pub fn new(blocks: Vec<Block>, n_objects: usize) -> Result<Self> {
        let mut block_of = vec![usize::MAX; n_objects];
        let mut slot = vec![usize::MAX; n_objects];
        for b in &blocks {
            for (i, &o) in b.objects.iter().enumerate() {
                if o >= n_objects || block_of[o] != usize::MAX {
                    return Err(Error::Config(format!("blocks do not partition the objects (object {o})")));
                }
                block_of[o] = b.id;
                slot[o] = i;
            }
        }
        if let Some(o) = block_of.iter().position(|b| *b == usize::MAX) {
            return Err(Error::Config(format!("object {o} is in no block")));
        }
        Ok(Layout { blocks, block_of, slot })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, object: usize) -> usize {
        self.block_of[object]
    }

    /// Position of an object inside its block.
    pub fn slot(&self, object: usize) -> usize {
        self.slot[object]
    }
}

/// Sum of the benefits of the queued triples whose object is in `block`.
pub fn block_benefit<T: Scalar>(block: &Block, queue: &PlanQueue<T>) -> T {
    block
        .objects
        .iter()
        .flat_map(|&o| queue.contents().range((o, 0)..(o + 1, 0)))
        .map(|(_, t)| t.benefit)
        .sum()
}

/// Block benefits kept in step with the plan queue.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockBenefits<T> {
    values: Vec<T>,
}

impl<T: Scalar> BlockBenefits<T> {
    pub fn rebuild(layout: &Layout, queue: &PlanQueue<T>) -> Self {
        BlockBenefits { values: layout.blocks.iter().map(|b| block_benefit(b, queue)).collect() }
    }

    /// Recomputes only the blocks holding `touched` objects. Returns how many
    /// blocks were recomputed.
    pub fn update(&mut self, layout: &Layout, queue: &PlanQueue<T>, touched: impl IntoIterator<Item = usize>) -> usize {
        let mut blocks: Vec<usize> = touched.into_iter().map(|o| layout.block_of(o)).collect();
        blocks.sort_unstable();
        blocks.dedup();
        for &b in &blocks {
            self.values[b] = block_benefit(&layout.blocks[b], queue);
        }
        blocks.len()
    }

    pub fn get(&self, block: usize) -> T {
        self.values[block]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Which resident block to drop when memory is full.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Eviction {
    LeastBenefit,
    OldestLoaded,
}

/// Residency of every block: at most `capacity` in memory, the rest on disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockQueues {
    capacity: usize,
    /// Ticks charged per block load.
    load_cost: u64,
    /// Load sequence number of resident blocks.
    loaded_at: Vec<Option<u64>>,
    loads: u64,
}

impl BlockQueues {
    /// All blocks start on disk.
    pub fn new(n_blocks: usize, capacity: usize, load_cost: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("memory capacity must be at least one block".into()));
        }
        Ok(BlockQueues { capacity, load_cost, loaded_at: vec![None; n_blocks], loads: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn load_cost(&self) -> u64 {
        self.load_cost
    }

    pub fn n_blocks(&self) -> usize {
        self.loaded_at.len()
    }

    pub fn is_resident(&self, block: usize) -> bool {
        self.loaded_at[block].is_some()
    }

    pub fn resident_count(&self) -> usize {
        self.loaded_at.iter().filter(|l| l.is_some()).count()
    }

    /// Resident blocks by ascending benefit, ties by id.
    pub fn memory_queue<T: Scalar>(&self, benefits: &BlockBenefits<T>) -> Vec<usize> {
        let mut m: Vec<usize> = (0..self.n_blocks()).filter(|b| self.is_resident(*b)).collect();
        m.sort_by(|a, b| benefits.get(*a).total_cmp_s(&benefits.get(*b)).then(a.cmp(b)));
        m
    }

    /// Disk-resident blocks by descending benefit, ties by id.
    pub fn disk_queue<T: Scalar>(&self, benefits: &BlockBenefits<T>) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.n_blocks()).filter(|b| !self.is_resident(*b)).collect();
        d.sort_by(|a, b| benefits.get(*b).total_cmp_s(&benefits.get(*a)).then(a.cmp(b)));
        d
    }

    pub fn load(&mut self, block: usize) -> Result<()> {
        if self.is_resident(block) {
            return Ok(());
        }
        if self.resident_count() >= self.capacity {
            return Err(Error::Config(format!("memory full, cannot load block {block}")));
        }
        self.loads += 1;
        self.loaded_at[block] = Some(self.loads);
        Ok(())
    }

    pub fn flush(&mut self, block: usize) {
        self.loaded_at[block] = None;
    }

    /// Block to drop to make room, if memory is full.
    pub fn victim<T: Scalar>(&self, policy: Eviction, benefits: &BlockBenefits<T>, keep: &[usize]) -> Option<usize> {
        if self.resident_count() < self.capacity {
            return None;
        }
        let candidates = (0..self.n_blocks()).filter(|b| self.is_resident(*b) && !keep.contains(b));
        match policy {
            Eviction::LeastBenefit => candidates.min_by(|a, b| benefits.get(*a).total_cmp_s(&benefits.get(*b)).then(a.cmp(b))),
            Eviction::OldestLoaded => candidates.min_by_key(|b| self.loaded_at[*b]),
        }
    }

    /// Applies a plan's residency change: flushes first, then loads.
    pub fn apply<T>(&mut self, plan: &DiskPlan<T>) -> Result<()> {
        for b in &plan.flushes {
            self.flush(*b);
        }
        for b in &plan.loads {
            self.load(*b)?;
        }
        Ok(())
    }
}

/// A swap of blocks followed by the triples to run on resident objects.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskPlan<T> {
    pub loads: Vec<usize>,
    pub flushes: Vec<usize>,
    /// In execution order.
    pub triples: Vec<Triple<T>>,
    pub benefit: T,
    pub load_ticks: u64,
    pub exec_ticks: u64,
}

impl<T> DiskPlan<T> {
    /// Number of blocks swapped in.
    pub fn swaps(&self) -> usize {
        self.loads.len()
    }
}

/// The alternative that loads the `b` most beneficial disk blocks, flushing
/// the least beneficial resident blocks when memory lacks room, then admits
/// queued triples on resident objects greedily within what is left of
/// `budget`. `None` when the swap itself does not fit.
pub fn candidate_plan<T: Scalar>(
    queues: &BlockQueues,
    benefits: &BlockBenefits<T>,
    layout: &Layout,
    queue: &PlanQueue<T>,
    budget: u64,
    b: usize,
    cost: impl Fn(&Triple<T>) -> u64,
) -> Option<DiskPlan<T>> {
    let disk = queues.disk_queue(benefits);
    if b > disk.len() || b > queues.capacity() {
        return None;
    }
    let load_ticks = queues.load_cost() * b as u64;
    if load_ticks > budget {
        return None;
    }
    let memory = queues.memory_queue(benefits);
    let n_flush = (memory.len() + b).saturating_sub(queues.capacity());
    let loads = disk[..b].to_vec();
    let flushes = memory[..n_flush].to_vec();
    let mut resident: Vec<bool> = (0..queues.n_blocks()).map(|x| queues.is_resident(x)).collect();
    for f in &flushes {
        resident[*f] = false;
    }
    for l in &loads {
        resident[*l] = true;
    }
    let mut remaining = budget - load_ticks;
    let mut triples = Vec::new();
    let mut benefit = T::zero();
    for t in queue.iter() {
        if !resident[layout.block_of(t.object)] {
            continue;
        }
        let c = cost(t);
        if c <= remaining {
            remaining -= c;
            benefit = benefit + t.benefit;
            triples.push(*t);
        }
    }
    let exec_ticks = budget - load_ticks - remaining;
    Some(DiskPlan { loads, flushes, triples, benefit, load_ticks, exec_ticks })
}

/// Best of the swap alternatives `b = 0..=capacity` by plan benefit, ties to
/// the smaller swap.
pub fn enumerate_disk_plans<T: Scalar>(
    queues: &BlockQueues,
    benefits: &BlockBenefits<T>,
    layout: &Layout,
    queue: &PlanQueue<T>,
    budget: u64,
    cost: impl Fn(&Triple<T>) -> u64,
) -> DiskPlan<T> {
    let mut best: Option<DiskPlan<T>> = None;
    for b in 0..=queues.capacity() {
        let Some(p) = candidate_plan(queues, benefits, layout, queue, budget, b, &cost) else { continue };
        if best.as_ref().is_none_or(|x| p.benefit > x.benefit) {
            best = Some(p);
        }
    }
    best.expect("swapping nothing always fits")
}
