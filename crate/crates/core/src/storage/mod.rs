//! Disk-resident objects: the data is cut into blocks of which only a few
//! fit in memory, and loading a block costs time.

pub mod blocks;
pub mod drivers;
pub mod store;

use std::collections::BTreeMap;
use std::path::Path;

pub use blocks::{
    block_benefit, candidate_plan, enumerate_disk_plans, partition_blocks, Block, BlockBenefits, BlockQueues, DiskPlan,
    Eviction, Layout,
};
pub use drivers::{apply_disk_plan, Disk, DiskConfig, DiskProgressive, DiskRandom, DiskSequential};
pub use store::{BlockIndexEntry, BlockStore, INDEX_FILE, SPILL_FILE};

use crate::engine::{run_query, Approach, Driver, RunConfig, Session};
use crate::error::Result;
use crate::harness::{epoch_sweep, score_runs, Comparison, RunResult, SweepConfig, SweepResult, SweepRun, Workload};
use crate::scalar::Scalar;
use crate::sim::LearnedParams;

/// Disk version of `approach`, attached to an initialized session. Block
/// files go to `dir`.
pub fn disk_driver<T: Scalar>(
    approach: Approach,
    s: &mut Session<T>,
    cfg: &DiskConfig,
    dir: &Path,
    seed: u64,
) -> Result<Box<dyn Driver<T>>> {
    Ok(match approach {
        Approach::Progressive => Box::new(DiskProgressive::new(s, cfg, dir)?),
        Approach::Baseline1 => Box::new(DiskSequential::function_major(s, cfg, dir)?),
        Approach::Baseline2 => Box::new(DiskSequential::object_major(s, cfg, dir)?),
        Approach::Baseline3 => Box::new(DiskRandom::new(s, cfg, dir, seed)?),
    })
}

/// Runs the disk version of `approach` on an initialized session.
pub fn run_disk_session<T: Scalar>(
    s: &mut Session<T>,
    approach: Approach,
    seed: u64,
    cfg: &RunConfig,
    disk: &DiskConfig,
    dir: &Path,
) -> Result<RunResult<T>> {
    let mut d = disk_driver(approach, s, disk, dir, seed)?;
    let stop = run_query(d.as_mut(), s, cfg)?;
    Ok(RunResult { approach, reports: s.timeline().to_vec(), stop, init_ticks: s.init_ticks() })
}

/// Runs the disk version of `approach` on a fresh session of the workload.
#[allow(clippy::too_many_arguments)]
pub fn run_disk_approach<T: Scalar>(
    w: &Workload,
    params: &LearnedParams,
    approach: Approach,
    seed: u64,
    alpha: f64,
    cfg: &RunConfig,
    disk: &DiskConfig,
    dir: &Path,
) -> Result<RunResult<T>> {
    let mut s: Session<T> = w.session(params, seed, alpha)?;
    run_disk_session(&mut s, approach, seed, cfg, disk, dir)
}

/// Disk versions of the approaches under one seed, scored on a shared
/// horizon. Each approach spills into its own subdirectory of `dir`.
#[allow(clippy::too_many_arguments)]
pub fn compare_disk<T: Scalar>(
    w: &Workload,
    params: &LearnedParams,
    approaches: &[Approach],
    seed: u64,
    alpha: f64,
    cfg: &RunConfig,
    disk: &DiskConfig,
    dir: &Path,
) -> Result<Comparison<T>> {
    let mut runs = BTreeMap::new();
    for a in approaches {
        runs.insert(*a, run_disk_approach::<T>(w, params, *a, seed, alpha, cfg, disk, &dir.join(a.name()))?);
    }
    score_runs(runs)
}

/// Epoch sweep of the disk-mode progressive approach.
#[allow(clippy::too_many_arguments)]
pub fn sweep_disk_workload<T: Scalar>(
    w: &Workload,
    params: &LearnedParams,
    seed: u64,
    alpha: f64,
    base: &RunConfig,
    disk: &DiskConfig,
    dir: &Path,
    cfg: &SweepConfig,
) -> Result<SweepResult> {
    epoch_sweep(
        |epoch| {
            let rc = RunConfig { epoch, ..base.clone() };
            let r = run_disk_approach::<T>(w, params, Approach::Progressive, seed, alpha, &rc, disk, dir)?;
            Ok(SweepRun { timeline: r.timeline(), completion_time: r.completion_time() })
        },
        cfg,
    )
}
