//! Running approaches on a workload, scoring them on a shared horizon, and
//! choosing the epoch length.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{progressiveness, ProgressConfig, Timeline};
use super::workload::Workload;
use crate::engine::{run_query, to_units, Approach, EpochReport, RunConfig, Session, StopReason};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::LearnedParams;

/// Number of equal intervals the horizon is split into for scoring.
pub const SCORE_INTERVALS: usize = 10;

#[derive(Clone, Debug)]
pub struct RunResult<T> {
    pub approach: Approach,
    pub reports: Vec<EpochReport<T>>,
    pub stop: StopReason,
    pub init_ticks: u64,
}

impl<T: Scalar> RunResult<T> {
    /// Quality over cost elapsed since initialization ended.
    pub fn timeline(&self) -> Timeline {
        let mut samples: Vec<(f64, f64, f64)> = Vec::with_capacity(self.reports.len());
        for r in &self.reports {
            let t = to_units(r.clock_ticks - self.init_ticks);
            let s = (t, r.expected_f.to_f64_lossy(), r.true_f);
            match samples.last_mut() {
                Some(last) if last.0 >= t => *last = s,
                _ => samples.push(s),
            }
        }
        Timeline { samples }
    }

    /// Elapsed cost at the end of a run that enriched everything it wanted.
    pub fn completion_time(&self) -> Option<f64> {
        (self.stop == StopReason::FullyTagged).then(|| self.elapsed())
    }

    pub fn elapsed(&self) -> f64 {
        self.reports.last().map_or(0.0, |r| to_units(r.clock_ticks - self.init_ticks))
    }

    pub fn final_f1(&self) -> f64 {
        self.reports.last().map_or(0.0, |r| r.true_f)
    }

    pub fn initial_f1(&self) -> f64 {
        self.reports.first().map_or(0.0, |r| r.true_f)
    }
}

/// Runs `approach` on a fresh session of the workload.
pub fn run_approach<T: Scalar>(
    w: &Workload,
    params: &LearnedParams,
    approach: Approach,
    seed: u64,
    alpha: f64,
    cfg: &RunConfig,
) -> Result<RunResult<T>> {
    let mut s: Session<T> = w.session(params, seed, alpha)?;
    run_session(&mut s, approach, seed, cfg)
}

/// Runs `approach` on an initialized session.
pub fn run_session<T: Scalar>(s: &mut Session<T>, approach: Approach, seed: u64, cfg: &RunConfig) -> Result<RunResult<T>> {
    let mut d = approach.driver(s, seed);
    let stop = run_query(d.as_mut(), s, cfg)?;
    Ok(RunResult { approach, reports: s.timeline().to_vec(), stop, init_ticks: s.init_ticks() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproachScore {
    pub score: f64,
    pub completion_time: Option<f64>,
    pub final_f1: f64,
}

/// Shared scoring horizon: the smallest completion time among the runs,
/// or the longest run when none completed.
pub fn shared_horizon(timelines: &[(Option<f64>, f64)]) -> f64 {
    let done = timelines.iter().filter_map(|t| t.0).fold(f64::INFINITY, f64::min);
    if done.is_finite() && done > 0.0 {
        done
    } else {
        timelines.iter().map(|t| t.1).fold(0.0, f64::max)
    }
}

fn score_on(t: &Timeline, horizon: f64) -> Result<f64> {
    if horizon <= 0.0 {
        return Ok(0.0);
    }
    progressiveness(t, &ProgressConfig::uniform(horizon, SCORE_INTERVALS))
}

#[derive(Clone, Debug)]
pub struct Comparison<T> {
    pub runs: BTreeMap<Approach, RunResult<T>>,
    pub horizon: f64,
    pub scores: BTreeMap<Approach, ApproachScore>,
}

/// Runs every approach under one seed and scores them on a shared horizon.
pub fn compare<T: Scalar>(
    w: &Workload,
    params: &LearnedParams,
    approaches: &[Approach],
    seed: u64,
    alpha: f64,
    cfg: &RunConfig,
) -> Result<Comparison<T>> {
    let mut runs = BTreeMap::new();
    for a in approaches {
        runs.insert(*a, run_approach::<T>(w, params, *a, seed, alpha, cfg)?);
    }
    score_runs(runs)
}

pub fn score_runs<T: Scalar>(runs: BTreeMap<Approach, RunResult<T>>) -> Result<Comparison<T>> {
    let ends: Vec<(Option<f64>, f64)> = runs.values().map(|r| (r.completion_time(), r.elapsed())).collect();
    let horizon = shared_horizon(&ends);
    let mut scores = BTreeMap::new();
    for (a, r) in &runs {
        scores.insert(
            *a,
            ApproachScore { score: score_on(&r.timeline(), horizon)?, completion_time: r.completion_time(), final_f1: r.final_f1() },
        );
    }
    Ok(Comparison { runs, horizon, scores })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Epoch lengths used to find the shortest completion time.
    pub probes: Vec<f64>,
    /// Candidate epochs as fractions of that time.
    pub fractions: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            probes: (1..=10).map(f64::from).collect(),
            fractions: (1..=10).map(|i| f64::from(i) / 100.0).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub best_epoch: f64,
    /// Shortest completion time over the probes.
    pub completion_time: f64,
    /// (epoch, score) per candidate.
    pub scores: Vec<(f64, f64)>,
}

/// Outcome of one run during a sweep.
#[derive(Clone, Debug)]
pub struct SweepRun {
    pub timeline: Timeline,
    pub completion_time: Option<f64>,
}

/// Two-phase epoch choice. Probe runs give the shortest completion time
/// T; each candidate `fraction · T` is then scored on the horizon T and the
/// best is returned, ties going to the shorter epoch.
pub fn epoch_sweep(mut run: impl FnMut(f64) -> Result<SweepRun>, cfg: &SweepConfig) -> Result<SweepResult> {
    let mut t_q = f64::INFINITY;
    for p in &cfg.probes {
        if let Some(c) = run(*p)?.completion_time {
            t_q = t_q.min(c);
        }
    }
    if !t_q.is_finite() || t_q <= 0.0 {
        return Err(Error::Config("no probe epoch completed the query".into()));
    }
    let mut scores = Vec::with_capacity(cfg.fractions.len());
    for f in &cfg.fractions {
        let epoch = f * t_q;
        let r = run(epoch)?;
        scores.push((epoch, score_on(&r.timeline, t_q)?));
    }
    let best = scores
        .iter()
        .fold(None::<(f64, f64)>, |best, s| match best {
            Some(b) if b.1 >= s.1 => Some(b),
            _ => Some(*s),
        })
        .ok_or_else(|| Error::Config("no candidate epochs".into()))?;
    Ok(SweepResult { best_epoch: best.0, completion_time: t_q, scores })
}

/// Epoch sweep of the progressive approach on a workload.
pub fn sweep_workload<T: Scalar>(
    w: &Workload,
    params: &LearnedParams,
    seed: u64,
    alpha: f64,
    base: &RunConfig,
    cfg: &SweepConfig,
) -> Result<SweepResult> {
    epoch_sweep(
        |epoch| {
            let rc = RunConfig { epoch, ..base.clone() };
            let r = run_approach::<T>(w, params, Approach::Progressive, seed, alpha, &rc)?;
            Ok(SweepRun { timeline: r.timeline(), completion_time: r.completion_time() })
        },
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(epoch: f64) -> SweepRun {
        // Quality reaches 1 at time 10 plus a delay growing with the epoch.
        let end = 10.0 + 50.0 * epoch;
        let samples = (0..=20).map(|i| (end * i as f64 / 20.0, 0.0, i as f64 / 20.0)).collect();
        SweepRun { timeline: Timeline { samples }, completion_time: Some(end) }
    }

    #[test]
    fn single_candidate() {
        let cfg = SweepConfig { probes: vec![1.0], fractions: vec![0.05] };
        let r = epoch_sweep(|e| Ok(linear(e)), &cfg).unwrap();
        assert_eq!(r.scores.len(), 1);
        assert_eq!(r.best_epoch, r.scores[0].0);
    }

    #[test]
    fn smaller_epochs_win_when_they_help() {
        let r = epoch_sweep(|e| Ok(linear(e)), &SweepConfig::default()).unwrap();
        assert_eq!(r.completion_time, 60.0);
        assert!((r.best_epoch - 0.6).abs() < 1e-12);
        assert!(r.scores.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn horizon_rules() {
        assert_eq!(shared_horizon(&[(Some(5.0), 5.0), (Some(3.0), 3.0), (None, 9.0)]), 3.0);
        assert_eq!(shared_horizon(&[(None, 4.0), (None, 9.0)]), 9.0);
    }
}
