//! The epoch loop: plan, execute within the epoch budget, re-select the
//! answer and report. Shared by the progressive engine and the baselines.

pub mod bootstrap;
pub mod clock;
pub mod drivers;
pub mod session;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

pub use bootstrap::online_bootstrap;
pub use clock::{to_ticks, to_units, TICKS_PER_UNIT};
pub use drivers::{Driver, Executed, Progressive, RandomTriples, Sequential};
pub use session::{EpochReport, PlanCostModel, Session};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopCondition {
    FullyTagged,
    /// Total clock, initialization included, may not exceed this many units.
    Budget(f64),
    /// Stop once the expected F reaches this value.
    TargetF(f64),
}

impl FromStr for StopCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid stop condition `{s}`, expected full, budget=N or target=F"));
        if s == "full" {
            return Ok(StopCondition::FullyTagged);
        }
        let (k, v) = s.split_once('=').ok_or_else(bad)?;
        let v: f64 = v.trim().parse().map_err(|_| bad())?;
        match k.trim() {
            "budget" if v >= 0.0 => Ok(StopCondition::Budget(v)),
            "target" if (0.0..=1.0).contains(&v) => Ok(StopCondition::TargetF(v)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for StopCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopCondition::FullyTagged => write!(f, "full"),
            StopCondition::Budget(b) => write!(f, "budget={b}"),
            StopCondition::TargetF(t) => write!(f, "target={t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Epoch length in cost units.
    pub epoch: f64,
    pub plan_cost: PlanCostModel,
    pub stop: StopCondition,
    pub max_epochs: usize,
}

impl RunConfig {
    pub fn new(epoch: f64) -> Self {
        RunConfig { epoch, plan_cost: PlanCostModel::default(), stop: StopCondition::FullyTagged, max_epochs: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpochStatus {
    /// Work was done; more may remain.
    Progressed,
    /// No work remains.
    Finished,
    /// Nothing could run this epoch.
    Idle,
    /// The epoch is not longer than the plan cost.
    EpochTooShort,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FullyTagged,
    BudgetExhausted,
    TargetReached,
    Stalled,
    MaxEpochs,
}

/// Runs one epoch of `driver` on `s`.
pub fn run_epoch<T: Scalar, D: Driver<T> + ?Sized>(driver: &mut D, s: &mut Session<T>, cfg: &RunConfig) -> Result<EpochStatus> {
    let hard = match cfg.stop {
        StopCondition::Budget(bg) => to_ticks(bg).saturating_sub(s.clock_ticks()),
        _ => u64::MAX,
    };
    let (t0, work) = driver.plan(s, &cfg.plan_cost);
    if t0 > hard {
        return Ok(EpochStatus::Idle);
    }
    if !work {
        if t0 > 0 {
            s.charge_plan(t0);
            s.push_report(t0, 0);
        }
        return Ok(EpochStatus::Finished);
    }
    s.charge_plan(t0);
    let epoch = to_ticks(cfg.epoch);
    if epoch <= t0 {
        warn!("epoch of {} units does not exceed plan time {}; nothing executed", cfg.epoch, to_units(t0));
        s.push_report(t0, 0);
        return Ok(EpochStatus::EpochTooShort);
    }
    let hard = hard - t0;
    let done = driver.execute(s, (epoch - t0).min(hard), hard)?;
    let mut touched = s.select();
    touched.extend(done.objects.iter().copied());
    driver.selected(s, &touched);
    s.push_report(t0, done.triples);
    Ok(if done.triples == 0 { EpochStatus::Idle } else { EpochStatus::Progressed })
}

/// Runs epochs until the stop condition holds or no progress is possible.
pub fn run_query<T: Scalar, D: Driver<T> + ?Sized>(driver: &mut D, s: &mut Session<T>, cfg: &RunConfig) -> Result<StopReason> {
    for _ in 0..cfg.max_epochs {
        let status = run_epoch(driver, s, cfg)?;
        match status {
            EpochStatus::Finished => return Ok(StopReason::FullyTagged),
            EpochStatus::EpochTooShort => return Ok(StopReason::Stalled),
            EpochStatus::Idle => {
                return Ok(match cfg.stop {
                    StopCondition::Budget(_) => StopReason::BudgetExhausted,
                    _ => StopReason::Stalled,
                })
            }
            EpochStatus::Progressed => {
                if let StopCondition::TargetF(t) = cfg.stop {
                    if s.answer().expected_f.to_f64_lossy() >= t {
                        return Ok(StopReason::TargetReached);
                    }
                }
            }
        }
    }
    Ok(StopReason::MaxEpochs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Progressive,
    Baseline1,
    Baseline2,
    Baseline3,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::Progressive, Approach::Baseline1, Approach::Baseline2, Approach::Baseline3];

    pub fn name(&self) -> &'static str {
        match self {
            Approach::Progressive => "progressive",
            Approach::Baseline1 => "baseline1",
            Approach::Baseline2 => "baseline2",
            Approach::Baseline3 => "baseline3",
        }
    }

    /// Driver for this approach on an initialized session; `seed` feeds the
    /// random baseline.
    pub fn driver<T: Scalar>(&self, s: &Session<T>, seed: u64) -> Box<dyn Driver<T>> {
        match self {
            Approach::Progressive => Box::new(Progressive::new()),
            Approach::Baseline1 => Box::new(Sequential::function_major(s)),
            Approach::Baseline2 => Box::new(Sequential::object_major(s)),
            Approach::Baseline3 => Box::new(RandomTriples::new(s, seed)),
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Approach::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown approach `{s}`")))
    }
}

/// Progressive engine owning its session.
#[derive(Clone, Debug)]
pub struct Engine<T> {
    pub session: Session<T>,
    pub driver: Progressive<T>,
    pub config: RunConfig,
}

impl<T: Scalar> Engine<T> {
    pub fn new(session: Session<T>, config: RunConfig) -> Self {
        Engine { session, driver: Progressive::new(), config }
    }

    pub fn run_epoch(&mut self) -> Result<EpochStatus> {
        run_epoch(&mut self.driver, &mut self.session, &self.config)
    }

    pub fn run_query(&mut self) -> Result<StopReason> {
        run_query(&mut self.driver, &mut self.session, &self.config)
    }

    pub fn timeline(&self) -> &[EpochReport<T>] {
        self.session.timeline()
    }
}

/// Writes reports as CSV with columns epoch, clock, t0, triples_executed,
/// expected_f, true_f1, precision, recall, answer_size.
pub fn write_timeline_csv<T: Scalar, W: Write>(out: W, reports: &[EpochReport<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "clock", "t0", "triples_executed", "expected_f", "true_f1", "precision", "recall", "answer_size"])?;
    for r in reports {
        w.write_record([
            r.epoch.to_string(),
            r.clock().to_string(),
            r.t0().to_string(),
            r.triples_executed.to_string(),
            r.expected_f.to_f64_lossy().to_string(),
            r.true_f.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.answer.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
