use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use enrichq::engine::{write_timeline_csv, Approach, RunConfig, StopCondition};
use enrichq::harness::{compare, run_approach, sweep_workload, write_generated, GenSpec, RunResult, SweepConfig, Workload};
use enrichq::sim::LearnedParams;
use enrichq::storage::{compare_disk, run_disk_approach, sweep_disk_workload, DiskConfig};

/// Bad input: missing files, unparsable configuration or conflicting flags.
#[derive(Debug)]
struct ConfigError(String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl fmt::Display) -> anyhow::Error {
    ConfigError(msg.to_string()).into()
}

#[derive(Parser)]
#[command(name = "enrichq", version, about = "Progressive evaluation of queries over costly enrichment functions")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset, validation set and query configuration.
    Gen(GenArgs),
    /// Run one approach and write its timeline CSV.
    Run(RunArgs),
    /// Run the progressive approach and the three baselines under one seed.
    Compare(CompareArgs),
    /// Choose the epoch length for the progressive approach.
    SweepEpoch(SweepArgs),
    /// Run one approach with the data in blocks on disk.
    DiskRun(RunArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2055)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    n_validation: usize,
    /// Fraction of objects passing the precise condition.
    #[arg(long, default_value_t = 0.1)]
    selectivity: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured alpha.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Mem,
    Disk,
}

#[derive(Args)]
struct DiskArgs {
    /// Objects per block (disk mode).
    #[arg(long)]
    block_size: Option<usize>,
    /// Blocks held in memory (disk mode).
    #[arg(long)]
    capacity: Option<usize>,
    /// Cost of loading one block (disk mode).
    #[arg(long)]
    load_cost: Option<f64>,
    /// Directory for block files; defaults next to the output.
    #[arg(long)]
    spill: Option<PathBuf>,
}

impl DiskArgs {
    fn given(&self) -> bool {
        self.block_size.is_some() || self.capacity.is_some() || self.load_cost.is_some() || self.spill.is_some()
    }

    fn config(&self, n_objects: usize) -> Result<DiskConfig> {
        let mut d = DiskConfig::for_objects(n_objects);
        if let Some(b) = self.block_size {
            d.block_size = b;
        }
        if let Some(c) = self.capacity {
            d.capacity = c;
        }
        if let Some(l) = self.load_cost {
            d.load_cost = l;
        }
        if d.block_size == 0 || d.capacity == 0 || !(d.load_cost >= 0.0 && d.load_cost.is_finite()) {
            return Err(config_err("block size and capacity must be positive and load cost non-negative"));
        }
        Ok(d)
    }
}

#[derive(Args)]
struct RunOpts {
    /// Epoch length in cost units; chosen by an epoch sweep when omitted.
    #[arg(long)]
    epoch: Option<f64>,
    /// full, budget=N or target=F.
    #[arg(long, default_value = "full")]
    stop: String,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[command(flatten)]
    disk: DiskArgs,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    query: QueryArgs,
    #[command(flatten)]
    opts: RunOpts,
    /// progressive, baseline1, baseline2 or baseline3.
    #[arg(long, default_value = "progressive")]
    approach: String,
    /// Timeline CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    query: QueryArgs,
    #[command(flatten)]
    opts: RunOpts,
    /// Directory for per-approach CSVs and report.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long, value_enum, default_value = "mem")]
    mode: Mode,
    #[command(flatten)]
    disk: DiskArgs,
    /// Where to write the sweep result as JSON; printed either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A loaded query with its learned parameters.
struct Loaded {
    workload: Workload,
    params: LearnedParams,
    alpha: f64,
    seed: u64,
}

fn load(q: &QueryArgs) -> Result<Loaded> {
    for p in [&q.dataset, &q.config] {
        if !p.is_file() {
            return Err(config_err(format!("no such file: {}", p.display())));
        }
    }
    let workload = Workload::load(&q.config, &q.dataset).map_err(config_err)?;
    let alpha = workload.alpha(q.alpha).map_err(config_err)?;
    let params = workload.learn(q.seed);
    info!("{} objects pass the precise conditions", workload.objects.len());
    Ok(Loaded { workload, params, alpha, seed: q.seed })
}

/// Mode, stop condition and disk settings after checking for conflicts.
struct Resolved {
    mode: Mode,
    stop: StopCondition,
    disk: Option<DiskConfig>,
}

fn resolve(opts: &RunOpts, forced: Option<Mode>, n_objects: usize) -> Result<Resolved> {
    let mode = match (forced, opts.mode) {
        (Some(f), Some(m)) if f != m => return Err(config_err("disk-run cannot be combined with --mode mem")),
        (Some(f), _) => f,
        (None, m) => m.unwrap_or(Mode::Mem),
    };
    if mode == Mode::Mem && opts.disk.given() {
        return Err(config_err("disk options need --mode disk"));
    }
    if let Some(e) = opts.epoch {
        if !(e > 0.0 && e.is_finite()) {
            return Err(config_err(format!("epoch must be positive, got {e}")));
        }
    }
    let stop: StopCondition = opts.stop.parse().map_err(config_err)?;
    let disk = match mode {
        Mode::Disk => Some(opts.disk.config(n_objects)?),
        Mode::Mem => None,
    };
    Ok(Resolved { mode, stop, disk })
}

fn spill_dir(given: &Option<PathBuf>, out: &Path, suffix: &str) -> PathBuf {
    given.clone().unwrap_or_else(|| {
        let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(suffix);
        out.with_file_name(name)
    })
}

fn choose_epoch(l: &Loaded, r: &Resolved, given: Option<f64>, spill: &Path) -> Result<f64> {
    if let Some(e) = given {
        return Ok(e);
    }
    let base = RunConfig { stop: r.stop, ..RunConfig::new(1.0) };
    let sweep = match &r.disk {
        None => sweep_workload::<f64>(&l.workload, &l.params, l.seed, l.alpha, &base, &SweepConfig::default())?,
        Some(d) => sweep_disk_workload::<f64>(
            &l.workload,
            &l.params,
            l.seed,
            l.alpha,
            &base,
            d,
            &spill.join("sweep"),
            &SweepConfig::default(),
        )?,
    };
    info!("epoch sweep chose {:.4} (shortest completion {:.4})", sweep.best_epoch, sweep.completion_time);
    Ok(sweep.best_epoch)
}

fn write_csv(path: &Path, run: &RunResult<f64>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_timeline_csv(BufWriter::new(f), &run.reports)?;
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    if !(a.selectivity > 0.0 && a.selectivity <= 1.0) {
        return Err(config_err(format!("selectivity {} not in (0, 1]", a.selectivity)));
    }
    let spec = GenSpec { n: a.n, n_validation: a.n_validation, ..GenSpec::standard(a.selectivity, a.seed) };
    let files = write_generated(&spec, &a.out)?;
    println!(
        "{}",
        serde_json::json!({
            "dataset": files.dataset,
            "validation": files.validation,
            "config": files.config,
        })
    );
    Ok(())
}

fn cmd_run(a: &RunArgs, forced: Option<Mode>) -> Result<()> {
    let approach: Approach = a.approach.parse().map_err(config_err)?;
    let l = load(&a.query)?;
    let r = resolve(&a.opts, forced, l.workload.objects.len())?;
    let spill = spill_dir(&a.opts.disk.spill, &a.out, ".blocks");
    let epoch = choose_epoch(&l, &r, a.opts.epoch, &spill)?;
    let cfg = RunConfig { stop: r.stop, ..RunConfig::new(epoch) };
    let run = match &r.disk {
        None => run_approach::<f64>(&l.workload, &l.params, approach, l.seed, l.alpha, &cfg)?,
        Some(d) => run_disk_approach::<f64>(&l.workload, &l.params, approach, l.seed, l.alpha, &cfg, d, &spill)?,
    };
    write_csv(&a.out, &run)?;
    let last = run.reports.last().context("empty timeline")?;
    println!(
        "{}",
        serde_json::json!({
            "approach": approach.name(),
            "mode": if r.mode == Mode::Disk { "disk" } else { "mem" },
            "epoch": epoch,
            "stop": run.stop,
            "clock": last.clock(),
            "expected_f": last.expected_f,
            "true_f1": last.true_f,
            "answer_size": last.answer.len(),
        })
    );
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let l = load(&a.query)?;
    let r = resolve(&a.opts, None, l.workload.objects.len())?;
    let spill = a.opts.disk.spill.clone().unwrap_or_else(|| a.out.join("blocks"));
    let epoch = choose_epoch(&l, &r, a.opts.epoch, &spill)?;
    let cfg = RunConfig { stop: r.stop, ..RunConfig::new(epoch) };
    let c = match &r.disk {
        None => compare::<f64>(&l.workload, &l.params, &Approach::ALL, l.seed, l.alpha, &cfg)?,
        Some(d) => compare_disk::<f64>(&l.workload, &l.params, &Approach::ALL, l.seed, l.alpha, &cfg, d, &spill)?,
    };
    std::fs::create_dir_all(&a.out)?;
    for (approach, run) in &c.runs {
        write_csv(&a.out.join(format!("{}.csv", approach.name())), run)?;
    }
    let report: BTreeMap<&str, _> = c.scores.iter().map(|(a, s)| (a.name(), s)).collect();
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(a.out.join("report.json"), format!("{text}\n"))?;
    info!("epoch {epoch:.4}, scoring horizon {:.4}", c.horizon);
    println!("{text}");
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let l = load(&a.query)?;
    if a.mode == Mode::Mem && a.disk.given() {
        return Err(config_err("disk options need --mode disk"));
    }
    let base = RunConfig::new(1.0);
    let sweep = match a.mode {
        Mode::Mem => sweep_workload::<f64>(&l.workload, &l.params, l.seed, l.alpha, &base, &SweepConfig::default())?,
        Mode::Disk => {
            let d = a.disk.config(l.workload.objects.len())?;
            let spill = a.disk.spill.clone().unwrap_or_else(|| std::env::temp_dir().join(format!("enrichq-sweep-{}", std::process::id())));
            let res = sweep_disk_workload::<f64>(&l.workload, &l.params, l.seed, l.alpha, &base, &d, &spill, &SweepConfig::default());
            if a.disk.spill.is_none() {
                let _ = std::fs::remove_dir_all(&spill);
            }
            res?
        }
    };
    let text = serde_json::to_string_pretty(&sweep)?;
    if let Some(out) = &a.out {
        std::fs::write(out, format!("{text}\n")).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a, None),
        Command::Compare(a) => cmd_compare(a),
        Command::SweepEpoch(a) => cmd_sweep(a),
        Command::DiskRun(a) => cmd_run(a, Some(Mode::Disk)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
