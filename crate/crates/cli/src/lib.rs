//! Config-driven scenario runner for `hartree-core`.
//!
//! A run reads a [`ScenarioConfig`], executes the scenario, and writes
//! `diagnostics.csv`, `summary.json` and optional `HPROP1` snapshots into its
//! output directory. See [`config`] for the file format.

pub mod config;
pub mod error;
pub mod presets;
pub mod scenario;
pub mod summary;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

pub use config::{ScenarioConfig, ScenarioKind};
pub use error::RunError;
pub use scenario::Sink;
pub use summary::{Check, RunSummary};

/// Command-line options shared by `run` and `suite`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output root; overrides `output.directory`.
    pub out: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub only: Option<ScenarioKind>,
    pub seed: Option<u64>,
    pub workers: usize,
}

/// A config ready to run, with the label used for its output directory.
#[derive(Debug, Clone)]
pub struct Job {
    pub label: String,
    pub config: ScenarioConfig,
}

impl Job {
    pub fn parse(label: &str, text: &str, opts: &RunOptions) -> Result<Self, RunError> {
        let mut overrides = opts.overrides.clone();
        if let Some(seed) = opts.seed {
            overrides.push(format!("seed={seed}"));
        }
        Ok(Self {
            label: label.to_string(),
            config: config::parse(text, &overrides)?,
        })
    }
}

/// Runs one scenario and writes its outputs under `dir` when given.
pub fn execute(job: &Job, dir: Option<&Path>) -> Result<RunSummary, RunError> {
    let cfg = &job.config;
    let sink = match dir {
        Some(d) => {
            fs::create_dir_all(d).map_err(|e| RunError::io(d, e))?;
            Some(Sink {
                dir: d.to_path_buf(),
                csv: cfg.output.csv,
                snapshots: cfg.output.snapshots,
            })
        }
        None => None,
    };
    let start = Instant::now();
    let mut summary = RunSummary::new(cfg.scenario, &job.label, cfg.seed);
    scenario::run(cfg, sink.as_ref(), &mut summary)?;
    summary.finish(&cfg.declared_checks(), start.elapsed().as_secs_f64());
    if let Some(d) = dir {
        let path = d.join("summary.json");
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
    }
    Ok(summary)
}

fn output_dir(job: &Job, opts: &RunOptions, many: bool) -> PathBuf {
    let root = opts
        .out
        .clone()
        .or_else(|| if many { None } else { job.config.output.directory.clone() })
        .unwrap_or_else(|| PathBuf::from("out"));
    if many {
        root.join(&job.label)
    } else {
        root
    }
}

/// Runs the jobs on up to `opts.workers` threads. Results keep job order.
pub fn execute_all(jobs: &[Job], opts: &RunOptions) -> Vec<Result<RunSummary, RunError>> {
    let many = jobs.len() > 1;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunSummary, RunError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let workers = opts.workers.clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = execute(job, Some(&output_dir(job, opts, many)));
                results.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// Jobs from a config file, or from every `*.toml` in a directory.
pub fn load_jobs(path: &Path, opts: &RunOptions) -> Result<Vec<Job>, RunError> {
    let files = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| RunError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let mut jobs = Vec::new();
    for f in files {
        let text = fs::read_to_string(&f).map_err(|e| RunError::io(&f, e))?;
        let label = f.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
        let job = Job::parse(&label, &text, opts).map_err(|e| match e {
            RunError::Parse { line, message } => RunError::Parse {
                line,
                message: format!("{}: {message}", f.display()),
            },
            other => other,
        })?;
        jobs.push(job);
    }
    Ok(filter(jobs, opts))
}

/// The built-in presets as jobs.
pub fn preset_jobs(opts: &RunOptions) -> Result<Vec<Job>, RunError> {
    let jobs = presets::PRESETS
        .iter()
        .map(|(name, text)| Job::parse(name, text, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(filter(jobs, opts))
}

fn filter(jobs: Vec<Job>, opts: &RunOptions) -> Vec<Job> {
    match opts.only {
        Some(kind) => jobs.into_iter().filter(|j| j.config.scenario == kind).collect(),
        None => jobs,
    }
}

/// Process exit status for a batch: the worst error code, else 1 when any
/// check failed, else 0.
pub fn exit_code(results: &[Result<RunSummary, RunError>]) -> i32 {
    results
        .iter()
        .map(|r| match r {
            Ok(s) if s.passed => 0,
            Ok(_) => error::EXIT_CHECK_FAILED,
            Err(e) => e.exit_code(),
        })
        .max()
        .unwrap_or(0)
}
