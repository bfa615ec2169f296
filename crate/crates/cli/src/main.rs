use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hartree_cli::{presets, Check, RunError, RunOptions, RunSummary, ScenarioKind};

#[derive(Parser)]
#[command(name = "hartree", version, about = "Run Hartree-equation decay scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Output root directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. `--set time.dt=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run only configs of this scenario.
    #[arg(long)]
    only: Option<ScenarioKind>,
    /// Seed for the randomized corpora.
    #[arg(long)]
    seed: Option<u64>,
    /// Scenarios run concurrently.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl Common {
    fn options(self) -> RunOptions {
        RunOptions {
            out: self.out,
            overrides: self.overrides,
            only: self.only,
            seed: self.seed,
            workers: self.workers,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file, or every `*.toml` in a directory.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in presets.
    Suite {
        #[command(flatten)]
        common: Common,
    },
    /// List the presets, or print one.
    Preset { name: Option<String> },
}

fn report(results: &[Result<RunSummary, RunError>]) {
    for r in results {
        match r {
            Ok(s) => {
                let status = if s.passed { "PASS" } else { "FAIL" };
                println!("{status} {} ({}, {:.1} s)", s.label, s.scenario, s.wall_clock_seconds);
                for Check { name, passed, detail } in &s.checks {
                    println!("  [{}] {name}: {detail}", if *passed { "ok" } else { "FAIL" });
                }
            }
            Err(e) => println!("ERROR {e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (jobs, opts) = match cli.command {
        Command::Preset { name: None } => {
            for (name, _) in presets::PRESETS {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Preset { name: Some(name) } => {
            return match presets::find(&name) {
                Some(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                None => {
                    eprintln!("no preset named `{name}`");
                    ExitCode::from(2)
                }
            };
        }
        Command::Run { config, common } => {
            let opts = common.options();
            (hartree_cli::load_jobs(&config, &opts), opts)
        }
        Command::Suite { common } => {
            let opts = common.options();
            (hartree_cli::preset_jobs(&opts), opts)
        }
    };
    let jobs = match jobs {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if jobs.is_empty() {
        eprintln!("nothing to run");
        return ExitCode::SUCCESS;
    }
    let results = hartree_cli::execute_all(&jobs, &opts);
    report(&results);
    ExitCode::from(hartree_cli::exit_code(&results) as u8)
}
