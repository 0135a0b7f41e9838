//! Command-line front end for reliability-aware consolidation: runs scenario
//! files through the simulator and reproduces the evaluation presets as CSV
//! tables and SVG plots.

pub mod error;
pub mod experiment;
pub mod output;
pub mod plot;
pub mod report;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use relcon_core::sim::{initial_state, simulate};
use relcon_core::{build_model, export_lp, parse_scenario, Proof, SolverChoice};

pub use error::{exit, CliError, Result};
pub use experiment::{Preset, Settings};
pub use output::Artifact;

#[derive(Debug, Parser)]
#[command(
    name = "relcon",
    version,
    about = "Reliability-aware server consolidation planner"
)]
pub struct Cli {
    /// Worker threads for independent runs (default: one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario file and write its reports and final placement.
    Solve(SolveArgs),
    /// Run an experiment preset and write its tables and plots.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,

    /// Replace the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Per-slot time cap in seconds; selects the exact solver.
    #[arg(long)]
    pub time_cap: Option<f64>,

    /// Also write the MILP of the first decision as model.lp.
    #[arg(long)]
    pub export_lp: bool,

    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Record measured solve times in the wall_time column instead of 0.
    #[arg(long)]
    pub timing: bool,

    /// Exit with status 0 even when a slot stopped at its time cap.
    #[arg(long)]
    pub allow_capped: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,

    /// Seeds per configuration [default: 10 weights-table, 5 alpha-sweep, 3 scaling-curves].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: Option<u64>,

    /// First seed; runs use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Per-slot time cap in seconds.
    #[arg(long, default_value_t = experiment::PRESET_TIME_CAP)]
    pub time_cap: f64,

    /// PM counts for scaling-curves.
    #[arg(long, value_delimiter = ',', default_values_t = experiment::SCALING_SIZES)]
    pub sizes: Vec<usize>,

    /// Write each scaling-curves model in LP format.
    #[arg(long)]
    pub export_lp: bool,

    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Record measured solve times instead of 0.
    #[arg(long)]
    pub timing: bool,
}

impl ExperimentArgs {
    pub fn settings(&self) -> Settings {
        Settings {
            n_seeds: self
                .seeds
                .map_or(self.preset.default_seeds(), |n| n as usize),
            base_seed: self.seed,
            time_cap: self.time_cap,
            timing: self.timing,
            sizes: self.sizes.clone(),
            export_lp: self.export_lp,
        }
    }
}

/// Result of `solve`: artifacts plus the number of time-capped slots.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutput {
    pub artifacts: Vec<Artifact>,
    pub capped_slots: usize,
    pub summary: Vec<String>,
}

pub fn solve(args: &SolveArgs) -> Result<SolveOutput> {
    let text = fs::read_to_string(&args.scenario).map_err(|source| CliError::Read {
        path: args.scenario.clone(),
        source,
    })?;
    let mut scenario = parse_scenario(&text).map_err(|source| CliError::Parse {
        path: args.scenario.clone(),
        source,
    })?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(time_cap) = args.time_cap {
        relcon_core::solver::node_budget(time_cap).map_err(|e| CliError::Usage(e.to_string()))?;
        scenario.solver = SolverChoice::Exact { time_cap };
    }
    let context = format!("{} (seed {})", args.scenario.display(), scenario.seed);
    let wrap = |source| CliError::Run {
        context: context.clone(),
        source,
    };

    let mut artifacts = Vec::new();
    if args.export_lp {
        let dc = initial_state(&scenario).map_err(wrap)?;
        let mig = scenario.migration_model(&dc);
        let model =
            build_model(&dc, &scenario.weights, &scenario.reliability, &mig).map_err(wrap)?;
        artifacts.push(Artifact::new("model.lp", export_lp(&model)));
    }
    let (last, reports) = simulate(&scenario).map_err(wrap)?;
    if reports.is_empty() {
        return Err(CliError::EmptyReports);
    }
    let w = &scenario.weights;
    let rows: Vec<_> = reports
        .iter()
        .map(|r| report::Row::from_report(r, scenario.seed, w, args.timing))
        .collect();
    let solver: Vec<_> = reports
        .iter()
        .map(|r| report::SolverRow::from_report(r, scenario.seed, w))
        .collect();
    artifacts.push(Artifact::new("report.csv", report::rows_to_csv(&rows)?));
    artifacts.push(Artifact::new(
        "solver.csv",
        report::solver_rows_to_csv(&solver)?,
    ));
    artifacts.push(Artifact::new(
        "placement.csv",
        relcon_core::scenario::placement_to_csv(&last.current),
    ));
    let summary = reports
        .iter()
        .map(|r| {
            format!(
                "slot {}: {} racks, {} PMs, {} migrations, objective {:.6} ({}, {} nodes)",
                r.slot,
                r.active_racks,
                r.active_pms,
                r.n_migrations,
                r.objective,
                r.proof.label(),
                r.nodes_explored
            )
        })
        .collect();
    Ok(SolveOutput {
        artifacts,
        capped_slots: reports
            .iter()
            .filter(|r| r.proof == Proof::TimeCapped)
            .count(),
        summary,
    })
}

fn with_pool<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(f))
}

/// Runs a parsed command line, printing progress to stdout.
pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(args) => {
            let out = with_pool(cli.jobs, || solve(args))??;
            for line in &out.summary {
                println!("{line}");
            }
            for path in output::write_all(&args.out, &out.artifacts)? {
                println!("wrote {}", path.display());
            }
            if out.capped_slots > 0 && !args.allow_capped {
                return Err(CliError::TimeCapReached {
                    slots: out.capped_slots,
                });
            }
            Ok(())
        }
        Command::Experiment(args) => {
            let settings = args.settings();
            let artifacts =
                with_pool(cli.jobs, || experiment::run_preset(args.preset, &settings))??;
            for path in output::write_all(&args.out, &artifacts)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}
