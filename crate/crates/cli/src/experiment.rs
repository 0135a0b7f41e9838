//! Experiment presets: the weighting-factor table, the alpha sweep and the
//! model-size scaling curves.

use std::fmt::Write as _;

use clap::ValueEnum;
use rayon::prelude::*;
use relcon_core::sim::initial_state;
use relcon_core::{
    build_model, export_lp, model_stats, run, solve_exact, ModelStats, Proof, Scenario, SlotReport,
    SolverChoice,
};

use crate::error::{CliError, Result};
use crate::output::Artifact;
use crate::plot::{BarChart, LineChart, Series};
use crate::report::{rows_to_csv, solver_rows_to_csv, Row, SolverRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Three (alpha, beta, gamma) settings on 32 PMs / 8 racks / 52 VMs.
    WeightsTable,
    /// alpha from 0 to 1 in steps of 0.1 on 16/25 and 32/52 layouts.
    AlphaSweep,
    /// Model size and search effort against the PM count.
    ScalingCurves,
}

impl Preset {
    pub fn default_seeds(self) -> usize {
        match self {
            Preset::WeightsTable => 10,
            Preset::AlphaSweep => 5,
            Preset::ScalingCurves => 3,
        }
    }
}

pub const WEIGHT_SETTINGS: [(f64, f64, f64); 3] =
    [(0.2, 1.0, 1.0), (1.0, 0.2, 1.0), (1.0, 1.0, 0.2)];

/// `(racks, PMs per rack, VMs)` of the alpha-sweep layouts.
pub const SWEEP_LAYOUTS: [(usize, usize, usize); 2] = [(4, 4, 25), (8, 4, 52)];

/// beta and gamma held fixed while alpha varies.
pub const SWEEP_BETA_GAMMA: (f64, f64) = (1.0, 1.0);

pub const SCALING_SIZES: [usize; 4] = [4, 8, 16, 32];

/// Per-slot time cap used by the presets unless overridden.
pub const PRESET_TIME_CAP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub n_seeds: usize,
    pub base_seed: u64,
    pub time_cap: f64,
    pub timing: bool,
    pub sizes: Vec<usize>,
    pub export_lp: bool,
}

impl Settings {
    pub fn new(preset: Preset) -> Self {
        Self {
            n_seeds: preset.default_seeds(),
            base_seed: 0,
            time_cap: PRESET_TIME_CAP,
            timing: false,
            sizes: SCALING_SIZES.to_vec(),
            export_lp: false,
        }
    }

    fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.n_seeds as u64).map(move |i| self.base_seed + i)
    }

    fn validate(&self) -> Result<()> {
        if self.n_seeds == 0 {
            return Err(CliError::Usage("--seeds must be at least 1".into()));
        }
        relcon_core::solver::node_budget(self.time_cap)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(())
    }
}

fn layout_label(racks: usize, per_rack: usize, vms: usize) -> String {
    format!("{}x{vms}", racks * per_rack)
}

pub fn scenario(
    racks: usize,
    per_rack: usize,
    vms: usize,
    seed: u64,
    (alpha, beta, gamma): (f64, f64, f64),
    time_cap: f64,
) -> Scenario<f64> {
    let mut s = Scenario::homogeneous(racks, per_rack, vms, seed);
    s.weights = s.weights.with_factors(alpha, beta, gamma);
    s.solver = SolverChoice::Exact { time_cap };
    s
}

/// Runs every scenario, in parallel, keeping input order. The first
/// failure in input order is reported.
fn run_all(jobs: Vec<(String, Scenario<f64>)>) -> Result<Vec<Vec<SlotReport<f64>>>> {
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(context, s)| {
            run(s).map_err(|source| CliError::Run {
                context: context.clone(),
                source,
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Per-seed rows and their mean for one weight setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub weights: (f64, f64, f64),
    pub rows: Vec<Row>,
    pub solver: Vec<SolverRow>,
    pub mean: Row,
}

fn run_groups(
    (racks, per_rack, vms): (usize, usize, usize),
    weights: &[(f64, f64, f64)],
    settings: &Settings,
) -> Result<Vec<Group>> {
    settings.validate()?;
    let label = layout_label(racks, per_rack, vms);
    let mut jobs = Vec::new();
    for &w in weights {
        for seed in settings.seeds() {
            let context = format!(
                "{label} alpha={} beta={} gamma={} seed {seed}",
                w.0, w.1, w.2
            );
            jobs.push((
                context,
                scenario(racks, per_rack, vms, seed, w, settings.time_cap),
            ));
        }
    }
    let reports = run_all(jobs)?;
    let mut chunks = reports.chunks(settings.n_seeds);
    weights
        .iter()
        .map(|&w| {
            let chunk = chunks.next().expect("one chunk per setting");
            let mut rows = Vec::new();
            let mut solver = Vec::new();
            for (seed, slot_reports) in settings.seeds().zip(chunk) {
                let cw = relcon_core::CostWeights::default().with_factors(w.0, w.1, w.2);
                for r in slot_reports {
                    rows.push(Row::from_report(r, seed, &cw, settings.timing));
                    solver.push(SolverRow::from_report(r, seed, &cw));
                }
            }
            let mean = Row::mean(&rows).ok_or(CliError::EmptyReports)?;
            Ok(Group {
                weights: w,
                rows,
                solver,
                mean,
            })
        })
        .collect()
}

pub fn weights_table(settings: &Settings) -> Result<Vec<Group>> {
    run_groups((8, 4, 52), &WEIGHT_SETTINGS, settings)
}

fn groups_csv(groups: &[Group]) -> Result<(String, String)> {
    let mut rows: Vec<Row> = groups.iter().flat_map(|g| g.rows.iter().cloned()).collect();
    rows.extend(groups.iter().map(|g| g.mean.clone()));
    let solver: Vec<SolverRow> = groups
        .iter()
        .flat_map(|g| g.solver.iter().cloned())
        .collect();
    Ok((rows_to_csv(&rows)?, solver_rows_to_csv(&solver)?))
}

pub fn render_weights_table(groups: &[Group]) -> Result<Vec<Artifact>> {
    let (csv, solver) = groups_csv(groups)?;
    let categories: Vec<String> = groups
        .iter()
        .map(|g| format!("({}, {}, {})", g.weights.0, g.weights.1, g.weights.2))
        .collect();
    let series = |name: &str, f: fn(&Row) -> f64| {
        (
            name.to_string(),
            groups.iter().map(|g| f(&g.mean)).collect(),
        )
    };
    let counts = BarChart {
        title: "Mean counts per weight setting".into(),
        y_label: "count".into(),
        categories: categories.clone(),
        series: vec![
            series("active racks", |r| r.active_racks),
            series("active PMs", |r| r.active_pms),
            series("migrations", |r| r.migrations),
        ],
    };
    let costs = BarChart {
        title: "Mean costs per weight setting".into(),
        y_label: "dollars".into(),
        categories,
        series: vec![
            series("C_ene", |r| r.c_ene),
            series("C_rel", |r| r.c_rel),
            series("G_rel", |r| r.g_rel),
        ],
    };
    Ok(vec![
        Artifact::new("weights_table.csv", csv),
        Artifact::new("weights_table_solver.csv", solver),
        Artifact::new("weights_table_counts.svg", counts.to_svg()),
        Artifact::new("weights_table_costs.svg", costs.to_svg()),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub label: String,
    pub groups: Vec<Group>,
}

pub fn alpha_values() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

pub fn alpha_sweep(settings: &Settings) -> Result<Vec<Sweep>> {
    let (beta, gamma) = SWEEP_BETA_GAMMA;
    let weights: Vec<_> = alpha_values()
        .into_iter()
        .map(|a| (a, beta, gamma))
        .collect();
    SWEEP_LAYOUTS
        .iter()
        .map(|&(racks, per_rack, vms)| {
            Ok(Sweep {
                label: layout_label(racks, per_rack, vms),
                groups: run_groups((racks, per_rack, vms), &weights, settings)?,
            })
        })
        .collect()
}

pub fn render_alpha_sweep(sweeps: &[Sweep]) -> Result<Vec<Artifact>> {
    let mut out = Vec::new();
    for sweep in sweeps {
        let (csv, solver) = groups_csv(&sweep.groups)?;
        let line = |name: &str, f: fn(&Row) -> f64| Series {
            name: name.into(),
            points: sweep
                .groups
                .iter()
                .map(|g| (g.weights.0, f(&g.mean)))
                .collect(),
        };
        let energy = LineChart {
            title: format!("Energy cost against alpha ({} PMs x VMs)", sweep.label),
            x_label: "alpha".into(),
            y_label: "dollars".into(),
            series: vec![line("C_ene", |r| r.c_ene)],
        };
        let reliability = LineChart {
            title: format!("Reliability cost and gain against alpha ({})", sweep.label),
            x_label: "alpha".into(),
            y_label: "dollars".into(),
            series: vec![line("C_rel", |r| r.c_rel), line("G_rel", |r| r.g_rel)],
        };
        let stem = format!("alpha_sweep_{}", sweep.label);
        out.push(Artifact::new(format!("{stem}.csv"), csv));
        out.push(Artifact::new(format!("{stem}_solver.csv"), solver));
        out.push(Artifact::new(format!("{stem}_energy.svg"), energy.to_svg()));
        out.push(Artifact::new(
            format!("{stem}_reliability.svg"),
            reliability.to_svg(),
        ));
    }
    Ok(out)
}

/// VMs at the evaluation ratio of 52 VMs per 32 PMs, rounded half up.
pub fn scaled_vms(n_pms: usize) -> usize {
    (n_pms * 13 + 4) / 8
}

/// Racks of at most four PMs.
pub fn scaled_layout(n_pms: usize) -> (usize, usize) {
    if n_pms <= 4 {
        (1, n_pms)
    } else {
        (n_pms.div_ceil(4), 4)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRun {
    pub seed: u64,
    pub proof: Proof,
    pub nodes_explored: u64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalePoint {
    pub n_pms: usize,
    pub n_racks: usize,
    pub n_vms: usize,
    pub stats: ModelStats,
    pub closed_form: ModelStats,
    pub runs: Vec<ScaleRun>,
    /// LP text of the first seed's model when requested.
    pub lp: Option<String>,
}

impl ScalePoint {
    pub fn mean_nodes(&self) -> f64 {
        self.runs
            .iter()
            .map(|r| r.nodes_explored as f64)
            .sum::<f64>()
            / self.runs.len() as f64
    }

    pub fn mean_wall_time(&self) -> f64 {
        self.runs.iter().map(|r| r.wall_time).sum::<f64>() / self.runs.len() as f64
    }
}

pub fn scaling_curves(settings: &Settings) -> Result<Vec<ScalePoint>> {
    settings.validate()?;
    if let Some(&bad) = settings
        .sizes
        .iter()
        .find(|&&p| p == 0 || (p > 4 && p % 4 != 0))
    {
        return Err(CliError::Usage(format!(
            "PM count {bad} must be between 1 and 4 or a multiple of 4"
        )));
    }
    let jobs: Vec<(usize, u64)> = settings
        .sizes
        .iter()
        .flat_map(|&p| settings.seeds().map(move |s| (p, s)))
        .collect();
    let results: Vec<Result<(ModelStats, ScaleRun, Option<String>)>> = jobs
        .par_iter()
        .map(|&(n_pms, seed)| {
            let (racks, per_rack) = scaled_layout(n_pms);
            let s = scenario(
                racks,
                per_rack,
                scaled_vms(n_pms),
                seed,
                (1.0, 1.0, 1.0),
                settings.time_cap,
            );
            let context = || format!("{n_pms} PMs seed {seed}");
            let wrap = |source| CliError::Run {
                context: context(),
                source,
            };
            let dc = initial_state(&s).map_err(wrap)?;
            let mig = s.migration_model(&dc);
            let model = build_model(&dc, &s.weights, &s.reliability, &mig).map_err(wrap)?;
            let lp = (settings.export_lp && seed == settings.base_seed).then(|| export_lp(&model));
            let result = solve_exact(&dc, &s.weights, &s.reliability, &mig, settings.time_cap)
                .map_err(wrap)?;
            let run = ScaleRun {
                seed,
                proof: result.proof,
                nodes_explored: result.nodes_explored,
                wall_time: if settings.timing {
                    result.wall_time
                } else {
                    0.0
                },
            };
            Ok((model_stats(&model), run, lp))
        })
        .collect();
    let mut results = results.into_iter();
    settings
        .sizes
        .iter()
        .map(|&n_pms| {
            let (racks, per_rack) = scaled_layout(n_pms);
            let n_vms = scaled_vms(n_pms);
            let mut point = ScalePoint {
                n_pms,
                n_racks: racks,
                n_vms,
                stats: ModelStats::closed_form(0, 0, 0, 0),
                closed_form: ModelStats::closed_form(n_vms, racks * per_rack, racks, 2),
                runs: Vec::new(),
                lp: None,
            };
            for _ in 0..settings.n_seeds {
                let (stats, run, lp) = results.next().expect("one result per job")?;
                point.stats = stats;
                point.lp = point.lp.or(lp);
                point.runs.push(run);
            }
            Ok(point)
        })
        .collect()
}

pub fn render_scaling_curves(points: &[ScalePoint], timing: bool) -> Result<Vec<Artifact>> {
    let mut sizes = String::from(
        "pms,racks,vms,n_binary,n_continuous,n_constraints,n_variables,closed_form_binary,closed_form_continuous,closed_form_constraints\n",
    );
    let mut runs = String::from("pms,seed,proof,nodes_explored,wall_time\n");
    for p in points {
        let (s, c) = (p.stats, p.closed_form);
        let _ = writeln!(
            sizes,
            "{},{},{},{},{},{},{},{},{},{}",
            p.n_pms,
            p.n_racks,
            p.n_vms,
            s.n_binary,
            s.n_continuous,
            s.n_constraints,
            s.n_variables(),
            c.n_binary,
            c.n_continuous,
            c.n_constraints
        );
        for r in &p.runs {
            let _ = writeln!(
                runs,
                "{},{},{},{},{}",
                p.n_pms,
                r.seed,
                r.proof.label(),
                r.nodes_explored,
                r.wall_time
            );
        }
        let _ = writeln!(
            runs,
            "{},mean,,{},{}",
            p.n_pms,
            p.mean_nodes(),
            p.mean_wall_time()
        );
    }
    let by_size = |name: &str, f: &dyn Fn(&ScalePoint) -> f64| Series {
        name: name.into(),
        points: points.iter().map(|p| (p.n_pms as f64, f(p))).collect(),
    };
    let counts = LineChart {
        title: "Model size against PM count".into(),
        x_label: "PMs".into(),
        y_label: "count".into(),
        series: vec![
            by_size("variables", &|p| p.stats.n_variables() as f64),
            by_size("binary", &|p| p.stats.n_binary as f64),
            by_size("constraints", &|p| p.stats.n_constraints as f64),
        ],
    };
    let effort = LineChart {
        title: "Mean search nodes against PM count".into(),
        x_label: "PMs".into(),
        y_label: "nodes".into(),
        series: vec![by_size("nodes explored", &|p| p.mean_nodes())],
    };
    let mut out = vec![
        Artifact::new("scaling_sizes.csv", sizes),
        Artifact::new("scaling_runs.csv", runs),
        Artifact::new("scaling_counts.svg", counts.to_svg()),
        Artifact::new("scaling_effort.svg", effort.to_svg()),
    ];
    if timing {
        let time = LineChart {
            title: "Mean solve time against PM count".into(),
            x_label: "PMs".into(),
            y_label: "seconds".into(),
            series: vec![by_size("wall time", &|p| p.mean_wall_time())],
        };
        out.push(Artifact::new("scaling_time.svg", time.to_svg()));
    }
    for p in points {
        if let Some(lp) = &p.lp {
            out.push(Artifact::new(format!("model_{}pm.lp", p.n_pms), lp.clone()));
        }
    }
    Ok(out)
}

/// Runs `preset` and renders its artifacts.
pub fn run_preset(preset: Preset, settings: &Settings) -> Result<Vec<Artifact>> {
    match preset {
        Preset::WeightsTable => render_weights_table(&weights_table(settings)?),
        Preset::AlphaSweep => render_alpha_sweep(&alpha_sweep(settings)?),
        Preset::ScalingCurves => render_scaling_curves(&scaling_curves(settings)?, settings.timing),
    }
}
