//! The `ncfair` command line. Exit codes: 0 success, 2 usage or input
//! error, 3 solver finished without an optimal status.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ncfair_core::datagen::{self, BiasConfig, SyntheticConfig};
use ncfair_core::fairlds::{self, FairSolveReport, FairnessMode, FairnessModelSpec, LossEncoding};
use ncfair_core::metrics;
use ncfair_core::npa::{self, RelaxationOrder};
use ncfair_core::sdp::SolverConfig;
use ncfair_core::TrajectorySet;

use crate::compas::{self, ColumnMap, CompasFilter};
use crate::error::{IoError, Result};
use crate::experiments::{self, BenchConfig, SweepConfig};
use crate::{csvio, report, sdpa};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NON_OPTIMAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ncfair", version, about = "Fair learning of linear dynamical systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the two-subgroup synthetic data set, optionally biased.
    Gen(GenArgs),
    /// Learn a system from a trajectory CSV and write a JSON report.
    Solve(SolveArgs),
    /// Score a saved report against a trajectory CSV.
    Eval(EvalArgs),
    /// Run the under-representation sweep and write one CSV row per cell.
    Sweep(SweepArgs),
    /// Record relaxation sizes and solve times over horizons.
    Bench(BenchArgs),
    /// Extract COMPAS trajectories and solve on them.
    Compas(CompasArgs),
    /// Write the relaxation of a model in sparse SDPA format.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iterations: usize,
    /// Disable Ruiz equilibration.
    #[arg(long)]
    pub no_scaling: bool,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            scaling: !self.no_scaling,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    /// subgroup_fair, instant_fair or unfair.
    #[arg(long, default_value = "subgroup_fair")]
    pub mode: FairnessMode,
    /// Regularization weight; defaults to 5 for subgroup_fair and 1 otherwise.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Relaxation order k.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, default_value_t = 1)]
    pub hidden_dim: usize,
    /// squared or absolute.
    #[arg(long, default_value = "squared")]
    pub loss: LossEncoding,
    #[arg(long)]
    pub ball_radius: Option<f64>,
}

impl SpecArgs {
    pub fn spec(&self) -> FairnessModelSpec {
        let mut spec = FairnessModelSpec::new(self.mode)
            .with_order(self.order)
            .with_hidden_dim(self.hidden_dim)
            .with_encoding(self.loss);
        if let Some(l) = self.lambda {
            spec = spec.with_lambda(l);
        }
        spec.ball_radius = self.ball_radius;
        spec
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, env = "NCFAIR_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub beta_a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub beta_d: f64,
    /// Seed of the bias draw; defaults to seed + 1.
    #[arg(long)]
    pub bias_seed: Option<u64>,
    /// Use the default sizes (20 periods, 3 + 2 trajectories).
    #[arg(long, conflicts_with_all = ["horizon", "advantaged", "disadvantaged"])]
    pub paper_defaults: bool,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub advantaged: Option<usize>,
    #[arg(long)]
    pub disadvantaged: Option<usize>,
    /// Allow periods with no observation in a subgroup.
    #[arg(long)]
    pub no_guard: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also write an evaluation report against the training data.
    #[arg(long)]
    pub eval_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, env = "NCFAIR_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Comma-separated β_d values; defaults to 0.5, 0.55, ..., 0.9.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub beta_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, value_delimiter = ',', default_value = "subgroup_fair,instant_fair,unfair")]
    pub modes: Vec<FairnessMode>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1.0)]
    pub beta_a: f64,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, env = "NCFAIR_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    pub horizons: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "subgroup_fair,instant_fair,unfair")]
    pub modes: Vec<FairnessMode>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct CompasArgs {
    #[arg(long)]
    pub csv: PathBuf,
    /// JSON object overriding column names, e.g. {"days_to_rearrest": "r_days"}.
    #[arg(long)]
    pub column_map: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub out: PathBuf,
    /// Trajectory CSV path; defaults to the report path with a .csv extension.
    #[arg(long)]
    pub data_out: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub period_days: u32,
    #[arg(long, default_value_t = 1)]
    pub max_priors: u32,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Gen(a) => cmd_gen(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Compas(a) => cmd_compas(&a),
        Command::Export(a) => cmd_export(&a),
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<i32> {
    let mut cfg = SyntheticConfig::default();
    if !a.paper_defaults {
        cfg.horizon = a.horizon.unwrap_or(cfg.horizon);
        cfg.trajectories_advantaged = a.advantaged.unwrap_or(cfg.trajectories_advantaged);
        cfg.trajectories_disadvantaged = a.disadvantaged.unwrap_or(cfg.trajectories_disadvantaged);
    }
    let mut bias = BiasConfig::two_group(a.beta_a, a.beta_d, a.bias_seed.unwrap_or(a.seed.wrapping_add(1)));
    bias.guard = !a.no_guard;
    let full = datagen::generate_dataset(&cfg, a.seed)?;
    let data = datagen::apply_bias(&full, &bias)?;
    csvio::save_trajectories_csv(&data, &a.out)?;
    eprintln!("wrote {} observations to {}", data.len(), a.out.display());
    Ok(EXIT_OK)
}

fn finish_solve(report: &FairSolveReport, out: &Path) -> Result<i32> {
    report::save_json(report, out)?;
    if report.is_optimal() {
        eprintln!(
            "{}: objective {:.6e} after {} iterations",
            report.mode, report.objective_value, report.solver.iterations
        );
        Ok(EXIT_OK)
    } else {
        eprintln!("solver status {:?}; report written to {}", report.solver.status, out.display());
        Ok(EXIT_NON_OPTIMAL)
    }
}

fn solve(data: &TrajectorySet, spec: &FairnessModelSpec, solver: &SolverConfig) -> Result<FairSolveReport> {
    let clock = wall_clock();
    Ok(fairlds::solve_fair_with_clock(data, spec, solver, &clock)?.report)
}

/// Seconds since the call.
pub fn wall_clock() -> impl Fn() -> f64 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_secs_f64()
}

pub fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let data = csvio::load_trajectories_csv(&a.data)?;
    let report = solve(&data, &a.spec.spec(), &a.solver.config())?;
    if let Some(path) = &a.eval_out {
        match metrics::evaluate(&data, &report) {
            Ok(ev) => report::save_json(&ev, path)?,
            Err(e) => eprintln!("warning: no evaluation written: {e}"),
        }
    }
    finish_solve(&report, &a.out)
}

pub fn cmd_eval(a: &EvalArgs) -> Result<i32> {
    let data = csvio::load_trajectories_csv(&a.data)?;
    let rep: FairSolveReport = report::load_json(&a.report)?;
    let ev = metrics::evaluate(&data, &rep)?;
    report::save_json(&ev, &a.out)?;
    Ok(EXIT_OK)
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let cfg = SweepConfig {
        seed: a.seed,
        betas: a.beta_grid.clone().unwrap_or_else(experiments::default_beta_grid),
        repeats: a.repeats,
        modes: a.modes.clone(),
        horizon: a.horizon,
        beta_a: a.beta_a,
        lambda: a.lambda,
        order: a.order,
        solver: a.solver.config(),
        ..SweepConfig::default()
    };
    let rows = experiments::run_sweep(&cfg)?;
    experiments::save_rows(&rows, &a.out)?;
    let bad = rows.iter().filter(|r| r.status != Some(ncfair_core::sdp::SolveStatus::Optimal)).count();
    if bad > 0 {
        eprintln!("warning: {bad} of {} cells did not solve to optimality", rows.len());
        return Ok(EXIT_NON_OPTIMAL);
    }
    Ok(EXIT_OK)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let cfg = BenchConfig {
        seed: a.seed,
        horizons: a.horizons.clone(),
        modes: a.modes.clone(),
        order: a.order,
        solver: a.solver.config(),
    };
    let rows = experiments::run_bench(&cfg)?;
    experiments::save_rows(&rows, &a.out)?;
    let bad = rows.iter().filter(|r| r.status != Some(ncfair_core::sdp::SolveStatus::Optimal)).count();
    if bad > 0 {
        eprintln!("warning: {bad} of {} runs did not solve to optimality", rows.len());
        return Ok(EXIT_NON_OPTIMAL);
    }
    Ok(EXIT_OK)
}

pub fn cmd_compas(a: &CompasArgs) -> Result<i32> {
    let columns = match &a.column_map {
        Some(p) => ColumnMap::from_json_file(p)?,
        None => ColumnMap::default(),
    };
    let filter = CompasFilter {
        period_days: a.period_days,
        max_priors: a.max_priors,
        ..CompasFilter::default()
    };
    let ex = compas::compas_extract(&a.csv, &filter, &columns)?;
    let data_out = a.data_out.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    csvio::save_trajectories_csv(&ex.data, &data_out)?;
    eprintln!(
        "retained {} rows in {} observations; trajectories written to {}",
        ex.retained,
        ex.data.len(),
        data_out.display()
    );
    if ex.data.is_empty() {
        return Err(ncfair_core::Error::invalid("no rows passed the filter; nothing to solve").into());
    }
    let report = solve(&ex.data, &a.spec.spec(), &a.solver.config())?;
    finish_solve(&report, &a.out)
}

pub fn cmd_export(a: &ExportArgs) -> Result<i32> {
    let data = csvio::load_trajectories_csv(&a.data)?;
    let spec = a.spec.spec();
    let model = fairlds::build_model(&data, &spec)?;
    let relax = npa::assemble_sdp(&model.problem, RelaxationOrder::new(spec.relaxation_order)?)
        .map_err(IoError::from)?;
    sdpa::export_sparse_sdpa(&relax.sdp, &a.out)?;
    Ok(EXIT_OK)
}
