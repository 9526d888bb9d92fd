//! The bias sweep and the relaxation-size benchmark.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use ncfair_core::datagen::{self, BiasConfig, SyntheticConfig, ADVANTAGED, DISADVANTAGED};
use ncfair_core::fairlds::{self, FairnessMode, FairnessModelSpec};
use ncfair_core::metrics;
use ncfair_core::npa::{self, RelaxationOrder};
use ncfair_core::sdp::{SolveStatus, SolverConfig};
use ncfair_core::{Error, TrajectorySet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};

/// `0.5, 0.55, ..., 0.9`.
pub fn default_beta_grid() -> Vec<f64> {
    (0..9).map(|i| 0.5 + 0.05 * f64::from(i)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub seed: u64,
    pub betas: Vec<f64>,
    pub repeats: usize,
    pub modes: Vec<FairnessMode>,
    pub horizon: usize,
    pub beta_a: f64,
    /// Advantaged trajectories kept from the generated ground set.
    pub advantaged_trajectories: usize,
    /// Overrides each mode's default λ.
    pub lambda: Option<f64>,
    pub order: usize,
    pub solver: SolverConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 1,
            betas: default_beta_grid(),
            repeats: 5,
            modes: FairnessMode::ALL.to_vec(),
            horizon: 20,
            beta_a: 1.0,
            advantaged_trajectories: 2,
            lambda: None,
            order: 1,
            solver: SolverConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(Error::invalid("beta grid is empty").into());
        }
        if let Some(b) = self.betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::invalid(format!("beta {b} is outside [0, 1]")).into());
        }
        if !(0.0..=1.0).contains(&self.beta_a) {
            return Err(Error::invalid(format!("beta_a {} is outside [0, 1]", self.beta_a)).into());
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be at least 1").into());
        }
        if self.modes.is_empty() {
            return Err(Error::invalid("no modes given").into());
        }
        if self.horizon < 2 {
            return Err(Error::invalid("horizon must be at least 2").into());
        }
        if self.advantaged_trajectories == 0 {
            return Err(Error::invalid("need at least one advantaged trajectory").into());
        }
        self.solver.validate()?;
        Ok(())
    }

    /// The unbiased observations every cell is scored against.
    pub fn ground_set(&self) -> Result<TrajectorySet> {
        let cfg = SyntheticConfig {
            horizon: self.horizon,
            ..SyntheticConfig::default()
        };
        let full = datagen::generate_dataset(&cfg, self.seed)?;
        Ok(full.truncate_trajectories(ADVANTAGED, self.advantaged_trajectories))
    }

    /// Seed of the bias draw for one (β, repeat) cell, shared by all modes.
    pub fn bias_seed(&self, beta: f64, repeat: usize) -> u64 {
        splitmix(splitmix(self.seed ^ beta.to_bits()) ^ repeat as u64)
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: FairnessMode,
    pub beta_d: f64,
    pub repeat: usize,
    pub nrmse_a: f64,
    pub nrmse_d: f64,
    pub gap: f64,
    #[serde(skip)]
    pub status: Option<SolveStatus>,
}

/// One solve per (mode, β, repeat); rows sorted by mode, β, repeat.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let ground = cfg.ground_set()?;
    let mut cells = Vec::new();
    for &mode in &cfg.modes {
        for &beta in &cfg.betas {
            for repeat in 0..cfg.repeats {
                cells.push((mode, beta, repeat));
            }
        }
    }
    cells.sort_by(|a, b| (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap());
    cells.dedup();
    cells
        .par_iter()
        .map(|&(mode, beta, repeat)| sweep_cell(cfg, &ground, mode, beta, repeat))
        .collect()
}

fn sweep_cell(
    cfg: &SweepConfig,
    ground: &TrajectorySet,
    mode: FairnessMode,
    beta_d: f64,
    repeat: usize,
) -> Result<SweepRow> {
    let bias = BiasConfig::two_group(cfg.beta_a, beta_d, cfg.bias_seed(beta_d, repeat));
    let train = datagen::apply_bias(ground, &bias)?;
    let mut spec = FairnessModelSpec::new(mode).with_order(cfg.order);
    if let Some(l) = cfg.lambda {
        spec = spec.with_lambda(l);
    }
    let report = fairlds::solve_fair(&train, &spec, &cfg.solver)?;
    let nrmse_a = metrics::nrmse(ground, &report.forecasts, ADVANTAGED)?;
    let nrmse_d = metrics::nrmse(ground, &report.forecasts, DISADVANTAGED)?;
    Ok(SweepRow {
        mode,
        beta_d,
        repeat,
        nrmse_a,
        nrmse_d,
        gap: (nrmse_a - nrmse_d).abs(),
        status: Some(report.solver.status),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub seed: u64,
    pub horizons: Vec<usize>,
    pub modes: Vec<FairnessMode>,
    pub order: usize,
    pub solver: SolverConfig,
}

pub const BENCH_REPEATS: usize = 3;

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 1,
            horizons: vec![2, 4, 6],
            modes: FairnessMode::ALL.to_vec(),
            order: 1,
            solver: SolverConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::invalid("no horizons given").into());
        }
        if let Some(h) = self.horizons.iter().find(|&&h| h < 2) {
            return Err(Error::invalid(format!("horizon {h} is below 2")).into());
        }
        if self.modes.is_empty() {
            return Err(Error::invalid("no modes given").into());
        }
        self.solver.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub mode: FairnessMode,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub moment_count: usize,
    pub sdp_dim: usize,
    pub wall_time: f64,
    #[serde(skip)]
    pub status: Option<SolveStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelaxationSize {
    pub num_operators: usize,
    pub moment_count: usize,
    pub sdp_dim: usize,
}

pub fn bench_data(seed: u64, horizon: usize) -> Result<TrajectorySet> {
    let cfg = SyntheticConfig {
        horizon,
        ..SyntheticConfig::default()
    };
    Ok(datagen::generate_dataset(&cfg, seed)?)
}

/// Sizes of the relaxation without solving it.
pub fn relaxation_size(data: &TrajectorySet, mode: FairnessMode, order: usize) -> Result<RelaxationSize> {
    let model = fairlds::build_model(data, &FairnessModelSpec::new(mode).with_order(order))?;
    let relax = npa::assemble_sdp(&model.problem, RelaxationOrder::new(order)?)?;
    Ok(RelaxationSize {
        num_operators: model.layout.count(),
        moment_count: relax.moments.len(),
        sdp_dim: relax.moment_matrix_dim(),
    })
}

/// Solves run sequentially so wall times do not compete for cores.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let mut horizons = cfg.horizons.clone();
    horizons.sort_unstable();
    horizons.dedup();
    let mut modes = cfg.modes.clone();
    modes.sort();
    modes.dedup();
    let mut rows = Vec::new();
    for &mode in &modes {
        for &horizon in &horizons {
            let data = bench_data(cfg.seed, horizon)?;
            let spec = FairnessModelSpec::new(mode).with_order(cfg.order);
            let mut total = 0.0;
            let mut last = None;
            for _ in 0..BENCH_REPEATS {
                let start = Instant::now();
                let report = fairlds::solve_fair(&data, &spec, &cfg.solver)?;
                total += start.elapsed().as_secs_f64();
                last = Some(report);
            }
            let report = last.expect("at least one repeat");
            rows.push(BenchRow {
                mode,
                horizon,
                moment_count: report.solver.num_moments,
                sdp_dim: report.solver.moment_matrix_dim,
                wall_time: total / BENCH_REPEATS as f64,
                status: Some(report.solver.status),
            });
        }
    }
    Ok(rows)
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| IoError::io("<csv>", e))?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn save_rows<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    write_rows(rows, file)
}

pub fn load_rows<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    read_rows(file)
}
