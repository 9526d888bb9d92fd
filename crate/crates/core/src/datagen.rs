//! Ground-truth LDS simulation and under-representation bias.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{ObservationKey, TrajectorySet};

pub const ADVANTAGED: &str = "advantaged";
pub const DISADVANTAGED: &str = "disadvantaged";

/// `φ_t = Gφ_{t-1} + w_t`, `Y_t = F'φ_t + v_t`, `w ~ N(0, W)`, `v ~ N(0, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub g: DMatrix<f64>,
    pub f: DVector<f64>,
    pub v: f64,
    pub w: DMatrix<f64>,
    pub m0: DVector<f64>,
}

impl SystemMatrices {
    pub fn scalar(g: f64, f: f64, v: f64, w: f64, m0: f64) -> Self {
        Self {
            g: DMatrix::from_element(1, 1, g),
            f: DVector::from_element(1, f),
            v,
            w: DMatrix::from_element(1, 1, w),
            m0: DVector::from_element(1, m0),
        }
    }

    pub fn dim(&self) -> usize {
        self.m0.len()
    }

    /// Checks shapes, `V ≥ 0` and `W` symmetric PSD; returns a factor `L`
    /// with `L L' = W`.
    fn validate(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::Dimension("state dimension is 0".into()));
        }
        if self.g.shape() != (n, n) || self.w.shape() != (n, n) || self.f.len() != n {
            return Err(Error::Dimension(format!(
                "G {:?}, F {}, W {:?} do not match state dimension {n}",
                self.g.shape(),
                self.f.len(),
                self.w.shape()
            )));
        }
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(Error::invalid(format!("V must be >= 0, got {}", self.v)));
        }
        let scale = self.w.amax().max(1.0);
        if (&self.w - self.w.transpose()).amax() > 1e-12 * scale {
            return Err(Error::NotPsd("W is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(self.w.clone());
        let lmin = eig.eigenvalues.min();
        if lmin < -1e-12 * scale {
            return Err(Error::NotPsd(format!("W has eigenvalue {lmin}")));
        }
        let sqrt = eig.eigenvalues.map(|l| libm::sqrt(l.max(0.0)));
        Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sqrt))
    }
}

/// Simulates `T` observations, deterministic given `seed`.
pub fn simulate_lds(sys: &SystemMatrices, horizon: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with_rng(sys, horizon, &mut rng)
}

fn simulate_with_rng<R: Rng>(sys: &SystemMatrices, horizon: usize, rng: &mut R) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let l = sys.validate()?;
    let n = sys.dim();
    let sv = libm::sqrt(sys.v);
    let mut phi = sys.m0.clone();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        phi = &sys.g * &phi + &l * z;
        let e: f64 = rng.sample(StandardNormal);
        out.push(sys.f.dot(&phi) + sv * e);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasConfig {
    /// Retention probability per subgroup.
    pub beta: BTreeMap<String, f64>,
    pub seed: u64,
    pub guard: bool,
}

impl BiasConfig {
    pub fn new(beta: BTreeMap<String, f64>, seed: u64) -> Self {
        Self {
            beta,
            seed,
            guard: true,
        }
    }

    /// `β_a` for the advantaged and `β_d` for the disadvantaged subgroup.
    pub fn two_group(beta_a: f64, beta_d: f64, seed: u64) -> Self {
        let mut beta = BTreeMap::new();
        beta.insert(String::from(ADVANTAGED), beta_a);
        beta.insert(String::from(DISADVANTAGED), beta_d);
        Self::new(beta, seed)
    }
}

/// Keeps each observation with probability `β` of its subgroup.
///
/// With `guard`, a (subgroup, period) pair left without observations gets one
/// of its discarded observations back, chosen uniformly.
pub fn apply_bias(full: &TrajectorySet, cfg: &BiasConfig) -> Result<TrajectorySet> {
    if full.is_empty() {
        return Err(Error::invalid("trajectory set is empty"));
    }
    let subgroups = full.subgroups();
    for (s, &b) in &cfg.beta {
        if !subgroups.contains(s) {
            return Err(Error::invalid(format!("unknown subgroup '{s}' in beta map")));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::invalid(format!("beta for '{s}' must be in [0, 1], got {b}")));
        }
    }
    if let Some(s) = subgroups.iter().find(|s| !cfg.beta.contains_key(*s)) {
        return Err(Error::invalid(format!("no beta given for subgroup '{s}'")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut kept = TrajectorySet::new();
    let mut dropped: BTreeMap<(String, u32), Vec<(ObservationKey, f64)>> = BTreeMap::new();
    let mut covered: BTreeMap<(String, u32), bool> = BTreeMap::new();
    for (key, y) in full.iter() {
        let pair = (key.subgroup.clone(), key.period);
        let keep = rng.random::<f64>() < cfg.beta[&key.subgroup];
        let seen = covered.entry(pair.clone()).or_insert(false);
        if keep {
            *seen = true;
            kept.insert(key.clone(), y)?;
        } else {
            dropped.entry(pair).or_default().push((key.clone(), y));
        }
    }
    if cfg.guard {
        for (pair, has) in &covered {
            if *has {
                continue;
            }
            let pool = &dropped[pair];
            let (key, y) = &pool[rng.random_range(0..pool.len())];
            kept.insert(key.clone(), *y)?;
        }
    }
    Ok(kept)
}

/// The synthetic experiment's ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub horizon: usize,
    pub trajectories_advantaged: usize,
    pub trajectories_disadvantaged: usize,
    pub g: DMatrix<f64>,
    pub f: DVector<f64>,
    pub m0_advantaged: f64,
    pub m0_disadvantaged: f64,
    /// `V ~ U[0, v_max)`.
    pub v_max: f64,
    /// `W = diag(u)`, `u_j ~ U[0, w_max)`.
    pub w_max: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            trajectories_advantaged: 3,
            trajectories_disadvantaged: 2,
            g: DMatrix::from_row_slice(2, 2, &[0.99, 0.0, 1.0, 0.2]),
            f: DVector::from_column_slice(&[1.1, 0.8]),
            m0_advantaged: 5.0,
            m0_disadvantaged: 7.0,
            v_max: 1.0,
            w_max: 0.1,
        }
    }
}

/// Two subgroups sharing `G`, `F`; noise covariances drawn per subgroup.
pub fn generate_dataset(cfg: &SyntheticConfig, seed: u64) -> Result<TrajectorySet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.g.nrows();
    let mut out = TrajectorySet::new();
    for (name, count, m0) in [
        (ADVANTAGED, cfg.trajectories_advantaged, cfg.m0_advantaged),
        (DISADVANTAGED, cfg.trajectories_disadvantaged, cfg.m0_disadvantaged),
    ] {
        let v = rng.random::<f64>() * cfg.v_max;
        let w = DVector::from_fn(n, |_, _| rng.random::<f64>() * cfg.w_max);
        let sys = SystemMatrices {
            g: cfg.g.clone(),
            f: cfg.f.clone(),
            v,
            w: DMatrix::from_diagonal(&w),
            m0: DVector::from_element(n, m0),
        };
        for i in 0..count {
            let ys = simulate_with_rng(&sys, cfg.horizon, &mut rng)?;
            for (t, y) in ys.into_iter().enumerate() {
                out.insert(ObservationKey::new(name, format!("{}", i + 1), t as u32 + 1), y)?;
            }
        }
    }
    Ok(out)
}

pub fn generate_paper_dataset(seed: u64) -> Result<TrajectorySet> {
    generate_dataset(&SyntheticConfig::default(), seed)
}
