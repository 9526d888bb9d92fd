//! Forecast quality and derived quantities.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairlds::FairSolveReport;
use crate::trajectory::TrajectorySet;

/// `mean^(s) = (1/|I_s|) Σ_i (1/|T_is|) Σ_t Y`.
pub fn subgroup_mean(data: &TrajectorySet, subgroup: &str) -> Result<f64> {
    let trajectories = data.trajectories(subgroup);
    if trajectories.is_empty() {
        return Err(Error::invalid(format!("subgroup '{subgroup}' has no observations")));
    }
    let mut total = 0.0;
    for i in &trajectories {
        let obs = data.trajectory(subgroup, i);
        total += obs.values().sum::<f64>() / obs.len() as f64;
    }
    Ok(total / trajectories.len() as f64)
}

/// `sqrt(Σ (Y - f_t)² / Σ (Y - mean^(s))²)` over the subgroup's observations.
pub fn nrmse(data: &TrajectorySet, forecasts: &BTreeMap<u32, f64>, subgroup: &str) -> Result<f64> {
    let mean = subgroup_mean(data, subgroup)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, y) in data.iter().filter(|(k, _)| k.subgroup == subgroup) {
        let f = forecasts
            .get(&k.period)
            .ok_or(Error::MissingForecast(k.period))?;
        num += (y - f) * (y - f);
        den += (y - mean) * (y - mean);
    }
    if den == 0.0 {
        return Err(Error::DegenerateDenominator(String::from(subgroup)));
    }
    Ok(libm::sqrt(num / den))
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::invalid("sample variance needs at least 2 values"));
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    Ok(xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// Unbiased sample covariance of vectors of equal length.
pub fn sample_covariance(xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if xs.len() < 2 {
        return Err(Error::invalid("sample covariance needs at least 2 values"));
    }
    let n = xs[0].len();
    if xs.iter().any(|x| x.len() != n) {
        return Err(Error::Dimension("vectors of different lengths".into()));
    }
    let count = xs.len() as f64;
    let mean: Vec<f64> = (0..n).map(|a| xs.iter().map(|x| x[a]).sum::<f64>() / count).collect();
    let mut cov = alloc::vec![alloc::vec![0.0; n]; n];
    for x in xs {
        for a in 0..n {
            for b in 0..n {
                cov[a][b] += (x[a] - mean[a]) * (x[b] - mean[b]);
            }
        }
    }
    for row in cov.iter_mut() {
        for c in row.iter_mut() {
            *c /= count - 1.0;
        }
    }
    Ok(cov)
}

/// `V̂` from `ν̂_t = f_t - F̂'m̂_t` and `Ŵ` from `ω̂_t = m̂_t - Ĝm̂_{t-1}`,
/// both over `T⁺`.
pub fn estimate_noise_covariances(report: &FairSolveReport) -> Result<(f64, Vec<Vec<f64>>)> {
    if !report.is_optimal() {
        return Err(Error::NonOptimal(report.solver.status));
    }
    if report.forecasts.len() < 2 {
        return Err(Error::invalid("noise covariances need at least 2 periods"));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut nu = Vec::with_capacity(report.forecasts.len());
    let mut omega = Vec::with_capacity(report.forecasts.len());
    let mut prev = report
        .state_estimates
        .get(&0)
        .ok_or_else(|| Error::invalid("report lacks the initial state"))?;
    for (t, f) in &report.forecasts {
        let m = report
            .state_estimates
            .get(t)
            .ok_or_else(|| Error::invalid(format!("report lacks the state at period {t}")))?;
        nu.push(f - dot(&report.f_estimate, m));
        omega.push(
            report
                .g_estimate
                .iter()
                .zip(m)
                .map(|(row, mt)| mt - dot(row, prev))
                .collect(),
        );
        prev = m;
    }
    Ok((sample_variance(&nu)?, sample_covariance(&omega)?))
}

/// Pure premium `Σ_t p_t (1+i)^{-t} / p_0`.
pub fn annuity_premium(survivors: &[f64], p0: f64, interest: f64) -> Result<f64> {
    if !(p0 > 0.0 && p0.is_finite()) {
        return Err(Error::invalid("p0 must be positive"));
    }
    if !(interest >= 0.0 && interest.is_finite()) {
        return Err(Error::invalid("interest rate must be >= 0"));
    }
    if survivors.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(Error::invalid("survivor counts must be >= 0"));
    }
    let mut discount = 1.0;
    let mut total = 0.0;
    for p in survivors {
        discount /= 1.0 + interest;
        total += p * discount;
    }
    Ok(total / p0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub nrmse: BTreeMap<String, f64>,
    pub means: BTreeMap<String, f64>,
    /// Max minus min of `nrmse` over subgroups.
    pub gap: f64,
    /// `Σ (Y - f_t)²` over all observations.
    pub total_loss: f64,
    pub v_hat: Option<f64>,
    pub w_hat: Option<Vec<Vec<f64>>>,
}

/// Scores `report` against `data`. Covariances are left out when the report
/// has fewer than two periods or is not optimal.
pub fn evaluate(data: &TrajectorySet, report: &FairSolveReport) -> Result<EvalReport> {
    let mut nrmse_map = BTreeMap::new();
    let mut means = BTreeMap::new();
    for s in data.subgroups() {
        means.insert(s.clone(), subgroup_mean(data, &s)?);
        nrmse_map.insert(s.clone(), nrmse(data, &report.forecasts, &s)?);
    }
    let hi = nrmse_map.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = nrmse_map.values().copied().fold(f64::INFINITY, f64::min);
    let total_loss = total_loss(data, &report.forecasts)?;
    let (v_hat, w_hat) = match estimate_noise_covariances(report) {
        Ok((v, w)) => (Some(v), Some(w)),
        Err(_) => (None, None),
    };
    Ok(EvalReport {
        nrmse: nrmse_map,
        means,
        gap: if hi >= lo { hi - lo } else { 0.0 },
        total_loss,
        v_hat,
        w_hat,
    })
}

pub fn total_loss(data: &TrajectorySet, forecasts: &BTreeMap<u32, f64>) -> Result<f64> {
    data.iter()
        .map(|(k, y)| {
            forecasts
                .get(&k.period)
                .map(|f| (y - f) * (y - f))
                .ok_or(Error::MissingForecast(k.period))
        })
        .sum()
}

/// Subgroup loss `(1/|I_s|) Σ_i (1/|T_is|) Σ_t (Y - f_t)²`, maximized over
/// subgroups.
pub fn max_subgroup_loss(data: &TrajectorySet, forecasts: &BTreeMap<u32, f64>) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for s in data.subgroups() {
        let trajectories = data.trajectories(&s);
        let mut acc = 0.0;
        for i in &trajectories {
            let obs = data.trajectory(&s, i);
            let mut sum = 0.0;
            for (t, y) in &obs {
                let f = forecasts.get(t).ok_or(Error::MissingForecast(*t))?;
                sum += (y - f) * (y - f);
            }
            acc += sum / obs.len() as f64;
        }
        worst = worst.max(acc / trajectories.len() as f64);
    }
    Ok(worst)
}
