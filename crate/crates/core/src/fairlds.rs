//! Subgroup-blind LDS learning as polynomial programs.
//!
//! All subgroups share one hidden trajectory `m_t` over the union of observed
//! periods `T⁺`:
//!
//! ```text
//! m_t = G m_{t-1} + ω_t        f_t = F'm_t + ν_t        t ∈ T⁺
//! ```
//!
//! with `m_{t-1}` read as the state at the previous element of `T⁺` (and
//! `m_0` before the first one). The modes differ in objective and
//! inequalities:
//!
//! * subgroup-fair: `min z + λΣν_t²`, `z ⪰ (1/|I_s|) Σ_i (1/|T_is|) Σ_t loss`
//!   for every subgroup `s`;
//! * instant-fair: `min z + λΣν_t²`, `z ⪰ loss` for every observation;
//! * unfair: `min Σ loss + λΣν_t²`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ncpoly::{Polynomial, VariableSet, Word};
use crate::npa::{self, NcpopProblem, Relaxation, RelaxationOrder};
use crate::sdp::{self, SdpSolution, SolveStatus, SolverConfig};
use crate::trajectory::{ObservationKey, TrajectorySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMode {
    SubgroupFair,
    InstantFair,
    Unfair,
}

impl FairnessMode {
    pub const ALL: [FairnessMode; 3] = [
        FairnessMode::SubgroupFair,
        FairnessMode::InstantFair,
        FairnessMode::Unfair,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FairnessMode::SubgroupFair => "subgroup_fair",
            FairnessMode::InstantFair => "instant_fair",
            FairnessMode::Unfair => "unfair",
        }
    }

    pub fn default_lambda(self) -> f64 {
        match self {
            FairnessMode::SubgroupFair => 5.0,
            FairnessMode::InstantFair | FairnessMode::Unfair => 1.0,
        }
    }
}

impl fmt::Display for FairnessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FairnessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subgroup_fair" | "subgroup-fair" => Ok(FairnessMode::SubgroupFair),
            "instant_fair" | "instant-fair" => Ok(FairnessMode::InstantFair),
            "unfair" => Ok(FairnessMode::Unfair),
            other => Err(Error::invalid(format!(
                "unknown mode '{other}' (expected subgroup_fair, instant_fair or unfair)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossEncoding {
    /// `(Y - f_t)²`.
    #[default]
    Squared,
    /// `|Y - f_t|` through the pair `e ± (Y - f_t) ⪰ 0`.
    Absolute,
}

impl FromStr for LossEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(LossEncoding::Squared),
            "absolute" => Ok(LossEncoding::Absolute),
            other => Err(Error::invalid(format!(
                "unknown loss encoding '{other}' (expected squared or absolute)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessModelSpec {
    pub mode: FairnessMode,
    pub lambda: f64,
    pub hidden_dim: usize,
    pub loss_encoding: LossEncoding,
    pub relaxation_order: usize,
    /// Defaults to `10 (1 + max |Y|)`.
    pub ball_radius: Option<f64>,
}

impl FairnessModelSpec {
    pub fn new(mode: FairnessMode) -> Self {
        Self {
            mode,
            lambda: mode.default_lambda(),
            hidden_dim: 1,
            loss_encoding: LossEncoding::Squared,
            relaxation_order: 1,
            ball_radius: None,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_order(mut self, k: usize) -> Self {
        self.relaxation_order = k;
        self
    }

    pub fn with_hidden_dim(mut self, n: usize) -> Self {
        self.hidden_dim = n;
        self
    }

    pub fn with_encoding(mut self, enc: LossEncoding) -> Self {
        self.loss_encoding = enc;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.hidden_dim == 0 {
            return Err(Error::invalid("hidden dimension must be at least 1"));
        }
        RelaxationOrder::new(self.relaxation_order)?;
        if let Some(c) = self.ball_radius {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!("ball radius must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// Positions of the model's operators in the variable set.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorLayout {
    pub hidden_dim: usize,
    /// `T⁺`, ascending.
    pub periods: Vec<u32>,
    /// `G`, row-major.
    pub g: Vec<usize>,
    pub f: Vec<usize>,
    /// `m[0]` is the initial state, `m[j + 1]` the state at `periods[j]`.
    pub m: Vec<Vec<usize>>,
    pub omega: Vec<Vec<usize>>,
    pub nu: Vec<usize>,
    pub forecast: Vec<usize>,
    pub z: Option<usize>,
    /// Epigraph variables of the absolute loss, one per observation.
    pub aux: BTreeMap<ObservationKey, usize>,
    names: Vec<String>,
}

impl OperatorLayout {
    fn new(
        hidden_dim: usize,
        periods: Vec<u32>,
        with_z: bool,
        aux_keys: Vec<ObservationKey>,
    ) -> Self {
        let n = hidden_dim;
        let mut names = Vec::new();
        let mut push = |name: String| {
            names.push(name);
            names.len() - 1
        };
        let comp = |base: String, a: usize| {
            if n == 1 {
                base
            } else {
                format!("{base}[{}]", a + 1)
            }
        };
        let mut g = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                g.push(push(if n == 1 {
                    String::from("G")
                } else {
                    format!("G[{},{}]", a + 1, b + 1)
                }));
            }
        }
        let f = (0..n).map(|a| push(comp(String::from("F"), a))).collect();
        let mut m = Vec::with_capacity(periods.len() + 1);
        m.push((0..n).map(|a| push(comp(String::from("m_0"), a))).collect());
        for t in &periods {
            m.push((0..n).map(|a| push(comp(format!("m_{t}"), a))).collect());
        }
        let omega = periods
            .iter()
            .map(|t| (0..n).map(|a| push(comp(format!("w_{t}"), a))).collect())
            .collect();
        let nu = periods.iter().map(|t| push(format!("v_{t}"))).collect();
        let forecast = periods.iter().map(|t| push(format!("f_{t}"))).collect();
        let z = with_z.then(|| push(String::from("z")));
        let aux = aux_keys
            .into_iter()
            .enumerate()
            .map(|(j, k)| (k, push(format!("e_{j}"))))
            .collect();
        Self {
            hidden_dim,
            periods,
            g,
            f,
            m,
            omega,
            nu,
            forecast,
            z,
            aux,
            names,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn count(&self) -> usize {
        self.names.len()
    }

    /// Closed-form variable count: `n² + n + (|T⁺|+1)n + |T⁺|n + 2|T⁺| + [z] + aux`.
    pub fn expected_count(hidden_dim: usize, num_periods: usize, with_z: bool, num_aux: usize) -> usize {
        let n = hidden_dim;
        n * n + n + (num_periods + 1) * n + num_periods * n + 2 * num_periods + usize::from(with_z) + num_aux
    }

    fn period_index(&self, t: u32) -> usize {
        self.periods.binary_search(&t).expect("period of an observation is in T+")
    }
}

/// A built model: the polynomial program and where its operators live.
#[derive(Debug, Clone)]
pub struct FairModel {
    pub problem: NcpopProblem,
    pub layout: OperatorLayout,
    pub spec: FairnessModelSpec,
}

struct Builder<'a> {
    vars: &'a Arc<VariableSet>,
}

impl Builder<'_> {
    fn poly(&self, terms: impl IntoIterator<Item = (Vec<usize>, f64)>) -> Result<Polynomial> {
        Polynomial::from_terms(
            self.vars,
            terms.into_iter().map(|(w, c)| (Word::from_letters(w), c)),
        )
    }

    /// `(Y - f)² = Y² - 2Y f + f²`.
    fn squared_loss(&self, y: f64, f: usize) -> Result<Polynomial> {
        self.poly([(vec![], y * y), (vec![f], -2.0 * y), (vec![f, f], 1.0)])
    }

    /// `e - (Y - f)` and `e + (Y - f)`.
    fn absolute_pair(&self, e: usize, y: f64, f: usize) -> Result<[Polynomial; 2]> {
        Ok([
            self.poly([(vec![e], 1.0), (vec![], -y), (vec![f], 1.0)])?,
            self.poly([(vec![e], 1.0), (vec![], y), (vec![f], -1.0)])?,
        ])
    }
}

/// Builds the polynomial program of `spec.mode` over `data`.
pub fn build_model(data: &TrajectorySet, spec: &FairnessModelSpec) -> Result<FairModel> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("trajectory set is empty"));
    }
    let mode = spec.mode;
    let absolute = spec.loss_encoding == LossEncoding::Absolute;
    let with_z = mode != FairnessMode::Unfair;
    let aux_keys: Vec<ObservationKey> = if absolute && mode != FairnessMode::InstantFair {
        data.iter().map(|(k, _)| k.clone()).collect()
    } else {
        Vec::new()
    };
    let layout = OperatorLayout::new(spec.hidden_dim, data.periods(), with_z, aux_keys);
    let vars = Arc::new(VariableSet::new(layout.names().iter().cloned())?);
    let b = Builder { vars: &vars };
    let n = layout.hidden_dim;

    // Dynamics.
    let mut equalities = Vec::new();
    for j in 0..layout.periods.len() {
        for a in 0..n {
            let mut terms = vec![(vec![layout.m[j + 1][a]], 1.0), (vec![layout.omega[j][a]], -1.0)];
            for c in 0..n {
                terms.push((vec![layout.g[a * n + c], layout.m[j][c]], -1.0));
            }
            equalities.push(b.poly(terms)?);
        }
        let mut terms = vec![(vec![layout.forecast[j]], 1.0), (vec![layout.nu[j]], -1.0)];
        for a in 0..n {
            terms.push((vec![layout.f[a], layout.m[j + 1][a]], -1.0));
        }
        equalities.push(b.poly(terms)?);
    }

    // Per-observation loss, plus the constraints defining it.
    let mut inequalities = Vec::new();
    let mut loss_of = |key: &ObservationKey, y: f64| -> Result<Polynomial> {
        let f = layout.forecast[layout.period_index(key.period)];
        match spec.loss_encoding {
            LossEncoding::Squared => b.squared_loss(y, f),
            LossEncoding::Absolute => {
                let e = layout.aux[key];
                inequalities.extend(b.absolute_pair(e, y, f)?);
                b.poly([(vec![e], 1.0)])
            }
        }
    };

    let mut objective = Polynomial::zero(&vars);
    for &v in &layout.nu {
        objective = objective.add(&b.poly([(vec![v, v], spec.lambda)])?)?;
    }
    let mut fairness = Vec::new();
    match mode {
        FairnessMode::Unfair => {
            for (key, y) in data.iter() {
                objective = objective.add(&loss_of(key, y)?)?;
            }
        }
        FairnessMode::SubgroupFair => {
            let z = b.poly([(vec![layout.z.expect("fair mode has z")], 1.0)])?;
            for s in data.subgroups() {
                let trajectories = data.trajectories(&s);
                if trajectories.is_empty() {
                    return Err(Error::invalid(format!("subgroup '{s}' has no observations")));
                }
                let wi = 1.0 / trajectories.len() as f64;
                let mut avg = Polynomial::zero(&vars);
                for i in &trajectories {
                    let obs = data.trajectory(&s, i);
                    let wt = 1.0 / obs.len() as f64;
                    let mut sum = Polynomial::zero(&vars);
                    for (&t, &y) in &obs {
                        sum = sum.add(&loss_of(&ObservationKey::new(s.clone(), i.clone(), t), y)?)?;
                    }
                    avg = avg.add(&sum.scale(wt).scale(wi))?;
                }
                fairness.push(z.sub(&avg)?);
            }
            objective = objective.add(&z)?;
        }
        FairnessMode::InstantFair => {
            let zi = layout.z.expect("fair mode has z");
            let z = b.poly([(vec![zi], 1.0)])?;
            for (key, y) in data.iter() {
                let f = layout.forecast[layout.period_index(key.period)];
                match spec.loss_encoding {
                    LossEncoding::Squared => fairness.push(z.sub(&b.squared_loss(y, f)?)?),
                    LossEncoding::Absolute => fairness.extend(b.absolute_pair(zi, y, f)?),
                }
            }
            objective = objective.add(&z)?;
        }
    }
    fairness.extend(inequalities);

    let radius = spec
        .ball_radius
        .unwrap_or_else(|| 10.0 * (1.0 + data.max_abs()));
    let mut problem = NcpopProblem::new(objective).with_ball(radius);
    problem.vars = Arc::clone(&vars);
    problem.inequalities = fairness;
    problem.equalities = equalities;
    Ok(FairModel {
        problem,
        layout,
        spec: spec.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub status: SolveStatus,
    pub iterations: usize,
    #[serde(with = "crate::floats")]
    pub primal_residual: f64,
    #[serde(with = "crate::floats")]
    pub dual_residual: f64,
    #[serde(with = "crate::floats")]
    pub gap: f64,
    pub wall_time: f64,
    pub num_operators: usize,
    pub num_moments: usize,
    pub moment_matrix_dim: usize,
    pub num_blocks: usize,
    pub num_equalities: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairSolveReport {
    pub mode: FairnessMode,
    pub lambda: f64,
    pub relaxation_order: usize,
    /// Observations were divided by this before solving.
    pub data_scale: f64,
    pub forecasts: BTreeMap<u32, f64>,
    /// Key 0 is the initial state.
    pub state_estimates: BTreeMap<u32, Vec<f64>>,
    pub g_estimate: Vec<Vec<f64>>,
    pub f_estimate: Vec<f64>,
    pub z_value: Option<f64>,
    #[serde(with = "crate::floats")]
    pub objective_value: f64,
    pub solver: SolverSummary,
    pub flat: Option<bool>,
}

impl FairSolveReport {
    pub fn is_optimal(&self) -> bool {
        self.solver.status == SolveStatus::Optimal
    }
}

/// Everything produced by a solve, for callers that audit the relaxation.
#[derive(Debug, Clone)]
pub struct FairSolution {
    pub report: FairSolveReport,
    pub model: FairModel,
    pub relaxation: Relaxation,
    pub solution: SdpSolution,
}

pub fn solve_fair(
    data: &TrajectorySet,
    spec: &FairnessModelSpec,
    cfg: &SolverConfig,
) -> Result<FairSolveReport> {
    solve_fair_with_clock(data, spec, cfg, &|| 0.0).map(|s| s.report)
}

/// Builds, relaxes and solves; a non-optimal solver status is reported in
/// the result, not returned as an error.
///
/// The program is solved on observations divided by `c = max |Y|` and the
/// readouts mapped back (`f, m` times `c`, `z` and the objective times `c²`,
/// or `c` under the absolute encoding with `λ` rescaled to match). This is
/// an exact change of units whenever the ball constraint is inactive; the
/// default ball radius is taken in the normalized units. `model` and
/// `relaxation` in the result are the normalized ones.
pub fn solve_fair_with_clock(
    data: &TrajectorySet,
    spec: &FairnessModelSpec,
    cfg: &SolverConfig,
    clock: &dyn Fn() -> f64,
) -> Result<FairSolution> {
    spec.validate()?;
    let scale = match data.max_abs() {
        c if c > 0.0 => c,
        _ => 1.0,
    };
    let absolute = spec.loss_encoding == LossEncoding::Absolute;
    let loss_scale = if absolute { scale } else { scale * scale };
    let normalized = data.map_values(|_, y| y / scale);
    let mut inner = spec.clone();
    if absolute {
        inner.lambda = spec.lambda * scale;
    }
    let model = build_model(&normalized, &inner)?;
    let relaxation = npa::assemble_sdp(&model.problem, RelaxationOrder::new(spec.relaxation_order)?)?;
    let solution = sdp::solve_with_clock(&relaxation.sdp, cfg, clock)?;
    let moments = relaxation.moment_values(&solution);
    let first = npa::extract_first_order(&moments, &model.problem.vars)?;
    let layout = &model.layout;
    let names = layout.names();
    let val = |i: usize| first[&names[i]];
    let n = layout.hidden_dim;

    let forecasts = layout
        .periods
        .iter()
        .zip(&layout.forecast)
        .map(|(&t, &i)| (t, scale * val(i)))
        .collect();
    let mut state_estimates = BTreeMap::new();
    state_estimates.insert(0, layout.m[0].iter().map(|&i| scale * val(i)).collect());
    for (j, &t) in layout.periods.iter().enumerate() {
        state_estimates.insert(t, layout.m[j + 1].iter().map(|&i| scale * val(i)).collect());
    }
    let g_estimate = (0..n)
        .map(|a| (0..n).map(|c| val(layout.g[a * n + c])).collect())
        .collect();
    let f_estimate = layout.f.iter().map(|&i| val(i)).collect();
    let flat = if spec.relaxation_order >= 2 && solution.status == SolveStatus::Optimal {
        Some(npa::flatness_check(
            &moments,
            &model.problem.vars,
            spec.relaxation_order,
            1e-6,
        )?)
    } else {
        None
    };
    let report = FairSolveReport {
        mode: spec.mode,
        lambda: spec.lambda,
        relaxation_order: spec.relaxation_order,
        data_scale: scale,
        forecasts,
        state_estimates,
        g_estimate,
        f_estimate,
        z_value: layout.z.map(|z| loss_scale * val(z)),
        objective_value: loss_scale * solution.objective_value,
        solver: SolverSummary {
            status: solution.status,
            iterations: solution.iterations,
            primal_residual: solution.primal_residual,
            dual_residual: solution.dual_residual,
            gap: solution.gap,
            wall_time: solution.wall_time,
            num_operators: layout.count(),
            num_moments: relaxation.moments.len(),
            moment_matrix_dim: relaxation.moment_matrix_dim(),
            num_blocks: relaxation.sdp.blocks.len(),
            num_equalities: relaxation.sdp.equalities.len(),
        },
        flat,
    };
    Ok(FairSolution {
        report,
        model,
        relaxation,
        solution,
    })
}

/// Iterates `m ← Ĝm`, `f = F̂'m` forward from the last state estimate.
pub fn forecast_next(report: &FairSolveReport, steps: usize) -> Result<Vec<f64>> {
    if !report.is_optimal() {
        return Err(Error::NonOptimal(report.solver.status));
    }
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    let (_, last) = report
        .state_estimates
        .iter()
        .next_back()
        .ok_or_else(|| Error::invalid("report has no state estimates"))?;
    let n = last.len();
    if report.f_estimate.len() != n
        || report.g_estimate.len() != n
        || report.g_estimate.iter().any(|r| r.len() != n)
    {
        return Err(Error::Dimension("system estimates do not match the state dimension".into()));
    }
    let mut m = last.clone();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        m = report
            .g_estimate
            .iter()
            .map(|row| row.iter().zip(&m).map(|(g, x)| g * x).sum())
            .collect();
        out.push(report.f_estimate.iter().zip(&m).map(|(f, x)| f * x).sum());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_subgroups(a: f64, d: f64, periods: &[u32]) -> TrajectorySet {
        let mut set = TrajectorySet::new();
        for &t in periods {
            set.insert(ObservationKey::new("a", "1", t), a).unwrap();
            set.insert(ObservationKey::new("d", "1", t), d).unwrap();
        }
        set
    }

    #[test]
    fn model_sizes_per_mode() {
        let data = two_subgroups(1.0, 2.0, &[1, 2, 3]);
        let sf = build_model(&data, &FairnessModelSpec::new(FairnessMode::SubgroupFair)).unwrap();
        assert_eq!(sf.layout.count(), 16);
        assert_eq!(sf.problem.equalities.len(), 6);
        assert_eq!(sf.problem.inequalities.len(), 2);
        assert!(sf.problem.ball_radius.is_some());

        let inst = build_model(&data, &FairnessModelSpec::new(FairnessMode::InstantFair)).unwrap();
        assert_eq!(inst.problem.inequalities.len(), 6);

        let unfair = build_model(&data, &FairnessModelSpec::new(FairnessMode::Unfair)).unwrap();
        assert_eq!(unfair.problem.inequalities.len(), 0);
        assert_eq!(unfair.layout.z, None);
        assert_eq!(unfair.layout.count(), 15);
        // Σ (Y - f)² contributes f_t² twice per period (two subgroups).
        let f1 = unfair.layout.forecast[0];
        let ff = Word::from_letters([f1, f1]);
        assert_eq!(unfair.problem.objective.coefficient(&ff), 2.0);
    }

    #[test]
    fn subgroup_weights_divide_per_trajectory() {
        // Subgroup a: trajectories of lengths 1 and 2.
        let mut data = TrajectorySet::new();
        data.insert(ObservationKey::new("a", "1", 1), 1.0).unwrap();
        data.insert(ObservationKey::new("a", "2", 1), 1.0).unwrap();
        data.insert(ObservationKey::new("a", "2", 2), 1.0).unwrap();
        let m = build_model(&data, &FairnessModelSpec::new(FairnessMode::SubgroupFair)).unwrap();
        let q = &m.problem.inequalities[0];
        let f1 = m.layout.forecast[0];
        let f2 = m.layout.forecast[1];
        // weights: 1/2 * (1/1) for traj 1, 1/2 * (1/2) for traj 2.
        assert!((q.coefficient(&Word::from_letters([f1, f1])) + 0.75).abs() < 1e-15);
        assert!((q.coefficient(&Word::from_letters([f2, f2])) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn absolute_encoding_counts() {
        let data = two_subgroups(1.0, 2.0, &[1, 2, 3]);
        let spec = FairnessModelSpec::new(FairnessMode::InstantFair).with_encoding(LossEncoding::Absolute);
        let m = build_model(&data, &spec).unwrap();
        assert_eq!(m.problem.inequalities.len(), 12);
        assert_eq!(m.problem.max_degree(), 2);
        let spec = FairnessModelSpec::new(FairnessMode::Unfair).with_encoding(LossEncoding::Absolute);
        let m = build_model(&data, &spec).unwrap();
        assert_eq!(m.layout.count(), 15 + 6);
        assert_eq!(m.problem.inequalities.len(), 12);
    }

    #[test]
    fn rejects_bad_specs() {
        let data = two_subgroups(1.0, 2.0, &[1]);
        let spec = FairnessModelSpec::new(FairnessMode::Unfair).with_lambda(-1.0);
        assert!(build_model(&data, &spec).is_err());
        let spec = FairnessModelSpec::new(FairnessMode::Unfair).with_hidden_dim(0);
        assert!(build_model(&data, &spec).is_err());
        let spec = FairnessModelSpec::new(FairnessMode::Unfair);
        assert!(build_model(&TrajectorySet::new(), &spec).is_err());
        assert!("bogus".parse::<FairnessMode>().is_err());
    }

    fn report(g: f64, f: f64, m: f64) -> FairSolveReport {
        let mut states = BTreeMap::new();
        states.insert(0, vec![0.0]);
        states.insert(4, vec![m]);
        FairSolveReport {
            mode: FairnessMode::Unfair,
            lambda: 1.0,
            relaxation_order: 1,
            data_scale: 1.0,
            forecasts: BTreeMap::new(),
            state_estimates: states,
            g_estimate: vec![vec![g]],
            f_estimate: vec![f],
            z_value: None,
            objective_value: 0.0,
            solver: SolverSummary {
                status: SolveStatus::Optimal,
                iterations: 0,
                primal_residual: 0.0,
                dual_residual: 0.0,
                gap: 0.0,
                wall_time: 0.0,
                num_operators: 0,
                num_moments: 0,
                moment_matrix_dim: 0,
                num_blocks: 0,
                num_equalities: 0,
            },
            flat: None,
        }
    }

    #[test]
    fn forecast_next_iterates_dynamics() {
        assert_eq!(forecast_next(&report(1.0, 1.0, 3.0), 2).unwrap(), vec![3.0, 3.0]);
        assert_eq!(forecast_next(&report(0.5, 2.0, 1.0), 3).unwrap(), vec![1.0, 0.5, 0.25]);
        assert!(forecast_next(&report(1.0, 1.0, 3.0), 0).is_err());
        let mut r = report(1.0, 1.0, 3.0);
        r.solver.status = SolveStatus::Inaccurate;
        assert!(matches!(forecast_next(&r, 1), Err(Error::NonOptimal(_))));
    }

    #[test]
    fn constant_data_is_fit_exactly() {
        let data = two_subgroups(3.0, 3.0, &[1, 2, 3]);
        for mode in FairnessMode::ALL {
            let r = solve_fair(&data, &FairnessModelSpec::new(mode), &SolverConfig::default()).unwrap();
            assert!(r.is_optimal(), "{mode}: {:?}", r.solver.status);
            for f in r.forecasts.values() {
                assert!((f - 3.0).abs() < 1e-3, "{mode}: {f}");
            }
            if let Some(z) = r.z_value {
                assert!(z.abs() < 1e-3, "{mode}: z = {z}");
            }
        }
    }

    #[test]
    fn minimax_midpoint() {
        let data = two_subgroups(0.0, 4.0, &[1, 2, 3]);
        let r = solve_fair(
            &data,
            &FairnessModelSpec::new(FairnessMode::InstantFair),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(r.is_optimal());
        for f in r.forecasts.values() {
            assert!((f - 2.0).abs() < 0.05, "f = {f}");
        }
        assert!((r.z_value.unwrap() - 4.0).abs() < 0.1);
    }

    #[test]
    fn minimax_scales_quadratically() {
        let c = 2.5;
        let base = two_subgroups(0.0, 4.0, &[1, 2]);
        let scaled = base.map_values(|_, y| c * y);
        let spec = FairnessModelSpec::new(FairnessMode::InstantFair);
        let cfg = SolverConfig::default();
        let z0 = solve_fair(&base, &spec, &cfg).unwrap().z_value.unwrap();
        let z1 = solve_fair(&scaled, &spec, &cfg).unwrap().z_value.unwrap();
        assert!((z1 - c * c * z0).abs() < 1e-3 * (1.0 + z1), "{z0} {z1}");
    }

    #[test]
    fn time_shift_relabels() {
        let data = two_subgroups(0.0, 4.0, &[1, 2, 4]);
        let spec = FairnessModelSpec::new(FairnessMode::SubgroupFair);
        let cfg = SolverConfig::default();
        let r0 = solve_fair(&data, &spec, &cfg).unwrap();
        let r1 = solve_fair(&data.shift_periods(5), &spec, &cfg).unwrap();
        let f0: Vec<f64> = r0.forecasts.values().copied().collect();
        let f1: Vec<f64> = r1.forecasts.values().copied().collect();
        assert_eq!(f0, f1);
        assert_eq!(r0.objective_value, r1.objective_value);
        assert_eq!(r1.forecasts.keys().copied().collect::<Vec<_>>(), [6, 7, 9]);
    }

    #[test]
    fn noiseless_recovery() {
        use crate::datagen::{simulate_lds, SystemMatrices};
        let ys = simulate_lds(&SystemMatrices::scalar(0.9, 1.0, 0.0, 0.0, 1.0), 5, 0).unwrap();
        let data = TrajectorySet::from_observations(
            ys.iter()
                .enumerate()
                .map(|(t, &y)| (ObservationKey::new("s", "1", t as u32 + 1), y)),
        )
        .unwrap();
        let r = solve_fair(
            &data,
            &FairnessModelSpec::new(FairnessMode::Unfair).with_lambda(1.0),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(r.is_optimal());
        for (t, y) in ys.iter().enumerate() {
            assert!((r.forecasts[&(t as u32 + 1)] - y).abs() < 1e-2);
        }
        assert!(r.objective_value <= 1e-3);
    }

    /// `max_θ min_f θ L_a(f) + (1-θ) L_b(f)` on a fine grid; the inner
    /// minimum is a weighted per-period mean.
    fn two_group_minimax_oracle(data: &TrajectorySet) -> f64 {
        let groups = data.subgroups();
        assert_eq!(groups.len(), 2);
        let mut weighted = Vec::new();
        for (g, s) in groups.iter().enumerate() {
            let trajectories = data.trajectories(s);
            for i in &trajectories {
                let obs = data.trajectory(s, i);
                for (&t, &y) in &obs {
                    weighted.push((g, t, y, 1.0 / (trajectories.len() * obs.len()) as f64));
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        for step in 0..=4000 {
            let th = step as f64 / 4000.0;
            let wg = |g: usize| if g == 0 { th } else { 1.0 - th };
            let mut num = BTreeMap::<u32, f64>::new();
            let mut den = BTreeMap::<u32, f64>::new();
            for &(g, t, y, w) in &weighted {
                *num.entry(t).or_default() += wg(g) * w * y;
                *den.entry(t).or_default() += wg(g) * w;
            }
            let value: f64 = weighted
                .iter()
                .map(|&(g, t, y, w)| {
                    let f = if den[&t] > 0.0 { num[&t] / den[&t] } else { 0.0 };
                    wg(g) * w * (y - f) * (y - f)
                })
                .sum();
            best = best.max(value);
        }
        best
    }

    fn uneven_fixture() -> TrajectorySet {
        let obs = [
            ("a", "1", 1, 10.2),
            ("a", "1", 2, 10.9),
            ("a", "1", 4, 10.1),
            ("a", "2", 1, 9.7),
            ("a", "2", 3, 10.4),
            ("d", "1", 2, 14.1),
            ("d", "1", 3, 14.8),
            ("d", "1", 4, 13.9),
        ];
        TrajectorySet::from_observations(
            obs.iter().map(|&(s, i, t, y)| (ObservationKey::new(s, i, t), y)),
        )
        .unwrap()
    }

    #[test]
    fn subgroup_fair_matches_minimax_oracle() {
        let data = uneven_fixture();
        let r = solve_fair(
            &data,
            &FairnessModelSpec::new(FairnessMode::SubgroupFair).with_lambda(0.0),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(r.is_optimal());
        let oracle = two_group_minimax_oracle(&data);
        let z = r.z_value.unwrap();
        assert!((z - oracle).abs() < 1e-3 * (1.0 + oracle), "z = {z}, oracle = {oracle}");
    }

    #[test]
    fn mode_ordering() {
        use crate::metrics::{max_subgroup_loss, total_loss};
        let data = uneven_fixture();
        let cfg = SolverConfig::default();
        let tol = 10.0 * cfg.tolerance;
        let lambda = 1.0;
        let fair = solve_fair(&data, &FairnessModelSpec::new(FairnessMode::SubgroupFair).with_lambda(lambda), &cfg).unwrap();
        let unfair = solve_fair(&data, &FairnessModelSpec::new(FairnessMode::Unfair).with_lambda(lambda), &cfg).unwrap();
        let tl_u = total_loss(&data, &unfair.forecasts).unwrap();
        let tl_f = total_loss(&data, &fair.forecasts).unwrap();
        assert!(tl_u <= tl_f + tol * (1.0 + tl_f), "{tl_u} vs {tl_f}");
        let ml_f = max_subgroup_loss(&data, &fair.forecasts).unwrap();
        let ml_u = max_subgroup_loss(&data, &unfair.forecasts).unwrap();
        assert!(ml_f <= ml_u + tol * (1.0 + ml_u), "{ml_f} vs {ml_u}");
    }

    #[test]
    fn absolute_encoding_minimax() {
        // |Y - f| minimax between 0 and 4 is 2 at f = 2.
        let data = two_subgroups(0.0, 4.0, &[1, 2]);
        let spec = FairnessModelSpec::new(FairnessMode::InstantFair).with_encoding(LossEncoding::Absolute);
        let r = solve_fair(&data, &spec, &SolverConfig::default()).unwrap();
        assert!(r.is_optimal());
        assert!((r.z_value.unwrap() - 2.0).abs() < 1e-3);
        for f in r.forecasts.values() {
            assert!((f - 2.0).abs() < 1e-2);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn layout_count_matches_formula(
            subgroups in 1usize..4,
            trajectories in 1usize..3,
            horizon in 1u32..5,
            n in 1usize..3,
            mode in 0usize..3,
            absolute in any::<bool>(),
        ) {
            let mut data = TrajectorySet::new();
            for s in 0..subgroups {
                for i in 0..trajectories {
                    for t in 1..=horizon {
                        if (s + i + t as usize) % 3 != 0 || t == 1 {
                            data.insert(ObservationKey::new(format!("s{s}"), format!("{i}"), t), t as f64).unwrap();
                        }
                    }
                }
            }
            let mode = FairnessMode::ALL[mode];
            let enc = if absolute { LossEncoding::Absolute } else { LossEncoding::Squared };
            let spec = FairnessModelSpec::new(mode).with_hidden_dim(n).with_encoding(enc);
            let m = build_model(&data, &spec).unwrap();
            let periods = data.periods().len();
            let with_z = mode != FairnessMode::Unfair;
            let aux = if absolute && mode != FairnessMode::InstantFair { data.len() } else { 0 };
            prop_assert_eq!(m.layout.count(), OperatorLayout::expected_count(n, periods, with_z, aux));
            prop_assert_eq!(m.problem.equalities.len(), periods * (n + 1));
            let expected_ineq = match (mode, absolute) {
                (FairnessMode::SubgroupFair, false) => subgroups,
                (FairnessMode::SubgroupFair, true) => subgroups + 2 * data.len(),
                (FairnessMode::InstantFair, false) => data.len(),
                (FairnessMode::InstantFair, true) => 2 * data.len(),
                (FairnessMode::Unfair, false) => 0,
                (FairnessMode::Unfair, true) => 2 * data.len(),
            };
            prop_assert_eq!(m.problem.inequalities.len(), expected_ineq);
        }
    }
}
