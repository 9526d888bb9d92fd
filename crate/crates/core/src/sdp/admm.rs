//! Operator-splitting (ADMM) solver over products of zero and PSD cones.
//!
//! The SDP is rewritten in conic form `A y + s = b`, `s ∈ K`, where the
//! equalities contribute zero-cone rows and every block contributes the
//! svec rows of `-Σ y_v A_v` with `b = svec(C)`. Each iteration solves one
//! regularized normal-equation system with warm-started conjugate
//! gradients and projects onto the cones by symmetric eigendecomposition.
//! The problem is Ruiz-equilibrated first; PSD rows share one row scale per
//! block so the cone is preserved.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{
    dot, norm_inf, pcg, project_psd, svec_eigenvalues, svec_index, svec_len, Csr, PcgWork, SQRT2,
};
use super::{SdpProblem, SdpSolution, SolveStatus, SolverConfig};
use crate::error::Result;

const SIGMA: f64 = 1e-6;
const RELAX: f64 = 1.6;
const EQ_RHO_FACTOR: f64 = 1e3;
const CHECK_EVERY: usize = 10;
const ADAPT_EVERY: usize = 50;
const INFEAS_EVERY: usize = 50;
const INFEAS_TOL: f64 = 1e-5;
const CG_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy)]
enum Cone {
    Zero { offset: usize, len: usize },
    Psd { offset: usize, dim: usize },
}

struct Conic {
    n: usize,
    m: usize,
    a: Csr,
    at: Csr,
    b: Vec<f64>,
    q: Vec<f64>,
    cones: Vec<Cone>,
    is_eq: Vec<bool>,
    /// Column scaling, `y = D ŷ`.
    d: Vec<f64>,
    /// Row scaling, `ŝ = E s`.
    e: Vec<f64>,
    cost_scale: f64,
}

fn conic_form(prob: &SdpProblem) -> (Vec<Vec<(usize, f64)>>, Vec<f64>, Vec<Cone>, Vec<bool>) {
    let mut rows = Vec::new();
    let mut b = Vec::new();
    let mut cones = Vec::new();
    let mut is_eq = Vec::new();
    if !prob.equalities.is_empty() {
        cones.push(Cone::Zero {
            offset: 0,
            len: prob.equalities.len(),
        });
        for eq in &prob.equalities {
            rows.push(eq.coeffs.clone());
            b.push(eq.rhs);
            is_eq.push(true);
        }
    }
    for block in &prob.blocks {
        let offset = rows.len();
        let len = svec_len(block.dim);
        rows.resize(offset + len, Vec::new());
        b.resize(offset + len, 0.0);
        is_eq.resize(offset + len, false);
        for entry in &block.entries {
            let w = if entry.row == entry.col { 1.0 } else { SQRT2 };
            let r = offset + svec_index(entry.row, entry.col);
            rows[r] = entry.coeffs.iter().map(|&(v, c)| (v, -w * c)).collect();
            b[r] = w * entry.constant;
        }
        cones.push(Cone::Psd {
            offset,
            dim: block.dim,
        });
    }
    (rows, b, cones, is_eq)
}

fn clamp_scale(v: f64) -> f64 {
    v.clamp(1e-4, 1e4)
}

impl Conic {
    fn build(prob: &SdpProblem, scaling: bool) -> Self {
        let n = prob.num_vars;
        let (mut rows, mut b, cones, is_eq) = conic_form(prob);
        let m = rows.len();
        let mut q = vec![0.0; n];
        for &(v, c) in &prob.objective {
            q[v] += c;
        }
        let mut d = vec![1.0; n];
        let mut e = vec![1.0; m];
        let mut cost_scale = 1.0;
        if scaling {
            for _ in 0..15 {
                let mut col_norm = vec![0.0f64; n];
                let mut row_norm = vec![0.0f64; m];
                for (r, row) in rows.iter().enumerate() {
                    for &(c, v) in row {
                        col_norm[c] = col_norm[c].max(v.abs());
                        row_norm[r] = row_norm[r].max(v.abs());
                    }
                }
                for cone in &cones {
                    if let Cone::Psd { offset, dim } = *cone {
                        let span = offset..offset + svec_len(dim);
                        let mx = row_norm[span.clone()].iter().fold(0.0f64, |a, &v| a.max(v));
                        row_norm[span].fill(mx);
                    }
                }
                let dc: Vec<f64> = col_norm
                    .iter()
                    .map(|&v| if v > 0.0 { clamp_scale(1.0 / libm::sqrt(v)) } else { 1.0 })
                    .collect();
                let er: Vec<f64> = row_norm
                    .iter()
                    .map(|&v| if v > 0.0 { clamp_scale(1.0 / libm::sqrt(v)) } else { 1.0 })
                    .collect();
                for (r, row) in rows.iter_mut().enumerate() {
                    for (c, v) in row.iter_mut() {
                        *v *= er[r] * dc[*c];
                    }
                }
                for (di, s) in d.iter_mut().zip(&dc) {
                    *di *= s;
                }
                for (ei, s) in e.iter_mut().zip(&er) {
                    *ei *= s;
                }
            }
            let qn = q.iter().zip(&d).fold(0.0f64, |a, (qi, di)| a.max((qi * di).abs()));
            if qn > 0.0 {
                cost_scale = clamp_scale(1.0 / qn);
            }
        }
        for (bi, ei) in b.iter_mut().zip(&e) {
            *bi *= ei;
        }
        for (qi, di) in q.iter_mut().zip(&d) {
            *qi *= di * cost_scale;
        }
        let a = Csr::from_rows(n, &rows);
        let at = a.transpose();
        Self {
            n,
            m,
            a,
            at,
            b,
            q,
            cones,
            is_eq,
            d,
            e,
            cost_scale,
        }
    }

    fn project(&self, v: &mut [f64]) {
        for cone in &self.cones {
            match *cone {
                Cone::Zero { offset, len } => v[offset..offset + len].fill(0.0),
                Cone::Psd { offset, dim } => project_psd(&mut v[offset..offset + svec_len(dim)], dim),
            }
        }
    }
}

/// Gaussian elimination on the equality rows; `false` when they are
/// contradictory.
fn equalities_consistent(prob: &SdpProblem) -> bool {
    let mut pivots: BTreeMap<usize, (BTreeMap<usize, f64>, f64)> = BTreeMap::new();
    for eq in &prob.equalities {
        let scale = eq.coeffs.iter().fold(eq.rhs.abs(), |a, &(_, c)| a.max(c.abs())).max(1.0);
        let mut row: BTreeMap<usize, f64> = eq.coeffs.iter().copied().collect();
        let mut rhs = eq.rhs;
        loop {
            row.retain(|_, v| v.abs() > 1e-12 * scale);
            let Some((&col, &coef)) = row.iter().next() else {
                break;
            };
            match pivots.get(&col) {
                Some((prow, prhs)) => {
                    for (&c, &v) in prow {
                        *row.entry(c).or_insert(0.0) -= coef * v;
                    }
                    row.remove(&col);
                    rhs -= coef * prhs;
                }
                None => {
                    let normalized = row.iter().map(|(&c, &v)| (c, v / coef)).collect();
                    pivots.insert(col, (normalized, rhs / coef));
                    rhs = 0.0;
                    row.clear();
                    break;
                }
            }
        }
        if row.is_empty() && rhs.abs() > 1e-9 * scale {
            return false;
        }
    }
    true
}

struct Residuals {
    primal: f64,
    dual: f64,
    gap: f64,
}

fn verify_point(prob: &SdpProblem, y: &[f64], tol: f64) -> bool {
    if prob.equality_residual(y) > tol * (1.0 + prob.max_abs_rhs()) {
        return false;
    }
    prob.blocks.iter().all(|block| {
        let dense = block.evaluate(y);
        let ev = super::linalg::symmetric_eigenvalues(&dense, block.dim);
        let lmin = ev[0];
        let lmax = ev[ev.len() - 1];
        lmin >= -tol * (1.0 + lmax.max(0.0))
    })
}

fn terminal(
    prob: &SdpProblem,
    status: SolveStatus,
    objective_value: f64,
    iterations: usize,
) -> SdpSolution {
    SdpSolution {
        values: vec![0.0; prob.num_vars],
        objective_value,
        status,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        gap: f64::NAN,
        iterations,
        wall_time: 0.0,
    }
}

/// Solves without timing (`wall_time` is 0).
pub fn solve(prob: &SdpProblem, cfg: &SolverConfig) -> Result<SdpSolution> {
    solve_with_clock(prob, cfg, &|| 0.0)
}

/// Solves, measuring `wall_time` with the supplied clock (seconds).
pub fn solve_with_clock(
    prob: &SdpProblem,
    cfg: &SolverConfig,
    clock: &dyn Fn() -> f64,
) -> Result<SdpSolution> {
    cfg.validate()?;
    // Re-validate in case the caller built the struct by hand.
    let prob = &SdpProblem::new(
        prob.num_vars,
        prob.objective.clone(),
        prob.blocks.clone(),
        prob.equalities.clone(),
        prob.variable_names.clone(),
    )?;
    let start = clock();
    let mut sol = run(prob, cfg);
    sol.wall_time = clock() - start;
    Ok(sol)
}

fn run(prob: &SdpProblem, cfg: &SolverConfig) -> SdpSolution {
    if !equalities_consistent(prob) {
        return terminal(prob, SolveStatus::Infeasible, f64::INFINITY, 0);
    }
    let w = Conic::build(prob, cfg.scaling);
    let (n, m) = (w.n, w.m);
    let tol = cfg.tolerance;

    let mut rho = 0.1;
    let mut rho_vec = vec![0.0; m];
    let mut inv_diag = vec![0.0; n];
    let set_rho = |rho: f64, rho_vec: &mut [f64], inv_diag: &mut [f64]| {
        for (r, rv) in rho_vec.iter_mut().enumerate() {
            *rv = if w.is_eq[r] { rho * EQ_RHO_FACTOR } else { rho };
        }
        for (c, inv) in inv_diag.iter_mut().enumerate() {
            let mut acc = SIGMA;
            for k in w.at.row_range(c) {
                let v = w.at.data[k];
                acc += rho_vec[w.at.indices[k]] * v * v;
            }
            *inv = 1.0 / acc;
        }
    };
    set_rho(rho, &mut rho_vec, &mut inv_diag);

    let mut x = vec![0.0; n];
    let mut xt = vec![0.0; n];
    let mut s = vec![0.0; m];
    let mut lam = vec![0.0; m];
    let mut rhs = vec![0.0; n];
    let mut tmp_m = vec![0.0; m];
    let mut ax = vec![0.0; m];
    let mut st = vec![0.0; m];
    let mut shat = vec![0.0; m];
    let mut atl = vec![0.0; n];
    let mut work = PcgWork::default();
    let mut x_prev = vec![0.0; n];
    let mut lam_prev = vec![0.0; m];
    let mut eps_scale = 1.0;
    let mut pinf_hits = 0;
    let mut dinf_hits = 0;
    let mut last = Residuals {
        primal: f64::INFINITY,
        dual: f64::INFINITY,
        gap: f64::INFINITY,
    };

    for iter in 1..=cfg.max_iterations {
        let infeas_iter = iter % INFEAS_EVERY == 0 && iter >= 4 * INFEAS_EVERY;
        if infeas_iter {
            x_prev.copy_from_slice(&x);
            lam_prev.copy_from_slice(&lam);
        }

        for r in 0..m {
            tmp_m[r] = rho_vec[r] * (w.b[r] - s[r]) + lam[r];
        }
        w.at.mul_vec(&tmp_m, &mut rhs);
        for c in 0..n {
            rhs[c] += SIGMA * x[c] - w.q[c];
        }
        solve_kkt(&w, &rho_vec, &rhs, &mut xt, &inv_diag, &mut work);

        w.a.mul_vec(&xt, &mut ax);
        for r in 0..m {
            st[r] = w.b[r] - ax[r];
        }
        for c in 0..n {
            x[c] = RELAX * xt[c] + (1.0 - RELAX) * x[c];
        }
        for r in 0..m {
            shat[r] = RELAX * st[r] + (1.0 - RELAX) * s[r];
            tmp_m[r] = shat[r] + lam[r] / rho_vec[r];
        }
        w.project(&mut tmp_m);
        for r in 0..m {
            lam[r] += rho_vec[r] * (shat[r] - tmp_m[r]);
            s[r] = tmp_m[r];
        }

        if infeas_iter {
            if primal_infeasible(&w, &lam, &lam_prev, &mut atl) {
                pinf_hits += 1;
                if pinf_hits >= 2 {
                    return terminal(prob, SolveStatus::Infeasible, f64::INFINITY, iter);
                }
            } else {
                pinf_hits = 0;
            }
            if dual_infeasible(&w, &x, &x_prev, &mut ax) {
                dinf_hits += 1;
                if dinf_hits >= 2 {
                    return terminal(prob, SolveStatus::Unbounded, f64::NEG_INFINITY, iter);
                }
            } else {
                dinf_hits = 0;
            }
        }

        let adapt = iter % ADAPT_EVERY == 0;
        if iter % CHECK_EVERY == 0 || adapt || iter == cfg.max_iterations {
            let (res, scaled_ratio) = residuals(&w, &x, &s, &lam, &mut ax, &mut atl);
            last = res;
            let eps = tol * eps_scale;
            if last.primal <= eps && last.dual <= eps && last.gap <= eps {
                let y: Vec<f64> = x.iter().zip(&w.d).map(|(xi, di)| xi * di).collect();
                if verify_point(prob, &y, tol) {
                    return SdpSolution {
                        objective_value: prob.objective_value(&y),
                        values: y,
                        status: SolveStatus::Optimal,
                        primal_residual: last.primal,
                        dual_residual: last.dual,
                        gap: last.gap,
                        iterations: iter,
                        wall_time: 0.0,
                    };
                }
                eps_scale = (eps_scale * 0.1).max(1e-4);
            }
            if adapt && scaled_ratio.is_finite() && scaled_ratio > 0.0 {
                let ratio = libm::sqrt(scaled_ratio);
                if !(0.2..=5.0).contains(&ratio) {
                    rho = (rho * ratio).clamp(1e-6, 1e6);
                    set_rho(rho, &mut rho_vec, &mut inv_diag);
                }
            }
        }
    }

    let y: Vec<f64> = x.iter().zip(&w.d).map(|(xi, di)| xi * di).collect();
    let worst = last.primal.max(last.dual).max(last.gap);
    let status = if worst <= 100.0 * tol {
        SolveStatus::Inaccurate
    } else {
        SolveStatus::IterationLimit
    };
    SdpSolution {
        objective_value: prob.objective_value(&y),
        values: y,
        status,
        primal_residual: last.primal,
        dual_residual: last.dual,
        gap: last.gap,
        iterations: cfg.max_iterations,
        wall_time: 0.0,
    }
}

fn solve_kkt(
    w: &Conic,
    rho_vec: &[f64],
    rhs: &[f64],
    xt: &mut [f64],
    inv_diag: &[f64],
    work: &mut PcgWork,
) {
    let mut scratch = vec![0.0; w.m];
    let apply = |v: &[f64], out: &mut [f64]| {
        w.a.mul_vec(v, &mut scratch);
        for (sv, r) in scratch.iter_mut().zip(rho_vec) {
            *sv *= r;
        }
        w.at.mul_vec(&scratch, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o += SIGMA * vi;
        }
    };
    pcg(apply, inv_diag, rhs, xt, CG_TOL, 10 * w.n + 100, work);
}

/// Unscaled relative residuals; the second value is the scaled
/// primal/dual residual ratio used for step-size adaptation.
fn residuals(
    w: &Conic,
    x: &[f64],
    s: &[f64],
    lam: &[f64],
    ax: &mut [f64],
    atl: &mut [f64],
) -> (Residuals, f64) {
    w.a.mul_vec(x, ax);
    w.at.mul_vec(lam, atl);
    let cs = w.cost_scale;

    let (mut rp, mut axn, mut sn, mut bn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut rp_s, mut axn_s, mut sn_s, mut bn_s) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for r in 0..w.m {
        let res = ax[r] + s[r] - w.b[r];
        let e = w.e[r];
        rp = rp.max((res / e).abs());
        axn = axn.max((ax[r] / e).abs());
        sn = sn.max((s[r] / e).abs());
        bn = bn.max((w.b[r] / e).abs());
        rp_s = rp_s.max(res.abs());
        axn_s = axn_s.max(ax[r].abs());
        sn_s = sn_s.max(s[r].abs());
        bn_s = bn_s.max(w.b[r].abs());
    }
    let (mut rd, mut qn, mut atln) = (0.0f64, 0.0f64, 0.0f64);
    let (mut rd_s, mut qn_s, mut atln_s) = (0.0f64, 0.0f64, 0.0f64);
    for c in 0..w.n {
        let f = 1.0 / (w.d[c] * cs);
        let res = w.q[c] - atl[c];
        rd = rd.max((res * f).abs());
        qn = qn.max((w.q[c] * f).abs());
        atln = atln.max((atl[c] * f).abs());
        rd_s = rd_s.max(res.abs());
        qn_s = qn_s.max(w.q[c].abs());
        atln_s = atln_s.max(atl[c].abs());
    }
    let pobj = dot(&w.q, x) / cs;
    let dobj = dot(&w.b, lam) / cs;
    let res = Residuals {
        primal: rp / (1.0 + axn.max(sn).max(bn)),
        dual: rd / (1.0 + qn.max(atln)),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
    };
    let p_rel = rp_s / axn_s.max(sn_s).max(bn_s).max(1e-10);
    let d_rel = rd_s / qn_s.max(atln_s).max(1e-10);
    (res, p_rel / d_rel.max(1e-300))
}

fn max_eigen(v: &[f64], dim: usize) -> f64 {
    svec_eigenvalues(v, dim).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min_eigen(v: &[f64], dim: usize) -> f64 {
    svec_eigenvalues(v, dim).into_iter().fold(f64::INFINITY, f64::min)
}

/// Farkas test on the dual increment: `A'δλ ≈ 0`, `δλ` in the polar cone
/// and `b'δλ > 0` certify that `{A y + s = b, s ∈ K}` is empty.
fn primal_infeasible(w: &Conic, lam: &[f64], lam_prev: &[f64], atl: &mut [f64]) -> bool {
    let cs = w.cost_scale;
    let dl: Vec<f64> = lam.iter().zip(lam_prev).map(|(a, b)| a - b).collect();
    let dl_u: Vec<f64> = dl.iter().zip(&w.e).map(|(v, e)| v * e / cs).collect();
    let nrm = norm_inf(&dl_u);
    if nrm < 1e-10 {
        return false;
    }
    w.at.mul_vec(&dl, atl);
    let at_n = atl
        .iter()
        .zip(&w.d)
        .fold(0.0f64, |a, (v, d)| a.max((v / (d * cs)).abs()));
    if at_n > INFEAS_TOL * nrm {
        return false;
    }
    if dot(&w.b, &dl) / cs <= INFEAS_TOL * nrm {
        return false;
    }
    w.cones.iter().all(|cone| match *cone {
        Cone::Zero { .. } => true,
        Cone::Psd { offset, dim } => {
            max_eigen(&dl_u[offset..offset + svec_len(dim)], dim) <= INFEAS_TOL * nrm
        }
    })
}

/// Recession test on the primal increment: `q'δy < 0` with `-A δy ∈ K`.
fn dual_infeasible(w: &Conic, x: &[f64], x_prev: &[f64], ax: &mut [f64]) -> bool {
    let dx: Vec<f64> = x.iter().zip(x_prev).map(|(a, b)| a - b).collect();
    let nrm = dx
        .iter()
        .zip(&w.d)
        .fold(0.0f64, |a, (v, d)| a.max((v * d).abs()));
    if nrm < 1e-10 {
        return false;
    }
    if dot(&w.q, &dx) / w.cost_scale >= -INFEAS_TOL * nrm {
        return false;
    }
    w.a.mul_vec(&dx, ax);
    let neg: Vec<f64> = ax.iter().zip(&w.e).map(|(v, e)| -v / e).collect();
    w.cones.iter().all(|cone| match *cone {
        Cone::Zero { offset, len } => norm_inf(&neg[offset..offset + len]) <= INFEAS_TOL * nrm,
        Cone::Psd { offset, dim } => {
            min_eigen(&neg[offset..offset + svec_len(dim)], dim) >= -INFEAS_TOL * nrm
        }
    })
}
