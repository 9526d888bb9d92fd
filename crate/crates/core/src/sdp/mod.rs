//! Block semidefinite programs with linear equality constraints.
//!
//! ```text
//! minimize    c'y
//! subject to  C_j + Σ_v y_v A_{j,v} ⪰ 0   for every block j
//!             a_e'y = b_e                 for every equality e
//! ```
//!
//! Blocks are stored as their upper triangle; the lower triangle is implied.

mod admm;
mod linalg;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use admm::{solve, solve_with_clock};
pub use linalg::{block_matrix, symmetric_eigenvalues};

/// Sparse linear form `Σ coeff * y_var`, sorted by variable.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockEntry {
    pub row: usize,
    pub col: usize,
    pub constant: f64,
    pub coeffs: SparseRow,
}

/// Symmetric affine matrix map required to be PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    pub dim: usize,
    /// Upper-triangle entries (`row <= col`), sorted by `(row, col)`.
    pub entries: Vec<BlockEntry>,
}

impl PsdBlock {
    /// Dense value of the block at `y`.
    pub fn evaluate(&self, y: &[f64]) -> Vec<f64> {
        let mut m = alloc::vec![0.0; self.dim * self.dim];
        for e in &self.entries {
            let v = e.constant + e.coeffs.iter().map(|&(k, c)| c * y[k]).sum::<f64>();
            m[e.row * self.dim + e.col] = v;
            m[e.col * self.dim + e.row] = v;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearEquality {
    pub coeffs: SparseRow,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub num_vars: usize,
    pub objective: SparseRow,
    pub blocks: Vec<PsdBlock>,
    pub equalities: Vec<LinearEquality>,
    pub variable_names: Vec<String>,
}

fn normalize_row(row: &mut SparseRow, num_vars: usize, what: &str) -> Result<()> {
    if let Some(&(v, _)) = row.iter().find(|&&(v, _)| v >= num_vars) {
        return Err(Error::Dimension(format!(
            "{what} references variable {v} of {num_vars}"
        )));
    }
    if let Some(&(_, c)) = row.iter().find(|&&(_, c)| !c.is_finite()) {
        return Err(Error::invalid(format!("{what} has non-finite coefficient {c}")));
    }
    row.sort_by_key(|&(v, _)| v);
    let mut merged: SparseRow = Vec::with_capacity(row.len());
    for &(v, c) in row.iter() {
        match merged.last_mut() {
            Some(last) if last.0 == v => last.1 += c,
            _ => merged.push((v, c)),
        }
    }
    merged.retain(|&(_, c)| c != 0.0);
    *row = merged;
    Ok(())
}

impl SdpProblem {
    /// Validates and normalizes: coefficients sorted and merged, zeros
    /// dropped, lower-triangle entries folded onto the upper triangle.
    pub fn new(
        num_vars: usize,
        objective: SparseRow,
        blocks: Vec<PsdBlock>,
        equalities: Vec<LinearEquality>,
        variable_names: Vec<String>,
    ) -> Result<Self> {
        let mut p = Self {
            num_vars,
            objective,
            blocks,
            equalities,
            variable_names,
        };
        p.normalize()?;
        Ok(p)
    }

    /// Names `y0, y1, ...`.
    pub fn default_names(num_vars: usize) -> Vec<String> {
        (0..num_vars).map(|i| format!("y{i}")).collect()
    }

    fn normalize(&mut self) -> Result<()> {
        if self.num_vars == 0 {
            return Err(Error::Dimension("problem has no variables".into()));
        }
        if self.variable_names.len() != self.num_vars {
            return Err(Error::Dimension(format!(
                "{} variable names for {} variables",
                self.variable_names.len(),
                self.num_vars
            )));
        }
        normalize_row(&mut self.objective, self.num_vars, "objective")?;
        for (b, block) in self.blocks.iter_mut().enumerate() {
            if block.dim == 0 {
                return Err(Error::Dimension(format!("block {b} has dimension 0")));
            }
            let mut merged: Vec<BlockEntry> = Vec::with_capacity(block.entries.len());
            let mut entries = core::mem::take(&mut block.entries);
            for e in entries.iter_mut() {
                if e.row >= block.dim || e.col >= block.dim {
                    return Err(Error::Dimension(format!(
                        "block {b} entry ({}, {}) outside dimension {}",
                        e.row, e.col, block.dim
                    )));
                }
                if e.row > e.col {
                    core::mem::swap(&mut e.row, &mut e.col);
                }
                if !e.constant.is_finite() {
                    return Err(Error::invalid(format!("block {b} has non-finite constant")));
                }
            }
            entries.sort_by_key(|e| (e.row, e.col));
            for e in entries {
                match merged.last_mut() {
                    Some(last) if (last.row, last.col) == (e.row, e.col) => {
                        last.constant += e.constant;
                        last.coeffs.extend(e.coeffs);
                    }
                    _ => merged.push(e),
                }
            }
            for e in merged.iter_mut() {
                normalize_row(&mut e.coeffs, self.num_vars, "block entry")?;
            }
            merged.retain(|e| e.constant != 0.0 || !e.coeffs.is_empty());
            block.entries = merged;
        }
        for eq in self.equalities.iter_mut() {
            normalize_row(&mut eq.coeffs, self.num_vars, "equality")?;
            if !eq.rhs.is_finite() {
                return Err(Error::invalid("equality has non-finite right-hand side"));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * y[v]).sum()
    }

    /// Max over equalities of `|a'y - b|`.
    pub fn equality_residual(&self, y: &[f64]) -> f64 {
        self.equalities
            .iter()
            .map(|e| (e.coeffs.iter().map(|&(v, c)| c * y[v]).sum::<f64>() - e.rhs).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_rhs(&self) -> f64 {
        self.equalities.iter().map(|e| e.rhs.abs()).fold(0.0, f64::max)
    }

    pub fn total_block_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Inaccurate,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Inaccurate => "inaccurate",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration_limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub values: Vec<f64>,
    #[serde(with = "crate::floats")]
    pub objective_value: f64,
    pub status: SolveStatus,
    #[serde(with = "crate::floats")]
    pub primal_residual: f64,
    #[serde(with = "crate::floats")]
    pub dual_residual: f64,
    #[serde(with = "crate::floats")]
    pub gap: f64,
    pub iterations: usize,
    pub wall_time: f64,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub scaling: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 50_000,
            scaling: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn new_normalizes_entries() {
        let p = SdpProblem::new(
            2,
            vec![(1, 1.0), (0, 0.0), (1, 1.0)],
            vec![PsdBlock {
                dim: 2,
                entries: vec![
                    BlockEntry { row: 1, col: 0, constant: 0.0, coeffs: vec![(1, 1.0)] },
                    BlockEntry { row: 0, col: 0, constant: 1.0, coeffs: vec![] },
                    BlockEntry { row: 1, col: 1, constant: 0.0, coeffs: vec![(0, 1.0), (0, -1.0)] },
                ],
            }],
            vec![],
            SdpProblem::default_names(2),
        )
        .unwrap();
        assert_eq!(p.objective, vec![(1, 2.0)]);
        let entries = &p.blocks[0].entries;
        assert_eq!(entries.len(), 2);
        assert_eq!((entries[1].row, entries[1].col), (0, 1));
    }

    #[test]
    fn new_rejects_out_of_range() {
        let err = SdpProblem::new(1, vec![(3, 1.0)], vec![], vec![], SdpProblem::default_names(1));
        assert!(matches!(err, Err(Error::Dimension(_))));
        let err = SdpProblem::new(
            1,
            vec![],
            vec![PsdBlock {
                dim: 1,
                entries: vec![BlockEntry { row: 0, col: 2, constant: 1.0, coeffs: vec![] }],
            }],
            vec![],
            SdpProblem::default_names(1),
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
    }
}
