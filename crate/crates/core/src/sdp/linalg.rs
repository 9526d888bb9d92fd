use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use super::PsdBlock;

pub(crate) const SQRT2: f64 = core::f64::consts::SQRT_2;

pub(crate) fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of upper-triangle entry `(i, j)`, `i <= j`, in column-major svec.
pub(crate) fn svec_index(i: usize, j: usize) -> usize {
    j * (j + 1) / 2 + i
}

fn svec_to_dense(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x = v[svec_index(i, j)];
            if i == j {
                m[(i, i)] = x;
            } else {
                m[(i, j)] = x / SQRT2;
                m[(j, i)] = x / SQRT2;
            }
        }
    }
    m
}

/// Euclidean projection of an svec onto the PSD cone, in place.
pub(crate) fn project_psd(v: &mut [f64], n: usize) {
    if n == 1 {
        v[0] = v[0].max(0.0);
        return;
    }
    let eig = SymmetricEigen::new(svec_to_dense(v, n));
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return;
    }
    v.fill(0.0);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let q = eig.eigenvectors.column(k);
        for j in 0..n {
            let qj = lam * q[j];
            for i in 0..j {
                v[svec_index(i, j)] += SQRT2 * q[i] * qj;
            }
            v[svec_index(j, j)] += q[j] * qj;
        }
    }
}

/// Eigenvalues of an svec-encoded symmetric matrix.
pub(crate) fn svec_eigenvalues(v: &[f64], n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![v[0]];
    }
    SymmetricEigen::new(svec_to_dense(v, n))
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

/// Eigenvalues of a dense row-major symmetric matrix, ascending.
pub fn symmetric_eigenvalues(dense: &[f64], n: usize) -> Vec<f64> {
    let m = DMatrix::from_row_slice(n, n, dense);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Dense value of a block at `y`, row-major.
pub fn block_matrix(block: &PsdBlock, y: &[f64]) -> Vec<f64> {
    block.evaluate(y)
}

/// Compressed sparse rows.
#[derive(Debug, Clone)]
pub(crate) struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in rows {
            for &(c, v) in row {
                indices.push(c);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: rows.len(),
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = alloc::vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = alloc::vec![0; self.indices.len()];
        let mut data = alloc::vec![0.0; self.data.len()];
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                let dst = next[c];
                indices[dst] = r;
                data[dst] = self.data[k];
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            data,
        }
    }

    /// `out = self * x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.nrows) {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *o = acc;
        }
    }

    pub fn row_range(&self, r: usize) -> core::ops::Range<usize> {
        self.indptr[r]..self.indptr[r + 1]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Jacobi-preconditioned conjugate gradients for an SPD operator, warm
/// started from `x`. Returns the number of iterations used.
pub(crate) fn pcg<F>(
    mut apply: F,
    inv_diag: &[f64],
    rhs: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
    work: &mut PcgWork,
) -> usize
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = rhs.len();
    work.resize(n);
    let PcgWork { r, z, p, ap } = work;
    apply(x, ap);
    for i in 0..n {
        r[i] = rhs[i] - ap[i];
    }
    let target = rel_tol * libm::sqrt(dot(rhs, rhs)).max(1e-300);
    if libm::sqrt(dot(r, r)) <= target {
        return 0;
    }
    for i in 0..n {
        z[i] = inv_diag[i] * r[i];
        p[i] = z[i];
    }
    let mut rz = dot(r, z);
    for it in 1..=max_iter {
        apply(p, ap);
        let pap = dot(p, ap);
        if pap <= 0.0 {
            return it;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if libm::sqrt(dot(r, r)) <= target {
            return it;
        }
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
        }
        let rz_new = dot(r, z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    max_iter
}

#[derive(Debug, Default)]
pub(crate) struct PcgWork {
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
}

impl PcgWork {
    fn resize(&mut self, n: usize) {
        for v in [&mut self.r, &mut self.z, &mut self.p, &mut self.ap] {
            v.resize(n, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn svec_round_trip_through_projection_of_psd() {
        // [[2,1],[1,2]] is PD: projection is the identity.
        let mut v = vec![2.0, SQRT2, 2.0];
        let orig = v.clone();
        project_psd(&mut v, 2);
        assert_eq!(v, orig);
    }

    #[test]
    fn projection_clips_negative_eigenvalue() {
        // [[1,2],[2,1]] has eigenvalues 3, -1; projection is 1.5 * ones.
        let mut v = vec![1.0, 2.0 * SQRT2, 1.0];
        project_psd(&mut v, 2);
        assert!((v[0] - 1.5).abs() < 1e-12);
        assert!((v[1] - 1.5 * SQRT2).abs() < 1e-12);
        assert!((v[2] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn csr_transpose_and_product() {
        let a = Csr::from_rows(3, &[vec![(0, 1.0), (2, 2.0)], vec![(1, 3.0)]]);
        let at = a.transpose();
        let mut out = vec![0.0; 3];
        at.mul_vec(&[1.0, 1.0], &mut out);
        assert_eq!(out, vec![1.0, 3.0, 2.0]);
    }

    #[test]
    fn pcg_solves_small_spd() {
        let m = [[4.0, 1.0], [1.0, 3.0]];
        let apply = |x: &[f64], out: &mut [f64]| {
            out[0] = m[0][0] * x[0] + m[0][1] * x[1];
            out[1] = m[1][0] * x[0] + m[1][1] * x[1];
        };
        let mut x = vec![0.0, 0.0];
        let mut work = PcgWork::default();
        pcg(apply, &[0.25, 1.0 / 3.0], &[1.0, 2.0], &mut x, 1e-12, 10, &mut work);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-10);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-10);
    }
}
