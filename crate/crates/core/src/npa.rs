//! Moment relaxations of non-commutative polynomial programs.
//!
//! The order-`k` relaxation replaces every word `w` of degree at most `2k`
//! by a real moment `y_w` and requires the moment matrix `M_k(y)` and one
//! localizing matrix per inequality to be positive semidefinite. Equality
//! constraints become linear moment equalities localized at order
//! `k - ceil(deg/2)`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::ncpoly::{enumerate_words, MomentIndex, Polynomial, VariableSet, Word};
use crate::sdp::{BlockEntry, LinearEquality, PsdBlock, SdpProblem, SdpSolution};

/// Linear combination of moments.
pub type LinearForm = BTreeMap<MomentIndex, f64>;

/// Relaxation order `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelaxationOrder(usize);

impl RelaxationOrder {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("relaxation order must be at least 1"));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Polynomial program `min p(X)` subject to `q_i(X) ⪰ 0` and `e_j(X) = 0`.
#[derive(Debug, Clone)]
pub struct NcpopProblem {
    pub vars: Arc<VariableSet>,
    pub objective: Polynomial,
    pub inequalities: Vec<Polynomial>,
    pub equalities: Vec<Polynomial>,
    /// Radius `C` of the ball constraint `C² - Σ X_i² ⪰ 0`.
    pub ball_radius: Option<f64>,
}

impl NcpopProblem {
    pub fn new(objective: Polynomial) -> Self {
        Self {
            vars: Arc::clone(objective.vars()),
            objective,
            inequalities: Vec::new(),
            equalities: Vec::new(),
            ball_radius: None,
        }
    }

    pub fn with_inequality(mut self, q: Polynomial) -> Self {
        self.inequalities.push(q);
        self
    }

    pub fn with_equality(mut self, e: Polynomial) -> Self {
        self.equalities.push(e);
        self
    }

    pub fn with_ball(mut self, radius: f64) -> Self {
        self.ball_radius = Some(radius);
        self
    }

    /// Largest degree among the objective and all constraints.
    pub fn max_degree(&self) -> usize {
        self.inequalities
            .iter()
            .chain(&self.equalities)
            .map(Polynomial::degree)
            .chain(core::iter::once(self.objective.degree()))
            .chain(self.ball_radius.map(|_| 2))
            .max()
            .unwrap_or(0)
    }

    /// Smallest admissible relaxation order.
    pub fn min_order(&self) -> usize {
        self.max_degree().div_ceil(2).max(1)
    }

    fn ball_polynomial(&self, radius: f64) -> Result<Polynomial> {
        let terms = (0..self.vars.count()).map(|i| (Word::from_letters([i, i]), -1.0));
        Ok(Polynomial::from_terms(&self.vars, terms)?.add_constant(radius * radius))
    }

    /// Inequalities including the ball constraint, each made hermitian.
    pub fn all_inequalities(&self) -> Result<Vec<Polynomial>> {
        let mut out: Vec<Polynomial> = self
            .inequalities
            .iter()
            .map(Polynomial::hermitian_part)
            .collect();
        if let Some(c) = self.ball_radius {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!("ball radius must be positive, got {c}")));
            }
            out.push(self.ball_polynomial(c)?);
        }
        Ok(out)
    }
}

/// Square matrix whose entries are linear forms over moments.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicMatrix {
    dim: usize,
    entries: Vec<LinearForm>,
}

impl SymbolicMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &LinearForm {
        &self.entries[i * self.dim + j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (i + 1..self.dim).all(|j| self.entry(i, j) == self.entry(j, i)))
    }

    /// Distinct moments referenced by any entry.
    pub fn moments(&self) -> BTreeSet<MomentIndex> {
        self.entries
            .iter()
            .flat_map(|f| f.keys().cloned())
            .collect()
    }

    /// Numeric matrix for given moment values.
    pub fn evaluate(&self, values: &BTreeMap<MomentIndex, f64>) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc = 0.0;
                for (idx, c) in self.entry(i, j) {
                    let v = values
                        .get(idx)
                        .ok_or_else(|| Error::MissingMoment(format!("{idx}")))?;
                    acc += c * v;
                }
                m[(i, j)] = acc;
            }
        }
        Ok(m)
    }
}

fn add_to_form(form: &mut LinearForm, idx: MomentIndex, c: f64) {
    if c == 0.0 {
        return;
    }
    let slot = form.entry(idx.clone()).or_insert(0.0);
    *slot += c;
    if *slot == 0.0 {
        form.remove(&idx);
    }
}

/// `M_k(y)(ν, ω) = y_{ν†ω}` over all words of degree at most `k`.
pub fn moment_matrix(vars: &VariableSet, k: usize) -> SymbolicMatrix {
    let basis = enumerate_words(vars, k);
    let dim = basis.len();
    let mut entries = Vec::with_capacity(dim * dim);
    let identity = Word::identity();
    for nu in &basis {
        for omega in &basis {
            let mut form = LinearForm::new();
            form.insert(nu.sandwich(&identity, omega).canonical(), 1.0);
            entries.push(form);
        }
    }
    SymbolicMatrix { dim, entries }
}

/// `M_{k-d}(q y)(ν, ω) = Σ_μ q_μ y_{ν†μω}` with `d = ceil(deg(q)/2)`.
pub fn localizing_matrix(q: &Polynomial, k: usize) -> Result<SymbolicMatrix> {
    localizing_matrix_named(q, k, "constraint")
}

fn localizing_matrix_named(q: &Polynomial, k: usize, label: &str) -> Result<SymbolicMatrix> {
    let d = q.degree().div_ceil(2);
    if d > k {
        return Err(Error::OrderTooLow {
            constraint: label.into(),
            degree: q.degree(),
            order: k,
        });
    }
    let basis = enumerate_words(q.vars(), k - d);
    let dim = basis.len();
    let mut entries = Vec::with_capacity(dim * dim);
    for nu in &basis {
        for omega in &basis {
            let mut form = LinearForm::new();
            for (mu, c) in q.terms() {
                add_to_form(&mut form, nu.sandwich(mu, omega).canonical(), c);
            }
            entries.push(form);
        }
    }
    Ok(SymbolicMatrix { dim, entries })
}

/// Rows `Σ_μ e_μ y_{ν†μω} = 0` for all `|ν|, |ω| <= k - ceil(deg(e)/2)`.
fn localized_equalities(e: &Polynomial, k: usize, label: &str) -> Result<Vec<LinearForm>> {
    let m = localizing_matrix_named(e, k, label)?;
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for form in m.entries {
        if form.is_empty() {
            continue;
        }
        let key: Vec<(MomentIndex, u64)> =
            form.iter().map(|(i, c)| (i.clone(), c.to_bits())).collect();
        if seen.insert(key) {
            rows.push(form);
        }
    }
    Ok(rows)
}

/// Number of distinct moments `|{canonical(w) : |w| <= 2k}|`.
pub fn moment_count(n_vars: usize, k: usize) -> usize {
    (0..=2 * k)
        .map(|j| (n_vars.pow(j as u32) + n_vars.pow(j.div_ceil(2) as u32)) / 2)
        .sum()
}

/// An assembled relaxation together with the moment labelling of its
/// decision variables.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub sdp: SdpProblem,
    /// `moments[v]` is the moment carried by SDP variable `v`.
    pub moments: Vec<MomentIndex>,
    pub order: RelaxationOrder,
    pub vars: Arc<VariableSet>,
}

impl Relaxation {
    pub fn moment_values(&self, solution: &SdpSolution) -> BTreeMap<MomentIndex, f64> {
        self.moments
            .iter()
            .cloned()
            .zip(solution.values.iter().copied())
            .collect()
    }

    pub fn moment_matrix_dim(&self) -> usize {
        self.sdp.blocks.first().map_or(0, |b| b.dim)
    }
}

fn form_to_coeffs(form: &LinearForm, index: &BTreeMap<MomentIndex, usize>) -> Vec<(usize, f64)> {
    let mut coeffs: Vec<(usize, f64)> = form.iter().map(|(m, &c)| (index[m], c)).collect();
    coeffs.sort_by_key(|&(v, _)| v);
    coeffs
}

fn block_from(m: &SymbolicMatrix, index: &BTreeMap<MomentIndex, usize>) -> PsdBlock {
    let mut entries = Vec::new();
    for i in 0..m.dim() {
        for j in i..m.dim() {
            let form = m.entry(i, j);
            if form.is_empty() {
                continue;
            }
            entries.push(BlockEntry {
                row: i,
                col: j,
                constant: 0.0,
                coeffs: form_to_coeffs(form, index),
            });
        }
    }
    PsdBlock {
        dim: m.dim(),
        entries,
    }
}

/// Builds the order-`k` relaxation as a block SDP.
///
/// Variable 0 is the identity moment, pinned by the first equality. Block 0
/// is the moment matrix; localizing matrices follow in constraint order
/// with the ball constraint last.
pub fn assemble_sdp(prob: &NcpopProblem, k: RelaxationOrder) -> Result<Relaxation> {
    let k = k.get();
    if prob.objective.is_zero() {
        return Err(Error::EmptyObjective);
    }
    for (what, p) in core::iter::once(("objective", &prob.objective))
        .chain(prob.inequalities.iter().map(|q| ("inequality", q)))
        .chain(prob.equalities.iter().map(|e| ("equality", e)))
    {
        if !Arc::ptr_eq(p.vars(), &prob.vars) && **p.vars() != *prob.vars {
            return Err(Error::VariableSetMismatch);
        }
        if p.degree() > 2 * k {
            return Err(Error::OrderTooLow {
                constraint: what.into(),
                degree: p.degree(),
                order: k,
            });
        }
    }

    let moment = moment_matrix(&prob.vars, k);
    let inequalities = prob.all_inequalities()?;
    let n_user = prob.inequalities.len();
    let mut localizing = Vec::with_capacity(inequalities.len());
    for (i, q) in inequalities.iter().enumerate() {
        let label = if i < n_user {
            format!("inequality {i}")
        } else {
            String::from("ball constraint")
        };
        localizing.push(localizing_matrix_named(q, k, &label)?);
    }
    let mut eq_rows = Vec::new();
    for (j, e) in prob.equalities.iter().enumerate() {
        eq_rows.extend(localized_equalities(e, k, &format!("equality {j}"))?);
    }

    let mut all: BTreeSet<MomentIndex> = moment.moments();
    for m in &localizing {
        all.extend(m.moments());
    }
    for row in &eq_rows {
        all.extend(row.keys().cloned());
    }
    for (w, _) in prob.objective.terms() {
        all.insert(w.canonical());
    }
    all.insert(MomentIndex::identity());
    let moments: Vec<MomentIndex> = all.into_iter().collect();
    let index: BTreeMap<MomentIndex, usize> = moments
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();

    let mut objective = LinearForm::new();
    for (w, c) in prob.objective.terms() {
        add_to_form(&mut objective, w.canonical(), c);
    }

    let mut blocks = Vec::with_capacity(1 + localizing.len());
    blocks.push(block_from(&moment, &index));
    blocks.extend(localizing.iter().map(|m| block_from(m, &index)));

    let mut equalities = Vec::with_capacity(1 + eq_rows.len());
    equalities.push(LinearEquality {
        coeffs: alloc::vec![(0, 1.0)],
        rhs: 1.0,
    });
    equalities.extend(eq_rows.iter().map(|row| LinearEquality {
        coeffs: form_to_coeffs(row, &index),
        rhs: 0.0,
    }));

    let variable_names = moments.iter().map(|m| prob.vars.render(m.word())).collect();
    let sdp = SdpProblem::new(
        moments.len(),
        form_to_coeffs(&objective, &index),
        blocks,
        equalities,
        variable_names,
    )?;
    Ok(Relaxation {
        sdp,
        moments,
        order: RelaxationOrder(k),
        vars: Arc::clone(&prob.vars),
    })
}

fn numeric_rank(m: DMatrix<f64>, rank_tol: f64) -> usize {
    let eig = SymmetricEigen::new(m);
    let smax = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if smax == 0.0 {
        return 0;
    }
    eig.eigenvalues
        .iter()
        .filter(|v| v.abs() > rank_tol * smax)
        .count()
}

/// Rank-loop test `rank M_k == rank M_{k-1}` on numeric moments.
pub fn flatness_check(
    moment_values: &BTreeMap<MomentIndex, f64>,
    vars: &VariableSet,
    k: usize,
    rank_tol: f64,
) -> Result<bool> {
    if k < 2 {
        return Err(Error::invalid("flatness check needs order k >= 2"));
    }
    let full = moment_matrix(vars, k).evaluate(moment_values)?;
    let lower = moment_matrix(vars, k - 1).evaluate(moment_values)?;
    Ok(numeric_rank(full, rank_tol) == numeric_rank(lower, rank_tol))
}

/// Degree-one moments `y_{X_i}` keyed by variable name.
pub fn extract_first_order(
    moment_values: &BTreeMap<MomentIndex, f64>,
    vars: &VariableSet,
) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (i, name) in vars.names().iter().enumerate() {
        let idx = Word::letter(i).canonical();
        let v = moment_values
            .get(&idx)
            .ok_or_else(|| Error::MissingMoment(name.clone()))?;
        out.insert(name.clone(), *v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::{canonicalize, make_variables};

    fn point_moments(vars: &VariableSet, point: &[f64], k: usize) -> BTreeMap<MomentIndex, f64> {
        enumerate_words(vars, 2 * k)
            .into_iter()
            .map(|w| {
                let v: f64 = w.letters().iter().map(|&l| point[l as usize]).product();
                (canonicalize(&w), v)
            })
            .collect()
    }

    fn x_only() -> Arc<VariableSet> {
        make_variables(["x"]).unwrap()
    }

    #[test]
    fn moment_matrix_single_variable() {
        let v = x_only();
        let m = moment_matrix(&v, 1);
        assert_eq!(m.dim(), 2);
        let one = |w: &[usize]| {
            let mut f = LinearForm::new();
            f.insert(Word::from_letters(w.iter().copied()).canonical(), 1.0);
            f
        };
        assert_eq!(m.entry(0, 0), &one(&[]));
        assert_eq!(m.entry(0, 1), &one(&[0]));
        assert_eq!(m.entry(1, 0), &one(&[0]));
        assert_eq!(m.entry(1, 1), &one(&[0, 0]));
    }

    #[test]
    fn moment_matrix_two_variables() {
        let v = make_variables(["x", "y"]).unwrap();
        let m1 = moment_matrix(&v, 1);
        assert_eq!(m1.dim(), 3);
        assert_eq!(m1.entry(1, 2), m1.entry(2, 1));
        assert!(m1.is_symmetric());

        let m2 = moment_matrix(&v, 2);
        assert_eq!(m2.dim(), 7);
        assert!(m2.is_symmetric());
        // Oracle: canonicalize every ν†ω by explicit reversal and concatenation.
        let basis = enumerate_words(&v, 2);
        let mut brute = BTreeSet::new();
        for a in &basis {
            for b in &basis {
                let mut w: Vec<u32> = a.letters().iter().rev().copied().collect();
                w.extend_from_slice(b.letters());
                let mut r = w.clone();
                r.reverse();
                brute.insert(if r < w { r } else { w });
            }
        }
        assert_eq!(brute.len(), 22);
        assert_eq!(m2.moments().len(), 22);
    }

    #[test]
    fn localizing_matrix_examples() {
        let v = x_only();
        let one = Polynomial::constant(&v, 1.0);
        assert_eq!(localizing_matrix(&one, 2).unwrap(), moment_matrix(&v, 2));

        let q = Polynomial::from_terms(&v, [(Word::identity(), 1.0), (Word::from_letters([0, 0]), -1.0)])
            .unwrap();
        let m = localizing_matrix(&q, 1).unwrap();
        assert_eq!(m.dim(), 1);
        let mut expected = LinearForm::new();
        expected.insert(MomentIndex::identity(), 1.0);
        expected.insert(Word::from_letters([0, 0]).canonical(), -1.0);
        assert_eq!(m.entry(0, 0), &expected);

        let cubic = Polynomial::monomial(&v, Word::from_letters([0, 0, 0]), 1.0).unwrap();
        assert!(matches!(
            localizing_matrix(&cubic, 1),
            Err(Error::OrderTooLow { degree: 3, order: 1, .. })
        ));
    }

    #[test]
    fn localizing_matrix_matches_term_expansion() {
        // q = z - (c - f)^2 over variables (f, z); expand term by term.
        let v = make_variables(["f", "z"]).unwrap();
        let f = Polynomial::var(&v, 0).unwrap();
        let z = Polynomial::var(&v, 1).unwrap();
        let c = 3.0;
        let r = f.scale(-1.0).add_constant(c);
        let q = z.sub(&r.mul(&r).unwrap()).unwrap();
        let k = 2;
        let m = localizing_matrix(&q, k).unwrap();
        assert!(m.is_symmetric());
        let basis = enumerate_words(&v, 1);
        let raw = [
            (alloc::vec![1usize], 1.0),
            (alloc::vec![], -c * c),
            (alloc::vec![0], 2.0 * c),
            (alloc::vec![0, 0], -1.0),
        ];
        for (i, nu) in basis.iter().enumerate() {
            for (j, om) in basis.iter().enumerate() {
                let mut oracle = BTreeMap::<Vec<u32>, f64>::new();
                for (mu, coef) in &raw {
                    let mut w: Vec<u32> = nu.letters().iter().rev().copied().collect();
                    w.extend(mu.iter().map(|&l| l as u32));
                    w.extend_from_slice(om.letters());
                    let mut r = w.clone();
                    r.reverse();
                    *oracle.entry(if r < w { r } else { w }).or_insert(0.0) += coef;
                }
                let ours: BTreeMap<Vec<u32>, f64> = m
                    .entry(i, j)
                    .iter()
                    .map(|(k, v)| (k.word().letters().to_vec(), *v))
                    .collect();
                oracle.retain(|_, v| *v != 0.0);
                assert_eq!(ours, oracle, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn moment_count_examples() {
        assert_eq!(moment_count(1, 1), 3);
        assert_eq!(moment_count(2, 1), 6);
        assert_eq!(moment_count(2, 2), 22);
        for n in 1..=4 {
            for k in 1..=2 {
                let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
                let vars = VariableSet::new(names).unwrap();
                let dedup: BTreeSet<MomentIndex> =
                    enumerate_words(&vars, 2 * k).iter().map(canonicalize).collect();
                assert_eq!(moment_count(n, k), dedup.len());
            }
        }
    }

    #[test]
    fn assemble_structure() {
        let v = x_only();
        let x = Polynomial::var(&v, 0).unwrap();
        let prob = NcpopProblem::new(x.clone())
            .with_inequality(
                Polynomial::from_terms(
                    &v,
                    [(Word::identity(), 1.0), (Word::from_letters([0, 0]), -1.0)],
                )
                .unwrap(),
            )
            .with_ball(2.0);
        let r = assemble_sdp(&prob, RelaxationOrder::new(1).unwrap()).unwrap();
        assert_eq!(r.sdp.num_vars, 3);
        assert_eq!(r.moments[0], MomentIndex::identity());
        assert_eq!(r.sdp.blocks.len(), 3);
        assert_eq!(r.sdp.blocks[0].dim, 2);
        assert_eq!(r.sdp.equalities.len(), 1);
        assert_eq!(r.sdp.objective, alloc::vec![(1, 1.0)]);
        assert_eq!(r.sdp.variable_names, ["1", "x", "x*x"]);

        let again = assemble_sdp(&prob, RelaxationOrder::new(1).unwrap()).unwrap();
        assert_eq!(r.sdp, again.sdp);
    }

    #[test]
    fn assemble_rejects_bad_input() {
        let v = x_only();
        let quartic = Polynomial::monomial(&v, Word::from_letters([0, 0, 0, 0]), 1.0).unwrap();
        let k1 = RelaxationOrder::new(1).unwrap();
        assert!(matches!(
            assemble_sdp(&NcpopProblem::new(quartic), k1),
            Err(Error::OrderTooLow { .. })
        ));
        assert_eq!(
            assemble_sdp(&NcpopProblem::new(Polynomial::zero(&v)), k1).unwrap_err(),
            Error::EmptyObjective
        );
        assert!(RelaxationOrder::new(0).is_err());
    }

    #[test]
    fn equalities_are_localized() {
        let v = make_variables(["x", "y"]).unwrap();
        // e = xy - 1, degree 2: at k = 2 localized over words of degree <= 1.
        let e = Polynomial::monomial(&v, Word::from_letters([0, 1]), 1.0)
            .unwrap()
            .add_constant(-1.0);
        let obj = Polynomial::var(&v, 0).unwrap();
        let prob = NcpopProblem::new(obj).with_equality(e);
        let r1 = assemble_sdp(&prob, RelaxationOrder::new(1).unwrap()).unwrap();
        assert_eq!(r1.sdp.equalities.len(), 2);
        let r2 = assemble_sdp(&prob, RelaxationOrder::new(2).unwrap()).unwrap();
        // 3x3 localizing pattern; all 9 rows are distinct because xy is not
        // a palindrome.
        assert_eq!(r2.sdp.equalities.len(), 1 + 9);
        assert_eq!(r2.sdp.num_vars, moment_count(2, 2));
    }

    #[test]
    fn flatness_of_point_evaluations() {
        let v = x_only();
        for p in [1.0, 0.5] {
            let m = point_moments(&v, &[p], 2);
            assert!(flatness_check(&m, &v, 2, 1e-6).unwrap());
        }
        // Mixture of the evaluations at 0 and 1: rank 2 at both orders.
        let a = point_moments(&v, &[0.0], 2);
        let b = point_moments(&v, &[1.0], 2);
        let mix: BTreeMap<MomentIndex, f64> =
            a.iter().map(|(k, va)| (k.clone(), 0.5 * va + 0.5 * b[k])).collect();
        assert_eq!(numeric_rank(moment_matrix(&v, 2).evaluate(&mix).unwrap(), 1e-6), 2);
        assert_eq!(numeric_rank(moment_matrix(&v, 1).evaluate(&mix).unwrap(), 1e-6), 2);
        assert!(flatness_check(&mix, &v, 2, 1e-6).unwrap());

        // Three atoms: rank 3 at order 2 but only 2 at order 1.
        let c = point_moments(&v, &[2.0], 2);
        let mix3: BTreeMap<MomentIndex, f64> = a
            .iter()
            .map(|(k, va)| (k.clone(), (va + b[k] + c[k]) / 3.0))
            .collect();
        assert!(!flatness_check(&mix3, &v, 2, 1e-6).unwrap());
    }

    #[test]
    fn flatness_errors() {
        let v = x_only();
        let m = point_moments(&v, &[1.0], 1);
        assert!(matches!(
            flatness_check(&m, &v, 2, 1e-6),
            Err(Error::MissingMoment(_))
        ));
        assert!(flatness_check(&m, &v, 1, 1e-6).is_err());
    }

    #[test]
    fn first_order_readout() {
        let v = x_only();
        let m = point_moments(&v, &[0.7], 1);
        assert_eq!(extract_first_order(&m, &v).unwrap()["x"], 0.7);
        let mut m = BTreeMap::new();
        m.insert(MomentIndex::identity(), 1.0);
        m.insert(Word::letter(0).canonical(), 0.0);
        assert_eq!(extract_first_order(&m, &v).unwrap()["x"], 0.0);
        m.remove(&Word::letter(0).canonical());
        assert!(extract_first_order(&m, &v).is_err());
    }
}
