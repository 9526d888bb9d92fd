//! Non-commutative polynomials in hermitian operator variables.
//!
//! A [`Word`] is a finite product of variables; the empty word is the
//! identity. Words are ordered by degree first and lexicographically on
//! letter indices second, which fixes the basis order of every moment
//! matrix. Because all letters are hermitian, the adjoint of a word is its
//! reversal, and the real moment of `w` equals the moment of `reverse(w)`;
//! [`MomentIndex`] is the representative `lexmin(w, reverse(w))`.

use alloc::collections::btree_map::Entry;
use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};

/// Ordered set of hermitian operator variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSet {
    names: Vec<String>,
}

impl VariableSet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::EmptyVariableSet);
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::EmptyName);
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        Ok(Self { names })
    }

    pub fn count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, letter: usize) -> &str {
        &self.names[letter]
    }

    /// Every variable in this artifact is hermitian.
    pub fn is_hermitian(&self) -> bool {
        true
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn contains_word(&self, w: &Word) -> bool {
        w.letters().iter().all(|&l| (l as usize) < self.count())
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        match w.letters().iter().find(|&&l| l as usize >= self.count()) {
            Some(&l) => Err(Error::LetterOutOfRange {
                letter: l as usize,
                count: self.count(),
            }),
            None => Ok(()),
        }
    }

    /// Product of two words, checking both are over this set.
    pub fn mul_words(&self, a: &Word, b: &Word) -> Result<Word> {
        self.check_word(a)?;
        self.check_word(b)?;
        Ok(a.mul(b))
    }

    /// Renders a word with variable names joined by `*`; the identity is `1`.
    pub fn render(&self, w: &Word) -> String {
        if w.is_identity() {
            return "1".to_string();
        }
        let parts: Vec<&str> = w.letters().iter().map(|&l| self.name(l as usize)).collect();
        parts.join("*")
    }
}

/// Builds a variable set, preserving the given order.
pub fn make_variables<I, S>(names: I) -> Result<Arc<VariableSet>>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    VariableSet::new(names).map(Arc::new)
}

/// A monomial: a sequence of variable indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<u32>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn letter(i: usize) -> Self {
        Word(alloc::vec![i as u32])
    }

    pub fn from_letters<I: IntoIterator<Item = usize>>(letters: I) -> Self {
        Word(letters.into_iter().map(|l| l as u32).collect())
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation.
    pub fn mul(&self, other: &Word) -> Word {
        let mut letters = Vec::with_capacity(self.0.len() + other.0.len());
        letters.extend_from_slice(&self.0);
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    /// Adjoint of a product of hermitian letters: the reversed word.
    pub fn adjoint(&self) -> Word {
        let mut letters = self.0.clone();
        letters.reverse();
        Word(letters)
    }

    pub fn canonical(&self) -> MomentIndex {
        let rev = self.adjoint();
        if rev < *self {
            MomentIndex(rev)
        } else {
            MomentIndex(self.clone())
        }
    }

    /// `self† · mid · other` without intermediate allocations.
    pub(crate) fn sandwich(&self, mid: &Word, other: &Word) -> Word {
        let mut letters = Vec::with_capacity(self.0.len() + mid.0.len() + other.0.len());
        letters.extend(self.0.iter().rev());
        letters.extend_from_slice(&mid.0);
        letters.extend_from_slice(&other.0);
        Word(letters)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "x{l}")?;
        }
        Ok(())
    }
}

/// Canonical representative of the moment class `{w, reverse(w)}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MomentIndex(Word);

impl MomentIndex {
    pub fn identity() -> Self {
        MomentIndex(Word::identity())
    }

    pub fn word(&self) -> &Word {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.degree()
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub fn word_adjoint(w: &Word) -> Word {
    w.adjoint()
}

pub fn canonicalize(w: &Word) -> MomentIndex {
    w.canonical()
}

/// All words of degree at most `max_degree`, sorted by (degree, lex).
pub fn enumerate_words(vars: &VariableSet, max_degree: usize) -> Vec<Word> {
    let n = vars.count();
    let mut out = alloc::vec![Word::identity()];
    let mut frontier_start = 0;
    for _ in 0..max_degree {
        let frontier_end = out.len();
        for idx in frontier_start..frontier_end {
            for l in 0..n {
                let mut letters = out[idx].0.clone();
                letters.push(l as u32);
                out.push(Word(letters));
            }
        }
        frontier_start = frontier_end;
    }
    out
}

/// Real-coefficient linear combination of words.
#[derive(Debug, Clone)]
pub struct Polynomial {
    vars: Arc<VariableSet>,
    terms: BTreeMap<Word, f64>,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        same_set(&self.vars, &other.vars) && self.terms == other.terms
    }
}

fn same_set(a: &Arc<VariableSet>, b: &Arc<VariableSet>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl Polynomial {
    pub fn zero(vars: &Arc<VariableSet>) -> Self {
        Self {
            vars: Arc::clone(vars),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &Arc<VariableSet>, c: f64) -> Self {
        Self::monomial(vars, Word::identity(), c).expect("identity word is always valid")
    }

    pub fn monomial(vars: &Arc<VariableSet>, w: Word, c: f64) -> Result<Self> {
        vars.check_word(&w)?;
        let mut p = Self::zero(vars);
        p.add_term(w, c);
        Ok(p)
    }

    /// The polynomial `X_i`.
    pub fn var(vars: &Arc<VariableSet>, i: usize) -> Result<Self> {
        Self::monomial(vars, Word::letter(i), 1.0)
    }

    pub fn var_named(vars: &Arc<VariableSet>, name: &str) -> Result<Self> {
        let i = vars
            .index_of(name)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown variable `{name}`")))?;
        Self::var(vars, i)
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, f64)>>(
        vars: &Arc<VariableSet>,
        terms: I,
    ) -> Result<Self> {
        let mut p = Self::zero(vars);
        for (w, c) in terms {
            vars.check_word(&w)?;
            p.add_term(w, c);
        }
        Ok(p)
    }

    pub fn vars(&self) -> &Arc<VariableSet> {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, f64)> + '_ {
        self.terms.iter().map(|(w, &c)| (w, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &Word) -> f64 {
        self.terms.get(w).copied().unwrap_or(0.0)
    }

    /// Maximum degree over stored terms; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::degree).max().unwrap_or(0)
    }

    fn add_term(&mut self, w: Word, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(w) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
        }
    }

    fn check_same(&self, other: &Polynomial) -> Result<()> {
        if same_set(&self.vars, &other.vars) {
            Ok(())
        } else {
            Err(Error::VariableSetMismatch)
        }
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (w, &c) in &other.terms {
            out.add_term(w.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut out = Polynomial::zero(&self.vars);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                out.add_term(a.mul(b), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(&self.vars);
        for (w, &c) in &self.terms {
            out.add_term(w.clone(), c * s);
        }
        out
    }

    pub fn add_constant(&self, c: f64) -> Polynomial {
        let mut out = self.clone();
        out.add_term(Word::identity(), c);
        out
    }

    pub fn adjoint(&self) -> Polynomial {
        let mut out = Polynomial::zero(&self.vars);
        for (w, &c) in &self.terms {
            out.add_term(w.adjoint(), c);
        }
        out
    }

    pub fn is_hermitian(&self) -> bool {
        self.terms
            .iter()
            .all(|(w, &c)| self.coefficient(&w.adjoint()) == c)
    }

    /// `(p + p†) / 2`.
    pub fn hermitian_part(&self) -> Polynomial {
        if self.is_hermitian() {
            return self.clone();
        }
        let mut out = Polynomial::zero(&self.vars);
        for (w, &c) in &self.terms {
            out.add_term(w.clone(), 0.5 * c);
            out.add_term(w.adjoint(), 0.5 * c);
        }
        out
    }

    /// Evaluates with every variable replaced by a commuting real scalar.
    pub fn eval_commutative(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.vars.count() {
            return Err(Error::Dimension(alloc::format!(
                "point has {} coordinates for {} variables",
                point.len(),
                self.vars.count()
            )));
        }
        Ok(self
            .terms
            .iter()
            .map(|(w, &c)| c * w.letters().iter().map(|&l| point[l as usize]).product::<f64>())
            .sum())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}*{}", self.vars.render(w))?;
        }
        Ok(())
    }
}
