//! Sparse multivariate polynomials with complex coefficients.
//!
//! Terms are kept in graded-lexicographic order (highest first) with like
//! terms merged and exact zeros removed, so two polynomials with the same
//! value have the same term list.

mod parse;
mod scheme;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::C64;

pub use parse::{parse_polynomial, parse_system, write_system, ParseError, SystemFile};
pub use scheme::EvaluationScheme;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("expected a point with {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },
    #[error("polynomial system must contain at least one polynomial")]
    EmptySystem,
    #[error("polynomial {index} has {got} variables, expected {expected}")]
    VariableCountMismatch { index: usize, expected: usize, got: usize },
}

/// Exponent vector of a single monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    /// The monomial `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn evaluate(&self, x: &[C64]) -> C64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&e, _)| e > 0)
            .fold(C64::new(1.0, 0.0), |acc, (&e, &xi)| acc * xi.powu(e))
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    /// Graded lexicographic order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial in `nvars` variables over complex doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<(C64, Monomial)>,
}

impl Polynomial {
    /// Builds a polynomial from arbitrary terms, merging duplicates and
    /// dropping zero coefficients.
    ///
    /// Panics if a monomial does not have `nvars` entries.
    pub fn new(nvars: usize, terms: impl IntoIterator<Item = (C64, Monomial)>) -> Self {
        let mut terms: Vec<(C64, Monomial)> = terms
            .into_iter()
            .inspect(|(_, m)| assert_eq!(m.nvars(), nvars, "monomial length must equal nvars"))
            .collect();
        terms.sort_by(|a, b| b.1.cmp(&a.1));
        let mut merged: Vec<(C64, Monomial)> = Vec::with_capacity(terms.len());
        for (c, m) in terms {
            match merged.last_mut() {
                Some(last) if last.1 == m => last.0 += c,
                _ => merged.push((c, m)),
            }
        }
        merged.retain(|(c, _)| *c != C64::new(0.0, 0.0));
        Polynomial { nvars, terms: merged }
    }

    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: C64) -> Self {
        Polynomial::new(nvars, [(c, Monomial::one(nvars))])
    }

    /// The polynomial `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        Polynomial::new(nvars, [(C64::new(1.0, 0.0), Monomial::var(nvars, i))])
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(C64, Monomial)] {
        &self.terms
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximal total degree over the terms; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, m)| m.degree()).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let d = self.degree();
        self.terms.iter().all(|(_, m)| m.degree() == d)
    }

    /// Naive term-by-term evaluation.
    pub fn evaluate(&self, x: &[C64]) -> Result<C64, PolyError> {
        self.check_point(x)?;
        Ok(self.evaluate_naive(x))
    }

    pub(crate) fn evaluate_naive(&self, x: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|(c, m)| c * m.evaluate(x))
            .sum()
    }

    fn check_point(&self, x: &[C64]) -> Result<(), PolyError> {
        if x.len() != self.nvars {
            return Err(PolyError::DimensionMismatch { expected: self.nvars, got: x.len() });
        }
        Ok(())
    }

    /// Formal partial derivative with respect to variable `i`.
    pub fn differentiate(&self, i: usize) -> Result<Polynomial, PolyError> {
        if i >= self.nvars {
            return Err(PolyError::IndexOutOfRange { index: i, nvars: self.nvars });
        }
        let terms = self.terms.iter().filter_map(|(c, m)| {
            let e = m.0[i];
            (e > 0).then(|| {
                let mut exps = m.0.clone();
                exps[i] -= 1;
                (c * e as f64, Monomial(exps))
            })
        });
        Ok(Polynomial::new(self.nvars, terms))
    }

    /// Multiplies every term by `x_0^(deg f - deg term)` after inserting a
    /// new variable at index 0.
    pub fn homogenize(&self) -> Polynomial {
        let d = self.degree();
        let terms = self.terms.iter().map(|(c, m)| {
            let mut exps = Vec::with_capacity(self.nvars + 1);
            exps.push(d - m.degree());
            exps.extend_from_slice(&m.0);
            (*c, Monomial(exps))
        });
        Polynomial::new(self.nvars + 1, terms)
    }

    /// Sets variable 0 to one and removes it.
    pub fn dehomogenize(&self) -> Polynomial {
        let terms = self.terms.iter().map(|(c, m)| (*c, Monomial(m.0[1..].to_vec())));
        Polynomial::new(self.nvars - 1, terms)
    }

    pub fn scale(&self, s: C64) -> Polynomial {
        Polynomial::new(self.nvars, self.terms.iter().map(|(c, m)| (c * s, m.clone())))
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.nvars, C64::new(1.0, 0.0));
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Largest coefficient modulus; zero for the zero polynomial.
    pub fn coefficient_scale(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.norm()).fold(0.0, f64::max)
    }

    /// Renders the polynomial in the input grammar using `names`.
    pub fn display<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, names }
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        Polynomial::new(self.nvars, self.terms.iter().chain(&rhs.terms).cloned())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(c, m)| (-c, m.clone())).collect(),
        }
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (a, ma) in &self.terms {
            for (b, mb) in &rhs.terms {
                terms.push((a * b, ma.mul(mb)));
            }
        }
        Polynomial::new(self.nvars, terms)
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a Polynomial,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (k, (c, m)) in self.poly.terms.iter().enumerate() {
            let (sign, mag) = if c.im == 0.0 {
                if c.re < 0.0 {
                    ("-", C64::new(-c.re, 0.0))
                } else {
                    ("+", *c)
                }
            } else {
                ("+", *c)
            };
            if k == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag.im == 0.0 {
                write!(f, "{:?}", mag.re)?;
            } else {
                write!(f, "({:?}{:+?}i)", mag.re, mag.im)?;
            }
            for (i, &e) in m.exponents().iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*{}", self.names[i])?,
                    _ => write!(f, "*{}^{}", self.names[i], e)?,
                }
            }
        }
        Ok(())
    }
}

/// A list of polynomials in a common set of variables, with compiled
/// evaluation schemes for the values and all first partial derivatives.
#[derive(Debug, Clone)]
pub struct PolySystem {
    nvars: usize,
    polys: Vec<Polynomial>,
    schemes: Vec<EvaluationScheme>,
    /// Row-major `polys.len() x nvars`, `None` where the derivative is zero.
    jacobian_schemes: Vec<Option<EvaluationScheme>>,
    stack_depth: usize,
}

impl PolySystem {
    pub fn new(polys: Vec<Polynomial>) -> Result<Self, PolyError> {
        let first = polys.first().ok_or(PolyError::EmptySystem)?;
        let nvars = first.nvars();
        for (index, p) in polys.iter().enumerate() {
            if p.nvars() != nvars {
                return Err(PolyError::VariableCountMismatch { index, expected: nvars, got: p.nvars() });
            }
        }
        let schemes: Vec<_> = polys.iter().map(EvaluationScheme::compile).collect();
        let mut jacobian_schemes = Vec::with_capacity(polys.len() * nvars);
        for p in &polys {
            for j in 0..nvars {
                let d = p.differentiate(j).expect("index in range");
                jacobian_schemes.push((!d.is_zero()).then(|| EvaluationScheme::compile(&d)));
            }
        }
        let stack_depth = schemes
            .iter()
            .chain(jacobian_schemes.iter().flatten())
            .map(EvaluationScheme::stack_depth)
            .max()
            .unwrap_or(0);
        Ok(PolySystem { nvars, polys, schemes, jacobian_schemes, stack_depth })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn npolys(&self) -> usize {
        self.polys.len()
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn is_square(&self) -> bool {
        self.polys.len() == self.nvars
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.polys.iter().map(Polynomial::degree).collect()
    }

    /// Scratch buffer large enough for any scheme of this system.
    pub fn scratch(&self) -> Vec<C64> {
        Vec::with_capacity(self.stack_depth)
    }

    pub fn evaluate(&self, x: &[C64]) -> Result<Vec<C64>, PolyError> {
        self.check_point(x)?;
        let mut out = vec![C64::new(0.0, 0.0); self.npolys()];
        self.evaluate_into(x, &mut out, &mut self.scratch());
        Ok(out)
    }

    /// Evaluates with the compiled schemes. `x` and `out` must have the
    /// right lengths.
    pub fn evaluate_into(&self, x: &[C64], out: &mut [C64], stack: &mut Vec<C64>) {
        debug_assert_eq!(x.len(), self.nvars);
        for (o, s) in out.iter_mut().zip(&self.schemes) {
            *o = s.evaluate(x, stack);
        }
    }

    pub fn jacobian(&self, x: &[C64]) -> Result<crate::CMatrix, PolyError> {
        self.check_point(x)?;
        let mut j = crate::CMatrix::zeros(self.npolys(), self.nvars);
        self.jacobian_into(x, &mut j, &mut self.scratch());
        Ok(j)
    }

    /// Writes the Jacobian into the top-left `npolys x nvars` block of `jac`.
    pub fn jacobian_into(&self, x: &[C64], jac: &mut crate::CMatrix, stack: &mut Vec<C64>) {
        let n = self.nvars;
        for i in 0..self.npolys() {
            for j in 0..n {
                jac[(i, j)] = match &self.jacobian_schemes[i * n + j] {
                    Some(s) => s.evaluate(x, stack),
                    None => C64::new(0.0, 0.0),
                };
            }
        }
    }

    fn check_point(&self, x: &[C64]) -> Result<(), PolyError> {
        if x.len() != self.nvars {
            return Err(PolyError::DimensionMismatch { expected: self.nvars, got: x.len() });
        }
        Ok(())
    }

    /// Homogenizes every polynomial with a shared new variable at index 0.
    pub fn homogenize(&self) -> PolySystem {
        PolySystem::new(self.polys.iter().map(Polynomial::homogenize).collect())
            .expect("homogenization preserves shape")
    }

    pub fn coefficient_scale(&self) -> f64 {
        self.polys.iter().map(Polynomial::coefficient_scale).fold(0.0, f64::max)
    }
}

impl PartialEq for PolySystem {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.polys == other.polys
    }
}
