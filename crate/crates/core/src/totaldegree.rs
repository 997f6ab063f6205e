//! Total-degree start systems `x_i^{d_i} - 1 = 0` and their roots of unity.

use std::f64::consts::TAU;
use std::ops::Range;

use thiserror::Error;

use crate::poly::{Monomial, PolySystem, Polynomial};
use crate::C64;

/// Default cap on the number of start solutions an enumeration may produce.
pub const DEFAULT_SOLUTION_CAP: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StartSystemError {
    #[error("system is not square: {npolys} polynomials in {nvars} variables")]
    NotSquare { npolys: usize, nvars: usize },
    #[error("polynomial {0} is zero")]
    ZeroPolynomial(usize),
    #[error("polynomial {0} is constant")]
    ConstantPolynomial(usize),
    #[error("{count} start solutions exceed the cap of {cap}")]
    TooManySolutions { count: u128, cap: u128 },
}

#[derive(Debug, Clone)]
pub struct TotalDegreeStart {
    degrees: Vec<u32>,
    system: PolySystem,
}

impl TotalDegreeStart {
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn system(&self) -> &PolySystem {
        &self.system
    }

    pub fn bezout_number(&self) -> u128 {
        self.degrees.iter().map(|&d| d as u128).product()
    }

    /// Lazily enumerates all `prod d_i` start solutions.
    pub fn start_solutions(&self) -> Result<StartSolutions<'_>, StartSystemError> {
        self.start_solutions_capped(DEFAULT_SOLUTION_CAP)
    }

    pub fn start_solutions_capped(&self, cap: u128) -> Result<StartSolutions<'_>, StartSystemError> {
        let count = self.bezout_number();
        if count > cap {
            return Err(StartSystemError::TooManySolutions { count, cap });
        }
        Ok(StartSolutions { degrees: &self.degrees, range: 0..count as usize })
    }
}

/// Builds `G_i = x_i^{d_i} - 1` with `d_i = deg F_i`.
pub fn build_start_system(f: &PolySystem) -> Result<TotalDegreeStart, StartSystemError> {
    check_square(f)?;
    for (i, p) in f.polys().iter().enumerate() {
        if p.is_zero() {
            return Err(StartSystemError::ZeroPolynomial(i));
        }
        if p.degree() == 0 {
            return Err(StartSystemError::ConstantPolynomial(i));
        }
    }
    let n = f.nvars();
    let degrees = f.degrees();
    let polys = degrees
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut e = vec![0; n];
            e[i] = d;
            Polynomial::new(n, [(C64::new(1.0, 0.0), Monomial::new(e)), (C64::new(-1.0, 0.0), Monomial::one(n))])
        })
        .collect();
    let system = PolySystem::new(polys).expect("nonempty square system");
    Ok(TotalDegreeStart { degrees, system })
}

/// Product of the total degrees of a square system.
pub fn bezout_number(f: &PolySystem) -> Result<u128, StartSystemError> {
    check_square(f)?;
    Ok(f.degrees().iter().map(|&d| d as u128).product())
}

fn check_square(f: &PolySystem) -> Result<(), StartSystemError> {
    if !f.is_square() {
        return Err(StartSystemError::NotSquare { npolys: f.npolys(), nvars: f.nvars() });
    }
    Ok(())
}

/// Iterator over start solutions in mixed-radix index order; the first
/// coordinate varies fastest.
#[derive(Debug, Clone)]
pub struct StartSolutions<'a> {
    degrees: &'a [u32],
    range: Range<usize>,
}

impl StartSolutions<'_> {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    /// The solution with linear index `index`.
    pub fn nth_solution(&self, index: usize) -> Vec<C64> {
        start_solution(self.degrees, index)
    }

    /// Restricts to the sub-range `range` of linear indices, e.g. to hand
    /// disjoint chunks to different workers.
    pub fn split(&self, range: Range<usize>) -> Self {
        let start = (self.range.start + range.start).min(self.range.end);
        let end = (self.range.start + range.end).min(self.range.end);
        StartSolutions { degrees: self.degrees, range: start..end }
    }
}

impl Iterator for StartSolutions<'_> {
    type Item = Vec<C64>;

    fn next(&mut self) -> Option<Vec<C64>> {
        let index = self.range.next()?;
        Some(start_solution(self.degrees, index))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.range.size_hint()
    }
}

impl ExactSizeIterator for StartSolutions<'_> {}

fn start_solution(degrees: &[u32], mut index: usize) -> Vec<C64> {
    degrees
        .iter()
        .map(|&d| {
            let k = index % d as usize;
            index /= d as usize;
            root_of_unity(k, d)
        })
        .collect()
}

/// `exp(2 pi i k / d)` with exact values at the real and imaginary axes.
fn root_of_unity(k: usize, d: u32) -> C64 {
    let (k, d) = (k as u64, d as u64);
    if k == 0 {
        return C64::new(1.0, 0.0);
    }
    if 2 * k == d {
        return C64::new(-1.0, 0.0);
    }
    if 4 * k == d {
        return C64::new(0.0, 1.0);
    }
    if 4 * k == 3 * d {
        return C64::new(0.0, -1.0);
    }
    C64::from_polar(1.0, TAU * k as f64 / d as f64)
}
