//! Dense complex linear solves for the path tracker.
//!
//! Square systems use LU with partial pivoting; tall systems use Householder
//! QR with column pivoting and return the least-squares solution. Both
//! report a condition estimate taken from the ratio of the largest to the
//! smallest pivot.

use thiserror::Error;

use crate::{CMatrix, C64};

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is ill-conditioned (estimate {0:.3e})")]
    IllConditioned(f64),
    #[error("underdetermined system: {rows} rows, {cols} columns")]
    Underdetermined { rows: usize, cols: usize },
}

/// Factorization workspace for repeated solves of one shape.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    rows: usize,
    cols: usize,
    factors: CMatrix,
    /// Row permutation (LU) or column permutation (QR).
    perm: Vec<usize>,
    /// Diagonal of R for QR; unused for LU.
    rdiag: Vec<C64>,
    work: Vec<C64>,
    cond: f64,
}

impl LinearSolver {
    pub fn new(rows: usize, cols: usize) -> Self {
        LinearSolver {
            rows,
            cols,
            factors: CMatrix::zeros(rows, cols),
            perm: (0..rows.max(cols)).collect(),
            rdiag: vec![C64::new(0.0, 0.0); cols],
            work: vec![C64::new(0.0, 0.0); rows.max(cols)],
            cond: f64::INFINITY,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Condition estimate of the last successful factorization.
    pub fn cond(&self) -> f64 {
        self.cond
    }

    /// Factors `a`, failing if it is singular or its condition estimate
    /// exceeds `cond_limit`.
    pub fn factor(&mut self, a: &CMatrix, cond_limit: f64) -> Result<f64, LinalgError> {
        assert_eq!(a.shape(), (self.rows, self.cols), "matrix shape mismatch");
        if self.rows < self.cols {
            return Err(LinalgError::Underdetermined { rows: self.rows, cols: self.cols });
        }
        self.factors.copy_from(a);
        let cond = if self.rows == self.cols { self.lu()? } else { self.qr()? };
        self.cond = cond;
        if !(cond <= cond_limit) {
            return Err(LinalgError::IllConditioned(cond));
        }
        Ok(cond)
    }

    fn lu(&mut self) -> Result<f64, LinalgError> {
        let n = self.rows;
        let a = &mut self.factors;
        for (i, p) in self.perm.iter_mut().enumerate() {
            *p = i;
        }
        let (mut umax, mut umin) = (0.0f64, f64::INFINITY);
        for k in 0..n {
            let (mut piv, mut best) = (k, a[(k, k)].norm());
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > best {
                    piv = i;
                    best = v;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::Singular);
            }
            if piv != k {
                a.swap_rows(k, piv);
                self.perm.swap(k, piv);
            }
            umax = umax.max(best);
            umin = umin.min(best);
            let inv = a[(k, k)].inv();
            for i in k + 1..n {
                a[(i, k)] *= inv;
            }
            for j in k + 1..n {
                let akj = a[(k, j)];
                if akj == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in k + 1..n {
                    let lik = a[(i, k)];
                    a[(i, j)] -= lik * akj;
                }
            }
        }
        Ok(umax / umin)
    }

    fn qr(&mut self) -> Result<f64, LinalgError> {
        let (m, n) = (self.rows, self.cols);
        let a = &mut self.factors;
        for (i, p) in self.perm.iter_mut().enumerate() {
            *p = i;
        }
        // squared column norms for pivoting
        let norms = &mut self.work;
        for j in 0..n {
            norms[j] = C64::new(a.column(j).norm_squared(), 0.0);
        }
        let (mut rmax, mut rmin) = (0.0f64, f64::INFINITY);
        for k in 0..n {
            let mut piv = k;
            for j in k + 1..n {
                if norms[j].re > norms[piv].re {
                    piv = j;
                }
            }
            if piv != k {
                a.swap_columns(k, piv);
                norms.swap(k, piv);
                self.perm.swap(k, piv);
            }
            let mut sigma = 0.0;
            for i in k..m {
                sigma += a[(i, k)].norm_sqr();
            }
            let sigma = sigma.sqrt();
            if sigma == 0.0 || !sigma.is_finite() {
                return Err(LinalgError::Singular);
            }
            let x0 = a[(k, k)];
            let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
            let alpha = -phase * sigma;
            // v = x - alpha e1 stored in place of the column
            a[(k, k)] = x0 - alpha;
            let vnorm2 = 2.0 * sigma * (sigma + x0.norm());
            for j in k + 1..n {
                let mut dot = C64::new(0.0, 0.0);
                for i in k..m {
                    dot += a[(i, k)].conj() * a[(i, j)];
                }
                let s = dot * (2.0 / vnorm2);
                for i in k..m {
                    let vik = a[(i, k)];
                    a[(i, j)] -= vik * s;
                }
                norms[j] = C64::new((norms[j].re - a[(k, j)].norm_sqr()).max(0.0), 0.0);
            }
            self.rdiag[k] = alpha;
            rmax = rmax.max(sigma);
            rmin = rmin.min(sigma);
        }
        Ok(rmax / rmin)
    }

    /// Solves `A x = b` (least squares for tall `A`) with the last factorization.
    pub fn solve(&mut self, b: &[C64], x: &mut [C64]) {
        assert_eq!(b.len(), self.rows);
        assert_eq!(x.len(), self.cols);
        if self.rows == self.cols {
            self.solve_lu(b, x)
        } else {
            self.solve_qr(b, x)
        }
    }

    fn solve_lu(&mut self, b: &[C64], x: &mut [C64]) {
        let n = self.rows;
        let a = &self.factors;
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= a[(i, k)] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= a[(i, k)] * x[k];
            }
            x[i] = s / a[(i, i)];
        }
    }

    fn solve_qr(&mut self, b: &[C64], x: &mut [C64]) {
        let (m, n) = (self.rows, self.cols);
        let a = &self.factors;
        let y = &mut self.work;
        y[..m].copy_from_slice(b);
        for k in 0..n {
            let mut vnorm2 = 0.0;
            let mut dot = C64::new(0.0, 0.0);
            for i in k..m {
                vnorm2 += a[(i, k)].norm_sqr();
                dot += a[(i, k)].conj() * y[i];
            }
            let s = dot * (2.0 / vnorm2);
            for i in k..m {
                y[i] -= a[(i, k)] * s;
            }
        }
        // back substitution with R (diagonal in rdiag, strict upper part in a)
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= a[(i, k)] * y[k];
            }
            y[i] = s / self.rdiag[i];
        }
        for k in 0..n {
            x[self.perm[k]] = y[k];
        }
    }
}

/// One-shot solve of `A x = b` (least squares when `A` is tall).
pub fn solve(a: &CMatrix, b: &[C64], cond_limit: f64) -> Result<(Vec<C64>, f64), LinalgError> {
    let mut s = LinearSolver::new(a.nrows(), a.ncols());
    let cond = s.factor(a, cond_limit)?;
    let mut x = vec![C64::new(0.0, 0.0); a.ncols()];
    s.solve(b, &mut x);
    Ok((x, cond))
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm_inf(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> CMatrix {
        CMatrix::from_fn(m, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn residual(a: &CMatrix, x: &[C64], b: &[C64]) -> Vec<C64> {
        (0..a.nrows())
            .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum::<C64>() - b[i])
            .collect()
    }

    #[test]
    fn lu_solves_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..9 {
            let a = random_matrix(&mut rng, n, n);
            let b: Vec<C64> = (0..n).map(|_| C64::new(rng.gen(), rng.gen())).collect();
            let (x, cond) = solve(&a, &b, 1e12).unwrap();
            assert!(cond >= 1.0);
            assert!(norm(&residual(&a, &x, &b)) < 1e-12 * cond);
        }
    }

    #[test]
    fn qr_least_squares_satisfies_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (m, n) in [(3, 2), (5, 4), (6, 4), (9, 3)] {
            let a = random_matrix(&mut rng, m, n);
            let b: Vec<C64> = (0..m).map(|_| C64::new(rng.gen(), rng.gen())).collect();
            let (x, _) = solve(&a, &b, 1e12).unwrap();
            let r = residual(&a, &x, &b);
            // A^H r = 0
            for j in 0..n {
                let g: C64 = (0..m).map(|i| a[(i, j)].conj() * r[i]).sum();
                assert!(g.norm() < 1e-12, "normal equation residual {g}");
            }
        }
    }

    #[test]
    fn consistent_tall_system_is_solved_exactly() {
        // [x - 1, 2(x - 1)]: Jacobian [1, 2]^T, rhs [1, 2] -> x = 1
        let a = CMatrix::from_row_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        let (x, _) = solve(&a, &[C64::new(1.0, 0.0), C64::new(2.0, 0.0)], 1e12).unwrap();
        assert!((x[0] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn singular_and_ill_conditioned() {
        let z = CMatrix::zeros(2, 2);
        assert_eq!(solve(&z, &[C64::new(1.0, 0.0); 2], 1e12).unwrap_err(), LinalgError::Singular);
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1e-14, 0.0)],
        );
        assert!(matches!(solve(&a, &[C64::new(1.0, 0.0); 2], 1e12), Err(LinalgError::IllConditioned(_))));
        let wide = CMatrix::zeros(1, 2);
        assert!(matches!(solve(&wide, &[C64::new(1.0, 0.0)], 1e12), Err(LinalgError::Underdetermined { .. })));
    }
}
