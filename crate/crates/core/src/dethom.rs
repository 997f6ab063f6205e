//! Determinant homotopies between symmetroids.
//!
//! For a pencil `A(x) = x0 A0 + x1 A1 + x2 A2 + x3 A3` of real symmetric
//! matrices the symmetroid is `f(x) = det A(x) = 0`, and its singular points
//! are the zeros of `F(x) = (f, df/dx0, .., df/dx3)`. The homotopy
//! `H(x, t) = F_{(1 - t) A + t B}(x)` moves singular points of one
//! symmetroid to another. All derivatives come from trace identities on a
//! singular value decomposition `A(x) = U S V^H`:
//!
//! ```text
//! df[X]      = c * sum_k  Y[k,k] * prod_{m != k} s_m
//! d2f[X, Z]  = c * sum_{k != l} (Y[k,k] W[l,l] - Y[k,l] W[l,k]) * prod_{m != k,l} s_m
//! ```
//!
//! with `Y = U^H X V`, `W = U^H Z V` and `c = det U * det V^H`. This is the
//! adjugate form of `det(A) tr(A^-1 X)` and stays finite when `A(x)` drops
//! rank, which is exactly what happens at the endpoints.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::homotopy::Homotopy;
use crate::linalg::norm_inf;
use crate::poly::{Monomial, PolySystem, Polynomial};
use crate::solver::{random_gamma, solve, solve_with_start, Coordinates, SolveError, SolveOptions, SolveResult};
use crate::{CMatrix, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DethomError {
    #[error("matrix {index} is not symmetric")]
    NotSymmetric { index: usize },
    #[error("matrix {index} has shape {rows}x{cols}, expected {n}x{n}")]
    Shape { index: usize, rows: usize, cols: usize, n: usize },
    #[error("pencils have sizes {0} and {1}")]
    SizeMismatch(usize, usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("x0 vanishes; the affine chart is undefined")]
    ChartUndefined,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Four real symmetric `n x n` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPencil {
    mats: [DMatrix<f64>; 4],
    complex: [CMatrix; 4],
}

impl SymmetricPencil {
    pub fn new(mats: [DMatrix<f64>; 4]) -> Result<Self, DethomError> {
        let n = mats[0].nrows();
        for (index, m) in mats.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n || n == 0 {
                return Err(DethomError::Shape { index, rows: m.nrows(), cols: m.ncols(), n: n.max(1) });
            }
            if (m - m.transpose()).amax() > 1e-12 {
                return Err(DethomError::NotSymmetric { index });
            }
        }
        let complex = mats.clone().map(|m| m.map(|v| C64::new(v, 0.0)));
        Ok(SymmetricPencil { mats, complex })
    }

    /// Entries uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mats = std::array::from_fn(|_| {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = rng.gen_range(-1.0..1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            m
        });
        SymmetricPencil::new(mats).expect("random pencil is symmetric")
    }

    pub fn n(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn matrices(&self) -> &[DMatrix<f64>; 4] {
        &self.mats
    }

    pub fn complex_matrices(&self) -> &[CMatrix; 4] {
        &self.complex
    }
}

/// `x0 A0 + x1 A1 + x2 A2 + x3 A3`.
pub fn pencil_value(p: &SymmetricPencil, x: &[C64]) -> CMatrix {
    combine(&p.complex, x)
}

fn combine(mats: &[CMatrix; 4], x: &[C64]) -> CMatrix {
    let mut out = &mats[0] * x[0];
    for i in 1..4 {
        out.zip_apply(&mats[i], |o, m| *o += m * x[i]);
    }
    out
}

/// `det A(x)` through an LU factorization.
pub fn f_eval(p: &SymmetricPencil, x: &[C64]) -> C64 {
    pencil_value(p, x).lu().determinant()
}

/// Decomposition of one pencil value and the projected directions needed
/// for first and second derivatives of its determinant.
#[derive(Debug, Clone)]
pub struct PencilWorkspace {
    n: usize,
    u_h: CMatrix,
    v: CMatrix,
    sigma: Vec<f64>,
    coef: C64,
    /// `prod_{m != k} s_m`
    except_one: Vec<f64>,
    /// `prod_{m != k, l} s_m`
    except_two: DMatrix<f64>,
    proj: [CMatrix; 4],
    tmp: CMatrix,
}

impl PencilWorkspace {
    pub fn new(n: usize) -> Self {
        PencilWorkspace {
            n,
            u_h: CMatrix::zeros(n, n),
            v: CMatrix::zeros(n, n),
            sigma: vec![0.0; n],
            coef: C64::new(0.0, 0.0),
            except_one: vec![0.0; n],
            except_two: DMatrix::zeros(n, n),
            proj: std::array::from_fn(|_| CMatrix::zeros(n, n)),
            tmp: CMatrix::zeros(n, n),
        }
    }

    /// Decomposes `sum x_i mats[i]` and projects the four `mats`.
    pub fn refresh(&mut self, mats: &[CMatrix; 4], x: &[C64]) {
        let value = combine(mats, x);
        let svd = value.svd(true, true);
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^H");
        self.coef = u.clone().lu().determinant() * v_t.clone().lu().determinant();
        self.u_h = u.adjoint();
        self.v = v_t.adjoint();
        self.sigma.copy_from_slice(svd.singular_values.as_slice());
        let n = self.n;
        for k in 0..n {
            self.except_one[k] = (0..n).filter(|&m| m != k).map(|m| self.sigma[m]).product();
            for l in 0..n {
                self.except_two[(k, l)] =
                    if k == l { 0.0 } else { (0..n).filter(|&m| m != k && m != l).map(|m| self.sigma[m]).product() };
            }
        }
        for i in 0..4 {
            let mut p = std::mem::replace(&mut self.proj[i], CMatrix::zeros(0, 0));
            self.project_into(&mats[i], &mut p);
            self.proj[i] = p;
        }
    }

    fn project_into(&mut self, m: &CMatrix, out: &mut CMatrix) {
        self.tmp.gemm(C64::new(1.0, 0.0), &self.u_h, m, C64::new(0.0, 0.0));
        out.gemm(C64::new(1.0, 0.0), &self.tmp, &self.v, C64::new(0.0, 0.0));
    }

    /// `U^H m V` for an arbitrary direction `m`.
    pub fn project(&mut self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        self.project_into(m, &mut out);
        out
    }

    pub fn det(&self) -> C64 {
        self.coef * self.sigma.iter().product::<f64>()
    }

    /// Directional derivative of `det` along a projected direction.
    pub fn d1(&self, y: &CMatrix) -> C64 {
        let s: C64 = (0..self.n).map(|k| y[(k, k)] * self.except_one[k]).sum();
        self.coef * s
    }

    /// Second directional derivative of `det` along two projected
    /// directions.
    pub fn d2(&self, y: &CMatrix, w: &CMatrix) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for k in 0..self.n {
            for l in 0..self.n {
                if k != l {
                    s += (y[(k, k)] * w[(l, l)] - y[(k, l)] * w[(l, k)]) * self.except_two[(k, l)];
                }
            }
        }
        self.coef * s
    }

    /// Gradient of `det A(x)` for the matrices of the last refresh.
    pub fn gradient(&self) -> [C64; 4] {
        std::array::from_fn(|i| self.d1(&self.proj[i]))
    }

    pub fn hessian(&self) -> [[C64; 4]; 4] {
        let mut h = [[C64::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                let v = self.d2(&self.proj[i], &self.proj[j]);
                h[i][j] = v;
                h[j][i] = v;
            }
        }
        h
    }
}

pub fn f_gradient(p: &SymmetricPencil, x: &[C64], ws: &mut PencilWorkspace) -> [C64; 4] {
    ws.refresh(&p.complex, x);
    ws.gradient()
}

pub fn f_hessian(p: &SymmetricPencil, x: &[C64], ws: &mut PencilWorkspace) -> [[C64; 4]; 4] {
    ws.refresh(&p.complex, x);
    ws.hessian()
}

/// `(f, df/dx0, df/dx1, df/dx2, df/dx3)`.
pub fn system_eval(p: &SymmetricPencil, x: &[C64], ws: &mut PencilWorkspace) -> [C64; 5] {
    ws.refresh(&p.complex, x);
    let g = ws.gradient();
    [ws.det(), g[0], g[1], g[2], g[3]]
}

/// `H(x, t) = F_{(1 - t) A + gamma t B}(x)`: five equations in four
/// homogeneous unknowns.
///
/// `F` is homogeneous in the pencil, so a unit `gamma` only bends the path
/// through the family `(1 - s) A + s B` into the complex plane. With
/// `gamma = 1` and real `A`, `B` the path stays real and may cross places
/// where two real singular points meet.
#[derive(Debug, Clone)]
pub struct DeterminantHomotopy {
    target: SymmetricPencil,
    start: SymmetricPencil,
    gamma: C64,
    diff: [CMatrix; 4],
}

#[derive(Debug, Clone)]
pub struct DethomCache {
    ws: PencilWorkspace,
    blend: [CMatrix; 4],
    direction: CMatrix,
}

impl DeterminantHomotopy {
    pub fn new(target: SymmetricPencil, start: SymmetricPencil) -> Result<Self, DethomError> {
        if target.n() != start.n() {
            return Err(DethomError::SizeMismatch(target.n(), start.n()));
        }
        let gamma = C64::new(1.0, 0.0);
        let diff = direction(&target, &start, gamma);
        Ok(DeterminantHomotopy { target, start, gamma, diff })
    }

    pub fn with_gamma(mut self, gamma: C64) -> Self {
        self.gamma = gamma;
        self.diff = direction(&self.target, &self.start, gamma);
        self
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }

    pub fn target(&self) -> &SymmetricPencil {
        &self.target
    }

    pub fn start(&self) -> &SymmetricPencil {
        &self.start
    }

    fn load(&self, x: &[C64], t: C64, cache: &mut DethomCache) {
        let s = C64::new(1.0, 0.0) - t;
        let t = self.gamma * t;
        for i in 0..4 {
            let (a, b) = (&self.target.complex[i], &self.start.complex[i]);
            cache.blend[i].zip_zip_apply(a, b, |o, a, b| *o = s * a + t * b);
        }
        cache.ws.refresh(&cache.blend, x);
    }
}

impl Homotopy for DeterminantHomotopy {
    type Cache = DethomCache;

    fn nequations(&self) -> usize {
        5
    }

    fn nvariables(&self) -> usize {
        4
    }

    fn cache(&self) -> DethomCache {
        let n = self.target.n();
        DethomCache {
            ws: PencilWorkspace::new(n),
            blend: std::array::from_fn(|_| CMatrix::zeros(n, n)),
            direction: CMatrix::zeros(n, n),
        }
    }

    fn evaluate(&self, x: &[C64], t: C64, out: &mut [C64], cache: &mut DethomCache) {
        self.load(x, t, cache);
        out[0] = cache.ws.det();
        out[1..5].copy_from_slice(&cache.ws.gradient());
    }

    fn jacobian(&self, x: &[C64], t: C64, jac: &mut CMatrix, cache: &mut DethomCache) {
        self.load(x, t, cache);
        write_jacobian(&cache.ws, jac);
    }

    fn dt(&self, x: &[C64], t: C64, out: &mut [C64], cache: &mut DethomCache) {
        self.load(x, t, cache);
        cache.direction = combine(&self.diff, x);
        let d = cache.ws.project(&cache.direction);
        out[0] = cache.ws.d1(&d);
        for i in 0..4 {
            let e = cache.ws.project(&self.diff[i]);
            out[1 + i] = cache.ws.d2(&cache.ws.proj[i], &d) + cache.ws.d1(&e);
        }
    }

    fn evaluate_and_jacobian(&self, x: &[C64], t: C64, out: &mut [C64], jac: &mut CMatrix, cache: &mut DethomCache) {
        self.load(x, t, cache);
        out[0] = cache.ws.det();
        out[1..5].copy_from_slice(&cache.ws.gradient());
        write_jacobian(&cache.ws, jac);
    }
}

/// `d/dt` of the blended pencil, `gamma B - A`.
fn direction(target: &SymmetricPencil, start: &SymmetricPencil, gamma: C64) -> [CMatrix; 4] {
    std::array::from_fn(|i| start.complex[i].map(|v| v * gamma) - &target.complex[i])
}

fn write_jacobian(ws: &PencilWorkspace, jac: &mut CMatrix) {
    let g = ws.gradient();
    let h = ws.hessian();
    for j in 0..4 {
        jac[(0, j)] = g[j];
        for i in 0..4 {
            jac[(1 + i, j)] = h[i][j];
        }
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of singular points of a generic symmetroid of degree `n`.
pub fn singular_point_count(n: u64) -> u128 {
    binomial(n + 1, 3)
}

/// Number of monomials in the expanded homotopy `H(x, t)`, summed over its
/// five components. `n` must be at least 1.
pub fn monomial_count(n: u64) -> u128 {
    assert!(n >= 1, "pencil size must be positive");
    let n1 = (n + 1) as u128;
    n1 * binomial(n + 3, n) + 4 * n1 * binomial(n + 2, n - 1)
}

/// Whether `A0 + z1 A1 + z2 A2 + z3 A3` with `z = x / x0` is positive
/// semidefinite up to `tol` relative to its spectral norm.
pub fn on_spectrahedron_boundary(p: &SymmetricPencil, x: &[f64; 4], tol: f64) -> Result<bool, DethomError> {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if x[0].abs() <= 1e-8 * scale || x[0] == 0.0 {
        return Err(DethomError::ChartUndefined);
    }
    let mut a = p.mats[0].clone();
    for i in 1..4 {
        a += &p.mats[i] * (x[i] / x[0]);
    }
    let eig = a.symmetric_eigenvalues();
    let norm = eig.amax();
    Ok(eig.min() >= -tol * norm.max(f64::MIN_POSITIVE))
}

/// Expands `det A(x)` into a polynomial in `x0..x3` (Leibniz formula).
pub fn expanded_determinant(p: &SymmetricPencil) -> Polynomial {
    let n = p.n();
    let entry = |r: usize, c: usize| {
        Polynomial::new(4, (0..4).map(|i| (C64::new(p.mats[i][(r, c)], 0.0), Monomial::var(4, i))))
    };
    let mut total = Polynomial::zero(4);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    permutations(&mut perm, 0, &mut sign, &mut |perm, sign| {
        let mut term = Polynomial::constant(4, C64::new(sign, 0.0));
        for (r, &c) in perm.iter().enumerate() {
            term = &term * &entry(r, c);
        }
        total = &total + &term;
    });
    total
}

fn permutations(perm: &mut [usize], k: usize, sign: &mut f64, f: &mut impl FnMut(&[usize], f64)) {
    if k == perm.len() {
        f(perm, *sign);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        if i != k {
            *sign = -*sign;
        }
        permutations(perm, k + 1, sign, f);
        perm.swap(k, i);
        if i != k {
            *sign = -*sign;
        }
    }
}

/// Singular points of the symmetroid of `p`, found by solving the expanded
/// gradient equations on the chart `x0 = 1`. Only practical for small `n`.
///
/// The four gradient components are compressed into three random linear
/// combinations to get a square system; endpoints that do not satisfy all
/// five equations are discarded.
pub fn singular_points(p: &SymmetricPencil, opts: &SolveOptions) -> Result<Vec<Vec<C64>>, DethomError> {
    use rand::SeedableRng;
    let f = expanded_determinant(p);
    let grads: Vec<Polynomial> = (0..4).map(|i| f.differentiate(i).expect("index in range")).collect();
    let dehom = |q: &Polynomial| chart(q);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let mut square = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut comb = Polynomial::zero(3);
        for g in &grads {
            let c = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            comb = &comb + &dehom(g).scale(c);
        }
        square.push(comb);
    }
    let system = PolySystem::new(square).expect("three polynomials");
    let result = solve(&system, opts)?;
    let full: Vec<Polynomial> = std::iter::once(&f).chain(&grads).map(dehom).collect();
    let scale = full.iter().map(|q| q.coefficient_scale()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for s in result.solutions {
        let size = 1.0 + norm_inf(&s.x);
        let worst = full
            .iter()
            .map(|q| q.evaluate(&s.x).expect("three variables").norm())
            .fold(0.0, f64::max);
        if worst <= 1e-8 * scale * size.powi(p.n() as i32) {
            out.push(std::iter::once(C64::new(1.0, 0.0)).chain(s.x).collect());
        }
    }
    Ok(out)
}

/// Substitutes `x0 = 1` into a polynomial in `x0..x3`.
fn chart(q: &Polynomial) -> Polynomial {
    Polynomial::new(3, q.terms().iter().map(|(c, m)| (*c, Monomial::new(m.exponents()[1..].to_vec()))))
}

/// Tracks the singular points `starts` of the symmetroid of `start` to the
/// symmetroid of `target`, with `gamma` drawn from `opts.seed`.
pub fn track_singular_points(
    target: &SymmetricPencil,
    start: &SymmetricPencil,
    starts: &[Vec<C64>],
    opts: &SolveOptions,
) -> Result<SolveResult, DethomError> {
    let gamma = random_gamma(opts.seed);
    let h = DeterminantHomotopy::new(target.clone(), start.clone())?.with_gamma(gamma);
    let mut result = solve_with_start(&h, starts, Coordinates::Projective { homogenizing: None }, opts)?;
    result.gamma = Some(gamma);
    Ok(result)
}

/// Reads the pencil format: a header `n: <size>` followed by four `n x n`
/// matrices, one row per line. Blank lines and `#` comments are ignored.
pub fn parse_pencil(text: &str) -> Result<SymmetricPencil, DethomError> {
    let mut n: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| DethomError::Parse { line: line_no, message };
        match n {
            None => {
                let size = line
                    .strip_prefix("n:")
                    .ok_or_else(|| err("expected header `n: <size>`".into()))?
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| err(format!("bad size: {e}")))?;
                if size == 0 {
                    return Err(err("size must be positive".into()));
                }
                n = Some(size);
            }
            Some(size) => {
                let row = line
                    .split_whitespace()
                    .map(|w| w.parse::<f64>().map_err(|_| err(format!("bad number `{w}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if row.len() != size {
                    return Err(err(format!("expected {size} entries, found {}", row.len())));
                }
                if rows.len() == 4 * size {
                    return Err(err("more than four matrices".into()));
                }
                rows.push(row);
            }
        }
    }
    let lines = text.lines().count().max(1);
    let size = n.ok_or(DethomError::Parse { line: 1, message: "missing header".into() })?;
    if rows.len() != 4 * size {
        return Err(DethomError::Parse {
            line: lines,
            message: format!("expected {} matrix rows, found {}", 4 * size, rows.len()),
        });
    }
    let mats = std::array::from_fn(|k| DMatrix::from_fn(size, size, |i, j| rows[k * size + i][j]));
    SymmetricPencil::new(mats)
}

pub fn write_pencil(p: &SymmetricPencil) -> String {
    let mut out = format!("n: {}\n", p.n());
    for (k, m) in p.mats.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for i in 0..p.n() {
            let row: Vec<String> = (0..p.n()).map(|j| format!("{:?}", m[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}
