//! The homotopy contract and its generic realizations.
//!
//! Paths run from the start system at `t = 1` to the target at `t = 0`.
//! `t` is complex so the endgame can loop around the origin.

use crate::poly::PolySystem;
use crate::{CMatrix, C64};

/// A family of systems `H(x, t)` with derivatives in `x` and `t`.
///
/// Output buffers are written in their first [`Homotopy::nequations`]
/// entries (rows, for Jacobians); callers may pass larger buffers. Each
/// tracker owns one [`Homotopy::Cache`] and never shares it.
pub trait Homotopy: Sync {
    type Cache: Send;

    fn nequations(&self) -> usize;
    fn nvariables(&self) -> usize;
    fn cache(&self) -> Self::Cache;

    fn evaluate(&self, x: &[C64], t: C64, out: &mut [C64], cache: &mut Self::Cache);
    fn jacobian(&self, x: &[C64], t: C64, jac: &mut CMatrix, cache: &mut Self::Cache);
    fn dt(&self, x: &[C64], t: C64, out: &mut [C64], cache: &mut Self::Cache);

    /// Value and Jacobian together; overridden where they share work.
    fn evaluate_and_jacobian(
        &self,
        x: &[C64],
        t: C64,
        out: &mut [C64],
        jac: &mut CMatrix,
        cache: &mut Self::Cache,
    ) {
        self.evaluate(x, t, out, cache);
        self.jacobian(x, t, jac, cache);
    }
}

impl<H: Homotopy> Homotopy for &H {
    type Cache = H::Cache;

    fn nequations(&self) -> usize {
        (**self).nequations()
    }
    fn nvariables(&self) -> usize {
        (**self).nvariables()
    }
    fn cache(&self) -> Self::Cache {
        (**self).cache()
    }
    fn evaluate(&self, x: &[C64], t: C64, out: &mut [C64], cache: &mut Self::Cache) {
        (**self).evaluate(x, t, out, cache)
    }
    fn jacobian(&self, x: &[C64], t: C64, jac: &mut CMatrix, cache: &mut Self::Cache) {
        (**self).jacobian(x, t, jac, cache)
    }
    fn dt(&self, x: &[C64], t: C64, out: &mut [C64], cache: &mut Self::Cache) {
        (**self).dt(x, t, out, cache)
    }
    fn evaluate_and_jacobian(
        &self,
        x: &[C64],
        t: C64,
        out: &mut [C64],
        jac: &mut CMatrix,
        cache: &mut Self::Cache,
    ) {
        (**self).evaluate_and_jacobian(x, t, out, jac, cache)
    }
}

/// Convenience wrappers allocating fresh outputs and a fresh cache.
pub trait HomotopyExt: Homotopy {
    fn eval_at(&self, x: &[C64], t: C64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.nequations()];
        self.evaluate(x, t, &mut out, &mut self.cache());
        out
    }

    fn jacobian_at(&self, x: &[C64], t: C64) -> CMatrix {
        let mut jac = CMatrix::zeros(self.nequations(), self.nvariables());
        self.jacobian(x, t, &mut jac, &mut self.cache());
        jac
    }

    fn dt_at(&self, x: &[C64], t: C64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.nequations()];
        self.dt(x, t, &mut out, &mut self.cache());
        out
    }
}

impl<H: Homotopy + ?Sized> HomotopyExt for H {}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HomotopyError {
    #[error("start and target systems differ in shape: {0}")]
    ShapeMismatch(String),
    #[error("gamma must have unit modulus, got |gamma| = {0}")]
    GammaNotUnit(f64),
    #[error("patch vector must be nonzero")]
    ZeroPatch,
}

/// `H(x, t) = (1 - t) F(x) + gamma t G(x)`.
#[derive(Debug, Clone)]
pub struct StraightLineHomotopy {
    target: PolySystem,
    start: PolySystem,
    gamma: C64,
}

#[derive(Debug, Clone)]
pub struct StraightLineCache {
    stack: Vec<C64>,
    tmp: Vec<C64>,
    tmp_jac: CMatrix,
}

impl StraightLineHomotopy {
    pub fn new(target: PolySystem, start: PolySystem, gamma: C64) -> Result<Self, HomotopyError> {
        if target.nvars() != start.nvars() || target.npolys() != start.npolys() {
            return Err(HomotopyError::ShapeMismatch(format!(
                "target {}x{}, start {}x{}",
                target.npolys(),
                target.nvars(),
                start.npolys(),
                start.nvars()
            )));
        }
        if (gamma.norm() - 1.0).abs() > 1e-12 {
            return Err(HomotopyError::GammaNotUnit(gamma.norm()));
        }
        Ok(StraightLineHomotopy { target, start, gamma })
    }

    pub fn target(&self) -> &PolySystem {
        &self.target
    }

    pub fn start(&self) -> &PolySystem {
        &self.start
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }
}

impl Homotopy for StraightLineHomotopy {
    type Cache = StraightLineCache;

    fn nequations(&self) -> usize {
        self.target.npolys()
    }

    fn nvariables(&self) -> usize {
        self.target.nvars()
    }

    fn cache(&self) -> StraightLineCache {
        StraightLineCache {
            stack: self.target.scratch(),
            tmp: vec![C64::new(0.0, 0.0); self.nequations()],
            tmp_jac: CMatrix::zeros(self.nequations(), self.nvariables()),
        }
    }

    fn evaluate(&self, x: &[C64], t: C64, out: &mut [C64], cache: &mut StraightLineCache) {
        let m = self.nequations();
        self.target.evaluate_into(x, &mut out[..m], &mut cache.stack);
        self.start.evaluate_into(x, &mut cache.tmp, &mut cache.stack);
        let a = C64::new(1.0, 0.0) - t;
        let b = self.gamma * t;
        for (o, g) in out[..m].iter_mut().zip(&cache.tmp) {
            *o = a * *o + b * g;
        }
    }

    fn jacobian(&self, x: &[C64], t: C64, jac: &mut CMatrix, cache: &mut StraightLineCache) {
        self.target.jacobian_into(x, jac, &mut cache.stack);
        self.start.jacobian_into(x, &mut cache.tmp_jac, &mut cache.stack);
        let a = C64::new(1.0, 0.0) - t;
        let b = self.gamma * t;
        for j in 0..self.nvariables() {
            for i in 0..self.nequations() {
                jac[(i, j)] = a * jac[(i, j)] + b * cache.tmp_jac[(i, j)];
            }
        }
    }

    fn dt(&self, x: &[C64], _t: C64, out: &mut [C64], cache: &mut StraightLineCache) {
        let m = self.nequations();
        self.target.evaluate_into(x, &mut out[..m], &mut cache.stack);
        self.start.evaluate_into(x, &mut cache.tmp, &mut cache.stack);
        for (o, g) in out[..m].iter_mut().zip(&cache.tmp) {
            *o = self.gamma * g - *o;
        }
    }
}

/// A polynomial system in `(x, t)` whose last variable is the homotopy
/// parameter.
#[derive(Debug, Clone)]
pub struct PolyHomotopy {
    system: PolySystem,
}

#[derive(Debug, Clone)]
pub struct PolyHomotopyCache {
    stack: Vec<C64>,
    point: Vec<C64>,
    full_jac: CMatrix,
}

impl PolyHomotopy {
    /// `system` has `k + 1` variables; the last one is `t`.
    pub fn new(system: PolySystem) -> Self {
        assert!(system.nvars() >= 2, "need at least one x variable and t");
        PolyHomotopy { system }
    }

    pub fn system(&self) -> &PolySystem {
        &self.system
    }

    fn load(&self, x: &[C64], t: C64, cache: &mut PolyHomotopyCache) {
        let k = self.nvariables();
        cache.point[..k].copy_from_slice(&x[..k]);
        cache.point[k] = t;
    }
}

impl Homotopy for PolyHomotopy {
    type Cache = PolyHomotopyCache;

    fn nequations(&self) -> usize {
        self.system.npolys()
    }

    fn nvariables(&self) -> usize {
        self.system.nvars() - 1
    }

    fn cache(&self) -> PolyHomotopyCache {
        PolyHomotopyCache {
            stack: self.system.scratch(),
            point: vec![C64::new(0.0, 0.0); self.system.nvars()],
            full_jac: CMatrix::zeros(self.system.npolys(), self.system.nvars()),
        }
    }

    fn evaluate(&self, x: &[C64], t: C64, out: &mut [C64], cache: &mut PolyHomotopyCache) {
        self.load(x, t, cache);
        let m = self.nequations();
        self.system.evaluate_into(&cache.point, &mut out[..m], &mut cache.stack);
    }

    fn jacobian(&self, x: &[C64], t: C64, jac: &mut CMatrix, cache: &mut PolyHomotopyCache) {
        self.load(x, t, cache);
        self.system.jacobian_into(&cache.point, &mut cache.full_jac, &mut cache.stack);
        for j in 0..self.nvariables() {
            for i in 0..self.nequations() {
                jac[(i, j)] = cache.full_jac[(i, j)];
            }
        }
    }

    fn dt(&self, x: &[C64], t: C64, out: &mut [C64], cache: &mut PolyHomotopyCache) {
        self.load(x, t, cache);
        self.system.jacobian_into(&cache.point, &mut cache.full_jac, &mut cache.stack);
        let k = self.nvariables();
        for (i, o) in out[..self.nequations()].iter_mut().enumerate() {
            *o = cache.full_jac[(i, k)];
        }
    }
}

/// The affine chart `{ x : v . x = 1 }` of projective space.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePatch {
    v: Vec<C64>,
}

impl AffinePatch {
    pub fn new(v: Vec<C64>) -> Result<Self, HomotopyError> {
        if v.iter().all(|c| c.norm() == 0.0) {
            return Err(HomotopyError::ZeroPatch);
        }
        Ok(AffinePatch { v })
    }

    /// The patch through `x` orthogonal to it: `v = conj(x) / |x|^2`, so
    /// that `v . x = 1`.
    pub fn through(x: &[C64]) -> Result<Self, HomotopyError> {
        let n2: f64 = x.iter().map(|c| c.norm_sqr()).sum();
        if n2 == 0.0 {
            return Err(HomotopyError::ZeroPatch);
        }
        AffinePatch::new(x.iter().map(|c| c.conj() / n2).collect())
    }

    pub fn vector(&self) -> &[C64] {
        &self.v
    }

    /// `v . x - 1` (bilinear, no conjugation).
    pub fn residual(&self, x: &[C64]) -> C64 {
        self.v.iter().zip(x).map(|(a, b)| a * b).sum::<C64>() - 1.0
    }

    /// Rescales `x` onto the chart; `None` if `v . x = 0`.
    pub fn project(&self, x: &[C64]) -> Option<Vec<C64>> {
        let s = self.residual(x) + 1.0;
        (s.norm() > 0.0).then(|| x.iter().map(|c| c / s).collect())
    }
}

/// A homogeneous homotopy restricted to an affine chart by appending the
/// equation `v . x - 1 = 0`.
#[derive(Debug, Clone)]
pub struct PatchedHomotopy<H> {
    inner: H,
    patch: AffinePatch,
}

impl<H: Homotopy> PatchedHomotopy<H> {
    pub fn new(inner: H, patch: AffinePatch) -> Self {
        assert_eq!(inner.nvariables(), patch.vector().len(), "patch length must match variables");
        PatchedHomotopy { inner, patch }
    }

    pub fn inner(&self) -> &H {
        &self.inner
    }

    pub fn patch(&self) -> &AffinePatch {
        &self.patch
    }
}

impl<H: Homotopy> Homotopy for PatchedHomotopy<H> {
    type Cache = H::Cache;

    fn nequations(&self) -> usize {
        self.inner.nequations() + 1
    }

    fn nvariables(&self) -> usize {
        self.inner.nvariables()
    }

    fn cache(&self) -> H::Cache {
        self.inner.cache()
    }

    fn evaluate(&self, x: &[C64], t: C64, out: &mut [C64], cache: &mut H::Cache) {
        let m = self.inner.nequations();
        self.inner.evaluate(x, t, out, cache);
        out[m] = self.patch.residual(x);
    }

    fn jacobian(&self, x: &[C64], t: C64, jac: &mut CMatrix, cache: &mut H::Cache) {
        let m = self.inner.nequations();
        self.inner.jacobian(x, t, jac, cache);
        for (j, v) in self.patch.v.iter().enumerate() {
            jac[(m, j)] = *v;
        }
    }

    fn dt(&self, x: &[C64], t: C64, out: &mut [C64], cache: &mut H::Cache) {
        let m = self.inner.nequations();
        self.inner.dt(x, t, out, cache);
        out[m] = C64::new(0.0, 0.0);
    }

    fn evaluate_and_jacobian(
        &self,
        x: &[C64],
        t: C64,
        out: &mut [C64],
        jac: &mut CMatrix,
        cache: &mut H::Cache,
    ) {
        let m = self.inner.nequations();
        self.inner.evaluate_and_jacobian(x, t, out, jac, cache);
        out[m] = self.patch.residual(x);
        for (j, v) in self.patch.v.iter().enumerate() {
            jac[(m, j)] = *v;
        }
    }
}
