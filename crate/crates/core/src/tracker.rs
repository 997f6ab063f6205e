//! Predictor-corrector path tracking.
//!
//! The predictor integrates the Davidenko equation `J(x,t) x' = -H_t(x,t)`
//! with one classical Runge-Kutta step; the corrector runs Newton's method
//! at the new `t` (least-squares Newton when the homotopy has more
//! equations than unknowns). Paths follow straight segments in the complex
//! `t` plane.

use thiserror::Error;

use crate::homotopy::Homotopy;
use crate::linalg::{norm, LinalgError, LinearSolver};
use crate::{CMatrix, C64};

/// Norm above which an affine path is considered divergent.
pub const DIVERGENCE_NORM: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerOptions {
    pub corrector_tol: f64,
    pub max_corrector_iters: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    pub step_grow: f64,
    pub step_shrink: f64,
    pub cond_limit: f64,
}

impl Default for TrackerOptions {
    fn default() -> Self {
        TrackerOptions {
            corrector_tol: 1e-7,
            max_corrector_iters: 3,
            initial_step: 0.1,
            min_step: 1e-14,
            max_steps: 10_000,
            step_grow: 2.0,
            step_shrink: 0.5,
            cond_limit: 1e12,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid tracker options: {0}")]
pub struct InvalidOptions(pub String);

impl TrackerOptions {
    pub fn validate(&self) -> Result<(), InvalidOptions> {
        let bad = |m: &str| Err(InvalidOptions(m.to_string()));
        if !(self.corrector_tol > 0.0) {
            return bad("corrector_tol must be positive");
        }
        if self.max_corrector_iters == 0 {
            return bad("max_corrector_iters must be at least 1");
        }
        if !(0.0 < self.min_step && self.min_step < self.initial_step && self.initial_step <= 1.0) {
            return bad("need 0 < min_step < initial_step <= 1");
        }
        if !(0.0 < self.step_shrink && self.step_shrink < 1.0 && 1.0 < self.step_grow) {
            return bad("need 0 < step_shrink < 1 < step_grow");
        }
        if !(self.cond_limit > 1.0) {
            return bad("cond_limit must exceed 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathStatus {
    Success,
    FailedMinStep,
    FailedMaxSteps,
    FailedSingularJacobian,
    Diverged,
}

impl PathStatus {
    pub fn is_success(self) -> bool {
        self == PathStatus::Success
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub status: PathStatus,
    pub x_end: Vec<C64>,
    pub t_end: C64,
    /// `|H(x_end, t_end)|`.
    pub residual: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

/// Position and step size of a tracker along its current segment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    pub x: Vec<C64>,
    pub t: C64,
    pub step: f64,
    pub steps_taken: usize,
    pub last_corrector_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub iters: usize,
    /// Norm of the last Newton update.
    pub update_norm: f64,
    /// `|H(x, t)|` at the returned point.
    pub residual: f64,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum CorrectorError {
    #[error("Newton's method did not converge (last update {0:.3e})")]
    NoConvergence(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Tracks paths of one homotopy. Owns all scratch memory, so one tracker
/// per thread.
pub struct Tracker<'h, H: Homotopy> {
    homotopy: &'h H,
    opts: TrackerOptions,
    cache: H::Cache,
    solver: LinearSolver,
    jac: CMatrix,
    values: Vec<C64>,
    rhs: Vec<C64>,
    delta: Vec<C64>,
    stages: [Vec<C64>; 4],
    xtmp: Vec<C64>,
    check_divergence: bool,
    state: TrackerState,
}

impl<'h, H: Homotopy> Tracker<'h, H> {
    pub fn new(homotopy: &'h H, opts: TrackerOptions) -> Self {
        let (m, n) = (homotopy.nequations(), homotopy.nvariables());
        let zeros = |k| vec![C64::new(0.0, 0.0); k];
        Tracker {
            homotopy,
            opts,
            cache: homotopy.cache(),
            solver: LinearSolver::new(m, n),
            jac: CMatrix::zeros(m, n),
            values: zeros(m),
            rhs: zeros(m),
            delta: zeros(n),
            stages: [zeros(n), zeros(n), zeros(n), zeros(n)],
            xtmp: zeros(n),
            check_divergence: true,
            state: TrackerState {
                x: zeros(n),
                t: C64::new(1.0, 0.0),
                step: opts.initial_step,
                steps_taken: 0,
                last_corrector_iters: 0,
            },
        }
    }

    /// Enables the `|x| > 1e14` divergence test (on by default; meaningless
    /// on a projective patch).
    pub fn with_divergence_check(mut self, on: bool) -> Self {
        self.check_divergence = on;
        self
    }

    pub fn homotopy(&self) -> &'h H {
        self.homotopy
    }

    pub fn options(&self) -> &TrackerOptions {
        &self.opts
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    /// Condition estimate of the last factored Jacobian.
    pub fn last_cond(&self) -> f64 {
        self.solver.cond()
    }

    /// `|H(x, t)|`.
    pub fn residual(&mut self, x: &[C64], t: C64) -> f64 {
        self.homotopy.evaluate(x, t, &mut self.values, &mut self.cache);
        norm(&self.values)
    }

    /// Condition estimate of `dH/dx` at `(x, t)`; infinite when singular.
    pub fn condition(&mut self, x: &[C64], t: C64) -> f64 {
        self.homotopy.jacobian(x, t, &mut self.jac, &mut self.cache);
        self.solver.factor(&self.jac, f64::INFINITY).unwrap_or(f64::INFINITY)
    }

    /// Solves `J xdot = -H_t * direction`, i.e. the derivative of the path
    /// along `t = t0 + s * direction`.
    pub fn davidenko(&mut self, x: &[C64], t: C64, direction: C64, out: &mut [C64]) -> Result<(), LinalgError> {
        self.homotopy.jacobian(x, t, &mut self.jac, &mut self.cache);
        self.homotopy.dt(x, t, &mut self.rhs, &mut self.cache);
        self.solver.factor(&self.jac, self.opts.cond_limit)?;
        for r in self.rhs.iter_mut() {
            *r = -*r * direction;
        }
        self.solver.solve(&self.rhs, out);
        Ok(())
    }

    /// Classical four-stage Runge-Kutta step from `(x, t)` to `t + dt`.
    pub fn rk4(&mut self, x: &[C64], t: C64, dt: C64, out: &mut [C64]) -> Result<(), LinalgError> {
        let n = x.len();
        let half = dt * 0.5;
        let mut stages = std::mem::take(&mut self.stages);
        let mut xtmp = std::mem::take(&mut self.xtmp);
        let result = (|| {
            self.davidenko(x, t, C64::new(1.0, 0.0), &mut stages[0])?;
            for i in 0..n {
                xtmp[i] = x[i] + half * stages[0][i];
            }
            self.davidenko(&xtmp, t + half, C64::new(1.0, 0.0), &mut stages[1])?;
            for i in 0..n {
                xtmp[i] = x[i] + half * stages[1][i];
            }
            self.davidenko(&xtmp, t + half, C64::new(1.0, 0.0), &mut stages[2])?;
            for i in 0..n {
                xtmp[i] = x[i] + dt * stages[2][i];
            }
            self.davidenko(&xtmp, t + dt, C64::new(1.0, 0.0), &mut stages[3])?;
            let sixth = dt / 6.0;
            for i in 0..n {
                out[i] = x[i]
                    + sixth * (stages[0][i] + 2.0 * stages[1][i] + 2.0 * stages[2][i] + stages[3][i]);
            }
            Ok(())
        })();
        self.stages = stages;
        self.xtmp = xtmp;
        result
    }

    /// Newton's method at fixed `t`, updating `x` in place. Succeeds once an
    /// update has norm at most `corrector_tol` within `max_iters` steps and
    /// the updates contract.
    pub fn newton(&mut self, x: &mut [C64], t: C64, max_iters: usize) -> Result<NewtonReport, CorrectorError> {
        let tol = self.opts.corrector_tol;
        let mut prev = f64::INFINITY;
        let mut delta = std::mem::take(&mut self.delta);
        let result = (|| {
            for k in 0..max_iters {
                self.homotopy
                    .evaluate_and_jacobian(x, t, &mut self.values, &mut self.jac, &mut self.cache);
                self.solver.factor(&self.jac, self.opts.cond_limit)?;
                self.solver.solve(&self.values, &mut delta);
                for (xi, d) in x.iter_mut().zip(delta.iter()) {
                    *xi -= d;
                }
                let dn = norm(&delta);
                if !dn.is_finite() {
                    return Err(CorrectorError::NoConvergence(dn));
                }
                if dn <= tol {
                    let residual = self.residual(x, t);
                    return Ok(NewtonReport { iters: k + 1, update_norm: dn, residual });
                }
                // a non-contracting iteration means we are outside the
                // quadratic convergence region
                if k > 0 && dn > 0.5 * prev {
                    return Err(CorrectorError::NoConvergence(dn));
                }
                prev = dn;
            }
            Err(CorrectorError::NoConvergence(prev))
        })();
        self.delta = delta;
        result
    }

    /// Newton with the configured iteration limit.
    pub fn correct(&mut self, x: &mut [C64], t: C64) -> Result<NewtonReport, CorrectorError> {
        self.newton(x, t, self.opts.max_corrector_iters)
    }

    /// Tracks from `(x_start, t_from)` to `t_to` along the straight segment
    /// between them.
    pub fn track(&mut self, x_start: &[C64], t_from: C64, t_to: C64) -> PathOutcome {
        let opts = self.opts;
        let n = x_start.len();
        assert_eq!(n, self.homotopy.nvariables(), "start point has wrong dimension");
        let mut x = x_start.to_vec();
        let mut xp = vec![C64::new(0.0, 0.0); n];
        let length = (t_to - t_from).norm();
        let direction = if length > 0.0 { (t_to - t_from) / length } else { C64::new(1.0, 0.0) };
        let mut s = 0.0;
        let mut step = opts.initial_step;
        let (mut accepted, mut rejected) = (0usize, 0usize);
        let mut last_error: Option<CorrectorError> = None;

        let finish = |this: &mut Self, status, x: Vec<C64>, t: C64, accepted, rejected| {
            let residual = this.residual(&x, t);
            this.state.x.clone_from(&x);
            this.state.t = t;
            PathOutcome { status, x_end: x, t_end: t, residual, steps_accepted: accepted, steps_rejected: rejected }
        };

        // make sure we start on the path
        match self.newton(&mut x, t_from, opts.max_corrector_iters + 2) {
            Ok(r) => self.state.last_corrector_iters = r.iters,
            Err(_) => {
                x.copy_from_slice(x_start);
                return finish(self, PathStatus::FailedSingularJacobian, x, t_from, 0, 0);
            }
        }

        while s < length {
            if accepted + rejected >= opts.max_steps {
                let t = t_from + direction * s;
                return finish(self, PathStatus::FailedMaxSteps, x, t, accepted, rejected);
            }
            let h = step.min(length - s);
            let last = s + h >= length;
            let t = t_from + direction * s;
            let t_next = if last { t_to } else { t_from + direction * (s + h) };

            let ok = match self.rk4(&x, t, t_next - t, &mut xp) {
                Err(e) => {
                    last_error = Some(e.into());
                    None
                }
                Ok(()) => match self.correct(&mut xp, t_next) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        last_error = Some(e);
                        None
                    }
                },
            };

            match ok {
                Some(report) => {
                    x.copy_from_slice(&xp);
                    s = if last { length } else { s + h };
                    accepted += 1;
                    self.state.last_corrector_iters = report.iters;
                    if report.iters <= 2 {
                        step = (step * opts.step_grow).min(opts.initial_step);
                    }
                    if self.check_divergence && norm(&x) > DIVERGENCE_NORM {
                        return finish(self, PathStatus::Diverged, x, t_next, accepted, rejected);
                    }
                }
                None => {
                    rejected += 1;
                    step *= opts.step_shrink;
                    if step < opts.min_step {
                        let status = match last_error {
                            Some(CorrectorError::Linalg(_)) => PathStatus::FailedSingularJacobian,
                            _ => PathStatus::FailedMinStep,
                        };
                        return finish(self, status, x, t, accepted, rejected);
                    }
                }
            }
            self.state.step = step;
            self.state.steps_taken = accepted + rejected;
        }

        // polish at the endpoint
        let mut polished = x.clone();
        let converged = match self.newton(&mut polished, t_to, opts.max_corrector_iters + 2) {
            Ok(r) => {
                if r.residual <= self.residual(&x, t_to) {
                    x = polished;
                }
                true
            }
            Err(_) => false,
        };
        let residual = self.residual(&x, t_to);
        let status = if converged || residual <= opts.corrector_tol {
            PathStatus::Success
        } else if self.condition(&x, t_to) > opts.cond_limit {
            PathStatus::FailedSingularJacobian
        } else {
            PathStatus::FailedMinStep
        };
        finish(self, status, x, t_to, accepted, rejected)
    }
}

/// `xdot` solving `J xdot = -H_t` at `(x, t)`.
pub fn davidenko_rhs<H: Homotopy>(h: &H, x: &[C64], t: C64, cond_limit: f64) -> Result<Vec<C64>, LinalgError> {
    let opts = TrackerOptions { cond_limit, ..TrackerOptions::default() };
    let mut tracker = Tracker::new(h, opts);
    let mut out = vec![C64::new(0.0, 0.0); x.len()];
    tracker.davidenko(x, t, C64::new(1.0, 0.0), &mut out)?;
    Ok(out)
}

/// One Runge-Kutta step of the Davidenko equation from `t` to `t + dt`.
pub fn rk4_predict<H: Homotopy>(h: &H, x: &[C64], t: C64, dt: C64) -> Result<Vec<C64>, LinalgError> {
    let mut tracker = Tracker::new(h, TrackerOptions::default());
    let mut out = vec![C64::new(0.0, 0.0); x.len()];
    tracker.rk4(x, t, dt, &mut out)?;
    Ok(out)
}

/// Newton correction at fixed `t`.
pub fn newton_correct<H: Homotopy>(
    h: &H,
    x: &[C64],
    t: C64,
    opts: &TrackerOptions,
) -> Result<(Vec<C64>, NewtonReport), CorrectorError> {
    let mut tracker = Tracker::new(h, *opts);
    let mut x = x.to_vec();
    let report = tracker.correct(&mut x, t)?;
    Ok((x, report))
}

/// Tracks one path from `t_from` to `t_to`.
pub fn track<H: Homotopy>(h: &H, x_start: &[C64], t_from: C64, t_to: C64, opts: &TrackerOptions) -> PathOutcome {
    Tracker::new(h, *opts).track(x_start, t_from, t_to)
}
