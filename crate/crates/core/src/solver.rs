//! Solving square systems end to end.
//!
//! [`solve`] homogenizes the target and its total-degree start system,
//! tracks every start solution on its own affine chart, resolves endpoints
//! with the Cauchy endgame and reports the distinct finite solutions.
//! [`solve_with_start`] runs the same machinery for any homotopy with
//! user-supplied start points.

use std::f64::consts::TAU;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::endgame::{run_endgame, EndgameOptions};
use crate::homotopy::{AffinePatch, Homotopy, HomotopyError, PatchedHomotopy, StraightLineHomotopy};
use crate::linalg::{norm, norm_inf};
use crate::poly::PolySystem;
use crate::totaldegree::{build_start_system, StartSystemError};
use crate::tracker::{PathStatus, Tracker, TrackerOptions};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub tracker: TrackerOptions,
    pub endgame: EndgameOptions,
    /// Run the Cauchy endgame below `endgame.endgame_radius`. When off,
    /// paths are tracked straight to `t = 0`.
    pub use_endgame: bool,
    pub real_tol: f64,
    pub dedup_tol: f64,
    pub infinity_tol: f64,
    /// How often failed or colliding paths are re-tracked with smaller steps.
    pub max_retries: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            seed: 0,
            threads: 0,
            tracker: TrackerOptions::default(),
            endgame: EndgameOptions::default(),
            use_endgame: true,
            real_tol: 1e-6,
            dedup_tol: 1e-6,
            infinity_tol: 1e-8,
            max_retries: 2,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        self.tracker.validate().map_err(|e| SolveError::InvalidOptions(e.0))?;
        self.endgame.validate().map_err(SolveError::InvalidOptions)?;
        for (name, v) in [("real_tol", self.real_tol), ("dedup_tol", self.dedup_tol), ("infinity_tol", self.infinity_tol)] {
            if !(v > 0.0) {
                return Err(SolveError::InvalidOptions(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    fn worker_count(&self, jobs: usize) -> usize {
        let n = if self.threads == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            self.threads
        };
        n.clamp(1, jobs.max(1))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("system has {npolys} polynomials in {nvars} variables; use solve_with_start for non-square problems")]
    NotSquare { npolys: usize, nvars: usize },
    #[error(transparent)]
    StartSystem(#[from] StartSystemError),
    #[error(transparent)]
    Homotopy(#[from] HomotopyError),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("start point {index} has {got} coordinates, expected {expected}")]
    StartDimension { index: usize, expected: usize, got: usize },
}

/// How the coordinates of a homotopy relate to the reported solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinates {
    /// Plain affine tracking; solutions are reported as tracked.
    Affine,
    /// The homotopy is homogeneous; each path runs on its own affine chart.
    /// With `Some(i)`, coordinate `i` is the homogenizing variable: it
    /// decides whether an endpoint is at infinity and is divided out of the
    /// reported solution.
    Projective { homogenizing: Option<usize> },
}

/// How a single path ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathKind {
    Finite,
    AtInfinity,
    Failed(FailureReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    StartResidual,
    Tracking(PathStatus),
    EndgameDidNotConverge,
}

/// Raw outcome of one path, in tracking coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub path_index: usize,
    pub kind: PathKind,
    pub endpoint: Vec<C64>,
    pub winding_number: usize,
    /// Condition estimate of the Jacobian at the endpoint.
    pub condition: f64,
    /// `|H(endpoint, 0)|`.
    pub residual: f64,
    pub steps: usize,
    pub retries: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Affine coordinates (the tracked vector when no homogenizing
    /// coordinate is known).
    pub x: Vec<C64>,
    pub residual: f64,
    pub winding_number: usize,
    pub is_real: bool,
    pub is_singular: bool,
    pub at_infinity: bool,
    pub path_index: usize,
    /// Number of path endpoints merged into this solution.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solutions: Vec<Solution>,
    pub n_paths: usize,
    pub n_failed: usize,
    pub n_at_infinity: usize,
    pub runtime_seconds: f64,
    pub seed: u64,
    /// `None` for user-supplied homotopies.
    pub gamma: Option<C64>,
    pub paths: Vec<PathResult>,
}

impl SolveResult {
    pub fn n_finite(&self) -> usize {
        self.solutions.len()
    }

    pub fn n_real(&self) -> usize {
        self.solutions.iter().filter(|s| s.is_real).count()
    }
}

/// Draws `gamma` uniformly from the unit circle.
pub fn random_gamma(seed: u64) -> C64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    C64::from_polar(1.0, rng.gen_range(0.0..TAU))
}

/// Solves a square polynomial system with a total-degree homotopy.
pub fn solve(f: &PolySystem, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let clock = Instant::now();
    opts.validate()?;
    if !f.is_square() {
        return Err(SolveError::NotSquare { npolys: f.npolys(), nvars: f.nvars() });
    }
    let start = build_start_system(f)?;
    let solutions = start.start_solutions()?;
    let gamma = random_gamma(opts.seed);
    let h = StraightLineHomotopy::new(f.homogenize(), start.system().homogenize(), gamma)?;
    let starts: Vec<Vec<C64>> = solutions
        .map(|s| std::iter::once(C64::new(1.0, 0.0)).chain(s).collect())
        .collect();
    let mut result = solve_with_start(&h, &starts, Coordinates::Projective { homogenizing: Some(0) }, opts)?;
    // report residuals of the original affine system
    for s in &mut result.solutions {
        s.residual = f.evaluate(&s.x).map(|v| norm_inf(&v)).unwrap_or(f64::INFINITY);
    }
    result.gamma = Some(gamma);
    result.runtime_seconds = clock.elapsed().as_secs_f64();
    Ok(result)
}

/// Tracks `starts` (solutions of `h` at `t = 1`) to `t = 0` and collects
/// the distinct finite endpoints.
pub fn solve_with_start<H: Homotopy>(
    h: &H,
    starts: &[Vec<C64>],
    coords: Coordinates,
    opts: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    let clock = Instant::now();
    opts.validate()?;
    for (index, s) in starts.iter().enumerate() {
        if s.len() != h.nvariables() {
            return Err(SolveError::StartDimension { index, expected: h.nvariables(), got: s.len() });
        }
    }
    let indices: Vec<usize> = (0..starts.len()).collect();
    let mut paths = track_all(h, starts, &indices, coords, opts, &opts.tracker, 0);

    for retry in 1..=opts.max_retries {
        let suspects = suspicious_paths(&paths, coords, opts);
        if suspects.is_empty() {
            break;
        }
        let tighter = TrackerOptions {
            initial_step: opts.tracker.initial_step * 0.1f64.powi(retry as i32),
            max_steps: opts.tracker.max_steps * 10,
            ..opts.tracker
        };
        for redo in track_all(h, starts, &suspects, coords, opts, &tighter, retry) {
            let old = &paths[redo.path_index];
            // keep the second attempt only if it is at least as good
            if old.kind != PathKind::Finite || redo.kind == PathKind::Finite || redo.kind == PathKind::AtInfinity {
                let i = redo.path_index;
                paths[i] = redo;
            }
        }
    }

    let n_failed = paths.iter().filter(|p| matches!(p.kind, PathKind::Failed(_))).count();
    let n_at_infinity = paths.iter().filter(|p| p.kind == PathKind::AtInfinity).count();
    let candidates: Vec<Solution> = paths
        .iter()
        .filter(|p| p.kind == PathKind::Finite)
        .map(|p| classify(p, coords, opts))
        .collect();
    let solutions = deduplicate(candidates, opts.dedup_tol);
    Ok(SolveResult {
        solutions,
        n_paths: starts.len(),
        n_failed,
        n_at_infinity,
        runtime_seconds: clock.elapsed().as_secs_f64(),
        seed: opts.seed,
        gamma: None,
        paths,
    })
}

/// Failed paths, and non-singular finite endpoints reached by more than one
/// path, which signals path jumping.
fn suspicious_paths(paths: &[PathResult], coords: Coordinates, opts: &SolveOptions) -> Vec<usize> {
    let mut out: Vec<usize> = paths
        .iter()
        .filter(|p| matches!(p.kind, PathKind::Failed(_)))
        .map(|p| p.path_index)
        .collect();
    let regular: Vec<(usize, Vec<C64>)> = paths
        .iter()
        .filter(|p| p.kind == PathKind::Finite && p.winding_number == 1 && p.condition < JUMP_COND)
        .map(|p| (p.path_index, classify(p, coords, opts).x))
        .collect();
    for (i, (a, xa)) in regular.iter().enumerate() {
        for (b, xb) in &regular[i + 1..] {
            if close(xa, xb, opts.dedup_tol) {
                out.push(*a);
                out.push(*b);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Condition estimate below which two paths sharing an endpoint cannot both
/// be right.
const JUMP_COND: f64 = 1e8;

fn track_all<H: Homotopy>(
    h: &H,
    starts: &[Vec<C64>],
    indices: &[usize],
    coords: Coordinates,
    opts: &SolveOptions,
    tracker_opts: &TrackerOptions,
    retries: usize,
) -> Vec<PathResult> {
    let workers = opts.worker_count(indices.len());
    let next = AtomicUsize::new(0);
    let collected = Mutex::new(Vec::with_capacity(indices.len()));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let mut local = Vec::new();
                loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&index) = indices.get(k) else { break };
                    let mut r = track_path(h, &starts[index], coords, opts, tracker_opts);
                    r.path_index = index;
                    r.retries = retries;
                    local.push(r);
                }
                collected.lock().expect("result collector poisoned").extend(local);
            });
        }
    });
    let mut results = collected.into_inner().expect("result collector poisoned");
    results.sort_by_key(|r| r.path_index);
    results
}

fn track_path<H: Homotopy>(
    h: &H,
    start: &[C64],
    coords: Coordinates,
    opts: &SolveOptions,
    tracker_opts: &TrackerOptions,
) -> PathResult {
    match coords {
        Coordinates::Affine => run_path(h, start, None, true, opts, tracker_opts),
        Coordinates::Projective { homogenizing } => match AffinePatch::through(start) {
            Ok(patch) => {
                let patched = PatchedHomotopy::new(h, patch);
                let infinity = homogenizing.map(|i| (i, opts.infinity_tol));
                run_path(&patched, start, infinity, false, opts, tracker_opts)
            }
            Err(_) => failed(start, FailureReason::StartResidual, 0),
        },
    }
}

fn failed(x: &[C64], reason: FailureReason, steps: usize) -> PathResult {
    PathResult {
        path_index: 0,
        kind: PathKind::Failed(reason),
        endpoint: x.to_vec(),
        winding_number: 1,
        condition: f64::INFINITY,
        residual: f64::INFINITY,
        steps,
        retries: 0,
    }
}

fn run_path<K: Homotopy>(
    k: &K,
    start: &[C64],
    infinity: Option<(usize, f64)>,
    affine: bool,
    opts: &SolveOptions,
    tracker_opts: &TrackerOptions,
) -> PathResult {
    let mut tracker = Tracker::new(k, *tracker_opts).with_divergence_check(affine);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    if tracker.residual(start, one) > 10.0 * tracker_opts.corrector_tol {
        return failed(start, FailureReason::StartResidual, 0);
    }
    let t_switch = if opts.use_endgame { opts.endgame.endgame_radius } else { 0.0 };
    let out = tracker.track(start, one, C64::new(t_switch, 0.0));
    let mut steps = out.steps_accepted + out.steps_rejected;
    if !out.status.is_success() {
        if out.status == PathStatus::Diverged {
            let mut r = failed(&out.x_end, FailureReason::Tracking(out.status), steps);
            r.kind = PathKind::AtInfinity;
            return r;
        }
        return failed(&out.x_end, FailureReason::Tracking(out.status), steps);
    }
    let is_at_infinity =
        |x: &[C64], singular| infinity.is_some_and(|(i, tol)| x[i].norm() <= infinity_threshold(tol, singular) * norm_inf(x));

    let (mut x, winding) = if opts.use_endgame {
        let eg = run_endgame(&mut tracker, &out.x_end, t_switch, &opts.endgame, infinity);
        steps += eg.samples_used;
        if eg.at_infinity {
            let mut r = failed(&eg.x0, FailureReason::EndgameDidNotConverge, steps);
            r.kind = PathKind::AtInfinity;
            return r;
        }
        if !eg.converged {
            return failed(&eg.x0, FailureReason::EndgameDidNotConverge, steps);
        }
        (eg.x0, eg.winding_number)
    } else {
        (out.x_end, 1)
    };

    if winding == 1 {
        let mut polished = x.clone();
        let before = tracker.residual(&x, zero);
        if tracker.newton(&mut polished, zero, tracker_opts.max_corrector_iters + 2).is_ok()
            && tracker.residual(&polished, zero) <= before
        {
            x = polished;
        }
    }
    let residual = tracker.residual(&x, zero);
    let condition = tracker.condition(&x, zero);
    let singular = winding > 1 || condition > tracker_opts.cond_limit;
    let kind = if is_at_infinity(&x, singular) { PathKind::AtInfinity } else { PathKind::Finite };
    PathResult {
        path_index: 0,
        kind,
        endpoint: x,
        winding_number: winding,
        condition,
        residual,
        steps,
        retries: 0,
    }
}

/// Relative size of the homogenizing coordinate below which an endpoint is
/// at infinity. Singular endpoints are only known to about the square root
/// of the working accuracy, so their threshold is the square root of `tol`.
fn infinity_threshold(tol: f64, singular: bool) -> f64 {
    if singular {
        tol.sqrt()
    } else {
        tol
    }
}

/// Turns a finite path endpoint into a reported solution.
pub fn classify(path: &PathResult, coords: Coordinates, opts: &SolveOptions) -> Solution {
    let xh = &path.endpoint;
    let singular = path.winding_number > 1 || path.condition > opts.tracker.cond_limit;
    let (x, at_infinity) = match coords {
        Coordinates::Projective { homogenizing: Some(i) } => {
            let at_inf = xh[i].norm() <= infinity_threshold(opts.infinity_tol, singular) * norm_inf(xh);
            let x = if at_inf {
                let n = norm(xh);
                xh.iter().map(|c| c / n).collect()
            } else {
                xh.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| c / xh[i]).collect()
            };
            (x, at_inf)
        }
        Coordinates::Projective { homogenizing: None } => (canonical_representative(xh), false),
        Coordinates::Affine => (xh.clone(), false),
    };
    let scale = 1.0 + norm(&x);
    let is_real = !at_infinity && x.iter().all(|c| c.im.abs() <= opts.real_tol * scale);
    Solution {
        is_real,
        is_singular: singular,
        at_infinity,
        residual: path.residual,
        winding_number: path.winding_number,
        path_index: path.path_index,
        multiplicity: 1,
        x,
    }
}

/// Scales a homogeneous vector so that its first coordinate of maximal
/// modulus (up to rounding) equals one.
fn canonical_representative(x: &[C64]) -> Vec<C64> {
    let max = norm_inf(x);
    let pivot = x.iter().find(|c| c.norm() >= 0.5 * max).copied().unwrap_or(C64::new(1.0, 0.0));
    x.iter().map(|c| c / pivot).collect()
}

fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
    let scale = 1.0 + norm(a).max(norm(b));
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| (p - q).norm() <= tol * scale)
}

/// Greedy clustering: each solution joins the first cluster whose
/// representative lies within `tol`, and the representative of a cluster is
/// its member with the smallest residual.
pub fn deduplicate(solutions: Vec<Solution>, tol: f64) -> Vec<Solution> {
    let mut clusters: Vec<Solution> = Vec::new();
    for s in solutions {
        match clusters.iter_mut().find(|c| close(&c.x, &s.x, tol)) {
            Some(c) => {
                let count = c.multiplicity + 1;
                if s.residual < c.residual {
                    *c = s;
                }
                c.multiplicity = count;
            }
            None => clusters.push(s),
        }
    }
    clusters
}
