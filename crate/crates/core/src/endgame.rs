//! Endgame near `t = 0`.
//!
//! At each radius `r_k = r * lambda^k` the path is continued around the
//! circle `|t| = r_k` until it closes up, which gives the winding number
//! `c`, and the mean of the loop samples approximates `x(0)` (trapezoidal
//! rule for the Cauchy integral). Estimates are accepted once two
//! consecutive radii agree. When a homogenizing coordinate `x_h` is known,
//! its steady decay lets paths to infinity skip the loops, and the growth
//! rates `|x_i / x_h| ~ |t|^v` decide where a path that never settles was
//! heading.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::homotopy::Homotopy;
use crate::linalg::{norm, norm_inf};
use crate::tracker::{PathStatus, Tracker};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndgameOptions {
    pub endgame_radius: f64,
    pub loop_samples_per_circle: usize,
    pub max_winding: usize,
    pub geometric_factor: f64,
    pub stabilization_tol: f64,
}

impl Default for EndgameOptions {
    fn default() -> Self {
        EndgameOptions {
            endgame_radius: 0.1,
            loop_samples_per_circle: 16,
            max_winding: 12,
            geometric_factor: 0.5,
            stabilization_tol: 1e-6,
        }
    }
}

impl EndgameOptions {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 < self.endgame_radius && self.endgame_radius < 1.0) {
            return Err("endgame_radius must lie in (0, 1)".into());
        }
        if self.max_winding == 0 {
            return Err("max_winding must be at least 1".into());
        }
        if self.loop_samples_per_circle < 3 {
            return Err("need at least 3 loop samples per circle".into());
        }
        if !(0.0 < self.geometric_factor && self.geometric_factor < 1.0) {
            return Err("geometric_factor must lie in (0, 1)".into());
        }
        if !(self.stabilization_tol > 0.0) {
            return Err("stabilization_tol must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EndgameError {
    #[error("path tracking failed on the loop: {0:?}")]
    LoopTracking(PathStatus),
    #[error("loop did not close within {0} circuits")]
    WindingExceeded(usize),
    #[error("no samples to average")]
    EmptySamples,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndgameResult {
    /// Estimate of the path's limit at `t = 0`.
    pub x0: Vec<C64>,
    pub winding_number: usize,
    pub converged: bool,
    /// Set when the path was seen leaving every affine chart.
    pub at_infinity: bool,
    /// Most negative affine growth rate `v` with `|x_i / x_h| ~ |t|^v`,
    /// once it has stabilized.
    pub valuation: Option<f64>,
    pub samples_used: usize,
    /// Smallest radius reached and the path point there.
    pub radius: f64,
    pub x_radius: Vec<C64>,
}

/// Continues `x_r` (a point on the path at `t = r`) around `|t| = r` until
/// the loop closes. Returns the winding number and the samples at the
/// `loop_samples_per_circle` nodes of every circuit.
pub fn cauchy_loop<H: Homotopy>(
    tracker: &mut Tracker<'_, H>,
    x_r: &[C64],
    r: f64,
    opts: &EndgameOptions,
) -> Result<(usize, Vec<Vec<C64>>), EndgameError> {
    let n = opts.loop_samples_per_circle;
    let node = |k: usize| {
        if k.is_multiple_of(n) {
            C64::new(r, 0.0)
        } else {
            C64::from_polar(r, TAU * k as f64 / n as f64)
        }
    };
    let tol = opts.stabilization_tol * norm_inf(x_r).max(1.0);
    let mut samples = Vec::with_capacity(n * 2);
    let mut x = x_r.to_vec();
    for circuit in 1..=opts.max_winding {
        for k in 0..n {
            samples.push(x.clone());
            let out = tracker.track(&x, node(k), node(k + 1));
            if !out.status.is_success() {
                return Err(EndgameError::LoopTracking(out.status));
            }
            x = out.x_end;
        }
        let gap = x.iter().zip(x_r).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if gap <= tol {
            return Ok((circuit, samples));
        }
    }
    Err(EndgameError::WindingExceeded(opts.max_winding))
}

/// Mean of the loop samples.
pub fn cauchy_endpoint(samples: &[Vec<C64>]) -> Result<Vec<C64>, EndgameError> {
    let first = samples.first().ok_or(EndgameError::EmptySamples)?;
    let mut mean = vec![C64::new(0.0, 0.0); first.len()];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    let k = samples.len() as f64;
    for m in mean.iter_mut() {
        *m /= k;
    }
    Ok(mean)
}

/// Smallest growth rate accepted as evidence of a path at infinity.
const MIN_VALUATION: f64 = 0.05;
/// Relative agreement of two decay estimates of the homogenizing coordinate
/// needed to stop looping on a path.
const DECAY_AGREEMENT: f64 = 0.1;
/// Relative size of the homogenizing coordinate below which a steady decay
/// ends the endgame early.
const EARLY_INFINITY: f64 = 1e-4;
/// Relative size of the homogenizing coordinate below which a path whose
/// tracking breaks down while it is still decaying is put at infinity.
const BREAKDOWN_INFINITY: f64 = 1e-3;
/// Spread allowed among the last affine growth rate estimates of a coordinate.
const VALUATION_SPREAD: f64 = 0.01;
/// Number of consecutive estimates that must agree.
const VALUATION_WINDOW: usize = 3;

/// Growth rates between two radii of the logarithms in `prev` and `cur`.
fn valuations(prev: &[f64], cur: &[f64], log_ratio: f64) -> Vec<f64> {
    prev.iter().zip(cur).map(|(a, b)| (b - a) / log_ratio).collect()
}

/// The most negative affine growth rate whose last estimates agree, if any.
fn stable_negative_valuation(history: &[Vec<f64>]) -> Option<f64> {
    let window = history.get(history.len().checked_sub(VALUATION_WINDOW)?..)?;
    let last = window.last()?;
    (0..last.len())
        .filter(|&i| {
            let (lo, hi) = window.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[i]), hi.max(v[i])));
            hi < -MIN_VALUATION && hi - lo <= VALUATION_SPREAD
        })
        .map(|i| last[i])
        .min_by(f64::total_cmp)
}

/// Decay rate of the homogenizing coordinate between `t = radius` and the
/// point `x` where tracking broke down, if `x` is already close to infinity
/// and still heading there.
fn breakdown_decay(x: &[C64], coord: usize, t: f64, rel: f64, radius: f64) -> Option<f64> {
    let end_rel = x[coord].norm() / norm_inf(x);
    if !(end_rel <= BREAKDOWN_INFINITY && t > 0.0 && t < radius) {
        return None;
    }
    let v = (end_rel / rel).ln() / (t / radius).ln();
    (v > MIN_VALUATION).then_some(v)
}

fn log_affine(x: &[C64], h: usize) -> Vec<f64> {
    let xh = x[h].norm();
    x.iter().enumerate().filter(|&(i, _)| i != h).map(|(_, v)| (v.norm() / xh).ln()).collect()
}

/// Runs the endgame from `x_r` at `t = r`.
///
/// `infinity_coordinate` names the homogenizing coordinate of a projective
/// path, `infinity_tol` the relative size below which it counts as zero.
pub fn run_endgame<H: Homotopy>(
    tracker: &mut Tracker<'_, H>,
    x_r: &[C64],
    r: f64,
    opts: &EndgameOptions,
    infinity: Option<(usize, f64)>,
) -> EndgameResult {
    let min_step = tracker.options().min_step;
    let residual_limit = 100.0 * tracker.options().corrector_tol;
    let mut radius = r;
    let mut x = x_r.to_vec();
    let mut previous: Option<(Vec<C64>, usize)> = None;
    let mut samples_used = 0;
    // per radius: log of the relative size of x_h, and logs of |x_i / x_h|
    let mut logs: Option<Vec<f64>> = None;
    let mut decay: Vec<f64> = Vec::new();
    let mut growth: Vec<Vec<f64>> = Vec::new();
    let mut valuation = None;
    let mut rel = f64::NAN;

    let result = |x0: Vec<C64>, c, converged, at_inf, val, used, radius, xr: &[C64]| EndgameResult {
        x0,
        winding_number: c,
        converged,
        at_infinity: at_inf,
        valuation: val,
        samples_used: used,
        radius,
        x_radius: xr.to_vec(),
    };

    loop {
        let mut heading_out = false;
        if let Some((coord, infinity_tol)) = infinity {
            rel = x[coord].norm() / norm_inf(&x);
            if rel <= infinity_tol {
                return result(x.clone(), 1, false, true, valuation, samples_used, radius, &x);
            }
            let cur: Vec<f64> = std::iter::once(rel.ln()).chain(log_affine(&x, coord)).collect();
            if let Some(prev) = &logs {
                let v = valuations(prev, &cur, opts.geometric_factor.ln());
                decay.push(v[0]);
                growth.push(v[1..].to_vec());
            }
            logs = Some(cur);
            valuation = stable_negative_valuation(&growth).or(valuation);
            if let [.., a, b] = decay[..] {
                heading_out = b > MIN_VALUATION && (b - a).abs() <= DECAY_AGREEMENT * b;
                if heading_out && rel < EARLY_INFINITY {
                    return result(x.clone(), 1, false, true, Some(-b), samples_used, radius, &x);
                }
            }
        }

        if heading_out {
            previous = None;
        } else {
            match cauchy_loop(tracker, &x, radius, opts) {
                Ok((c, samples)) => {
                    samples_used += samples.len();
                    let estimate = cauchy_endpoint(&samples).expect("loop produced samples");
                    let ok_residual = tracker.residual(&estimate, C64::new(0.0, 0.0)) <= residual_limit;
                    if let Some((prev, prev_c)) = &previous {
                        let scale = norm_inf(&estimate).max(1.0);
                        let gap = estimate.iter().zip(prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                        if *prev_c == c && gap <= opts.stabilization_tol * scale && ok_residual {
                            let at_inf =
                                infinity.is_some_and(|(i, tol)| estimate[i].norm() <= tol * norm_inf(&estimate));
                            return result(estimate, c, true, at_inf, valuation, samples_used, radius, &x);
                        }
                    }
                    previous = Some((estimate, c));
                }
                Err(_) => previous = None,
            }
        }

        // a path that never settles is judged by how it was moving
        let gave_up = |x0: Option<(Vec<C64>, usize)>, x: &[C64]| {
            let at_inf = heading_out || valuation.is_some();
            let x0 = x0.map(|p| p.0).unwrap_or_else(|| x.to_vec());
            (x0, at_inf)
        };
        let next = radius * opts.geometric_factor;
        if next < min_step {
            let (x0, at_inf) = gave_up(previous, &x);
            return result(x0, 1, false, at_inf, valuation, samples_used, radius, &x);
        }
        let out = tracker.track(&x, C64::new(radius, 0.0), C64::new(next, 0.0));
        if !out.status.is_success() {
            if let Some(v) = infinity.and_then(|(coord, _)| breakdown_decay(&out.x_end, coord, out.t_end.norm(), rel, radius)) {
                return result(out.x_end.clone(), 1, false, true, Some(-v), samples_used, radius, &x);
            }
            let (x0, at_inf) = gave_up(previous, &x);
            return result(x0, 1, false, at_inf, valuation, samples_used, radius, &x);
        }
        x = out.x_end;
        radius = next;
        if !norm(&x).is_finite() {
            return result(x.clone(), 1, false, false, None, samples_used, radius, &x);
        }
    }
}
