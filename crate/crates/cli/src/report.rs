//! JSON shapes written by the command-line tool.

use hcont::solver::{PathKind, SolveResult, Solution};
use hcont::C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub x: Vec<[f64; 2]>,
    pub residual: f64,
    pub winding_number: usize,
    pub is_real: bool,
    pub is_singular: bool,
    pub at_infinity: bool,
    pub path_index: usize,
    pub multiplicity: usize,
}

/// A tracked singular point of a symmetroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DethomSolution {
    #[serde(flatten)]
    pub solution: SolutionReport,
    /// Whether the point lies on the spectrahedron; `null` for complex
    /// points and points with `x0 = 0`.
    pub on_spectrahedron: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DethomReport {
    pub seed: u64,
    pub n_paths: usize,
    pub n_failed: usize,
    pub runtime_seconds: f64,
    pub solutions: Vec<DethomSolution>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed_paths: Vec<FailedPath>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedPath {
    pub path_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub seed: u64,
    pub gamma: Option<[f64; 2]>,
    pub n_paths: usize,
    pub n_failed: usize,
    pub n_at_infinity: usize,
    pub runtime_seconds: f64,
    pub solutions: Vec<SolutionReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed_paths: Vec<FailedPath>,
}

pub fn pair(c: C64) -> [f64; 2] {
    [c.re, c.im]
}

impl From<&Solution> for SolutionReport {
    fn from(s: &Solution) -> Self {
        SolutionReport {
            x: s.x.iter().copied().map(pair).collect(),
            residual: s.residual,
            winding_number: s.winding_number,
            is_real: s.is_real,
            is_singular: s.is_singular,
            at_infinity: s.at_infinity,
            path_index: s.path_index,
            multiplicity: s.multiplicity,
        }
    }
}

pub fn failed_paths(r: &SolveResult) -> Vec<FailedPath> {
    r.paths
        .iter()
        .filter_map(|p| match p.kind {
            PathKind::Failed(reason) => Some(FailedPath { path_index: p.path_index, reason: format!("{reason:?}") }),
            _ => None,
        })
        .collect()
}

impl From<&SolveResult> for SolveReport {
    fn from(r: &SolveResult) -> Self {
        SolveReport {
            seed: r.seed,
            gamma: r.gamma.map(pair),
            n_paths: r.n_paths,
            n_failed: r.n_failed,
            n_at_infinity: r.n_at_infinity,
            runtime_seconds: r.runtime_seconds,
            solutions: r.solutions.iter().map(SolutionReport::from).collect(),
            failed_paths: failed_paths(r),
        }
    }
}
