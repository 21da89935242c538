//! Dörfler marking and the SOLVE → ESTIMATE → MARK → REFINE loop.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::assembly::{assemble, MixedSolution, Scheme};
use crate::estimators::{estimate, EstimatorBreakdown, GlobalEstimators, Policy};
use crate::mesh::Triangulation;
use crate::problem::{ExactSolution, ProblemData};
use crate::solver::solve;
use crate::verify::energy_error;
use crate::{Error, Result};

/// Smallest prefix of the elements sorted by indicator (descending, ties
/// by id) whose squared sum reaches `θ²` of the total. Empty when every
/// indicator vanishes.
pub fn dorfler_mark(indicators: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!("marking fraction θ = {theta} outside (0, 1]")));
    }
    if let Some(k) = indicators.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("indicator of element {k} is {}", indicators[k])));
    }
    let total: f64 = indicators.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    // θ² rounds up (0.8² = 0.6400000000000001); without the slack an exact
    // hit of the threshold would pull in one more element
    let target = theta * theta * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for k in order {
        if acc >= target || indicators[k] == 0.0 {
            break;
        }
        acc += indicators[k] * indicators[k];
        marked.push(k);
    }
    Ok(marked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Adaptive,
    Uniform,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Adaptive => "adaptive",
            Mode::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Mode::Adaptive),
            "uniform" => Ok(Mode::Uniform),
            other => Err(Error::Parse(format!("unknown refinement mode `{other}` (expected adaptive or uniform)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    pub scheme: Scheme,
    pub policy: Policy,
    pub theta: f64,
    pub mode: Mode,
    /// No mesh with more elements than this is solved.
    pub max_dof: usize,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Iteration, counted from 1.
    pub k: usize,
    /// Number of elements.
    pub dof: usize,
    /// True error, when an exact solution is known.
    pub error: Option<f64>,
    pub eta: f64,
    pub families: GlobalEstimators,
    /// Seconds spent on this iteration up to and including estimation.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    MaxDof,
    NothingMarked,
}

/// State handed to the observer after each estimate.
pub struct Iteration<'a> {
    pub record: &'a RunRecord,
    pub mesh: &'a Triangulation,
    pub solution: &'a MixedSolution,
    pub estimators: &'a EstimatorBreakdown,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub mesh: Triangulation,
    pub solution: MixedSolution,
    pub estimators: EstimatorBreakdown,
    pub stop: StopReason,
}

pub fn adaptive_loop(
    initial: Triangulation,
    problem: &ProblemData,
    exact: Option<&ExactSolution>,
    config: &LoopConfig,
) -> Result<RunOutput> {
    adaptive_loop_with(initial, problem, exact, config, |_| Ok(()))
}

/// As [`adaptive_loop`], calling `observe` after every estimate.
pub fn adaptive_loop_with<F>(
    initial: Triangulation,
    problem: &ProblemData,
    exact: Option<&ExactSolution>,
    config: &LoopConfig,
    mut observe: F,
) -> Result<RunOutput>
where
    F: FnMut(&Iteration<'_>) -> Result<()>,
{
    if !(config.theta > 0.0 && config.theta <= 1.0) {
        return Err(Error::InvalidParameter(format!("marking fraction θ = {} outside (0, 1]", config.theta)));
    }
    if config.max_iter == 0 {
        return Err(Error::InvalidParameter("max-iter must be at least 1".into()));
    }
    let mut mesh = initial;
    let mut records = Vec::new();
    let mut last: Option<(Triangulation, MixedSolution, EstimatorBreakdown)> = None;
    let stop = loop {
        if mesh.num_elements() > config.max_dof && last.is_some() {
            break StopReason::MaxDof;
        }
        let start = Instant::now();
        let system = assemble(&mesh, problem, config.scheme)?;
        let solution = solve(&system)?;
        let estimators = estimate(&mesh, problem, &solution, config.policy)?;
        let error = exact.map(|x| energy_error(&mesh, problem, x, &solution).total);
        let families = estimators.global();
        let record = RunRecord {
            k: records.len() + 1,
            dof: mesh.num_elements(),
            error,
            eta: families.total,
            families,
            wall_time: start.elapsed().as_secs_f64(),
        };
        observe(&Iteration { record: &record, mesh: &mesh, solution: &solution, estimators: &estimators })?;
        records.push(record);

        let marked = match config.mode {
            Mode::Adaptive => dorfler_mark(&estimators.totals(), config.theta)?,
            Mode::Uniform => (0..mesh.num_elements()).collect(),
        };
        let next = (records.len() < config.max_iter && !marked.is_empty()).then(|| mesh.refine(&marked)).transpose()?;
        let done = records.len() >= config.max_iter;
        let nothing = marked.is_empty();
        last = Some((mesh, solution, estimators));
        match next {
            Some(m) => mesh = m,
            None if done => break StopReason::MaxIterations,
            None => {
                debug_assert!(nothing);
                break StopReason::NothingMarked;
            }
        }
    };
    let (mesh, solution, estimators) = last.expect("at least one iteration ran");
    Ok(RunOutput { records, mesh, solution, estimators, stop })
}
