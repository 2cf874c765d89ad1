use std::time::Instant;

use faer::{Mat, MatRef};

use super::factors::{LdlFactors, Shift, StepOutcome};
use crate::error::{Error, Result};
use crate::linalg::dense::HERMITIAN_TOL;
use crate::linalg::{hermitian_deviation, Scalar, ShiftedSystem};
use crate::problem::LyapunovProblem;
use crate::residual::{residual_norm, NormKind};
use crate::shifts::{ProjectionSpace, ShiftSource};
use crate::trace::{ConvergenceTrace, PoolRecord, TraceRecord};

/// Stopping and bookkeeping parameters shared by all run loops.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Stop once the normalized residual is at or below `tol`.
    pub tol: f64,
    /// Column budget for `L`; defaults to `20 m`. A step that would exceed it is not taken.
    pub max_cols: Option<usize>,
    pub norm: NormKind,
    /// Projection space capacity; defaults to `4 m`.
    pub k_max: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_cols: None,
            norm: NormKind::Spectral,
            k_max: None,
        }
    }
}

impl RunOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_cols(mut self, max_cols: usize) -> Self {
        self.max_cols = Some(max_cols);
        self
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Input(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Result of a completed run (converged or out of budget).
#[derive(Debug, Clone)]
pub struct RunResult<T: Scalar> {
    pub factors: LdlFactors<T>,
    /// Final residual factor; the residual is `W R W^H` for the run's (possibly truncated) `R`.
    pub w: Mat<T>,
    pub trace: ConvergenceTrace,
    pub converged: bool,
    pub notes: Vec<String>,
}

impl<T: Scalar> RunResult<T> {
    pub(crate) fn empty(n: usize, w: Mat<T>, initial_norm: f64) -> Self {
        Self {
            factors: LdlFactors::empty(n),
            w,
            trace: ConvergenceTrace::new(initial_norm),
            converged: false,
            notes: Vec::new(),
        }
    }

    /// Normalized residual after the last step.
    pub fn final_residual(&self) -> f64 {
        if self.trace.records.is_empty() && self.converged {
            0.0
        } else {
            self.trace.final_residual()
        }
    }
}

/// A run that stopped on an error, with everything computed up to that point.
#[derive(Debug, Clone)]
pub struct RunFailure<T: Scalar> {
    pub error: Error,
    pub partial: RunResult<T>,
}

impl<T: Scalar> std::fmt::Display for RunFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (after {} steps, {} columns)",
            self.error,
            self.partial.trace.records.len(),
            self.partial.factors.ncols()
        )
    }
}

pub type RunOutcome<T> = std::result::Result<RunResult<T>, Box<RunFailure<T>>>;

/// Per-step inputs handed to the variant-specific update.
pub(crate) struct StepContext<'a, T: Scalar> {
    pub sys: &'a ShiftedSystem<T>,
    pub shift: Shift,
    pub w: MatRef<'a, T>,
    pub space: &'a ProjectionSpace<T>,
    /// Steps taken so far in this run.
    pub step: usize,
}

/// What the variant reports back for one step.
pub(crate) struct StepReport<T: Scalar> {
    pub outcome: StepOutcome<T>,
    pub direction: Option<usize>,
    pub extra_solves: usize,
    pub note: Option<String>,
}

/// Generic ADI loop: shift pools, budget, residual tracking and tracing.
pub(crate) fn drive<T: Scalar>(
    problem: &LyapunovProblem<T>,
    shifts: &mut dyn ShiftSource<T>,
    opts: &RunOptions,
    initial_norm: f64,
    steps_per_shift: usize,
    width: impl Fn(Shift) -> usize,
    mut step: impl FnMut(&StepContext<'_, T>) -> Result<StepReport<T>>,
) -> RunOutcome<T> {
    let start = Instant::now();
    let n = problem.n();
    let m = problem.m();
    let mut result = RunResult::empty(n, problem.b().to_owned(), initial_norm);
    macro_rules! fail {
        ($e:expr) => {
            return Err(Box::new(RunFailure {
                error: $e,
                partial: result,
            }))
        };
    }
    if let Err(e) = opts.check() {
        fail!(e);
    }
    let dev = hermitian_deviation(problem.r());
    if dev > HERMITIAN_TOL {
        fail!(Error::Input(format!("R is not Hermitian (relative deviation {dev:e})")));
    }
    if !initial_norm.is_finite() {
        fail!(Error::Numerical("norm of the constant term is not finite".into()));
    }
    if initial_norm == 0.0 || 1.0 <= opts.tol {
        result.converged = true;
        return Ok(result);
    }
    let max_cols = opts.max_cols.unwrap_or(20 * m);
    let mut space = ProjectionSpace::new(n, opts.k_max.unwrap_or(4 * m));

    let pool = match shifts.initial(problem) {
        Ok(p) => p,
        Err(e) => fail!(e),
    };
    result.trace.pools.push(PoolRecord {
        before_iteration: 1,
        shifts: pool.shifts().to_vec(),
    });
    let mut queue = pool.steps();
    let mut pos = 0;
    let mut steps = 0usize;
    let mut solves = 0usize;

    loop {
        if pos == queue.len() {
            let pool = match shifts.refresh(problem, &space) {
                Ok(p) => p,
                Err(e) => fail!(e),
            };
            result.trace.pools.push(PoolRecord {
                before_iteration: steps + 1,
                shifts: pool.shifts().to_vec(),
            });
            queue = pool.steps();
            pos = 0;
        }
        let shift = queue[pos];
        pos += 1;
        if result.factors.ncols() + width(shift) > max_cols {
            result.notes.push(format!("column budget {max_cols} reached"));
            return Ok(result);
        }
        let sys = match ShiftedSystem::new(problem.a(), problem.e(), shift.value()) {
            Ok(s) => s,
            Err(e) => fail!(e),
        };
        for _ in 0..steps_per_shift {
            if result.factors.ncols() + width(shift) > max_cols {
                result.notes.push(format!("column budget {max_cols} reached"));
                return Ok(result);
            }
            let ctx = StepContext {
                sys: &sys,
                shift,
                w: result.w.as_ref(),
                space: &space,
                step: steps,
            };
            let report = match step(&ctx) {
                Ok(r) => r,
                Err(e) => fail!(e),
            };
            steps += 1;
            solves += report.outcome.solves + report.extra_solves;
            if let Some(note) = report.note {
                result.notes.push(format!("step {steps}: {note}"));
            }
            let out = report.outcome;
            result.factors.append(out.columns.as_ref(), &out.blocks);
            space.push(out.columns.as_ref());
            result.w = out.w;
            let res = match residual_norm(result.w.as_ref(), problem.r(), opts.norm) {
                Ok(r) => r / initial_norm,
                Err(e) => fail!(e),
            };
            result.trace.records.push(TraceRecord {
                iteration: steps,
                columns: result.factors.ncols(),
                shift: shift.value(),
                direction: report.direction,
                residual: res,
                solves,
                wall_time: start.elapsed().as_secs_f64(),
            });
            if !res.is_finite() {
                fail!(Error::Numerical(format!("residual became non-finite at step {steps}")));
            }
            if res <= opts.tol {
                result.converged = true;
                return Ok(result);
            }
        }
    }
}
