use faer::{c64, MatRef};

use super::factors::{Shift, StepOutcome};
use super::run::{drive, RunOptions, RunOutcome, StepReport};
use super::step::{step_kernel, Compression};
use crate::error::Result;
use crate::linalg::{Scalar, ShiftedSystem};
use crate::problem::LyapunovProblem;
use crate::residual::residual_norm;
use crate::shifts::ShiftSource;

/// Block step with a prefactored `A + alpha E`.
pub fn block_step<T: Scalar>(
    problem: &LyapunovProblem<T>,
    sys: &ShiftedSystem<T>,
    shift: Shift,
    w: MatRef<'_, T>,
) -> Result<StepOutcome<T>> {
    let comp = Compression {
        p: None,
        y: None,
        c: problem.r(),
    };
    step_kernel(problem, sys, shift, w, &comp)
}

/// Single block step `V = (A + alpha E)^-1 W`, `W <- W - 2 Re(alpha) E V`.
///
/// For real problems `alpha` must be real; complex shifts go through [`block_step_real`].
pub fn block_step_complex<T: Scalar>(
    problem: &LyapunovProblem<T>,
    alpha: c64,
    w: MatRef<'_, T>,
) -> Result<StepOutcome<T>> {
    let sys = ShiftedSystem::new(problem.a(), problem.e(), alpha)?;
    block_step(problem, &sys, Shift::Single(alpha), w)
}

/// Real-arithmetic block step: a real single shift, or a conjugate pair with one solve.
pub fn block_step_real(problem: &LyapunovProblem<f64>, shift: Shift, w: MatRef<'_, f64>) -> Result<StepOutcome<f64>> {
    let sys = ShiftedSystem::new(problem.a(), problem.e(), shift.value())?;
    block_step(problem, &sys, shift, w)
}

/// Block ADI until the normalized residual reaches `opts.tol` or the column budget is spent.
pub fn run_block_adi<T: Scalar>(
    problem: &LyapunovProblem<T>,
    shifts: &mut dyn ShiftSource<T>,
    opts: &RunOptions,
) -> RunOutcome<T> {
    let m = problem.m();
    let initial = residual_norm(problem.b(), problem.r(), opts.norm).unwrap_or(f64::NAN);
    drive(
        problem,
        shifts,
        opts,
        initial,
        1,
        |s| if s.is_pair() { 2 * m } else { m },
        |ctx| {
            Ok(StepReport {
                outcome: block_step(problem, ctx.sys, ctx.shift, ctx.w)?,
                direction: None,
                extra_solves: 0,
                note: None,
            })
        },
    )
}
