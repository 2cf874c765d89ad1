use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{c64, Mat, MatRef};

use super::factors::{Shift, StepOutcome};
use super::run::{drive, RunFailure, RunOptions, RunOutcome, RunResult, StepReport};
use super::step::{step_kernel, Compression};
use crate::directions::{Direction, DirectionContext, DirectionMode, DirectionSource, EigenDirections};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, Scalar, ShiftedSystem};
use crate::problem::{LyapunovProblem, DEFAULT_TRUNCATION_TOL};
use crate::residual::residual_norm;
use crate::shifts::ShiftSource;

/// Relative size of `|t^H R^-1 t|` below which a direction counts as isotropic.
pub const ISOTROPY_TOL: f64 = 1e-12;

/// Prefactored center matrix for applying `R^-1`.
#[derive(Debug)]
pub struct CenterInverse<T: Scalar> {
    lu: PartialPivLu<T>,
    inv_norm: f64,
}

impl<T: Scalar> CenterInverse<T> {
    pub fn new(r: MatRef<'_, T>) -> Result<Self> {
        let (_, s) = hermitian_eig(r)?;
        let smallest = s.iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
        if s.is_empty() || smallest == 0.0 {
            return Err(Error::Input("center matrix is singular; truncate it first".into()));
        }
        Ok(Self {
            lu: r.partial_piv_lu(),
            inv_norm: 1.0 / smallest,
        })
    }

    /// `||R^-1||_2`.
    pub fn inverse_norm(&self) -> f64 {
        self.inv_norm
    }

    pub fn apply(&self, t: MatRef<'_, T>) -> Mat<T> {
        self.lu.solve(t)
    }
}

/// Tangential step with a prefactored `A + alpha E`.
pub fn tangential_step<T: Scalar>(
    problem: &LyapunovProblem<T>,
    sys: &ShiftedSystem<T>,
    shift: Shift,
    w: MatRef<'_, T>,
    direction: &Direction<T>,
    center: &CenterInverse<T>,
) -> Result<StepOutcome<T>> {
    let t = direction.t.as_ref();
    if t.nrows() != problem.m() || t.ncols() != 1 {
        return Err(Error::Dimension(format!(
            "direction is {}x{}, expected {}x1",
            t.nrows(),
            t.ncols(),
            problem.m()
        )));
    }
    let t_norm2: f64 = (0..t.nrows()).map(|i| t[(i, 0)].modulus().powi(2)).sum();
    if t_norm2 == 0.0 {
        return Err(Error::Input("tangential direction is zero".into()));
    }
    let (y, c) = match direction.mode {
        DirectionMode::Eigen { value, .. } => (t.adjoint().to_owned(), Mat::from_fn(1, 1, |_, _| T::from_real(value))),
        DirectionMode::General => {
            let z = center.apply(t);
            let q = (t.adjoint() * &z)[(0, 0)].re();
            let threshold = ISOTROPY_TOL * t_norm2 * center.inverse_norm();
            if !(q.abs() >= threshold) {
                return Err(Error::IsotropicDirection {
                    value: q.abs(),
                    threshold,
                });
            }
            let y = Mat::from_fn(1, z.nrows(), |_, j| z[(j, 0)].conj().scale(1.0 / q));
            (y, Mat::from_fn(1, 1, |_, _| T::from_real(1.0 / q)))
        }
    };
    let comp = Compression {
        p: Some(t),
        y: Some(y.as_ref()),
        c: c.as_ref(),
    };
    step_kernel(problem, sys, shift, w, &comp)
}

/// Single tangential step; for real problems `alpha` must be real.
pub fn tangential_step_complex<T: Scalar>(
    problem: &LyapunovProblem<T>,
    alpha: c64,
    w: MatRef<'_, T>,
    direction: &Direction<T>,
) -> Result<StepOutcome<T>> {
    let sys = ShiftedSystem::new(problem.a(), problem.e(), alpha)?;
    let center = CenterInverse::new(problem.r())?;
    tangential_step(problem, &sys, Shift::Single(alpha), w, direction, &center)
}

/// Real-arithmetic tangential step; a conjugate pair shares the direction and one solve.
pub fn tangential_step_real(
    problem: &LyapunovProblem<f64>,
    shift: Shift,
    w: MatRef<'_, f64>,
    direction: &Direction<f64>,
) -> Result<StepOutcome<f64>> {
    let sys = ShiftedSystem::new(problem.a(), problem.e(), shift.value())?;
    let center = CenterInverse::new(problem.r())?;
    tangential_step(problem, &sys, shift, w, direction, &center)
}

/// Tangential ADI on the rank-truncated problem.
///
/// The returned factors represent the solution of the original equation; the residual factor
/// `w` refers to the truncated constant term.
pub fn run_tangential_adi<T: Scalar>(
    problem: &LyapunovProblem<T>,
    shifts: &mut dyn ShiftSource<T>,
    directions: &mut dyn DirectionSource<T>,
    opts: &RunOptions,
) -> RunOutcome<T> {
    let initial = residual_norm(problem.b(), problem.r(), opts.norm).unwrap_or(f64::NAN);
    let early = |error: Error| {
        let mut partial = RunResult::empty(problem.n(), problem.b().to_owned(), initial);
        partial.converged = matches!(error, Error::ZeroConstantTerm);
        Box::new(RunFailure { error, partial })
    };
    let prepared = problem.truncated(DEFAULT_TRUNCATION_TOL).and_then(|p| {
        let dirs = EigenDirections::from_center(p.r())?;
        let center = CenterInverse::new(p.r())?;
        Ok((p, dirs, center))
    });
    let (truncated, dirs, center) = match prepared {
        Ok(x) => x,
        Err(Error::ZeroConstantTerm) => return Ok(early(Error::ZeroConstantTerm).partial),
        Err(e) => return Err(early(e)),
    };
    let mut notes = Vec::new();
    if truncated.m() < problem.m() {
        notes.push(format!(
            "center truncated from rank {} to {}",
            problem.m(),
            truncated.m()
        ));
    }
    let per_shift = directions.steps_per_shift(truncated.m()).max(1);
    let outcome = drive(
        &truncated,
        shifts,
        opts,
        initial,
        per_shift,
        |s| if s.is_pair() { 2 } else { 1 },
        |ctx| {
            let sel = directions.select(&DirectionContext {
                a: truncated.a(),
                e: truncated.e(),
                sys: ctx.sys,
                w: ctx.w,
                dirs: &dirs,
                space: ctx.space,
                step: ctx.step,
            })?;
            let outcome = tangential_step(&truncated, ctx.sys, ctx.shift, ctx.w, &sel.direction, &center)?;
            Ok(StepReport {
                outcome,
                direction: sel.direction.index(),
                extra_solves: sel.solves,
                note: sel
                    .fallback
                    .then(|| "direction fell back to the residual heuristic".to_string()),
            })
        },
    );
    match outcome {
        Ok(mut r) => {
            notes.append(&mut r.notes);
            r.notes = notes;
            Ok(r)
        }
        Err(mut f) => {
            notes.append(&mut f.partial.notes);
            f.partial.notes = notes;
            Err(f)
        }
    }
}
