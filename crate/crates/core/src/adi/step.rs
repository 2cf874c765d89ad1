//! The common update kernel behind block and tangential steps.
//!
//! A step with compression `P` (m x p), left factor `Y` (p x m) and center `C` (p x p) solves
//! `V = (A + alpha E)^-1 W P`, updates `W <- W - 2 Re(alpha) E V Y` and appends `V` to `L` and
//! `-2 Re(alpha) C` to `D`. Block steps use `P = Y = I`, `C = R`; tangential steps use `P = t`,
//! `Y = (R^-1 t)^H / q`, `C = 1 / q` with `q = t^H R^-1 t`.

use faer::{Mat, MatRef};

use super::factors::{Shift, StepOutcome};
use crate::error::{Error, Result};
use crate::linalg::scalar::{imag_part, real_part, to_complex};
use crate::linalg::{Arithmetic, Scalar, ShiftedSystem};
use crate::problem::LyapunovProblem;

pub(crate) struct Compression<'a, T: Scalar> {
    /// `None` stands for the identity.
    pub p: Option<MatRef<'a, T>>,
    pub y: Option<MatRef<'a, T>>,
    pub c: MatRef<'a, T>,
}

fn right_multiply<T: Scalar>(m: MatRef<'_, T>, by: Option<MatRef<'_, T>>) -> Mat<T> {
    match by {
        Some(p) => m * p,
        None => m.to_owned(),
    }
}

pub(crate) fn check_system<T: Scalar>(
    problem: &LyapunovProblem<T>,
    sys: &ShiftedSystem<T>,
    shift: Shift,
) -> Result<()> {
    let alpha = shift.value();
    if sys.alpha() != alpha {
        return Err(Error::Input(format!(
            "factorization is for shift {} but the step uses {alpha}",
            sys.alpha()
        )));
    }
    if sys.n() != problem.n() {
        return Err(Error::Dimension("factorization size differs from the problem".into()));
    }
    match shift {
        Shift::Single(_) if !sys.is_in_field() => Err(Error::Input(format!(
            "complex shift {alpha} on a real problem must be taken as a conjugate pair"
        ))),
        Shift::Pair(a) if T::ARITHMETIC == Arithmetic::Complex => Err(Error::Input(format!(
            "conjugate pair {a} requested in complex arithmetic"
        ))),
        Shift::Pair(a) if a.im == 0.0 => Err(Error::Input(format!(
            "conjugate pair with real shift {} must be routed as a single real step",
            a.re
        ))),
        _ => Ok(()),
    }
}

pub(crate) fn step_kernel<T: Scalar>(
    problem: &LyapunovProblem<T>,
    sys: &ShiftedSystem<T>,
    shift: Shift,
    w: MatRef<'_, T>,
    comp: &Compression<'_, T>,
) -> Result<StepOutcome<T>> {
    check_system(problem, sys, shift)?;
    if w.nrows() != problem.n() || w.ncols() != problem.m() {
        return Err(Error::Dimension(format!(
            "residual factor is {}x{}, expected {}x{}",
            w.nrows(),
            w.ncols(),
            problem.n(),
            problem.m()
        )));
    }
    let alpha = shift.value();
    let two_re = T::from_real(-2.0 * alpha.re);
    let block = Mat::from_fn(comp.c.nrows(), comp.c.ncols(), |i, j| comp.c[(i, j)] * two_re);
    let rhs = right_multiply(w, comp.p);

    match shift {
        Shift::Single(_) => {
            let v = sys.solve(rhs.as_ref())?;
            let ev = problem.e().apply(v.as_ref());
            let corr = right_multiply(ev.as_ref(), comp.y);
            // W - 2 Re(alpha) E V Y
            let w_new = Mat::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] + two_re * corr[(i, j)]);
            Ok(StepOutcome {
                shift,
                columns: v,
                blocks: vec![block],
                w: w_new,
                solves: 1,
            })
        }
        Shift::Pair(_) => {
            let v = sys.solve_complex(to_complex(rhs.as_ref()).as_ref())?;
            let delta = alpha.re / alpha.im;
            let (vr, vi) = (real_part(v.as_ref()), imag_part(v.as_ref()));
            let u1 = Mat::from_fn(v.nrows(), v.ncols(), |i, j| {
                T::from_real(vr[(i, j)] + delta * vi[(i, j)])
            });
            let eu = problem.e().apply(u1.as_ref());
            let corr = right_multiply(eu.as_ref(), comp.y);
            // W - 4 Re(alpha) E (Re V + delta Im V) Y
            let w_new = Mat::from_fn(w.nrows(), w.ncols(), |i, j| {
                w[(i, j)] + (two_re + two_re) * corr[(i, j)]
            });
            let s1 = std::f64::consts::SQRT_2;
            let s2 = s1 * (delta * delta + 1.0).sqrt();
            let p = v.ncols();
            let columns = Mat::from_fn(v.nrows(), 2 * p, |i, j| {
                if j < p {
                    u1[(i, j)].scale(s1)
                } else {
                    T::from_real(s2 * vi[(i, j - p)])
                }
            });
            Ok(StepOutcome {
                shift,
                columns,
                blocks: vec![block.clone(), block],
                w: w_new,
                solves: 1,
            })
        }
    }
}
