//! Dense reference solver for small problems and comparison against low-rank factors.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef};

use crate::adi::LdlFactors;
use crate::error::{Error, Result};
use crate::linalg::scalar::scaled;
use crate::linalg::{norm_fro, pencil_eigenvalues, PencilEigenvalue, Scalar};
use crate::problem::LyapunovProblem;

/// Largest dimension the dense solver accepts.
pub const ORACLE_CAP: usize = 256;
/// Largest dimension solved through the vectorized (Kronecker) system.
pub const KRONECKER_MAX_N: usize = 32;
/// Required relative residual of the returned solution.
pub const ORACLE_RESIDUAL_TOL: f64 = 1e-10;

const SIGN_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    Kronecker,
    SignFunction,
    /// Zero constant term, no solve needed.
    Trivial,
}

impl std::fmt::Display for OracleMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OracleMethod::Kronecker => "kronecker",
            OracleMethod::SignFunction => "sign-function",
            OracleMethod::Trivial => "trivial",
        })
    }
}

#[derive(Debug, Clone)]
pub struct DenseSolution<T: Scalar> {
    /// Hermitian solution.
    pub x: Mat<T>,
    pub method: OracleMethod,
    /// `||A X E^H + E X A^H + B R B^H||_F / ||B R B^H||_F`.
    pub residual: f64,
}

/// Solves the equation densely. Uses the vectorized system up to [`KRONECKER_MAX_N`] and the
/// matrix sign function iteration above it.
pub fn dense_lyap_solve<T: Scalar>(problem: &LyapunovProblem<T>) -> Result<DenseSolution<T>> {
    let n = problem.n();
    if n > ORACLE_CAP {
        return Err(Error::Input(format!(
            "dense solve is limited to n <= {ORACLE_CAP}, got {n}"
        )));
    }
    let a = problem.a().to_dense();
    let e = problem.e().to_dense();
    let br = problem.b() * problem.r();
    let c = hermitian_part((&br * problem.b().adjoint()).as_ref());
    let c_norm = norm_fro(c.as_ref());
    if c_norm == 0.0 {
        return Ok(DenseSolution {
            x: Mat::zeros(n, n),
            method: OracleMethod::Trivial,
            residual: 0.0,
        });
    }
    for ev in pencil_eigenvalues(a.as_ref(), e.as_ref())? {
        match ev {
            PencilEigenvalue::Infinite => {
                return Err(Error::Input(
                    "E is singular; the equation has no unique solution".into(),
                ))
            }
            PencilEigenvalue::Finite(z) if !(z.re < 0.0) => {
                return Err(Error::Input(format!(
                    "pencil eigenvalue {z} is not in the open left half-plane; no unique Hermitian solution"
                )))
            }
            _ => {}
        }
    }
    let (x, method) = if n <= KRONECKER_MAX_N {
        (
            kronecker_solve(a.as_ref(), e.as_ref(), c.as_ref())?,
            OracleMethod::Kronecker,
        )
    } else {
        (
            sign_solve(a.as_ref(), e.as_ref(), c.as_ref())?,
            OracleMethod::SignFunction,
        )
    };
    let x = hermitian_part(x.as_ref());
    let residual = equation_residual(a.as_ref(), e.as_ref(), c.as_ref(), x.as_ref()) / c_norm;
    if !(residual <= ORACLE_RESIDUAL_TOL) {
        return Err(Error::Numerical(format!(
            "dense solution misses the equation by {residual:e} (relative), above {ORACLE_RESIDUAL_TOL:e}"
        )));
    }
    Ok(DenseSolution { x, method, residual })
}

/// `||L D L^H - X||_F / ||X||_F`, or the absolute error when `X = 0`.
pub fn compare<T: Scalar>(factors: &LdlFactors<T>, reference: &DenseSolution<T>) -> Result<f64> {
    compare_dense(factors.dense_solution().as_ref(), reference.x.as_ref())
}

pub fn compare_dense<T: Scalar>(x: MatRef<'_, T>, reference: MatRef<'_, T>) -> Result<f64> {
    if x.nrows() != reference.nrows() || x.ncols() != reference.ncols() {
        return Err(Error::Dimension(format!(
            "solution is {}x{}, reference is {}x{}",
            x.nrows(),
            x.ncols(),
            reference.nrows(),
            reference.ncols()
        )));
    }
    let diff = x - reference;
    let err = norm_fro(diff.as_ref());
    let r = norm_fro(reference);
    Ok(if r == 0.0 { err } else { err / r })
}

fn hermitian_part<T: Scalar>(m: MatRef<'_, T>) -> Mat<T> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()).scale(0.5))
}

fn equation_residual<T: Scalar>(a: MatRef<'_, T>, e: MatRef<'_, T>, c: MatRef<'_, T>, x: MatRef<'_, T>) -> f64 {
    let axe = &(a * x) * e.adjoint();
    let r = &axe + axe.adjoint() + c;
    norm_fro(r.as_ref())
}

/// `(conj(E) kron A + conj(A) kron E) vec X = -vec C`.
fn kronecker_solve<T: Scalar>(a: MatRef<'_, T>, e: MatRef<'_, T>, c: MatRef<'_, T>) -> Result<Mat<T>> {
    let n = a.nrows();
    let nn = n * n;
    let k = Mat::from_fn(nn, nn, |row, col| {
        let (i, j) = (row % n, row / n);
        let (p, l) = (col % n, col / n);
        e[(j, l)].conj() * a[(i, p)] + a[(j, l)].conj() * e[(i, p)]
    });
    let rhs = Mat::from_fn(nn, 1, |row, _| -c[(row % n, row / n)]);
    let lu = k.partial_piv_lu();
    check_pivots(lu.U(), "vectorized Lyapunov operator")?;
    let v = lu.solve(&rhs);
    Ok(Mat::from_fn(n, n, |i, j| v[(j * n + i, 0)]))
}

/// Sign iteration for `M X + X M^H + Q = 0` with `M = E^-1 A`, `Q = E^-1 C E^-H`.
fn sign_solve<T: Scalar>(a: MatRef<'_, T>, e: MatRef<'_, T>, c: MatRef<'_, T>) -> Result<Mat<T>> {
    let n = a.nrows();
    let elu = e.partial_piv_lu();
    check_pivots(elu.U(), "E")?;
    let mut m = elu.solve(a);
    let eic = elu.solve(c);
    let mut q = elu.solve(eic.adjoint().to_owned()).adjoint().to_owned();
    let id = Mat::<T>::identity(n, n);
    for _ in 0..SIGN_MAX_ITER {
        let lu = m.partial_piv_lu();
        check_pivots(lu.U(), "sign iterate")?;
        let minv = lu.solve(&id);
        let nm = norm_fro(m.as_ref());
        let ni = norm_fro(minv.as_ref());
        let s = (ni / nm).sqrt();
        let next = combine(m.as_ref(), minv.as_ref(), s);
        let mq = &minv * &q;
        let mqm = &mq * minv.adjoint();
        q = combine(q.as_ref(), mqm.as_ref(), s);
        let step = norm_fro((&next - &m).as_ref());
        m = next;
        if !all_finite(m.as_ref()) || !all_finite(q.as_ref()) {
            break;
        }
        if step <= 1e-13 * norm_fro(m.as_ref()) {
            // Converged iterate must be -I for a stable pencil.
            let dev = norm_fro((&m + &id).as_ref());
            if dev > 1e-8 * (n as f64).sqrt() {
                return Err(Error::Numerical("sign iteration converged away from -I".into()));
            }
            return Ok(scaled(q.as_ref(), T::from_real(0.5)));
        }
    }
    Err(Error::Numerical("sign iteration did not converge".into()))
}

/// `(s X + Y / s) / 2`.
fn combine<T: Scalar>(x: MatRef<'_, T>, y: MatRef<'_, T>, s: f64) -> Mat<T> {
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| {
        (x[(i, j)].scale(s) + y[(i, j)].scale(1.0 / s)).scale(0.5)
    })
}

fn all_finite<T: Scalar>(m: MatRef<'_, T>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].is_finite_value()))
}

fn check_pivots<T: Scalar>(u: MatRef<'_, T>, what: &str) -> Result<()> {
    let d: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].modulus()).collect();
    let max = d.iter().cloned().fold(0.0, f64::max);
    let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || !(min > 1e-14 * max) {
        return Err(Error::Numerical(format!("{what} is singular to working precision")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adi::{block_step_complex, LdlFactors};
    use crate::linalg::{Arithmetic, CoefficientOperator};
    use crate::problem::{synth_typed, SpectrumSpec};
    use faer::c64;

    fn scalar() -> LyapunovProblem<f64> {
        LyapunovProblem::new(
            CoefficientOperator::diagonal(&[-1.0]),
            CoefficientOperator::identity(1),
            Mat::from_fn(1, 1, |_, _| 1.0),
            Mat::from_fn(1, 1, |_, _| 2.0),
        )
        .unwrap()
    }

    #[test]
    fn scalar_solution() {
        let sol = dense_lyap_solve(&scalar()).unwrap();
        assert!((sol.x[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(sol.method, OracleMethod::Kronecker);
    }

    #[test]
    fn diagonal_closed_form() {
        let p = LyapunovProblem::new(
            CoefficientOperator::diagonal(&[-1.0, -2.0]),
            CoefficientOperator::identity(2),
            Mat::from_fn(2, 1, |_, _| 1.0),
            Mat::from_fn(1, 1, |_, _| 1.0),
        )
        .unwrap();
        let x = dense_lyap_solve(&p).unwrap().x;
        let want = [[0.5, 1.0 / 3.0], [1.0 / 3.0, 0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((x[(i, j)] - want[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_constant_term() {
        let p = LyapunovProblem::new(
            CoefficientOperator::diagonal(&[-1.0, -3.0]),
            CoefficientOperator::identity(2),
            Mat::zeros(2, 1),
            Mat::from_fn(1, 1, |_, _| 1.0),
        )
        .unwrap();
        let sol = dense_lyap_solve(&p).unwrap();
        assert_eq!(norm_fro(sol.x.as_ref()), 0.0);
        assert_eq!(compare(&LdlFactors::empty(2), &sol).unwrap(), 0.0);
    }

    #[test]
    fn unstable_pencil_is_rejected() {
        let p = LyapunovProblem::new(
            CoefficientOperator::diagonal(&[1.0, -3.0]),
            CoefficientOperator::identity(2),
            Mat::from_fn(2, 1, |_, _| 1.0),
            Mat::from_fn(1, 1, |_, _| 1.0),
        )
        .unwrap();
        assert!(dense_lyap_solve(&p).unwrap_err().is_input_error());
    }

    #[test]
    fn compare_examples() {
        let p = scalar();
        let sol = dense_lyap_solve(&p).unwrap();
        let out = block_step_complex(&p, c64::new(-1.0, 0.0), p.b()).unwrap();
        let mut f = LdlFactors::empty(1);
        f.append(out.columns.as_ref(), &out.blocks);
        assert!(compare(&f, &sol).unwrap() <= 1e-14);

        let exact = LdlFactors::from_parts(Mat::from_fn(1, 1, |_, _| 1.0), Mat::from_fn(1, 1, |_, _| 1.0));
        assert!(compare(&exact, &sol).unwrap() <= 1e-14);
        assert!(compare(&LdlFactors::empty(2), &sol).is_err());
    }

    #[test]
    fn kronecker_and_sign_function_agree() {
        for arith in [Arithmetic::Real, Arithmetic::Complex] {
            let spec = SpectrumSpec::default().with_seed(7);
            match arith {
                Arithmetic::Real => {
                    let p = synth_typed::<f64>(20, 2, &spec, 1).unwrap();
                    let a = p.a().to_dense();
                    let e = p.e().to_dense();
                    let br = p.b() * p.r();
                    let c = hermitian_part((&br * p.b().adjoint()).as_ref());
                    let x1 = kronecker_solve(a.as_ref(), e.as_ref(), c.as_ref()).unwrap();
                    let x2 = sign_solve(a.as_ref(), e.as_ref(), c.as_ref()).unwrap();
                    assert!(compare_dense(x2.as_ref(), x1.as_ref()).unwrap() < 1e-10);
                }
                Arithmetic::Complex => {
                    let p = synth_typed::<c64>(40, 3, &spec, 1).unwrap();
                    let sol = dense_lyap_solve(&p).unwrap();
                    assert_eq!(sol.method, OracleMethod::SignFunction);
                    assert!(sol.residual <= ORACLE_RESIDUAL_TOL);
                }
            }
        }
    }
}
