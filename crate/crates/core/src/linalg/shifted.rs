use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::sparse::linalg::solvers::Lu as SparseLu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, MatRef};

use super::operator::{CoefficientOperator, Storage};
use super::scalar::{all_finite, from_complex, to_complex, Scalar};
use crate::error::{Error, Result};

/// Below this dimension shifted systems are always factored densely.
pub const DENSE_THRESHOLD: usize = 600;

/// Relative pivot size below which a dense factorization is declared singular.
const PIVOT_TOL: f64 = 1e-14;

enum Factor<T: Scalar> {
    Dense(PartialPivLu<T>),
    DenseComplex(PartialPivLu<c64>),
    Sparse(SparseLu<usize, T>),
    SparseComplex(SparseLu<usize, c64>),
}

/// Factorization of `A + alpha E`, reusable across right-hand sides.
///
/// When `T` is real and `alpha` is real the factorization stays in real arithmetic,
/// so real right-hand sides produce exactly real solutions.
pub struct ShiftedSystem<T: Scalar> {
    alpha: c64,
    n: usize,
    factor: Factor<T>,
}

impl<T: Scalar> std::fmt::Debug for ShiftedSystem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShiftedSystem")
            .field("alpha", &self.alpha)
            .field("n", &self.n)
            .field("in_field", &self.is_in_field())
            .finish()
    }
}

impl<T: Scalar> ShiftedSystem<T> {
    /// Factors `A + alpha E`; `alpha` must lie in the open left half-plane.
    pub fn new(a: &CoefficientOperator<T>, e: &CoefficientOperator<T>, alpha: c64) -> Result<Self> {
        if !(alpha.re < 0.0) || !alpha.im.is_finite() {
            return Err(Error::UnstableShift {
                re: alpha.re,
                im: alpha.im,
            });
        }
        Self::new_any(a, e, alpha)
    }

    /// Factors `A + alpha E` for an arbitrary finite `alpha`.
    pub(crate) fn new_any(a: &CoefficientOperator<T>, e: &CoefficientOperator<T>, alpha: c64) -> Result<Self> {
        if a.n() != e.n() {
            return Err(Error::Dimension(format!("A is {0}x{0} but E is {1}x{1}", a.n(), e.n())));
        }
        let n = a.n();
        let singular = || Error::SingularShift {
            re: alpha.re,
            im: alpha.im,
        };
        let use_sparse = n >= DENSE_THRESHOLD
            && !matches!(a.storage(), Storage::Dense(_))
            && !matches!(e.storage(), Storage::Dense(_));
        let in_field = T::from_c64(alpha);

        let factor = match (use_sparse, in_field) {
            (false, Some(alpha_t)) => {
                let m = dense_shifted(a, e, alpha_t);
                let lu = m.partial_piv_lu();
                check_pivots(lu.U()).ok_or_else(singular)?;
                Factor::Dense(lu)
            }
            (false, None) => {
                let m = dense_shifted(&a.to_complex(), &e.to_complex(), alpha);
                let lu = m.partial_piv_lu();
                check_pivots(lu.U()).ok_or_else(singular)?;
                Factor::DenseComplex(lu)
            }
            (true, Some(_)) => {
                let entries: Vec<Triplet<usize, usize, T>> = a
                    .shifted_triplets(e, alpha)
                    .into_iter()
                    .map(|(i, j, v)| Triplet::new(i, j, T::from_c64(v).expect("real shift of real data")))
                    .collect();
                Factor::Sparse(sparse_lu(n, &entries).ok_or_else(singular)?)
            }
            (true, None) => {
                let entries: Vec<Triplet<usize, usize, c64>> = a
                    .shifted_triplets(e, alpha)
                    .into_iter()
                    .map(|(i, j, v)| Triplet::new(i, j, v))
                    .collect();
                Factor::SparseComplex(sparse_lu(n, &entries).ok_or_else(singular)?)
            }
        };
        Ok(Self { alpha, n, factor })
    }

    pub fn alpha(&self) -> c64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether the factorization is held in the arithmetic of `T`.
    pub fn is_in_field(&self) -> bool {
        matches!(self.factor, Factor::Dense(_) | Factor::Sparse(_))
    }

    /// Solves with a right-hand side in `T`; only available when [`Self::is_in_field`].
    pub fn solve(&self, rhs: MatRef<'_, T>) -> Result<Mat<T>> {
        self.check_height(rhs.nrows())?;
        let x = match &self.factor {
            Factor::Dense(lu) => lu.solve(rhs),
            Factor::Sparse(lu) => lu.solve(rhs),
            _ => {
                return Err(Error::Input(
                    "complex shift of a real system needs a complex right-hand side".into(),
                ))
            }
        };
        self.finite_or_singular(x)
    }

    /// Solves with a complex right-hand side, whatever the internal arithmetic.
    pub fn solve_complex(&self, rhs: MatRef<'_, c64>) -> Result<Mat<c64>> {
        self.check_height(rhs.nrows())?;
        let x = match &self.factor {
            Factor::DenseComplex(lu) => lu.solve(rhs),
            Factor::SparseComplex(lu) => lu.solve(rhs),
            Factor::Dense(_) | Factor::Sparse(_) => match from_complex::<T>(rhs) {
                Some(r) => to_complex(self.solve(r.as_ref())?.as_ref()),
                None => {
                    // real factorization, complex data: solve both parts
                    let re = Mat::from_fn(rhs.nrows(), rhs.ncols(), |i, j| T::from_real(rhs[(i, j)].re));
                    let im = Mat::from_fn(rhs.nrows(), rhs.ncols(), |i, j| T::from_real(rhs[(i, j)].im));
                    let xr = self.solve(re.as_ref())?;
                    let xi = self.solve(im.as_ref())?;
                    Mat::from_fn(rhs.nrows(), rhs.ncols(), |i, j| {
                        xr[(i, j)].to_c64() + c64::new(0.0, 1.0) * xi[(i, j)].to_c64()
                    })
                }
            },
        };
        self.finite_or_singular(x)
    }

    fn check_height(&self, rows: usize) -> Result<()> {
        if rows != self.n {
            return Err(Error::Dimension(format!(
                "right-hand side has {rows} rows, system has {}",
                self.n
            )));
        }
        Ok(())
    }

    fn finite_or_singular<S: Scalar>(&self, x: Mat<S>) -> Result<Mat<S>> {
        if all_finite(x.as_ref()) {
            Ok(x)
        } else {
            Err(Error::SingularShift {
                re: self.alpha.re,
                im: self.alpha.im,
            })
        }
    }
}

fn dense_shifted<S: Scalar>(a: &CoefficientOperator<S>, e: &CoefficientOperator<S>, alpha: S) -> Mat<S> {
    let mut m = a.to_dense();
    e.for_each_entry(|i, j, v| m[(i, j)] += alpha * v);
    m
}

fn check_pivots<S: Scalar>(u: MatRef<'_, S>) -> Option<()> {
    let n = u.nrows();
    if n == 0 {
        return Some(());
    }
    let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].modulus()).collect();
    let max = diag.iter().cloned().fold(0.0_f64, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !max.is_finite() || max == 0.0 || min <= PIVOT_TOL * max {
        None
    } else {
        Some(())
    }
}

fn sparse_lu<S: Scalar>(n: usize, entries: &[Triplet<usize, usize, S>]) -> Option<SparseLu<usize, S>> {
    let m = SparseColMat::try_new_from_triplets(n, n, entries).ok()?;
    m.sp_lu().ok()
}

/// One-shot solve of `(A + alpha E) X = rhs` in the field of `T`.
pub fn solve_shifted<T: Scalar>(
    a: &CoefficientOperator<T>,
    e: &CoefficientOperator<T>,
    alpha: c64,
    rhs: MatRef<'_, T>,
) -> Result<Mat<c64>> {
    if rhs.nrows() != a.n() {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, system has {}",
            rhs.nrows(),
            a.n()
        )));
    }
    let sys = ShiftedSystem::new(a, e, alpha)?;
    sys.solve_complex(to_complex(rhs).as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag2() -> (CoefficientOperator<f64>, CoefficientOperator<f64>) {
        (
            CoefficientOperator::diagonal(&[-1.0, -2.0]),
            CoefficientOperator::identity(2),
        )
    }

    #[test]
    fn diagonal_real_shift() {
        let (a, e) = diag2();
        let sys = ShiftedSystem::new(&a, &e, c64::new(-1.0, 0.0)).unwrap();
        assert!(sys.is_in_field());
        let x = sys
            .solve(Mat::from_fn(2, 1, |i, _| if i == 0 { 1.0 } else { 0.0 }).as_ref())
            .unwrap();
        assert_eq!(x[(0, 0)], -0.5);
        assert_eq!(x[(1, 0)], 0.0);
        let x = sys.solve(Mat::from_fn(2, 1, |_, _| 1.0).as_ref()).unwrap();
        assert_eq!(x[(0, 0)], -0.5);
        assert!((x[(1, 0)] + 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn scalar_complex_shift() {
        let a = CoefficientOperator::diagonal(&[-1.0]);
        let e = CoefficientOperator::identity(1);
        let x = solve_shifted(&a, &e, c64::new(-1.0, 1.0), Mat::from_fn(1, 1, |_, _| 1.0).as_ref()).unwrap();
        // 1 / (-2 + i) = (-2 - i) / 5
        assert!((x[(0, 0)] - c64::new(-0.4, -0.2)).norm() < 1e-16);
    }

    #[test]
    fn singular_shift_is_reported() {
        let (a, e) = diag2();
        // alpha = 1 makes A + alpha E = diag(0, -1)
        let err = ShiftedSystem::new_any(&a, &e, c64::new(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularShift { .. }));
        // alpha = -(-2) is outside C-; alpha hitting eigenvalue from inside C- needs unstable A
        let a_unstable = CoefficientOperator::diagonal(&[2.0, -1.0]);
        let err = ShiftedSystem::new(&a_unstable, &e, c64::new(-2.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularShift { .. }));
    }

    #[test]
    fn rejects_right_half_plane_and_bad_heights() {
        let (a, e) = diag2();
        assert!(matches!(
            ShiftedSystem::new(&a, &e, c64::new(0.0, 1.0)).unwrap_err(),
            Error::UnstableShift { .. }
        ));
        let sys = ShiftedSystem::new(&a, &e, c64::new(-1.0, 0.0)).unwrap();
        assert!(matches!(
            sys.solve(Mat::<f64>::zeros(3, 1).as_ref()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn complex_shift_of_real_system_needs_complex_rhs() {
        let (a, e) = diag2();
        let sys = ShiftedSystem::new(&a, &e, c64::new(-1.0, 2.0)).unwrap();
        assert!(!sys.is_in_field());
        assert!(sys.solve(Mat::<f64>::zeros(2, 1).as_ref()).is_err());
        let x = sys
            .solve_complex(Mat::from_fn(2, 1, |_, _| c64::new(1.0, 0.0)).as_ref())
            .unwrap();
        let expect = c64::new(1.0, 0.0) / c64::new(-2.0, 2.0);
        assert!((x[(0, 0)] - expect).norm() < 1e-15);
    }

    #[test]
    fn sparse_path_matches_dense() {
        let n = DENSE_THRESHOLD + 5;
        let mut entries = Vec::new();
        for i in 0..n {
            entries.push((i, i, -4.0 - (i % 7) as f64));
            if i + 1 < n {
                entries.push((i, i + 1, 1.0));
                entries.push((i + 1, i, 0.5));
            }
        }
        let a = CoefficientOperator::from_triplets(n, &entries).unwrap();
        let e = CoefficientOperator::identity(n);
        let rhs = Mat::from_fn(n, 2, |i, j| ((i * 3 + j) % 5) as f64 - 2.0);
        for alpha in [c64::new(-1.5, 0.0), c64::new(-1.0, 3.0)] {
            let sys = ShiftedSystem::new(&a, &e, alpha).unwrap();
            let x = sys.solve_complex(to_complex(rhs.as_ref()).as_ref()).unwrap();
            let ax = a.apply_complex(x.as_ref());
            let ex = e.apply_complex(x.as_ref());
            let mut err = 0.0_f64;
            for j in 0..2 {
                for i in 0..n {
                    err = err.max((ax[(i, j)] + alpha * ex[(i, j)] - c64::new(rhs[(i, j)], 0.0)).norm());
                }
            }
            assert!(err < 1e-12, "residual {err}");
        }
    }
}
