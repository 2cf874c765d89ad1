//! Tangential direction strategies over the eigenvectors of the center matrix.

use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::scalar::to_complex;
use crate::linalg::{hermitian_eig, Arithmetic, CoefficientOperator, Scalar, ShiftedSystem};
use crate::shifts::ProjectionSpace;

/// Unitary eigenvectors `t_k` and eigenvalues `s_k` of the center matrix, ordered as by
/// [`hermitian_eig`].
#[derive(Debug, Clone)]
pub struct EigenDirections<T: Scalar> {
    t: Mat<T>,
    s: Vec<f64>,
}

impl<T: Scalar> EigenDirections<T> {
    /// Fails if `r` is not Hermitian or is singular.
    pub fn from_center(r: MatRef<'_, T>) -> Result<Self> {
        let (t, s) = hermitian_eig(r)?;
        if s.contains(&0.0) || s.is_empty() {
            return Err(Error::Input("center matrix is singular; truncate it first".into()));
        }
        Ok(Self { t, s })
    }

    pub fn m(&self) -> usize {
        self.s.len()
    }

    pub fn vectors(&self) -> MatRef<'_, T> {
        self.t.as_ref()
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn vector(&self, k: usize) -> Mat<T> {
        Mat::from_fn(self.m(), 1, |i, _| self.t[(i, k)])
    }
}

/// Index of the largest score, lowest index on ties.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

fn column_norms(m: MatRef<'_, c64>) -> Vec<f64> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

fn solve_any<T: Scalar>(sys: &ShiftedSystem<T>, rhs: MatRef<'_, T>) -> Result<Mat<c64>> {
    if sys.is_in_field() {
        Ok(to_complex(sys.solve(rhs)?.as_ref()))
    } else {
        sys.solve_complex(to_complex(rhs).as_ref())
    }
}

/// `argmax_k ||(A + alpha E)^-1 W t_k||`, using one multi-column solve with `sys`.
pub fn select_full<T: Scalar>(sys: &ShiftedSystem<T>, w: MatRef<'_, T>, dirs: &EigenDirections<T>) -> Result<usize> {
    let v = solve_any(sys, (w * dirs.vectors()).as_ref())?;
    Ok(argmax(&column_norms(v.as_ref())))
}

/// Projected version of [`select_full`] on the orthonormal basis `u`.
///
/// Returns `None` when the projected pencil is singular at `alpha`.
pub fn select_projected<T: Scalar>(
    u: MatRef<'_, T>,
    a: &CoefficientOperator<T>,
    e: &CoefficientOperator<T>,
    w: MatRef<'_, T>,
    alpha: c64,
    dirs: &EigenDirections<T>,
) -> Result<Option<usize>> {
    let ah = CoefficientOperator::dense(a.project(u))?;
    let eh = CoefficientOperator::dense(e.project(u))?;
    let sys = match ShiftedSystem::new(&ah, &eh, alpha) {
        Ok(sys) => sys,
        Err(Error::SingularShift { .. }) => return Ok(None),
        Err(err) => return Err(err),
    };
    let wt = u.adjoint() * (w * dirs.vectors());
    match solve_any(&sys, wt.as_ref()) {
        Ok(v) => Ok(Some(argmax(&column_norms(v.as_ref())))),
        Err(Error::SingularShift { .. }) => Ok(None),
        Err(err) => Err(err),
    }
}

/// `argmax_k ||W t_k||`.
pub fn select_residual<T: Scalar>(w: MatRef<'_, T>, dirs: &EigenDirections<T>) -> usize {
    argmax(&column_norms(to_complex((w * dirs.vectors()).as_ref()).as_ref()))
}

/// `counter mod m`.
pub fn select_cyclic(counter: usize, m: usize) -> usize {
    counter % m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionStrategy {
    Full,
    #[default]
    Projected,
    Residual,
    Cyclic,
    /// Uniform random unit vectors (general directions); reproduces the divergence experiment.
    Random {
        seed: u64,
    },
}

impl fmt::Display for DirectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectionStrategy::Full => f.write_str("full"),
            DirectionStrategy::Projected => f.write_str("projected"),
            DirectionStrategy::Residual => f.write_str("residual"),
            DirectionStrategy::Cyclic => f.write_str("cyclic"),
            DirectionStrategy::Random { .. } => f.write_str("random"),
        }
    }
}

impl FromStr for DirectionStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(DirectionStrategy::Full),
            "projected" => Ok(DirectionStrategy::Projected),
            "residual" => Ok(DirectionStrategy::Residual),
            "cyclic" => Ok(DirectionStrategy::Cyclic),
            "random" => Ok(DirectionStrategy::Random { seed: 0 }),
            other => Err(Error::Input(format!("unknown direction strategy {other:?}"))),
        }
    }
}

/// How a chosen direction enters the tangential update.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionMode {
    /// Arbitrary nonzero direction.
    General,
    /// Unit eigenvector `index` of the center matrix with eigenvalue `value`.
    Eigen { index: usize, value: f64 },
}

/// A tangential direction as an `m x 1` column.
#[derive(Debug, Clone)]
pub struct Direction<T: Scalar> {
    pub t: Mat<T>,
    pub mode: DirectionMode,
}

impl<T: Scalar> Direction<T> {
    pub fn eigen(dirs: &EigenDirections<T>, index: usize) -> Self {
        Self {
            t: dirs.vector(index),
            mode: DirectionMode::Eigen {
                index,
                value: dirs.values()[index],
            },
        }
    }

    pub fn general(t: Mat<T>) -> Self {
        Self {
            t,
            mode: DirectionMode::General,
        }
    }

    pub fn index(&self) -> Option<usize> {
        match self.mode {
            DirectionMode::Eigen { index, .. } => Some(index),
            DirectionMode::General => None,
        }
    }
}

/// Inputs available when a direction is chosen.
pub struct DirectionContext<'a, T: Scalar> {
    pub a: &'a CoefficientOperator<T>,
    pub e: &'a CoefficientOperator<T>,
    pub sys: &'a ShiftedSystem<T>,
    pub w: MatRef<'a, T>,
    pub dirs: &'a EigenDirections<T>,
    pub space: &'a ProjectionSpace<T>,
    /// Number of tangential steps taken so far.
    pub step: usize,
}

/// A chosen direction plus bookkeeping for the trace.
#[derive(Debug, Clone)]
pub struct Selection<T: Scalar> {
    pub direction: Direction<T>,
    pub solves: usize,
    /// The strategy had to fall back to the residual heuristic.
    pub fallback: bool,
}

/// Chooses the direction of each tangential step.
pub trait DirectionSource<T: Scalar> {
    fn select(&mut self, ctx: &DirectionContext<'_, T>) -> Result<Selection<T>>;

    /// Tangential steps taken per shift.
    fn steps_per_shift(&self, _m: usize) -> usize {
        1
    }
}

/// The built-in strategies.
#[derive(Debug, Clone)]
pub struct DirectionSelector {
    strategy: DirectionStrategy,
    rng: ChaCha8Rng,
}

impl DirectionSelector {
    pub fn new(strategy: DirectionStrategy) -> Self {
        let seed = match strategy {
            DirectionStrategy::Random { seed } => seed,
            _ => 0,
        };
        Self {
            strategy,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn strategy(&self) -> DirectionStrategy {
        self.strategy
    }

    fn random_unit<T: Scalar>(&mut self, m: usize) -> Mat<T> {
        let mut t = Mat::from_fn(m, 1, |_, _| {
            let re: f64 = self.rng.sample(StandardNormal);
            match T::ARITHMETIC {
                Arithmetic::Real => T::from_real(re),
                Arithmetic::Complex => {
                    let im: f64 = self.rng.sample(StandardNormal);
                    T::from_c64(c64::new(re, im)).expect("complex scalar")
                }
            }
        });
        let norm = (0..m).map(|i| t[(i, 0)].modulus().powi(2)).sum::<f64>().sqrt();
        for i in 0..m {
            t[(i, 0)] = t[(i, 0)].scale(1.0 / norm);
        }
        t
    }
}

impl<T: Scalar> DirectionSource<T> for DirectionSelector {
    fn select(&mut self, ctx: &DirectionContext<'_, T>) -> Result<Selection<T>> {
        let dirs = ctx.dirs;
        let eigen = |index: usize, solves: usize, fallback: bool| Selection {
            direction: Direction::eigen(dirs, index),
            solves,
            fallback,
        };
        if dirs.m() == 1 && !matches!(self.strategy, DirectionStrategy::Random { .. }) {
            return Ok(eigen(0, 0, false));
        }
        match self.strategy {
            DirectionStrategy::Full => Ok(eigen(select_full(ctx.sys, ctx.w, dirs)?, 1, false)),
            DirectionStrategy::Projected => {
                if ctx.space.is_empty() {
                    return Ok(eigen(select_residual(ctx.w, dirs), 0, true));
                }
                let u = ctx.space.basis();
                match select_projected(u.as_ref(), ctx.a, ctx.e, ctx.w, ctx.sys.alpha(), dirs)? {
                    Some(k) => Ok(eigen(k, 0, false)),
                    None => Ok(eigen(select_residual(ctx.w, dirs), 0, true)),
                }
            }
            DirectionStrategy::Residual => Ok(eigen(select_residual(ctx.w, dirs), 0, false)),
            DirectionStrategy::Cyclic => Ok(eigen(select_cyclic(ctx.step, dirs.m()), 0, false)),
            DirectionStrategy::Random { .. } => Ok(Selection {
                direction: Direction::general(self.random_unit::<T>(dirs.m())),
                solves: 0,
                fallback: false,
            }),
        }
    }

    fn steps_per_shift(&self, m: usize) -> usize {
        match self.strategy {
            DirectionStrategy::Cyclic => m,
            _ => 1,
        }
    }
}
