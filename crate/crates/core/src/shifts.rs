//! ADI shift pools, projection-based shift generation and the minimax subset selection.

use std::collections::VecDeque;

use faer::{c64, Mat, MatRef};

use crate::adi::Shift;
use crate::error::{Error, Result};
use crate::linalg::{orthonormal_basis, pencil_eigenvalues, Arithmetic, CoefficientOperator, Scalar, DEFAULT_DROP_TOL};
use crate::problem::LyapunovProblem;

/// Relative imaginary part below which a projected eigenvalue of a real pencil counts as real.
const REAL_SNAP_TOL: f64 = 1e-12;

/// Ordered shifts in the open left half-plane.
///
/// Real-mode pools are closed under conjugation, with each pair adjacent and the member with
/// positive imaginary part first.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPool {
    shifts: Vec<c64>,
    real: bool,
}

impl ShiftPool {
    /// Checks the pool invariants without modifying the order.
    pub fn new(shifts: Vec<c64>, real: bool) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::NoValidShifts("empty shift pool".into()));
        }
        for a in &shifts {
            if !(a.re < 0.0) || !a.im.is_finite() {
                return Err(Error::UnstableShift { re: a.re, im: a.im });
            }
        }
        if real {
            let mut k = 0;
            while k < shifts.len() {
                let a = shifts[k];
                if a.im == 0.0 {
                    k += 1;
                    continue;
                }
                if a.im < 0.0 || k + 1 >= shifts.len() || shifts[k + 1] != a.conj() {
                    return Err(Error::Input(format!(
                        "real-mode pool needs {a} followed by its conjugate"
                    )));
                }
                k += 2;
            }
        }
        Ok(Self { shifts, real })
    }

    /// Builds a pool from arbitrary shifts, completing real-mode pools under conjugation.
    pub fn closed(shifts: &[c64], real: bool) -> Result<Self> {
        if !real {
            return Self::new(shifts.to_vec(), false);
        }
        let mut out: Vec<c64> = Vec::new();
        for &a in shifts {
            if a.im == 0.0 {
                out.push(a);
                continue;
            }
            let rep = if a.im > 0.0 { a } else { a.conj() };
            let seen = out.contains(&rep);
            if !seen {
                out.push(rep);
                out.push(rep.conj());
            }
        }
        Self::new(out, true)
    }

    pub fn shifts(&self) -> &[c64] {
        &self.shifts
    }

    pub fn is_real_mode(&self) -> bool {
        self.real
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    /// The pool as a sequence of steps: in real mode each conjugate pair becomes one [`Shift::Pair`].
    pub fn steps(&self) -> Vec<Shift> {
        let mut out = Vec::with_capacity(self.shifts.len());
        let mut k = 0;
        while k < self.shifts.len() {
            let a = self.shifts[k];
            if self.real && a.im != 0.0 {
                out.push(Shift::Pair(a));
                k += 2;
            } else {
                out.push(Shift::Single(a));
                k += 1;
            }
        }
        out
    }
}

/// Ring buffer of the most recent update columns.
#[derive(Debug, Clone)]
pub struct ProjectionSpace<T: Scalar> {
    n: usize,
    capacity: usize,
    columns: VecDeque<Vec<T>>,
}

impl<T: Scalar> ProjectionSpace<T> {
    pub fn new(n: usize, capacity: usize) -> Self {
        Self {
            n,
            capacity,
            columns: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Appends the columns of `block`, evicting the oldest beyond capacity.
    pub fn push(&mut self, block: MatRef<'_, T>) {
        assert_eq!(block.nrows(), self.n, "projection columns must have the problem height");
        for j in 0..block.ncols() {
            if self.capacity == 0 {
                return;
            }
            if self.columns.len() == self.capacity {
                self.columns.pop_front();
            }
            self.columns.push_back((0..self.n).map(|i| block[(i, j)]).collect());
        }
    }

    pub fn matrix(&self) -> Mat<T> {
        Mat::from_fn(self.n, self.columns.len(), |i, j| self.columns[j][i])
    }

    /// Orthonormal basis of the stored columns.
    pub fn basis(&self) -> Mat<T> {
        orthonormal_basis(self.matrix().as_ref(), DEFAULT_DROP_TOL)
    }
}

/// `max_lambda prod_alpha |(lambda - conj(alpha)) / (lambda + alpha)|`.
pub fn minimax_objective(candidates: &[c64], chosen: &[c64]) -> f64 {
    candidates
        .iter()
        .map(|&l| {
            chosen
                .iter()
                .map(|&a| ((l - a.conj()) / (l + a)).norm())
                .product::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Subset of at most `ell` candidates minimizing [`minimax_objective`], in input order.
///
/// Exhaustive over all subsets of size `ell` for up to 12 candidates, greedy above. Ties go to
/// the subset built from candidates with larger `|Re|`, then larger `|Im|`, then earlier input.
pub fn minimax_select(candidates: &[c64], ell: usize) -> Result<Vec<c64>> {
    if candidates.is_empty() {
        return Err(Error::NoValidShifts("no candidate shifts".into()));
    }
    if ell == 0 {
        return Err(Error::Input("ell must be at least 1".into()));
    }
    for a in candidates {
        if !(a.re < 0.0) {
            return Err(Error::UnstableShift { re: a.re, im: a.im });
        }
    }
    let p = candidates.len();
    if p <= ell {
        return Ok(candidates.to_vec());
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| {
        let (a, b) = (candidates[x], candidates[y]);
        b.re.abs()
            .partial_cmp(&a.re.abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.abs().partial_cmp(&a.im.abs()).unwrap_or(std::cmp::Ordering::Equal))
            .then(x.cmp(&y))
    });
    let better = |val: f64, best: f64| val < best * (1.0 - 1e-12);
    let mut picked: Vec<usize> = if p <= 12 {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut combo: Vec<usize> = (0..ell).collect();
        loop {
            let chosen: Vec<c64> = combo.iter().map(|&k| candidates[order[k]]).collect();
            let val = minimax_objective(candidates, &chosen);
            if best.as_ref().is_none_or(|(b, _)| better(val, *b)) {
                best = Some((val, combo.iter().map(|&k| order[k]).collect()));
            }
            if !next_combination(&mut combo, p) {
                break;
            }
        }
        best.expect("at least one subset").1
    } else {
        let mut chosen: Vec<usize> = Vec::with_capacity(ell);
        while chosen.len() < ell {
            let mut best: Option<(f64, usize)> = None;
            for &k in &order {
                if chosen.contains(&k) {
                    continue;
                }
                let mut trial: Vec<c64> = chosen.iter().map(|&c| candidates[c]).collect();
                trial.push(candidates[k]);
                let val = minimax_objective(candidates, &trial);
                if best.is_none_or(|(b, _)| better(val, b)) {
                    best = Some((val, k));
                }
            }
            chosen.push(best.expect("candidates remain").1);
        }
        chosen
    };
    picked.sort_unstable();
    Ok(picked.into_iter().map(|k| candidates[k]).collect())
}

/// Advances `combo` to the next `k`-subset of `0..p` in lexicographic order.
fn next_combination(combo: &mut [usize], p: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < p - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Stable Ritz values of the pencil projected onto the span of `columns`.
///
/// In real mode only one representative of each conjugate pair is returned (positive imaginary part).
pub fn projected_candidates<T: Scalar>(
    columns: MatRef<'_, T>,
    a: &CoefficientOperator<T>,
    e: &CoefficientOperator<T>,
) -> Result<Vec<c64>> {
    let u = orthonormal_basis(columns, DEFAULT_DROP_TOL);
    if u.ncols() == 0 {
        return Err(Error::NoValidShifts(
            "projection space is empty or numerically zero".into(),
        ));
    }
    let ah = a.project(u.as_ref());
    let eh = e.project(u.as_ref());
    let ev = pencil_eigenvalues(ah.as_ref(), eh.as_ref())?;
    let real = T::ARITHMETIC == Arithmetic::Real;
    let mut out = Vec::new();
    for z in ev.into_iter().filter_map(|x| x.finite()) {
        if !(z.re < 0.0) || !z.is_finite() {
            continue;
        }
        if real {
            if z.im.abs() <= REAL_SNAP_TOL * z.norm() {
                out.push(c64::new(z.re, 0.0));
            } else if z.im > 0.0 {
                out.push(z);
            }
        } else {
            out.push(z);
        }
    }
    Ok(out)
}

fn pool_from_candidates(candidates: &[c64], ell: usize, real: bool) -> Result<ShiftPool> {
    if candidates.is_empty() {
        return Err(Error::NoValidShifts(
            "every projected eigenvalue lies in the closed right half-plane or is infinite".into(),
        ));
    }
    let chosen = minimax_select(candidates, ell)?;
    ShiftPool::closed(&chosen, real)
}

/// Projection shifts from the stored update columns.
pub fn projection_shifts<T: Scalar>(
    space: &ProjectionSpace<T>,
    a: &CoefficientOperator<T>,
    e: &CoefficientOperator<T>,
    ell: usize,
) -> Result<ShiftPool> {
    if space.is_empty() {
        return Err(Error::NoValidShifts("projection space is empty".into()));
    }
    let cands = projected_candidates(space.matrix().as_ref(), a, e)?;
    pool_from_candidates(&cands, ell, T::ARITHMETIC == Arithmetic::Real)
}

/// Initial shifts from the span of `B` (or its leading `sketch_rank` left singular vectors).
pub fn initial_shifts<T: Scalar>(problem: &LyapunovProblem<T>, ell: usize, sketch_rank: usize) -> Result<ShiftPool> {
    if ell == 0 || sketch_rank == 0 {
        return Err(Error::Input("ell and sketch_rank must be at least 1".into()));
    }
    let b = problem.b();
    let basis = if b.ncols() <= sketch_rank {
        b.to_owned()
    } else {
        let svd = b
            .thin_svd()
            .map_err(|e| Error::Numerical(format!("singular value decomposition of B failed: {e:?}")))?;
        let u = svd.U();
        Mat::from_fn(b.nrows(), sketch_rank, |i, j| u[(i, j)])
    };
    let cands = projected_candidates(basis.as_ref(), problem.a(), problem.e())?;
    pool_from_candidates(&cands, ell, T::ARITHMETIC == Arithmetic::Real)
}

/// Supplier of shift pools to a run.
pub trait ShiftSource<T: Scalar> {
    fn initial(&mut self, problem: &LyapunovProblem<T>) -> Result<ShiftPool>;
    /// Called each time the current pool is used up.
    fn refresh(&mut self, problem: &LyapunovProblem<T>, space: &ProjectionSpace<T>) -> Result<ShiftPool>;
}

/// A fixed pool, cycled forever.
#[derive(Debug, Clone)]
pub struct FixedShifts {
    pool: ShiftPool,
}

impl FixedShifts {
    pub fn new(pool: ShiftPool) -> Self {
        Self { pool }
    }

    /// Pool from plain shift values, completed under conjugation for real problems.
    pub fn from_values(shifts: &[c64], arithmetic: Arithmetic) -> Result<Self> {
        Ok(Self::new(ShiftPool::closed(shifts, arithmetic == Arithmetic::Real)?))
    }
}

impl<T: Scalar> ShiftSource<T> for FixedShifts {
    fn initial(&mut self, _: &LyapunovProblem<T>) -> Result<ShiftPool> {
        self.check::<T>()?;
        Ok(self.pool.clone())
    }

    fn refresh(&mut self, _: &LyapunovProblem<T>, _: &ProjectionSpace<T>) -> Result<ShiftPool> {
        Ok(self.pool.clone())
    }
}

impl FixedShifts {
    fn check<T: Scalar>(&self) -> Result<()> {
        let real = T::ARITHMETIC == Arithmetic::Real;
        if self.pool.is_real_mode() != real {
            return Err(Error::Input(format!(
                "shift pool built for {} arithmetic used on a {} problem",
                if self.pool.is_real_mode() { "real" } else { "complex" },
                T::ARITHMETIC
            )));
        }
        Ok(())
    }
}

/// Default number of shifts kept per pool.
pub const DEFAULT_ELL: usize = 6;

/// Adaptive projection shifts; falls back to the last valid pool when projection yields none.
#[derive(Debug, Clone)]
pub struct ProjectionShifts {
    pub ell: usize,
    pub sketch_rank: usize,
    last: Option<ShiftPool>,
    fallbacks: usize,
}

impl ProjectionShifts {
    pub fn new(ell: usize, sketch_rank: usize) -> Self {
        Self {
            ell,
            sketch_rank,
            last: None,
            fallbacks: 0,
        }
    }

    /// How often the last valid pool was reused.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }
}

impl<T: Scalar> ShiftSource<T> for ProjectionShifts {
    fn initial(&mut self, problem: &LyapunovProblem<T>) -> Result<ShiftPool> {
        let pool = initial_shifts(problem, self.ell, self.sketch_rank)?;
        self.last = Some(pool.clone());
        Ok(pool)
    }

    fn refresh(&mut self, problem: &LyapunovProblem<T>, space: &ProjectionSpace<T>) -> Result<ShiftPool> {
        match projection_shifts(space, problem.a(), problem.e(), self.ell) {
            Ok(pool) => {
                self.last = Some(pool.clone());
                Ok(pool)
            }
            Err(Error::NoValidShifts(msg)) => match &self.last {
                Some(pool) => {
                    self.fallbacks += 1;
                    Ok(pool.clone())
                }
                None => Err(Error::NoValidShifts(msg)),
            },
            Err(e) => Err(e),
        }
    }
}
