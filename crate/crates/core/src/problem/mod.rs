//! Problem model `A X E^H + E X A^H + B R B^H = 0`.

pub mod mtx;
pub mod synth;

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::dense::HERMITIAN_TOL;
use crate::linalg::scalar::{block_diag, from_complex, hcat, max_imag, to_complex};
use crate::linalg::{hermitian_deviation, hermitian_eig, pencil_eigenvalues, Arithmetic, CoefficientOperator, Scalar};

pub use mtx::{load_matrix_market, save_problem, ProblemFiles};
pub use synth::{synth_problem, synth_typed, SpectrumSpec};

/// Default relative tolerance of [`rank_truncate`].
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-12;

/// Largest dimension for which [`validate`] computes the pencil spectrum densely.
pub const STABILITY_CHECK_CAP: usize = 4096;

/// A Lyapunov problem over the scalar field `T`.
#[derive(Debug, Clone)]
pub struct LyapunovProblem<T: Scalar> {
    a: CoefficientOperator<T>,
    e: CoefficientOperator<T>,
    b: Mat<T>,
    r: Mat<T>,
    name: String,
}

impl<T: Scalar> LyapunovProblem<T> {
    /// Checks shapes only; use [`validate`] for the Hermitian and stability checks.
    pub fn new(a: CoefficientOperator<T>, e: CoefficientOperator<T>, b: Mat<T>, r: Mat<T>) -> Result<Self> {
        let n = a.n();
        if e.n() != n {
            return Err(Error::Dimension(format!("A is {n}x{n} but E is {0}x{0}", e.n())));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, A is {n}x{n}", b.nrows())));
        }
        if r.nrows() != r.ncols() || r.nrows() != b.ncols() {
            return Err(Error::Dimension(format!(
                "R is {}x{} but B has {} columns",
                r.nrows(),
                r.ncols(),
                b.ncols()
            )));
        }
        Ok(Self {
            a,
            e,
            b,
            r,
            name: String::from("unnamed"),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn a(&self) -> &CoefficientOperator<T> {
        &self.a
    }
    pub fn e(&self) -> &CoefficientOperator<T> {
        &self.e
    }
    pub fn b(&self) -> MatRef<'_, T> {
        self.b.as_ref()
    }
    pub fn r(&self) -> MatRef<'_, T> {
        self.r.as_ref()
    }
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.a.n()
    }
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    pub fn arithmetic(&self) -> Arithmetic {
        T::ARITHMETIC
    }

    /// Spectral norm of the constant term `B R B^H`.
    pub fn constant_term_norm(&self) -> Result<f64> {
        crate::residual::residual_norm(self.b(), self.r(), crate::residual::NormKind::Spectral)
    }

    /// Same equation with `R` made invertible, see [`rank_truncate`].
    pub fn truncated(&self, tol: f64) -> Result<Self> {
        let (b, r) = rank_truncate(self.b(), self.r(), tol)?;
        Ok(Self {
            a: self.a.clone(),
            e: self.e.clone(),
            b,
            r,
            name: self.name.clone(),
        })
    }

    /// Appends a low-rank term: `B <- [B, N L]`, `R <- blkdiag(R, D)` (`N` defaults to the identity).
    pub fn with_low_rank_term(
        &self,
        coupling: Option<&CoefficientOperator<T>>,
        l: MatRef<'_, T>,
        d: MatRef<'_, T>,
    ) -> Result<Self> {
        if l.nrows() != self.n() || d.nrows() != l.ncols() || d.ncols() != l.ncols() {
            return Err(Error::Dimension(format!(
                "low-rank term {}x{} with center {}x{} does not fit n = {}",
                l.nrows(),
                l.ncols(),
                d.nrows(),
                d.ncols(),
                self.n()
            )));
        }
        let nl = match coupling {
            Some(op) => {
                if op.n() != self.n() {
                    return Err(Error::Dimension("coupling operator size differs from n".into()));
                }
                op.apply(l)
            }
            None => l.to_owned(),
        };
        let b = hcat(self.b(), nl.as_ref());
        let r = block_diag(&[self.r(), d]);
        let mut out = Self::new(self.a.clone(), self.e.clone(), b, r)?;
        out.name = self.name.clone();
        Ok(out)
    }

    pub fn to_complex(&self) -> LyapunovProblem<c64> {
        LyapunovProblem {
            a: self.a.to_complex(),
            e: self.e.to_complex(),
            b: to_complex(self.b()),
            r: to_complex(self.r()),
            name: self.name.clone(),
        }
    }
}

impl LyapunovProblem<c64> {
    /// Narrows to real arithmetic when every entry is real.
    pub fn to_real(&self) -> Option<LyapunovProblem<f64>> {
        Some(LyapunovProblem {
            a: self.a.to_real()?,
            e: self.e.to_real()?,
            b: from_complex(self.b())?,
            r: from_complex(self.r())?,
            name: self.name.clone(),
        })
    }
}

/// A problem in either arithmetic.
#[derive(Debug, Clone)]
pub enum AnyProblem {
    Real(LyapunovProblem<f64>),
    Complex(LyapunovProblem<c64>),
}

impl AnyProblem {
    /// Real if every entry is real, complex otherwise.
    pub fn infer(p: LyapunovProblem<c64>) -> Self {
        match p.to_real() {
            Some(r) => AnyProblem::Real(r),
            None => AnyProblem::Complex(p),
        }
    }

    /// Forces the requested arithmetic; a complex problem cannot be made real.
    pub fn with_arithmetic(self, arithmetic: Arithmetic) -> Result<Self> {
        match (self, arithmetic) {
            (AnyProblem::Real(p), Arithmetic::Complex) => Ok(AnyProblem::Complex(p.to_complex())),
            (AnyProblem::Complex(p), Arithmetic::Real) => match p.to_real() {
                Some(r) => Ok(AnyProblem::Real(r)),
                None => Err(Error::Input(
                    "problem has complex entries; real arithmetic is impossible".into(),
                )),
            },
            (p, _) => Ok(p),
        }
    }

    pub fn arithmetic(&self) -> Arithmetic {
        match self {
            AnyProblem::Real(_) => Arithmetic::Real,
            AnyProblem::Complex(_) => Arithmetic::Complex,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            AnyProblem::Real(p) => p.n(),
            AnyProblem::Complex(p) => p.n(),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            AnyProblem::Real(p) => p.m(),
            AnyProblem::Complex(p) => p.m(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            AnyProblem::Real(p) => p.name(),
            AnyProblem::Complex(p) => p.name(),
        }
    }

    pub fn to_complex(&self) -> LyapunovProblem<c64> {
        match self {
            AnyProblem::Real(p) => p.to_complex(),
            AnyProblem::Complex(p) => p.clone(),
        }
    }

    pub fn validate(&self, check_stability: bool) -> ValidationReport {
        match self {
            AnyProblem::Real(p) => validate(p, check_stability),
            AnyProblem::Complex(p) => validate(p, check_stability),
        }
    }
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// `max |R_ij - conj(R_ji)| / ||R||_F`.
    pub hermitian_deviation: f64,
    pub hermitian: bool,
    /// Largest imaginary part of any entry of `A`, `E`, `B`, `R`.
    pub max_imag: f64,
    /// `(positive, negative, zero)` eigenvalue counts of `R` when it is Hermitian.
    pub inertia: Option<(usize, usize, usize)>,
    /// Largest real part of the finite pencil eigenvalues, when computed.
    pub max_real_eigenvalue: Option<f64>,
    pub hurwitz: Option<bool>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    /// Hermitian `R` and no detected instability.
    pub fn is_ok(&self) -> bool {
        self.hermitian && self.hurwitz != Some(false)
    }
}

/// Report-only checks of the problem assumptions.
pub fn validate<T: Scalar>(problem: &LyapunovProblem<T>, check_stability: bool) -> ValidationReport {
    let dev = hermitian_deviation(problem.r());
    let hermitian = dev <= HERMITIAN_TOL;
    let max_imag = problem
        .a
        .max_imag()
        .max(problem.e.max_imag())
        .max(max_imag(problem.b()))
        .max(max_imag(problem.r()));
    let mut notes = Vec::new();
    if !hermitian {
        notes.push(format!("R is not Hermitian (relative deviation {dev:e})"));
    }
    if problem.m() > problem.n() {
        notes.push(format!(
            "B has more columns ({}) than rows ({}); rank truncation will shrink it",
            problem.m(),
            problem.n()
        ));
    }
    let inertia = if hermitian {
        hermitian_eig(problem.r()).ok().map(|(_, s)| {
            let scale = s.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
            let zero_tol = DEFAULT_TRUNCATION_TOL * scale;
            let pos = s.iter().filter(|&&x| x > zero_tol).count();
            let neg = s.iter().filter(|&&x| x < -zero_tol).count();
            (pos, neg, s.len() - pos - neg)
        })
    } else {
        None
    };

    let (mut max_real_eigenvalue, mut hurwitz) = (None, None);
    if check_stability {
        if problem.n() > STABILITY_CHECK_CAP {
            notes.push(format!("stability check skipped: n > {STABILITY_CHECK_CAP}"));
        } else {
            let a = problem.a.to_dense();
            let e = problem.e.to_dense();
            match pencil_eigenvalues(a.as_ref(), e.as_ref()) {
                Ok(ev) => {
                    let finite: Vec<c64> = ev.iter().filter_map(|x| x.finite()).collect();
                    if finite.len() < ev.len() {
                        notes.push(format!(
                            "{} infinite pencil eigenvalues (E singular)",
                            ev.len() - finite.len()
                        ));
                    }
                    let worst = finite.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                    max_real_eigenvalue = Some(worst);
                    hurwitz = Some(worst < 0.0);
                }
                Err(e) => notes.push(format!("stability check failed: {e}")),
            }
        }
    }
    ValidationReport {
        hermitian_deviation: dev,
        hermitian,
        max_imag,
        inertia,
        max_real_eigenvalue,
        hurwitz,
        notes,
    }
}

/// Removes the numerically zero eigenspace of `R`.
///
/// Returns `(B T_k, diag(s_k))` over the eigenpairs with `|s_k| > tol * max |s|`, ordered as by
/// [`hermitian_eig`], so `B R B^H` is preserved and the new center is invertible.
pub fn rank_truncate<T: Scalar>(b: MatRef<'_, T>, r: MatRef<'_, T>, tol: f64) -> Result<(Mat<T>, Mat<T>)> {
    if r.nrows() != b.ncols() {
        return Err(Error::Dimension(format!(
            "R is {}x{} but B has {} columns",
            r.nrows(),
            r.ncols(),
            b.ncols()
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::Input(format!(
            "truncation tolerance must be nonnegative, got {tol}"
        )));
    }
    let (t, s) = hermitian_eig(r)?;
    let scale = s.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::ZeroConstantTerm);
    }
    let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k].abs() > tol * scale).collect();
    let tk = Mat::from_fn(t.nrows(), keep.len(), |i, j| t[(i, keep[j])]);
    let b_hat = b * &tk;
    let r_hat = Mat::from_fn(keep.len(), keep.len(), |i, j| {
        if i == j {
            T::from_real(s[keep[i]])
        } else {
            T::zero()
        }
    });
    Ok((b_hat, r_hat))
}
