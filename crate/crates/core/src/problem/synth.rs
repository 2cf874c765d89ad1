//! Seeded synthetic problems with a prescribed stable spectrum.

use faer::{c64, Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{AnyProblem, LyapunovProblem};
use crate::error::{Error, Result};
use crate::linalg::{Arithmetic, CoefficientOperator, Scalar};

/// Spectrum region and randomness of a synthetic problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    /// Real parts are drawn log-uniformly from `[re_min, re_max]`, both negative.
    pub re_min: f64,
    pub re_max: f64,
    /// Bound on the imaginary part of complex eigenvalue pairs.
    pub im_max: f64,
    /// Fraction of eigenvalues that come in complex pairs.
    pub complex_fraction: f64,
    /// Condition number of the similarity transform applied to the block-diagonal core.
    pub transform_cond: f64,
    pub seed: u64,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self {
            re_min: -5.0,
            re_max: -1.0,
            im_max: 1.0,
            complex_fraction: 0.3,
            transform_cond: 4.0,
            seed: 1,
        }
    }
}

impl SpectrumSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn check(&self) -> Result<()> {
        let finite = [
            self.re_min,
            self.re_max,
            self.im_max,
            self.complex_fraction,
            self.transform_cond,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Input("spectrum parameters must be finite".into()));
        }
        if !(self.re_min <= self.re_max && self.re_max < 0.0) {
            return Err(Error::Input(format!(
                "real-part interval [{}, {}] must be nonempty and strictly negative",
                self.re_min, self.re_max
            )));
        }
        if !(0.0..=1.0).contains(&self.complex_fraction) {
            return Err(Error::Input(format!(
                "complex fraction {} outside [0, 1]",
                self.complex_fraction
            )));
        }
        if self.complex_fraction > 0.0 && !(self.im_max > 0.0) {
            return Err(Error::Input(
                "complex pairs requested but the imaginary-part bound is not positive".into(),
            ));
        }
        if !(self.transform_cond >= 1.0) {
            return Err(Error::Input(format!(
                "transform condition {} must be at least 1",
                self.transform_cond
            )));
        }
        Ok(())
    }
}

/// Synthetic problem in the requested arithmetic.
pub fn synth_problem(
    n: usize,
    m: usize,
    spec: &SpectrumSpec,
    r_negative: usize,
    arithmetic: Arithmetic,
) -> Result<AnyProblem> {
    Ok(match arithmetic {
        Arithmetic::Real => AnyProblem::Real(synth_typed::<f64>(n, m, spec, r_negative)?),
        Arithmetic::Complex => AnyProblem::Complex(synth_typed::<c64>(n, m, spec, r_negative)?),
    })
}

/// Synthetic problem with `eig(E^-1 A)` equal to a random block-diagonal stable spectrum.
///
/// `A = E M` with `M = Q1 S Q2^H C Q2 S^-1 Q1^H`, where `C` holds the 1x1 and rotation-scaled
/// 2x2 blocks, `Q1, Q2` are random unitary, `S` is log-spaced with the requested condition, and
/// `E = Q3 diag(1..2) Q3^H` is positive definite. `R` has exactly `r_negative` negative eigenvalues.
pub fn synth_typed<T: Scalar>(
    n: usize,
    m: usize,
    spec: &SpectrumSpec,
    r_negative: usize,
) -> Result<LyapunovProblem<T>> {
    spec.check()?;
    if n == 0 || m == 0 || m > n {
        return Err(Error::Input(format!("need 1 <= m <= n, got n = {n}, m = {m}")));
    }
    if r_negative > m {
        return Err(Error::Input(format!("r_negative = {r_negative} exceeds m = {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let pairs = ((spec.complex_fraction * n as f64) / 2.0).floor() as usize;
    let mut core = Mat::<T>::zeros(n, n);
    let (lo, hi) = (spec.re_max.abs().ln(), spec.re_min.abs().ln());
    let draw_re = |rng: &mut ChaCha8Rng| -(lo + (hi - lo) * rng.random::<f64>()).exp();
    let mut k = 0;
    for _ in 0..pairs {
        let a = draw_re(&mut rng);
        let b = spec.im_max * (1.0 - rng.random::<f64>());
        core[(k, k)] = T::from_real(a);
        core[(k + 1, k + 1)] = T::from_real(a);
        core[(k, k + 1)] = T::from_real(b);
        core[(k + 1, k)] = T::from_real(-b);
        k += 2;
    }
    while k < n {
        core[(k, k)] = T::from_real(draw_re(&mut rng));
        k += 1;
    }

    let q1 = random_unitary::<T>(n, &mut rng);
    let q2 = random_unitary::<T>(n, &mut rng);
    let log_cond = spec.transform_cond.ln();
    let s: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                (log_cond * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect();
    let left = Mat::from_fn(n, n, |i, j| q1[(i, j)].scale(s[j]));
    let right = Mat::from_fn(n, n, |i, j| q1[(j, i)].conj().scale(1.0 / s[i]));
    let m_core = &left * (q2.adjoint() * &core * &q2) * &right;

    let q3 = random_unitary::<T>(n, &mut rng);
    let e_diag: Vec<f64> = (0..n).map(|_| 1.0 + rng.random::<f64>()).collect();
    let e = hermitian_part((&Mat::from_fn(n, n, |i, j| q3[(i, j)].scale(e_diag[j])) * q3.adjoint()).as_ref());
    let a = &e * &m_core;

    let b = Mat::from_fn(n, m, |_, _| gaussian::<T>(&mut rng));
    let qr = random_unitary::<T>(m, &mut rng);
    let r_diag: Vec<f64> = (0..m)
        .map(|i| {
            let mag = 0.5 + 1.5 * rng.random::<f64>();
            if i < r_negative {
                -mag
            } else {
                mag
            }
        })
        .collect();
    let r = hermitian_part((&Mat::from_fn(m, m, |i, j| qr[(i, j)].scale(r_diag[j])) * qr.adjoint()).as_ref());

    Ok(
        LyapunovProblem::new(CoefficientOperator::dense(a)?, CoefficientOperator::dense(e)?, b, r)?.with_name(format!(
            "synthetic-{}-n{n}-m{m}-neg{r_negative}-seed{}",
            T::ARITHMETIC,
            spec.seed
        )),
    )
}

fn gaussian<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    let re: f64 = rng.sample(StandardNormal);
    match T::ARITHMETIC {
        Arithmetic::Real => T::from_real(re),
        Arithmetic::Complex => {
            let im: f64 = rng.sample(StandardNormal);
            T::from_c64(c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2).expect("complex scalar")
        }
    }
}

fn random_unitary<T: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Mat<T> {
    let g = Mat::from_fn(n, n, |_, _| gaussian::<T>(rng));
    g.qr().compute_thin_Q()
}

fn hermitian_part<T: Scalar>(m: MatRef<'_, T>) -> Mat<T> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()).scale(0.5))
}
