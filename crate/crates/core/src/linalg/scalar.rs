use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use faer::traits::ComplexField;
use faer::{c64, Mat, MatRef};

/// Arithmetic of a problem and of the iterates built for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arithmetic {
    Real,
    Complex,
}

impl Display for Arithmetic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Arithmetic::Real => f.write_str("real"),
            Arithmetic::Complex => f.write_str("complex"),
        }
    }
}

/// Scalar field the solvers are generic over: `f64` or `c64`.
pub trait Scalar:
    ComplexField<Real = f64>
    + Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    const ARITHMETIC: Arithmetic;

    fn from_real(x: f64) -> Self;
    /// `None` when the value has a nonzero imaginary part and `Self` is real.
    fn from_c64(z: c64) -> Option<Self>;
    fn to_c64(self) -> c64;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn conj(self) -> Self;
    fn modulus(self) -> f64;

    fn zero() -> Self {
        Self::from_real(0.0)
    }

    fn scale(self, s: f64) -> Self {
        self * Self::from_real(s)
    }

    fn is_finite_value(self) -> bool {
        self.re().is_finite() && self.im().is_finite()
    }
}

impl Scalar for f64 {
    const ARITHMETIC: Arithmetic = Arithmetic::Real;

    fn from_real(x: f64) -> Self {
        x
    }
    fn from_c64(z: c64) -> Option<Self> {
        (z.im == 0.0).then_some(z.re)
    }
    fn to_c64(self) -> c64 {
        c64::new(self, 0.0)
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn conj(self) -> Self {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for c64 {
    const ARITHMETIC: Arithmetic = Arithmetic::Complex;

    fn from_real(x: f64) -> Self {
        c64::new(x, 0.0)
    }
    fn from_c64(z: c64) -> Option<Self> {
        Some(z)
    }
    fn to_c64(self) -> c64 {
        self
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn conj(self) -> Self {
        c64::new(self.re, -self.im)
    }
    fn modulus(self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Lossless widening of a matrix to complex entries.
pub fn to_complex<T: Scalar>(m: MatRef<'_, T>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].to_c64())
}

/// Narrows a complex matrix to `T`, failing if an imaginary part is nonzero and `T` is real.
pub fn from_complex<T: Scalar>(m: MatRef<'_, c64>) -> Option<Mat<T>> {
    let mut out = Mat::<T>::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out[(i, j)] = T::from_c64(m[(i, j)])?;
        }
    }
    Some(out)
}

pub fn real_part(m: MatRef<'_, c64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

pub fn imag_part(m: MatRef<'_, c64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].im)
}

/// Largest absolute imaginary part of any entry (0 for real matrices).
pub fn max_imag<T: Scalar>(m: MatRef<'_, T>) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].im().abs());
        }
    }
    worst
}

pub fn all_finite<T: Scalar>(m: MatRef<'_, T>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].is_finite_value()))
}

/// Copies `m` scaled by `s` into a fresh matrix.
pub fn scaled<T: Scalar>(m: MatRef<'_, T>, s: T) -> Mat<T> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// Horizontal concatenation `[left, right]`.
pub fn hcat<T: Scalar>(left: MatRef<'_, T>, right: MatRef<'_, T>) -> Mat<T> {
    assert_eq!(left.nrows(), right.nrows(), "hcat: row counts differ");
    let k = left.ncols();
    Mat::from_fn(left.nrows(), k + right.ncols(), |i, j| {
        if j < k {
            left[(i, j)]
        } else {
            right[(i, j - k)]
        }
    })
}

/// Block-diagonal matrix from square blocks.
pub fn block_diag<T: Scalar>(blocks: &[MatRef<'_, T>]) -> Mat<T> {
    let size: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::<T>::zeros(size, size);
    let mut off = 0;
    for b in blocks {
        for j in 0..b.ncols() {
            for i in 0..b.nrows() {
                out[(off + i, off + j)] = b[(i, j)];
            }
        }
        off += b.nrows();
    }
    out
}
