use std::fmt;

use faer::{c64, Mat, MatRef};

use crate::error::Result;
use crate::linalg::scalar::block_diag;
use crate::linalg::{hermitian_eig, Scalar};

/// One ADI step's shift: a single shift, or a conjugate pair handled in real arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shift {
    Single(c64),
    /// The pair `(alpha, conj(alpha))`, stored by its member with positive imaginary part.
    Pair(c64),
}

impl Shift {
    pub fn value(self) -> c64 {
        match self {
            Shift::Single(a) | Shift::Pair(a) => a,
        }
    }

    pub fn is_pair(self) -> bool {
        matches!(self, Shift::Pair(_))
    }
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shift::Single(a) => write!(f, "{}{:+}i", a.re, a.im),
            Shift::Pair(a) => write!(f, "{}±{}i", a.re, a.im.abs()),
        }
    }
}

/// Low-rank factorization `X = L D L^H` with block-diagonal `D`.
#[derive(Debug, Clone)]
pub struct LdlFactors<T: Scalar> {
    l: Mat<T>,
    blocks: Vec<Mat<T>>,
    step_widths: Vec<usize>,
}

impl<T: Scalar> LdlFactors<T> {
    pub fn empty(n: usize) -> Self {
        Self {
            l: Mat::zeros(n, 0),
            blocks: Vec::new(),
            step_widths: Vec::new(),
        }
    }

    /// Factors from an explicit `L` and a single center block.
    pub fn from_parts(l: Mat<T>, d: Mat<T>) -> Self {
        assert_eq!(l.ncols(), d.nrows(), "center size must match the factor width");
        let k = l.ncols();
        Self {
            l,
            blocks: if k == 0 { Vec::new() } else { vec![d] },
            step_widths: if k == 0 { Vec::new() } else { vec![k] },
        }
    }

    /// Factors built by the first `steps` steps.
    pub fn leading(&self, steps: usize) -> Self {
        let steps = steps.min(self.step_widths.len());
        let cols: usize = self.step_widths[..steps].iter().sum();
        let mut nblocks = 0;
        let mut seen = 0;
        while seen < cols {
            seen += self.blocks[nblocks].nrows();
            nblocks += 1;
        }
        Self {
            l: self.l.subcols(0, cols).to_owned(),
            blocks: self.blocks[..nblocks].to_vec(),
            step_widths: self.step_widths[..steps].to_vec(),
        }
    }

    /// Equivalent factors with orthonormal `L` and diagonal `D`, dropping eigenvalues of
    /// `L D L^H` below `tol` times the largest in magnitude.
    pub fn compressed(&self, tol: f64) -> Result<Self> {
        let n = self.n();
        if self.ncols() == 0 {
            return Ok(Self::empty(n));
        }
        let qr = self.l.qr();
        let q = qr.compute_thin_Q();
        let r = qr.thin_R().to_owned();
        let core = &(&r * self.d()) * r.adjoint();
        let sym = Mat::from_fn(core.nrows(), core.ncols(), |i, j| {
            (core[(i, j)] + core[(j, i)].conj()).scale(0.5)
        });
        let (u, s) = hermitian_eig(sym.as_ref())?;
        let max = s.first().map_or(0.0, |x| x.abs());
        let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k].abs() > tol * max).collect();
        let uk = Mat::from_fn(u.nrows(), keep.len(), |i, j| u[(i, keep[j])]);
        let d = Mat::from_fn(keep.len(), keep.len(), |i, j| {
            if i == j {
                T::from_real(s[keep[i]])
            } else {
                T::zero()
            }
        });
        Ok(Self::from_parts(&q * &uk, d))
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.l.ncols()
    }

    pub fn l(&self) -> MatRef<'_, T> {
        self.l.as_ref()
    }

    /// Diagonal blocks of `D` in column order.
    pub fn blocks(&self) -> &[Mat<T>] {
        &self.blocks
    }

    /// Number of columns each step contributed.
    pub fn step_widths(&self) -> &[usize] {
        &self.step_widths
    }

    /// `D` as a dense matrix.
    pub fn d(&self) -> Mat<T> {
        let refs: Vec<MatRef<'_, T>> = self.blocks.iter().map(|b| b.as_ref()).collect();
        block_diag(&refs)
    }

    /// Dense `L D L^H`.
    pub fn dense_solution(&self) -> Mat<T> {
        let ld = &self.l * self.d();
        &ld * self.l.adjoint()
    }

    /// Appends the columns and center blocks of a step.
    pub fn append(&mut self, columns: MatRef<'_, T>, blocks: &[Mat<T>]) {
        assert_eq!(columns.nrows(), self.n(), "appended columns have the wrong height");
        assert_eq!(
            blocks.iter().map(|b| b.nrows()).sum::<usize>(),
            columns.ncols(),
            "center blocks must cover the appended columns"
        );
        let k = self.l.ncols();
        let add = columns.ncols();
        self.l.resize_with(self.n(), k + add, |i, j| columns[(i, j - k)]);
        self.blocks.extend(blocks.iter().cloned());
        self.step_widths.push(add);
    }
}

/// Everything a single ADI step (or conjugate pair) produces.
#[derive(Debug, Clone)]
pub struct StepOutcome<T: Scalar> {
    pub shift: Shift,
    /// New columns of `L`.
    pub columns: Mat<T>,
    /// New diagonal blocks of `D`.
    pub blocks: Vec<Mat<T>>,
    /// Updated residual factor `W`.
    pub w: Mat<T>,
    /// Shifted solves consumed.
    pub solves: usize,
}

impl<T: Scalar> StepOutcome<T> {
    pub fn width(&self) -> usize {
        self.columns.ncols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LdlFactors<f64> {
        let mut f = LdlFactors::empty(3);
        let c1 = Mat::from_fn(3, 1, |i, _| (i + 1) as f64);
        let c2 = Mat::from_fn(3, 2, |i, j| if i == j { 1.0 } else { 0.5 });
        f.append(c1.as_ref(), &[Mat::from_fn(1, 1, |_, _| 2.0)]);
        f.append(
            c2.as_ref(),
            &[Mat::from_fn(1, 1, |_, _| -1.0), Mat::from_fn(1, 1, |_, _| -1.0)],
        );
        f
    }

    #[test]
    fn leading_steps() {
        let f = sample();
        let one = f.leading(1);
        assert_eq!(one.ncols(), 1);
        assert_eq!(one.blocks().len(), 1);
        assert_eq!(one.dense_solution()[(2, 2)], 18.0);
        assert_eq!(f.leading(5).ncols(), 3);
        assert_eq!(f.leading(0).ncols(), 0);
    }

    #[test]
    fn compression_preserves_the_product() {
        let f = sample();
        let c = f.compressed(1e-14).unwrap();
        assert_eq!(c.ncols(), 3);
        let diff = &f.dense_solution() - &c.dense_solution();
        assert!(crate::linalg::norm_fro(diff.as_ref()) < 1e-13);
        let rank_one = LdlFactors::from_parts(Mat::from_fn(3, 2, |i, _| i as f64 + 1.0), Mat::<f64>::identity(2, 2));
        assert_eq!(rank_one.compressed(1e-12).unwrap().ncols(), 1);
    }
}
