//! Norms of the low-rank residual `W R W^H` and the explicit residual of `X = L D L^H`.

use std::fmt;
use std::str::FromStr;

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::linalg::scalar::hcat;
use crate::linalg::{eigenvalues, Scalar};
use crate::problem::LyapunovProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormKind {
    #[default]
    Spectral,
    Frobenius,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::Spectral => "spectral",
            NormKind::Frobenius => "frobenius",
        })
    }
}

impl FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" | "2" => Ok(NormKind::Spectral),
            "frobenius" | "fro" => Ok(NormKind::Frobenius),
            other => Err(Error::Input(format!("unknown norm kind {other:?}"))),
        }
    }
}

/// Norm of `W R W^H` from the eigenvalues of the small product `W^H W R`.
pub fn residual_norm<T: Scalar>(w: MatRef<'_, T>, r: MatRef<'_, T>, kind: NormKind) -> Result<f64> {
    if r.nrows() != w.ncols() || r.ncols() != w.ncols() {
        return Err(Error::Dimension(format!(
            "residual factor has {} columns but R is {}x{}",
            w.ncols(),
            r.nrows(),
            r.ncols()
        )));
    }
    if w.ncols() == 0 {
        return Ok(0.0);
    }
    let gram = w.adjoint() * w;
    let ev = eigenvalues((&gram * r).as_ref())?;
    Ok(combine(ev.iter().map(|z| z.norm()), kind))
}

fn combine(mags: impl Iterator<Item = f64>, kind: NormKind) -> f64 {
    match kind {
        NormKind::Spectral => mags.fold(0.0, f64::max),
        NormKind::Frobenius => mags.map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// Spectral norm of `A X E^H + E X A^H + B R B^H` for `X = L D L^H`, without forming `X`.
pub fn explicit_residual_norm<T: Scalar>(
    problem: &LyapunovProblem<T>,
    l: MatRef<'_, T>,
    d: MatRef<'_, T>,
) -> Result<f64> {
    if l.nrows() != problem.n() || d.nrows() != l.ncols() || d.ncols() != l.ncols() {
        return Err(Error::Dimension(format!(
            "factor {}x{} with center {}x{} does not fit n = {}",
            l.nrows(),
            l.ncols(),
            d.nrows(),
            d.ncols(),
            problem.n()
        )));
    }
    let al = problem.a().apply(l);
    let el = problem.e().apply(l);
    explicit_residual_norm_parts(al.as_ref(), el.as_ref(), d, problem.b(), problem.r())
}

/// [`explicit_residual_norm`] from precomputed products `A L` and `E L`.
///
/// The residual is `Z M Z^H` with `Z = [A L, E L, B]` and `M = [[0, D, 0], [D, 0, 0], [0, 0, R]]`;
/// its norm is read off the small Hermitian matrix `T M T^H` where `Z = Q T`.
pub fn explicit_residual_norm_parts<T: Scalar>(
    al: MatRef<'_, T>,
    el: MatRef<'_, T>,
    d: MatRef<'_, T>,
    b: MatRef<'_, T>,
    r: MatRef<'_, T>,
) -> Result<f64> {
    let k = al.ncols();
    let m = b.ncols();
    let z = hcat(hcat(al, el).as_ref(), b);
    let p = 2 * k + m;
    let mut mid = Mat::<T>::zeros(p, p);
    for j in 0..k {
        for i in 0..k {
            mid[(i, k + j)] = d[(i, j)];
            mid[(k + i, j)] = d[(i, j)];
        }
    }
    for j in 0..m {
        for i in 0..m {
            mid[(2 * k + i, 2 * k + j)] = r[(i, j)];
        }
    }
    let small = if p >= z.nrows() {
        &z * &mid * z.adjoint()
    } else {
        let t = z.qr().thin_R().to_owned();
        &t * &mid * t.adjoint()
    };
    let s = small.nrows();
    let sym = Mat::from_fn(s, s, |i, j| (small[(i, j)] + small[(j, i)].conj()).scale(0.5));
    if s == 0 {
        return Ok(0.0);
    }
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    let vals = evd.S().column_vector();
    Ok((0..s).map(|i| vals[i].re().abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CoefficientOperator;

    fn mat(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn scalar_problem() -> LyapunovProblem<f64> {
        LyapunovProblem::new(
            CoefficientOperator::diagonal(&[-1.0]),
            CoefficientOperator::identity(1),
            mat(&[&[1.0]]),
            mat(&[&[2.0]]),
        )
        .unwrap()
    }

    #[test]
    fn implicit_norm_examples() {
        let h = 1.0 / 2f64.sqrt();
        let w = mat(&[&[h, h], &[h, -h], &[0.0, 0.0]]);
        let r = mat(&[&[3.0, 0.0], &[0.0, -2.0]]);
        assert!((residual_norm(w.as_ref(), r.as_ref(), NormKind::Spectral).unwrap() - 3.0).abs() < 1e-14);
        assert!((residual_norm(w.as_ref(), r.as_ref(), NormKind::Frobenius).unwrap() - 13f64.sqrt()).abs() < 1e-14);
        let z = Mat::<f64>::zeros(3, 2);
        for kind in [NormKind::Spectral, NormKind::Frobenius] {
            assert_eq!(residual_norm(z.as_ref(), r.as_ref(), kind).unwrap(), 0.0);
        }
        let w = mat(&[&[1.0], &[1.0]]);
        assert!((residual_norm(w.as_ref(), mat(&[&[2.0]]).as_ref(), NormKind::Spectral).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn implicit_norm_rejects_mismatch() {
        let w = Mat::<f64>::zeros(3, 2);
        assert!(matches!(
            residual_norm(w.as_ref(), Mat::<f64>::zeros(3, 3).as_ref(), NormKind::Spectral),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn explicit_norm_examples() {
        let p = scalar_problem();
        let empty = Mat::<f64>::zeros(1, 0);
        let d0 = Mat::<f64>::zeros(0, 0);
        assert!((explicit_residual_norm(&p, empty.as_ref(), d0.as_ref()).unwrap() - 2.0).abs() < 1e-15);
        let r = explicit_residual_norm(&p, mat(&[&[-0.5]]).as_ref(), mat(&[&[4.0]]).as_ref()).unwrap();
        assert!(r.abs() < 1e-15);
        let r = explicit_residual_norm(&p, mat(&[&[-1.0 / 3.0]]).as_ref(), mat(&[&[8.0]]).as_ref()).unwrap();
        assert!((r - 2.0 / 9.0).abs() < 1e-15);
    }
}
