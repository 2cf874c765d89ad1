use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef, Side};

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Default relative drop tolerance for [`orthonormal_basis`].
pub const DEFAULT_DROP_TOL: f64 = 1e-10;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-13;

/// Generalized eigenvalue of a small pencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PencilEigenvalue {
    Finite(c64),
    Infinite,
}

impl PencilEigenvalue {
    pub fn finite(self) -> Option<c64> {
        match self {
            PencilEigenvalue::Finite(z) => Some(z),
            PencilEigenvalue::Infinite => None,
        }
    }
}

/// Orthonormal basis of the column span, via Gram-Schmidt with one reorthogonalization pass.
///
/// Columns whose remaining norm falls below `drop_tol` times the largest input column norm are dropped.
pub fn orthonormal_basis<T: Scalar>(columns: MatRef<'_, T>, drop_tol: f64) -> Mat<T> {
    let n = columns.nrows();
    let max_norm = (0..columns.ncols())
        .map(|j| col_norm(columns.col(j).as_mat()))
        .fold(0.0_f64, f64::max);
    if max_norm == 0.0 || !max_norm.is_finite() {
        return Mat::zeros(n, 0);
    }
    let mut basis: Vec<Vec<T>> = Vec::new();
    for j in 0..columns.ncols() {
        let mut v: Vec<T> = (0..n).map(|i| columns[(i, j)]).collect();
        for _ in 0..2 {
            for q in &basis {
                let mut proj = T::zero();
                for i in 0..n {
                    proj += q[i].conj() * v[i];
                }
                for i in 0..n {
                    v[i] -= q[i] * proj;
                }
            }
        }
        let norm = v.iter().map(|x| x.modulus() * x.modulus()).sum::<f64>().sqrt();
        if norm > drop_tol * max_norm {
            let inv = T::from_real(1.0 / norm);
            basis.push(v.into_iter().map(|x| x * inv).collect());
        }
    }
    Mat::from_fn(n, basis.len(), |i, j| basis[j][i])
}

fn col_norm<T: Scalar>(m: MatRef<'_, T>) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let x = m[(i, 0)].modulus();
        acc += x * x;
    }
    acc.sqrt()
}

/// Frobenius norm of a dense block.
pub fn norm_fro<T: Scalar>(m: MatRef<'_, T>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let x = m[(i, j)].modulus();
            acc += x * x;
        }
    }
    acc.sqrt()
}

/// `max |m_ij - conj(m_ji)|` relative to the Frobenius norm of `m` (0 for the zero matrix).
pub fn hermitian_deviation<T: Scalar>(m: MatRef<'_, T>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst = 0.0_f64;
    for j in 0..m.ncols() {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).modulus());
        }
    }
    let scale = norm_fro(m);
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// Eigendecomposition `R = T diag(S) T^H` of a Hermitian matrix.
///
/// Eigenvalues are ordered by descending magnitude, ties with the positive value first and then
/// by ascending position in the underlying solver's output. Each eigenvector is scaled so that
/// its largest-modulus entry is real and positive.
pub fn hermitian_eig<T: Scalar>(r: MatRef<'_, T>) -> Result<(Mat<T>, Vec<f64>)> {
    if r.nrows() != r.ncols() {
        return Err(Error::Input(format!(
            "center matrix must be square, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    let dev = hermitian_deviation(r);
    if dev > HERMITIAN_TOL {
        return Err(Error::Input(format!(
            "matrix is not Hermitian (relative deviation {dev:e})"
        )));
    }
    let m = r.nrows();
    if m == 0 {
        return Ok((Mat::zeros(0, 0), Vec::new()));
    }
    let sym = Mat::from_fn(m, m, |i, j| (r[(i, j)] + r[(j, i)].conj()).scale(0.5));
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    let u = evd.U();
    let s = evd.S().column_vector();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (s[a].re(), s[b].re());
        sb.abs()
            .partial_cmp(&sa.abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| (sb > 0.0).cmp(&(sa > 0.0)))
            .then(a.cmp(&b))
    });
    let mut t = Mat::<T>::zeros(m, m);
    let mut vals = Vec::with_capacity(m);
    for (k, &src) in order.iter().enumerate() {
        vals.push(s[src].re());
        let mut pivot = 0;
        for i in 0..m {
            if u[(i, src)].modulus() > u[(pivot, src)].modulus() {
                pivot = i;
            }
        }
        let p = u[(pivot, src)];
        // unit phase that rotates the pivot onto the positive real axis
        let phase = p.conj().scale(1.0 / p.modulus());
        for i in 0..m {
            t[(i, k)] = u[(i, src)] * phase;
        }
    }
    Ok((t, vals))
}

/// All generalized eigenvalues of the pencil `lambda E - A`.
pub fn pencil_eigenvalues<T: Scalar>(a: MatRef<'_, T>, e: MatRef<'_, T>) -> Result<Vec<PencilEigenvalue>> {
    if a.nrows() != a.ncols() || e.nrows() != e.ncols() || a.nrows() != e.nrows() {
        return Err(Error::Input(format!(
            "pencil needs square matrices of equal size, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            e.nrows(),
            e.ncols()
        )));
    }
    let k = a.nrows();
    if k == 0 {
        return Ok(Vec::new());
    }
    let fail = |what: &str| Error::Numerical(format!("pencil eigensolver failed: {what}"));

    // Work in the field of the inputs so that real pencils give exact conjugate pairs.
    if rcond(e)? > 1e-10 {
        let m = e.partial_piv_lu().solve(a);
        let ev = m.eigenvalues().map_err(|err| fail(&format!("{err:?}")))?;
        return Ok(ev.into_iter().map(PencilEigenvalue::Finite).collect());
    }

    // Shift-invert with a real shift: theta = 1 / (lambda - sigma) are the eigenvalues of
    // (A - sigma E)^-1 E, and infinite eigenvalues map to theta = 0.
    let na = norm_fro(a);
    let ne = norm_fro(e);
    let scale = if ne > 0.0 && na > 0.0 { na / ne } else { 1.0 };
    let mut best: Option<(f64, f64, Mat<T>)> = None;
    for z in [-0.73, 0.41, -1.37, 1.71] {
        let sigma = z * scale;
        let shifted = Mat::from_fn(k, k, |i, j| a[(i, j)] - e[(i, j)].scale(sigma));
        let rc = rcond(shifted.as_ref())?;
        if best.as_ref().is_none_or(|(b, _, _)| rc > *b) {
            best = Some((rc, sigma, shifted));
        }
    }
    let (rc, sigma, shifted) = best.expect("candidate list is non-empty");
    if rc < 1e-14 {
        return Err(fail("pencil appears singular (det(lambda E - A) vanishes identically)"));
    }
    let m = shifted.partial_piv_lu().solve(e);
    let thr = 1e-12 * norm_fro(m.as_ref());
    let theta = m.eigenvalues().map_err(|err| fail(&format!("{err:?}")))?;
    Ok(theta
        .into_iter()
        .map(|t| {
            if t.norm() <= thr {
                PencilEigenvalue::Infinite
            } else {
                PencilEigenvalue::Finite(c64::new(sigma, 0.0) + c64::new(1.0, 0.0) / t)
            }
        })
        .collect())
}

/// Reciprocal 2-norm condition number estimate via singular values (0 for singular or zero input).
fn rcond<T: Scalar>(m: MatRef<'_, T>) -> Result<f64> {
    let s = m
        .singular_values()
        .map_err(|e| Error::Numerical(format!("singular value decomposition failed: {e:?}")))?;
    let max = s.iter().cloned().fold(0.0_f64, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 || !max.is_finite() {
        Ok(0.0)
    } else {
        Ok(min / max)
    }
}

/// Eigenvalues of a general square matrix.
pub fn eigenvalues<T: Scalar>(m: MatRef<'_, T>) -> Result<Vec<c64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Input(format!(
            "eigenvalues of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn sorted_re(v: &[PencilEigenvalue]) -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().map(|x| x.finite().unwrap().re).collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    #[test]
    fn basis_drops_duplicates() {
        let u = orthonormal_basis(mat(&[&[1.0, 1.0], &[0.0, 0.0]]).as_ref(), DEFAULT_DROP_TOL);
        assert_eq!(u.ncols(), 1);
        assert!((u[(0, 0)].abs() - 1.0).abs() < 1e-15 && u[(1, 0)] == 0.0);
    }

    #[test]
    fn basis_of_plane_and_normalization() {
        let u = orthonormal_basis(mat(&[&[1.0, 0.0], &[0.0, 1.0]]).as_ref(), DEFAULT_DROP_TOL);
        assert_eq!(u.ncols(), 2);
        let g = u.adjoint() * &u;
        assert!((&g - Mat::<f64>::identity(2, 2)).norm_l2() < 1e-15);
        let u = orthonormal_basis(mat(&[&[1.0], &[1.0]]).as_ref(), DEFAULT_DROP_TOL);
        let h = 1.0 / 2f64.sqrt();
        assert!((u[(0, 0)] - h).abs() < 1e-15 && (u[(1, 0)] - h).abs() < 1e-15);
        assert_eq!(
            orthonormal_basis(Mat::<f64>::zeros(3, 2).as_ref(), DEFAULT_DROP_TOL).ncols(),
            0
        );
    }

    #[test]
    fn diagonal_and_defective_pencils() {
        let ev = pencil_eigenvalues(
            mat(&[&[-1.0, 0.0], &[0.0, -2.0]]).as_ref(),
            Mat::<f64>::identity(2, 2).as_ref(),
        )
        .unwrap();
        assert_eq!(sorted_re(&ev), vec![-2.0, -1.0]);
        let ev = pencil_eigenvalues(
            mat(&[&[0.0, -1.0], &[1.0, -2.0]]).as_ref(),
            Mat::<f64>::identity(2, 2).as_ref(),
        )
        .unwrap();
        for z in ev {
            // double eigenvalue: perturbation is O(sqrt(eps))
            assert!((z.finite().unwrap() - c64::new(-1.0, 0.0)).norm() < 1e-7);
        }
    }

    #[test]
    fn singular_e_gives_infinite_eigenvalues() {
        let ev = pencil_eigenvalues(mat(&[&[1.0]]).as_ref(), mat(&[&[0.0]]).as_ref()).unwrap();
        assert_eq!(ev, vec![PencilEigenvalue::Infinite]);
        let ev = pencil_eigenvalues(
            mat(&[&[-3.0, 0.0], &[0.0, 1.0]]).as_ref(),
            mat(&[&[1.0, 0.0], &[0.0, 0.0]]).as_ref(),
        )
        .unwrap();
        let inf = ev.iter().filter(|x| x.finite().is_none()).count();
        assert_eq!(inf, 1);
        let fin: Vec<c64> = ev.iter().filter_map(|x| x.finite()).collect();
        assert!((fin[0] - c64::new(-3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pencil_rejects_non_square() {
        assert!(matches!(
            pencil_eigenvalues(Mat::<f64>::zeros(2, 3).as_ref(), Mat::<f64>::zeros(2, 3).as_ref()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn hermitian_eig_examples() {
        let (t, s) = hermitian_eig(mat(&[&[2.0, 0.0], &[0.0, -1.0]]).as_ref()).unwrap();
        assert_eq!(s, vec![2.0, -1.0]);
        assert!((&t - Mat::<f64>::identity(2, 2)).norm_l2() < 1e-15);

        let (t, s) = hermitian_eig(mat(&[&[0.0, 1.0], &[1.0, 0.0]]).as_ref()).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-15 && (s[1] + 1.0).abs() < 1e-15);
        let h = 1.0 / 2f64.sqrt();
        assert!((t[(0, 0)] - h).abs() < 1e-15 && (t[(1, 0)] - h).abs() < 1e-15);
        assert!((t[(0, 1)].abs() - h).abs() < 1e-15 && (t[(0, 1)] + t[(1, 1)]).abs() < 1e-15);

        let (_, s) = hermitian_eig(mat(&[&[2.0, 1.0], &[1.0, 2.0]]).as_ref()).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_eig_ties_put_positive_first() {
        let (_, s) = hermitian_eig(mat(&[&[-1.0, 0.0], &[0.0, 1.0]]).as_ref()).unwrap();
        assert_eq!(s, vec![1.0, -1.0]);
    }

    #[test]
    fn hermitian_eig_rejects_non_hermitian() {
        assert!(matches!(
            hermitian_eig(mat(&[&[0.0, 1.0], &[0.0, 0.0]]).as_ref()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn complex_hermitian_reconstruction() {
        let r = Mat::from_fn(3, 3, |i, j| {
            let z = c64::new((i + 2 * j) as f64, i as f64 - j as f64);
            if i == j {
                c64::new(z.re, 0.0)
            } else {
                z
            }
        });
        let r = Mat::from_fn(3, 3, |i, j| (r[(i, j)] + r[(j, i)].conj()) * 0.5);
        let (t, s) = hermitian_eig(r.as_ref()).unwrap();
        let d = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                c64::new(s[i], 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let back = &t * &d * t.adjoint();
        assert!((&back - &r).norm_l2() < 1e-13 * r.norm_l2());
        assert!((t.adjoint() * &t - Mat::<c64>::identity(3, 3)).norm_l2() < 1e-13);
    }
}
