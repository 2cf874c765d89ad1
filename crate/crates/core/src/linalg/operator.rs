use std::collections::BTreeMap;

use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, MatRef};

use super::scalar::{Arithmetic, Scalar};
use crate::error::{Error, Result};

/// Storage behind a [`CoefficientOperator`].
#[derive(Debug, Clone)]
pub enum Storage<T: Scalar> {
    Dense(Mat<T>),
    Sparse(SparseColMat<usize, T>),
    Identity,
}

/// Square coefficient matrix (`A` or `E`) of a Lyapunov problem.
#[derive(Debug, Clone)]
pub struct CoefficientOperator<T: Scalar> {
    n: usize,
    storage: Storage<T>,
}

impl<T: Scalar> CoefficientOperator<T> {
    pub fn dense(m: Mat<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "coefficient matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self {
            n: m.nrows(),
            storage: Storage::Dense(m),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            storage: Storage::Identity,
        }
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let entries: Vec<(usize, usize, T)> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(n, &entries).expect("diagonal entries are in range")
    }

    /// Builds a sparse operator; duplicate entries are summed.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, T)]) -> Result<Self> {
        let mut acc: BTreeMap<(usize, usize), T> = BTreeMap::new();
        for &(i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!("entry ({i}, {j}) outside a {n}x{n} matrix")));
            }
            let slot = acc.entry((j, i)).or_insert_with(T::zero);
            *slot += v;
        }
        let triplets: Vec<Triplet<usize, usize, T>> =
            acc.into_iter().map(|((j, i), v)| Triplet::new(i, j, v)).collect();
        let sp = SparseColMat::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Input(format!("sparse assembly failed: {e:?}")))?;
        Ok(Self {
            n,
            storage: Storage::Sparse(sp),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn storage(&self) -> &Storage<T> {
        &self.storage
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.storage, Storage::Identity)
    }

    pub fn is_sparse(&self) -> bool {
        !matches!(self.storage, Storage::Dense(_))
    }

    /// Number of explicitly stored entries (`n` for the identity).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows() * m.ncols(),
            Storage::Sparse(s) => s.val().len(),
            Storage::Identity => self.n,
        }
    }

    /// Visits every stored entry as `(row, col, value)`.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, T)) {
        match &self.storage {
            Storage::Dense(m) => {
                for j in 0..self.n {
                    for i in 0..self.n {
                        f(i, j, m[(i, j)]);
                    }
                }
            }
            Storage::Sparse(s) => {
                let col_ptr = s.col_ptr();
                let row_idx = s.row_idx();
                let val = s.val();
                for j in 0..self.n {
                    for p in col_ptr[j]..col_ptr[j + 1] {
                        f(row_idx[p], j, val[p]);
                    }
                }
            }
            Storage::Identity => {
                for i in 0..self.n {
                    f(i, i, T::from_real(1.0));
                }
            }
        }
    }

    pub fn to_dense(&self) -> Mat<T> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            _ => {
                let mut out = Mat::<T>::zeros(self.n, self.n);
                self.for_each_entry(|i, j, v| out[(i, j)] += v);
                out
            }
        }
    }

    /// `self * x`.
    pub fn apply(&self, x: MatRef<'_, T>) -> Mat<T> {
        assert_eq!(x.nrows(), self.n, "operator applied to a block of wrong height");
        match &self.storage {
            Storage::Dense(m) => m * x,
            Storage::Identity => x.to_owned(),
            Storage::Sparse(s) => {
                let mut y = Mat::<T>::zeros(self.n, x.ncols());
                let col_ptr = s.col_ptr();
                let row_idx = s.row_idx();
                let val = s.val();
                for c in 0..x.ncols() {
                    for j in 0..self.n {
                        let xj = x[(j, c)];
                        if xj == T::zero() {
                            continue;
                        }
                        for p in col_ptr[j]..col_ptr[j + 1] {
                            y[(row_idx[p], c)] += val[p] * xj;
                        }
                    }
                }
                y
            }
        }
    }

    /// `self * x` for a complex block, splitting into real and imaginary parts when `T` is real.
    pub fn apply_complex(&self, x: MatRef<'_, c64>) -> Mat<c64> {
        match T::ARITHMETIC {
            Arithmetic::Complex => {
                let xt = super::scalar::from_complex::<T>(x).expect("complex scalar type");
                super::scalar::to_complex(self.apply(xt.as_ref()).as_ref())
            }
            Arithmetic::Real => {
                let re = Mat::from_fn(x.nrows(), x.ncols(), |i, j| T::from_real(x[(i, j)].re));
                let im = Mat::from_fn(x.nrows(), x.ncols(), |i, j| T::from_real(x[(i, j)].im));
                let yr = self.apply(re.as_ref());
                let yi = self.apply(im.as_ref());
                Mat::from_fn(x.nrows(), x.ncols(), |i, j| c64::new(yr[(i, j)].re(), yi[(i, j)].re()))
            }
        }
    }

    /// Galerkin projection `U^H (self U)`.
    pub fn project(&self, u: MatRef<'_, T>) -> Mat<T> {
        let au = self.apply(u);
        u.adjoint() * au
    }

    /// Widens the operator to complex entries, keeping its storage kind.
    pub fn to_complex(&self) -> CoefficientOperator<c64> {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(super::scalar::to_complex(m.as_ref())),
            Storage::Identity => Storage::Identity,
            Storage::Sparse(_) => {
                let mut entries = Vec::with_capacity(self.nnz());
                self.for_each_entry(|i, j, v| entries.push((i, j, v.to_c64())));
                return CoefficientOperator::<c64>::from_triplets(self.n, &entries)
                    .expect("entries copied from a valid operator");
            }
        };
        CoefficientOperator { n: self.n, storage }
    }

    /// Largest absolute imaginary part over the stored entries.
    pub fn max_imag(&self) -> f64 {
        let mut worst = 0.0_f64;
        self.for_each_entry(|_, _, v| worst = worst.max(v.im().abs()));
        worst
    }

    /// Frobenius norm of the stored entries.
    pub fn norm_fro(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each_entry(|_, _, v| acc += v.modulus() * v.modulus());
        acc.sqrt()
    }

    /// Entries of `self + alpha * other` as complex triplets.
    pub(crate) fn shifted_triplets(&self, other: &Self, alpha: c64) -> Vec<(usize, usize, c64)> {
        let mut entries = Vec::with_capacity(self.nnz() + other.nnz());
        self.for_each_entry(|i, j, v| entries.push((i, j, v.to_c64())));
        other.for_each_entry(|i, j, v| entries.push((i, j, alpha * v.to_c64())));
        entries
    }
}

impl CoefficientOperator<c64> {
    /// Narrows a complex operator to real storage if every entry is real.
    pub fn to_real(&self) -> Option<CoefficientOperator<f64>> {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(super::scalar::from_complex::<f64>(m.as_ref())?),
            Storage::Identity => Storage::Identity,
            Storage::Sparse(_) => {
                let mut entries = Vec::with_capacity(self.nnz());
                let mut ok = true;
                self.for_each_entry(|i, j, v| {
                    if v.im != 0.0 {
                        ok = false;
                    }
                    entries.push((i, j, v.re));
                });
                if !ok {
                    return None;
                }
                return CoefficientOperator::<f64>::from_triplets(self.n, &entries).ok();
            }
        };
        Some(CoefficientOperator { n: self.n, storage })
    }
}
