pub mod dense;
pub mod operator;
pub mod scalar;
pub mod shifted;

pub use dense::{
    eigenvalues, hermitian_deviation, hermitian_eig, norm_fro, orthonormal_basis, pencil_eigenvalues, PencilEigenvalue,
    DEFAULT_DROP_TOL,
};
pub use operator::{CoefficientOperator, Storage};
pub use scalar::{Arithmetic, Scalar};
pub use shifted::{solve_shifted, ShiftedSystem, DENSE_THRESHOLD};
