use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or inconsistent input data.
    #[error("invalid input: {0}")]
    Input(String),

    /// Operand shapes do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The shifted matrix `A + alpha E` is singular to working precision.
    #[error("singular shift: A + ({re}{im:+}i) E is singular to working precision")]
    SingularShift { re: f64, im: f64 },

    /// A shift outside the open left half-plane was supplied.
    #[error("shift {re}{im:+}i is not in the open left half-plane")]
    UnstableShift { re: f64, im: f64 },

    /// The tangential direction is (numerically) isotropic with respect to `R^{-1}`,
    /// so the rank-1 update scalar is undefined.
    #[error("isotropic tangential direction: |t^H R^-1 t| = {value:e} is below {threshold:e}")]
    IsotropicDirection { value: f64, threshold: f64 },

    /// No shift survived filtering and there is no earlier pool to fall back to.
    #[error("no valid shifts: {0}")]
    NoValidShifts(String),

    /// The constant term `B R B^H` vanishes; the solution is `X = 0`.
    #[error("zero constant term: the solution is X = 0")]
    ZeroConstantTerm,

    /// A dense routine (eigensolver, oracle, ...) failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// File input/output failure.
    #[error("i/o error in {path}: {message}")]
    Io { path: String, message: String },

    /// Matrix Market parse failure.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    /// Input-type errors are caused by the caller rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Input(_) | Error::Dimension(_) | Error::Io { .. } | Error::Parse { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
