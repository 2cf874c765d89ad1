#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Low-rank ADI solvers for Lyapunov equations `A X E^H + E X A^H + B R B^H = 0`
//! with Hermitian indefinite `R`, in block and tangential form.

pub mod adi;
pub mod directions;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod residual;
pub mod shifts;
pub mod trace;

pub use error::{Error, Result};
pub use faer::c64;
