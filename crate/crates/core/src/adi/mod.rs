//! Block and tangential low-rank ADI iterations.

mod block;
mod factors;
mod run;
mod step;
mod tangential;

pub use block::{block_step, block_step_complex, block_step_real, run_block_adi};
pub use factors::{LdlFactors, Shift, StepOutcome};
pub use run::{RunFailure, RunOptions, RunOutcome, RunResult};
pub use tangential::{
    run_tangential_adi, tangential_step, tangential_step_complex, tangential_step_real, CenterInverse, ISOTROPY_TOL,
};
