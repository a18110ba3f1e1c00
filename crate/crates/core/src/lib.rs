//! Koopman operator learning from snapshot data.
//!
//! The crate fits finite-dimensional Koopman operators `K = Y_f Y_p†` by
//! (extended) dynamic mode decomposition. The pseudoinverse can be taken
//! through a full-rank Cholesky factorization of a Gram matrix, through the
//! SVD, or replaced by a column-pivoted QR least-squares solve; a benchmark
//! harness times the three against each other.
//!
//! Modules:
//! - [`linalg`]: dense matrices and the factorizations.
//! - [`dictionary`]: observables that lift states into feature space.
//! - [`koopman`]: snapshot pairs, fitting, spectra and prediction.
//! - [`oscillator`]: the damped ring network used as synthetic ground truth.
//! - [`ingest`]: CSV time-series input and output.
//! - [`bench`]: the timing harness.

pub mod bench;
pub mod dictionary;
mod error;
pub mod ingest;
pub mod koopman;
pub mod linalg;
pub mod oscillator;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;

/// Runs `f` inside a rayon pool of `threads` workers.
///
/// Linear-algebra kernels partition work identically for any pool size, so
/// results do not depend on `threads`; only wall-clock time does.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Parameter(format!("cannot build a {threads}-thread pool: {e}")))?;
    Ok(pool.install(f))
}
