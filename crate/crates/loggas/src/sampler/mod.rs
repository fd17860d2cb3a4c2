//! Samplers for log-gases and the tridiagonal Gaussian reference.

pub mod batch;
pub mod metropolis;
pub mod model;
pub mod tridiagonal;

pub use batch::{Diagnostics, SampleBatch};
pub use metropolis::{integrated_autocorrelation, sample_loggas, sample_product_t1, SamplerOptions};
pub use model::{particle_counts, LogGasModel, ModelDescriptor};
pub use tridiagonal::{sample_gaussian_tridiagonal, tridiagonal_eigenvalues};
